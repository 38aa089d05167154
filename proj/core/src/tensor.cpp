#include "cadgl/tensor.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "cadgl/error.hpp"

namespace cadgl {

std::string Shape::str() const { return fmt::format("[{}x{}]", rows, cols); }

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : shape_{rows, cols}, data_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : shape_{rows, cols}, data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw DimensionError(fmt::format("tensor data has {} values but shape {} needs {}",
                                     data_.size(), shape_.str(), rows * cols));
  }
}

Tensor Tensor::from_external(std::size_t rows, std::size_t cols, std::vector<double> data) {
  Tensor t(rows, cols, std::move(data));
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t.data_[i])) {
      throw DomainError(fmt::format("non-finite value at ({}, {})", i / cols, i % cols));
    }
  }
  return t;
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged rows in Tensor::from_rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor::from_external(r, c, std::move(data));
}

Tensor Tensor::column(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor(n, 1, std::move(values));
}

double Tensor::item() const {
  if (size() != 1) throw DimensionError("item() on non-scalar tensor " + shape_.str());
  return data_[0];
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  if (a != b) {
    throw DimensionError(fmt::format("{}: shape mismatch {} vs {}", op, a.str(), b.str()));
  }
}

}  // namespace cadgl
