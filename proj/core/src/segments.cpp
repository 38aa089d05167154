#include "cadgl/segments.hpp"

#include <numeric>

#include "cadgl/error.hpp"

namespace cadgl {

Segments Segments::from_lists(const std::vector<std::vector<std::size_t>>& lists) {
  Segments s;
  s.offsets_.reserve(lists.size() + 1);
  for (const auto& l : lists) {
    s.members_.insert(s.members_.end(), l.begin(), l.end());
    s.offsets_.push_back(s.members_.size());
  }
  return s;
}

Segments Segments::contiguous(std::vector<std::size_t> boundaries) {
  if (boundaries.empty() || boundaries.front() != 0) {
    throw ContractError("segment boundaries must start at 0");
  }
  for (std::size_t i = 1; i < boundaries.size(); ++i) {
    if (boundaries[i] < boundaries[i - 1]) throw ContractError("segment boundaries must not decrease");
  }
  Segments s;
  s.members_.resize(boundaries.back());
  std::iota(s.members_.begin(), s.members_.end(), std::size_t{0});
  s.offsets_ = std::move(boundaries);
  return s;
}

}  // namespace cadgl
