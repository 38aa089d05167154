#include "cadgl/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>
#include <fmt/format.h>

#include "cadgl/error.hpp"

namespace cadgl {
namespace {

using detail::Node;
using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMajor>;
using ConstMatMap = Eigen::Map<const RowMajor>;

MatMap as_matrix(Tensor& t) {
  return MatMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}
ConstMatMap as_matrix(const Tensor& t) {
  return ConstMatMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                     static_cast<Eigen::Index>(t.cols()));
}

Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }

// Applies f(value_i, out_i) elementwise and records grad_in += grad_out * df.
template <typename F, typename DF>
Var unary(const Var& a, F f, DF df) {
  Tensor out(a.shape());
  const auto in = a.value().data();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  return make_op(std::move(out), {a}, [df](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    Tensor& g = p.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += self.grad[i] * df(p.value[i], self.value[i]);
    }
  });
}

void check_index(std::size_t idx, std::size_t bound, const char* op) {
  if (idx >= bound) {
    throw IndexError(fmt::format("{}: index {} out of range for {} rows", op, idx, bound));
  }
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError(
        fmt::format("matmul: inner dimensions differ {} x {}", a.shape().str(), b.shape().str()));
  }
  Tensor out(a.rows(), b.cols());
  as_matrix(out).noalias() = as_matrix(a.value()) * as_matrix(b.value());
  return make_op(std::move(out), {a, b}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    const auto g = as_matrix(std::as_const(self.grad));
    if (pa.requires_grad) {
      as_matrix(pa.ensure_grad()).noalias() += g * as_matrix(std::as_const(pb.value)).transpose();
    }
    if (pb.requires_grad) {
      as_matrix(pb.ensure_grad()).noalias() += as_matrix(std::as_const(pa.value)).transpose() * g;
    }
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  return make_op(std::move(out), {a, b}, [](Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      Node& p = parent(self, k);
      if (!p.requires_grad) continue;
      Tensor& g = p.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a.shape(), b.shape(), "sub");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  return make_op(std::move(out), {a, b}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pa.requires_grad) {
      Tensor& g = pa.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (pb.requires_grad) {
      Tensor& g = pb.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a.shape(), b.shape(), "mul");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return make_op(std::move(out), {a, b}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pa.requires_grad) {
      Tensor& g = pa.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      Tensor& g = pb.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.value[i];
    }
  });
}

Var scale(const Var& a, double c) {
  return unary(a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var add_scalar(const Var& a, double c) {
  return unary(a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var sigmoid(const Var& a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var exp(const Var& a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(const Var& a) {
  const auto in = a.value().data();
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (!(in[i] > 0.0)) {
      throw DomainError(fmt::format("log: non-positive value {} at flat index {}", in[i], i));
    }
  }
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var leaky_relu(const Var& a, double slope) {
  return unary(
      a, [slope](double x) { return x > 0 ? x : slope * x; },
      [slope](double x, double) { return x > 0 ? 1.0 : slope; });
}

Var relu(const Var& a) {
  return unary(a, [](double x) { return x > 0 ? x : 0.0; },
               [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var pow(const Var& a, double p) {
  const auto in = a.value().data();
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (!(in[i] > 0.0)) {
      throw DomainError(fmt::format("pow: non-positive base {} at flat index {}", in[i], i));
    }
  }
  return unary(
      a, [p](double x) { return std::pow(x, p); },
      [p](double x, double y) { return p * y / x; });
}

Var clamp(const Var& a, double lo, double hi) {
  return unary(
      a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Var concat_cols(const Var& a, const Var& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError(fmt::format("concat_cols: row counts differ {} vs {}", a.shape().str(),
                                     b.shape().str()));
  }
  const std::size_t p = a.cols();
  const std::size_t q = b.cols();
  Tensor out(a.rows(), p + q);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    std::copy_n(a.value().row(r).begin(), p, out.row(r).begin());
    std::copy_n(b.value().row(r).begin(), q, out.row(r).begin() + p);
  }
  return make_op(std::move(out), {a, b}, [p, q](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    for (std::size_t r = 0; r < self.value.rows(); ++r) {
      const auto g = std::as_const(self.grad).row(r);
      if (pa.requires_grad) {
        auto dst = pa.ensure_grad().row(r);
        for (std::size_t c = 0; c < p; ++c) dst[c] += g[c];
      }
      if (pb.requires_grad) {
        auto dst = pb.ensure_grad().row(r);
        for (std::size_t c = 0; c < q; ++c) dst[c] += g[p + c];
      }
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_rows: no inputs");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const auto& v : parts) {
    if (v.cols() != cols) {
      throw DimensionError(fmt::format("concat_rows: column counts differ {} vs {}",
                                       parts.front().shape().str(), v.shape().str()));
    }
    rows += v.rows();
  }
  Tensor out(rows, cols);
  std::size_t offset = 0;
  for (const auto& v : parts) {
    std::copy(v.value().data().begin(), v.value().data().end(), out.data().begin() + offset);
    offset += v.value().size();
  }
  return make_op(std::move(out), parts, [](Node& self) {
    std::size_t offset = 0;
    for (auto& pp : self.parents) {
      const std::size_t n = pp->value.size();
      if (pp->requires_grad) {
        Tensor& g = pp->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[offset + i];
      }
      offset += n;
    }
  });
}

Var gather_rows(const Var& a, std::span<const std::size_t> rows) {
  const std::size_t d = a.cols();
  Tensor out(rows.size(), d);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    check_index(rows[r], a.rows(), "gather_rows");
    std::copy_n(a.value().row(rows[r]).begin(), d, out.row(r).begin());
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return make_op(std::move(out), {a}, [idx = std::move(idx), d](Node& self) {
    Node& p = parent(self, 0);
    Tensor& g = p.ensure_grad();
    for (std::size_t r = 0; r < idx.size(); ++r) {
      auto dst = g.row(idx[r]);
      const auto src = std::as_const(self.grad).row(r);
      for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
    }
  });
}

Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return make_op(Tensor::scalar(s), {a}, [](Node& self) {
    Node& p = parent(self, 0);
    Tensor& g = p.ensure_grad();
    const double go = self.grad[0];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += go;
  });
}

Var mean(const Var& a) {
  if (a.value().empty()) throw ContractError("mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var row_sum(const Var& a) {
  const std::size_t d = a.cols();
  Tensor out(a.rows(), 1);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double s = 0.0;
    for (double v : a.value().row(r)) s += v;
    out[r] = s;
  }
  return make_op(std::move(out), {a}, [d](Node& self) {
    Node& p = parent(self, 0);
    Tensor& g = p.ensure_grad();
    for (std::size_t r = 0; r < self.value.rows(); ++r) {
      auto dst = g.row(r);
      for (std::size_t c = 0; c < d; ++c) dst[c] += self.grad[r];
    }
  });
}

Var col_mean(const Var& a) {
  const std::size_t n = a.rows();
  const std::size_t d = a.cols();
  if (n == 0) throw ContractError("col_mean over zero rows");
  Tensor out(1, d);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = a.value().row(r);
    for (std::size_t c = 0; c < d; ++c) out[c] += row[c];
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t c = 0; c < d; ++c) out[c] *= inv;
  return make_op(std::move(out), {a}, [n, d, inv](Node& self) {
    Node& p = parent(self, 0);
    Tensor& g = p.ensure_grad();
    for (std::size_t r = 0; r < n; ++r) {
      auto dst = g.row(r);
      for (std::size_t c = 0; c < d; ++c) dst[c] += self.grad[c] * inv;
    }
  });
}

Var broadcast_rows(const Var& row, std::size_t n) {
  if (row.rows() != 1) {
    throw DimensionError("broadcast_rows expects a single row, got " + row.shape().str());
  }
  const std::size_t d = row.cols();
  Tensor out(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    std::copy_n(row.value().data().begin(), d, out.row(r).begin());
  }
  return make_op(std::move(out), {row}, [n, d](Node& self) {
    Node& p = parent(self, 0);
    Tensor& g = p.ensure_grad();
    for (std::size_t r = 0; r < n; ++r) {
      const auto src = std::as_const(self.grad).row(r);
      for (std::size_t c = 0; c < d; ++c) g[c] += src[c];
    }
  });
}

Var scale_rows(const Var& a, const Var& weights) {
  if (weights.cols() != 1 || weights.rows() != a.rows()) {
    throw DimensionError(fmt::format("scale_rows: weights {} do not match rows of {}",
                                     weights.shape().str(), a.shape().str()));
  }
  const std::size_t d = a.cols();
  Tensor out(a.shape());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double w = weights.value()[r];
    const auto src = a.value().row(r);
    auto dst = out.row(r);
    for (std::size_t c = 0; c < d; ++c) dst[c] = src[c] * w;
  }
  return make_op(std::move(out), {a, weights}, [d](Node& self) {
    Node& pa = parent(self, 0);
    Node& pw = parent(self, 1);
    for (std::size_t r = 0; r < self.value.rows(); ++r) {
      const auto g = std::as_const(self.grad).row(r);
      if (pa.requires_grad) {
        auto dst = pa.ensure_grad().row(r);
        const double w = pw.value[r];
        for (std::size_t c = 0; c < d; ++c) dst[c] += g[c] * w;
      }
      if (pw.requires_grad) {
        const auto x = std::as_const(pa.value).row(r);
        double acc = 0.0;
        for (std::size_t c = 0; c < d; ++c) acc += g[c] * x[c];
        pw.ensure_grad()[r] += acc;
      }
    }
  });
}

Var row_l2_normalize(const Var& a) {
  const std::size_t d = a.cols();
  Tensor out(a.shape());
  std::vector<double> norms(a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto x = a.value().row(r);
    double ss = 0.0;
    for (double v : x) ss += v * v;
    norms[r] = std::sqrt(ss);
    if (norms[r] > 0.0) {
      auto y = out.row(r);
      for (std::size_t c = 0; c < d; ++c) y[c] = x[c] / norms[r];
    }
  }
  return make_op(std::move(out), {a}, [d, norms = std::move(norms)](Node& self) {
    Node& p = parent(self, 0);
    Tensor& g = p.ensure_grad();
    for (std::size_t r = 0; r < self.value.rows(); ++r) {
      if (norms[r] == 0.0) continue;
      const auto y = std::as_const(self.value).row(r);
      const auto go = std::as_const(self.grad).row(r);
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c) dot += y[c] * go[c];
      auto dst = g.row(r);
      for (std::size_t c = 0; c < d; ++c) dst[c] += (go[c] - y[c] * dot) / norms[r];
    }
  });
}

namespace {

Var segment_reduce(const Var& x, const Segments& segments, bool average, const char* op) {
  const std::size_t d = x.cols();
  const std::size_t t = segments.count();
  Tensor out(t, d);
  std::vector<double> weights(t, 0.0);
  for (std::size_t s = 0; s < t; ++s) {
    const auto members = segments[s];
    if (members.empty()) continue;
    weights[s] = average ? 1.0 / static_cast<double>(members.size()) : 1.0;
    auto dst = out.row(s);
    for (std::size_t m : members) {
      check_index(m, x.rows(), op);
      const auto src = x.value().row(m);
      for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
    }
    if (average) {
      for (std::size_t c = 0; c < d; ++c) dst[c] *= weights[s];
    }
  }
  return make_op(std::move(out), {x}, [segments, weights = std::move(weights), d](Node& self) {
    Node& p = parent(self, 0);
    Tensor& g = p.ensure_grad();
    for (std::size_t s = 0; s < segments.count(); ++s) {
      const auto go = std::as_const(self.grad).row(s);
      for (std::size_t m : segments[s]) {
        auto dst = g.row(m);
        for (std::size_t c = 0; c < d; ++c) dst[c] += go[c] * weights[s];
      }
    }
  });
}

}  // namespace

Var segment_sum(const Var& x, const Segments& segments) {
  return segment_reduce(x, segments, false, "segment_sum");
}

Var segment_mean(const Var& x, const Segments& segments) {
  return segment_reduce(x, segments, true, "segment_mean");
}

Var segment_softmax(const Var& scores, const Segments& segments) {
  if (scores.cols() != 1) {
    throw DimensionError("segment_softmax expects a score column, got " + scores.shape().str());
  }
  const std::size_t e = scores.rows();
  if (segments.total() != e) {
    throw ContractError(fmt::format("segment_softmax: segments cover {} rows, scores have {}",
                                    segments.total(), e));
  }
  std::vector<bool> covered(e, false);
  for (std::size_t m : segments.members()) {
    check_index(m, e, "segment_softmax");
    if (covered[m]) throw ContractError(fmt::format("segment_softmax: row {} in two segments", m));
    covered[m] = true;
  }

  Tensor out(e, 1);
  const Tensor& z = scores.value();
  for (std::size_t s = 0; s < segments.count(); ++s) {
    const auto members = segments[s];
    if (members.empty()) continue;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t m : members) mx = std::max(mx, z[m]);
    double denom = 0.0;
    for (std::size_t m : members) {
      out[m] = std::exp(z[m] - mx);
      denom += out[m];
    }
    for (std::size_t m : members) out[m] /= denom;
  }
  return make_op(std::move(out), {scores}, [segments](Node& self) {
    Node& p = parent(self, 0);
    Tensor& g = p.ensure_grad();
    // d softmax: y_m * (g_m - sum_k y_k g_k) within the segment.
    for (std::size_t s = 0; s < segments.count(); ++s) {
      double dot = 0.0;
      for (std::size_t m : segments[s]) dot += self.value[m] * self.grad[m];
      for (std::size_t m : segments[s]) g[m] += self.value[m] * (self.grad[m] - dot);
    }
  });
}

Var bce_with_logits(const Var& logits, std::span<const double> labels) {
  if (logits.cols() != 1 || logits.rows() != labels.size()) {
    throw DimensionError(fmt::format("bce_with_logits: logits {} vs {} labels",
                                     logits.shape().str(), labels.size()));
  }
  const std::size_t n = labels.size();
  if (n == 0) throw ContractError("bce_with_logits: empty batch");
  const Tensor& z = logits.value();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = labels[i];
    if (y != 0.0 && y != 1.0) throw ContractError(fmt::format("label {} is not 0 or 1", y));
    total += std::max(z[i], 0.0) - z[i] * y + std::log1p(std::exp(-std::abs(z[i])));
  }
  std::vector<double> y(labels.begin(), labels.end());
  return make_op(Tensor::scalar(total / static_cast<double>(n)), {logits},
                 [y = std::move(y)](Node& self) {
                   Node& p = parent(self, 0);
                   Tensor& g = p.ensure_grad();
                   const double scale = self.grad[0] / static_cast<double>(y.size());
                   for (std::size_t i = 0; i < y.size(); ++i) {
                     const double zi = p.value[i];
                     const double s = zi >= 0 ? 1.0 / (1.0 + std::exp(-zi))
                                              : std::exp(zi) / (1.0 + std::exp(zi));
                     g[i] += scale * (s - y[i]);
                   }
                 });
}

}  // namespace cadgl
