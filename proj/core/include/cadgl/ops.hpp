#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cadgl/autodiff.hpp"
#include "cadgl/segments.hpp"

// Differentiable operations over Var. Binary elementwise ops require equal
// shapes; the only implicit broadcast is a scalar factor in scale().
namespace cadgl {

inline constexpr double kDefaultLeakySlope = 0.2;

Var matmul(const Var& a, const Var& b);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var add_scalar(const Var& a, double c);

Var sigmoid(const Var& a);
Var exp(const Var& a);
// Throws DomainError if any entry is <= 0.
Var log(const Var& a);
Var leaky_relu(const Var& a, double slope = kDefaultLeakySlope);
Var relu(const Var& a);
// a^p elementwise; entries must be positive.
Var pow(const Var& a, double p);
// Gradient passes only where lo < a < hi.
Var clamp(const Var& a, double lo, double hi);

Var concat_cols(const Var& a, const Var& b);
Var concat_rows(const std::vector<Var>& parts);
Var gather_rows(const Var& a, std::span<const std::size_t> rows);

Var sum(const Var& a);
Var mean(const Var& a);
Var row_sum(const Var& a);   // [n x d] -> [n x 1]
Var col_mean(const Var& a);  // [n x d] -> [1 x d]
Var broadcast_rows(const Var& row, std::size_t n);  // [1 x d] -> [n x d]
Var scale_rows(const Var& a, const Var& weights);   // [n x d] * [n x 1]

// Each row divided by its L2 norm; all-zero rows stay zero.
Var row_l2_normalize(const Var& a);

// Row s of the output is the sum / mean of x over segment s. Empty segments
// produce zero rows.
Var segment_sum(const Var& x, const Segments& segments);
Var segment_mean(const Var& x, const Segments& segments);

// Softmax of a [E x 1] score column within each segment. Every row must
// belong to exactly one segment.
Var segment_softmax(const Var& scores, const Segments& segments);

// Mean binary cross-entropy of sigmoid(logits) against 0/1 labels, in the
// overflow-free form max(z,0) - z*y + log(1 + exp(-|z|)).
Var bce_with_logits(const Var& logits, std::span<const double> labels);

}  // namespace cadgl
