#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "cadgl/dataset.hpp"
#include "cadgl/random.hpp"

namespace cadgl::testing {

// 10 drugs, one interaction type, 8 Gaussian features and 20 distinct random
// directed edges, all of them in the training split.
inline DDIDataset overfit_dataset() {
  constexpr std::size_t n = 10, f = 8;
  Rng rng(11);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("d" + std::to_string(i));
  Tensor X(n, f);
  for (auto& v : X.data()) v = standard_normal(rng);
  std::vector<Edge> edges;
  while (edges.size() < 20) {
    const std::size_t a = uniform_index(rng, n), b = uniform_index(rng, n);
    if (a == b) continue;
    const Edge e{a, b, 0};
    if (std::find(edges.begin(), edges.end(), e) == edges.end()) edges.push_back(e);
  }
  return DDIDataset(ids, {"t0"}, X, edges);
}

inline Split all_train(const DDIDataset& ds) {
  Split s;
  s.train.resize(ds.edges().size());
  std::iota(s.train.begin(), s.train.end(), std::size_t{0});
  return s;
}

}  // namespace cadgl::testing
