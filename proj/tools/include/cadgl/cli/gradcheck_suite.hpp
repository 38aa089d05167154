#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cadgl/gradcheck.hpp"

namespace cadgl::cli {

// A named finite-difference check. Scopes: "ndtensor", "encoder", "vgae",
// "loss".
struct GradCheckCase {
  std::string name;
  std::string scope;
  std::function<GradCheckReport(const GradCheckOptions&)> run;
};

const std::vector<GradCheckCase>& gradcheck_cases();

struct GradCheckRow {
  std::string name;
  std::string scope;
  GradCheckReport report;
};

// "all" or one scope name; anything else throws ConfigError.
std::vector<GradCheckRow> run_gradchecks(const std::string& scope, const GradCheckOptions& options);

}  // namespace cadgl::cli
