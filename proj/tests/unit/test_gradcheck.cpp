#include <algorithm>

#include <gtest/gtest.h>

#include "cadgl/cli/gradcheck_suite.hpp"
#include "cadgl/error.hpp"
#include "cadgl/gradcheck.hpp"
#include "cadgl/ops.hpp"

using namespace cadgl;

TEST(FiniteDiffCheck, SquaredNormClosedForm) {
  Var theta(Tensor::from_rows({{1, 2}}), true);
  const auto report = finite_diff_check([&] { return sum(mul(theta, theta)); }, {theta});
  EXPECT_TRUE(report.pass);
  EXPECT_LT(report.max_rel_err, 1e-8);
  EXPECT_EQ(theta.grad(), Tensor::from_rows({{2, 4}}));
}

TEST(FiniteDiffCheck, ConstantFunctionPasses) {
  Var theta(Tensor::from_rows({{1, 2, 3}}), true);
  const auto report =
      finite_diff_check([&] { return add(scale(sum(theta), 0.0), Var(Tensor::scalar(3))); },
                        {theta});
  EXPECT_TRUE(report.pass);
  EXPECT_EQ(report.max_rel_err, 0.0);
}

TEST(FiniteDiffCheck, NonDeterministicFunctionIsContractError) {
  Var theta(Tensor::from_rows({{1.0}}), true);
  int calls = 0;
  EXPECT_THROW(finite_diff_check(
                   [&] { return add_scalar(sum(theta), static_cast<double>(++calls)); }, {theta}),
               ContractError);
}

TEST(FiniteDiffCheck, DetectsWrongGradient) {
  Var theta(Tensor::from_rows({{0.3, -0.7}}), true);
  // A node whose backward rule deliberately drops half the gradient.
  const auto broken = [&] {
    return make_op(Tensor::scalar(theta.value()[0] + theta.value()[1]), {theta},
                   [t = theta](detail::Node& self) mutable {
                     Tensor& g = t.node().ensure_grad();
                     g[0] += 0.5 * self.grad[0];
                     g[1] += self.grad[0];
                   });
  };
  const auto report = finite_diff_check(broken, {theta});
  EXPECT_FALSE(report.pass);
  EXPECT_NEAR(report.max_rel_err, 0.5, 1e-6);
}

TEST(FiniteDiffCheck, SamplesAtLeastTheConfiguredCoordinates) {
  Var big(Tensor(20, 10, 0.1), true);
  GradCheckOptions opt;
  opt.max_coords_per_tensor = 64;
  const auto report = finite_diff_check([&] { return sum(mul(big, big)); }, {big}, opt);
  EXPECT_EQ(report.coords_checked, 64u);
}

TEST(GradCheckSuite, EveryRegisteredCheckPassesAtDefaultTolerance) {
  const auto rows = cli::run_gradchecks("all", {});
  EXPECT_EQ(rows.size(), cli::gradcheck_cases().size());
  for (const auto& r : rows) {
    EXPECT_TRUE(r.report.pass) << r.name << " " << r.report.max_rel_err << " "
                               << r.report.worst_coordinate;
  }
}

TEST(GradCheckSuite, ScopesPartitionTheChecks) {
  std::size_t total = 0;
  for (const char* scope : {"ndtensor", "encoder", "vgae", "loss"}) {
    const auto& cases = cli::gradcheck_cases();
    total += static_cast<std::size_t>(std::count_if(
        cases.begin(), cases.end(), [&](const auto& c) { return c.scope == scope; }));
  }
  EXPECT_EQ(total, cli::gradcheck_cases().size());
  EXPECT_THROW(cli::run_gradchecks("bogus", {}), ConfigError);
}

TEST(GradCheckSuite, TinyToleranceReportsFailures) {
  GradCheckOptions opt;
  opt.tolerance = 1e-12;
  const auto rows = cli::run_gradchecks("ndtensor", opt);
  EXPECT_TRUE(std::any_of(rows.begin(), rows.end(), [](const auto& r) { return !r.report.pass; }));
}
