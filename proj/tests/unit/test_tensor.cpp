#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "cadgl/error.hpp"
#include "cadgl/tensor.hpp"

using namespace cadgl;

TEST(Tensor, SizeMatchesShape) {
  const Tensor t(3, 4, 1.5);
  EXPECT_EQ(t.size(), 12u);
  EXPECT_EQ(t.shape().size(), t.size());
  for (double v : t.data()) EXPECT_EQ(v, 1.5);
}

TEST(Tensor, RejectsDataOfWrongLength) {
  EXPECT_THROW(Tensor(2, 2, std::vector<double>{1, 2, 3}), DimensionError);
}

TEST(Tensor, ExternalInputMustBeFinite) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_THROW(Tensor::from_external(1, 2, {1.0, nan}), DomainError);
  EXPECT_THROW(Tensor::from_external(1, 2, {inf, 0.0}), DomainError);
  EXPECT_NO_THROW(Tensor::from_external(1, 2, {1.0, -2.0}));
}

TEST(Tensor, RowMajorLayout) {
  const Tensor t = Tensor::from_rows({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(t(1, 0), 4.0);
  EXPECT_EQ(t[2], 3.0);
  EXPECT_EQ(t.row(1)[2], 6.0);
}

TEST(Tensor, ItemOnlyForScalars) {
  EXPECT_EQ(Tensor::scalar(2.5).item(), 2.5);
  EXPECT_THROW(Tensor(2, 1).item(), Error);
}

TEST(Tensor, RequireSameShapeNamesBoth) {
  try {
    require_same_shape({2, 3}, {3, 2}, "op");
    FAIL();
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2x3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("3x2"), std::string::npos) << msg;
  }
}
