#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "cproj/error.hpp"
#include "cproj/smoothing.hpp"
#include "test_util.hpp"

using namespace corrproj;

namespace {

Eigen::VectorXd scalar(double v) {
  return Eigen::VectorXd::Constant(1, v);
}

} // namespace

TEST(Smoother, FirstFramePassesThrough) {
  Smoother s;
  Eigen::VectorXd y(3);
  y << 0.1, -0.4, 2.0;
  EXPECT_EQ(s.step(y), y);
  EXPECT_TRUE(s.initialized());
  EXPECT_EQ(s.trend(), Eigen::VectorXd::Zero(3));
}

TEST(Smoother, UnitGainIsIdentity) {
  Smoother s({1.0, 0.0, 0.0});
  std::mt19937_64 gen(2);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd y(4);
    for (Eigen::Index j = 0; j < 4; ++j) {
      y(j) = g(gen);
    }
    EXPECT_EQ(s.step(y), y);
  }
}

TEST(Smoother, StepSequence) {
  Smoother s({0.5, 0.5, 0.0});
  EXPECT_DOUBLE_EQ(s.step(scalar(0.0))(0), 0.0);
  EXPECT_DOUBLE_EQ(s.step(scalar(1.0))(0), 0.5);
  EXPECT_DOUBLE_EQ(s.step(scalar(1.0))(0), 0.875);
}

TEST(Smoother, MatchesScalarRecurrence) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 0.3);
  for (int stream = 0; stream < 50; ++stream) {
    const SmootherParams p{u(gen), u(gen), stream % 2 == 0 ? 0.0 : 0.05 * u(gen)};
    Smoother s(p);
    oracle::ScalarSmoother ref{p.alpha, p.gamma, p.eta};
    double y = 0.0;
    for (int i = 0; i < 300; ++i) {
      y += g(gen);
      EXPECT_NEAR(s.step(scalar(y))(0), ref.step(y), 1e-12) << "stream " << stream << " frame " << i;
    }
  }
}

TEST(Smoother, DeadbandHoldsJitter) {
  const SmootherParams p{0.75, 0.3, 0.15};
  Smoother s(p);
  Eigen::VectorXd base(10);
  base.setLinSpaced(-0.5, 0.5);
  s.step(base);
  std::mt19937_64 gen(4);
  const double amp = p.eta / (2.0 * p.alpha) / std::sqrt(10.0);
  std::uniform_real_distribution<double> u(-amp, amp);
  for (int i = 0; i < 500; ++i) {
    Eigen::VectorXd y = base;
    for (Eigen::Index j = 0; j < y.size(); ++j) {
      y(j) += u(gen);
    }
    EXPECT_EQ(s.step(y), base);
    EXPECT_TRUE(s.frozen());
  }
}

TEST(Smoother, ConvergesToConstantInput) {
  Smoother s({0.6, 0.4, 0.0});
  s.step(scalar(0.0));
  double out = 0.0;
  for (int i = 0; i < 400; ++i) {
    out = s.step(scalar(1.0))(0);
  }
  EXPECT_NEAR(out, 1.0, 1e-9);
}

TEST(Smoother, NaNLeavesStateUnchanged) {
  Smoother s({0.5, 0.5, 0.0});
  s.step(scalar(0.0));
  s.step(scalar(1.0));
  const Eigen::VectorXd level = s.level();
  const Eigen::VectorXd trend = s.trend();
  try {
    s.step(scalar(std::numeric_limits<double>::quiet_NaN()));
    FAIL() << "expected numeric-failure";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NumericFailure);
  }
  EXPECT_EQ(s.level(), level);
  EXPECT_EQ(s.trend(), trend);
  EXPECT_DOUBLE_EQ(s.step(scalar(1.0))(0), 0.875);
}

TEST(Smoother, DimensionChangeAndReset) {
  Smoother s;
  s.step(Eigen::VectorXd::Zero(3));
  try {
    s.step(Eigen::VectorXd::Zero(4));
    FAIL() << "expected invalid-argument";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidArgument);
  }
  s.reset();
  EXPECT_FALSE(s.initialized());
  const Eigen::VectorXd y = Eigen::VectorXd::Ones(4);
  EXPECT_EQ(s.step(y), y);
}

TEST(Smoother, InvalidParams) {
  EXPECT_THROW(Smoother({1.5, 0.3, 0.1}), Error);
  EXPECT_THROW(Smoother({0.5, -0.1, 0.1}), Error);
  EXPECT_THROW(Smoother({0.5, 0.3, -1.0}), Error);
  EXPECT_NO_THROW(Smoother({0.5, 0.3, std::numeric_limits<double>::infinity()}));
}
