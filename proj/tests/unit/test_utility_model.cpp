#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "helpers.hpp"

using namespace hgame;
using test::uniform_motion;

namespace {

// Expected erf sigmoid with its location theta ~ N(d_star, sigma^2), integrated numerically.
double quadrature_oracle(double gap, double d_star, double sigma) {
  const auto f = [&](double theta) {
    const double z = (theta - d_star) / sigma;
    return std::erf((gap - theta) / (sigma * std::sqrt(2.0))) * std::exp(-0.5 * z * z) /
           (sigma * std::sqrt(2.0 * M_PI));
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, d_star - 14.0 * sigma,
                                                                        d_star + 14.0 * sigma, 20, 1e-13);
}

}  // namespace

TEST(VehicleInhibitory, Examples) {
  EXPECT_EQ(vehicle_inhibitory_utility(5.0, 5.0, 1.5), 0.0);
  EXPECT_NEAR(vehicle_inhibitory_utility(5.0 + 3.0, 5.0, 1.5), 0.8427007929497149, 1e-9);
}

TEST(VehicleInhibitory, ClosedFormMatchesQuadrature) {
  Rng rng(2024);
  std::uniform_real_distribution<double> gap(0.0, 30.0), d_star(1.0, 10.0), sigma(0.2, 5.0);
  for (int k = 0; k < 100; ++k) {
    const double g = gap(rng), d = d_star(rng), s = sigma(rng);
    EXPECT_NEAR(vehicle_inhibitory_utility(g, d, s), quadrature_oracle(g, d, s), 1e-6)
        << "gap " << g << " d* " << d << " sigma " << s;
  }
}

TEST(VehicleInhibitory, OddAndIncreasing) {
  Rng rng(8);
  std::uniform_real_distribution<double> x(0.0, 10.0), d_star(1.0, 10.0), sigma(0.2, 5.0);
  for (int k = 0; k < 200; ++k) {
    const double dx = x(rng), d = d_star(rng), s = sigma(rng);
    EXPECT_NEAR(vehicle_inhibitory_utility(d + dx, d, s), -vehicle_inhibitory_utility(d - dx, d, s), 1e-12);
  }
  double prev = -1.0;
  for (double g = 0.0; g <= 12.0; g += 0.05) {
    const double u = vehicle_inhibitory_utility(g, 5.0, 1.5);
    EXPECT_GT(u, prev);
    prev = u;
  }
}

TEST(Excitatory, Examples) {
  const UtilityParams p = UtilityParams::defaults();
  EXPECT_DOUBLE_EQ(excitatory_utility(50.0, p), 0.5);
  EXPECT_DOUBLE_EQ(excitatory_utility(150.0, p), 1.0);
  EXPECT_DOUBLE_EQ(excitatory_utility(0.0, p), 0.0);
  EXPECT_NEAR(excitatory_utility(uniform_motion({0, 0}, {10, 0}), p), 0.5, 1e-12);
}

TEST(Excitatory, LipschitzInNormalisedLength) {
  const UtilityParams p = UtilityParams::defaults();
  Rng rng(4);
  std::uniform_real_distribution<double> len(0.0, 200.0);
  for (int k = 0; k < 500; ++k) {
    const double a = len(rng), b = len(rng);
    EXPECT_LE(std::abs(excitatory_utility(a, p) - excitatory_utility(b, p)),
              std::abs(a - b) / p.goal_distance + 1e-15);
  }
}

TEST(PedestrianInhibitory, Examples) {
  const UtilityParams p = UtilityParams::defaults();
  const Trajectory go = uniform_motion({0, 0}, {10, 0});
  const Trajectory wait = uniform_motion({0, 0}, {0, 0});
  EXPECT_EQ(pedestrian_inhibitory_utility(go, {}, p), 1.0);

  PedestrianState crossing;
  crossing.position = {40.0, 0.0};
  crossing.on_conflicting_crosswalk = true;
  EXPECT_EQ(pedestrian_inhibitory_utility(go, std::vector{crossing}, p), -1.0);

  PedestrianState priority;
  priority.position = {20.0, 5.0};
  priority.has_right_of_way = true;
  EXPECT_EQ(pedestrian_inhibitory_utility(wait, std::vector{priority}, p), 1.0);
  EXPECT_EQ(pedestrian_inhibitory_utility(go, std::vector{priority}, p), -1.0);

  priority.position = {20.0, 40.0};
  EXPECT_EQ(pedestrian_inhibitory_utility(go, std::vector{priority}, p), 1.0);
}

TEST(Combine, Examples) {
  const UtilityParams p = UtilityParams::defaults();
  EXPECT_DOUBLE_EQ(combine_utilities(p, 0.0, 1.0, 0.5), 0.625);
  EXPECT_DOUBLE_EQ(combine_utilities(p, 1.0, 1.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(combine_utilities(p, -1.0, -1.0, 0.0), -0.75);
}

TEST(Combine, MonotoneInEachComponent) {
  const UtilityParams p = UtilityParams::defaults();
  Rng rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0), e(0.0, 1.0), step(0.0, 0.5);
  for (int k = 0; k < 300; ++k) {
    const double a = u(rng), b = u(rng), c = e(rng), d = step(rng);
    const double base = combine_utilities(p, a, b, c);
    EXPECT_GE(combine_utilities(p, a + d, b, c), base);
    EXPECT_GE(combine_utilities(p, a, b + d, c), base);
    EXPECT_GE(combine_utilities(p, a, b, c + d), base);
  }
}

TEST(CombinedUtility, UsesTheTightestOpponent) {
  const UtilityParams p = UtilityParams::defaults();
  const Trajectory ego = uniform_motion({0, 0}, {10, 0});
  const Trajectory far = uniform_motion({0, 20}, {10, 0});
  const Trajectory near = uniform_motion({0, 6}, {10, 0});
  const std::vector<Trajectory> one{far};
  const std::vector<Trajectory> two{far, near};
  const double u1 = combined_utility(ego, one, {}, p, 5.0);
  const double u2 = combined_utility(ego, two, {}, p, 5.0);
  EXPECT_LT(u2, u1);
  const double expected = combine_utilities(p, vehicle_inhibitory_utility(6.0, 5.0, p.sigma), 1.0, 0.5);
  EXPECT_NEAR(u2, expected, 1e-12);
  // No opponents: the vehicle term saturates.
  EXPECT_NEAR(combined_utility(ego, {}, {}, p, 5.0), combine_utilities(p, 1.0, 1.0, 0.5), 1e-12);
}

TEST(CombinedUtility, AddingOpponentsNeverRaisesTheVehicleTerm) {
  const UtilityParams p = UtilityParams::defaults();
  Rng rng(12);
  std::uniform_real_distribution<double> u(-15.0, 15.0);
  const Trajectory ego = uniform_motion({0, 0}, {8, 0});
  std::vector<Trajectory> others;
  double prev = combined_utility(ego, others, {}, p, 5.0);
  for (int k = 0; k < 20; ++k) {
    others.push_back(uniform_motion({u(rng), u(rng)}, {u(rng) / 2, u(rng) / 2}));
    const double now = combined_utility(ego, others, {}, p, 5.0);
    EXPECT_LE(now, prev);
    prev = now;
  }
}

TEST(CombinedUtility, RangeAndErrors) {
  const UtilityParams p = UtilityParams::defaults();
  const Trajectory ego = uniform_motion({0, 0}, {10, 0});
  Trajectory short_one = uniform_motion({0, 3}, {10, 0});
  short_one.points.pop_back();
  const std::vector<Trajectory> bad{short_one};
  try {
    combined_utility(ego, bad, {}, p, 5.0);
    FAIL() << "mismatched grid accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMismatchedHorizon);
  }
  Rng rng(1);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int k = 0; k < 200; ++k) {
    const std::vector<Trajectory> o{uniform_motion({u(rng), u(rng)}, {u(rng) / 2, u(rng) / 2})};
    PedestrianState ped;
    ped.on_conflicting_crosswalk = k % 2 == 0;
    const double v = combined_utility(uniform_motion({0, 0}, {u(rng) / 2, 0}), o, std::vector{ped}, p, 5.0);
    EXPECT_GE(v, -0.75);
    EXPECT_LE(v, 1.0);
  }
}

TEST(UtilityParams, Validation) {
  UtilityParams p = UtilityParams::defaults();
  EXPECT_NO_THROW(p.validate());
  p.weights = {0.5, 0.5, 0.5};
  EXPECT_THROW(p.validate(), Error);
  p = UtilityParams::defaults();
  p.sigma = 0.0;
  EXPECT_THROW(p.validate(), Error);
  EXPECT_DOUBLE_EQ(UtilityParams::defaults().safe_gap_for(Task::kLeftTurn, Task::kThrough, false), 5.0);
  EXPECT_DOUBLE_EQ(UtilityParams::defaults().safe_gap_for(Task::kLeftTurn, Task::kThrough, true), 3.0);
}
