// Solves the coupled backward equation for a one-asset model with a single
// downward jump mark and prints the value coefficients along the horizon.

#include <cstdio>

#include "jumplq/riccati.hpp"

using namespace jumplq;

int main() {
  LqCoefficients lq;
  lq.horizon = 1.0;
  lq.m = 1;
  lq.n = 1;
  lq.a = TimeGridded<double>::constant(0.03);
  lq.b = TimeGridded<Eigen::VectorXd>::constant(Eigen::VectorXd::Constant(1, 0.2));
  lq.c = TimeGridded<Eigen::VectorXd>::constant(Eigen::VectorXd::Constant(1, 0.1));
  lq.d = TimeGridded<Eigen::MatrixXd>::constant(Eigen::MatrixXd::Constant(1, 1, 0.3));
  lq.q = TimeGridded<double>::constant(0.05);
  lq.s = TimeGridded<Eigen::VectorXd>::constant(Eigen::VectorXd::Constant(1, 0.02));
  lq.r = TimeGridded<Eigen::MatrixXd>::constant(Eigen::MatrixXd::Constant(1, 1, 0.1));
  lq.g = 1.0;
  lq.marks.push_back({TimeGridded<double>::constant(-0.4),
                      TimeGridded<Eigen::VectorXd>::constant(Eigen::VectorXd::Constant(1, 0.15)),
                      0.8});

  const Cone cone = Cone::coordinate({CoordinateSign::nonneg});
  const RiccatiSolution sol = solve_sre(lq, cone, 400);

  std::printf("regime: %s\n", sol.regime == RiccatiCase::standard ? "standard" : "singular");
  std::printf("%8s %22s %22s %22s %22s\n", "t", "P1", "P2", "v1", "v2");
  for (int k = 0; k <= sol.steps(); k += sol.steps() / 8) {
    std::printf("%8.4f %22.15g %22.15g %22.15g %22.15g\n", sol.times[k], sol.p1[k], sol.p2[k],
                sol.v1[k](0), sol.v2[k](0));
  }
  std::printf("upper bound %.15g, lower envelope at 0: %.15g\n", sol.bound_upper,
              sol.lower_bound_at(0.0));
  return 0;
}
