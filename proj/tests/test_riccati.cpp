#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <vector>

#include "jumplq/riccati.hpp"

using namespace jumplq;

namespace {

LqCoefficients classical_instance() {
  // One asset, no jumps, free control: a linear scalar equation with the
  // closed form P(t) = exp((2a - (b/d)^2)(T - t)).
  LqCoefficients lq;
  lq.horizon = 1.0;
  lq.m = 1;
  lq.n = 1;
  lq.a = TimeGridded<double>::constant(0.03);
  lq.b = TimeGridded<Eigen::VectorXd>::constant(Eigen::VectorXd::Constant(1, 0.2));
  lq.c = TimeGridded<Eigen::VectorXd>::constant(Eigen::VectorXd::Zero(1));
  lq.d = TimeGridded<Eigen::MatrixXd>::constant(Eigen::MatrixXd::Constant(1, 1, 0.3));
  lq.q = TimeGridded<double>::constant(0.0);
  lq.s = TimeGridded<Eigen::VectorXd>::constant(Eigen::VectorXd::Zero(1));
  lq.r = TimeGridded<Eigen::MatrixXd>::constant(Eigen::MatrixXd::Zero(1, 1));
  lq.g = 1.0;
  return lq;
}

double classical_value(double t) {
  const double theta2 = (0.2 / 0.3) * (0.2 / 0.3);
  return std::exp((2.0 * 0.03 - theta2) * (1.0 - t));
}

LqCoefficients jumpy_standard_instance() {
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
  return lq;
}

LqCoefficients jumpy_singular_instance() {
  LqCoefficients lq = jumpy_standard_instance();
  lq.r = TimeGridded<Eigen::MatrixXd>::constant(Eigen::MatrixXd::Zero(1, 1));
  lq.s = TimeGridded<Eigen::VectorXd>::constant(Eigen::VectorXd::Zero(1));
  return lq;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace

TEST_CASE("classical instance matches the scalar closed form") {
  const LqCoefficients lq = classical_instance();
  const RiccatiSolution sol = solve_sre(lq, Cone::full_space(1), 2000);
  REQUIRE(sol.regime == RiccatiCase::singular);
  const double expect = classical_value(0.0);
  REQUIRE(std::abs(sol.p2.front() - expect) / expect <= 1e-6);
  REQUIRE(std::abs(sol.p1.front() - expect) / expect <= 1e-6);
  // Whole trajectory, both components.
  for (int k = 0; k <= sol.steps(); k += 50) {
    const double ref = classical_value(sol.times[k]);
    REQUIRE(std::abs(sol.p2[k] - ref) <= 1e-6 * ref);
  }
  // The free cone is symmetric, so the two branches coincide.
  REQUIRE(max_abs_diff(sol.p1, sol.p2) <= 1e-8);
}

TEST_CASE("grid refinement shrinks the closed-form error") {
  const LqCoefficients lq = classical_instance();
  const double expect = classical_value(0.0);
  const double e_coarse =
      std::abs(solve_sre(lq, Cone::full_space(1), 5).p2.front() - expect);
  const double e_fine =
      std::abs(solve_sre(lq, Cone::full_space(1), 10).p2.front() - expect);
  REQUIRE(e_fine <= e_coarse / 10.0 + 1e-9);
}

TEST_CASE("integration schemes agree on smooth data") {
  const LqCoefficients lq = classical_instance();
  const RiccatiSolution rk = solve_sre(lq, Cone::full_space(1), 1000, OdeScheme::rk4);
  const RiccatiSolution ie = solve_sre(lq, Cone::full_space(1), 1000, OdeScheme::implicit_euler);
  REQUIRE(max_abs_diff(rk.p2, ie.p2) <= 1e-3);
  REQUIRE(max_abs_diff(rk.p1, ie.p1) <= 1e-3);
}

TEST_CASE("a-priori envelopes hold on standard and singular instances") {
  struct Case {
    LqCoefficients lq;
    Cone cone;
    RiccatiCase expect;
  };
  const std::vector<Case> cases = {
      {classical_instance(), Cone::full_space(1), RiccatiCase::singular},
      {jumpy_standard_instance(), Cone::coordinate({CoordinateSign::nonneg}),
       RiccatiCase::standard},
      {jumpy_standard_instance(), Cone::full_space(1), RiccatiCase::standard},
      {jumpy_singular_instance(), Cone::coordinate({CoordinateSign::nonneg}),
       RiccatiCase::singular},
      {jumpy_singular_instance(), Cone::ray((Eigen::VectorXd(1) << 1.0).finished()),
       RiccatiCase::singular},
  };
  for (const Case& c : cases) {
    const RiccatiSolution sol = solve_sre(c.lq, c.cone, 400);
    REQUIRE(sol.regime == c.expect);
    const BoundsReport rep = verify_bounds(sol, c.lq);
    CAPTURE(rep.max_upper_violation, rep.max_negative_violation, rep.max_lower_violation);
    REQUIRE(rep.ok(1e-7));
    REQUIRE(rep.upper == Catch::Approx(sol.bound_upper));
    if (c.expect == RiccatiCase::singular) {
      REQUIRE(rep.delta > 0.0);
      // The envelope itself is strictly positive on the whole horizon.
      REQUIRE(sol.lower_bound_at(0.0) > 0.0);
    }
  }
}

TEST_CASE("tighter truncation radii never lower the solution") {
  for (const LqCoefficients& lq : {jumpy_standard_instance(), jumpy_singular_instance()}) {
    const Cone cone = Cone::coordinate({CoordinateSign::nonneg});
    const int steps = 400;
    const RiccatiSolution untruncated = solve_sre(lq, cone, steps);
    std::vector<RiccatiSolution> sols;
    for (double radius : {1.0, 2.0, 4.0, 8.0, 16.0}) {
      sols.push_back(solve_truncated(lq, cone, steps, radius));
    }
    for (size_t k = 0; k + 1 < sols.size(); ++k) {
      for (int i = 0; i <= steps; ++i) {
        REQUIRE(sols[k + 1].p1[i] <= sols[k].p1[i] + 1e-9);
        REQUIRE(sols[k + 1].p2[i] <= sols[k].p2[i] + 1e-9);
      }
    }
    // The untruncated solution sits below every truncated one.
    for (const RiccatiSolution& ts : sols) {
      for (int i = 0; i <= steps; ++i) {
        REQUIRE(untruncated.p1[i] <= ts.p1[i] + 1e-9);
        REQUIRE(untruncated.p2[i] <= ts.p2[i] + 1e-9);
      }
    }
    // A generous radius leaves the minimizers untouched.
    const RiccatiSolution wide = solve_truncated(lq, cone, steps, 1e4);
    REQUIRE(max_abs_diff(wide.p1, untruncated.p1) <= 1e-9);
    REQUIRE(max_abs_diff(wide.p2, untruncated.p2) <= 1e-9);
  }
}

TEST_CASE("symmetric cones collapse the two branches") {
  LqCoefficients lq = jumpy_standard_instance();
  for (const Cone& cone :
       {Cone::full_space(1), Cone::coordinate({CoordinateSign::free_axis})}) {
    const RiccatiSolution sol = solve_sre(lq, cone, 500);
    REQUIRE(max_abs_diff(sol.p1, sol.p2) <= 1e-8);
  }
  // An asymmetric cone does split them on the same data.
  const RiccatiSolution split =
      solve_sre(lq, Cone::coordinate({CoordinateSign::nonneg}), 500);
  REQUIRE(max_abs_diff(split.p1, split.p2) > 1e-6);
}

TEST_CASE("feedback map uses the cached branch minimizers") {
  const LqCoefficients lq = jumpy_standard_instance();
  const RiccatiSolution sol = solve_sre(lq, Cone::coordinate({CoordinateSign::nonneg}), 100);
  const size_t k = sol.grid_index(0.5);
  REQUIRE((feedback(sol, 0.5, 2.0) - 2.0 * sol.v1[k]).norm() <= 1e-15);
  REQUIRE((feedback(sol, 0.5, -3.0) - 3.0 * sol.v2[k]).norm() <= 1e-15);
  REQUIRE(feedback(sol, 0.5, 0.0).norm() == 0.0);
  REQUIRE_THROWS_AS(feedback(sol, 2.0, 1.0), ArgumentError);
  REQUIRE_THROWS_AS(feedback(sol, -0.1, 1.0), ArgumentError);
  // Minimizers live in the cone.
  for (int i = 0; i <= sol.steps(); ++i) {
    REQUIRE(sol.v1[i][0] >= -1e-12);
    REQUIRE(sol.v2[i][0] >= -1e-12);
  }
}

TEST_CASE("csv output shape and round-trip precision") {
  const LqCoefficients lq = classical_instance();
  const RiccatiSolution sol = solve_sre(lq, Cone::full_space(1), 10);
  std::ostringstream os;
  sol.write_csv(os);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  REQUIRE(header == "t,P1,P2,v1_1,v2_1");
  int rows = 0;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty()) ++rows;
  }
  REQUIRE(rows == 11);
  // 17 significant digits reproduce the stored double exactly.
  std::istringstream first_line(os.str().substr(os.str().find('\n') + 1));
  std::string cell;
  std::getline(first_line, cell, ',');
  REQUIRE(std::stod(cell) == sol.times[0]);
  std::getline(first_line, cell, ',');
  REQUIRE(std::stod(cell) == sol.p1[0]);
}

TEST_CASE("zero dynamics with unit costs keeps both curvatures at one") {
  LqCoefficients lq;
  lq.horizon = 1.0;
  lq.m = 1;
  lq.n = 1;
  lq.a = TimeGridded<double>::constant(0.0);
  lq.b = TimeGridded<Eigen::VectorXd>::constant(Eigen::VectorXd::Zero(1));
  lq.c = TimeGridded<Eigen::VectorXd>::constant(Eigen::VectorXd::Zero(1));
  lq.d = TimeGridded<Eigen::MatrixXd>::constant(Eigen::MatrixXd::Zero(1, 1));
  lq.q = TimeGridded<double>::constant(0.0);
  lq.s = TimeGridded<Eigen::VectorXd>::constant(Eigen::VectorXd::Zero(1));
  lq.r = TimeGridded<Eigen::MatrixXd>::constant(Eigen::MatrixXd::Identity(1, 1));
  lq.g = 1.0;
  const RiccatiSolution sol = solve_sre(lq, Cone::full_space(1), 64);
  for (int i = 0; i <= sol.steps(); ++i) {
    REQUIRE(sol.p1[i] == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(sol.p2[i] == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("solver argument and regime validation") {
  LqCoefficients lq = classical_instance();
  REQUIRE_THROWS_AS(solve_sre(lq, Cone::full_space(2), 100), ArgumentError);
  REQUIRE_THROWS_AS(solve_sre(lq, Cone::full_space(1), 0), ArgumentError);
  REQUIRE_THROWS_AS(solve_truncated(lq, Cone::full_space(1), 100, -1.0), ArgumentError);

  // Zero control cost and zero terminal weight fits neither regime.
  LqCoefficients neither = classical_instance();
  neither.g = 0.0;
  REQUIRE_THROWS_AS(solve_sre(neither, Cone::full_space(1), 100), ArgumentError);

  LqCoefficients bad = classical_instance();
  bad.horizon = -1.0;
  REQUIRE_THROWS_AS(solve_sre(bad, Cone::full_space(1), 100), ArgumentError);
}
