#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "jumplq/cone.hpp"
#include "jumplq/errors.hpp"
#include "jumplq/riccati.hpp"
#include "jumplq/simulate.hpp"
#include "jumplq/time_grid.hpp"

namespace jumplq {

// Constrained mean-variance portfolio selection. Wealth follows
//   dX = (r X + mu'u - sum_j nu_j F_j'u) dt + u' sigma' dW + sum_j dN_j F_j'u
// with u restricted to a cone, mu the excess return vector. The variance-
// minimal strategy for a mean target z comes from the value pair (P1, P2) of
// the homogeneous quadratic-loss problem via a scalarization shift.

struct MarketMark {
  TimeGridded<Eigen::VectorXd> f;  // jump loadings per asset
  double nu = 0.0;
};

struct MarketModel {
  double horizon = 1.0;
  int assets = 1;
  int noise = 1;
  TimeGridded<double> rate = TimeGridded<double>::constant(0.0);
  TimeGridded<Eigen::VectorXd> excess = TimeGridded<Eigen::VectorXd>::constant(Eigen::VectorXd::Zero(1));
  TimeGridded<Eigen::MatrixXd> vol =
      TimeGridded<Eigen::MatrixXd>::constant(Eigen::MatrixXd::Identity(1, 1));  // noise x assets
  std::vector<MarketMark> marks;
  Cone cone = Cone::full_space(1);

  void validate() const {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
      throw ArgumentError("market: horizon must be positive and finite");
    if (assets < 1 || noise < 1) throw ArgumentError("market: need at least one asset and one noise");
    if (rate.intervals() == 0 || excess.intervals() == 0 || vol.intervals() == 0)
      throw ArgumentError("market: empty coefficient grid");
    for (const auto& v : excess.values())
      if (v.size() != assets || !v.allFinite()) throw ArgumentError("market: bad excess return entry");
    for (const auto& s : vol.values())
      if (s.rows() != noise || s.cols() != assets || !s.allFinite())
        throw ArgumentError("market: bad volatility entry");
    for (const auto& mk : marks) {
      if (!(mk.nu > 0.0) || !std::isfinite(mk.nu))
        throw ArgumentError("market: mark intensities must be positive");
      for (const auto& f : mk.f.values())
        if (f.size() != assets || !f.allFinite()) throw ArgumentError("market: bad jump loading entry");
    }
    if (cone.dim() != assets) throw ArgumentError("market: cone dimension mismatch");
  }
};

// Quadratic-loss coefficients of the homogeneous problem: unit terminal
// weight, no running cost.
inline LqCoefficients to_lq(const MarketModel& mkt) {
  mkt.validate();
  LqCoefficients lq;
  lq.horizon = mkt.horizon;
  lq.m = mkt.assets;
  lq.n = mkt.noise;
  lq.a = mkt.rate;
  lq.b = mkt.excess;
  lq.c = TimeGridded<Eigen::VectorXd>::constant(Eigen::VectorXd::Zero(mkt.noise));
  lq.d = mkt.vol;
  lq.q = TimeGridded<double>::constant(0.0);
  lq.s = TimeGridded<Eigen::VectorXd>::constant(Eigen::VectorXd::Zero(mkt.assets));
  lq.r = TimeGridded<Eigen::MatrixXd>::constant(Eigen::MatrixXd::Zero(mkt.assets, mkt.assets));
  lq.g = 1.0;
  for (const auto& mk : mkt.marks) {
    LqMark lm;
    lm.e = TimeGridded<double>::constant(0.0);
    lm.f = mk.f;
    lm.nu = mk.nu;
    lq.marks.push_back(std::move(lm));
  }
  return lq;
}

inline double integral(const TimeGridded<double>& g, double horizon) {
  const double dt = horizon / g.intervals();
  double total = 0.0;
  for (double v : g.values()) total += v * dt;
  return total;
}

// Mean targets above the riskless benchmark are attainable iff the excess
// return escapes the polar of the constraint cone on some interval.
struct FeasibilityReport {
  bool feasible = false;
  double max_support = 0.0;
  int witness_interval = -1;
};

inline FeasibilityReport check_feasibility(const MarketModel& mkt, double tol = 1e-12) {
  mkt.validate();
  FeasibilityReport rep;
  for (size_t k = 0; k < mkt.excess.intervals(); ++k) {
    const bool blocked = mkt.cone.dual_membership(mkt.excess.values()[k], tol);
    const double s = mkt.cone.support_on_unit_ball(mkt.excess.values()[k]);
    if (s > rep.max_support) rep.max_support = s;
    if (!blocked && rep.witness_interval < 0) rep.witness_interval = static_cast<int>(k);
  }
  rep.feasible = rep.witness_interval >= 0;
  return rep;
}

struct MvSolution {
  double x0 = 0.0;
  double target = 0.0;
  double lambda = 0.0;
  double variance = 0.0;
  double stddev = 0.0;
  double benchmark = 0.0;      // x0 e^{int r}
  double discount = 0.0;       // e^{-int r}
  double p1_0 = 0.0, p2_0 = 0.0;
  double p1_discounted = 0.0;  // P1(0) e^{-2 int r}
  double p2_discounted = 0.0;  // P2(0) e^{-2 int r}
  double shifted_x0 = 0.0;     // x0 - lambda e^{-int r}
  RiccatiSolution sre;

  // Feedback in the shifted state x - lambda e^{-int_t^T r}; simulate the
  // same dynamics from shifted_x0 and add lambda back at the horizon.
  ControlLaw control_law() const { return feedback_law(sre, "mean-variance"); }
};

namespace detail {

inline MvSolution mv_from_sre(const MarketModel& mkt, double x0, double z,
                              RiccatiSolution&& sre) {
  MvSolution sol;
  sol.x0 = x0;
  sol.target = z;
  sol.sre = std::move(sre);
  const double ir = integral(mkt.rate, mkt.horizon);
  sol.discount = std::exp(-ir);
  sol.benchmark = x0 * std::exp(ir);
  sol.p1_0 = sol.sre.p1.front();
  sol.p2_0 = sol.sre.p2.front();
  sol.p1_discounted = sol.p1_0 * sol.discount * sol.discount;
  sol.p2_discounted = sol.p2_0 * sol.discount * sol.discount;
  if (sol.p2_discounted >= 1.0 - 1e-9)
    throw DegenerateMarketError("mean-variance: discounted quadratic loss leaves no room below 1");

  const double scale = std::max({1.0, std::fabs(z), std::fabs(sol.benchmark)});
  if (z < sol.benchmark - 1e-12 * scale)
    throw ArgumentError("mean-variance: target below the riskless benchmark");
  if (std::fabs(z - sol.benchmark) <= 1e-12 * scale) {
    sol.lambda = z;
    sol.variance = 0.0;
    sol.stddev = 0.0;
    sol.shifted_x0 = x0 - sol.lambda * sol.discount;
    return sol;
  }
  sol.lambda = (z - x0 * sol.p2_0 * sol.discount) / (1.0 - sol.p2_discounted);
  const double gap = z - sol.benchmark;
  sol.variance = sol.p2_discounted / (1.0 - sol.p2_discounted) * gap * gap;
  sol.stddev = std::sqrt(std::max(sol.variance, 0.0));
  sol.shifted_x0 = x0 - sol.lambda * sol.discount;
  return sol;
}

}  // namespace detail

inline MvSolution solve_mv(const MarketModel& mkt, double x0, double z, int steps,
                           OdeScheme scheme = OdeScheme::rk4) {
  const LqCoefficients lq = to_lq(mkt);
  RiccatiSolution sre = solve_sre(lq, mkt.cone, steps, scheme);
  return detail::mv_from_sre(mkt, x0, z, std::move(sre));
}

struct FrontierPoint {
  double target = 0.0;
  double lambda = 0.0;
  double variance = 0.0;
  double stddev = 0.0;
};

struct FrontierResult {
  double x0 = 0.0;
  double benchmark = 0.0;
  double p1_discounted = 0.0;
  double p2_discounted = 0.0;
  std::vector<FrontierPoint> points;

  void write_csv(std::ostream& os) const {
    char buf[128];
    os << "target,lambda,variance,stddev\n";
    for (const auto& p : points) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", p.target, p.lambda,
                    p.variance, p.stddev);
      os << buf;
    }
  }
};

// One equation solve serves every target: the scalarization shift only moves
// the starting point, not the value pair.
inline FrontierResult efficient_frontier(const MarketModel& mkt, double x0,
                                         const std::vector<double>& targets, int steps,
                                         OdeScheme scheme = OdeScheme::rk4) {
  const LqCoefficients lq = to_lq(mkt);
  RiccatiSolution sre = solve_sre(lq, mkt.cone, steps, scheme);
  FrontierResult out;
  out.x0 = x0;
  for (double z : targets) {
    RiccatiSolution copy = sre;
    const MvSolution sol = detail::mv_from_sre(mkt, x0, z, std::move(copy));
    out.benchmark = sol.benchmark;
    out.p1_discounted = sol.p1_discounted;
    out.p2_discounted = sol.p2_discounted;
    out.points.push_back({sol.target, sol.lambda, sol.variance, sol.stddev});
  }
  return out;
}

// Monte Carlo confirmation of the frontier point: simulate the shifted state
// under the solved feedback, shift back, and compare mean and variance.
struct MvCheck {
  SimReport sim;
  double mc_mean = 0.0;
  double mc_variance = 0.0;
  double mean_error = 0.0, var_error = 0.0;
  double mean_tol = 0.0, var_tol = 0.0;
  bool pass = false;
};

inline MvCheck verify_mv(const MarketModel& mkt, const MvSolution& sol, const PathConfig& cfg,
                         double bias_budget) {
  const LqCoefficients lq = to_lq(mkt);
  const ControlLaw law = sol.control_law();
  MvCheck chk;
  chk.sim = simulate_controlled(lq, sol.shifted_x0, law, cfg);
  chk.mc_mean = chk.sim.mean_terminal + sol.lambda;
  chk.mc_variance = chk.sim.var_terminal;
  chk.mean_error = chk.mc_mean - sol.target;
  chk.var_error = chk.mc_variance - sol.variance;
  chk.mean_tol = 3.0 * chk.sim.se_terminal + bias_budget / cfg.steps;
  chk.var_tol = 3.0 * chk.sim.se_var_terminal + bias_budget / cfg.steps;
  chk.pass = std::fabs(chk.mean_error) <= chk.mean_tol && std::fabs(chk.var_error) <= chk.var_tol;
  return chk;
}

}  // namespace jumplq
