#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "jumplq/cone.hpp"
#include "jumplq/errors.hpp"
#include "jumplq/hamiltonian.hpp"
#include "jumplq/time_grid.hpp"

namespace jumplq {

// One jump mark of the controlled dynamics: relative state jump e(t),
// control loading f(t) (m-vector), constant intensity nu.
struct LqMark {
  TimeGridded<double> e;
  TimeGridded<Eigen::VectorXd> f;
  double nu = 0.0;
};

// Deterministic coefficients of the scalar-state linear-quadratic problem:
//   dX = (A X + B'u) dt + (C X + D u)' dW + jump terms,
//   J(u) = E[ int_0^T (Q X^2 + u'R u + 2 X S'u) dt + G X_T^2 ].
// All time-varying entries are piecewise constant on a uniform grid.
struct LqCoefficients {
  double horizon = 1.0;
  int m = 1;  // control dimension
  int n = 1;  // Brownian dimension
  TimeGridded<double> a, q;
  TimeGridded<Eigen::VectorXd> b, c, s;
  TimeGridded<Eigen::MatrixXd> d, r;
  double g = 0.0;
  std::vector<LqMark> marks;

  void validate() const {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
      throw ArgumentError("lq coefficients: horizon must be positive and finite");
    }
    if (m < 1 || n < 1) throw ArgumentError("lq coefficients: dimensions must be positive");
    if (!(g >= 0.0) || !std::isfinite(g)) {
      throw ArgumentError("lq coefficients: terminal weight must be nonnegative and finite");
    }
    auto check_scalar = [](const TimeGridded<double>& v, const char* name) {
      for (double x : v.values()) {
        if (!std::isfinite(x)) throw NumericError(std::string("lq coefficients: non-finite ") + name);
      }
    };
    check_scalar(a, "a");
    check_scalar(q, "q");
    auto check_vec = [](const TimeGridded<Eigen::VectorXd>& v, int len, const char* name) {
      for (const auto& x : v.values()) {
        if (x.size() != len) throw ArgumentError(std::string("lq coefficients: bad length for ") + name);
        if (!x.allFinite()) throw NumericError(std::string("lq coefficients: non-finite ") + name);
      }
    };
    check_vec(b, m, "b");
    check_vec(c, n, "c");
    check_vec(s, m, "s");
    for (const auto& x : d.values()) {
      if (x.rows() != n || x.cols() != m) throw ArgumentError("lq coefficients: d must be n x m");
      if (!x.allFinite()) throw NumericError("lq coefficients: non-finite d");
    }
    for (const auto& x : r.values()) {
      if (x.rows() != m || x.cols() != m) throw ArgumentError("lq coefficients: r must be m x m");
      if (!x.allFinite()) throw NumericError("lq coefficients: non-finite r");
    }
    for (const LqMark& mk : marks) {
      if (!(mk.nu > 0.0) || !std::isfinite(mk.nu)) {
        throw ArgumentError("lq coefficients: mark intensity must be positive and finite");
      }
      check_scalar(mk.e, "mark e");
      check_vec(mk.f, m, "mark f");
    }
  }

  // Pointwise [[R,S],[S',Q]] >= 0 check used by both case flags.
  bool cost_block_psd(double tol = 1e-10) const {
    size_t grid = std::max({q.intervals(), r.intervals(), s.intervals()});
    for (size_t k = 0; k < grid; ++k) {
      Eigen::MatrixXd blk(m + 1, m + 1);
      blk.topLeftCorner(m, m) = r.at_index(k);
      blk.topRightCorner(m, 1) = s.at_index(k);
      blk.bottomLeftCorner(1, m) = s.at_index(k).transpose();
      blk(m, m) = q.at_index(k);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (blk + blk.transpose()),
                                                        Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -tol) return false;
    }
    return true;
  }

  // Standard case: cost block PSD and R uniformly positive definite.
  bool standard_case(double* delta_out = nullptr) const {
    if (!cost_block_psd()) return false;
    double delta = std::numeric_limits<double>::infinity();
    for (const auto& rk : r.values()) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (rk + rk.transpose()),
                                                        Eigen::EigenvaluesOnly);
      delta = std::min(delta, es.eigenvalues().minCoeff());
    }
    if (!(delta > 0.0)) return false;
    if (delta_out) *delta_out = delta;
    return true;
  }

  // Singular case: cost block PSD, positive terminal weight, and uniformly
  // positive definite D'D + sum_j nu_j F_j F_j'.
  bool singular_case(double* delta_out = nullptr) const {
    if (!cost_block_psd()) return false;
    if (!(g > 0.0)) return false;
    double delta = g;
    size_t grid = d.intervals();
    for (const LqMark& mk : marks) grid = std::max(grid, mk.f.intervals());
    for (size_t k = 0; k < grid; ++k) {
      Eigen::MatrixXd mat = d.at_index(k).transpose() * d.at_index(k);
      for (const LqMark& mk : marks) {
        const Eigen::VectorXd& f = mk.f.at_index(k);
        mat += mk.nu * (f * f.transpose());
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (mat + mat.transpose()),
                                                        Eigen::EigenvaluesOnly);
      delta = std::min(delta, es.eigenvalues().minCoeff());
    }
    if (!(delta > 0.0)) return false;
    if (delta_out) *delta_out = delta;
    return true;
  }

  // Hamiltonian data frozen at time t with curvatures (p1, p2) and zero
  // auxiliary terms.
  Hamiltonian hamiltonian_at(double t, double p1, double p2) const {
    Hamiltonian h;
    h.p1 = p1;
    h.p2 = p2;
    h.r = r.at_time(t, horizon);
    h.d = d.at_time(t, horizon);
    h.b = b.at_time(t, horizon);
    h.c = c.at_time(t, horizon);
    h.s = s.at_time(t, horizon);
    h.lambda = Eigen::VectorXd::Zero(n);
    h.jumps.reserve(marks.size());
    for (const LqMark& mk : marks) {
      JumpTerm j;
      j.e = mk.e.at_time(t, horizon);
      j.f = mk.f.at_time(t, horizon);
      j.nu = mk.nu;
      h.jumps.push_back(std::move(j));
    }
    return h;
  }
};

enum class OdeScheme { rk4, implicit_euler };

enum class RiccatiCase { standard, singular };

// Solution of the coupled curvature equations on a uniform grid, with the
// per-node minimizers cached for feedback synthesis.
struct RiccatiSolution {
  double horizon = 0.0;
  std::vector<double> times;            // N + 1 grid points
  std::vector<double> p1, p2;           // curvature values per grid point
  std::vector<Eigen::VectorXd> v1, v2;  // cached branch minimizers per grid point
  RiccatiCase regime = RiccatiCase::standard;
  Cone cone = Cone::full_space(1);
  double bound_upper = 0.0;  // a-priori upper bound M
  double bound_c = 0.0;      // growth constant behind M
  double delta = 0.0;        // singular-case uniform positivity constant
  double c2 = 0.0;           // singular-case decay rate
  std::optional<double> truncation_radius;

  int steps() const { return static_cast<int>(times.size()) - 1; }

  // Singular-case lower envelope delta * exp(-c2 (T - t)).
  double lower_bound_at(double t) const {
    if (regime != RiccatiCase::singular) return 0.0;
    return delta * std::exp(-c2 * (horizon - t));
  }

  size_t grid_index(double t) const {
    if (!(t >= 0.0) || !(t <= horizon)) throw ArgumentError("riccati solution: time out of range");
    const int n = steps();
    auto k = static_cast<size_t>(t / horizon * n);
    return std::min(k, static_cast<size_t>(n));
  }

  // CSV: t,P1,P2,v1_1..v1_m,v2_1..v2_m with 17 significant digits.
  void write_csv(std::ostream& os) const {
    const auto mdim = static_cast<int>(v1.empty() ? 0 : v1.front().size());
    os << "t,P1,P2";
    for (int i = 1; i <= mdim; ++i) os << ",v1_" << i;
    for (int i = 1; i <= mdim; ++i) os << ",v2_" << i;
    os << "\n";
    char buf[64];
    auto put = [&](double x, char sep) {
      std::snprintf(buf, sizeof buf, "%.17g%c", x, sep);
      os << buf;
    };
    for (size_t k = 0; k < times.size(); ++k) {
      put(times[k], ',');
      put(p1[k], ',');
      put(p2[k], mdim > 0 ? ',' : '\n');
      for (int i = 0; i < mdim; ++i) put(v1[k][i], ',');
      for (int i = 0; i < mdim; ++i) put(v2[k][i], i + 1 == mdim ? '\n' : ',');
    }
  }
};

struct BoundsReport {
  RiccatiCase regime = RiccatiCase::standard;
  double c = 0.0;
  double upper = 0.0;
  double delta = 0.0;
  double c2 = 0.0;
  double max_upper_violation = 0.0;
  double max_negative_violation = 0.0;
  double max_lower_violation = 0.0;  // singular case only
  bool ok(double tol = 1e-7) const {
    return max_upper_violation <= tol && max_negative_violation <= tol &&
           max_lower_violation <= tol;
  }
};

namespace detail {

// Tightest constants in the a-priori envelopes, from the grid values:
// c >= max(2A + |C|^2 + sum nu E^2, Q, G) and, in the singular case, c2 with
// 2A + |C|^2 + sum nu E^2 - |B + D'C +/- sum nu E F|^2 / delta >= -c2.
struct BoundConstants {
  double c = 0.0;
  double c2 = 0.0;
};

inline BoundConstants bound_constants(const LqCoefficients& lq, std::optional<double> delta) {
  size_t grid = std::max({lq.a.intervals(), lq.q.intervals(), lq.c.intervals(),
                          lq.b.intervals(), lq.d.intervals()});
  for (const LqMark& mk : lq.marks) {
    grid = std::max({grid, mk.e.intervals(), mk.f.intervals()});
  }
  BoundConstants out;
  out.c = lq.g;
  for (size_t k = 0; k < grid; ++k) {
    double growth = 2.0 * lq.a.at_index(k) + lq.c.at_index(k).squaredNorm();
    for (const LqMark& mk : lq.marks) {
      const double e = mk.e.at_index(k);
      growth += mk.nu * e * e;
    }
    out.c = std::max({out.c, growth, lq.q.at_index(k)});
    if (delta) {
      const Eigen::VectorXd base =
          lq.b.at_index(k) + lq.d.at_index(k).transpose() * lq.c.at_index(k);
      Eigen::VectorXd jump_load = Eigen::VectorXd::Zero(lq.m);
      for (const LqMark& mk : lq.marks) {
        jump_load += mk.nu * mk.e.at_index(k) * mk.f.at_index(k);
      }
      for (double sign : {1.0, -1.0}) {
        const double need = (base + sign * jump_load).squaredNorm() / *delta - growth;
        out.c2 = std::max(out.c2, need);
      }
    }
  }
  out.c = std::max(out.c, 0.0);
  out.c2 = std::max(out.c2, 0.0);
  return out;
}

}  // namespace detail

// Backward integration of the coupled curvature system
//   dP_i/dt = -[(2A + |C|^2) P_i + Q + H_i*(t, P1, P2)],  P_i(T) = G,
// where H_i* minimizes the corresponding Hamiltonian branch over the cone
// (optionally intersected with a centered ball of the truncation radius).
inline RiccatiSolution solve_sre(const LqCoefficients& lq, const Cone& cone, int steps,
                                 OdeScheme scheme = OdeScheme::rk4,
                                 std::optional<double> truncation_radius = {},
                                 double minimize_tol = 1e-10) {
  lq.validate();
  if (cone.dim() != lq.m) throw ArgumentError("solve_sre: cone dimension mismatch");
  if (steps < 1) throw ArgumentError("solve_sre: steps must be positive");
  if (truncation_radius && !(*truncation_radius >= 0.0)) {
    throw ArgumentError("solve_sre: negative truncation radius");
  }

  RiccatiSolution sol;
  double delta = 0.0;
  if (lq.standard_case(&delta)) {
    sol.regime = RiccatiCase::standard;
    sol.delta = 0.0;
  } else if (lq.singular_case(&delta)) {
    sol.regime = RiccatiCase::singular;
    sol.delta = delta;
  } else {
    throw ArgumentError("solve_sre: coefficients fit neither the standard nor the singular case");
  }
  const auto consts = detail::bound_constants(
      lq, sol.regime == RiccatiCase::singular ? std::optional<double>(delta) : std::nullopt);
  sol.horizon = lq.horizon;
  sol.cone = cone;
  sol.bound_c = consts.c;
  sol.bound_upper = (consts.c + 1.0) * std::exp(consts.c * lq.horizon) - 1.0;
  sol.c2 = consts.c2;
  sol.truncation_radius = truncation_radius;

  const int n = steps;
  const double h = lq.horizon / n;
  sol.times.resize(n + 1);
  sol.p1.assign(n + 1, 0.0);
  sol.p2.assign(n + 1, 0.0);
  sol.v1.resize(n + 1);
  sol.v2.resize(n + 1);
  for (int i = 0; i <= n; ++i) sol.times[i] = lq.horizon * i / n;
  sol.p1[n] = lq.g;
  sol.p2[n] = lq.g;

  MinimizeOptions opts;
  opts.radius = truncation_radius;
  opts.tol = minimize_tol;

  // Negated right-hand side, so that backward integration accumulates
  // P(t_i) = P(t_{i+1}) + int rhs dt.
  const auto rhs = [&](Hamiltonian& ham, double t, double pa, double pb, double& out1,
                       double& out2) {
    ham.p1 = std::max(pa, 0.0);
    ham.p2 = std::max(pb, 0.0);
    const double growth = 2.0 * lq.a.at_time(t, lq.horizon) +
                          lq.c.at_time(t, lq.horizon).squaredNorm();
    const double q = lq.q.at_time(t, lq.horizon);
    const double h1 = minimize(ham, Branch::h1, cone, opts).value;
    const double h2 = minimize(ham, Branch::h2, cone, opts).value;
    out1 = growth * ham.p1 + q + h1;
    out2 = growth * ham.p2 + q + h2;
  };

  const double bound_tol = 1e-7;
  for (int i = n - 1; i >= 0; --i) {
    const double t_left = sol.times[i];
    Hamiltonian ham = lq.hamiltonian_at(t_left, sol.p1[i + 1], sol.p2[i + 1]);
    double pa = sol.p1[i + 1];
    double pb = sol.p2[i + 1];
    if (scheme == OdeScheme::rk4) {
      double k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b;
      rhs(ham, t_left, pa, pb, k1a, k1b);
      rhs(ham, t_left, pa + 0.5 * h * k1a, pb + 0.5 * h * k1b, k2a, k2b);
      rhs(ham, t_left, pa + 0.5 * h * k2a, pb + 0.5 * h * k2b, k3a, k3b);
      rhs(ham, t_left, pa + h * k3a, pb + h * k3b, k4a, k4b);
      sol.p1[i] = pa + h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
      sol.p2[i] = pb + h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
    } else {
      // Implicit Euler resolved by Picard iteration.
      double xa = pa;
      double xb = pb;
      bool converged = false;
      for (int it = 0; it < 100; ++it) {
        double fa, fb;
        rhs(ham, t_left, xa, xb, fa, fb);
        const double na = pa + h * fa;
        const double nb = pb + h * fb;
        const double diff = std::max(std::abs(na - xa), std::abs(nb - xb));
        xa = na;
        xb = nb;
        if (diff <= 1e-12 * std::max(1.0, std::max(std::abs(xa), std::abs(xb)))) {
          converged = true;
          break;
        }
      }
      if (!converged) throw ConvergenceError("solve_sre: implicit step did not contract");
      sol.p1[i] = xa;
      sol.p2[i] = xb;
    }
    if (!std::isfinite(sol.p1[i]) || !std::isfinite(sol.p2[i])) {
      throw NumericError("solve_sre: non-finite curvature");
    }
    for (double p : {sol.p1[i], sol.p2[i]}) {
      if (p < -bound_tol || p > sol.bound_upper + bound_tol) {
        throw DivergenceError("solve_sre: curvature left its a-priori bounds");
      }
      if (sol.regime == RiccatiCase::singular && p < sol.lower_bound_at(sol.times[i]) - bound_tol) {
        throw DivergenceError("solve_sre: curvature fell below the singular lower envelope");
      }
    }
  }

  // Cache the branch minimizers at every grid node.
  for (int i = 0; i <= n; ++i) {
    Hamiltonian ham = lq.hamiltonian_at(sol.times[i], std::max(sol.p1[i], 0.0),
                                        std::max(sol.p2[i], 0.0));
    sol.v1[i] = minimize(ham, Branch::h1, cone, opts).minimizer;
    sol.v2[i] = minimize(ham, Branch::h2, cone, opts).minimizer;
  }
  return sol;
}

inline RiccatiSolution solve_truncated(const LqCoefficients& lq, const Cone& cone, int steps,
                                       double radius, OdeScheme scheme = OdeScheme::rk4) {
  return solve_sre(lq, cone, steps, scheme, radius);
}

// Report-only re-check of the a-priori envelopes on an existing solution.
inline BoundsReport verify_bounds(const RiccatiSolution& sol, const LqCoefficients& lq) {
  BoundsReport rep;
  rep.regime = sol.regime;
  double delta = 0.0;
  const bool singular = sol.regime == RiccatiCase::singular && lq.singular_case(&delta);
  const auto consts =
      detail::bound_constants(lq, singular ? std::optional<double>(delta) : std::nullopt);
  rep.c = consts.c;
  rep.upper = (consts.c + 1.0) * std::exp(consts.c * lq.horizon) - 1.0;
  rep.delta = singular ? delta : 0.0;
  rep.c2 = consts.c2;
  for (size_t k = 0; k < sol.times.size(); ++k) {
    for (double p : {sol.p1[k], sol.p2[k]}) {
      rep.max_upper_violation = std::max(rep.max_upper_violation, p - rep.upper);
      rep.max_negative_violation = std::max(rep.max_negative_violation, -p);
      if (singular) {
        const double low = rep.delta * std::exp(-rep.c2 * (sol.horizon - sol.times[k]));
        rep.max_lower_violation = std::max(rep.max_lower_violation, low - p);
      }
    }
  }
  return rep;
}

// Feedback map u(t, x) = v1(t) x^+ + v2(t) x^-, with the cached minimizers
// interpolated as piecewise-constant (left value) on the solver grid.
inline Eigen::VectorXd feedback(const RiccatiSolution& sol, double t, double x) {
  if (!std::isfinite(x)) throw ArgumentError("feedback: non-finite state");
  const size_t k = sol.grid_index(t);
  return sol.v1[k] * positive_part(x) + sol.v2[k] * negative_part(x);
}

}  // namespace jumplq
