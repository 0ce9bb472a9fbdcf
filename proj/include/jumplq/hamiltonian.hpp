#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "jumplq/cone.hpp"
#include "jumplq/errors.hpp"

namespace jumplq {

inline double positive_part(double x) { return x > 0.0 ? x : 0.0; }
inline double negative_part(double x) { return x < 0.0 ? -x : 0.0; }

// One jump mark entering the Hamiltonians: relative state jump size e,
// control loading f (m-vector), intensity weight nu, and the two auxiliary
// curvature shifts gamma1/gamma2 paired with p1/p2.
struct JumpTerm {
  double e = 0.0;
  Eigen::VectorXd f;
  double nu = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
};

// Frozen-coefficient data defining the pointwise control Hamiltonians H1/H2.
// p1/p2 are the current value curvatures on the positive/negative state
// branch; r is the m x m control cost, d the n x m diffusion loading, b the
// drift loading, c the state diffusion loading, s the cross cost, lambda the
// auxiliary diffusion curvature.
struct Hamiltonian {
  double p1 = 0.0;
  double p2 = 0.0;
  Eigen::MatrixXd r;       // m x m
  Eigen::MatrixXd d;       // n x m
  Eigen::VectorXd b;       // m
  Eigen::VectorXd c;       // n
  Eigen::VectorXd s;       // m
  Eigen::VectorXd lambda;  // n
  std::vector<JumpTerm> jumps;

  int dim() const { return static_cast<int>(b.size()); }
  int noise_dim() const { return static_cast<int>(c.size()); }

  // Structural requirements: curvatures (and their gamma shifts)
  // nonnegative, r symmetric PSD, finite data, consistent dimensions.
  void validate() const {
    const int m = dim();
    const int n = noise_dim();
    if (m < 1) throw ArgumentError("hamiltonian: control dimension must be positive");
    if (r.rows() != m || r.cols() != m) throw ArgumentError("hamiltonian: r must be m x m");
    if (d.rows() != n || d.cols() != m) throw ArgumentError("hamiltonian: d must be n x m");
    if (s.size() != m) throw ArgumentError("hamiltonian: s must have length m");
    if (lambda.size() != n) throw ArgumentError("hamiltonian: lambda must have length n");
    if (!std::isfinite(p1) || !std::isfinite(p2) || !r.allFinite() || !d.allFinite() ||
        !b.allFinite() || !c.allFinite() || !s.allFinite() || !lambda.allFinite()) {
      throw NumericError("hamiltonian: non-finite coefficient");
    }
    const double tol = 1e-9 * std::max(1.0, std::max(std::abs(p1), std::abs(p2)));
    if (p1 < -tol || p2 < -tol) throw InvariantError("hamiltonian: negative curvature p1/p2");
    for (const JumpTerm& j : jumps) {
      if (j.f.size() != m) throw ArgumentError("hamiltonian: jump loading must have length m");
      if (!std::isfinite(j.e) || !j.f.allFinite() || !std::isfinite(j.nu) ||
          !std::isfinite(j.gamma1) || !std::isfinite(j.gamma2)) {
        throw NumericError("hamiltonian: non-finite jump term");
      }
      if (!(j.nu > 0.0)) throw ArgumentError("hamiltonian: jump intensity must be positive");
      if (p1 + j.gamma1 < -tol || p2 + j.gamma2 < -tol) {
        throw InvariantError("hamiltonian: negative shifted curvature p + gamma");
      }
    }
    const double rscale = std::max(1.0, r.cwiseAbs().maxCoeff());
    if ((r - r.transpose()).cwiseAbs().maxCoeff() > 1e-9 * rscale) {
      throw InvariantError("hamiltonian: r not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (r + r.transpose()),
                                                      Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9 * rscale) {
      throw InvariantError("hamiltonian: r not positive semidefinite");
    }
  }
};

enum class Branch { h1, h2 };

// H1(v) = v'(R + P1 D'D)v + 2(P1(B + D'C) + D'Lambda + S)'v
//   + sum_j nu_j [ (P1+G1j)(((1 + E_j + F_j'v)^+)^2 - 1) - 2 P1 (E_j + F_j'v)
//                  + (P2+G2j)((1 + E_j + F_j'v)^-)^2 ].
inline double eval_h1(const Hamiltonian& h, const Eigen::VectorXd& v) {
  if (v.size() != h.dim()) throw ArgumentError("eval_h1: dimension mismatch");
  const Eigen::VectorXd dv = h.d * v;
  double val = v.dot(h.r * v) + h.p1 * dv.squaredNorm();
  val += 2.0 * (h.p1 * (h.b.dot(v) + h.c.dot(dv)) + h.lambda.dot(dv) + h.s.dot(v));
  for (const JumpTerm& j : h.jumps) {
    const double fv = j.f.dot(v);
    const double w = 1.0 + j.e + fv;
    const double wp = positive_part(w);
    const double wm = negative_part(w);
    val += j.nu * ((h.p1 + j.gamma1) * (wp * wp - 1.0) - 2.0 * h.p1 * (j.e + fv) +
                   (h.p2 + j.gamma2) * (wm * wm));
  }
  return val;
}

// H2(v) = v'(R + P2 D'D)v - 2(P2(B + D'C) + D'Lambda + S)'v
//   + sum_j nu_j [ (P2+G2j)(((-1 - E_j + F_j'v)^-)^2 - 1) + 2 P2 (-E_j + F_j'v)
//                  + (P1+G1j)((-1 - E_j + F_j'v)^+)^2 ].
// Satisfies H2(v; P1,P2,Lambda,G1,G2) = H1(-v; P2,P1,Lambda,G2,G1).
inline double eval_h2(const Hamiltonian& h, const Eigen::VectorXd& v) {
  if (v.size() != h.dim()) throw ArgumentError("eval_h2: dimension mismatch");
  const Eigen::VectorXd dv = h.d * v;
  double val = v.dot(h.r * v) + h.p2 * dv.squaredNorm();
  val -= 2.0 * (h.p2 * (h.b.dot(v) + h.c.dot(dv)) + h.lambda.dot(dv) + h.s.dot(v));
  for (const JumpTerm& j : h.jumps) {
    const double fv = j.f.dot(v);
    const double w = -1.0 - j.e + fv;
    const double wp = positive_part(w);
    const double wm = negative_part(w);
    val += j.nu * ((h.p2 + j.gamma2) * (wm * wm - 1.0) + 2.0 * h.p2 * (-j.e + fv) +
                   (h.p1 + j.gamma1) * (wp * wp));
  }
  return val;
}

inline double eval(const Hamiltonian& h, Branch branch, const Eigen::VectorXd& v) {
  return branch == Branch::h1 ? eval_h1(h, v) : eval_h2(h, v);
}

// Gradient of the selected branch. Both branches are convex and C^1: the
// kinked squares (w^+)^2 and (w^-)^2 have continuous derivatives 2w^+ and
// -2w^-.
inline Eigen::VectorXd gradient(const Hamiltonian& h, Branch branch, const Eigen::VectorXd& v) {
  if (v.size() != h.dim()) throw ArgumentError("gradient: dimension mismatch");
  Eigen::VectorXd g;
  if (branch == Branch::h1) {
    g = 2.0 * (h.r * v) + 2.0 * h.p1 * (h.d.transpose() * (h.d * v));
    g += 2.0 * (h.p1 * (h.b + h.d.transpose() * h.c) + h.d.transpose() * h.lambda + h.s);
    for (const JumpTerm& j : h.jumps) {
      const double w = 1.0 + j.e + j.f.dot(v);
      const double slope = (h.p1 + j.gamma1) * positive_part(w) - h.p1 -
                           (h.p2 + j.gamma2) * negative_part(w);
      g += (2.0 * j.nu * slope) * j.f;
    }
  } else {
    g = 2.0 * (h.r * v) + 2.0 * h.p2 * (h.d.transpose() * (h.d * v));
    g -= 2.0 * (h.p2 * (h.b + h.d.transpose() * h.c) + h.d.transpose() * h.lambda + h.s);
    for (const JumpTerm& j : h.jumps) {
      const double w = -1.0 - j.e + j.f.dot(v);
      const double slope = h.p2 + (h.p1 + j.gamma1) * positive_part(w) -
                           (h.p2 + j.gamma2) * negative_part(w);
      g += (2.0 * j.nu * slope) * j.f;
    }
  }
  return g;
}

// Gradient Lipschitz bound: twice the quadratic-part top eigenvalue plus the
// worst-case jump curvature sum_j nu_j max(p1+g1j, p2+g2j) |f_j|^2.
inline double gradient_lipschitz_bound(const Hamiltonian& h, Branch branch) {
  const double p = branch == Branch::h1 ? h.p1 : h.p2;
  Eigen::MatrixXd m = h.r + p * (h.d.transpose() * h.d);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()),
                                                    Eigen::EigenvaluesOnly);
  double lip = 2.0 * std::max(0.0, es.eigenvalues().maxCoeff());
  for (const JumpTerm& j : h.jumps) {
    lip += 2.0 * j.nu * std::max(h.p1 + j.gamma1, h.p2 + j.gamma2) * j.f.squaredNorm();
  }
  return lip;
}

struct MinimizeOptions {
  std::optional<double> radius;  // intersect the cone with {|v| <= radius}
  double tol = 1e-10;            // projected-gradient stationarity tolerance
  int max_iterations = 100000;
};

struct MinimizeResult {
  Eigen::VectorXd minimizer;
  double value = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

// Accelerated projected gradient descent from v = 0 with monotone restarts.
// Termination: |v - proj(v - grad(v)/L)| <= tol, where L is the analytic
// gradient Lipschitz bound. The objective can have flat directions; the
// contract is "a minimizer", deterministically the one reached from 0.
inline MinimizeResult minimize(const Hamiltonian& h, Branch branch, const Cone& cone,
                               const MinimizeOptions& opts = {}) {
  h.validate();
  if (cone.dim() != h.dim()) throw ArgumentError("minimize: cone dimension mismatch");
  if (opts.radius && !(*opts.radius >= 0.0)) throw ArgumentError("minimize: negative radius");
  if (!(opts.tol > 0.0)) throw ArgumentError("minimize: tolerance must be positive");

  const auto proj = [&](const Eigen::VectorXd& x) {
    return opts.radius ? cone.project_ball(x, *opts.radius) : cone.project(x);
  };
  const double lip = std::max(gradient_lipschitz_bound(h, branch), 1e-12);

  Eigen::VectorXd v = Eigen::VectorXd::Zero(h.dim());
  Eigen::VectorXd y = v;
  double fv = eval(h, branch, v);
  double theta = 1.0;

  MinimizeResult out;
  for (int iter = 1; iter <= opts.max_iterations; ++iter) {
    Eigen::VectorXd gy = gradient(h, branch, y);
    Eigen::VectorXd cand = proj(y - gy / lip);
    double fcand = eval(h, branch, cand);
    if (!std::isfinite(fcand)) throw NumericError("minimize: non-finite objective");
    if (fcand > fv) {
      // Momentum overshoot: fall back to a plain projected-gradient step.
      cand = proj(v - gradient(h, branch, v) / lip);
      fcand = eval(h, branch, cand);
      theta = 1.0;
    }
    Eigen::VectorXd gc = gradient(h, branch, cand);
    const double residual = (cand - proj(cand - gc / lip)).norm();
    const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
    y = cand + ((theta - 1.0) / theta_next) * (cand - v);
    v = cand;
    fv = fcand;
    theta = theta_next;
    if (residual <= opts.tol) {
      out.minimizer = v;
      out.value = fv;
      out.iterations = iter;
      out.residual = residual;
      return out;
    }
  }
  throw ConvergenceError("minimize: iteration budget exhausted");
}

// Exact minimizer over an interval for m == 1, by breakpoint enumeration:
// the objective is piecewise quadratic with kinks where 1 + e_j + f_j v = 0
// (branch H1) or -1 - e_j + f_j v = 0 (branch H2); each piece's vertex and
// the piece endpoints are the only candidates.
inline MinimizeResult exact_minimize_1d(const Hamiltonian& h, Branch branch, double lo,
                                        double hi) {
  h.validate();
  if (h.dim() != 1) throw ArgumentError("exact_minimize_1d: control dimension must be 1");
  if (!(lo <= hi)) throw ArgumentError("exact_minimize_1d: empty interval");

  std::vector<double> cuts{lo, hi};
  for (const JumpTerm& j : h.jumps) {
    const double f = j.f[0];
    if (f == 0.0) continue;
    const double kink = branch == Branch::h1 ? -(1.0 + j.e) / f : (1.0 + j.e) / f;
    if (kink > lo && kink < hi) cuts.push_back(kink);
  }
  std::sort(cuts.begin(), cuts.end());

  std::vector<double> candidates = cuts;
  const double base_p = branch == Branch::h1 ? h.p1 : h.p2;
  for (size_t piece = 0; piece + 1 < cuts.size(); ++piece) {
    const double a0 = cuts[piece];
    const double a1 = cuts[piece + 1];
    if (!(a1 > a0)) continue;
    const double mid = 0.5 * (a0 + a1);
    // Quadratic and linear coefficients of the active piece.
    double qa = h.r(0, 0) + base_p * h.d.col(0).squaredNorm();
    double qb;
    const double drift = h.p1 * (h.b[0] + h.d.col(0).dot(h.c)) + h.d.col(0).dot(h.lambda) + h.s[0];
    const double drift2 = h.p2 * (h.b[0] + h.d.col(0).dot(h.c)) + h.d.col(0).dot(h.lambda) + h.s[0];
    qb = branch == Branch::h1 ? 2.0 * drift : -2.0 * drift2;
    for (const JumpTerm& j : h.jumps) {
      const double f = j.f[0];
      if (branch == Branch::h1) {
        const double w = 1.0 + j.e + f * mid;
        if (w >= 0.0) {
          qa += j.nu * (h.p1 + j.gamma1) * f * f;
          qb += j.nu * (2.0 * (h.p1 + j.gamma1) * (1.0 + j.e) * f - 2.0 * h.p1 * f);
        } else {
          qa += j.nu * (h.p2 + j.gamma2) * f * f;
          qb += j.nu * (2.0 * (h.p2 + j.gamma2) * (1.0 + j.e) * f - 2.0 * h.p1 * f);
        }
      } else {
        const double w = -1.0 - j.e + f * mid;
        if (w <= 0.0) {
          qa += j.nu * (h.p2 + j.gamma2) * f * f;
          qb += j.nu * (2.0 * (h.p2 + j.gamma2) * (-1.0 - j.e) * f + 2.0 * h.p2 * f);
        } else {
          qa += j.nu * (h.p1 + j.gamma1) * f * f;
          qb += j.nu * (2.0 * (h.p1 + j.gamma1) * (-1.0 - j.e) * f + 2.0 * h.p2 * f);
        }
      }
    }
    if (qa > 0.0) {
      const double vertex = -qb / (2.0 * qa);
      if (vertex > a0 && vertex < a1) candidates.push_back(vertex);
    }
  }

  MinimizeResult out;
  out.minimizer = Eigen::VectorXd::Zero(1);
  out.value = std::numeric_limits<double>::infinity();
  Eigen::VectorXd point(1);
  for (double cand : candidates) {
    point[0] = cand;
    const double val = eval(h, branch, point);
    if (val < out.value) {
      out.value = val;
      out.minimizer = point;
    }
  }
  out.iterations = static_cast<int>(candidates.size());
  return out;
}

}  // namespace jumplq
