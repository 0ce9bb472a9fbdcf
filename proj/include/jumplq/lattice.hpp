#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "jumplq/errors.hpp"
#include "jumplq/rng.hpp"

namespace jumplq {

// ---------------------------------------------------------------------------
// Simplex indexing for recombining jump counts.
//
// A node after i steps is (counts c, up-moves b) with c a vector of J
// nonnegative mark counts, sum(c) <= i, and 0 <= b <= i. Count vectors are
// ranked in lexicographic order (c_0 most significant, smaller values first).
// ---------------------------------------------------------------------------

class SimplexIndex {
 public:
  SimplexIndex(int marks, int max_sum) : marks_(marks), max_sum_(max_sum) {
    if (marks < 0 || max_sum < 0) throw ArgumentError("SimplexIndex: negative dimensions");
    s_.assign(marks_ + 1, std::vector<int64_t>(max_sum_ + 1, 1));
    for (int d = 1; d <= marks_; ++d)
      for (int x = 1; x <= max_sum_; ++x) s_[d][x] = s_[d][x - 1] + s_[d - 1][x];
  }

  int marks() const { return marks_; }
  int max_sum() const { return max_sum_; }

  // Number of count vectors with sum <= n.
  int64_t simplex_size(int n) const {
    if (n < 0 || n > max_sum_) throw ArgumentError("SimplexIndex: sum bound out of range");
    return s_[marks_][n];
  }

  int64_t rank(const std::vector<int>& c, int n) const {
    check(c, n);
    int rem = n;
    int64_t r = 0;
    for (int t = 0; t < marks_; ++t) {
      const int d = marks_ - 1 - t;
      r += s_[d + 1][rem] - s_[d + 1][rem - c[t]];
      rem -= c[t];
    }
    return r;
  }

  std::vector<int> unrank(int64_t r, int n) const {
    if (n < 0 || n > max_sum_ || r < 0 || r >= simplex_size(n))
      throw ArgumentError("SimplexIndex: rank out of range");
    std::vector<int> c(marks_, 0);
    int rem = n;
    for (int t = 0; t < marks_; ++t) {
      const int d = marks_ - 1 - t;
      int a = 0;
      while (a + 1 <= rem && s_[d + 1][rem] - s_[d + 1][rem - a - 1] <= r) ++a;
      r -= s_[d + 1][rem] - s_[d + 1][rem - a];
      c[t] = a;
      rem -= a;
    }
    return c;
  }

  // Lexicographic successor among vectors with sum <= n; false past the last.
  bool next_vector(std::vector<int>& c, int n) const {
    const int J = marks_;
    for (int t = J - 1; t >= 0; --t) {
      long long prefix = 0;
      for (int s = 0; s <= t; ++s) prefix += c[s];
      if (prefix + 1 <= n) {
        c[t] += 1;
        for (int s = t + 1; s < J; ++s) c[s] = 0;
        return true;
      }
    }
    return false;
  }

 private:
  void check(const std::vector<int>& c, int n) const {
    if (static_cast<int>(c.size()) != marks_) throw ArgumentError("SimplexIndex: wrong count length");
    if (n < 0 || n > max_sum_) throw ArgumentError("SimplexIndex: sum bound out of range");
    long long sum = 0;
    for (int v : c) {
      if (v < 0) throw ArgumentError("SimplexIndex: negative count");
      sum += v;
    }
    if (sum > n) throw ArgumentError("SimplexIndex: counts exceed sum bound");
  }

  int marks_, max_sum_;
  std::vector<std::vector<int64_t>> s_;
};

// ---------------------------------------------------------------------------
// Generator algebra: drivers affine in the value argument.
//
//   f_i = source + own_y*y_i + sum_{j!=i} cross_y_j*y_j + own_z*z_i
//         + sum_k gamma_k*nu_k*phi_{ik}
//         + sum over cross-jump terms: scale * map( sum_k nu_k * m_k[j] )
//
// where m_k[j] is the post-jump branch mean of component j (the lattice
// substitute for y_j + phi_{jk}; both agree in the continuous limit, the
// branch mean preserves monotonicity step by step).
// ---------------------------------------------------------------------------

enum class JumpMap { identity, positive_part, clamp_unit };

inline double apply_jump_map(JumpMap m, double x) {
  switch (m) {
    case JumpMap::identity: return x;
    case JumpMap::positive_part: return x > 0.0 ? x : 0.0;
    case JumpMap::clamp_unit: return std::min(std::max(x, -1.0), 1.0);
  }
  throw ArgumentError("apply_jump_map: unknown map");
}

struct CrossJumpTerm {
  int source_component = 0;
  double scale = 0.0;
  JumpMap map = JumpMap::positive_part;
};

struct ComponentGenerator {
  double source = 0.0;
  double own_y = 0.0;
  double own_z = 0.0;
  std::vector<double> cross_y;  // empty or length ell; own entry must be 0
  std::vector<double> gamma;    // empty or length J
  std::vector<CrossJumpTerm> cross_jumps;
};

struct GeneratorAlgebra {
  std::vector<ComponentGenerator> components;

  int dim() const { return static_cast<int>(components.size()); }

  void validate(int ell, int marks) const {
    if (dim() != ell) throw ArgumentError("generator: component count mismatch");
    for (int i = 0; i < ell; ++i) {
      const auto& g = components[i];
      if (!std::isfinite(g.source) || !std::isfinite(g.own_y) || !std::isfinite(g.own_z))
        throw NumericError("generator: non-finite coefficient");
      if (!g.cross_y.empty()) {
        if (static_cast<int>(g.cross_y.size()) != ell)
          throw ArgumentError("generator: cross_y length mismatch");
        if (g.cross_y[i] != 0.0)
          throw ArgumentError("generator: own-index cross_y must be zero (use own_y)");
        for (double v : g.cross_y)
          if (!std::isfinite(v)) throw NumericError("generator: non-finite cross_y");
      }
      if (!g.gamma.empty() && static_cast<int>(g.gamma.size()) != marks)
        throw ArgumentError("generator: gamma length mismatch");
      for (double v : g.gamma)
        if (!std::isfinite(v)) throw NumericError("generator: non-finite gamma");
      for (const auto& cj : g.cross_jumps) {
        if (cj.source_component < 0 || cj.source_component >= ell)
          throw ArgumentError("generator: cross-jump source out of range");
        if (cj.source_component == i)
          throw ArgumentError("generator: cross-jump source must differ from own component");
        if (!std::isfinite(cj.scale)) throw NumericError("generator: non-finite cross-jump scale");
      }
    }
  }

  // Bound on the generator's Lipschitz constant across all arguments.
  double lipschitz(const std::vector<double>& nus) const {
    const double nu_total = std::accumulate(nus.begin(), nus.end(), 0.0);
    double worst = 0.0;
    for (const auto& g : components) {
      double l = std::fabs(g.own_y) + std::fabs(g.own_z);
      for (double v : g.cross_y) l += std::fabs(v);
      for (size_t k = 0; k < g.gamma.size(); ++k) l += std::fabs(g.gamma[k]) * nus[k];
      for (const auto& cj : g.cross_jumps) l += std::fabs(cj.scale) * nu_total;
      worst = std::max(worst, l);
    }
    return worst;
  }

  // phi is component-major (comp*J + k); hsum[j] = sum_k nu_k * m_k[j].
  void eval(const double* y, const double* z, const double* phi, const double* hsum,
            const std::vector<double>& nus, double* out) const {
    const int ell = dim();
    const int J = static_cast<int>(nus.size());
    for (int i = 0; i < ell; ++i) {
      const auto& g = components[i];
      double v = g.source + g.own_y * y[i] + g.own_z * z[i];
      if (!g.cross_y.empty())
        for (int j = 0; j < ell; ++j)
          if (j != i) v += g.cross_y[j] * y[j];
      if (!g.gamma.empty())
        for (int k = 0; k < J; ++k) v += g.gamma[k] * nus[k] * phi[i * J + k];
      for (const auto& cj : g.cross_jumps)
        v += cj.scale * apply_jump_map(cj.map, hsum[cj.source_component]);
      out[i] = v;
    }
  }
};

// ---------------------------------------------------------------------------
// Lattice specification and solutions.
// ---------------------------------------------------------------------------

using TerminalFn = std::function<Eigen::VectorXd(double, const std::vector<int>&)>;

// Terminal data of the form clip(const + level_coef*w + sum_k weight_k*c_k).
struct AffineTerminal {
  Eigen::VectorXd constant;
  Eigen::VectorXd level_coef;
  Eigen::MatrixXd count_weight;  // ell x J
  Eigen::VectorXd lo, hi;        // may be +-infinity

  TerminalFn function() const {
    const Eigen::VectorXd cst = constant, lev = level_coef, l = lo, h = hi;
    const Eigen::MatrixXd w = count_weight;
    return [cst, lev, w, l, h](double bm, const std::vector<int>& counts) {
      Eigen::VectorXd g = cst + bm * lev;
      for (int k = 0; k < w.cols(); ++k) g += w.col(k) * static_cast<double>(counts[k]);
      for (int i = 0; i < g.size(); ++i) g(i) = std::min(std::max(g(i), l(i)), h(i));
      return g;
    };
  }
};

enum class LatticeScheme { implicit_step, explicit_step };

struct LatticeBsdej {
  int ell = 1;
  int steps = 1;
  double horizon = 1.0;
  std::vector<double> intensities;
  GeneratorAlgebra generator;
  TerminalFn terminal;

  int marks() const { return static_cast<int>(intensities.size()); }
  double dt() const { return horizon / steps; }

  void validate() const {
    if (ell < 1) throw ArgumentError("lattice: ell must be >= 1");
    if (steps < 1) throw ArgumentError("lattice: steps must be >= 1");
    if (!(horizon > 0.0) || !std::isfinite(horizon))
      throw ArgumentError("lattice: horizon must be positive and finite");
    double nu_total = 0.0;
    for (double nu : intensities) {
      if (!(nu > 0.0) || !std::isfinite(nu)) throw ArgumentError("lattice: intensities must be positive");
      nu_total += nu;
    }
    if (!terminal) throw ArgumentError("lattice: terminal function not set");
    generator.validate(ell, marks());
    if (dt() * nu_total >= 1.0)
      throw StepSizeError("lattice: dt * total intensity must stay below 1");
    if (generator.lipschitz(intensities) * dt() >= 1.0)
      throw StepSizeError("lattice: dt * generator Lipschitz bound must stay below 1");
  }
};

namespace detail {

inline long double simplex_size_ld(int n, int d) {
  long double v = 1.0L;
  for (int k = 1; k <= d; ++k) v = v * (n + k) / k;
  return v;
}

inline long double lattice_nodes_ld(int steps, int marks) {
  long double total = 0.0L;
  for (int i = 0; i <= steps; ++i) {
    total += (i + 1) * simplex_size_ld(i, marks);
    if (total > 1e18L) return total;
  }
  return total;
}

constexpr double kLatticeNodeBudget = 1e8;
constexpr double kStreamingSliceBudget = 5e7;

struct StepMatrices {
  // Row-major ell x ell: coupling A and, for implicit stepping, (I - dt*A)^-1.
  std::vector<double> a, inv;
};

inline StepMatrices build_step_matrices(const LatticeBsdej& spec, LatticeScheme scheme) {
  const int ell = spec.ell;
  StepMatrices m;
  m.a.assign(static_cast<size_t>(ell) * ell, 0.0);
  for (int i = 0; i < ell; ++i) {
    const auto& g = spec.generator.components[i];
    m.a[i * ell + i] = g.own_y;
    if (!g.cross_y.empty())
      for (int j = 0; j < ell; ++j)
        if (j != i) m.a[i * ell + j] = g.cross_y[j];
  }
  if (scheme == LatticeScheme::implicit_step) {
    Eigen::MatrixXd mat = Eigen::MatrixXd::Identity(ell, ell);
    for (int i = 0; i < ell; ++i)
      for (int j = 0; j < ell; ++j) mat(i, j) -= spec.dt() * m.a[i * ell + j];
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(mat);
    Eigen::MatrixXd inv = lu.inverse();
    if (!inv.allFinite()) throw NumericError("lattice: implicit step matrix is singular");
    m.inv.assign(static_cast<size_t>(ell) * ell, 0.0);
    for (int i = 0; i < ell; ++i)
      for (int j = 0; j < ell; ++j) m.inv[i * ell + j] = inv(i, j);
  }
  return m;
}

struct LatticeWork {
  std::vector<double> ey, z, hsum, alpha, ynew, ablend, zero_y;
  std::vector<double> m;    // (J+1) x ell, outcome-major
  std::vector<double> phi;  // ell x J, component-major
  std::vector<int> c;
  std::vector<int64_t> succ;

  LatticeWork(int ell, int J)
      : ey(ell), z(ell), hsum(ell), alpha(ell), ynew(ell), ablend(ell), zero_y(ell, 0.0),
        m(static_cast<size_t>(J + 1) * ell), phi(static_cast<size_t>(ell) * std::max(J, 1)),
        c(J, 0), succ(J + 1) {}
};

// Fills `cur` (slice i) from `next` (slice i+1). The hook sees each node's
// solved value together with the statistics the step used.
template <class Hook>
void backward_slice(const LatticeBsdej& spec, const SimplexIndex& idx, int i,
                    const double* next, double* cur, LatticeScheme scheme,
                    const StepMatrices& sm, LatticeWork& w, Hook&& hook) {
  const int ell = spec.ell;
  const int J = spec.marks();
  const double dt = spec.dt();
  const double sdt = std::sqrt(dt);
  const double inv2sdt = 1.0 / (2.0 * sdt);
  double qsum = 0.0;
  for (double nu : spec.intensities) qsum += nu * dt;
  const double q0 = 1.0 - qsum;

  std::fill(w.c.begin(), w.c.end(), 0);
  int64_t crank = 0;
  do {
    w.succ[0] = idx.rank(w.c, i + 1);
    for (int k = 0; k < J; ++k) {
      w.c[k] += 1;
      w.succ[k + 1] = idx.rank(w.c, i + 1);
      w.c[k] -= 1;
    }
    for (int b = 0; b <= i; ++b) {
      for (int o = 0; o <= J; ++o) {
        const double* dn = next + (w.succ[o] * (i + 2) + b) * ell;
        const double* up = dn + ell;
        for (int comp = 0; comp < ell; ++comp)
          w.m[o * ell + comp] = 0.5 * (dn[comp] + up[comp]);
      }
      for (int comp = 0; comp < ell; ++comp) {
        double ey = q0 * w.m[comp];
        double eup = 0.0, edn = 0.0;
        {
          const double* dn = next + (w.succ[0] * (i + 2) + b) * ell;
          edn = q0 * dn[comp];
          eup = q0 * dn[ell + comp];
        }
        double hs = 0.0;
        for (int k = 0; k < J; ++k) {
          const double qk = spec.intensities[k] * dt;
          const double mk = w.m[(k + 1) * ell + comp];
          ey += qk * mk;
          const double* dn = next + (w.succ[k + 1] * (i + 2) + b) * ell;
          edn += qk * dn[comp];
          eup += qk * dn[ell + comp];
          w.phi[comp * J + k] = mk - w.m[comp];
          hs += spec.intensities[k] * mk;
        }
        w.ey[comp] = ey;
        w.z[comp] = (eup - edn) * inv2sdt;
        w.hsum[comp] = hs;
      }
      spec.generator.eval(w.zero_y.data(), w.z.data(), w.phi.data(), w.hsum.data(),
                          spec.intensities, w.alpha.data());
      double* out = cur + (crank * (i + 1) + b) * ell;
      if (scheme == LatticeScheme::implicit_step) {
        for (int r = 0; r < ell; ++r) {
          double acc = 0.0;
          for (int ccol = 0; ccol < ell; ++ccol)
            acc += sm.inv[r * ell + ccol] * (w.ey[ccol] + dt * w.alpha[ccol]);
          w.ynew[r] = acc;
        }
      } else {
        for (int r = 0; r < ell; ++r) {
          double acc = 0.0;
          for (int ccol = 0; ccol < ell; ++ccol) acc += sm.a[r * ell + ccol] * w.ey[ccol];
          w.ablend[r] = acc;
        }
        for (int r = 0; r < ell; ++r) w.ynew[r] = w.ey[r] + dt * (w.alpha[r] + w.ablend[r]);
      }
      for (int r = 0; r < ell; ++r) {
        if (!std::isfinite(w.ynew[r])) throw NumericError("lattice: non-finite node value");
        out[r] = w.ynew[r];
      }
      hook(i, crank, b, w.ynew.data(), w.ey.data(), w.z.data(), w.phi.data(), w.hsum.data());
    }
    ++crank;
  } while (idx.next_vector(w.c, i));
}

inline void fill_terminal(const LatticeBsdej& spec, const SimplexIndex& idx, double* slice) {
  const int N = spec.steps;
  const int ell = spec.ell;
  const double sdt = std::sqrt(spec.dt());
  std::vector<int> c(spec.marks(), 0);
  int64_t crank = 0;
  do {
    for (int b = 0; b <= N; ++b) {
      const double bm = (2.0 * b - N) * sdt;
      Eigen::VectorXd g = spec.terminal(bm, c);
      if (g.size() != ell) throw ArgumentError("lattice: terminal value has wrong dimension");
      double* out = slice + (crank * (N + 1) + b) * ell;
      for (int r = 0; r < ell; ++r) {
        if (!std::isfinite(g(r))) throw NumericError("lattice: non-finite terminal value");
        out[r] = g(r);
      }
    }
    ++crank;
  } while (idx.next_vector(c, N));
}

struct NullHook {
  void operator()(int, int64_t, int, const double*, const double*, const double*,
                  const double*, const double*) const noexcept {}
};

}  // namespace detail

class LatticeSolution {
 public:
  LatticeSolution(const LatticeBsdej& spec, SimplexIndex idx, std::vector<std::vector<double>> slices)
      : ell_(spec.ell), steps_(spec.steps), horizon_(spec.horizon), nus_(spec.intensities),
        idx_(std::move(idx)), slices_(std::move(slices)) {}

  int ell() const { return ell_; }
  int steps() const { return steps_; }
  double horizon() const { return horizon_; }
  double dt() const { return horizon_ / steps_; }
  int marks() const { return static_cast<int>(nus_.size()); }

  int64_t ranks(int i) const { return idx_.simplex_size(i); }
  int levels(int i) const { return i + 1; }
  int64_t nodes() const {
    int64_t total = 0;
    for (int i = 0; i <= steps_; ++i) total += ranks(i) * levels(i);
    return total;
  }

  std::vector<int> counts(int i, int64_t crank) const { return idx_.unrank(crank, i); }
  int level(int i, int b) const { return 2 * b - i; }
  double brownian_value(int i, int b) const { return level(i, b) * std::sqrt(dt()); }

  Eigen::VectorXd y(int i, int64_t crank, int b) const {
    const double* p = node(i, crank, b);
    return Eigen::Map<const Eigen::VectorXd>(p, ell_);
  }

  Eigen::VectorXd root_y() const { return y(0, 0, 0); }

  // Branch mean after outcome o at (i, crank, b): o = 0 is "no jump",
  // o = k+1 is mark k. Requires i < steps.
  Eigen::VectorXd branch_mean(int i, int64_t crank, int b, int outcome) const {
    auto [dn, up] = branch(i, crank, b, outcome);
    return 0.5 * (dn + up);
  }

  Eigen::VectorXd expectation(int i, int64_t crank, int b) const {
    const double q0 = 1.0 - dt() * std::accumulate(nus_.begin(), nus_.end(), 0.0);
    Eigen::VectorXd e = q0 * branch_mean(i, crank, b, 0);
    for (int k = 0; k < marks(); ++k) e += dt() * nus_[k] * branch_mean(i, crank, b, k + 1);
    return e;
  }

  Eigen::VectorXd z(int i, int64_t crank, int b) const {
    const double q0 = 1.0 - dt() * std::accumulate(nus_.begin(), nus_.end(), 0.0);
    Eigen::VectorXd eup = Eigen::VectorXd::Zero(ell_), edn = Eigen::VectorXd::Zero(ell_);
    {
      auto [dn, up] = branch(i, crank, b, 0);
      edn += q0 * dn;
      eup += q0 * up;
    }
    for (int k = 0; k < marks(); ++k) {
      auto [dn, up] = branch(i, crank, b, k + 1);
      edn += dt() * nus_[k] * dn;
      eup += dt() * nus_[k] * up;
    }
    return (eup - edn) / (2.0 * std::sqrt(dt()));
  }

  // ell x J matrix of jump compensations m_k - m_0.
  Eigen::MatrixXd phi(int i, int64_t crank, int b) const {
    Eigen::MatrixXd out(ell_, marks());
    const Eigen::VectorXd m0 = branch_mean(i, crank, b, 0);
    for (int k = 0; k < marks(); ++k) out.col(k) = branch_mean(i, crank, b, k + 1) - m0;
    return out;
  }

  const SimplexIndex& index() const { return idx_; }
  const std::vector<double>& slice(int i) const { return slices_.at(i); }

 private:
  const double* node(int i, int64_t crank, int b) const {
    if (i < 0 || i > steps_) throw ArgumentError("lattice solution: slice out of range");
    if (crank < 0 || crank >= ranks(i)) throw ArgumentError("lattice solution: rank out of range");
    if (b < 0 || b > i) throw ArgumentError("lattice solution: level out of range");
    return slices_[i].data() + (crank * (i + 1) + b) * ell_;
  }

  std::pair<Eigen::VectorXd, Eigen::VectorXd> branch(int i, int64_t crank, int b, int outcome) const {
    if (i >= steps_) throw ArgumentError("lattice solution: no successor slice");
    if (outcome < 0 || outcome > marks()) throw ArgumentError("lattice solution: outcome out of range");
    std::vector<int> c = counts(i, crank);
    if (outcome > 0) c[outcome - 1] += 1;
    const int64_t r = idx_.rank(c, i + 1);
    const double* dn = slices_[i + 1].data() + (r * (i + 2) + b) * ell_;
    return {Eigen::Map<const Eigen::VectorXd>(dn, ell_),
            Eigen::Map<const Eigen::VectorXd>(dn + ell_, ell_)};
  }

  int ell_, steps_;
  double horizon_;
  std::vector<double> nus_;
  SimplexIndex idx_;
  std::vector<std::vector<double>> slices_;
};

namespace detail {

template <class Hook>
LatticeSolution solve_lattice_impl(const LatticeBsdej& spec, LatticeScheme scheme, Hook&& hook) {
  spec.validate();
  if (lattice_nodes_ld(spec.steps, spec.marks()) > kLatticeNodeBudget)
    throw CapacityError("lattice: node count exceeds in-memory budget (1e8); use the streaming root solver");
  SimplexIndex idx(spec.marks(), spec.steps);
  std::vector<std::vector<double>> slices(spec.steps + 1);
  for (int i = 0; i <= spec.steps; ++i)
    slices[i].assign(static_cast<size_t>(idx.simplex_size(i)) * (i + 1) * spec.ell, 0.0);
  fill_terminal(spec, idx, slices[spec.steps].data());
  const StepMatrices sm = build_step_matrices(spec, scheme);
  LatticeWork work(spec.ell, spec.marks());
  for (int i = spec.steps - 1; i >= 0; --i)
    backward_slice(spec, idx, i, slices[i + 1].data(), slices[i].data(), scheme, sm, work, hook);
  return LatticeSolution(spec, std::move(idx), std::move(slices));
}

}  // namespace detail

inline LatticeSolution solve_lattice(const LatticeBsdej& spec,
                                     LatticeScheme scheme = LatticeScheme::implicit_step) {
  return detail::solve_lattice_impl(spec, scheme, detail::NullHook{});
}

// Root statistics from a two-slice streaming sweep; memory is bounded by the
// widest slice rather than the whole lattice.
struct RootValues {
  Eigen::VectorXd y;
  Eigen::VectorXd z;
  Eigen::MatrixXd phi;  // ell x J
  int64_t nodes = 0;
};

inline RootValues solve_lattice_root(const LatticeBsdej& spec,
                                     LatticeScheme scheme = LatticeScheme::implicit_step) {
  spec.validate();
  SimplexIndex idx(spec.marks(), spec.steps);
  const int N = spec.steps;
  const int ell = spec.ell;
  const long double widest =
      static_cast<long double>(idx.simplex_size(N)) * (N + 1) * ell;
  if (widest > detail::kStreamingSliceBudget)
    throw CapacityError("lattice: widest slice exceeds the streaming budget (5e7 values)");

  std::vector<double> next(static_cast<size_t>(idx.simplex_size(N)) * (N + 1) * ell);
  std::vector<double> cur(next.size());
  detail::fill_terminal(spec, idx, next.data());
  const detail::StepMatrices sm = detail::build_step_matrices(spec, scheme);
  detail::LatticeWork work(ell, spec.marks());
  int64_t nodes = static_cast<int64_t>(idx.simplex_size(N)) * (N + 1);
  for (int i = N - 1; i >= 0; --i) {
    detail::backward_slice(spec, idx, i, next.data(), cur.data(), scheme, sm, work,
                           detail::NullHook{});
    nodes += idx.simplex_size(i) * (i + 1);
    if (i > 0) std::swap(next, cur);
  }

  RootValues out;
  out.nodes = nodes;
  out.y = Eigen::Map<const Eigen::VectorXd>(cur.data(), ell);
  // Root z and phi from the retained slice-1 buffer.
  const int J = spec.marks();
  const double dt = spec.dt();
  const double q0 = 1.0 - dt * std::accumulate(spec.intensities.begin(), spec.intensities.end(), 0.0);
  std::vector<int> c(J, 0);
  std::vector<int64_t> succ(J + 1);
  succ[0] = idx.rank(c, 1);
  for (int k = 0; k < J; ++k) {
    c[k] += 1;
    succ[k + 1] = idx.rank(c, 1);
    c[k] -= 1;
  }
  Eigen::VectorXd eup = Eigen::VectorXd::Zero(ell), edn = Eigen::VectorXd::Zero(ell);
  Eigen::VectorXd m0 = Eigen::VectorXd::Zero(ell);
  out.phi.resize(ell, J);
  for (int o = 0; o <= J; ++o) {
    const double* dn = next.data() + (succ[o] * 2 + 0) * ell;
    const double* up = dn + ell;
    const double q = (o == 0) ? q0 : spec.intensities[o - 1] * dt;
    for (int r = 0; r < ell; ++r) {
      edn(r) += q * dn[r];
      eup(r) += q * up[r];
    }
    if (o == 0)
      for (int r = 0; r < ell; ++r) m0(r) = 0.5 * (dn[r] + up[r]);
    else
      for (int r = 0; r < ell; ++r) out.phi(r, o - 1) = 0.5 * (dn[r] + up[r]);
  }
  for (int k = 0; k < J; ++k) out.phi.col(k) -= m0;
  out.z = (eup - edn) / (2.0 * std::sqrt(dt));
  return out;
}

// ---------------------------------------------------------------------------
// Order comparison between two lattice solutions.
//
// `lower` and `upper` must share ell, steps, horizon, and intensities. The
// certificate declares structural properties of the lower generator; the
// checker verifies the declaration against the coefficients (CertificateError
// on mismatch) and then establishes, node by node, the conditions under which
// the discrete scheme provably preserves order:
//   - declared jump-coefficient floor at or above -1,
//   - nonnegative cross couplings and cross-jump scales on the lower side,
//   - nonnegative branch weights (jump and no-jump) for the lower generator,
//   - terminal dominance at every terminal node,
//   - driver dominance at every interior node of the upper solution.
// `pass` requires certification and a nonpositive gap (up to `tol`) between
// the solutions at every node.
// ---------------------------------------------------------------------------

struct ComparisonCertificate {
  double gamma_floor = -1.0;
  bool monotone = true;
};

struct ComparisonReport {
  bool certified = false;
  bool pass = false;
  double max_violation = 0.0;     // max over all nodes of Y_lower - Y_upper
  double max_driver_gap = 0.0;    // max scaled driver excess at upper's nodes
  double max_terminal_gap = 0.0;  // max terminal excess
  double tolerance = 0.0;
  int64_t nodes = 0;
  std::string reason;
};

inline ComparisonReport check_comparison(const LatticeBsdej& lower, const LatticeBsdej& upper,
                                         const ComparisonCertificate& cert = {},
                                         double tol = 1e-10,
                                         LatticeScheme scheme = LatticeScheme::implicit_step) {
  lower.validate();
  upper.validate();
  if (lower.ell != upper.ell || lower.steps != upper.steps || lower.horizon != upper.horizon ||
      lower.intensities != upper.intensities)
    throw ArgumentError("check_comparison: lattices must share dimensions, grid, and intensities");

  const int ell = lower.ell;
  const int J = lower.marks();
  const double dt = lower.dt();
  const double sdt = std::sqrt(dt);
  double qsum = 0.0;
  for (double nu : lower.intensities) qsum += nu * dt;
  const double q0 = 1.0 - qsum;

  // Declaration vs coefficients.
  for (const auto& g : lower.generator.components) {
    for (double gm : g.gamma)
      if (gm < cert.gamma_floor)
        throw CertificateError("check_comparison: declared gamma floor violated by lower generator");
    if (cert.monotone) {
      for (size_t j = 0; j < g.cross_y.size(); ++j)
        if (g.cross_y[j] < 0.0)
          throw CertificateError("check_comparison: monotone declaration violated by negative cross coupling");
      for (const auto& cj : g.cross_jumps)
        if (cj.scale < 0.0)
          throw CertificateError("check_comparison: monotone declaration violated by negative cross-jump scale");
    }
  }

  ComparisonReport rep;
  rep.tolerance = tol;
  rep.certified = true;
  auto fail = [&rep](const std::string& why) {
    if (rep.certified) rep.reason = why;
    rep.certified = false;
  };

  if (!cert.monotone) fail("monotone couplings not declared");
  if (cert.gamma_floor < -1.0) fail("declared jump-coefficient floor below -1");

  constexpr double wtol = -1e-12;
  for (const auto& g : lower.generator.components) {
    const double zmag = std::fabs(g.own_z) * sdt;
    const double drift = (scheme == LatticeScheme::explicit_step) ? dt * g.own_y : 0.0;
    double gsum = 0.0;
    for (size_t k = 0; k < g.gamma.size(); ++k) gsum += g.gamma[k] * lower.intensities[k] * dt;
    for (int k = 0; k < J; ++k) {
      const double gm = g.gamma.empty() ? 0.0 : g.gamma[k];
      if (1.0 + gm + drift - zmag < wtol) {
        fail("nonnegative jump-branch weight fails for the lower generator");
        break;
      }
    }
    if (q0 * (1.0 + drift - zmag) - gsum < wtol)
      fail("nonnegative no-jump branch weight fails for the lower generator");
  }

  // Solve the upper lattice, checking driver dominance at each node.
  std::vector<double> fa(ell), fb(ell);
  auto dominance_hook = [&](int, int64_t, int, const double* ynew, const double* ey,
                            const double* z, const double* phi, const double* hsum) {
    const double* yat = (scheme == LatticeScheme::implicit_step) ? ynew : ey;
    lower.generator.eval(yat, z, phi, hsum, lower.intensities, fa.data());
    upper.generator.eval(yat, z, phi, hsum, upper.intensities, fb.data());
    for (int r = 0; r < ell; ++r) {
      const double gap = (fa[r] - fb[r]) / (1.0 + std::fabs(fb[r]));
      if (gap > rep.max_driver_gap) rep.max_driver_gap = gap;
    }
  };
  LatticeSolution upper_sol = detail::solve_lattice_impl(upper, scheme, dominance_hook);
  if (rep.max_driver_gap > 1e-12) fail("driver dominance fails at an interior node");

  LatticeSolution lower_sol = solve_lattice(lower, scheme);

  // Terminal dominance and global ordering.
  const int N = lower.steps;
  {
    const auto& la = lower_sol.slice(N);
    const auto& lb = upper_sol.slice(N);
    for (size_t p = 0; p < la.size(); ++p)
      rep.max_terminal_gap = std::max(rep.max_terminal_gap, la[p] - lb[p]);
    if (rep.max_terminal_gap > 0.0) fail("terminal dominance fails");
  }
  for (int i = 0; i <= N; ++i) {
    const auto& la = lower_sol.slice(i);
    const auto& lb = upper_sol.slice(i);
    for (size_t p = 0; p < la.size(); ++p)
      rep.max_violation = std::max(rep.max_violation, la[p] - lb[p]);
  }
  rep.nodes = lower_sol.nodes();
  rep.pass = rep.certified && rep.max_violation <= tol;
  return rep;
}

// ---------------------------------------------------------------------------
// Compensated sweep of the square-expansion inequality
//   ((x+y)^+)^2 - (x^+)^2 - 2(1+c)x^+ y + max(c^2,1)(x^+)^2 >= 0
// used by the jump terms. Evaluated in double-double arithmetic so the
// absolute tolerance is meaningful even at the extreme grid magnitudes.
// ---------------------------------------------------------------------------

namespace detail {

struct DD {
  double hi = 0.0, lo = 0.0;
};

inline DD two_sum(double a, double b) {
  const double s = a + b;
  const double bb = s - a;
  return {s, (a - (s - bb)) + (b - bb)};
}

inline DD quick_two_sum(double a, double b) {
  const double s = a + b;
  return {s, b - (s - a)};
}

inline DD two_prod(double a, double b) {
  const double p = a * b;
  return {p, std::fma(a, b, -p)};
}

inline DD dd_add(DD a, DD b) {
  DD s = two_sum(a.hi, b.hi);
  return quick_two_sum(s.hi, s.lo + a.lo + b.lo);
}

inline DD dd_neg(DD a) { return {-a.hi, -a.lo}; }
inline DD dd_sub(DD a, DD b) { return dd_add(a, dd_neg(b)); }

inline DD dd_mul(DD a, DD b) {
  DD p = two_prod(a.hi, b.hi);
  return quick_two_sum(p.hi, p.lo + a.hi * b.lo + a.lo * b.hi);
}

inline double dd_value(DD a) { return a.hi + a.lo; }

}  // namespace detail

inline double elementary_inequality_slack(double x, double y, double c) {
  using detail::DD;
  const double xp = std::max(x, 0.0);
  DD s = detail::two_sum(x, y);
  if (s.hi < 0.0 || (s.hi == 0.0 && s.lo <= 0.0)) s = {0.0, 0.0};
  const DD t1 = detail::dd_mul(s, s);
  const DD xp2 = detail::two_prod(xp, xp);
  const DD one_c = detail::two_sum(1.0, c);
  DD t3 = detail::dd_mul(detail::dd_mul(one_c, DD{xp, 0.0}), DD{y, 0.0});
  t3 = DD{2.0 * t3.hi, 2.0 * t3.lo};
  DD c2 = detail::two_prod(c, c);
  if (c2.hi < 1.0 || (c2.hi == 1.0 && c2.lo < 0.0)) c2 = {1.0, 0.0};
  const DD t4 = detail::dd_mul(c2, xp2);
  return detail::dd_value(detail::dd_add(detail::dd_sub(detail::dd_sub(t1, xp2), t3), t4));
}

struct InequalityReport {
  int64_t samples = 0;
  double min_slack = 0.0;
  double worst_x = 0.0, worst_y = 0.0, worst_c = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

inline InequalityReport check_elementary_inequality(int64_t random_samples = 200000,
                                                    uint64_t seed = 20240801,
                                                    double tol = 1e-12) {
  InequalityReport rep;
  rep.tolerance = tol;
  rep.min_slack = std::numeric_limits<double>::infinity();
  auto visit = [&rep](double x, double y, double c) {
    const double s = elementary_inequality_slack(x, y, c);
    ++rep.samples;
    if (s < rep.min_slack) {
      rep.min_slack = s;
      rep.worst_x = x;
      rep.worst_y = y;
      rep.worst_c = c;
    }
  };
  const double pts[] = {-1000.0, -100.0, -10.0, -2.0, -1.0, -0.5, -1e-8, 0.0,
                        1e-8,    0.5,    1.0,   2.0,  10.0, 100.0, 1000.0};
  const double cs[] = {-1.0, -0.75, -0.5, -0.25, 0.0, 0.5, 1.0, 2.0, 10.0, 100.0, 1000.0};
  for (double x : pts)
    for (double y : pts)
      for (double c : cs) visit(x, y, c);
  SplitStream stream(seed, 0);
  for (int64_t n = 0; n < random_samples; ++n) {
    const double x = -1000.0 + 2000.0 * stream.uniform();
    const double y = -1000.0 + 2000.0 * stream.uniform();
    const double c = -1.0 + 1001.0 * stream.uniform();
    visit(x, y, c);
  }
  rep.pass = rep.min_slack >= -tol;
  return rep;
}

}  // namespace jumplq
