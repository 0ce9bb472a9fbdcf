#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "jumplq/errors.hpp"
#include "jumplq/riccati.hpp"
#include "jumplq/rng.hpp"

namespace jumplq {

// Monte Carlo for the controlled scalar state
//   dX = (A X + B'u - sum_j nu_j (E_j X + F_j'u)) dt + (C X + D u)' dW
//        + sum_j dN_j (E_j X + F_j'u)
// under a feedback law u(t, x), with the quadratic running + terminal cost.
// Streams are counter-based per path, with a fixed number of draws per step,
// so different laws on the same seed see common random numbers.

struct PathConfig {
  int paths = 10000;
  int steps = 200;
  uint64_t seed = 1;
  bool antithetic = false;
  int record_paths = 0;

  void validate() const {
    if (paths < 2) throw ArgumentError("simulate: need at least 2 paths");
    if (steps < 1) throw ArgumentError("simulate: need at least 1 step");
    if (antithetic && paths % 2 != 0)
      throw ArgumentError("simulate: antithetic runs need an even path count");
    if (record_paths < 0 || record_paths > paths)
      throw ArgumentError("simulate: record_paths out of range");
  }
};

struct ControlLaw {
  std::string name;
  std::function<Eigen::VectorXd(double, double)> u;
};

// Piecewise feedback built from a solved equation pair: v1 on the positive
// part of the state, v2 on the negative part.
inline ControlLaw feedback_law(const RiccatiSolution& sol, std::string name = "feedback") {
  return {std::move(name), [s = sol](double t, double x) { return feedback(s, t, x); }};
}

inline ControlLaw constant_law(Eigen::VectorXd u, std::string name = "constant") {
  return {std::move(name), [v = std::move(u)](double, double) { return v; }};
}

inline ControlLaw zero_law(int m) {
  return {"zero", [m](double, double) { return Eigen::VectorXd::Zero(m); }};
}

struct PathSample {
  int path = 0;
  std::vector<double> t;
  std::vector<double> x;
  std::vector<Eigen::VectorXd> u;
};

struct SimReport {
  int paths = 0, steps = 0;
  bool antithetic = false;
  double mean_cost = 0.0, se_cost = 0.0;
  double mean_terminal = 0.0, se_terminal = 0.0;
  double var_terminal = 0.0, se_var_terminal = 0.0;
  double crossing_fraction = 0.0;
};

namespace detail {

struct PathOutcome {
  double cost = 0.0;
  double terminal = 0.0;
  bool crossed = false;
};

inline PathOutcome run_path(const LqCoefficients& lq, double x0, const ControlLaw& law,
                            int steps, uint64_t seed, uint64_t stream_id, bool negate_normals,
                            PathSample* sample) {
  const int m = lq.m, n = lq.n;
  const int J = static_cast<int>(lq.marks.size());
  const double T = lq.horizon;
  const double dt = T / steps;
  const double sdt = std::sqrt(dt);
  SplitStream stream(seed, stream_id);

  PathOutcome out;
  double x = x0;
  Eigen::VectorXd dw(n);
  if (sample) {
    sample->t.clear();
    sample->x.clear();
    sample->u.clear();
  }
  for (int k = 0; k < steps; ++k) {
    const double t = k * dt;
    Eigen::VectorXd u = law.u(t, x);
    if (u.size() != m) throw ArgumentError("simulate: control has wrong dimension");
    if (sample) {
      sample->t.push_back(t);
      sample->x.push_back(x);
      sample->u.push_back(u);
    }
    for (int i = 0; i < n; ++i) {
      const double uu = stream.uniform();
      dw(i) = sdt * inverse_normal_cdf(negate_normals ? 1.0 - uu : uu);
    }

    const double a = lq.a.at_time(t, T);
    const Eigen::VectorXd& b = lq.b.at_time(t, T);
    const Eigen::VectorXd& c = lq.c.at_time(t, T);
    const Eigen::MatrixXd& d = lq.d.at_time(t, T);
    const double q = lq.q.at_time(t, T);
    const Eigen::VectorXd& s = lq.s.at_time(t, T);
    const Eigen::MatrixXd& r = lq.r.at_time(t, T);

    out.cost += (q * x * x + 2.0 * x * s.dot(u) + u.dot(r * u)) * dt;

    double drift = a * x + b.dot(u);
    double jump = 0.0;
    for (int j = 0; j < J; ++j) {
      const double e = lq.marks[j].e.at_time(t, T);
      const double size = e * x + lq.marks[j].f.at_time(t, T).dot(u);
      drift -= lq.marks[j].nu * size;
      const int count = stream.poisson(lq.marks[j].nu * dt);
      jump += count * size;
    }
    const double diff = (c * x + d * u).dot(dw);
    const double xnew = x + drift * dt + diff + jump;
    if (!std::isfinite(xnew)) throw NumericError("simulate: path diverged");
    if (x * xnew < 0.0) out.crossed = true;
    x = xnew;
  }
  if (sample) {
    sample->t.push_back(T);
    sample->x.push_back(x);
  }
  out.cost += lq.g * x * x;
  out.terminal = x;
  return out;
}

struct RunArrays {
  std::vector<double> cost, terminal;
  int crossings = 0;
};

inline RunArrays run_all_paths(const LqCoefficients& lq, double x0, const ControlLaw& law,
                               const PathConfig& cfg, std::vector<PathSample>* records) {
  lq.validate();
  cfg.validate();
  if (!law.u) throw ArgumentError("simulate: control law not set");
  RunArrays out;
  out.cost.resize(cfg.paths);
  out.terminal.resize(cfg.paths);
  if (records) records->assign(cfg.record_paths, PathSample{});
  for (int p = 0; p < cfg.paths; ++p) {
    const uint64_t id = cfg.antithetic ? static_cast<uint64_t>(p / 2) : static_cast<uint64_t>(p);
    const bool negate = cfg.antithetic && (p % 2 == 1);
    PathSample* sample = (records && p < cfg.record_paths) ? &(*records)[p] : nullptr;
    if (sample) sample->path = p;
    const PathOutcome o = run_path(lq, x0, law, cfg.steps, cfg.seed, id, negate, sample);
    out.cost[p] = o.cost;
    out.terminal[p] = o.terminal;
    if (o.crossed) ++out.crossings;
  }
  return out;
}

struct MeanSe {
  double mean = 0.0, se = 0.0;
};

// Mean and standard error; with pairing, over consecutive pair means.
inline MeanSe mean_se(const std::vector<double>& v, bool paired) {
  std::vector<double> samples;
  if (paired) {
    samples.reserve(v.size() / 2);
    for (size_t i = 0; i + 1 < v.size(); i += 2) samples.push_back(0.5 * (v[i] + v[i + 1]));
  } else {
    samples = v;
  }
  const size_t n = samples.size();
  // Welford: the running mean is exact for constant samples, so a
  // deterministic instance reports a standard error of exactly zero.
  double mean = 0.0, ss = 0.0;
  size_t k = 0;
  for (double s : samples) {
    ++k;
    const double delta = s - mean;
    mean += delta / static_cast<double>(k);
    ss += delta * (s - mean);
  }
  const double var = n > 1 ? ss / static_cast<double>(n - 1) : 0.0;
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

}  // namespace detail

inline SimReport simulate_controlled(const LqCoefficients& lq, double x0, const ControlLaw& law,
                                     const PathConfig& cfg,
                                     std::vector<PathSample>* records = nullptr) {
  const detail::RunArrays run = detail::run_all_paths(lq, x0, law, cfg, records);
  SimReport rep;
  rep.paths = cfg.paths;
  rep.steps = cfg.steps;
  rep.antithetic = cfg.antithetic;
  const detail::MeanSe c = detail::mean_se(run.cost, cfg.antithetic);
  rep.mean_cost = c.mean;
  rep.se_cost = c.se;
  const detail::MeanSe x = detail::mean_se(run.terminal, cfg.antithetic);
  rep.mean_terminal = x.mean;
  rep.se_terminal = x.se;

  double m2 = 0.0, m4 = 0.0;
  for (double v : run.terminal) {
    const double d = v - x.mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  const double npaths = static_cast<double>(cfg.paths);
  rep.var_terminal = cfg.paths > 1 ? m2 / (npaths - 1.0) : 0.0;
  m4 /= npaths;
  double se_var = std::sqrt(std::max(0.0, m4 - rep.var_terminal * rep.var_terminal) / npaths);
  if (cfg.antithetic) se_var *= std::sqrt(2.0);
  rep.se_var_terminal = se_var;
  rep.crossing_fraction = static_cast<double>(run.crossings) / npaths;
  return rep;
}

// Value check with a statistical band plus an explicit discretization budget.
struct ValueCheck {
  double simulated = 0.0, reference = 0.0, difference = 0.0;
  double statistical_tol = 0.0, bias_tol = 0.0;
  bool pass = false;
};

inline ValueCheck verify_value(const SimReport& rep, double reference, double bias_budget) {
  ValueCheck v;
  v.simulated = rep.mean_cost;
  v.reference = reference;
  v.difference = rep.mean_cost - reference;
  v.statistical_tol = 3.0 * rep.se_cost;
  v.bias_tol = bias_budget / rep.steps;
  v.pass = std::fabs(v.difference) <= v.statistical_tol + v.bias_tol;
  return v;
}

// Candidate-vs-rival cost comparison under common random numbers. Each rival
// reports the per-path cost excess over the candidate; a negative mean excess
// beyond the statistical band plus slack flags the candidate as beaten.
struct ProbeRival {
  std::string name;
  double mean_cost = 0.0;
  double mean_excess = 0.0;
  double se_excess = 0.0;
  bool beaten = false;
};

struct ProbeReport {
  double candidate_cost = 0.0;
  double candidate_se = 0.0;
  std::vector<ProbeRival> rivals;
  double slack = 0.0;
  bool pass = false;
};

inline ProbeReport optimality_probe(const LqCoefficients& lq, double x0,
                                    const ControlLaw& candidate,
                                    const std::vector<ControlLaw>& rivals,
                                    const PathConfig& cfg, double slack = 0.0) {
  const detail::RunArrays base = detail::run_all_paths(lq, x0, candidate, cfg, nullptr);
  const detail::MeanSe c = detail::mean_se(base.cost, cfg.antithetic);
  ProbeReport rep;
  rep.candidate_cost = c.mean;
  rep.candidate_se = c.se;
  rep.slack = slack;
  rep.pass = true;
  for (const auto& law : rivals) {
    const detail::RunArrays rr = detail::run_all_paths(lq, x0, law, cfg, nullptr);
    std::vector<double> diff(base.cost.size());
    for (size_t p = 0; p < diff.size(); ++p) diff[p] = rr.cost[p] - base.cost[p];
    const detail::MeanSe d = detail::mean_se(diff, cfg.antithetic);
    const detail::MeanSe rc = detail::mean_se(rr.cost, cfg.antithetic);
    ProbeRival rv;
    rv.name = law.name;
    rv.mean_cost = rc.mean;
    rv.mean_excess = d.mean;
    rv.se_excess = d.se;
    rv.beaten = d.mean < -(3.0 * d.se + slack);
    if (rv.beaten) rep.pass = false;
    rep.rivals.push_back(std::move(rv));
  }
  return rep;
}

}  // namespace jumplq
