#pragma once

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "jumplq/cone.hpp"
#include "jumplq/errors.hpp"
#include "jumplq/lattice.hpp"
#include "jumplq/meanvariance.hpp"
#include "jumplq/riccati.hpp"
#include "jumplq/simulate.hpp"

namespace jumplq {

// Run configuration: one JSON file per run. Time-dependent coefficients are
// arrays aligned to a uniform grid; lower nesting depths broadcast (a number
// is constant in time and across components, a flat array is one vector or a
// diagonal held constant in time). The parsed configuration keeps a fully
// materialized canonical JSON image, so a dump re-parses to the same state.

enum class RunMode { sre, frontier, simulate, check_comparison, check_inequality };

inline std::string to_string(RunMode m) {
  switch (m) {
    case RunMode::sre: return "sre";
    case RunMode::frontier: return "frontier";
    case RunMode::simulate: return "simulate";
    case RunMode::check_comparison: return "check-comparison";
    case RunMode::check_inequality: return "check-inequality";
  }
  throw ArgumentError("run mode: unknown value");
}

inline RunMode run_mode_from_string(const std::string& s) {
  if (s == "sre") return RunMode::sre;
  if (s == "frontier") return RunMode::frontier;
  if (s == "simulate") return RunMode::simulate;
  if (s == "check-comparison") return RunMode::check_comparison;
  if (s == "check-inequality") return RunMode::check_inequality;
  throw ArgumentError("run mode: expected one of sre, frontier, simulate, "
                      "check-comparison, check-inequality");
}

struct RunConfig {
  RunMode mode = RunMode::sre;

  // sre / simulate
  LqCoefficients lq;
  double x0 = 1.0;

  // sre / frontier / simulate
  Cone cone = Cone::full_space(1);
  int steps = 200;
  double tol = 1e-10;
  OdeScheme scheme = OdeScheme::rk4;
  std::optional<double> truncation_radius;

  // frontier
  MarketModel market;
  double market_x0 = 1.0;
  std::vector<double> targets;

  // simulate
  PathConfig mc;
  double bias_budget = 0.0;
  bool probe = false;

  // check-comparison
  LatticeBsdej lower, upper;
  AffineTerminal lower_terminal, upper_terminal;
  ComparisonCertificate certificate;
  LatticeScheme lattice_scheme = LatticeScheme::implicit_step;
  double lattice_tol = 1e-10;

  // check-inequality
  int64_t ineq_samples = 1000000;
  uint64_t ineq_seed = 20240801;
  double ineq_tol = 1e-12;

  std::string output = "out.csv";

  nlohmann::json effective;  // canonical materialized configuration
};

namespace cfg_detail {

using nlohmann::json;

inline void expect_keys(const json& j, const std::set<std::string>& allowed,
                        const std::string& where) {
  if (!j.is_object()) throw ArgumentError("config: " + where + " must be an object");
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key()))
      throw ArgumentError("config: unknown key '" + item.key() + "' in " + where);
  }
}

inline double require_num(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ArgumentError("config: missing '" + key + "' in " + where);
  if (!j.at(key).is_number()) throw ArgumentError("config: '" + key + "' in " + where + " must be a number");
  return j.at(key).get<double>();
}

inline double num_or(const json& j, const std::string& key, double fallback,
                     const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ArgumentError("config: '" + key + "' in " + where + " must be a number");
  return j.at(key).get<double>();
}

inline int int_or(const json& j, const std::string& key, int fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer())
    throw ArgumentError("config: '" + key + "' in " + where + " must be an integer");
  return j.at(key).get<int>();
}

inline int require_int(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ArgumentError("config: missing '" + key + "' in " + where);
  if (!j.at(key).is_number_integer())
    throw ArgumentError("config: '" + key + "' in " + where + " must be an integer");
  return j.at(key).get<int>();
}

inline bool bool_or(const json& j, const std::string& key, bool fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean())
    throw ArgumentError("config: '" + key + "' in " + where + " must be a boolean");
  return j.at(key).get<bool>();
}

inline std::string string_or(const json& j, const std::string& key, const std::string& fallback,
                             const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string())
    throw ArgumentError("config: '" + key + "' in " + where + " must be a string");
  return j.at(key).get<std::string>();
}

inline int nesting_depth(const json& j) {
  if (j.is_number()) return 0;
  if (j.is_array()) {
    if (j.empty()) return 1;
    return 1 + nesting_depth(j.at(0));
  }
  return -1;
}

inline std::vector<double> number_list(const json& j, const std::string& where) {
  if (!j.is_array()) throw ArgumentError("config: " + where + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ArgumentError("config: " + where + " must contain only numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

// Scalar-in-time coefficient: number (constant) or array of numbers (grid).
inline TimeGridded<double> parse_scalar_grid(const json& j, const std::string& where) {
  const int depth = nesting_depth(j);
  if (depth == 0) return TimeGridded<double>::constant(j.get<double>());
  if (depth == 1) {
    auto v = number_list(j, where);
    if (v.empty()) throw ArgumentError("config: empty grid for " + where);
    return TimeGridded<double>(std::move(v));
  }
  throw ArgumentError("config: " + where + " must be a number or an array of numbers");
}

// Vector coefficient: number broadcasts across components and time, a flat
// array is a single vector (length len), an array of arrays is a time grid.
inline TimeGridded<Eigen::VectorXd> parse_vector_grid(const json& j, int len,
                                                      const std::string& where) {
  const int depth = nesting_depth(j);
  if (depth == 0)
    return TimeGridded<Eigen::VectorXd>::constant(
        Eigen::VectorXd::Constant(len, j.get<double>()));
  if (depth == 1) {
    auto v = number_list(j, where);
    if (static_cast<int>(v.size()) != len)
      throw ArgumentError("config: " + where + " must have " + std::to_string(len) + " entries");
    return TimeGridded<Eigen::VectorXd>::constant(
        Eigen::Map<const Eigen::VectorXd>(v.data(), len));
  }
  if (depth == 2) {
    std::vector<Eigen::VectorXd> grid;
    for (const auto& row : j) {
      auto v = number_list(row, where);
      if (static_cast<int>(v.size()) != len)
        throw ArgumentError("config: " + where + " entries must have " + std::to_string(len) +
                            " components");
      grid.emplace_back(Eigen::Map<const Eigen::VectorXd>(v.data(), len));
    }
    if (grid.empty()) throw ArgumentError("config: empty grid for " + where);
    return TimeGridded<Eigen::VectorXd>(std::move(grid));
  }
  throw ArgumentError("config: " + where + " has too many nesting levels");
}

inline Eigen::MatrixXd matrix_from_rows(const json& j, int rows, int cols,
                                        const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows)
    throw ArgumentError("config: " + where + " must have " + std::to_string(rows) + " rows");
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    auto v = number_list(j.at(r), where);
    if (static_cast<int>(v.size()) != cols)
      throw ArgumentError("config: " + where + " rows must have " + std::to_string(cols) +
                          " entries");
    for (int c = 0; c < cols; ++c) m(r, c) = v[static_cast<size_t>(c)];
  }
  return m;
}

// Matrix coefficient. A number fills a 1x1 matrix or a scaled identity
// (square only); a flat array is a diagonal (square), a single row (rows=1),
// or a single column (cols=1); two levels are one matrix; three are a grid.
inline TimeGridded<Eigen::MatrixXd> parse_matrix_grid(const json& j, int rows, int cols,
                                                      const std::string& where) {
  const int depth = nesting_depth(j);
  if (depth == 0) {
    const double v = j.get<double>();
    if (rows == cols)
      return TimeGridded<Eigen::MatrixXd>::constant(
          v * Eigen::MatrixXd::Identity(rows, cols));
    if (rows == 1 && cols == 1)
      return TimeGridded<Eigen::MatrixXd>::constant(Eigen::MatrixXd::Constant(1, 1, v));
    throw ArgumentError("config: scalar for non-square " + where + " is ambiguous");
  }
  if (depth == 1) {
    auto v = number_list(j, where);
    Eigen::MatrixXd m;
    if (rows == cols && static_cast<int>(v.size()) == rows) {
      m = Eigen::MatrixXd::Zero(rows, cols);
      for (int i = 0; i < rows; ++i) m(i, i) = v[static_cast<size_t>(i)];
    } else if (rows == 1 && static_cast<int>(v.size()) == cols) {
      m = Eigen::Map<const Eigen::RowVectorXd>(v.data(), cols);
    } else if (cols == 1 && static_cast<int>(v.size()) == rows) {
      m = Eigen::Map<const Eigen::VectorXd>(v.data(), rows);
    } else {
      throw ArgumentError("config: flat array for " + where + " fits neither diagonal nor row/column");
    }
    return TimeGridded<Eigen::MatrixXd>::constant(std::move(m));
  }
  if (depth == 2)
    return TimeGridded<Eigen::MatrixXd>::constant(matrix_from_rows(j, rows, cols, where));
  if (depth == 3) {
    std::vector<Eigen::MatrixXd> grid;
    for (const auto& item : j) grid.push_back(matrix_from_rows(item, rows, cols, where));
    if (grid.empty()) throw ArgumentError("config: empty grid for " + where);
    return TimeGridded<Eigen::MatrixXd>(std::move(grid));
  }
  throw ArgumentError("config: " + where + " has too many nesting levels");
}

inline json dump_scalar_grid(const TimeGridded<double>& g) {
  return json(g.values());
}

inline json dump_vector_grid(const TimeGridded<Eigen::VectorXd>& g) {
  json out = json::array();
  for (const auto& v : g.values()) {
    json row = json::array();
    for (int i = 0; i < v.size(); ++i) row.push_back(v(i));
    out.push_back(std::move(row));
  }
  return out;
}

inline json dump_matrix_grid(const TimeGridded<Eigen::MatrixXd>& g) {
  json out = json::array();
  for (const auto& m : g.values()) {
    json mat = json::array();
    for (int r = 0; r < m.rows(); ++r) {
      json row = json::array();
      for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      mat.push_back(std::move(row));
    }
    out.push_back(std::move(mat));
  }
  return out;
}

inline std::string sign_to_string(CoordinateSign s) {
  switch (s) {
    case CoordinateSign::free_axis: return "free";
    case CoordinateSign::nonneg: return "nonneg";
    case CoordinateSign::nonpos: return "nonpos";
    case CoordinateSign::zero: return "zero";
  }
  throw ArgumentError("cone sign: unknown value");
}

inline CoordinateSign sign_from_string(const std::string& s) {
  if (s == "free") return CoordinateSign::free_axis;
  if (s == "nonneg") return CoordinateSign::nonneg;
  if (s == "nonpos") return CoordinateSign::nonpos;
  if (s == "zero") return CoordinateSign::zero;
  throw ArgumentError("config: cone sign must be free, nonneg, nonpos, or zero");
}

inline Cone parse_cone(const json& j, int dim) {
  expect_keys(j, {"kind", "dim", "signs", "generator"}, "cone");
  const std::string kind = string_or(j, "kind", "full_space", "cone");
  if (kind == "full_space") {
    const int d = int_or(j, "dim", dim, "cone");
    if (d != dim) throw ArgumentError("config: cone dimension must match the control dimension");
    return Cone::full_space(d);
  }
  if (kind == "coordinate") {
    if (!j.contains("signs")) throw ArgumentError("config: coordinate cone needs 'signs'");
    std::vector<CoordinateSign> signs;
    for (const auto& s : j.at("signs")) {
      if (!s.is_string()) throw ArgumentError("config: cone signs must be strings");
      signs.push_back(sign_from_string(s.get<std::string>()));
    }
    if (static_cast<int>(signs.size()) != dim)
      throw ArgumentError("config: cone dimension must match the control dimension");
    return Cone::coordinate(std::move(signs));
  }
  if (kind == "ray") {
    if (!j.contains("generator")) throw ArgumentError("config: ray cone needs 'generator'");
    auto v = number_list(j.at("generator"), "cone.generator");
    if (static_cast<int>(v.size()) != dim)
      throw ArgumentError("config: cone dimension must match the control dimension");
    return Cone::ray(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<int>(v.size())));
  }
  throw ArgumentError("config: cone kind must be full_space, coordinate, or ray");
}

inline json dump_cone(const Cone& c) {
  json out;
  switch (c.kind()) {
    case Cone::Kind::full_space:
      out["kind"] = "full_space";
      out["dim"] = c.dim();
      break;
    case Cone::Kind::coordinate: {
      out["kind"] = "coordinate";
      json signs = json::array();
      for (CoordinateSign s : c.signs()) signs.push_back(sign_to_string(s));
      out["signs"] = std::move(signs);
      break;
    }
    case Cone::Kind::ray: {
      out["kind"] = "ray";
      json gen = json::array();
      for (int i = 0; i < c.generator().size(); ++i) gen.push_back(c.generator()(i));
      out["generator"] = std::move(gen);
      break;
    }
  }
  return out;
}

inline std::pair<LqCoefficients, double> parse_lq_model(const json& j) {
  expect_keys(j, {"horizon", "controls", "noises", "a", "b", "c", "d", "q", "s", "r", "g",
                  "marks", "x0"},
              "model");
  LqCoefficients lq;
  lq.horizon = require_num(j, "horizon", "model");
  lq.m = int_or(j, "controls", 1, "model");
  lq.n = int_or(j, "noises", 1, "model");
  if (lq.m < 1 || lq.n < 1) throw ArgumentError("config: model dimensions must be positive");
  lq.a = j.contains("a") ? parse_scalar_grid(j.at("a"), "model.a") : TimeGridded<double>::constant(0.0);
  lq.q = j.contains("q") ? parse_scalar_grid(j.at("q"), "model.q") : TimeGridded<double>::constant(0.0);
  lq.b = j.contains("b") ? parse_vector_grid(j.at("b"), lq.m, "model.b")
                         : TimeGridded<Eigen::VectorXd>::constant(Eigen::VectorXd::Zero(lq.m));
  lq.c = j.contains("c") ? parse_vector_grid(j.at("c"), lq.n, "model.c")
                         : TimeGridded<Eigen::VectorXd>::constant(Eigen::VectorXd::Zero(lq.n));
  lq.s = j.contains("s") ? parse_vector_grid(j.at("s"), lq.m, "model.s")
                         : TimeGridded<Eigen::VectorXd>::constant(Eigen::VectorXd::Zero(lq.m));
  lq.d = j.contains("d") ? parse_matrix_grid(j.at("d"), lq.n, lq.m, "model.d")
                         : TimeGridded<Eigen::MatrixXd>::constant(Eigen::MatrixXd::Zero(lq.n, lq.m));
  lq.r = j.contains("r") ? parse_matrix_grid(j.at("r"), lq.m, lq.m, "model.r")
                         : TimeGridded<Eigen::MatrixXd>::constant(Eigen::MatrixXd::Zero(lq.m, lq.m));
  lq.g = num_or(j, "g", 0.0, "model");
  if (j.contains("marks")) {
    if (!j.at("marks").is_array()) throw ArgumentError("config: model.marks must be an array");
    for (const auto& mk : j.at("marks")) {
      expect_keys(mk, {"e", "f", "nu"}, "model.marks[]");
      LqMark lm;
      lm.e = mk.contains("e") ? parse_scalar_grid(mk.at("e"), "model.marks[].e")
                              : TimeGridded<double>::constant(0.0);
      lm.f = mk.contains("f") ? parse_vector_grid(mk.at("f"), lq.m, "model.marks[].f")
                              : TimeGridded<Eigen::VectorXd>::constant(Eigen::VectorXd::Zero(lq.m));
      lm.nu = require_num(mk, "nu", "model.marks[]");
      lq.marks.push_back(std::move(lm));
    }
  }
  const double x0 = num_or(j, "x0", 1.0, "model");
  lq.validate();
  return {std::move(lq), x0};
}

inline json dump_lq_model(const LqCoefficients& lq, double x0) {
  json j;
  j["horizon"] = lq.horizon;
  j["controls"] = lq.m;
  j["noises"] = lq.n;
  j["a"] = dump_scalar_grid(lq.a);
  j["q"] = dump_scalar_grid(lq.q);
  j["b"] = dump_vector_grid(lq.b);
  j["c"] = dump_vector_grid(lq.c);
  j["s"] = dump_vector_grid(lq.s);
  j["d"] = dump_matrix_grid(lq.d);
  j["r"] = dump_matrix_grid(lq.r);
  j["g"] = lq.g;
  json marks = json::array();
  for (const auto& mk : lq.marks) {
    json m;
    m["e"] = dump_scalar_grid(mk.e);
    m["f"] = dump_vector_grid(mk.f);
    m["nu"] = mk.nu;
    marks.push_back(std::move(m));
  }
  j["marks"] = std::move(marks);
  j["x0"] = x0;
  return j;
}

inline std::tuple<MarketModel, double, std::vector<double>> parse_market(const json& j,
                                                                         const json* cone_section) {
  expect_keys(j, {"horizon", "assets", "noises", "rate", "excess", "vol", "marks", "x0",
                  "targets"},
              "market");
  MarketModel mkt;
  mkt.horizon = require_num(j, "horizon", "market");
  mkt.assets = int_or(j, "assets", 1, "market");
  mkt.noise = int_or(j, "noises", 1, "market");
  if (mkt.assets < 1 || mkt.noise < 1) throw ArgumentError("config: market dimensions must be positive");
  mkt.rate = j.contains("rate") ? parse_scalar_grid(j.at("rate"), "market.rate")
                                : TimeGridded<double>::constant(0.0);
  if (!j.contains("excess")) throw ArgumentError("config: missing 'excess' in market");
  mkt.excess = parse_vector_grid(j.at("excess"), mkt.assets, "market.excess");
  if (!j.contains("vol")) throw ArgumentError("config: missing 'vol' in market");
  mkt.vol = parse_matrix_grid(j.at("vol"), mkt.noise, mkt.assets, "market.vol");
  if (j.contains("marks")) {
    if (!j.at("marks").is_array()) throw ArgumentError("config: market.marks must be an array");
    for (const auto& mk : j.at("marks")) {
      expect_keys(mk, {"f", "nu"}, "market.marks[]");
      MarketMark mm;
      if (!mk.contains("f")) throw ArgumentError("config: missing 'f' in market.marks[]");
      mm.f = parse_vector_grid(mk.at("f"), mkt.assets, "market.marks[].f");
      mm.nu = require_num(mk, "nu", "market.marks[]");
      mkt.marks.push_back(std::move(mm));
    }
  }
  mkt.cone = cone_section ? parse_cone(*cone_section, mkt.assets) : Cone::full_space(mkt.assets);
  const double x0 = num_or(j, "x0", 1.0, "market");
  std::vector<double> targets;
  if (!j.contains("targets")) throw ArgumentError("config: missing 'targets' in market");
  targets = number_list(j.at("targets"), "market.targets");
  if (targets.empty()) throw ArgumentError("config: market.targets must not be empty");
  mkt.validate();
  return {std::move(mkt), x0, std::move(targets)};
}

inline json dump_market(const MarketModel& mkt, double x0, const std::vector<double>& targets) {
  json j;
  j["horizon"] = mkt.horizon;
  j["assets"] = mkt.assets;
  j["noises"] = mkt.noise;
  j["rate"] = dump_scalar_grid(mkt.rate);
  j["excess"] = dump_vector_grid(mkt.excess);
  j["vol"] = dump_matrix_grid(mkt.vol);
  json marks = json::array();
  for (const auto& mk : mkt.marks) {
    json m;
    m["f"] = dump_vector_grid(mk.f);
    m["nu"] = mk.nu;
    marks.push_back(std::move(m));
  }
  j["marks"] = std::move(marks);
  j["x0"] = x0;
  j["targets"] = targets;
  return j;
}

inline JumpMap jump_map_from_string(const std::string& s) {
  if (s == "identity") return JumpMap::identity;
  if (s == "positive_part") return JumpMap::positive_part;
  if (s == "clamp_unit") return JumpMap::clamp_unit;
  throw ArgumentError("config: jump map must be identity, positive_part, or clamp_unit");
}

inline std::string jump_map_to_string(JumpMap m) {
  switch (m) {
    case JumpMap::identity: return "identity";
    case JumpMap::positive_part: return "positive_part";
    case JumpMap::clamp_unit: return "clamp_unit";
  }
  throw ArgumentError("jump map: unknown value");
}

inline GeneratorAlgebra parse_generator(const json& j, int ell, int marks,
                                        const std::string& where) {
  expect_keys(j, {"components"}, where);
  if (!j.contains("components") || !j.at("components").is_array())
    throw ArgumentError("config: " + where + " needs a 'components' array");
  GeneratorAlgebra g;
  for (const auto& cj : j.at("components")) {
    expect_keys(cj, {"source", "own_y", "own_z", "cross_y", "gamma", "cross_jumps"},
                where + ".components[]");
    ComponentGenerator comp;
    comp.source = num_or(cj, "source", 0.0, where);
    comp.own_y = num_or(cj, "own_y", 0.0, where);
    comp.own_z = num_or(cj, "own_z", 0.0, where);
    if (cj.contains("cross_y")) comp.cross_y = number_list(cj.at("cross_y"), where + ".cross_y");
    if (cj.contains("gamma")) comp.gamma = number_list(cj.at("gamma"), where + ".gamma");
    if (cj.contains("cross_jumps")) {
      for (const auto& xj : cj.at("cross_jumps")) {
        expect_keys(xj, {"source_component", "scale", "map"}, where + ".cross_jumps[]");
        CrossJumpTerm term;
        term.source_component = require_int(xj, "source_component", where + ".cross_jumps[]");
        term.scale = num_or(xj, "scale", 0.0, where);
        term.map = jump_map_from_string(string_or(xj, "map", "positive_part", where));
        comp.cross_jumps.push_back(term);
      }
    }
    g.components.push_back(std::move(comp));
  }
  g.validate(ell, marks);
  return g;
}

inline json dump_generator(const GeneratorAlgebra& g, int ell, int marks) {
  json comps = json::array();
  for (const auto& c : g.components) {
    json cj;
    cj["source"] = c.source;
    cj["own_y"] = c.own_y;
    cj["own_z"] = c.own_z;
    std::vector<double> cross = c.cross_y.empty() ? std::vector<double>(ell, 0.0) : c.cross_y;
    std::vector<double> gamma = c.gamma.empty() ? std::vector<double>(marks, 0.0) : c.gamma;
    cj["cross_y"] = cross;
    cj["gamma"] = gamma;
    json xjs = json::array();
    for (const auto& xj : c.cross_jumps) {
      json t;
      t["source_component"] = xj.source_component;
      t["scale"] = xj.scale;
      t["map"] = jump_map_to_string(xj.map);
      xjs.push_back(std::move(t));
    }
    cj["cross_jumps"] = std::move(xjs);
    comps.push_back(std::move(cj));
  }
  json out;
  out["components"] = std::move(comps);
  return out;
}

inline Eigen::VectorXd bound_list(const json& j, int ell, double fallback,
                                  const std::string& where) {
  Eigen::VectorXd v = Eigen::VectorXd::Constant(ell, fallback);
  if (!j.is_array() || static_cast<int>(j.size()) != ell)
    throw ArgumentError("config: " + where + " must be an array of length " + std::to_string(ell));
  for (int i = 0; i < ell; ++i) {
    if (j.at(i).is_null()) continue;
    if (!j.at(i).is_number()) throw ArgumentError("config: " + where + " entries must be numbers or null");
    v(i) = j.at(i).get<double>();
  }
  return v;
}

inline AffineTerminal parse_terminal(const json& j, int ell, int marks, const std::string& where) {
  expect_keys(j, {"constant", "level_coef", "count_weight", "lo", "hi"}, where);
  AffineTerminal t;
  const double inf = std::numeric_limits<double>::infinity();
  if (!j.contains("constant")) throw ArgumentError("config: missing 'constant' in " + where);
  {
    auto v = number_list(j.at("constant"), where + ".constant");
    if (static_cast<int>(v.size()) != ell)
      throw ArgumentError("config: " + where + ".constant must have length " + std::to_string(ell));
    t.constant = Eigen::Map<const Eigen::VectorXd>(v.data(), ell);
  }
  if (j.contains("level_coef")) {
    auto v = number_list(j.at("level_coef"), where + ".level_coef");
    if (static_cast<int>(v.size()) != ell)
      throw ArgumentError("config: " + where + ".level_coef must have length " + std::to_string(ell));
    t.level_coef = Eigen::Map<const Eigen::VectorXd>(v.data(), ell);
  } else {
    t.level_coef = Eigen::VectorXd::Zero(ell);
  }
  if (j.contains("count_weight")) {
    t.count_weight = matrix_from_rows(j.at("count_weight"), ell, marks, where + ".count_weight");
  } else {
    t.count_weight = Eigen::MatrixXd::Zero(ell, marks);
  }
  t.lo = j.contains("lo") ? bound_list(j.at("lo"), ell, -inf, where + ".lo")
                          : Eigen::VectorXd::Constant(ell, -inf);
  t.hi = j.contains("hi") ? bound_list(j.at("hi"), ell, inf, where + ".hi")
                          : Eigen::VectorXd::Constant(ell, inf);
  return t;
}

inline json dump_terminal(const AffineTerminal& t) {
  json j;
  json cst = json::array(), lev = json::array(), lo = json::array(), hi = json::array();
  for (int i = 0; i < t.constant.size(); ++i) {
    cst.push_back(t.constant(i));
    lev.push_back(t.level_coef(i));
    if (std::isinf(t.lo(i)))
      lo.push_back(nullptr);
    else
      lo.push_back(t.lo(i));
    if (std::isinf(t.hi(i)))
      hi.push_back(nullptr);
    else
      hi.push_back(t.hi(i));
  }
  j["constant"] = std::move(cst);
  j["level_coef"] = std::move(lev);
  json cw = json::array();
  for (int r = 0; r < t.count_weight.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < t.count_weight.cols(); ++c) row.push_back(t.count_weight(r, c));
    cw.push_back(std::move(row));
  }
  j["count_weight"] = std::move(cw);
  j["lo"] = std::move(lo);
  j["hi"] = std::move(hi);
  return j;
}

}  // namespace cfg_detail

inline RunConfig parse_run_config(const nlohmann::json& in,
                                  std::optional<uint64_t> seed_override = std::nullopt) {
  using cfg_detail::json;
  namespace cd = cfg_detail;
  cd::expect_keys(in, {"mode", "model", "market", "cone", "numerics", "mc", "lattice",
                       "inequality", "output"},
                  "top level");
  RunConfig cfg;
  if (!in.contains("mode") || !in.at("mode").is_string())
    throw ArgumentError("config: missing or non-string 'mode'");
  cfg.mode = run_mode_from_string(in.at("mode").get<std::string>());
  cfg.output = cd::string_or(in, "output", "out.csv", "top level");
  if (cfg.output.empty()) throw ArgumentError("config: output path must not be empty");

  json eff;
  eff["mode"] = to_string(cfg.mode);
  eff["output"] = cfg.output;

  const bool needs_lq = cfg.mode == RunMode::sre || cfg.mode == RunMode::simulate;
  const bool needs_market = cfg.mode == RunMode::frontier;
  const bool needs_numerics = needs_lq || needs_market;

  if (needs_lq) {
    if (!in.contains("model")) throw ArgumentError("config: this mode needs a 'model' section");
    auto [lq, x0] = cd::parse_lq_model(in.at("model"));
    cfg.lq = std::move(lq);
    cfg.x0 = x0;
    cfg.cone = in.contains("cone") ? cd::parse_cone(in.at("cone"), cfg.lq.m)
                                   : Cone::full_space(cfg.lq.m);
    eff["model"] = cd::dump_lq_model(cfg.lq, cfg.x0);
    eff["cone"] = cd::dump_cone(cfg.cone);
  }
  if (needs_market) {
    if (!in.contains("market")) throw ArgumentError("config: frontier mode needs a 'market' section");
    const json* cone_section = in.contains("cone") ? &in.at("cone") : nullptr;
    auto [mkt, x0, targets] = cd::parse_market(in.at("market"), cone_section);
    cfg.market = std::move(mkt);
    cfg.market_x0 = x0;
    cfg.targets = std::move(targets);
    eff["market"] = cd::dump_market(cfg.market, cfg.market_x0, cfg.targets);
    eff["cone"] = cd::dump_cone(cfg.market.cone);
  }
  if (needs_numerics) {
    const json num = in.contains("numerics") ? in.at("numerics") : json::object();
    cd::expect_keys(num, {"steps", "tol", "scheme", "truncation_radius"}, "numerics");
    cfg.steps = cd::int_or(num, "steps", 200, "numerics");
    if (cfg.steps < 1) throw ArgumentError("config: numerics.steps must be positive");
    cfg.tol = cd::num_or(num, "tol", 1e-10, "numerics");
    if (!(cfg.tol > 0.0)) throw ArgumentError("config: numerics.tol must be positive");
    const std::string scheme = cd::string_or(num, "scheme", "rk4", "numerics");
    if (scheme == "rk4")
      cfg.scheme = OdeScheme::rk4;
    else if (scheme == "implicit_euler")
      cfg.scheme = OdeScheme::implicit_euler;
    else
      throw ArgumentError("config: numerics.scheme must be rk4 or implicit_euler");
    if (num.contains("truncation_radius")) {
      const double r = num.at("truncation_radius").get<double>();
      if (!(r > 0.0)) throw ArgumentError("config: truncation radius must be positive");
      cfg.truncation_radius = r;
    }
    json njson;
    njson["steps"] = cfg.steps;
    njson["tol"] = cfg.tol;
    njson["scheme"] = scheme;
    if (cfg.truncation_radius) njson["truncation_radius"] = *cfg.truncation_radius;
    eff["numerics"] = std::move(njson);
  }
  if (cfg.mode == RunMode::simulate) {
    const json mc = in.contains("mc") ? in.at("mc") : json::object();
    cd::expect_keys(mc, {"paths", "steps", "seed", "antithetic", "record_paths", "bias_budget",
                         "probe"},
                    "mc");
    cfg.mc.paths = cd::int_or(mc, "paths", 10000, "mc");
    cfg.mc.steps = cd::int_or(mc, "steps", 200, "mc");
    if (mc.contains("seed")) {
      if (!mc.at("seed").is_number_integer()) throw ArgumentError("config: mc.seed must be an integer");
      cfg.mc.seed = mc.at("seed").get<uint64_t>();
    } else {
      cfg.mc.seed = 1;
    }
    cfg.mc.antithetic = cd::bool_or(mc, "antithetic", false, "mc");
    cfg.mc.record_paths = cd::int_or(mc, "record_paths", 0, "mc");
    cfg.bias_budget = cd::num_or(mc, "bias_budget", 0.0, "mc");
    if (cfg.bias_budget < 0.0) throw ArgumentError("config: mc.bias_budget must be nonnegative");
    cfg.probe = cd::bool_or(mc, "probe", false, "mc");
    if (seed_override) cfg.mc.seed = *seed_override;
    cfg.mc.validate();
    json mjson;
    mjson["paths"] = cfg.mc.paths;
    mjson["steps"] = cfg.mc.steps;
    mjson["seed"] = cfg.mc.seed;
    mjson["antithetic"] = cfg.mc.antithetic;
    mjson["record_paths"] = cfg.mc.record_paths;
    mjson["bias_budget"] = cfg.bias_budget;
    mjson["probe"] = cfg.probe;
    eff["mc"] = std::move(mjson);
  }
  if (cfg.mode == RunMode::check_comparison) {
    if (!in.contains("lattice"))
      throw ArgumentError("config: check-comparison mode needs a 'lattice' section");
    const json& lat = in.at("lattice");
    cd::expect_keys(lat, {"ell", "steps", "horizon", "intensities", "lower", "upper",
                          "certificate", "scheme", "tol"},
                    "lattice");
    const int ell = cd::require_int(lat, "ell", "lattice");
    const int steps = cd::require_int(lat, "steps", "lattice");
    const double horizon = cd::require_num(lat, "horizon", "lattice");
    if (!lat.contains("intensities")) throw ArgumentError("config: missing 'intensities' in lattice");
    const std::vector<double> nus = cd::number_list(lat.at("intensities"), "lattice.intensities");
    const int marks = static_cast<int>(nus.size());
    auto parse_side = [&](const char* key, LatticeBsdej& spec, AffineTerminal& term) {
      if (!lat.contains(key))
        throw ArgumentError(std::string("config: missing '") + key + "' in lattice");
      const json& side = lat.at(key);
      cd::expect_keys(side, {"generator", "terminal"}, std::string("lattice.") + key);
      spec.ell = ell;
      spec.steps = steps;
      spec.horizon = horizon;
      spec.intensities = nus;
      if (!side.contains("generator"))
        throw ArgumentError(std::string("config: missing generator in lattice.") + key);
      spec.generator = cd::parse_generator(side.at("generator"), ell, marks,
                                           std::string("lattice.") + key + ".generator");
      if (!side.contains("terminal"))
        throw ArgumentError(std::string("config: missing terminal in lattice.") + key);
      term = cd::parse_terminal(side.at("terminal"), ell, marks,
                                std::string("lattice.") + key + ".terminal");
      spec.terminal = term.function();
      spec.validate();
    };
    parse_side("lower", cfg.lower, cfg.lower_terminal);
    parse_side("upper", cfg.upper, cfg.upper_terminal);
    const json cert = lat.contains("certificate") ? lat.at("certificate") : json::object();
    cd::expect_keys(cert, {"gamma_floor", "monotone"}, "lattice.certificate");
    cfg.certificate.gamma_floor = cd::num_or(cert, "gamma_floor", -1.0, "lattice.certificate");
    cfg.certificate.monotone = cd::bool_or(cert, "monotone", true, "lattice.certificate");
    const std::string scheme = cd::string_or(lat, "scheme", "implicit", "lattice");
    if (scheme == "implicit")
      cfg.lattice_scheme = LatticeScheme::implicit_step;
    else if (scheme == "explicit")
      cfg.lattice_scheme = LatticeScheme::explicit_step;
    else
      throw ArgumentError("config: lattice.scheme must be implicit or explicit");
    cfg.lattice_tol = cd::num_or(lat, "tol", 1e-10, "lattice");
    if (!(cfg.lattice_tol > 0.0)) throw ArgumentError("config: lattice.tol must be positive");

    json ljson;
    ljson["ell"] = ell;
    ljson["steps"] = steps;
    ljson["horizon"] = horizon;
    ljson["intensities"] = nus;
    json lowj, upj;
    lowj["generator"] = cd::dump_generator(cfg.lower.generator, ell, marks);
    lowj["terminal"] = cd::dump_terminal(cfg.lower_terminal);
    upj["generator"] = cd::dump_generator(cfg.upper.generator, ell, marks);
    upj["terminal"] = cd::dump_terminal(cfg.upper_terminal);
    ljson["lower"] = std::move(lowj);
    ljson["upper"] = std::move(upj);
    json certj;
    certj["gamma_floor"] = cfg.certificate.gamma_floor;
    certj["monotone"] = cfg.certificate.monotone;
    ljson["certificate"] = std::move(certj);
    ljson["scheme"] = scheme;
    ljson["tol"] = cfg.lattice_tol;
    eff["lattice"] = std::move(ljson);
  }
  if (cfg.mode == RunMode::check_inequality) {
    const json ineq = in.contains("inequality") ? in.at("inequality") : json::object();
    cd::expect_keys(ineq, {"samples", "seed", "tol"}, "inequality");
    if (ineq.contains("samples")) {
      if (!ineq.at("samples").is_number_integer())
        throw ArgumentError("config: inequality.samples must be an integer");
      cfg.ineq_samples = ineq.at("samples").get<int64_t>();
    }
    if (cfg.ineq_samples < 0) throw ArgumentError("config: inequality.samples must be nonnegative");
    if (ineq.contains("seed")) {
      if (!ineq.at("seed").is_number_integer())
        throw ArgumentError("config: inequality.seed must be an integer");
      cfg.ineq_seed = ineq.at("seed").get<uint64_t>();
    }
    cfg.ineq_tol = cd::num_or(ineq, "tol", 1e-12, "inequality");
    if (!(cfg.ineq_tol > 0.0)) throw ArgumentError("config: inequality.tol must be positive");
    if (seed_override) cfg.ineq_seed = *seed_override;
    json ijson;
    ijson["samples"] = cfg.ineq_samples;
    ijson["seed"] = cfg.ineq_seed;
    ijson["tol"] = cfg.ineq_tol;
    eff["inequality"] = std::move(ijson);
  }

  cfg.effective = std::move(eff);
  return cfg;
}

inline RunConfig load_run_config(const std::string& path,
                                 std::optional<uint64_t> seed_override = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw ParseError("config: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return parse_run_config(j, seed_override);
}

}  // namespace jumplq
