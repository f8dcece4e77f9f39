// Copyright 2026 The HSI Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hsi/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include "hsi/errors.hpp"
#include "hsi/moments.hpp"

namespace hsi {

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// YAML helpers. Every error names the dotted key path.

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  throw InvalidArgument("config: " + path + ": " + what);
}

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void check_keys(const YAML::Node& node, const std::string& path,
                const std::set<std::string>& allowed) {
  if (!node.IsMap()) config_error(path.empty() ? "<root>" : path, "expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) config_error(join(path, key), "unknown key");
  }
}

template <class T>
T scalar(const YAML::Node& node, const std::string& path, const char* kind) {
  if (!node.IsScalar()) config_error(path, std::string("expected ") + kind);
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    config_error(path, std::string("expected ") + kind + ", got '" + node.Scalar() + "'");
  }
}

double get_double(const YAML::Node& parent, const std::string& path, const std::string& key,
                  std::optional<double> fallback = std::nullopt) {
  const YAML::Node n = parent[key];
  if (!n) {
    if (fallback) return *fallback;
    config_error(join(path, key), "required");
  }
  const double v = scalar<double>(n, join(path, key), "a number");
  if (!std::isfinite(v)) config_error(join(path, key), "must be finite");
  return v;
}

int get_int(const YAML::Node& parent, const std::string& path, const std::string& key, int fallback) {
  const YAML::Node n = parent[key];
  return n ? scalar<int>(n, join(path, key), "an integer") : fallback;
}

bool get_bool(const YAML::Node& parent, const std::string& path, const std::string& key,
              bool fallback) {
  const YAML::Node n = parent[key];
  return n ? scalar<bool>(n, join(path, key), "true or false") : fallback;
}

std::string get_string(const YAML::Node& parent, const std::string& path, const std::string& key,
                       std::optional<std::string> fallback = std::nullopt) {
  const YAML::Node n = parent[key];
  if (!n) {
    if (fallback) return *fallback;
    config_error(join(path, key), "required");
  }
  return scalar<std::string>(n, join(path, key), "a string");
}

template <class T>
std::vector<T> get_list(const YAML::Node& parent, const std::string& path, const std::string& key,
                        const char* kind) {
  const YAML::Node n = parent[key];
  if (!n) config_error(join(path, key), "required");
  if (!n.IsSequence()) config_error(join(path, key), "expected a list");
  std::vector<T> out;
  for (std::size_t i = 0; i < n.size(); ++i)
    out.push_back(scalar<T>(n[i], join(path, key) + "[" + std::to_string(i) + "]", kind));
  return out;
}

// 1-based [[j, k], ...] in the file, 0-based in memory.
std::vector<std::pair<std::size_t, std::size_t>> get_edges(const YAML::Node& parent,
                                                            const std::string& path) {
  const YAML::Node n = parent["edges"];
  const std::string p = join(path, "edges");
  if (!n.IsSequence()) config_error(p, "expected a list of [j, k] pairs");
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const std::string pi = p + "[" + std::to_string(i) + "]";
    if (!n[i].IsSequence() || n[i].size() != 2) config_error(pi, "expected [j, k]");
    const int j = scalar<int>(n[i][0], pi, "a site number");
    const int k = scalar<int>(n[i][1], pi, "a site number");
    if (j < 1 || k < 1) config_error(pi, "sites are numbered from 1");
    edges.emplace_back(static_cast<std::size_t>(j - 1), static_cast<std::size_t>(k - 1));
  }
  return edges;
}

void parse_dimer(const YAML::Node& m, ScenarioConfig& cfg) {
  check_keys(m, "model",
             {"type", "U", "delta_omega", "epsilon", "J", "gamma", "cutoff", "n_sites", "edges"});
  DimerParams& p = cfg.dimer;
  p.U = get_double(m, "model", "U");
  p.delta_omega = get_double(m, "model", "delta_omega");
  p.epsilon = get_double(m, "model", "epsilon");
  p.J = get_double(m, "model", "J");
  p.gamma = get_double(m, "model", "gamma", 1.0);
  const int n_sites = get_int(m, "model", "n_sites", 2);
  if (n_sites < 2) config_error("model.n_sites", "must be >= 2");
  p.n_sites = static_cast<std::size_t>(n_sites);
  if (m["edges"]) p.edges = get_edges(m, "model");
  const YAML::Node c = m["cutoff"];
  if (!c) config_error("model.cutoff", "required (an integer, or auto)");
  if (c.IsScalar() && c.Scalar() == "auto") {
    cfg.auto_cutoff = true;
    p.cutoff = cfg.convergence.start_cutoff;
  } else {
    p.cutoff = scalar<int>(c, "model.cutoff", "an integer or auto");
  }
}

void parse_spin(const YAML::Node& m, ScenarioConfig& cfg) {
  check_keys(m, "model", {"type", "delta_Omega", "drives", "J", "Gamma", "lattice", "n_sites", "edges"});
  SpinLatticeParams& p = cfg.spin;
  p.delta_Omega = get_double(m, "model", "delta_Omega");
  p.drives = get_list<double>(m, "model", "drives", "a number");
  p.J = get_double(m, "model", "J");
  p.Gamma = get_double(m, "model", "Gamma", 1.0);
  cfg.lattice = get_string(m, "model", "lattice", std::string("custom"));
  const int n_sites = get_int(m, "model", "n_sites", static_cast<int>(p.drives.size()));
  if (n_sites < 1) config_error("model.n_sites", "must be >= 1");
  const auto n = static_cast<std::size_t>(n_sites);
  if (cfg.lattice == "custom") {
    if (!m["edges"]) config_error("model.edges", "required for a custom lattice");
    p.graph = LatticeGraph(n, get_edges(m, "model"));
  } else {
    if (m["edges"]) config_error("model.edges", "only allowed with lattice: custom");
    if (cfg.lattice == "chain") {
      p.graph = LatticeGraph::chain(n);
    } else if (cfg.lattice == "ring") {
      p.graph = LatticeGraph::ring(n);
    } else if (cfg.lattice == "triangle") {
      p.graph = LatticeGraph::triangle();
    } else if (cfg.lattice == "square") {
      p.graph = LatticeGraph::square();
    } else {
      config_error("model.lattice", "expected chain, ring, triangle, square or custom");
    }
    if (m["n_sites"] && p.graph.n_sites() != n)
      config_error("model.n_sites", "does not match the " + cfg.lattice + " lattice");
  }
}

void parse_initial(const YAML::Node& node, ScenarioConfig& cfg) {
  std::string type;
  if (node.IsScalar()) {
    type = node.Scalar();
  } else {
    check_keys(node, "initial_state", {"type", "occupations"});
    type = get_string(node, "initial_state", "type");
  }
  if (type == "vacuum") {
    cfg.initial = InitialKind::Vacuum;
  } else if (type == "all_ground") {
    cfg.initial = InitialKind::AllGround;
  } else if (type == "fock") {
    cfg.initial = InitialKind::Fock;
    if (!node.IsMap()) config_error("initial_state.occupations", "required for a fock state");
    cfg.occupations = get_list<int>(node, "initial_state", "occupations", "an integer");
  } else {
    config_error("initial_state.type", "expected vacuum, all_ground or fock, got '" + type + "'");
  }
  if (cfg.initial != InitialKind::Fock && node.IsMap() && node["occupations"])
    config_error("initial_state.occupations", "only allowed for a fock state");
}

// Shortest %g form that reads back to the same double.
std::string fmt(double x) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s + "]";
}

std::string fmt_edges(const std::vector<std::pair<std::size_t, std::size_t>>& e) {
  std::string s = "[";
  for (std::size_t i = 0; i < e.size(); ++i)
    s += (i ? ", [" : "[") + std::to_string(e[i].first + 1) + ", " + std::to_string(e[i].second + 1) +
         "]";
  return s + "]";
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

ScenarioConfig parse_scenario(const std::string& yaml_text, const std::string& name) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw InvalidArgument(std::string("config: parse error: ") + e.what());
  }
  check_keys(root, "", {"model", "initial_state", "t_max", "n_points", "observables", "mapping",
                        "integrator", "convergence", "steady"});
  ScenarioConfig cfg;
  cfg.name = name;

  // The sweep bounds feed `cutoff: auto`, so read them first.
  if (const YAML::Node c = root["convergence"]) {
    check_keys(c, "convergence", {"start_cutoff", "max_cutoff", "step", "tol"});
    cfg.convergence.start_cutoff = get_int(c, "convergence", "start_cutoff", cfg.convergence.start_cutoff);
    cfg.convergence.max_cutoff = get_int(c, "convergence", "max_cutoff", cfg.convergence.max_cutoff);
    cfg.convergence.step = get_int(c, "convergence", "step", cfg.convergence.step);
    cfg.convergence.tol = get_double(c, "convergence", "tol", cfg.convergence.tol);
  }

  const YAML::Node model = root["model"];
  if (!model) config_error("model", "required");
  if (!model.IsMap()) config_error("model", "expected a mapping");
  const std::string type = get_string(model, "model", "type");
  if (type == "dimer") {
    cfg.kind = ModelKind::Dimer;
    parse_dimer(model, cfg);
  } else if (type == "spin") {
    cfg.kind = ModelKind::Spin;
    parse_spin(model, cfg);
  } else {
    config_error("model.type", "expected dimer or spin, got '" + type + "'");
  }

  if (const YAML::Node init = root["initial_state"]) parse_initial(init, cfg);
  cfg.t_max = get_double(root, "", "t_max", 5.0);
  const int n_points = get_int(root, "", "n_points", 501);
  if (n_points < 2) config_error("n_points", "must be >= 2");
  cfg.n_points = static_cast<std::size_t>(n_points);
  cfg.observables = get_list<std::string>(root, "", "observables", "an observable name");

  if (const YAML::Node m = root["mapping"]) {
    check_keys(m, "mapping", {"run_partner", "apply_gauge", "tolerance", "moment_order"});
    cfg.mapping.run_partner = get_bool(m, "mapping", "run_partner", false);
    cfg.mapping.apply_gauge = get_bool(m, "mapping", "apply_gauge", false);
    cfg.mapping.tolerance = get_double(m, "mapping", "tolerance", cfg.mapping.tolerance);
    cfg.mapping.moment_order = get_int(m, "mapping", "moment_order", 0);
  }
  if (const YAML::Node in = root["integrator"]) {
    check_keys(in, "integrator", {"method", "rtol", "atol", "fixed_step", "stability_cap"});
    const std::string method = get_string(in, "integrator", "method", std::string("dopri45"));
    if (method == "dopri45") {
      cfg.evolve.method = Integrator::DormandPrince45;
    } else if (method == "rk4") {
      cfg.evolve.method = Integrator::FixedRK4;
    } else {
      config_error("integrator.method", "expected dopri45 or rk4, got '" + method + "'");
    }
    cfg.evolve.rtol = get_double(in, "integrator", "rtol", cfg.evolve.rtol);
    cfg.evolve.atol = get_double(in, "integrator", "atol", cfg.evolve.atol);
    cfg.evolve.fixed_step = get_double(in, "integrator", "fixed_step", cfg.evolve.fixed_step);
    cfg.evolve.stability_cap = get_bool(in, "integrator", "stability_cap", true);
  }
  if (const YAML::Node s = root["steady"]) {
    check_keys(s, "steady", {"residual_tol", "relax_step", "correspondence_tol"});
    cfg.steady.residual_tol = get_double(s, "steady", "residual_tol", cfg.steady.residual_tol);
    cfg.steady.relax_step = get_double(s, "steady", "relax_step", cfg.steady.relax_step);
    cfg.steady_correspondence_tol =
        get_double(s, "steady", "correspondence_tol", cfg.steady_correspondence_tol);
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str(), path.stem().string());
}

void ScenarioConfig::validate() const {
  if (!(t_max > 0.0) || !std::isfinite(t_max)) config_error("t_max", "must be > 0");
  if (n_points < 2) config_error("n_points", "must be >= 2");
  if (observables.empty()) config_error("observables", "at least one observable is required");
  if (!(mapping.tolerance > 0.0)) config_error("mapping.tolerance", "must be > 0");
  if (mapping.moment_order < 0) config_error("mapping.moment_order", "must be >= 0");
  if (!(evolve.rtol > 0.0)) config_error("integrator.rtol", "must be > 0");
  if (!(evolve.atol > 0.0)) config_error("integrator.atol", "must be > 0");
  if (!(evolve.fixed_step > 0.0)) config_error("integrator.fixed_step", "must be > 0");
  if (convergence.start_cutoff < 1 || convergence.step < 1 ||
      convergence.max_cutoff < convergence.start_cutoff + convergence.step)
    config_error("convergence", "need start_cutoff >= 1, step >= 1, max_cutoff >= start + step");
  if (!(convergence.tol > 0.0)) config_error("convergence.tol", "must be > 0");
  if (!(steady.residual_tol > 0.0)) config_error("steady.residual_tol", "must be > 0");
  if (!(steady.relax_step >= 0.0)) config_error("steady.relax_step", "must be >= 0");
  if (!(steady_correspondence_tol > 0.0)) config_error("steady.correspondence_tol", "must be > 0");

  std::size_t n_sites = 0;
  int max_occupation = 1;
  if (kind == ModelKind::Dimer) {
    if (!(dimer.gamma > 0.0)) config_error("model.gamma", "must be > 0");
    if (dimer.cutoff < 1) config_error("model.cutoff", "must be >= 1");
    dimer.validate();
    n_sites = dimer.n_sites;
    max_occupation = dimer.cutoff;
    if (mapping.moment_order > 0 && dimer.n_sites != 2)
      config_error("mapping.moment_order", "moments are defined for two sites only");
  } else {
    if (!(spin.Gamma > 0.0)) config_error("model.Gamma", "must be > 0");
    spin.validate();
    n_sites = spin.graph.n_sites();
    if (mapping.moment_order > 0) config_error("mapping.moment_order", "dimer models only");
  }
  if (initial == InitialKind::Fock) {
    if (occupations.size() != n_sites)
      config_error("initial_state.occupations", std::to_string(occupations.size()) +
                                                    " entries for " + std::to_string(n_sites) +
                                                    " sites");
    for (std::size_t k = 0; k < occupations.size(); ++k)
      if (occupations[k] < 0 || occupations[k] > max_occupation)
        config_error("initial_state.occupations[" + std::to_string(k) + "]",
                     "outside 0.." + std::to_string(max_occupation));
  }
}

std::map<std::string, std::string> ScenarioConfig::flatten() const {
  std::map<std::string, std::string> m;
  if (kind == ModelKind::Dimer) {
    m["model.type"] = "dimer";
    m["model.U"] = fmt(dimer.U);
    m["model.delta_omega"] = fmt(dimer.delta_omega);
    m["model.epsilon"] = fmt(dimer.epsilon);
    m["model.J"] = fmt(dimer.J);
    m["model.gamma"] = fmt(dimer.gamma);
    m["model.n_sites"] = std::to_string(dimer.n_sites);
    m["model.edges"] = fmt_edges(dimer.graph().edges());
    m["model.cutoff"] = std::to_string(dimer.cutoff);
  } else {
    m["model.type"] = "spin";
    m["model.delta_Omega"] = fmt(spin.delta_Omega);
    m["model.drives"] = fmt_list(spin.drives);
    m["model.J"] = fmt(spin.J);
    m["model.Gamma"] = fmt(spin.Gamma);
    m["model.lattice"] = lattice;
    m["model.n_sites"] = std::to_string(spin.graph.n_sites());
    m["model.edges"] = fmt_edges(spin.graph.edges());
  }
  switch (initial) {
    case InitialKind::Vacuum: m["initial_state.type"] = "vacuum"; break;
    case InitialKind::AllGround: m["initial_state.type"] = "all_ground"; break;
    case InitialKind::Fock: {
      m["initial_state.type"] = "fock";
      std::vector<double> occ(occupations.begin(), occupations.end());
      m["initial_state.occupations"] = fmt_list(occ);
      break;
    }
  }
  m["t_max"] = fmt(t_max);
  m["n_points"] = std::to_string(n_points);
  std::string obs;
  for (std::size_t i = 0; i < observables.size(); ++i) obs += (i ? ", " : "") + observables[i];
  m["observables"] = "[" + obs + "]";
  m["mapping.run_partner"] = mapping.run_partner ? "true" : "false";
  m["mapping.apply_gauge"] = mapping.apply_gauge ? "true" : "false";
  m["mapping.tolerance"] = fmt(mapping.tolerance);
  m["mapping.moment_order"] = std::to_string(mapping.moment_order);
  m["integrator.method"] = evolve.method == Integrator::FixedRK4 ? "rk4" : "dopri45";
  m["integrator.rtol"] = fmt(evolve.rtol);
  m["integrator.atol"] = fmt(evolve.atol);
  m["integrator.fixed_step"] = fmt(evolve.fixed_step);
  m["integrator.stability_cap"] = evolve.stability_cap ? "true" : "false";
  m["tolerances.trace"] = fmt(evolve.tolerances.trace);
  m["tolerances.hermiticity"] = fmt(evolve.tolerances.hermiticity);
  m["tolerances.positivity"] = fmt(evolve.tolerances.positivity);
  m["convergence.start_cutoff"] = std::to_string(convergence.start_cutoff);
  m["convergence.max_cutoff"] = std::to_string(convergence.max_cutoff);
  m["convergence.step"] = std::to_string(convergence.step);
  m["convergence.tol"] = fmt(convergence.tol);
  m["steady.residual_tol"] = fmt(steady.residual_tol);
  m["steady.relax_step"] = fmt(steady.relax_step);
  m["steady.correspondence_tol"] = fmt(steady_correspondence_tol);
  return m;
}

LindbladModel build_model(const ScenarioConfig& cfg) {
  return cfg.kind == ModelKind::Dimer ? build_dimer(cfg.dimer) : build_spin_lattice(cfg.spin);
}

DensityMatrix initial_state(const ScenarioConfig& cfg, const HilbertSpace& space) {
  if (cfg.initial == InitialKind::Fock) return DensityMatrix::fock(space, cfg.occupations);
  // Index 0 is the vacuum for bosons and |g...g> for spins.
  return DensityMatrix::vacuum(space);
}

Gauge scenario_gauge(const ScenarioConfig& cfg) {
  if (!cfg.mapping.apply_gauge) return Gauge::None;
  return cfg.kind == ModelKind::Dimer ? Gauge::ParitySite : Gauge::SpinFlip;
}

// ---------------------------------------------------------------------------
// Observables

Operator parse_observable(const std::string& name, const HilbertSpace& space) {
  static const std::regex moment(R"(A_(\d+)_(\d+)_(\d+)_(\d+))");
  static const std::regex local(R"((n|a|sm|sp|sx|sy|sz)([1-9]\d*))");
  std::smatch m;
  if (name == "N") return total_excitation(space);
  if (std::regex_match(name, m, moment))
    return moment_operator(space, {std::stoi(m[1]), std::stoi(m[2]), std::stoi(m[3]), std::stoi(m[4])});
  if (!std::regex_match(name, m, local))
    throw InvalidArgument("observable '" + name + "': unknown name");
  const std::string kind = m[1];
  const std::size_t site = std::stoul(m[2]) - 1;
  if (site >= space.n_sites())
    throw InvalidArgument("observable '" + name + "': site out of range (1.." +
                          std::to_string(space.n_sites()) + ")");
  const bool spin = space.site(site).kind == SiteKind::Spin;
  if (kind == "n")
    return spin ? spin_op(space, site, SpinComponent::Raise) * spin_op(space, site, SpinComponent::Lower)
                : number(space, site);
  if (kind == "a") {
    if (spin) throw InvalidArgument("observable '" + name + "': site is a spin; use sm");
    return annihilation(space, site);
  }
  if (!spin) throw InvalidArgument("observable '" + name + "': site is bosonic");
  if (kind == "sm") return spin_op(space, site, SpinComponent::Lower);
  if (kind == "sp") return spin_op(space, site, SpinComponent::Raise);
  if (kind == "sx") return spin_op(space, site, SpinComponent::X);
  if (kind == "sy") return spin_op(space, site, SpinComponent::Y);
  return spin_op(space, site, SpinComponent::Z);
}

std::vector<NamedObservable> resolve_observables(const std::vector<std::string>& names,
                                                 const HilbertSpace& space) {
  std::vector<NamedObservable> out;
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (!seen.insert(n).second) throw InvalidArgument("observable '" + n + "' listed twice");
    out.push_back({n, parse_observable(n, space)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output

namespace {

void commit_file(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + tmp.string());
    f << content;
    f.flush();
    if (!f) {
      f.close();
      fs::remove(tmp, ec);
      throw IoError("write failed for " + tmp.string());
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

}  // namespace

void write_csv(const fs::path& path, std::span<const double> t_grid,
               const std::vector<std::string>& names,
               const std::vector<std::vector<cplx>>& expectations, std::size_t column_offset) {
  if (expectations.size() != t_grid.size())
    throw InvalidArgument("write_csv: " + std::to_string(expectations.size()) + " rows for " +
                          std::to_string(t_grid.size()) + " grid points");
  std::string text = "t";
  for (const auto& n : names) text += "," + n + "_re," + n + "_im";
  text += "\n";
  char buf[64];
  for (std::size_t t = 0; t < t_grid.size(); ++t) {
    std::snprintf(buf, sizeof buf, "%.15e", t_grid[t]);
    text += buf;
    for (std::size_t k = 0; k < names.size(); ++k) {
      const cplx v = expectations[t].at(column_offset + k);
      std::snprintf(buf, sizeof buf, ",%.15e,%.15e", v.real(), v.imag());
      text += buf;
    }
    text += "\n";
  }
  commit_file(path, text);
}

void write_manifest(const fs::path& path, const std::map<std::string, std::string>& entries) {
  std::string text;
  for (const auto& [k, v] : entries) text += k + " = " + v + "\n";
  commit_file(path, text);
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  std::stringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');) table.header.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream rs(line);
    for (std::string cell; std::getline(rs, cell, ',');) {
      char* end = nullptr;
      row.push_back(std::strtod(cell.c_str(), &end));
      if (end == cell.c_str() || *end != '\0') throw IoError(path.string() + ": bad number '" + cell + "'");
    }
    if (row.size() != table.header.size())
      throw IoError(path.string() + ": row width does not match the header");
    table.rows.push_back(std::move(row));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Commands

void apply_overrides(ScenarioConfig& cfg, const CommandOptions& opts, TolTarget target) {
  if (opts.deterministic) cfg.evolve.method = Integrator::FixedRK4;
  if (opts.cutoff) {
    if (cfg.kind != ModelKind::Dimer) throw InvalidArgument("--cutoff: spin models have no cutoff");
    cfg.dimer.cutoff = *opts.cutoff;
    cfg.auto_cutoff = false;
  }
  if (opts.tol) {
    switch (target) {
      case TolTarget::Mapping: cfg.mapping.tolerance = *opts.tol; break;
      case TolTarget::Convergence: cfg.convergence.tol = *opts.tol; break;
      case TolTarget::SteadyCorrespondence: cfg.steady_correspondence_tol = *opts.tol; break;
    }
  }
  cfg.validate();
}

fs::path resolve_out_dir(const CommandOptions& opts) {
  if (!opts.out_dir.empty()) return opts.out_dir;
  if (const char* env = std::getenv("HSI_OUT_DIR"); env && *env) return env;
  return "hsi_out";
}

namespace {

using Clock = std::chrono::steady_clock;

struct Prepared {
  ScenarioConfig cfg;
  LindbladModel q1;
  DensityMatrix rho0;
  std::vector<NamedObservable> observables;
  std::vector<double> grid;
  std::map<std::string, std::string> manifest;
  fs::path out_dir;
};

ConvergenceResult sweep_cutoff(const ScenarioConfig& cfg, const std::vector<double>& grid) {
  if (cfg.kind != ModelKind::Dimer) throw InvalidArgument("converge: spin models have no cutoff");
  ConvergenceOptions co;
  co.start_cutoff = cfg.convergence.start_cutoff;
  co.max_cutoff = cfg.convergence.max_cutoff;
  co.cutoff_step = cfg.convergence.step;
  co.tol = cfg.convergence.tol;
  co.evolve = cfg.evolve;
  auto family = [&](int n) {
    DimerParams p = cfg.dimer;
    p.cutoff = n;
    return build_dimer(p);
  };
  auto observables = [&](const HilbertSpace& space) {
    std::vector<Operator> ops;
    for (const auto& o : resolve_observables(cfg.observables, space)) ops.push_back(o.op);
    return ops;
  };
  auto initial = [&](const HilbertSpace& space) {
    if (cfg.initial == InitialKind::Fock) {
      const int top = *std::max_element(cfg.occupations.begin(), cfg.occupations.end());
      if (top > space.site(0).cutoff)
        throw InvalidArgument("converge: start_cutoff below the initial occupation " +
                              std::to_string(top));
    }
    return initial_state(cfg, space);
  };
  return convergence_check(family, observables, initial, grid, co);
}

std::string sweep_text(const ConvergenceResult& r) {
  std::string s;
  for (const auto& [n, dev] : r.sweep) s += (s.empty() ? "" : "; ") + std::to_string(n) + ":" + fmt(dev);
  return s;
}

Prepared prepare(const CommandOptions& opts, TolTarget target, const std::string& command,
                 std::ostream& out) {
  Prepared p;
  p.cfg = load_scenario(opts.config);
  apply_overrides(p.cfg, opts, target);
  p.grid = uniform_grid(p.cfg.t_max, p.cfg.n_points);
  p.out_dir = resolve_out_dir(opts);
  p.manifest["cutoff_source"] = p.cfg.kind == ModelKind::Dimer ? "config" : "none";
  if (p.cfg.kind == ModelKind::Dimer && p.cfg.auto_cutoff) {
    out << "choosing cutoff by convergence sweep...\n";
    const ConvergenceResult r = sweep_cutoff(p.cfg, p.grid);
    p.cfg.dimer.cutoff = r.cutoff;
    p.manifest["cutoff_source"] = "sweep";
    p.manifest["convergence.sweep"] = sweep_text(r);
  }
  p.q1 = build_model(p.cfg);
  p.rho0 = initial_state(p.cfg, p.q1.space());
  p.observables = resolve_observables(p.cfg.observables, p.q1.space());

  for (const auto& [k, v] : p.cfg.flatten()) p.manifest["config." + k] = v;
  p.manifest["command"] = command;
  p.manifest["config_path"] = opts.config.string();
  p.manifest["scenario"] = p.cfg.name;
  p.manifest["toolkit_version"] = kToolkitVersion;
  p.manifest["hilbert_dim"] = std::to_string(p.q1.dim());
  p.manifest["cutoff"] = p.cfg.kind == ModelKind::Dimer ? std::to_string(p.cfg.dimer.cutoff) : "none";
  return p;
}

void record_trajectory(std::map<std::string, std::string>& m, const std::string& key,
                       const Trajectory& t) {
  m[key + ".accepted_steps"] = std::to_string(t.accepted_steps);
  m[key + ".rejected_steps"] = std::to_string(t.rejected_steps);
  m[key + ".max_trace_error"] = fmt(t.worst.trace_error);
  m[key + ".max_hermiticity_error"] = fmt(t.worst.hermiticity_error);
  m[key + ".min_eigenvalue"] = fmt(t.worst.min_eigenvalue);
  m[key + ".max_leakage"] = fmt(t.max_leakage);
  std::string w;
  for (const auto& s : t.warnings) w += (w.empty() ? "" : " | ") + s;
  m[key + ".warnings"] = w.empty() ? "none" : w;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<std::string> names_of(const std::vector<NamedObservable>& obs) {
  std::vector<std::string> n;
  for (const auto& o : obs) n.push_back(o.name);
  return n;
}

template <class Body>
int guarded(Body&& body) {
  try {
    return body();
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return exit_code::kIoError;
  } catch (const InvalidArgument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return exit_code::kConfigError;
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return exit_code::kInvariantViolation;
  } catch (const DegenerateSteadyState& e) {
    std::cerr << "degenerate steady state: " << e.what() << "\n";
    return exit_code::kCheckFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code::kCheckFailed;
  }
}

struct CheckLine {
  std::string check, item;
  double value = 0.0, tolerance = 0.0;
  bool pass = false;
};

}  // namespace

int cmd_run(const CommandOptions& opts, std::ostream& out) {
  return guarded([&] {
    const auto t0 = Clock::now();
    Prepared p = prepare(opts, TolTarget::Mapping, "run", out);
    const std::vector<std::string> names = names_of(p.observables);
    const fs::path q1_csv = p.out_dir / (p.cfg.name + "_q1.csv");
    const fs::path q2_csv = p.out_dir / (p.cfg.name + "_q2.csv");

    if (p.cfg.mapping.run_partner) {
      const MappedPair pair = map_pair(p.q1, scenario_gauge(p.cfg), 0);
      const DualRun run = simulate_pair(pair, p.rho0, p.observables, p.grid, p.cfg.evolve);
      const VerificationReport report =
          compare_dual_run(run, p.observables, p.grid, p.cfg.mapping.tolerance);
      write_csv(q1_csv, p.grid, names, run.q1.expectations, names.size());
      write_csv(q2_csv, p.grid, names, run.q2.expectations);
      record_trajectory(p.manifest, "q1", run.q1);
      record_trajectory(p.manifest, "q2", run.q2);
      p.manifest["gauge"] = pair.note;
      for (const auto& c : report.observables) {
        p.manifest["mapping_deviation." + c.name] = fmt(c.max_deviation);
        out << "  " << c.name << ": max |<A>_2 - conj<B>_1| = " << fmt(c.max_deviation)
            << (c.pass ? " (within " : " (EXCEEDS ") << fmt(c.tolerance) << ")\n";
      }
      p.manifest["outputs"] = q1_csv.string() + ", " + q2_csv.string();
    } else {
      std::vector<Operator> ops;
      for (const auto& o : p.observables) ops.push_back(o.op);
      const Trajectory tr = evolve(p.q1, p.rho0, p.grid, ops, p.cfg.evolve);
      write_csv(q1_csv, p.grid, names, tr.expectations);
      record_trajectory(p.manifest, "q1", tr);
      p.manifest["outputs"] = q1_csv.string();
    }
    p.manifest["wall_time_s"] = fmt(seconds_since(t0));
    const fs::path manifest = p.out_dir / (p.cfg.name + "_run_manifest.txt");
    write_manifest(manifest, p.manifest);
    out << "wrote " << p.manifest["outputs"] << " and " << manifest.string() << "\n";
    return exit_code::kOk;
  });
}

int cmd_verify(const CommandOptions& opts, std::ostream& out) {
  return guarded([&] {
    const auto t0 = Clock::now();
    Prepared p = prepare(opts, TolTarget::Mapping, "verify", out);
    std::vector<CheckLine> lines;

    // Mapping correspondence, with the dimer moments when requested.
    std::vector<NamedObservable> observables = p.observables;
    if (p.cfg.kind == ModelKind::Dimer && p.cfg.mapping.moment_order > 0)
      for (const auto& idx : moment_indices(p.cfg.mapping.moment_order))
        if (idx.order() > 0 && std::none_of(observables.begin(), observables.end(),
                                            [&](const auto& o) { return o.name == idx.name(); }))
          observables.push_back({idx.name(), moment_operator(p.q1.space(), idx)});
    const MappedPair pair = map_pair(p.q1, scenario_gauge(p.cfg), 0);
    p.manifest["gauge"] = pair.note;
    try {
      const DualRun run = simulate_pair(pair, p.rho0, observables, p.grid, p.cfg.evolve);
      for (const auto& c : compare_dual_run(run, observables, p.grid, p.cfg.mapping.tolerance).observables)
        lines.push_back({"hsi_mapping", c.name, c.max_deviation, c.tolerance, c.pass});
      const StateTolerances& tol = p.cfg.evolve.tolerances;
      for (const auto* tr : {&run.q1, &run.q2}) {
        const std::string sys = tr == &run.q1 ? "q1" : "q2";
        const StateAudit& a = tr->worst;
        lines.push_back({"state_invariants", sys + ".trace", a.trace_error, tol.trace,
                         a.trace_error < tol.trace});
        lines.push_back({"state_invariants", sys + ".hermiticity", a.hermiticity_error,
                         tol.hermiticity, a.hermiticity_error < tol.hermiticity});
        lines.push_back({"state_invariants", sys + ".neg_eigenvalue", -a.min_eigenvalue,
                         tol.positivity, a.min_eigenvalue >= -tol.positivity});
        record_trajectory(p.manifest, sys, *tr);
      }
    } catch (const InvariantViolation& e) {
      out << "  state invariant violated: " << e.what() << "\n";
      lines.push_back({"state_invariants", "run", 1.0, 0.0, false});
    }

    // Moment hierarchy identity on the initial state and seeded random
    // low-occupation states, at a cutoff high enough for the identity to be
    // exact in the truncated space.
    if (p.cfg.kind == ModelKind::Dimer && p.cfg.dimer.n_sites == 2) {
      constexpr int kOrder = 3;
      DimerParams params = p.cfg.dimer;
      int top = 0;
      for (int o : p.cfg.occupations) top = std::max(top, o);
      params.cutoff = std::max({params.cutoff, top + kOrder + 1, 3 + kOrder + 1});
      const HilbertSpace space = build_dimer(params).space();
      std::mt19937_64 rng(20260101);
      std::vector<DensityMatrix> states{initial_state(p.cfg, space)};
      for (int i = 0; i < 10; ++i) states.push_back(random_low_occupation_state(space, 3, rng));
      double eom = 0.0, conj_res = 0.0;
      for (const auto& rho : states) {
        eom = std::max(eom, eom_consistency_check(params, rho, kOrder, 1e-10).max_residual);
        const MomentTable table = moments_of(rho, kOrder + 2);
        for (const auto& idx : moment_indices(kOrder))
          conj_res = std::max(conj_res, conjugate_rhs_check(params, idx, table, 1e-12));
      }
      for (int i = 0; i < 100; ++i) {
        const MomentTable table = random_moment_table(kOrder + 2, rng);
        for (const auto& idx : moment_indices(kOrder))
          conj_res = std::max(conj_res, conjugate_rhs_check(params, idx, table, 1e-12));
      }
      lines.push_back({"moment_eom", "max_residual", eom, 1e-10, eom < 1e-10});
      lines.push_back({"moment_conjugation", "max_residual", conj_res, 1e-12, conj_res < 1e-12});
      p.manifest["moment_check_cutoff"] = std::to_string(params.cutoff);
    }

    std::string csv = "check,item,value,tolerance,status\n";
    bool all = true;
    for (const auto& l : lines) {
      all = all && l.pass;
      csv += l.check + "," + l.item + "," + fmt(l.value) + "," + fmt(l.tolerance) + "," +
             (l.pass ? "PASS" : "FAIL") + "\n";
      out << "  " << (l.pass ? "PASS " : "FAIL ") << l.check << " " << l.item << ": " << fmt(l.value)
          << " (tolerance " << fmt(l.tolerance) << ")\n";
    }
    const fs::path report = p.out_dir / (p.cfg.name + "_verify.csv");
    commit_file(report, csv);
    p.manifest["verify.pass"] = all ? "true" : "false";
    p.manifest["wall_time_s"] = fmt(seconds_since(t0));
    write_manifest(p.out_dir / (p.cfg.name + "_verify_manifest.txt"), p.manifest);
    out << (all ? "all checks passed" : "verification FAILED") << "; report " << report.string() << "\n";
    return all ? exit_code::kOk : exit_code::kCheckFailed;
  });
}

int cmd_steady(const CommandOptions& opts, std::ostream& out) {
  return guarded([&] {
    const auto t0 = Clock::now();
    Prepared p = prepare(opts, TolTarget::SteadyCorrespondence, "steady", out);
    std::string csv = "system,observable,re,im\n";
    auto emit = [&](const std::string& sys, const DensityMatrix& rho) {
      for (const auto& o : p.observables) {
        const cplx v = rho.expectation(o.op);
        char buf[96];
        std::snprintf(buf, sizeof buf, "%.15e,%.15e", v.real(), v.imag());
        csv += sys + "," + o.name + "," + buf + "\n";
        out << "  " << sys << " <" << o.name << "> = " << buf << "\n";
      }
    };
    const SteadyState s1 = steady_state(p.q1, p.cfg.steady);
    p.manifest["q1.method"] = s1.method;
    p.manifest["q1.residual"] = fmt(s1.residual);
    emit("q1", s1.rho);
    bool pass = true;
    if (p.cfg.mapping.run_partner) {
      const MappedPair pair = map_pair(p.q1, scenario_gauge(p.cfg), 0);
      const SteadyState s2 = steady_state(pair.q2, p.cfg.steady);
      const double corr = (s2.rho.matrix() - pair.partner_state(s1.rho).matrix()).cwiseAbs().maxCoeff();
      pass = corr < p.cfg.steady_correspondence_tol;
      p.manifest["gauge"] = pair.note;
      p.manifest["q2.method"] = s2.method;
      p.manifest["q2.residual"] = fmt(s2.residual);
      p.manifest["correspondence_residual"] = fmt(corr);
      emit("q2", s2.rho);
      out << "  correspondence residual max|rho_ss,2 - G conj(rho_ss,1) G^+| = " << fmt(corr)
          << (pass ? " (within " : " (EXCEEDS ") << fmt(p.cfg.steady_correspondence_tol) << ")\n";
    }
    const fs::path path = p.out_dir / (p.cfg.name + "_steady.csv");
    commit_file(path, csv);
    p.manifest["wall_time_s"] = fmt(seconds_since(t0));
    write_manifest(p.out_dir / (p.cfg.name + "_steady_manifest.txt"), p.manifest);
    out << "wrote " << path.string() << "\n";
    return pass ? exit_code::kOk : exit_code::kCheckFailed;
  });
}

int cmd_converge(const CommandOptions& opts, std::ostream& out) {
  return guarded([&] {
    const auto t0 = Clock::now();
    ScenarioConfig cfg = load_scenario(opts.config);
    apply_overrides(cfg, opts, TolTarget::Convergence);
    if (cfg.kind != ModelKind::Dimer) throw InvalidArgument("converge: spin models have no cutoff");
    const std::vector<double> grid = uniform_grid(cfg.t_max, cfg.n_points);
    const fs::path out_dir = resolve_out_dir(opts);
    std::string csv = "cutoff,max_deviation\n";
    std::map<std::string, std::string> manifest;
    for (const auto& [k, v] : cfg.flatten()) manifest["config." + k] = v;
    manifest["command"] = "converge";
    manifest["config_path"] = opts.config.string();
    manifest["scenario"] = cfg.name;
    manifest["toolkit_version"] = kToolkitVersion;
    int code = exit_code::kOk;
    try {
      const ConvergenceResult r = sweep_cutoff(cfg, grid);
      for (const auto& [n, dev] : r.sweep) {
        csv += std::to_string(n) + "," + fmt(dev) + "\n";
        out << "  N=" << n << " vs N+" << cfg.convergence.step << ": " << fmt(dev) << "\n";
      }
      manifest["cutoff"] = std::to_string(r.cutoff);
      manifest["convergence.sweep"] = sweep_text(r);
      out << "chosen cutoff " << r.cutoff << " (tolerance " << fmt(cfg.convergence.tol) << ")\n";
    } catch (const ConvergenceFailure& e) {
      out << "  " << e.what() << "\n";
      manifest["cutoff"] = "none";
      code = exit_code::kCheckFailed;
    }
    commit_file(out_dir / (cfg.name + "_converge.csv"), csv);
    manifest["wall_time_s"] = fmt(seconds_since(t0));
    write_manifest(out_dir / (cfg.name + "_converge_manifest.txt"), manifest);
    return code;
  });
}

}  // namespace hsi
