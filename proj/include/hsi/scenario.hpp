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

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hsi/lindblad.hpp"
#include "hsi/mapping.hpp"
#include "hsi/models.hpp"

namespace hsi {

inline constexpr const char* kToolkitVersion = "0.3.0";

/// Scenario files are YAML. Every mapping is checked against a fixed key set;
/// an unknown key is an error. Sites are numbered from 1 in the file.
///
///   model:
///     type: dimer               # or spin
///     U: 5.0                    # dimer: U, delta_omega, epsilon, J, gamma,
///     delta_omega: 1.0          #   cutoff, n_sites, edges
///     epsilon: 15.0
///     J: 10.0
///     gamma: 1.0
///     cutoff: 11
///   initial_state: {type: fock, occupations: [1, 1]}   # or vacuum, all_ground
///   t_max: 5.0
///   n_points: 501
///   observables: [n1, n2]
///   mapping: {run_partner: true, apply_gauge: true, tolerance: 1.0e-6}
///   integrator: {method: dopri45, rtol: 1.0e-8, atol: 1.0e-10, fixed_step: 1.0e-3}
///   convergence: {start_cutoff: 4, max_cutoff: 24, step: 2, tol: 1.0e-6}
///   steady: {residual_tol: 1.0e-10}
///
/// Spin models take delta_Omega, drives (one per site), J, Gamma and a lattice
/// (chain, ring, triangle, square, or n_sites plus edges).
enum class ModelKind { Dimer, Spin };
enum class InitialKind { Vacuum, Fock, AllGround };

struct MappingSpec {
  bool run_partner = false;
  bool apply_gauge = false;
  double tolerance = 1e-6;
  /// Dimer only: also compare every moment up to this order (0 disables).
  int moment_order = 0;
};

struct ConvergenceSpec {
  int start_cutoff = 2;
  int max_cutoff = 30;
  int step = 2;
  double tol = 1e-6;
};

struct ScenarioConfig {
  std::string name = "scenario";
  ModelKind kind = ModelKind::Dimer;
  DimerParams dimer;
  SpinLatticeParams spin;
  std::string lattice = "custom";
  InitialKind initial = InitialKind::Vacuum;
  std::vector<int> occupations;
  double t_max = 5.0;
  std::size_t n_points = 501;
  std::vector<std::string> observables;
  MappingSpec mapping;
  EvolveOptions evolve;
  ConvergenceSpec convergence;
  SteadyStateOptions steady;
  /// Largest entry of rho_ss,2 - G conj(rho_ss,1) G^+ accepted by `steady`.
  double steady_correspondence_tol = 1e-8;
  /// Dimer cutoff chosen by a convergence sweep at run time.
  bool auto_cutoff = false;

  /// Throws InvalidArgument naming the offending field.
  void validate() const;
  /// Flat key = value view of every resolved setting, sites 1-based.
  std::map<std::string, std::string> flatten() const;
};

/// Parse errors and schema violations are reported as InvalidArgument.
ScenarioConfig parse_scenario(const std::string& yaml_text, const std::string& name = "scenario");
/// Name defaults to the file stem. Throws IoError when the file is unreadable.
ScenarioConfig load_scenario(const std::filesystem::path& path);

LindbladModel build_model(const ScenarioConfig& cfg);
DensityMatrix initial_state(const ScenarioConfig& cfg, const HilbertSpace& space);
Gauge scenario_gauge(const ScenarioConfig& cfg);

/// Observable names: n<k> excitation number (a^+a or s+s-), a<k>, sm<k>,
/// sp<k>, sx<k>, sy<k>, sz<k>, N (total excitation), A_p_q_r_s (dimer
/// moments). Throws InvalidArgument for unknown names or wrong site kinds.
Operator parse_observable(const std::string& name, const HilbertSpace& space);
std::vector<NamedObservable> resolve_observables(const std::vector<std::string>& names,
                                                 const HilbertSpace& space);

/// Rows t,<name>_re,<name>_im with %.15e values; written to a temporary file
/// and renamed into place. Throws IoError.
void write_csv(const std::filesystem::path& path, std::span<const double> t_grid,
               const std::vector<std::string>& names,
               const std::vector<std::vector<cplx>>& expectations, std::size_t column_offset = 0);

/// Flat "key = value" lines, sorted by key. Throws IoError.
void write_manifest(const std::filesystem::path& path,
                    const std::map<std::string, std::string>& entries);

/// Reads back a CSV written by write_csv: header names and numeric rows.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
CsvTable read_csv(const std::filesystem::path& path);

// Command entry points shared by the CLI and the tests. Each returns the
// process exit code and reports progress on out.

struct CommandOptions {
  std::filesystem::path config;
  std::filesystem::path out_dir;
  bool deterministic = false;
  std::optional<double> tol;
  std::optional<int> cutoff;
};

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kCheckFailed = 1;
inline constexpr int kConfigError = 2;
inline constexpr int kInvariantViolation = 3;
inline constexpr int kIoError = 4;
}  // namespace exit_code

/// Which tolerance --tol replaces.
enum class TolTarget { Mapping, Convergence, SteadyCorrespondence };

/// Applies --deterministic, --tol and --cutoff to a loaded configuration.
void apply_overrides(ScenarioConfig& cfg, const CommandOptions& opts, TolTarget target);

/// --out, else $HSI_OUT_DIR, else ./hsi_out.
std::filesystem::path resolve_out_dir(const CommandOptions& opts);

int cmd_run(const CommandOptions& opts, std::ostream& out);
int cmd_verify(const CommandOptions& opts, std::ostream& out);
int cmd_steady(const CommandOptions& opts, std::ostream& out);
int cmd_converge(const CommandOptions& opts, std::ostream& out);

}  // namespace hsi
