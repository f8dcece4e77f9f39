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

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hsi/hilbert.hpp"

namespace hsi {

/// A decoherence channel: rate * D[jump].
struct Channel {
  double rate = 0.0;
  Operator jump;
};

/// Hamiltonian plus decoherence channels on one space. The generator is
///   L[rho] = -i[H, rho] + sum_j rate_j D[c_j] rho,
///   D[c] rho = c rho c^+ - 1/2 c^+ c rho - 1/2 rho c^+ c.
class LindbladModel {
 public:
  LindbladModel() = default;
  /// Throws InvalidArgument unless H is Hermitian (1e-12 relative), all
  /// rates are non-negative and every operator lives on H's space.
  LindbladModel(Operator hamiltonian, std::vector<Channel> channels);

  const HilbertSpace& space() const { return hamiltonian_.space(); }
  std::size_t dim() const { return hamiltonian_.dim(); }
  const Operator& hamiltonian() const { return hamiltonian_; }
  const std::vector<Channel>& channels() const { return channels_; }
  bool has_dissipation() const;

  /// Scratch buffers for apply(); reuse one per integration loop.
  struct Workspace {
    Matrix rho_adj, tmp, c_rho;
  };

  /// Writes L[rho] into out (resized as needed).
  void apply(const Matrix& rho, Matrix& out) const;
  void apply(const Matrix& rho, Matrix& out, Workspace& ws) const;

 private:
  Operator hamiltonian_;
  std::vector<Channel> channels_;
  // -iH - 1/2 sum_j rate_j c_j^+ c_j and the recycling terms.
  SparseMatrix effective_;
  std::vector<SparseMatrix> jumps_;
  std::vector<double> rates_;
};

/// Upper bound on the spectral radius of L; sets the explicit step limit.
double liouvillian_spectral_bound(const LindbladModel& model);

/// Entrywise model equality, with jump operators compared by channel order.
double max_model_diff(const LindbladModel& a, const LindbladModel& b);

struct StateTolerances {
  double trace = 1e-9;
  double hermiticity = 1e-10;
  double positivity = 1e-9;
};

struct StateAudit {
  double trace_error = 0.0;        // |tr rho - 1|
  double hermiticity_error = 0.0;  // max |rho - rho^+|
  double min_eigenvalue = 0.0;     // NaN when not computed
  bool within(const StateTolerances& tol) const;
  std::string describe() const;
};

StateAudit audit_state(const Matrix& rho, bool with_spectrum = true);

/// Hermitian, unit-trace, positive semidefinite matrix on a HilbertSpace.
class DensityMatrix {
 public:
  DensityMatrix() = default;
  /// Validates against tol; throws InvariantViolation on failure.
  DensityMatrix(HilbertSpace space, Matrix rho, const StateTolerances& tol = {});

  static DensityMatrix fock(const HilbertSpace& space, std::span<const int> occupations);
  static DensityMatrix vacuum(const HilbertSpace& space);
  static DensityMatrix pure(const HilbertSpace& space, const Vector& psi);
  static DensityMatrix maximally_mixed(const HilbertSpace& space);

  const HilbertSpace& space() const { return space_; }
  const Matrix& matrix() const { return rho_; }
  std::size_t dim() const { return space_.dim(); }

  cplx expectation(const Operator& op) const;

 private:
  HilbertSpace space_;
  Matrix rho_;
};

/// Tr(op * rho) for a raw matrix.
cplx expectation(const Operator& op, const Matrix& rho);

Matrix dissipator_apply(const Operator& jump, const Matrix& rho);
Matrix liouvillian_apply(const LindbladModel& model, const Matrix& rho);

/// Column-stacking superoperator: vec(L[rho]) = S vec(rho).
SparseMatrix vectorized_liouvillian(const LindbladModel& model);

enum class Integrator { DormandPrince45, FixedRK4 };

struct EvolveOptions {
  Integrator method = Integrator::DormandPrince45;
  double rtol = 1e-8;
  double atol = 1e-10;
  /// Upper bound on the RK4 step; each grid interval is split evenly.
  double fixed_step = 1e-3;
  /// Both methods also cap the step at stability_factor / spectral bound of
  /// L, keeping stiff oscillatory modes inside the stability region (DP5 is
  /// stable on the imaginary axis only up to |h lambda| ~ 1, RK4 to 2.8).
  bool stability_cap = true;
  std::size_t max_steps = 50'000'000;
  bool keep_states = false;
  bool audit_spectrum = true;
  StateTolerances tolerances;
  /// Warn when any boson site's top two Fock levels hold more than this.
  double leakage_threshold = 1e-6;
};

struct Trajectory {
  std::vector<double> times;
  /// expectations[t][k] = <observables[k]>(times[t])
  std::vector<std::vector<cplx>> expectations;
  /// Filled only when EvolveOptions::keep_states is set.
  std::vector<Matrix> states;
  /// Worst snapshot audit over the run.
  StateAudit worst;
  double max_step_trace_error = 0.0;
  /// Largest top-two-level population seen on any boson site.
  double max_leakage = 0.0;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  std::vector<std::string> warnings;

  std::vector<cplx> series(std::size_t observable) const;
};

/// Integrates d rho/dt = L[rho] and records the state (or observables) on
/// t_grid. The grid must start at 0 and increase strictly. Throws
/// InvariantViolation if a step or snapshot breaks the state tolerances.
Trajectory evolve(const LindbladModel& model, const DensityMatrix& rho0,
                  std::span<const double> t_grid, std::span<const Operator> observables = {},
                  const EvolveOptions& opts = {});

/// Evenly spaced grid 0..t_max with n_points entries.
std::vector<double> uniform_grid(double t_max, std::size_t n_points);

struct SteadyStateOptions {
  /// Largest dim^2 handled by sparse LU (direct solve, implicit relaxation).
  std::size_t direct_limit = 250000;
  double residual_tol = 1e-10;
  /// Implicit Euler step for relax_to_steady_state; 0 forces explicit evolution.
  double relax_step = 2.0;
  /// Explicit relaxation evolves in chunks of this length.
  double relax_chunk = 10.0;
  double relax_t_max = 5000.0;
  EvolveOptions evolve;
};

struct SteadyState {
  DensityMatrix rho;
  double residual = 0.0;  // max |L[rho]|
  std::string method;     // "direct" or "relaxation"
};

/// Unique steady state. Throws DegenerateSteadyState when the null space of
/// L is not one-dimensional, ConvergenceFailure if the residual target is
/// not reached.
SteadyState steady_state(const LindbladModel& model, const SteadyStateOptions& opts = {});

/// Long-time evolution from rho0 until max |L[rho]| < opts.residual_tol. Uses
/// implicit Euler steps while dim^2 <= direct_limit, explicit chunks beyond.
SteadyState relax_to_steady_state(const LindbladModel& model, const DensityMatrix& rho0,
                                  const SteadyStateOptions& opts = {});
/// Several starting states sharing one factorization.
std::vector<SteadyState> relax_to_steady_state(const LindbladModel& model,
                                               std::span<const DensityMatrix> initial,
                                               const SteadyStateOptions& opts = {});

/// Dimension of the null space of L, by rank-revealing QR.
std::size_t steady_state_multiplicity(const LindbladModel& model);

struct ConvergenceOptions {
  int start_cutoff = 1;
  int max_cutoff = 30;
  int cutoff_step = 2;
  double tol = 1e-6;
  EvolveOptions evolve;
};

struct ConvergenceResult {
  int cutoff = 0;
  /// (N, max deviation of the observables between N and N + step)
  std::vector<std::pair<int, double>> sweep;
};

using ModelFamily = std::function<LindbladModel(int cutoff)>;
using ObservableFamily = std::function<std::vector<Operator>(const HilbertSpace&)>;
using StateFamily = std::function<DensityMatrix(const HilbertSpace&)>;

/// Smallest cutoff N whose observable trajectories move by less than tol
/// (max over grid) when the cutoff is raised to N + cutoff_step.
ConvergenceResult convergence_check(const ModelFamily& family, const ObservableFamily& observables,
                                    const StateFamily& initial, std::span<const double> t_grid,
                                    const ConvergenceOptions& opts = {});

}  // namespace hsi
