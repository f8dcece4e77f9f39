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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hsi/lindblad.hpp"

namespace hsi {

// Hamiltonian sign inversion.
//
// In the product Fock / sigma_z basis every basis state is invariant under
// time reversal, so T acts as entrywise complex conjugation K. A model
// (H, {rate_j, c_j}) maps to (-K H K, {rate_j, K c_j K}); a state rho maps
// to K rho K, and expectation values obey <A>_2 = conj(<K A K>_1).

/// Largest |Im H_ij| above which a Hamiltonian is refused as not
/// time-reversal invariant in the product basis.
inline constexpr double kTimeReversalTol = 1e-12;

Operator time_reversal_conjugate(const Operator& op);

/// Rescales op by a unit phase so its first nonzero entry (column-major
/// order) is real and positive. D[c] is invariant under this.
Operator canonical_jump(const Operator& op);

/// Throws InvalidArgument if H has an imaginary part above kTimeReversalTol.
LindbladModel hsi_map_model(const LindbladModel& q1);

DensityMatrix map_state(const DensityMatrix& rho);

/// Prediction for <A> in the partner system given <K A K> measured in q1.
inline cplx map_expectation(cplx value_q1) { return std::conj(value_q1); }

/// Diagonal +-1 unitary (as an operator) used by the gauge transforms.
Operator parity_site_unitary(const HilbertSpace& space, std::size_t site);
Operator spin_flip_unitary(const HilbertSpace& space);

/// G H G^+, canonical(G c_j G^+) with G = exp(i pi n_site).
LindbladModel gauge_parity_site(const LindbladModel& q, std::size_t site);
/// Same with G = prod_j exp(i pi s+_j s-_j); requires an all-spin space.
LindbladModel gauge_spin_flip(const LindbladModel& q);

enum class Gauge { None, ParitySite, SpinFlip };

/// A model, its sign-inverted partner, and the gauge unitary G folded into
/// the partner: q2 = G (-K H K) G^+ with jumps G (K c K) G^+.
struct MappedPair {
  LindbladModel q1;
  LindbladModel q2;
  Operator gauge;  // identity when no gauge transform is composed
  std::string note;

  /// Operator B with <A>_2 = conj(<B>_1), i.e. B = K G^+ A G K.
  Operator pullback(const Operator& a) const;
  /// Initial partner state G K rho K G^+.
  DensityMatrix partner_state(const DensityMatrix& rho) const;
};

MappedPair map_pair(const LindbladModel& q1, Gauge gauge = Gauge::None, std::size_t site = 0);

struct NamedObservable {
  std::string name;
  Operator op;
};

struct ObservableCheck {
  std::string name;
  double max_deviation = 0.0;
  double worst_time = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct VerificationReport {
  std::string check;
  std::vector<ObservableCheck> observables;
  bool pass() const;
  double max_deviation() const;
  /// Throws VerificationFailure naming the worst offending observable.
  void require_pass() const;
  /// One line per observable: name,max_deviation,tolerance,PASS|FAIL.
  std::string to_csv() const;
};

struct DualRun {
  Trajectory q1;
  Trajectory q2;
};

/// Runs q1 from rho0 and pair.q2 from pair.partner_state(rho0), in parallel,
/// recording each observable A in q2. q1 records the pullbacks B_k at index k
/// and the observables A_k themselves at index n + k.
DualRun simulate_pair(const MappedPair& pair, const DensityMatrix& rho0,
                      std::span<const NamedObservable> observables, std::span<const double> t_grid,
                      const EvolveOptions& opts = {});

/// Two independent simulations; asserts |<A>_2(t) - conj(<B>_1(t))| < tol
/// on every grid point.
VerificationReport verify_mapping(const MappedPair& pair, const DensityMatrix& rho0,
                                  std::span<const NamedObservable> observables,
                                  std::span<const double> t_grid, double tol,
                                  const EvolveOptions& opts = {});

VerificationReport compare_dual_run(const DualRun& run, std::span<const NamedObservable> observables,
                                    std::span<const double> t_grid, double tol);

}  // namespace hsi
