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

#include <compare>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "hsi/lindblad.hpp"
#include "hsi/models.hpp"

namespace hsi {

/// Normally ordered dimer moment (a1^+)^p (a2^+)^q a1^r a2^s.
struct MomentIndex {
  int p = 0, q = 0, r = 0, s = 0;

  int order() const { return p + q + r + s; }
  /// Index of the Hermitian conjugate moment.
  MomentIndex adjoint() const { return {r, s, p, q}; }
  std::string name() const;
  auto operator<=>(const MomentIndex&) const = default;
};

/// Every index with order <= max_order, in lexicographic order.
std::vector<MomentIndex> moment_indices(int max_order);

/// Moment values at one instant.
class MomentTable {
 public:
  void set(const MomentIndex& idx, cplx value) { values_[idx] = value; }
  bool contains(const MomentIndex& idx) const { return values_.count(idx) != 0; }
  /// Throws InvalidArgument when idx is missing.
  cplx at(const MomentIndex& idx) const;
  std::size_t size() const { return values_.size(); }
  const std::map<MomentIndex, cplx>& values() const { return values_; }

  MomentTable conjugated() const;
  /// max over present pairs of |A(p,q,r,s) - conj(A(r,s,p,q))| and |A(0,0,0,0) - 1|.
  double pairing_violation() const;

 private:
  std::map<MomentIndex, cplx> values_;
};

/// Mixture of a few random pure states supported on Fock levels <= max_level
/// of every site.
DensityMatrix random_low_occupation_state(const HilbertSpace& space, int max_level,
                                          std::mt19937_64& rng);

/// Unphysical random table (complex normal entries) for every index of order
/// <= max_order, for algebraic identity checks.
MomentTable random_moment_table(int max_order, std::mt19937_64& rng);

/// Requires a space of exactly two boson sites.
Operator moment_operator(const HilbertSpace& space, const MomentIndex& idx);
cplx moment_expectation(const DensityMatrix& rho, const MomentIndex& idx);
MomentTable moments_of(const DensityMatrix& rho, int max_order);

/// d<A>/dt from the closed-form dimer equation of motion, using only table
/// entries whose coefficient is nonzero:
///   i dA/dt = [(dw - U)(r+s-p-q) + U(r^2+s^2-p^2-q^2) - i gamma/2 (p+q+r+s)] A
///           + 2U [(r-p) A(p+1,q,r+1,s) + (s-q) A(p,q+1,r,s+1)]
///           + J [r A(p,q,r-1,s+1) + s A(p,q,r+1,s-1) - p A(p-1,q+1,r,s) - q A(p+1,q-1,r,s)]
///           + eps [r A(p,q,r-1,s) - p A(p-1,q,r,s)]
cplx moment_rhs(const DimerParams& params, const MomentIndex& idx, const MomentTable& table);

/// |conj(rhs(params, idx, table)) - rhs(-params, idx, conj(table))|. Throws
/// VerificationFailure above tol.
double conjugate_rhs_check(const DimerParams& params, const MomentIndex& idx,
                           const MomentTable& table, double tol = 1e-12);

struct EomResidual {
  double max_residual = 0.0;
  MomentIndex worst;
  std::map<MomentIndex, double> residuals;
};

/// Compares Tr(A L[rho]) from the Lindblad engine with moment_rhs on the
/// moments of rho, for every index of order <= max_order. rho must have
/// population below 1e-8 on Fock levels above cutoff - max_order - 1 of
/// either site. Throws VerificationFailure naming the index above tol.
EomResidual eom_consistency_check(const DimerParams& params, const DensityMatrix& rho,
                                  int max_order = 3, double tol = 1e-10);

}  // namespace hsi
