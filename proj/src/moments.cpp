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

#include "hsi/moments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hsi/errors.hpp"

namespace hsi {

std::string MomentIndex::name() const {
  std::ostringstream os;
  os << "A_" << p << "_" << q << "_" << r << "_" << s;
  return os.str();
}

std::vector<MomentIndex> moment_indices(int max_order) {
  std::vector<MomentIndex> out;
  for (int p = 0; p <= max_order; ++p)
    for (int q = 0; p + q <= max_order; ++q)
      for (int r = 0; p + q + r <= max_order; ++r)
        for (int s = 0; p + q + r + s <= max_order; ++s) out.push_back({p, q, r, s});
  return out;
}

cplx MomentTable::at(const MomentIndex& idx) const {
  auto it = values_.find(idx);
  if (it == values_.end()) throw InvalidArgument("MomentTable: missing entry " + idx.name());
  return it->second;
}

MomentTable MomentTable::conjugated() const {
  MomentTable t;
  for (const auto& [k, v] : values_) t.set(k, std::conj(v));
  return t;
}

double MomentTable::pairing_violation() const {
  double worst = 0.0;
  const MomentIndex unit{0, 0, 0, 0};
  if (contains(unit)) worst = std::abs(at(unit) - cplx(1.0));
  for (const auto& [k, v] : values_) {
    auto it = values_.find(k.adjoint());
    if (it != values_.end()) worst = std::max(worst, std::abs(v - std::conj(it->second)));
  }
  return worst;
}

DensityMatrix random_low_occupation_state(const HilbertSpace& space, int max_level,
                                          std::mt19937_64& rng) {
  if (max_level < 0) throw InvalidArgument("random_low_occupation_state: negative max_level");
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(0.1, 1.0);
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < space.dim(); ++i) {
    bool low = true;
    for (std::size_t k = 0; k < space.n_sites(); ++k) low = low && space.occupation(i, k) <= max_level;
    if (low) support.push_back(i);
  }
  const auto d = static_cast<Eigen::Index>(space.dim());
  Matrix rho = Matrix::Zero(d, d);
  double total = 0.0;
  for (int m = 0; m < 3; ++m) {
    Vector psi = Vector::Zero(d);
    for (std::size_t i : support) psi(static_cast<Eigen::Index>(i)) = cplx(normal(rng), normal(rng));
    psi.normalize();
    const double w = uniform(rng);
    rho += w * psi * psi.adjoint();
    total += w;
  }
  rho /= total;
  rho = (0.5 * (rho + rho.adjoint())).eval();
  return DensityMatrix(space, std::move(rho));
}

MomentTable random_moment_table(int max_order, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  MomentTable t;
  for (const auto& idx : moment_indices(max_order)) t.set(idx, cplx(normal(rng), normal(rng)));
  return t;
}

namespace {

void require_dimer_space(const HilbertSpace& space) {
  if (space.n_sites() != 2 || !space.all_bosonic())
    throw InvalidArgument("moment_operator: requires exactly two bosonic sites");
}

SparseMatrix power(const SparseMatrix& m, int k) {
  SparseMatrix out(m.rows(), m.cols());
  out.setIdentity();
  for (int i = 0; i < k; ++i) out = SparseMatrix(out * m);
  return out;
}

}  // namespace

Operator moment_operator(const HilbertSpace& space, const MomentIndex& idx) {
  require_dimer_space(space);
  if (idx.p < 0 || idx.q < 0 || idx.r < 0 || idx.s < 0)
    throw InvalidArgument("moment_operator: negative power in " + idx.name());
  const SparseMatrix a1 = annihilation(space, 0).matrix();
  const SparseMatrix a2 = annihilation(space, 1).matrix();
  const SparseMatrix a1d = a1.adjoint();
  const SparseMatrix a2d = a2.adjoint();
  SparseMatrix m = power(a1d, idx.p);
  m = SparseMatrix(m * power(a2d, idx.q));
  m = SparseMatrix(m * power(a1, idx.r));
  m = SparseMatrix(m * power(a2, idx.s));
  return Operator(space, std::move(m));
}

cplx moment_expectation(const DensityMatrix& rho, const MomentIndex& idx) {
  return rho.expectation(moment_operator(rho.space(), idx));
}

MomentTable moments_of(const DensityMatrix& rho, int max_order) {
  MomentTable t;
  for (const auto& idx : moment_indices(max_order)) t.set(idx, moment_expectation(rho, idx));
  return t;
}

cplx moment_rhs(const DimerParams& params, const MomentIndex& idx, const MomentTable& table) {
  const auto [p, q, r, s] = idx;
  const double U = params.U;
  const double J = params.J;
  const double eps = params.epsilon;
  const double dw = params.delta_omega;
  const cplx i(0.0, 1.0);

  cplx acc = 0.0;
  // Coefficient first; a zero coefficient never touches the table, which is
  // what keeps shifted indices from going negative.
  auto add = [&](cplx coeff, int pp, int qq, int rr, int ss) {
    if (coeff == cplx(0.0)) return;
    acc += coeff * table.at({pp, qq, rr, ss});
  };

  const double shift = r + s - p - q;
  const double square = r * r + s * s - p * p - q * q;
  add((dw - U) * shift + U * square - i * (params.gamma / 2.0) * double(p + q + r + s), p, q, r, s);
  add(2.0 * U * (r - p), p + 1, q, r + 1, s);
  add(2.0 * U * (s - q), p, q + 1, r, s + 1);
  add(J * r, p, q, r - 1, s + 1);
  add(J * s, p, q, r + 1, s - 1);
  add(-J * p, p - 1, q + 1, r, s);
  add(-J * q, p + 1, q - 1, r, s);
  add(eps * r, p, q, r - 1, s);
  add(-eps * p, p - 1, q, r, s);
  return -i * acc;
}

double conjugate_rhs_check(const DimerParams& params, const MomentIndex& idx,
                           const MomentTable& table, double tol) {
  const cplx lhs = std::conj(moment_rhs(params, idx, table));
  const cplx rhs = moment_rhs(params.negated(), idx, table.conjugated());
  const double residual = std::abs(lhs - rhs);
  if (!(residual <= tol)) {
    std::ostringstream os;
    os << "conjugate_rhs_check: residual " << residual << " at " << idx.name();
    throw VerificationFailure(os.str());
  }
  return residual;
}

EomResidual eom_consistency_check(const DimerParams& params, const DensityMatrix& rho,
                                  int max_order, double tol) {
  if (params.n_sites != 2) throw InvalidArgument("eom_consistency_check: dimer only");
  const LindbladModel model = build_dimer(params);
  if (!(rho.space() == model.space()))
    throw InvalidArgument("eom_consistency_check: state does not match the dimer space");

  // Truncation breaks the identity unless the state stays clear of the top
  // levels reached by H A rho.
  const int safe = params.cutoff - max_order - 1;
  const HilbertSpace& space = rho.space();
  for (std::size_t k = 0; k < 2; ++k) {
    double pop = 0.0;
    for (std::size_t i = 0; i < space.dim(); ++i)
      if (space.occupation(i, k) > safe) pop += rho.matrix()(i, i).real();
    if (pop >= 1e-8) {
      std::ostringstream os;
      os << "eom_consistency_check: population " << pop << " above level " << safe
         << " on site " << k << "; raise the cutoff";
      throw InvalidArgument(os.str());
    }
  }

  const Matrix l_rho = liouvillian_apply(model, rho.matrix());
  const MomentTable table = moments_of(rho, max_order + 2);
  EomResidual result;
  for (const auto& idx : moment_indices(max_order)) {
    const cplx engine = expectation(moment_operator(space, idx), l_rho);
    const cplx hierarchy = moment_rhs(params, idx, table);
    const double res = std::abs(engine - hierarchy);
    result.residuals[idx] = res;
    if (res >= result.max_residual) {
      result.max_residual = res;
      result.worst = idx;
    }
  }
  if (!(result.max_residual < tol)) {
    std::ostringstream os;
    os << "eom_consistency_check: residual " << result.max_residual << " at "
       << result.worst.name() << " (tolerance " << tol << ")";
    throw VerificationFailure(os.str());
  }
  return result;
}

}  // namespace hsi
