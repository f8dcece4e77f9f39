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

#include "hsi/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <iomanip>
#include <sstream>

#include "hsi/errors.hpp"

namespace hsi {

Operator time_reversal_conjugate(const Operator& op) { return op.conjugate(); }

Operator canonical_jump(const Operator& op) {
  const SparseMatrix& m = op.matrix();
  for (Eigen::Index k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
      const cplx v = it.value();
      if (v == cplx(0.0)) continue;
      const cplx phase = std::conj(v) / std::abs(v);
      if (phase == cplx(1.0)) return op;
      return op * phase;
    }
  }
  return op;
}

namespace {

void require_time_reversal_invariant(const Operator& h) {
  double worst = 0.0;
  const SparseMatrix& m = h.matrix();
  for (Eigen::Index k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it)
      worst = std::max(worst, std::abs(it.value().imag()));
  if (worst > kTimeReversalTol) {
    std::ostringstream os;
    os << "hsi_map_model: Hamiltonian has imaginary entries up to " << worst
       << " in the product basis; it is not time-reversal invariant";
    throw InvalidArgument(os.str());
  }
}

LindbladModel conjugate_by(const LindbladModel& q, const Operator& g) {
  const Operator gd = g.adjoint();
  Operator h = g * q.hamiltonian() * gd;
  std::vector<Channel> channels;
  channels.reserve(q.channels().size());
  for (const auto& ch : q.channels()) channels.push_back({ch.rate, canonical_jump(g * ch.jump * gd)});
  return LindbladModel(std::move(h), std::move(channels));
}

}  // namespace

LindbladModel hsi_map_model(const LindbladModel& q1) {
  require_time_reversal_invariant(q1.hamiltonian());
  Operator h = -time_reversal_conjugate(q1.hamiltonian());
  std::vector<Channel> channels;
  channels.reserve(q1.channels().size());
  for (const auto& ch : q1.channels())
    channels.push_back({ch.rate, time_reversal_conjugate(ch.jump)});
  return LindbladModel(std::move(h), std::move(channels));
}

DensityMatrix map_state(const DensityMatrix& rho) {
  return DensityMatrix(rho.space(), rho.matrix().conjugate());
}

Operator parity_site_unitary(const HilbertSpace& space, std::size_t site) {
  if (site >= space.n_sites() || space.site(site).kind != SiteKind::Boson)
    throw InvalidArgument("gauge_parity_site: site " + std::to_string(site) + " is not bosonic");
  const int cutoff = space.site(site).cutoff;
  Matrix local = Matrix::Zero(cutoff + 1, cutoff + 1);
  for (int n = 0; n <= cutoff; ++n) local(n, n) = (n % 2 == 0) ? 1.0 : -1.0;
  return tensor_embed(space, site, local);
}

Operator spin_flip_unitary(const HilbertSpace& space) {
  if (!space.all_spin()) throw InvalidArgument("gauge_spin_flip: space contains bosonic sites");
  Matrix local = Matrix::Zero(2, 2);
  local(0, 0) = 1.0;
  local(1, 1) = -1.0;
  Operator g = Operator::identity(space);
  for (std::size_t j = 0; j < space.n_sites(); ++j) g = g * tensor_embed(space, j, local);
  return g;
}

LindbladModel gauge_parity_site(const LindbladModel& q, std::size_t site) {
  return conjugate_by(q, parity_site_unitary(q.space(), site));
}

LindbladModel gauge_spin_flip(const LindbladModel& q) {
  return conjugate_by(q, spin_flip_unitary(q.space()));
}

// ---------------------------------------------------------------------------

Operator MappedPair::pullback(const Operator& a) const {
  return time_reversal_conjugate(gauge.adjoint() * a * gauge);
}

DensityMatrix MappedPair::partner_state(const DensityMatrix& rho) const {
  const Matrix g = gauge.dense();
  return DensityMatrix(rho.space(), g * rho.matrix().conjugate() * g.adjoint());
}

MappedPair map_pair(const LindbladModel& q1, Gauge gauge, std::size_t site) {
  MappedPair pair;
  pair.q1 = q1;
  const LindbladModel mapped = hsi_map_model(q1);
  switch (gauge) {
    case Gauge::None:
      pair.q2 = mapped;
      pair.gauge = Operator::identity(q1.space());
      pair.note = "sign inversion";
      break;
    case Gauge::ParitySite:
      pair.gauge = parity_site_unitary(q1.space(), site);
      pair.q2 = conjugate_by(mapped, pair.gauge);
      pair.note = "sign inversion + parity gauge on site " + std::to_string(site);
      break;
    case Gauge::SpinFlip:
      pair.gauge = spin_flip_unitary(q1.space());
      pair.q2 = conjugate_by(mapped, pair.gauge);
      pair.note = "sign inversion + global spin flip gauge";
      break;
  }
  return pair;
}

// ---------------------------------------------------------------------------

bool VerificationReport::pass() const {
  return std::all_of(observables.begin(), observables.end(),
                     [](const ObservableCheck& c) { return c.pass; });
}

double VerificationReport::max_deviation() const {
  double m = 0.0;
  for (const auto& c : observables) m = std::max(m, c.max_deviation);
  return m;
}

void VerificationReport::require_pass() const {
  for (const auto& c : observables) {
    if (c.pass) continue;
    std::ostringstream os;
    os << check << ": observable " << c.name << " deviates by " << c.max_deviation << " at t="
       << c.worst_time << " (tolerance " << c.tolerance << ")";
    throw VerificationFailure(os.str());
  }
}

std::string VerificationReport::to_csv() const {
  std::ostringstream os;
  os << std::scientific << std::setprecision(6);
  for (const auto& c : observables)
    os << check << "," << c.name << "," << c.max_deviation << "," << c.tolerance << ","
       << (c.pass ? "PASS" : "FAIL") << "\n";
  return os.str();
}

DualRun simulate_pair(const MappedPair& pair, const DensityMatrix& rho0,
                      std::span<const NamedObservable> observables, std::span<const double> t_grid,
                      const EvolveOptions& opts) {
  std::vector<Operator> direct, pulled;
  for (const auto& o : observables) {
    direct.push_back(o.op);
    pulled.push_back(pair.pullback(o.op));
  }
  // q1 records the pullbacks first, then the observables themselves.
  pulled.insert(pulled.end(), direct.begin(), direct.end());
  const DensityMatrix rho0_partner = pair.partner_state(rho0);
  // The two runs share nothing mutable.
  auto partner = std::async(std::launch::async, [&] {
    return evolve(pair.q2, rho0_partner, t_grid, direct, opts);
  });
  DualRun run;
  run.q1 = evolve(pair.q1, rho0, t_grid, pulled, opts);
  run.q2 = partner.get();
  return run;
}

VerificationReport compare_dual_run(const DualRun& run, std::span<const NamedObservable> observables,
                                    std::span<const double> t_grid, double tol) {
  VerificationReport report;
  report.check = "hsi_mapping";
  for (std::size_t k = 0; k < observables.size(); ++k) {
    ObservableCheck c;
    c.name = observables[k].name;
    c.tolerance = tol;
    for (std::size_t t = 0; t < t_grid.size(); ++t) {
      const cplx predicted = map_expectation(run.q1.expectations.at(t).at(k));
      const double dev = std::abs(run.q2.expectations.at(t).at(k) - predicted);
      if (dev > c.max_deviation) {
        c.max_deviation = dev;
        c.worst_time = t_grid[t];
      }
    }
    c.pass = c.max_deviation < tol;
    report.observables.push_back(std::move(c));
  }
  return report;
}

VerificationReport verify_mapping(const MappedPair& pair, const DensityMatrix& rho0,
                                  std::span<const NamedObservable> observables,
                                  std::span<const double> t_grid, double tol,
                                  const EvolveOptions& opts) {
  const DualRun run = simulate_pair(pair, rho0, observables, t_grid, opts);
  return compare_dual_run(run, observables, t_grid, tol);
}

}  // namespace hsi
