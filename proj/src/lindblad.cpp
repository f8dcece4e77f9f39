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

#include "hsi/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <Eigen/SparseLU>
#include <Eigen/SparseQR>
#include <unsupported/Eigen/KroneckerProduct>

#include "hsi/errors.hpp"

namespace hsi {

namespace {

constexpr double kHermitianTol = 1e-12;

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

double max_abs(const SparseMatrix& m) {
  double v = 0.0;
  for (Eigen::Index k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) v = std::max(v, std::abs(it.value()));
  return v;
}

void require_dim(const Matrix& rho, std::size_t dim, const char* what) {
  const auto d = static_cast<Eigen::Index>(dim);
  if (rho.rows() != d || rho.cols() != d) {
    std::ostringstream os;
    os << what << ": matrix is " << rho.rows() << "x" << rho.cols() << ", expected " << d << "x"
       << d;
    throw InvalidArgument(os.str());
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// LindbladModel

LindbladModel::LindbladModel(Operator hamiltonian, std::vector<Channel> channels)
    : hamiltonian_(std::move(hamiltonian)), channels_(std::move(channels)) {
  const SparseMatrix& h = hamiltonian_.matrix();
  const double scale = std::max(1.0, max_abs(h));
  const SparseMatrix skew = h - SparseMatrix(h.adjoint());
  if (max_abs(skew) > kHermitianTol * scale)
    throw InvalidArgument("LindbladModel: Hamiltonian is not Hermitian");

  const cplx minus_i(0.0, -1.0);
  effective_ = minus_i * h;
  for (const auto& ch : channels_) {
    if (!(ch.rate >= 0.0) || !std::isfinite(ch.rate))
      throw InvalidArgument("LindbladModel: channel rates must be finite and non-negative");
    if (!(ch.jump.space() == hamiltonian_.space()))
      throw InvalidArgument("LindbladModel: jump operator acts on a different space");
    const SparseMatrix& c = ch.jump.matrix();
    const SparseMatrix cdc = SparseMatrix(c.adjoint()) * c;
    effective_ -= cplx(0.5 * ch.rate) * cdc;
    jumps_.push_back(c);
    rates_.push_back(ch.rate);
  }
  effective_.makeCompressed();
}

bool LindbladModel::has_dissipation() const {
  return std::any_of(channels_.begin(), channels_.end(),
                     [](const Channel& c) { return c.rate > 0.0 && max_abs(c.jump) > 0.0; });
}

namespace {

// out (+)= x * s^+, one contiguous column axpy per nonzero of s.
void times_adjoint(const Matrix& x, const SparseMatrix& s, Matrix& out, cplx scale = 1.0) {
  for (Eigen::Index k = 0; k < s.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(s, k); it; ++it)
      out.col(it.row()).noalias() += (scale * std::conj(it.value())) * x.col(k);
}

}  // namespace

void LindbladModel::apply(const Matrix& rho, Matrix& out) const {
  Workspace ws;
  apply(rho, out, ws);
}

void LindbladModel::apply(const Matrix& rho, Matrix& out, Workspace& ws) const {
  // K rho + rho K^+ + sum_j rate_j c_j rho c_j^+ with K = -iH - 1/2 sum rate c^+c.
  // K rho = (rho^+ K^+)^+ and c rho c^+ = (rho^+ c^+)^+ c^+.
  const auto d = rho.rows();
  out.setZero(d, d);
  times_adjoint(rho, effective_, out);
  ws.rho_adj = rho.adjoint();
  ws.tmp.setZero(d, d);
  times_adjoint(ws.rho_adj, effective_, ws.tmp);
  out += ws.tmp.adjoint();
  for (std::size_t j = 0; j < jumps_.size(); ++j) {
    if (rates_[j] == 0.0) continue;
    ws.tmp.setZero();
    times_adjoint(ws.rho_adj, jumps_[j], ws.tmp);
    ws.c_rho = ws.tmp.adjoint();
    times_adjoint(ws.c_rho, jumps_[j], out, rates_[j]);
  }
}

double liouvillian_spectral_bound(const LindbladModel& model) {
  // |lambda| <= (E_max - E_min) + 2 sum_j rate_j ||c_j||^2
  auto gershgorin_max = [](const SparseMatrix& m) {
    Eigen::VectorXd rows = Eigen::VectorXd::Zero(m.rows());
    for (Eigen::Index k = 0; k < m.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(m, k); it; ++it) rows(it.row()) += std::abs(it.value());
    return rows.size() ? rows.maxCoeff() : 0.0;
  };
  const SparseMatrix& h = model.hamiltonian().matrix();
  double spread = 0.0;
  if (model.dim() <= 2000) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix(h), Eigen::EigenvaluesOnly);
    spread = es.eigenvalues().maxCoeff() - es.eigenvalues().minCoeff();
  } else {
    spread = 2.0 * gershgorin_max(h);
  }
  double diss = 0.0;
  for (const auto& ch : model.channels()) {
    const SparseMatrix& c = ch.jump.matrix();
    const SparseMatrix cdc = SparseMatrix(c.adjoint()) * c;
    diss += 2.0 * ch.rate * gershgorin_max(cdc);
  }
  return spread + diss;
}

double max_model_diff(const LindbladModel& a, const LindbladModel& b) {
  if (!(a.space() == b.space()) || a.channels().size() != b.channels().size())
    return std::numeric_limits<double>::infinity();
  double d = max_abs_diff(a.hamiltonian(), b.hamiltonian());
  for (std::size_t j = 0; j < a.channels().size(); ++j) {
    d = std::max(d, std::abs(a.channels()[j].rate - b.channels()[j].rate));
    d = std::max(d, max_abs_diff(a.channels()[j].jump, b.channels()[j].jump));
  }
  return d;
}

// ---------------------------------------------------------------------------
// States

bool StateAudit::within(const StateTolerances& tol) const {
  if (!(trace_error < tol.trace)) return false;
  if (!(hermiticity_error < tol.hermiticity)) return false;
  if (!std::isnan(min_eigenvalue) && !(min_eigenvalue >= -tol.positivity)) return false;
  return true;
}

std::string StateAudit::describe() const {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << "|tr-1|=" << trace_error << " herm=" << hermiticity_error
     << " min_eig=" << min_eigenvalue;
  return os.str();
}

StateAudit audit_state(const Matrix& rho, bool with_spectrum) {
  StateAudit a;
  a.trace_error = std::abs(rho.trace() - cplx(1.0));
  a.hermiticity_error = max_abs(Matrix(rho - rho.adjoint()));
  if (with_spectrum) {
    const Matrix herm = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
    a.min_eigenvalue = es.eigenvalues().minCoeff();
  } else {
    a.min_eigenvalue = std::numeric_limits<double>::quiet_NaN();
  }
  return a;
}

DensityMatrix::DensityMatrix(HilbertSpace space, Matrix rho, const StateTolerances& tol)
    : space_(std::move(space)), rho_(std::move(rho)) {
  require_dim(rho_, space_.dim(), "DensityMatrix");
  const StateAudit a = audit_state(rho_);
  if (!a.within(tol)) throw InvariantViolation("DensityMatrix: invalid state (" + a.describe() + ")");
}

DensityMatrix DensityMatrix::fock(const HilbertSpace& space, std::span<const int> occupations) {
  return pure(space, basis_vector(space, occupations));
}

DensityMatrix DensityMatrix::vacuum(const HilbertSpace& space) {
  const std::vector<int> zeros(space.n_sites(), 0);
  return fock(space, zeros);
}

DensityMatrix DensityMatrix::pure(const HilbertSpace& space, const Vector& psi) {
  const double norm = psi.norm();
  if (norm == 0.0) throw InvalidArgument("DensityMatrix::pure: zero vector");
  const Vector v = psi / norm;
  return DensityMatrix(space, v * v.adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(const HilbertSpace& space) {
  const auto d = static_cast<Eigen::Index>(space.dim());
  return DensityMatrix(space, Matrix::Identity(d, d) / static_cast<double>(d));
}

cplx DensityMatrix::expectation(const Operator& op) const { return hsi::expectation(op, rho_); }

cplx expectation(const Operator& op, const Matrix& rho) {
  require_dim(rho, op.dim(), "expectation");
  // Tr(A rho) = sum_{ij} A_ij rho_ji
  cplx acc = 0.0;
  const SparseMatrix& a = op.matrix();
  for (Eigen::Index k = 0; k < a.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) acc += it.value() * rho(it.col(), it.row());
  return acc;
}

// ---------------------------------------------------------------------------
// Generator

Matrix dissipator_apply(const Operator& jump, const Matrix& rho) {
  require_dim(rho, jump.dim(), "dissipator_apply");
  const SparseMatrix& c = jump.matrix();
  const SparseMatrix cd = c.adjoint();
  const SparseMatrix cdc = cd * c;
  Matrix tmp = c * rho;
  Matrix out = tmp * cd;
  out -= 0.5 * (cdc * rho);
  out -= 0.5 * (rho * cdc);
  return out;
}

Matrix liouvillian_apply(const LindbladModel& model, const Matrix& rho) {
  require_dim(rho, model.dim(), "liouvillian_apply");
  Matrix out;
  model.apply(rho, out);
  return out;
}

SparseMatrix vectorized_liouvillian(const LindbladModel& model) {
  // vec(A X B) = (B^T (x) A) vec(X), column stacking.
  const auto d = static_cast<Eigen::Index>(model.dim());
  SparseMatrix id(d, d);
  id.setIdentity();
  const cplx minus_i(0.0, -1.0);
  SparseMatrix k = minus_i * model.hamiltonian().matrix();
  for (const auto& ch : model.channels()) {
    const SparseMatrix& c = ch.jump.matrix();
    k -= cplx(0.5 * ch.rate) * SparseMatrix(SparseMatrix(c.adjoint()) * c);
  }
  const SparseMatrix k_conj = k.conjugate();
  SparseMatrix s = Eigen::kroneckerProduct(id, k);
  s += SparseMatrix(Eigen::kroneckerProduct(k_conj, id));
  for (const auto& ch : model.channels()) {
    if (ch.rate == 0.0) continue;
    const SparseMatrix& c = ch.jump.matrix();
    const SparseMatrix c_conj = c.conjugate();
    s += cplx(ch.rate) * SparseMatrix(Eigen::kroneckerProduct(c_conj, c));
  }
  s.prune(cplx(0.0));
  s.makeCompressed();
  return s;
}

// ---------------------------------------------------------------------------
// Time integration

std::vector<cplx> Trajectory::series(std::size_t observable) const {
  std::vector<cplx> out;
  out.reserve(expectations.size());
  for (const auto& row : expectations) out.push_back(row.at(observable));
  return out;
}

std::vector<double> uniform_grid(double t_max, std::size_t n_points) {
  if (n_points < 2 || !(t_max > 0.0)) throw InvalidArgument("uniform_grid: need t_max > 0 and n >= 2");
  std::vector<double> g(n_points);
  const double dt = t_max / static_cast<double>(n_points - 1);
  for (std::size_t i = 0; i < n_points; ++i) g[i] = dt * static_cast<double>(i);
  g.back() = t_max;
  return g;
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                 b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

// Weighted RMS norm over complex entries.
double scaled_norm(const Matrix& err, const Matrix& y0, const Matrix& y1, double atol,
                   double rtol) {
  const double sum =
      (err.array().abs() / (atol + rtol * y0.array().abs().max(y1.array().abs()))).square().sum();
  return std::sqrt(sum / static_cast<double>(err.size()));
}

// Radii of the left half-disk inside each method's stability region.
constexpr double kDp45StableRadius = 0.9;
constexpr double kRk4StableRadius = 2.5;

class Stepper {
 public:
  Stepper(const LindbladModel& model, const EvolveOptions& opts) : model_(model), opts_(opts) {
    if (opts_.stability_cap) {
      const double bound = liouvillian_spectral_bound(model_);
      if (bound > 0.0) {
        const double radius =
            opts_.method == Integrator::FixedRK4 ? kRk4StableRadius : kDp45StableRadius;
        h_cap_ = radius / bound;
      }
    }
  }

  /// Advances rho from t to t_end; counts steps into traj.
  void advance(Matrix& rho, double t, double t_end, Trajectory& traj) {
    if (opts_.method == Integrator::FixedRK4)
      advance_rk4(rho, t, t_end, traj);
    else
      advance_dp45(rho, t, t_end, traj);
  }

 private:
  void check_trace(const Matrix& rho, double t, Trajectory& traj) const {
    const double e = std::abs(rho.trace() - cplx(1.0));
    traj.max_step_trace_error = std::max(traj.max_step_trace_error, e);
    if (!(e < opts_.tolerances.trace)) {
      std::ostringstream os;
      os << "evolve: trace drifted by " << e << " at t=" << t;
      throw InvariantViolation(os.str());
    }
  }

  void count_step(Trajectory& traj) const {
    if (++traj.accepted_steps > opts_.max_steps)
      throw ConvergenceFailure("evolve: step budget exhausted");
  }

  void advance_rk4(Matrix& rho, double t, double t_end, Trajectory& traj) {
    const double span = t_end - t;
    const double h_max = std::min(opts_.fixed_step, h_cap_);
    const auto n = static_cast<std::size_t>(std::ceil(span / h_max - 1e-12));
    const std::size_t steps = std::max<std::size_t>(n, 1);
    const double h = span / static_cast<double>(steps);
    for (std::size_t s = 0; s < steps; ++s) {
      model_.apply(rho, k1_, ws_);
      y_ = rho + (0.5 * h) * k1_;
      model_.apply(y_, k2_, ws_);
      y_ = rho + (0.5 * h) * k2_;
      model_.apply(y_, k3_, ws_);
      y_ = rho + h * k3_;
      model_.apply(y_, k4_, ws_);
      rho += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
      count_step(traj);
      check_trace(rho, t + h * static_cast<double>(s + 1), traj);
    }
  }

  double initial_step(const Matrix& rho, const Matrix& f0, double span) {
    const Matrix zero = Matrix::Zero(rho.rows(), rho.cols());
    const double d0 = scaled_norm(rho, rho, zero, opts_.atol, opts_.rtol);
    const double d1 = scaled_norm(f0, rho, zero, opts_.atol, opts_.rtol);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    y_ = rho + h0 * f0;
    model_.apply(y_, k2_, ws_);
    const double d2 = scaled_norm(Matrix(k2_ - f0), rho, zero, opts_.atol, opts_.rtol) / h0;
    const double dm = std::max(d1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
    return std::min(100.0 * h0, h1);
  }

  void advance_dp45(Matrix& rho, double t, double t_end, Trajectory& traj) {
    if (!have_k1_) {
      model_.apply(rho, k1_, ws_);
      have_k1_ = true;
    }
    if (h_ <= 0.0) h_ = std::min(initial_step(rho, k1_, t_end - t), h_cap_);

    while (t < t_end) {
      const double remaining = t_end - t;
      // Land exactly on the grid point; a short final step does not shrink
      // the proposal carried to the next interval.
      const bool last = h_ >= remaining * (1.0 - 1e-12);
      const double h = last ? remaining : h_;
      if (h < 1e-14 * std::max(1.0, std::abs(t)))
        throw ConvergenceFailure("evolve: step size underflow");

      y_ = rho + (h * a21) * k1_;
      model_.apply(y_, k2_, ws_);
      y_ = rho + h * (a31 * k1_ + a32 * k2_);
      model_.apply(y_, k3_, ws_);
      y_ = rho + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
      model_.apply(y_, k4_, ws_);
      y_ = rho + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
      model_.apply(y_, k5_, ws_);
      y_ = rho + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
      model_.apply(y_, k6_, ws_);
      y_ = rho + h * (b1 * k1_ + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
      model_.apply(y_, k7_, ws_);
      err_ = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);

      const double en = scaled_norm(err_, rho, y_, opts_.atol, opts_.rtol);
      if (!std::isfinite(en)) throw InvariantViolation("evolve: non-finite state");
      const double factor =
          en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      if (en <= 1.0) {
        rho.swap(y_);
        k1_.swap(k7_);  // FSAL
        t = last ? t_end : t + h;
        count_step(traj);
        check_trace(rho, t, traj);
        if (!last || factor < 1.0) h_ = std::min(h * factor, h_cap_);
      } else {
        ++traj.rejected_steps;
        h_ = std::min(h * std::max(factor, 0.2), h_cap_);
      }
    }
  }

  const LindbladModel& model_;
  const EvolveOptions& opts_;
  Matrix k1_, k2_, k3_, k4_, k5_, k6_, k7_, y_, err_;
  LindbladModel::Workspace ws_;
  bool have_k1_ = false;
  double h_ = 0.0;
  double h_cap_ = std::numeric_limits<double>::infinity();
};

// Index sets of basis states whose occupation on a boson site is in the top
// two retained levels (level 0 excluded).
std::vector<std::vector<Eigen::Index>> leakage_sets(const HilbertSpace& space) {
  std::vector<std::vector<Eigen::Index>> sets;
  for (std::size_t k = 0; k < space.n_sites(); ++k) {
    if (space.site(k).kind != SiteKind::Boson) continue;
    const int cutoff = space.site(k).cutoff;
    const int lowest = std::max(1, cutoff - 1);
    std::vector<Eigen::Index> idx;
    for (std::size_t i = 0; i < space.dim(); ++i)
      if (space.occupation(i, k) >= lowest) idx.push_back(static_cast<Eigen::Index>(i));
    sets.push_back(std::move(idx));
  }
  return sets;
}

}  // namespace

Trajectory evolve(const LindbladModel& model, const DensityMatrix& rho0,
                  std::span<const double> t_grid, std::span<const Operator> observables,
                  const EvolveOptions& opts) {
  if (!(rho0.space() == model.space())) throw InvalidArgument("evolve: state/model space mismatch");
  if (t_grid.empty() || t_grid.front() != 0.0)
    throw InvalidArgument("evolve: time grid must start at 0");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1])) throw InvalidArgument("evolve: time grid must increase strictly");
  for (const auto& o : observables)
    if (!(o.space() == model.space())) throw InvalidArgument("evolve: observable space mismatch");

  Trajectory traj;
  traj.worst.min_eigenvalue = std::numeric_limits<double>::infinity();
  const auto leak_sets = leakage_sets(model.space());
  std::vector<double> site_leak(leak_sets.size(), 0.0);

  auto record = [&](double t, const Matrix& rho) {
    const StateAudit a = audit_state(rho, opts.audit_spectrum);
    traj.worst.trace_error = std::max(traj.worst.trace_error, a.trace_error);
    traj.worst.hermiticity_error = std::max(traj.worst.hermiticity_error, a.hermiticity_error);
    if (!std::isnan(a.min_eigenvalue))
      traj.worst.min_eigenvalue = std::min(traj.worst.min_eigenvalue, a.min_eigenvalue);
    if (!a.within(opts.tolerances)) {
      std::ostringstream os;
      os << "evolve: snapshot at t=" << t << " violates state invariants (" << a.describe()
         << "); raise the cutoff or tighten the integrator tolerances";
      throw InvariantViolation(os.str());
    }
    for (std::size_t s = 0; s < leak_sets.size(); ++s) {
      double p = 0.0;
      for (Eigen::Index i : leak_sets[s]) p += rho(i, i).real();
      site_leak[s] = std::max(site_leak[s], p);
    }
    traj.times.push_back(t);
    std::vector<cplx> row;
    row.reserve(observables.size());
    for (const auto& o : observables) row.push_back(expectation(o, rho));
    traj.expectations.push_back(std::move(row));
    if (opts.keep_states) traj.states.push_back(rho);
  };

  Matrix rho = rho0.matrix();
  record(0.0, rho);
  Stepper stepper(model, opts);
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    stepper.advance(rho, t_grid[i - 1], t_grid[i], traj);
    record(t_grid[i], rho);
  }
  if (!opts.audit_spectrum) traj.worst.min_eigenvalue = std::numeric_limits<double>::quiet_NaN();

  std::size_t boson_index = 0;
  for (std::size_t k = 0; k < model.space().n_sites(); ++k) {
    if (model.space().site(k).kind != SiteKind::Boson) continue;
    const double p = site_leak[boson_index++];
    traj.max_leakage = std::max(traj.max_leakage, p);
    if (p > opts.leakage_threshold) {
      std::ostringstream os;
      os << "site " << k << ": population of the top two Fock levels reached " << p
         << " (cutoff " << model.space().site(k).cutoff << ")";
      traj.warnings.push_back(os.str());
    }
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Steady state

std::size_t steady_state_multiplicity(const LindbladModel& model) {
  SparseMatrix s = vectorized_liouvillian(model);
  Eigen::SparseQR<SparseMatrix, Eigen::COLAMDOrdering<int>> qr;
  qr.setPivotThreshold(1e-10 * std::max(1.0, max_abs(s)));
  qr.compute(s);
  if (qr.info() != Eigen::Success) return 0;
  return static_cast<std::size_t>(s.cols() - qr.rank());
}

namespace {

Matrix unvec(const Vector& x, Eigen::Index d) {
  Matrix rho(d, d);
  for (Eigen::Index j = 0; j < d; ++j) rho.col(j) = x.segment(j * d, d);
  return rho;
}

SteadyState relax_explicit(const LindbladModel& model, const DensityMatrix& rho0,
                           const SteadyStateOptions& opts);

[[noreturn]] void throw_degenerate(const LindbladModel& model, const std::string& why) {
  const std::size_t m = steady_state_multiplicity(model);
  std::ostringstream os;
  os << "steady_state: " << why << "; null space dimension ";
  if (m == 0)
    os << "could not be determined";
  else
    os << m;
  if (m == 1) throw ConvergenceFailure(os.str() + " (unique, but the solve failed)");
  throw DegenerateSteadyState(m, os.str());
}

}  // namespace

SteadyState steady_state(const LindbladModel& model, const SteadyStateOptions& opts) {
  if (!model.has_dissipation()) throw InvalidArgument("steady_state: model has no dissipation");
  const auto d = static_cast<Eigen::Index>(model.dim());
  const std::size_t n = static_cast<std::size_t>(d) * static_cast<std::size_t>(d);
  if (n > opts.direct_limit) {
    return relax_explicit(model, DensityMatrix::maximally_mixed(model.space()), opts);
  }

  const SparseMatrix s = vectorized_liouvillian(model);
  // Replace row 0 with the trace functional.
  std::vector<Eigen::Triplet<cplx>> trips;
  trips.reserve(static_cast<std::size_t>(s.nonZeros()) + static_cast<std::size_t>(d));
  for (Eigen::Index k = 0; k < s.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(s, k); it; ++it)
      if (it.row() != 0) trips.emplace_back(it.row(), it.col(), it.value());
  for (Eigen::Index i = 0; i < d; ++i) trips.emplace_back(0, i * (d + 1), 1.0);
  SparseMatrix a(s.rows(), s.cols());
  a.setFromTriplets(trips.begin(), trips.end());
  a.makeCompressed();

  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw_degenerate(model, "constrained system is singular");
  Vector b = Vector::Zero(a.rows());
  b(0) = 1.0;
  const Vector x = lu.solve(b);
  if (lu.info() != Eigen::Success || !x.allFinite())
    throw_degenerate(model, "constrained solve failed");

  Matrix rho = unvec(x, d);
  const double residual = max_abs(liouvillian_apply(model, rho));
  const StateAudit audit = audit_state(rho);
  if (!(residual < opts.residual_tol) || !audit.within(opts.evolve.tolerances)) {
    std::ostringstream os;
    os << "solution is not a valid fixed point (residual " << residual << ", " << audit.describe()
       << ")";
    throw_degenerate(model, os.str());
  }
  return SteadyState{DensityMatrix(model.space(), std::move(rho), opts.evolve.tolerances), residual,
                     "direct"};
}

std::vector<SteadyState> relax_to_steady_state(const LindbladModel& model,
                                               std::span<const DensityMatrix> initial,
                                               const SteadyStateOptions& opts) {
  if (!model.has_dissipation()) throw InvalidArgument("steady_state: model has no dissipation");
  for (const auto& rho0 : initial)
    if (!(rho0.space() == model.space()))
      throw InvalidArgument("relax_to_steady_state: state does not match the model space");
  const auto d = static_cast<Eigen::Index>(model.dim());
  const std::size_t n = static_cast<std::size_t>(d) * static_cast<std::size_t>(d);

  std::vector<SteadyState> out;
  if (n > opts.direct_limit || !(opts.relax_step > 0.0)) {
    for (const auto& rho0 : initial) out.push_back(relax_explicit(model, rho0, opts));
    return out;
  }

  // Implicit Euler: (1 - hL)^-1 is a convex mixture of the CPTP maps exp(hsL),
  // so every iterate is a state and the only fixed point is ker L.
  const SparseMatrix s = vectorized_liouvillian(model);
  SparseMatrix m(s.rows(), s.cols());
  m.setIdentity();
  m -= opts.relax_step * s;
  m.makeCompressed();
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(m);
  if (lu.info() != Eigen::Success)
    throw ConvergenceFailure("relax_to_steady_state: implicit step matrix is singular");

  for (const auto& rho0 : initial) {
    Vector x = Eigen::Map<const Vector>(rho0.matrix().data(), static_cast<Eigen::Index>(n));
    double residual = 0.0;
    bool done = false;
    for (double t = opts.relax_step; t <= opts.relax_t_max + 0.5 * opts.relax_step;
         t += opts.relax_step) {
      x = lu.solve(x).eval();
      Matrix rho = unvec(x, d);
      rho = (0.5 * (rho + rho.adjoint())).eval();
      residual = max_abs(liouvillian_apply(model, rho));
      if (residual < opts.residual_tol) {
        out.push_back(SteadyState{DensityMatrix(model.space(), std::move(rho), opts.evolve.tolerances),
                                  residual, "implicit-relaxation"});
        done = true;
        break;
      }
    }
    if (!done) {
      std::ostringstream os;
      os << "relax_to_steady_state: residual " << residual << " after t=" << opts.relax_t_max;
      throw ConvergenceFailure(os.str());
    }
  }
  return out;
}

SteadyState relax_to_steady_state(const LindbladModel& model, const DensityMatrix& rho0,
                                  const SteadyStateOptions& opts) {
  return relax_to_steady_state(model, std::span<const DensityMatrix>(&rho0, 1), opts).front();
}

namespace {

SteadyState relax_explicit(const LindbladModel& model, const DensityMatrix& rho0,
                           const SteadyStateOptions& opts) {
  EvolveOptions eo = opts.evolve;
  eo.keep_states = true;
  eo.audit_spectrum = false;
  DensityMatrix rho = rho0;
  double elapsed = 0.0;
  const std::vector<double> grid{0.0, opts.relax_chunk};
  while (true) {
    const Trajectory tr = evolve(model, rho, grid, {}, eo);
    elapsed += opts.relax_chunk;
    rho = DensityMatrix(model.space(), tr.states.back(), opts.evolve.tolerances);
    const double residual = max_abs(liouvillian_apply(model, rho.matrix()));
    if (residual < opts.residual_tol) return SteadyState{rho, residual, "relaxation"};
    if (elapsed >= opts.relax_t_max) {
      std::ostringstream os;
      os << "relax_to_steady_state: residual " << residual << " after t=" << elapsed;
      throw ConvergenceFailure(os.str());
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Cutoff convergence

ConvergenceResult convergence_check(const ModelFamily& family, const ObservableFamily& observables,
                                    const StateFamily& initial, std::span<const double> t_grid,
                                    const ConvergenceOptions& opts) {
  if (opts.start_cutoff < 1 || opts.cutoff_step < 1)
    throw InvalidArgument("convergence_check: invalid cutoff sweep");
  EvolveOptions eo = opts.evolve;
  eo.audit_spectrum = false;
  std::map<int, Trajectory> cache;
  auto run = [&](int n) -> const Trajectory& {
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    const LindbladModel model = family(n);
    const std::vector<Operator> obs = observables(model.space());
    return cache.emplace(n, evolve(model, initial(model.space()), t_grid, obs, eo)).first->second;
  };

  ConvergenceResult result;
  for (int n = opts.start_cutoff; n + opts.cutoff_step <= opts.max_cutoff; ++n) {
    const Trajectory& lo = run(n);
    const Trajectory& hi = run(n + opts.cutoff_step);
    double dev = 0.0;
    for (std::size_t t = 0; t < lo.expectations.size(); ++t)
      for (std::size_t k = 0; k < lo.expectations[t].size(); ++k)
        dev = std::max(dev, std::abs(lo.expectations[t][k] - hi.expectations[t][k]));
    result.sweep.emplace_back(n, dev);
    if (dev < opts.tol) {
      result.cutoff = n;
      return result;
    }
    cache.erase(n);
  }
  std::ostringstream os;
  os << "convergence_check: no cutoff up to " << opts.max_cutoff << " met tolerance " << opts.tol;
  throw ConvergenceFailure(os.str());
}

}  // namespace hsi
