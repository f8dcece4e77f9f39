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

#include "hsi/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hsi/errors.hpp"

namespace hsi {

HilbertSpace::HilbertSpace(std::vector<SiteSpec> sites) : sites_(std::move(sites)) {
  if (sites_.empty()) throw InvalidArgument("HilbertSpace: empty site list");
  for (const auto& s : sites_) {
    if (s.kind == SiteKind::Boson && s.cutoff < 1)
      throw InvalidArgument("HilbertSpace: boson cutoff must be >= 1, got " +
                            std::to_string(s.cutoff));
  }
  strides_.assign(sites_.size(), 1);
  dim_ = 1;
  for (std::size_t k = sites_.size(); k-- > 0;) {
    strides_[k] = dim_;
    dim_ *= sites_[k].dim();
  }
}

std::size_t HilbertSpace::index_of(std::span<const int> occupations) const {
  if (occupations.size() != sites_.size())
    throw InvalidArgument("index_of: expected " + std::to_string(sites_.size()) +
                          " occupations, got " + std::to_string(occupations.size()));
  std::size_t index = 0;
  for (std::size_t k = 0; k < sites_.size(); ++k) {
    const int n = occupations[k];
    if (n < 0 || static_cast<std::size_t>(n) >= sites_[k].dim())
      throw InvalidArgument("index_of: occupation " + std::to_string(n) +
                            " out of range on site " + std::to_string(k));
    index += static_cast<std::size_t>(n) * strides_[k];
  }
  return index;
}

bool HilbertSpace::all_bosonic() const {
  return std::all_of(sites_.begin(), sites_.end(),
                     [](const SiteSpec& s) { return s.kind == SiteKind::Boson; });
}

bool HilbertSpace::all_spin() const {
  return std::all_of(sites_.begin(), sites_.end(),
                     [](const SiteSpec& s) { return s.kind == SiteKind::Spin; });
}

HilbertSpace build_space(std::vector<SiteSpec> sites) { return HilbertSpace(std::move(sites)); }

// ---------------------------------------------------------------------------

Operator::Operator(HilbertSpace space, SparseMatrix matrix)
    : space_(std::move(space)), matrix_(std::move(matrix)) {
  const auto d = static_cast<Eigen::Index>(space_.dim());
  if (matrix_.rows() != d || matrix_.cols() != d)
    throw InvalidArgument("Operator: matrix is " + std::to_string(matrix_.rows()) + "x" +
                          std::to_string(matrix_.cols()) + ", space dim is " +
                          std::to_string(d));
  matrix_.makeCompressed();
}

Operator Operator::identity(const HilbertSpace& space) {
  const auto d = static_cast<Eigen::Index>(space.dim());
  SparseMatrix m(d, d);
  m.setIdentity();
  return Operator(space, std::move(m));
}

Operator Operator::zero(const HilbertSpace& space) {
  const auto d = static_cast<Eigen::Index>(space.dim());
  return Operator(space, SparseMatrix(d, d));
}

Operator Operator::adjoint() const { return Operator(space_, matrix_.adjoint()); }

Operator Operator::conjugate() const { return Operator(space_, matrix_.conjugate()); }

namespace {
void require_same_space(const Operator& a, const Operator& b, const char* what) {
  if (!(a.space() == b.space()))
    throw InvalidArgument(std::string(what) + ": operators act on different spaces");
}
}  // namespace

Operator& Operator::operator+=(const Operator& rhs) {
  require_same_space(*this, rhs, "operator+");
  matrix_ += rhs.matrix_;
  matrix_.makeCompressed();
  return *this;
}

Operator& Operator::operator-=(const Operator& rhs) {
  require_same_space(*this, rhs, "operator-");
  matrix_ -= rhs.matrix_;
  matrix_.makeCompressed();
  return *this;
}

Operator& Operator::operator*=(cplx s) {
  matrix_ *= s;
  return *this;
}

Operator operator*(const Operator& a, const Operator& b) {
  require_same_space(a, b, "operator*");
  SparseMatrix prod = a.matrix_ * b.matrix_;
  return Operator(a.space_, std::move(prod));
}

Operator commutator(const Operator& a, const Operator& b) { return a * b - b * a; }

double max_abs(const Operator& a) {
  double m = 0.0;
  for (Eigen::Index k = 0; k < a.matrix().outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(a.matrix(), k); it; ++it)
      m = std::max(m, std::abs(it.value()));
  return m;
}

double max_abs_diff(const Operator& a, const Operator& b) {
  require_same_space(a, b, "max_abs_diff");
  const SparseMatrix diff = a.matrix() - b.matrix();
  return max_abs(Operator(a.space(), diff));
}

// ---------------------------------------------------------------------------

Matrix local_annihilation(int cutoff) {
  if (cutoff < 1) throw InvalidArgument("local_annihilation: cutoff must be >= 1");
  Matrix a = Matrix::Zero(cutoff + 1, cutoff + 1);
  for (int n = 1; n <= cutoff; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

Matrix local_spin(SpinComponent which) {
  // Basis order |g>, |e>.
  Matrix m = Matrix::Zero(2, 2);
  const cplx i(0.0, 1.0);
  switch (which) {
    case SpinComponent::Lower:
      m(0, 1) = 1.0;
      break;
    case SpinComponent::Raise:
      m(1, 0) = 1.0;
      break;
    case SpinComponent::Z:
      m(0, 0) = -1.0;
      m(1, 1) = 1.0;
      break;
    case SpinComponent::X:
      m(0, 1) = 1.0;
      m(1, 0) = 1.0;
      break;
    case SpinComponent::Y:
      // -i (sigma+ - sigma-)
      m(0, 1) = i;
      m(1, 0) = -i;
      break;
  }
  return m;
}

Operator tensor_embed(const HilbertSpace& space, std::size_t site, const Matrix& local) {
  if (site >= space.n_sites())
    throw InvalidArgument("tensor_embed: site " + std::to_string(site) + " out of range");
  const auto local_dim = static_cast<Eigen::Index>(space.site(site).dim());
  if (local.rows() != local_dim || local.cols() != local_dim)
    throw InvalidArgument("tensor_embed: local matrix is " + std::to_string(local.rows()) + "x" +
                          std::to_string(local.cols()) + ", site dimension is " +
                          std::to_string(local_dim));

  // I_left (x) local (x) I_right, written out directly.
  const std::size_t right = space.stride(site);
  const std::size_t left = space.dim() / (right * static_cast<std::size_t>(local_dim));
  std::vector<Eigen::Triplet<cplx>> triplets;
  for (Eigen::Index r = 0; r < local_dim; ++r) {
    for (Eigen::Index c = 0; c < local_dim; ++c) {
      const cplx v = local(r, c);
      if (v == cplx(0.0)) continue;
      for (std::size_t l = 0; l < left; ++l) {
        const std::size_t base = l * static_cast<std::size_t>(local_dim) * right;
        for (std::size_t q = 0; q < right; ++q) {
          triplets.emplace_back(static_cast<Eigen::Index>(base + r * right + q),
                                static_cast<Eigen::Index>(base + c * right + q), v);
        }
      }
    }
  }
  const auto d = static_cast<Eigen::Index>(space.dim());
  SparseMatrix m(d, d);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return Operator(space, std::move(m));
}

namespace {
void require_kind(const HilbertSpace& space, std::size_t site, SiteKind kind, const char* what) {
  if (site >= space.n_sites())
    throw InvalidArgument(std::string(what) + ": site " + std::to_string(site) + " out of range");
  if (space.site(site).kind != kind)
    throw InvalidArgument(std::string(what) + ": site " + std::to_string(site) + " is not " +
                          (kind == SiteKind::Boson ? "bosonic" : "a spin"));
}
}  // namespace

Operator annihilation(const HilbertSpace& space, std::size_t site) {
  require_kind(space, site, SiteKind::Boson, "annihilation");
  return tensor_embed(space, site, local_annihilation(space.site(site).cutoff));
}

Operator creation(const HilbertSpace& space, std::size_t site) {
  return annihilation(space, site).adjoint();
}

Operator number(const HilbertSpace& space, std::size_t site) {
  require_kind(space, site, SiteKind::Boson, "number");
  const int cutoff = space.site(site).cutoff;
  Matrix n = Matrix::Zero(cutoff + 1, cutoff + 1);
  for (int k = 0; k <= cutoff; ++k) n(k, k) = static_cast<double>(k);
  return tensor_embed(space, site, n);
}

Operator spin_op(const HilbertSpace& space, std::size_t site, SpinComponent which) {
  require_kind(space, site, SiteKind::Spin, "spin_op");
  return tensor_embed(space, site, local_spin(which));
}

Vector basis_vector(const HilbertSpace& space, std::span<const int> occupations) {
  Vector v = Vector::Zero(static_cast<Eigen::Index>(space.dim()));
  v(static_cast<Eigen::Index>(space.index_of(occupations))) = 1.0;
  return v;
}

}  // namespace hsi
