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

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace hsi {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using SparseMatrix = Eigen::SparseMatrix<cplx>;

enum class SiteKind { Boson, Spin };

/// One tensor factor of a composite space. A boson site with cutoff N
/// carries Fock states |0>..|N>; a spin site carries |g>,|e> in that order.
struct SiteSpec {
  SiteKind kind = SiteKind::Boson;
  int cutoff = 1;

  static SiteSpec boson(int cutoff) { return {SiteKind::Boson, cutoff}; }
  static SiteSpec spin() { return {SiteKind::Spin, 1}; }

  std::size_t dim() const {
    return kind == SiteKind::Spin ? 2 : static_cast<std::size_t>(cutoff) + 1;
  }
  bool operator==(const SiteSpec&) const = default;
};

/// Product space of Fock and spin-z eigenstates. Site 0 is the slowest
/// varying index: basis index = sum_k n_k * stride_k with stride of the last
/// site equal to 1.
class HilbertSpace {
 public:
  HilbertSpace() = default;
  explicit HilbertSpace(std::vector<SiteSpec> sites);

  std::size_t dim() const { return dim_; }
  std::size_t n_sites() const { return sites_.size(); }
  const SiteSpec& site(std::size_t k) const { return sites_.at(k); }
  const std::vector<SiteSpec>& sites() const { return sites_; }
  std::size_t stride(std::size_t k) const { return strides_.at(k); }

  /// Local occupation (Fock number, or 1 for |e>) of site k in basis state i.
  int occupation(std::size_t index, std::size_t k) const {
    return static_cast<int>((index / strides_[k]) % sites_[k].dim());
  }
  std::size_t index_of(std::span<const int> occupations) const;

  bool all_bosonic() const;
  bool all_spin() const;

  bool operator==(const HilbertSpace& other) const { return sites_ == other.sites_; }

 private:
  std::vector<SiteSpec> sites_;
  std::vector<std::size_t> strides_;
  std::size_t dim_ = 0;
};

HilbertSpace build_space(std::vector<SiteSpec> sites);

/// Square operator on a HilbertSpace. Stored sparse; equality and all
/// contracts are defined on the dense entries.
class Operator {
 public:
  Operator() = default;
  Operator(HilbertSpace space, SparseMatrix matrix);

  static Operator identity(const HilbertSpace& space);
  static Operator zero(const HilbertSpace& space);

  const HilbertSpace& space() const { return space_; }
  const SparseMatrix& matrix() const { return matrix_; }
  std::size_t dim() const { return space_.dim(); }
  Matrix dense() const { return Matrix(matrix_); }

  Operator adjoint() const;
  Operator conjugate() const;

  Operator& operator+=(const Operator& rhs);
  Operator& operator-=(const Operator& rhs);
  Operator& operator*=(cplx s);

  friend Operator operator+(Operator a, const Operator& b) { return a += b; }
  friend Operator operator-(Operator a, const Operator& b) { return a -= b; }
  friend Operator operator-(Operator a) { return a *= -1.0; }
  friend Operator operator*(Operator a, cplx s) { return a *= s; }
  friend Operator operator*(cplx s, Operator a) { return a *= s; }
  friend Operator operator*(const Operator& a, const Operator& b);

 private:
  HilbertSpace space_;
  SparseMatrix matrix_;
};

Operator commutator(const Operator& a, const Operator& b);

/// Largest entrywise modulus of a - b.
double max_abs_diff(const Operator& a, const Operator& b);
double max_abs(const Operator& a);

enum class SpinComponent { Lower, Raise, Z, X, Y };

/// Local matrices in the site's own basis.
Matrix local_annihilation(int cutoff);
Matrix local_spin(SpinComponent which);

Operator tensor_embed(const HilbertSpace& space, std::size_t site, const Matrix& local);
Operator annihilation(const HilbertSpace& space, std::size_t site);
Operator creation(const HilbertSpace& space, std::size_t site);
Operator number(const HilbertSpace& space, std::size_t site);
Operator spin_op(const HilbertSpace& space, std::size_t site, SpinComponent which);

/// Column vector of the product basis state with the given occupations.
Vector basis_vector(const HilbertSpace& space, std::span<const int> occupations);

}  // namespace hsi
