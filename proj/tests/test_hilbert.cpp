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

#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "hsi/errors.hpp"
#include "hsi/hilbert.hpp"

using namespace hsi;
using testing::max_diff;

TEST_SUITE("hilbert") {

TEST_CASE("space dimensions") {
  CHECK(build_space({SiteSpec::boson(5), SiteSpec::boson(5)}).dim() == 36);
  CHECK(build_space({SiteSpec::spin(), SiteSpec::spin(), SiteSpec::spin()}).dim() == 8);
  CHECK(build_space({SiteSpec::boson(1)}).dim() == 2);
  CHECK(build_space({SiteSpec::boson(2), SiteSpec::spin()}).dim() == 6);
}

TEST_CASE("space construction errors") {
  CHECK_THROWS_AS(build_space({}), InvalidArgument);
  CHECK_THROWS_AS(build_space({SiteSpec::boson(0)}), InvalidArgument);
  CHECK_THROWS_AS(build_space({SiteSpec::boson(-3)}), InvalidArgument);
}

TEST_CASE("site 0 varies slowest") {
  const HilbertSpace s = build_space({SiteSpec::boson(2), SiteSpec::boson(3)});
  const int occ[] = {1, 2};
  CHECK(s.index_of(occ) == 1 * 4 + 2);
  CHECK(s.occupation(6, 0) == 1);
  CHECK(s.occupation(6, 1) == 2);
  const Vector v = basis_vector(s, occ);
  CHECK(v(6) == cplx(1.0));
  CHECK(v.norm() == doctest::Approx(1.0));
}

TEST_CASE("annihilation matrix elements, cutoff 2") {
  const HilbertSpace s = build_space({SiteSpec::boson(2)});
  const Matrix a = annihilation(s, 0).dense();
  Matrix expected = Matrix::Zero(3, 3);
  expected(0, 1) = 1.0;
  expected(1, 2) = std::sqrt(2.0);
  CHECK(max_diff(a, expected) == 0.0);
  const int vac[] = {0};
  CHECK((a * basis_vector(s, vac)).norm() == 0.0);
}

TEST_CASE("annihilation agrees with the element-wise dimer construction") {
  for (int n : {1, 3, 6}) {
    const HilbertSpace s = build_space({SiteSpec::boson(n), SiteSpec::boson(n)});
    for (int site : {0, 1})
      CHECK(max_diff(annihilation(s, site).dense(), testing::dimer_annihilation(n, site)) == 0.0);
  }
}

TEST_CASE("[a, a^+] is the identity except at the top Fock level") {
  const HilbertSpace s = build_space({SiteSpec::boson(3)});
  const Matrix a = annihilation(s, 0).dense();
  const Matrix comm = a * a.adjoint() - a.adjoint() * a;
  for (int i = 0; i < 3; ++i) CHECK(std::abs(comm(i, i) - 1.0) < 1e-15);
  // Truncation artifact: 0 - N at the top level.
  CHECK(std::abs(comm(3, 3) - cplx(-3.0)) < 1e-15);
  CHECK((comm - comm.diagonal().asDiagonal().toDenseMatrix()).norm() == 0.0);
}

TEST_CASE("boson operators are real and number is diag(0..N)") {
  for (int n : {1, 4, 9}) {
    const HilbertSpace s = build_space({SiteSpec::boson(n)});
    const Operator a = annihilation(s, 0);
    CHECK(max_abs_diff(a, a.conjugate()) == 0.0);
    const Matrix num = number(s, 0).dense();
    for (int k = 0; k <= n; ++k) CHECK(num(k, k) == cplx(k));
    CHECK((num - Matrix(num.diagonal().asDiagonal())).norm() == 0.0);
    CHECK(max_diff(creation(s, 0).dense(), a.dense().adjoint()) == 0.0);
  }
}

TEST_CASE("spin operators") {
  const HilbertSpace s = build_space({SiteSpec::spin()});
  const Matrix lower = spin_op(s, 0, SpinComponent::Lower).dense();
  Matrix expected = Matrix::Zero(2, 2);
  expected(0, 1) = 1.0;  // <g|s-|e>
  CHECK(max_diff(lower, expected) == 0.0);

  const Matrix raise = spin_op(s, 0, SpinComponent::Raise).dense();
  const int e[] = {1};
  const Vector ve = basis_vector(s, e);
  CHECK(((raise * lower) * ve - ve).norm() == 0.0);

  const Matrix z = spin_op(s, 0, SpinComponent::Z).dense();
  CHECK(max_diff(z, 2.0 * raise * lower - Matrix::Identity(2, 2)) == 0.0);

  const Matrix y = spin_op(s, 0, SpinComponent::Y).dense();
  CHECK(y.real().norm() == 0.0);
  CHECK(max_diff(y, y.adjoint()) == 0.0);
  const Matrix x = spin_op(s, 0, SpinComponent::X).dense();
  CHECK(max_diff(x * y - y * x, cplx(0.0, 2.0) * z) < 1e-15);
}

TEST_CASE("tensor_embed") {
  const HilbertSpace s = build_space({SiteSpec::boson(2), SiteSpec::boson(3)});
  CHECK(max_diff(tensor_embed(s, 1, Matrix::Identity(4, 4)).dense(), Matrix::Identity(12, 12)) == 0.0);

  const Matrix n_local = local_annihilation(3).adjoint() * local_annihilation(3);
  const Operator n1 = tensor_embed(s, 1, n_local);
  const int occ[] = {1, 2};
  const Vector v = basis_vector(s, occ);
  CHECK((n1.dense() * v - 2.0 * v).norm() < 1e-15);
  CHECK(max_abs_diff(n1, number(s, 1)) < 1e-15);

  const HilbertSpace spins = build_space({SiteSpec::spin(), SiteSpec::spin(), SiteSpec::spin()});
  CHECK(std::abs(tensor_embed(spins, 0, local_spin(SpinComponent::Z)).dense().trace()) == 0.0);

  CHECK_THROWS_AS(tensor_embed(s, 0, Matrix::Identity(4, 4)), InvalidArgument);
  CHECK_THROWS_AS(tensor_embed(s, 2, Matrix::Identity(3, 3)), InvalidArgument);
}

TEST_CASE("operators on different sites commute") {
  const HilbertSpace s = build_space({SiteSpec::boson(3), SiteSpec::spin(), SiteSpec::boson(2)});
  const std::vector<Operator> site0{annihilation(s, 0), creation(s, 0), number(s, 0)};
  const std::vector<Operator> site1{spin_op(s, 1, SpinComponent::Lower), spin_op(s, 1, SpinComponent::Y)};
  const std::vector<Operator> site2{annihilation(s, 2), number(s, 2)};
  for (const auto& a : site0) {
    for (const auto& b : site1) CHECK(max_abs(commutator(a, b)) == 0.0);
    for (const auto& b : site2) CHECK(max_abs(commutator(a, b)) == 0.0);
  }
  for (const auto& a : site1)
    for (const auto& b : site2) CHECK(max_abs(commutator(a, b)) == 0.0);
}

TEST_CASE("wrong site kind or index") {
  const HilbertSpace s = build_space({SiteSpec::boson(2), SiteSpec::spin()});
  CHECK_THROWS_AS(annihilation(s, 1), InvalidArgument);
  CHECK_THROWS_AS(annihilation(s, 2), InvalidArgument);
  CHECK_THROWS_AS(spin_op(s, 0, SpinComponent::Z), InvalidArgument);
  CHECK_THROWS_AS(spin_op(s, 5, SpinComponent::Z), InvalidArgument);
}

TEST_CASE("operator arithmetic keeps the space and checks it") {
  const HilbertSpace s = build_space({SiteSpec::boson(2)});
  const HilbertSpace t = build_space({SiteSpec::boson(3)});
  const Operator a = annihilation(s, 0);
  CHECK((a + a).dim() == 3);
  CHECK(max_abs_diff(2.0 * a, a + a) == 0.0);
  CHECK_THROWS_AS(a + annihilation(t, 0), InvalidArgument);
  CHECK_THROWS_AS(a * annihilation(t, 0), InvalidArgument);
  CHECK_THROWS_AS(Operator(s, SparseMatrix(4, 4)), InvalidArgument);
}

}  // TEST_SUITE
