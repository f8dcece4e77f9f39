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

// Reference constructions used as oracles. Everything here is dense and built
// element by element from textbook matrix elements, independent of the
// library's sparse embedding code.

#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "hsi/hilbert.hpp"

namespace testing {

using hsi::cplx;
using hsi::Matrix;

inline double max_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

// Two boson sites with cutoff n; basis index i = n1 * (n + 1) + n2.
inline int idx2(int n, int n1, int n2) { return n1 * (n + 1) + n2; }

// <m1 m2| a_site |n1 n2> from sqrt(n) elements.
inline Matrix dimer_annihilation(int n, int site) {
  const int d = (n + 1) * (n + 1);
  Matrix a = Matrix::Zero(d, d);
  for (int n1 = 0; n1 <= n; ++n1)
    for (int n2 = 0; n2 <= n; ++n2) {
      if (site == 0 && n1 > 0) a(idx2(n, n1 - 1, n2), idx2(n, n1, n2)) = std::sqrt(double(n1));
      if (site == 1 && n2 > 0) a(idx2(n, n1, n2 - 1), idx2(n, n1, n2)) = std::sqrt(double(n2));
    }
  return a;
}

// Dimer Hamiltonian from its Fock-basis matrix elements.
inline Matrix dimer_hamiltonian(int n, double U, double dw, double eps, double J) {
  const int d = (n + 1) * (n + 1);
  Matrix h = Matrix::Zero(d, d);
  for (int n1 = 0; n1 <= n; ++n1)
    for (int n2 = 0; n2 <= n; ++n2) {
      const int i = idx2(n, n1, n2);
      h(i, i) = dw * (n1 + n2) + U * (n1 * (n1 - 1) + n2 * (n2 - 1));
      if (n1 < n) {
        const int j = idx2(n, n1 + 1, n2);
        h(j, i) += eps * std::sqrt(n1 + 1.0);
        h(i, j) += eps * std::sqrt(n1 + 1.0);
      }
      if (n1 < n && n2 > 0) {  // a1^+ a2
        const int j = idx2(n, n1 + 1, n2 - 1);
        const double v = J * std::sqrt((n1 + 1.0) * n2);
        h(j, i) += v;
        h(i, j) += v;
      }
    }
  return h;
}

// -i[H, rho] + sum_j rate (c rho c^+ - 1/2 {c^+ c, rho}), all dense.
inline Matrix dense_lindblad(const Matrix& h, const std::vector<std::pair<double, Matrix>>& ch,
                             const Matrix& rho) {
  const cplx i(0.0, 1.0);
  Matrix out = -i * (h * rho - rho * h);
  for (const auto& [g, c] : ch) {
    const Matrix cdc = c.adjoint() * c;
    out += g * (c * rho * c.adjoint() - 0.5 * (cdc * rho + rho * cdc));
  }
  return out;
}

inline Matrix random_hermitian(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix m(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) m(r, c) = cplx(g(rng), g(rng));
  return 0.5 * (m + m.adjoint());
}

inline Matrix random_density(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix m(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) m(r, c) = cplx(g(rng), g(rng));
  Matrix rho = m * m.adjoint();
  rho /= rho.trace();
  return 0.5 * (rho + rho.adjoint());
}

}  // namespace testing
