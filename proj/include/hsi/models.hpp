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
#include <utility>
#include <vector>

#include "hsi/lindblad.hpp"

namespace hsi {

/// Undirected simple graph on sites 0..n_sites-1.
class LatticeGraph {
 public:
  LatticeGraph() = default;
  /// Throws InvalidArgument on self-loops, duplicates or out-of-range ends.
  LatticeGraph(std::size_t n_sites, std::vector<std::pair<std::size_t, std::size_t>> edges);

  static LatticeGraph chain(std::size_t n_sites);
  static LatticeGraph ring(std::size_t n_sites);
  static LatticeGraph triangle() { return ring(3); }
  static LatticeGraph square() { return ring(4); }

  std::size_t n_sites() const { return n_sites_; }
  /// Edges normalized to (min, max) in insertion order.
  const std::vector<std::pair<std::size_t, std::size_t>>& edges() const { return edges_; }
  bool is_bipartite() const;

 private:
  std::size_t n_sites_ = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges_;
};

/// Driven-dissipative Bose-Hubbard dimer (or lattice) in the drive frame.
/// All energies and rates in units of the loss rate.
struct DimerParams {
  double U = 0.0;
  double delta_omega = 0.0;
  double epsilon = 0.0;  // coherent drive on site 0
  double J = 0.0;
  double gamma = 1.0;
  std::size_t n_sites = 2;
  int cutoff = 1;
  /// Hopping bonds; empty means an open chain over n_sites.
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  void validate() const;
  /// (U, delta_omega, epsilon, J) -> (-U, -delta_omega, -epsilon, -J); gamma untouched.
  DimerParams negated() const;
  LatticeGraph graph() const;
};

struct SpinLatticeParams {
  double delta_Omega = 0.0;
  std::vector<double> drives;  // epsilon_j per site
  double J = 0.0;
  double Gamma = 1.0;
  LatticeGraph graph;

  void validate() const;
  /// (delta_Omega, drives, J) all negated; Gamma untouched.
  SpinLatticeParams negated() const;
};

/// H = sum_n [dw n_n + U a+_n a+_n a_n a_n] + eps (a+_0 + a_0)
///     + J sum_<jk> (a+_j a_k + a+_k a_j), channels (gamma, a_n).
LindbladModel build_dimer(const DimerParams& p);

/// H = sum_j [dW s+_j s-_j + eps_j (s-_j + s+_j)] + J sum_<jk> sz_j sz_k,
/// channels (Gamma, s-_j).
LindbladModel build_spin_lattice(const SpinLatticeParams& p);

/// J > 0 on a non-bipartite graph.
bool is_frustrated(const SpinLatticeParams& p);

/// Sum of a+_n a_n (bosons) or s+_j s-_j (spins) over all sites.
Operator total_excitation(const HilbertSpace& space);

}  // namespace hsi
