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

#include "hsi/models.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <string>

#include "hsi/errors.hpp"

namespace hsi {

LatticeGraph::LatticeGraph(std::size_t n_sites,
                           std::vector<std::pair<std::size_t, std::size_t>> edges)
    : n_sites_(n_sites) {
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (auto [j, k] : edges) {
    if (j >= n_sites || k >= n_sites)
      throw InvalidArgument("LatticeGraph: edge (" + std::to_string(j) + "," + std::to_string(k) +
                            ") out of range");
    if (j == k) throw InvalidArgument("LatticeGraph: self-loop on site " + std::to_string(j));
    const auto e = std::minmax(j, k);
    if (!seen.insert(e).second)
      throw InvalidArgument("LatticeGraph: duplicate edge (" + std::to_string(e.first) + "," +
                            std::to_string(e.second) + ")");
    edges_.emplace_back(e.first, e.second);
  }
}

LatticeGraph LatticeGraph::chain(std::size_t n_sites) {
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (std::size_t j = 0; j + 1 < n_sites; ++j) e.emplace_back(j, j + 1);
  return LatticeGraph(n_sites, std::move(e));
}

LatticeGraph LatticeGraph::ring(std::size_t n_sites) {
  if (n_sites < 3) return chain(n_sites);
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (std::size_t j = 0; j < n_sites; ++j) e.emplace_back(j, (j + 1) % n_sites);
  return LatticeGraph(n_sites, std::move(e));
}

bool LatticeGraph::is_bipartite() const {
  std::vector<std::vector<std::size_t>> adj(n_sites_);
  for (auto [j, k] : edges_) {
    adj[j].push_back(k);
    adj[k].push_back(j);
  }
  std::vector<int> color(n_sites_, -1);
  for (std::size_t s = 0; s < n_sites_; ++s) {
    if (color[s] != -1) continue;
    color[s] = 0;
    std::queue<std::size_t> q;
    q.push(s);
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop();
      for (std::size_t v : adj[u]) {
        if (color[v] == -1) {
          color[v] = 1 - color[u];
          q.push(v);
        } else if (color[v] == color[u]) {
          return false;
        }
      }
    }
  }
  return true;
}

// ---------------------------------------------------------------------------

namespace {
bool finite(double x) { return std::isfinite(x); }
}  // namespace

void DimerParams::validate() const {
  if (!(gamma > 0.0) || !finite(gamma)) throw InvalidArgument("DimerParams: gamma must be > 0");
  if (cutoff < 1) throw InvalidArgument("DimerParams: cutoff must be >= 1");
  if (n_sites < 2) throw InvalidArgument("DimerParams: n_sites must be >= 2");
  if (!finite(U) || !finite(delta_omega) || !finite(epsilon) || !finite(J))
    throw InvalidArgument("DimerParams: non-finite Hamiltonian parameter");
  (void)graph();
}

DimerParams DimerParams::negated() const {
  DimerParams q = *this;
  q.U = -U;
  q.delta_omega = -delta_omega;
  q.epsilon = -epsilon;
  q.J = -J;
  return q;
}

LatticeGraph DimerParams::graph() const {
  if (edges.empty()) return LatticeGraph::chain(n_sites);
  return LatticeGraph(n_sites, edges);
}

void SpinLatticeParams::validate() const {
  if (!(Gamma > 0.0) || !finite(Gamma)) throw InvalidArgument("SpinLatticeParams: Gamma must be > 0");
  if (graph.n_sites() == 0) throw InvalidArgument("SpinLatticeParams: empty lattice");
  if (drives.size() != graph.n_sites())
    throw InvalidArgument("SpinLatticeParams: " + std::to_string(drives.size()) +
                          " drives for " + std::to_string(graph.n_sites()) + " sites");
  if (!finite(delta_Omega) || !finite(J) || !std::all_of(drives.begin(), drives.end(), finite))
    throw InvalidArgument("SpinLatticeParams: non-finite Hamiltonian parameter");
}

SpinLatticeParams SpinLatticeParams::negated() const {
  SpinLatticeParams q = *this;
  q.delta_Omega = -delta_Omega;
  q.J = -J;
  for (double& e : q.drives) e = -e;
  return q;
}

LindbladModel build_dimer(const DimerParams& p) {
  p.validate();
  const HilbertSpace space(std::vector<SiteSpec>(p.n_sites, SiteSpec::boson(p.cutoff)));
  std::vector<Operator> a;
  for (std::size_t n = 0; n < p.n_sites; ++n) a.push_back(annihilation(space, n));

  Operator h = Operator::zero(space);
  for (std::size_t n = 0; n < p.n_sites; ++n) {
    const Operator ad = a[n].adjoint();
    h += p.delta_omega * (ad * a[n]);
    h += p.U * (ad * ad * a[n] * a[n]);
  }
  h += p.epsilon * (a[0].adjoint() + a[0]);
  const LatticeGraph graph = p.graph();
  for (auto [j, k] : graph.edges()) h += p.J * (a[j].adjoint() * a[k] + a[k].adjoint() * a[j]);

  std::vector<Channel> channels;
  for (std::size_t n = 0; n < p.n_sites; ++n) channels.push_back({p.gamma, a[n]});
  return LindbladModel(std::move(h), std::move(channels));
}

LindbladModel build_spin_lattice(const SpinLatticeParams& p) {
  p.validate();
  const std::size_t n_sites = p.graph.n_sites();
  const HilbertSpace space(std::vector<SiteSpec>(n_sites, SiteSpec::spin()));
  std::vector<Operator> lower, raise, z;
  for (std::size_t j = 0; j < n_sites; ++j) {
    lower.push_back(spin_op(space, j, SpinComponent::Lower));
    raise.push_back(spin_op(space, j, SpinComponent::Raise));
    z.push_back(spin_op(space, j, SpinComponent::Z));
  }

  Operator h = Operator::zero(space);
  for (std::size_t j = 0; j < n_sites; ++j) {
    h += p.delta_Omega * (raise[j] * lower[j]);
    h += p.drives[j] * (lower[j] + raise[j]);
  }
  for (auto [j, k] : p.graph.edges()) h += p.J * (z[j] * z[k]);

  std::vector<Channel> channels;
  for (std::size_t j = 0; j < n_sites; ++j) channels.push_back({p.Gamma, lower[j]});
  return LindbladModel(std::move(h), std::move(channels));
}

bool is_frustrated(const SpinLatticeParams& p) { return p.J > 0.0 && !p.graph.is_bipartite(); }

Operator total_excitation(const HilbertSpace& space) {
  Operator total = Operator::zero(space);
  for (std::size_t k = 0; k < space.n_sites(); ++k) {
    if (space.site(k).kind == SiteKind::Boson) {
      total += number(space, k);
    } else {
      total += spin_op(space, k, SpinComponent::Raise) * spin_op(space, k, SpinComponent::Lower);
    }
  }
  return total;
}

}  // namespace hsi
