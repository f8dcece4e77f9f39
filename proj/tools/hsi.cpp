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

// hsi: run scenarios, verify the sign-inversion mapping, solve steady states
// and sweep the Fock cutoff.
//
//   hsi run      --config scenarios/fig1.cfg [--out DIR] [--deterministic]
//   hsi verify   --config scenarios/fig2.cfg [--tol 1e-8]
//   hsi steady   --config scenarios/fig1.cfg
//   hsi converge --config scenarios/fig1.cfg
//
// Without --out, results go to $HSI_OUT_DIR or ./hsi_out.

#include <CLI11.hpp>

#include <iostream>

#include "hsi/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Lindblad simulations and Hamiltonian sign inversion checks"};
  app.set_version_flag("--version", hsi::kToolkitVersion);
  app.require_subcommand(1);

  hsi::CommandOptions opts;
  double tol = 0.0;
  int cutoff = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "Scenario file (YAML)")->required();
    sub->add_option("--out", opts.out_dir, "Output directory");
    sub->add_flag("--deterministic", opts.deterministic, "Fixed-step RK4 instead of adaptive DOPRI5");
    sub->add_option("--tol", tol, "Override the command's pass tolerance")
        ->check(CLI::PositiveNumber);
    sub->add_option("--cutoff", cutoff, "Override the Fock cutoff")->check(CLI::PositiveNumber);
  };
  auto* run = app.add_subcommand("run", "Simulate and write CSV time series");
  auto* verify = app.add_subcommand("verify", "Check the mapping and state invariants");
  auto* steady = app.add_subcommand("steady", "Solve for steady states");
  auto* converge = app.add_subcommand("converge", "Sweep the Fock cutoff");
  for (auto* sub : {run, verify, steady, converge}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hsi::exit_code::kConfigError;
  }
  for (auto* sub : {run, verify, steady, converge}) {
    if (sub->count("--tol")) opts.tol = tol;
    if (sub->count("--cutoff")) opts.cutoff = cutoff;
  }

  if (*run) return hsi::cmd_run(opts, std::cout);
  if (*verify) return hsi::cmd_verify(opts, std::cout);
  if (*steady) return hsi::cmd_steady(opts, std::cout);
  return hsi::cmd_converge(opts, std::cout);
}
