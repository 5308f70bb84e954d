// Copyright 2026 The pospsim Authors
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

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "posp/estimator.hpp"

namespace posp {

enum ExitCode { kExitOk = 0, kExitConfig = 1, kExitRuntime = 2 };

struct RunConfig {
  std::string model_path;
  double t0 = 0.0;
  double t1 = 1.0;
  double dt = 1e-3;
  int stride = 10;
  long n = 1000;
  std::uint64_t seed = 1;
  std::optional<Formulation> formulation;
  bool allow_truncation = false;
  std::string gauge_path;
  int workers = 0;
  std::string out_dir = ".";
  std::string format = "csv";
  bool dump = false;
  int cutoff = 0;            // compare: Fock cutoff override
  double z_threshold = 4.0;  // compare
  double tolerance = 1e-3;   // compare: deterministic discretization allowance
};

int cmd_validate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_run(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_compare(const RunConfig& cfg, std::ostream& out, std::ostream& err);

// Full command line, used by the posp executable and the tests.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// "t,re,im,stderr,n_eff,diverged"
std::string series_csv(const MomentSeries& s);

// Number of noise channels: maximal numeric rank of D over a few random states.
int generic_noise_rank(const CompiledSystem& sys, int samples = 16, std::uint64_t seed = 7);

}  // namespace posp
