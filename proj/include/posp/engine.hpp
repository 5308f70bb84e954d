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

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "posp/compiler.hpp"
#include "posp/factorization.hpp"
#include "posp/sampler.hpp"

namespace posp {

struct TimeGrid {
  double t0 = 0.0;
  double t1 = 1.0;
  double dt = 1e-3;
  int stride = 1;

  // Throws std::invalid_argument when (t1-t0)/dt is not an integer to 1e-9
  // relative, or when the step count is not a multiple of stride.
  long steps() const;
  long outputs() const { return steps() / stride + 1; }
  double time_at_output(long k) const { return t0 + static_cast<double>(k * stride) * dt; }
};

struct TrajectoryState {
  std::vector<cplx> x;
  cplx logweight = 0.0;  // initial eta/theta part
  cplx c0 = 0.0;         // gauge weight exponent, Omega = exp(c0)
  double t = 0.0;
  bool diverged = false;

  cplx weight() const { return std::exp(logweight + c0); }
};

// Per-worker scratch for step().
struct StepWorkspace {
  FactorWorkspace fws;
  DiffusionFactor factor;
  std::vector<cplx> drift;
  std::vector<cplx> dvals;  // diffusion entry values, then border, then corner
  std::vector<int> rows;
  std::vector<int> pos;  // full index -> compact row, -1 when dropped
  std::vector<double> w;
  Eigen::MatrixXcd S;
};

constexpr double kDivergenceBound = 1e9;

// One Euler-Maruyama step at the left endpoint. Sets diverged on a non-finite
// or out-of-bound result; FactorizationError propagates.
void step(const CompiledSystem& sys, TrajectoryState& s, double dt, Rng& rng, StepWorkspace& ws);

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<std::vector<cplx>> states;
  std::vector<cplx> logweights;  // total log weight (initial + gauge)
  bool diverged = false;
  double exit_time = 0.0;
  std::string diagnostic;
};

TrajectoryRecord run_trajectory(const CompiledSystem& sys, const WeightedSample& init, const TimeGrid& grid,
                                Rng& rng);
TrajectoryRecord run_trajectory(const CompiledSystem& sys, const WeightedSample& init, const TimeGrid& grid,
                                std::uint64_t seed, std::uint64_t index = 0);

// Channels accumulated by the ensemble: polynomials in the state plus an
// optional block of Lambda-projector entries for one mode.
struct ChannelSet {
  std::vector<std::string> labels;
  std::vector<CompiledPoly> polys;
  std::vector<bool> literal_zero;
  int lambda_mode = -1;  // mode index or -1
  int lambda_cutoff = 0;

  std::size_t n_poly() const { return polys.size(); }
  std::size_t n_lambda() const {
    return lambda_mode < 0 ? 0 : static_cast<std::size_t>((lambda_cutoff + 1) * (lambda_cutoff + 1));
  }
  std::size_t size() const { return n_poly() + n_lambda(); }
};

// Observables of the model (sigma already mapped to rho), in the system's formulation.
ChannelSet make_channels(const CompiledSystem& sys, const std::vector<ObservableSpec>& obs);
void add_lambda_channels(ChannelSet& ch, const CompiledSystem& sys, int mode, int cutoff);
void add_variable_channels(ChannelSet& ch, const CompiledSystem& sys);

struct EnsembleOptions {
  int workers = 0;  // 0 = hardware concurrency
  int max_groups = 256;
};

// Streaming sums per output time and jackknife group. Channel values are
// accumulated relative to a reference (trajectory 0) so deterministic
// ensembles give exactly zero spread.
struct EnsembleResult {
  std::vector<double> times;
  long n = 0;
  int groups = 0;
  std::vector<std::string> labels;
  std::vector<bool> literal_zero;
  std::size_t n_channels = 0;

  std::vector<cplx> ref;      // [t][c]
  std::vector<cplx> num;      // [t][c][g] sum w (f - ref)
  std::vector<cplx> den;      // [t][g]    sum w
  std::vector<double> wabs2;  // [t][g]    sum |w|^2
  std::vector<long> alive;    // [t][g]
  std::vector<cplx> omega;    // [t][g]    sum Omega (gauge factor only)
  std::vector<long> diverged;  // [t] cumulative

  long factorization_failures = 0;
  std::vector<std::string> diagnostics;  // first few
  bool gauged = false;
  bool truncated = false;
  double mean_abs_omega = 1.0;  // final time, surviving trajectories
  double max_abs_log_omega = 0.0;

  std::size_t nt() const { return times.size(); }
  std::size_t idx_tc(std::size_t t, std::size_t c) const { return t * n_channels + c; }
  std::size_t idx_tcg(std::size_t t, std::size_t c, std::size_t g) const {
    return (t * n_channels + c) * static_cast<std::size_t>(groups) + g;
  }
  std::size_t idx_tg(std::size_t t, std::size_t g) const { return t * static_cast<std::size_t>(groups) + g; }
  long last_valid_output() const;  // -1 when every trajectory diverged before output 0
};

class AllDivergedError : public std::runtime_error {
 public:
  AllDivergedError(const std::string& msg, double last_valid, std::shared_ptr<EnsembleResult> r)
      : std::runtime_error(msg), last_valid_time(last_valid), partial(std::move(r)) {}
  double last_valid_time;
  std::shared_ptr<EnsembleResult> partial;
};

// Throws AllDivergedError (carrying the partial result) when no trajectory
// survives to the final output time.
EnsembleResult run_ensemble(const CompiledSystem& sys, const InitialStateSpec& spec, const TimeGrid& grid, long n,
                            std::uint64_t seed, const ChannelSet& channels, const EnsembleOptions& opt = {});

}  // namespace posp
