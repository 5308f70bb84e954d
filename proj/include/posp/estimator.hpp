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

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "posp/engine.hpp"

namespace posp {

struct MomentEstimate {
  double t = 0.0;
  cplx value = 0.0;
  double stderr_ = 0.0;
  double n_eff = 0.0;
  long diverged = 0;
  long alive = 0;
  bool unreliable = false;  // n_eff < 10
};

using MomentSeries = std::vector<MomentEstimate>;

class EstimatorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Ratio estimator sum w f / sum w with delete-one-group jackknife errors.
// Literal-zero channels return exactly 0 with zero error.
MomentSeries estimate(const EnsembleResult& r, std::size_t channel);
MomentSeries estimate(const EnsembleResult& r, const std::string& label);

// Plain mean of the gauge factor Omega over surviving trajectories.
MomentSeries estimate_omega(const EnsembleResult& r);

struct Reconstruction {
  double t = 0.0;
  Eigen::MatrixXcd rho;     // Hermitized and trace-normalized
  Eigen::MatrixXcd raw;     // direct weighted means
  Eigen::MatrixXd stderr_;  // entrywise error of raw
  cplx raw_trace = 0.0;
  bool cutoff_ok = true;  // Re(raw trace) >= 1 - 1e-3
};

// Needs the Lambda block in the ensemble channels.
std::vector<Reconstruction> reconstruct_single_mode(const EnsembleResult& r, int cutoff);

// Lambda-projector matrix element <m|Lambda(a, a+)|n>.
cplx lambda_element(cplx a, cplx adag, int m, int n);

}  // namespace posp
