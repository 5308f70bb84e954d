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

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "posp/compiler.hpp"

namespace posp {

class FactorizationError : public std::runtime_error {
 public:
  FactorizationError(const std::string& msg, int pivot) : std::runtime_error(msg), pivot_(pivot) {}
  int pivot() const { return pivot_; }

 private:
  int pivot_;
};

// B has one row per entry of `rows` (indices into the full noise matrix) and
// one column per noise channel.
struct DiffusionFactor {
  Eigen::MatrixXcd B;
  std::vector<int> rows;
  int rank = 0;
  double residual = 0.0;
  double dnorm = 0.0;
  bool takagi = false;

  int n_noise() const { return rank; }
  // Full-size B (noise_dim x rank), zero rows where D has an all-zero row.
  Eigen::MatrixXcd full(int n) const;
};

// Reusable buffers; one per worker.
struct FactorWorkspace {
  Eigen::MatrixXcd S, S0, B;
  std::vector<int> active;
};

// Factor a compact complex-symmetric matrix S0 = B B^T. Pivoted root-free
// decomposition with 1x1 / 2x2 pivots, Takagi fallback when the residual check
// fails. Throws FactorizationError when both fail.
void factor_symmetric(const Eigen::MatrixXcd& S0, DiffusionFactor& out, FactorWorkspace& ws);
DiffusionFactor factor_symmetric(const Eigen::MatrixXcd& S0);

// Takagi-style B from the real symmetric embedding [[A, B], [B, -A]].
Eigen::MatrixXcd takagi_factor(const Eigen::MatrixXcd& D, double tol);

// Full D(x) of a compiled system (bordered if gauged): drop exactly-zero rows, factor.
DiffusionFactor factor_diffusion(const CompiledSystem& sys, const std::vector<cplx>& x);
DiffusionFactor factor_matrix(const Eigen::MatrixXcd& D);

double max_abs(const Eigen::MatrixXcd& m);

}  // namespace posp
