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

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "posp/model.hpp"

namespace posp {

using SpMat = Eigen::SparseMatrix<cplx>;
using DensityOperator = Eigen::MatrixXcd;

constexpr long kMaxHilbertDim = 4096;

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HilbertConfig {
  std::vector<int> n_max;   // per mode
  std::vector<int> levels;  // per emitter
  long dim() const;
};

// Cutoffs from the initial amplitudes (and the reconstruction cutoff, if any);
// override > 0 forces every mode cutoff.
HilbertConfig default_hilbert(const ModelSpec& m, int override_cutoff = 0);

// Basis order: modes first, then emitters (Kronecker product order).
struct OperatorSet {
  HilbertConfig cfg;
  double hbar = 1.0;
  std::vector<SpMat> a, adag;
  std::vector<std::vector<SpMat>> sigma;  // [emitter][p*n+q] = |p><q|
  SpMat identity;
  SpMat H;
  std::vector<SpMat> L;

  // Normally ordered operator for a polynomial in phase symbols:
  // alpha+ -> a+, alpha -> a, rho_{pq} -> sigma_{qp}. Monomials with two
  // projectors of one emitter map to zero (normal order of the auxiliary bosons).
  SpMat op_for(const Polynomial& p) const;
};

OperatorSet build_operators(const ModelSpec& m, const HilbertConfig& h);

// Truncated coherent fields (renormalized) times the emitter densities.
DensityOperator initial_density(const ModelSpec& m, const HilbertConfig& h);

struct MasterResult {
  std::vector<double> times;
  std::vector<DensityOperator> states;
  double max_trace_drift = 0.0;
  double dt_used = 0.0;
};

// RK4 for d rho/dt = -(i/h)[H, rho] + sum_k (L rho L+ - 1/2 {L+ L, rho}).
// Outputs at t0 + k*stride*dt. Trace drift above 1e-9 halves dt (up to 4 times).
MasterResult evolve_master(const DensityOperator& rho0, const OperatorSet& ops, double t0, double t1, double dt,
                           int stride = 1);

cplx expectation(const SpMat& op, const DensityOperator& rho);

}  // namespace posp
