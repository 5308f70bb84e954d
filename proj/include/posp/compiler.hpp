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

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "posp/model.hpp"

namespace posp {

// Flat polynomial over state-variable slots; no symbol lookups when evaluated.
class CompiledPoly {
 public:
  CompiledPoly() = default;
  CompiledPoly(const Polynomial& p, const std::map<PhaseSymbol, int>& slot);

  cplx eval(const cplx* x) const {
    cplx sum(0.0, 0.0);
    const std::size_t n = coef_.size();
    for (std::size_t k = 0; k < n; ++k) {
      cplx t = coef_[k];
      for (std::uint32_t j = offs_[k]; j < offs_[k + 1]; ++j) t *= x[vars_[j]];
      sum += t;
    }
    return sum;
  }
  bool empty() const { return coef_.empty(); }

 private:
  std::vector<cplx> coef_;
  std::vector<std::uint32_t> offs_{0};
  std::vector<std::uint32_t> vars_;
};

struct DriftSystem {
  std::vector<PhaseSymbol> variables;
  std::vector<Polynomial> drift;  // one per variable
};

struct DiffusionEntry {
  int row = 0;  // row <= col
  int col = 0;
  Polynomial poly;
};

struct DiffusionSpec {
  int dim = 0;  // number of state variables
  std::vector<DiffusionEntry> entries;  // upper triangle, nonzero polynomials only

  Eigen::MatrixXcd evaluate(const std::vector<cplx>& x, const std::vector<PhaseSymbol>& vars) const;
  Polynomial at(int r, int c) const;
};

class CompileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CompiledSystem {
  Formulation formulation = Formulation::EffectiveDensity;
  double hbar = 1.0;
  bool truncated = false;
  ValidationReport exactness;

  std::vector<PhaseSymbol> variables;
  std::map<PhaseSymbol, int> slot;
  std::vector<int> mode_slot;     // slot of alpha_i; alpha+_i is slot+1
  std::vector<int> emitter_slot;  // first slot of each emitter block

  DriftSystem drift_sym;
  DiffusionSpec diffusion_sym;
  std::vector<LindbladSpec> lindblad;

  std::vector<CompiledPoly> drift;
  std::vector<int> diff_row, diff_col;
  std::vector<CompiledPoly> diff;

  // Drift gauge; weight variable C0 sits after the state in the bordered matrix.
  bool gauged = false;
  Polynomial gauge_a0_sym;
  std::vector<std::pair<int, Polynomial>> gauge_border_sym;  // (slot, -deltaA)
  CompiledPoly gauge_a0;
  std::vector<int> border_slot;
  std::vector<CompiledPoly> border;  // -deltaA
  CompiledPoly corner;               // -2 A0
  std::string gauge_source;

  std::size_t dim() const { return variables.size(); }
  int noise_dim() const { return static_cast<int>(variables.size()) + (gauged ? 1 : 0); }
};

DriftSystem build_drift(const ModelSpec& m, bool allow_truncation = false);
DiffusionSpec build_diffusion(const ModelSpec& m, bool allow_truncation = false);
CompiledSystem compile(const ModelSpec& m, bool allow_truncation = false);

// 1/2 sum_rs (2 G_prqs rho_rs - G_rqrs rho_ps - G_rsrp rho_sq)
Eigen::MatrixXcd lindblad_drift(const LindbladSpec& g, const Eigen::MatrixXcd& rho);
// Same, as polynomials in rho_{a,..} symbols; entry (p,q).
std::vector<Polynomial> lindblad_drift_poly(const LindbladSpec& g, int emitter);

// State-variable layout of a formulation.
std::vector<PhaseSymbol> state_variables(const ModelSpec& m, Formulation f);

// Numeric D(x) including the gauge border when present.
Eigen::MatrixXcd diffusion_matrix(const CompiledSystem& sys, const std::vector<cplx>& x);

// Text dump of drift and diffusion polynomials (stable ordering).
std::string dump_system(const CompiledSystem& sys, const ModelSpec& m);

// Observable in the state variables of a formulation. Monomials with repeated
// emitter indices are dropped (literal zero); literal_zero is set when nothing is left
// and the input was nonzero.
Polynomial map_observable(const Polynomial& obs, Formulation f, bool* literal_zero = nullptr);

}  // namespace posp
