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
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "posp/polynomial.hpp"

namespace posp {

struct EmitterDecl {
  std::string name;
  int levels = 2;
  std::vector<std::string> labels;
};

struct HamiltonianIR {
  Polynomial poly;
  std::map<std::string, cplx> constants;
  double hbar = 1.0;
};

// Dense Gamma_{pqrs} per emitter, row-major in (p,q,r,s).
struct LindbladSpec {
  int levels = 0;
  std::vector<cplx> gamma;

  explicit LindbladSpec(int n = 0) : levels(n), gamma(static_cast<std::size_t>(n * n * n * n)) {}
  cplx& at(int p, int q, int r, int s) { return gamma[idx(p, q, r, s)]; }
  cplx at(int p, int q, int r, int s) const { return gamma[idx(p, q, r, s)]; }
  bool is_zero() const;
  double max_abs() const;
  // (pq) x (rs) grouping; Hermitian when the tensor invariant holds.
  Eigen::MatrixXcd grouped() const;

 private:
  std::size_t idx(int p, int q, int r, int s) const {
    return static_cast<std::size_t>(((p * levels + q) * levels + r) * levels + s);
  }
};

enum class PhaseSampling { Off, Weighted, Proper };

struct EmitterInit {
  enum class Kind { Default, Pure, Mixed } kind = Kind::Default;
  Eigen::VectorXcd amplitudes;  // pure
  Eigen::MatrixXcd density;     // p0_{pq}; always filled after resolve
};

struct InitialStateSpec {
  std::vector<cplx> alpha0;           // per mode
  std::vector<EmitterInit> emitters;  // per emitter
  PhaseSampling eta = PhaseSampling::Weighted;
  PhaseSampling theta = PhaseSampling::Weighted;
};

enum class Formulation { EffectiveDensity, CVariable };

struct ObservableSpec {
  std::string label;
  Polynomial expr;  // in phase symbols after sigma -> rho mapping
};

struct GaugeSpec {
  std::map<PhaseSymbol, Polynomial> delta_drift;
  Polynomial a0;
  std::string source;  // text as given, for the run report
  bool is_identity() const;
};

struct ReconstructSpec {
  int mode = 0;
  int cutoff = 12;
};

struct ModelSpec {
  std::vector<std::string> modes;
  std::vector<EmitterDecl> emitters;
  HamiltonianIR hamiltonian;
  std::vector<LindbladSpec> lindblad;  // per emitter
  InitialStateSpec initial;
  Formulation formulation = Formulation::EffectiveDensity;
  std::vector<ObservableSpec> observables;
  std::optional<GaugeSpec> gauge;
  std::optional<ReconstructSpec> reconstruct;

  int mode_index(const std::string& name) const;
  int emitter_index(const std::string& name) const;
  bool has_lindblad() const;
};

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ValidationReport {
  bool exact = true;
  std::vector<Monomial> offending;
  std::vector<std::string> messages;
};

// Side-degree rule: a monomial is exact when it has at most two annihilation-side
// and at most two creation-side factors once rho is read as C Cdag.
ValidationReport validate_exactness(const HamiltonianIR& h);

// rho_{a,pq} -> C_{a,p} Cdag_{a,q}
Polynomial rho_to_cvar(const Polynomial& h);
// Inverse: pairs each emitter's C_p Cdag_q into rho_pq; throws ModelError if unpaired.
Polynomial cvar_to_rho(const Polynomial& h);

// Operator-level term list for sigma substitution.
struct OpFactor {
  enum class Kind { Create, Annihilate, Sigma } kind;
  int index = 0;
  int p = 0;
  int q = 0;
};
struct OpTerm {
  cplx coefficient;
  std::vector<OpFactor> factors;  // written order
};
// sigma_{a,pq} -> rho_{a,qp}, a+ -> alpha+, a -> alpha. Rejects input that is not
// normally ordered (an annihilator left of a creator of the same mode, or two
// projectors of the same emitter).
HamiltonianIR substitute_sigma(const std::vector<OpTerm>& terms);

// Checks Gamma invariants and initial state; throws ModelError.
void validate_model(const ModelSpec& m);

// Gamma PSD check with the floor -1e-10 ||Gamma||.
bool gamma_is_psd(const LindbladSpec& g, double* min_eig = nullptr);

// Fill default initial states (ground level, vacuum) and derived densities.
void resolve_initial_state(ModelSpec& m);

}  // namespace posp
