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

#include "posp/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace posp {

bool LindbladSpec::is_zero() const {
  return std::all_of(gamma.begin(), gamma.end(), [](cplx c) { return c == cplx(0.0); });
}

double LindbladSpec::max_abs() const {
  double m = 0.0;
  for (auto c : gamma) m = std::max(m, std::abs(c));
  return m;
}

Eigen::MatrixXcd LindbladSpec::grouped() const {
  const int n2 = levels * levels;
  Eigen::MatrixXcd g(n2, n2);
  for (int p = 0; p < levels; ++p)
    for (int q = 0; q < levels; ++q)
      for (int r = 0; r < levels; ++r)
        for (int s = 0; s < levels; ++s) g(p * levels + q, r * levels + s) = at(p, q, r, s);
  return g;
}

bool GaugeSpec::is_identity() const {
  if (!a0.is_zero()) return false;
  return std::all_of(delta_drift.begin(), delta_drift.end(),
                     [](const auto& kv) { return kv.second.is_zero(); });
}

int ModelSpec::mode_index(const std::string& name) const {
  for (std::size_t i = 0; i < modes.size(); ++i)
    if (modes[i] == name) return static_cast<int>(i);
  return -1;
}

int ModelSpec::emitter_index(const std::string& name) const {
  for (std::size_t i = 0; i < emitters.size(); ++i)
    if (emitters[i].name == name) return static_cast<int>(i);
  return -1;
}

bool ModelSpec::has_lindblad() const {
  return std::any_of(lindblad.begin(), lindblad.end(),
                     [](const LindbladSpec& g) { return !g.is_zero(); });
}

ValidationReport validate_exactness(const HamiltonianIR& h) {
  ValidationReport rep;
  for (const auto& [m, c] : h.poly.terms()) {
    int undag = 0, dag = 0;
    for (const auto& s : m) {
      if (s.undaggered_side()) ++undag;
      if (s.daggered_side()) ++dag;
    }
    if (undag > 2 || dag > 2) {
      rep.exact = false;
      rep.offending.push_back(m);
    }
  }
  if (!rep.exact)
    rep.messages.push_back("Hamiltonian has terms with more than two creation or two annihilation factors");
  return rep;
}

Polynomial rho_to_cvar(const Polynomial& h) {
  return h.substitute([](const PhaseSymbol& s, Polynomial& out) {
    if (s.kind != SymKind::EmitterRho) return false;
    out = Polynomial::monomial(1.0, {PhaseSymbol::c(s.index, s.p), PhaseSymbol::c_dag(s.index, s.q)});
    return true;
  });
}

Polynomial cvar_to_rho(const Polynomial& h) {
  Polynomial r;
  for (const auto& [m, c] : h.terms()) {
    Monomial out;
    std::map<int, std::vector<int>> cs, cds;
    for (const auto& s : m) {
      if (s.kind == SymKind::CVar) {
        cs[s.index].push_back(s.p);
      } else if (s.kind == SymKind::CVarDag) {
        cds[s.index].push_back(s.p);
      } else {
        out.push_back(s);
      }
    }
    for (auto& [a, ps] : cs) {
      auto& qs = cds[a];
      if (ps.size() != qs.size())
        throw ModelError("C and Cdag factors of an emitter must appear in pairs");
      for (std::size_t k = 0; k < ps.size(); ++k) out.push_back(PhaseSymbol::rho(a, ps[k], qs[k]));
    }
    for (auto& [a, qs] : cds)
      if (!qs.empty() && cs[a].size() != qs.size())
        throw ModelError("C and Cdag factors of an emitter must appear in pairs");
    canonicalize(out);
    r.add_term(out, c);
  }
  return r;
}

HamiltonianIR substitute_sigma(const std::vector<OpTerm>& terms) {
  HamiltonianIR h;
  for (const auto& t : terms) {
    Monomial m;
    std::map<int, bool> seen_annihilator;
    std::map<int, bool> seen_sigma;
    for (const auto& f : t.factors) {
      switch (f.kind) {
        case OpFactor::Kind::Create:
          if (seen_annihilator[f.index])
            throw ModelError("term is not normally ordered: creator right of annihilator");
          m.push_back(PhaseSymbol::alpha_dag(f.index));
          break;
        case OpFactor::Kind::Annihilate:
          seen_annihilator[f.index] = true;
          m.push_back(PhaseSymbol::alpha(f.index));
          break;
        case OpFactor::Kind::Sigma:
          if (seen_sigma[f.index])
            throw ModelError("term is not normally ordered: two projectors of one emitter");
          seen_sigma[f.index] = true;
          m.push_back(PhaseSymbol::rho(f.index, f.q, f.p));
          break;
      }
    }
    canonicalize(m);
    h.poly.add_term(m, t.coefficient);
  }
  return h;
}

bool gamma_is_psd(const LindbladSpec& g, double* min_eig) {
  if (g.levels == 0 || g.is_zero()) {
    if (min_eig) *min_eig = 0.0;
    return true;
  }
  Eigen::MatrixXcd G = g.grouped();
  Eigen::MatrixXcd Gh = 0.5 * (G + G.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Gh);
  double lo = es.eigenvalues().minCoeff();
  if (min_eig) *min_eig = lo;
  return lo >= -1e-10 * g.max_abs();
}

namespace {

void check_hermitian_gamma(const LindbladSpec& g, const std::string& who) {
  const int n = g.levels;
  double tol = 1e-12 * (1.0 + g.max_abs());
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s)
          if (std::abs(std::conj(g.at(p, q, r, s)) - g.at(r, s, p, q)) > tol)
            throw ModelError("gamma of emitter " + who + " violates conj(G_pqrs) = G_rspq");
}

}  // namespace

void resolve_initial_state(ModelSpec& m) {
  m.initial.alpha0.resize(m.modes.size(), cplx(0.0));
  m.initial.emitters.resize(m.emitters.size());
  for (std::size_t a = 0; a < m.emitters.size(); ++a) {
    auto& e = m.initial.emitters[a];
    const int n = m.emitters[a].levels;
    if (e.kind == EmitterInit::Kind::Default) {
      e.amplitudes = Eigen::VectorXcd::Zero(n);
      e.amplitudes(0) = 1.0;
    }
    if (e.kind != EmitterInit::Kind::Mixed) e.density = e.amplitudes * e.amplitudes.adjoint();
  }
  if (m.lindblad.size() < m.emitters.size()) {
    for (std::size_t a = m.lindblad.size(); a < m.emitters.size(); ++a)
      m.lindblad.emplace_back(m.emitters[a].levels);
  }
}

void validate_model(const ModelSpec& m) {
  for (const auto& [mono, c] : m.hamiltonian.poly.terms()) {
    for (const auto& s : mono) {
      if (s.is_field()) {
        if (s.index < 0 || s.index >= static_cast<int>(m.modes.size()))
          throw ModelError("Hamiltonian references an undeclared mode");
      } else {
        if (s.index < 0 || s.index >= static_cast<int>(m.emitters.size()))
          throw ModelError("Hamiltonian references an undeclared emitter");
        int n = m.emitters[static_cast<std::size_t>(s.index)].levels;
        if (s.p < 0 || s.p >= n || s.q < 0 || s.q >= n) throw ModelError("level index out of range");
      }
    }
    if (has_same_emitter_product(mono)) throw ModelError("same-emitter product in Hamiltonian");
  }
  for (std::size_t a = 0; a < m.lindblad.size(); ++a) {
    const auto& g = m.lindblad[a];
    if (g.is_zero()) continue;
    const std::string& who = m.emitters[a].name;
    check_hermitian_gamma(g, who);
    double lo = 0.0;
    if (!gamma_is_psd(g, &lo)) {
      std::ostringstream os;
      os << "gamma of emitter " << who << " is not positive semi-definite (min eigenvalue " << lo << ")";
      throw ModelError(os.str());
    }
  }
  for (std::size_t a = 0; a < m.initial.emitters.size(); ++a) {
    const auto& e = m.initial.emitters[a];
    const std::string& who = m.emitters[a].name;
    const int n = m.emitters[a].levels;
    if (e.density.rows() != n || e.density.cols() != n)
      throw ModelError("initial state of emitter " + who + " has the wrong size");
    if (e.kind != EmitterInit::Kind::Mixed) {
      if (std::abs(e.amplitudes.squaredNorm() - 1.0) > 1e-10)
        throw ModelError("pure initial state of emitter " + who + " is not normalized");
    }
    if ((e.density - e.density.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
      throw ModelError("initial density of emitter " + who + " is not Hermitian");
    if (std::abs(e.density.trace() - cplx(1.0)) > 1e-10)
      throw ModelError("initial density of emitter " + who + " does not have unit trace");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(e.density);
    if (es.eigenvalues().minCoeff() < -1e-12)
      throw ModelError("initial density of emitter " + who + " is not positive semi-definite");
  }
  if (m.formulation == Formulation::CVariable) {
    if (m.has_lindblad()) throw ModelError("lindblad terms are not supported in the C-variable formulation");
    for (std::size_t a = 0; a < m.initial.emitters.size(); ++a)
      if (m.initial.emitters[a].kind == EmitterInit::Kind::Mixed)
        throw ModelError("mixed initial state is not supported in the C-variable formulation");
  }
  if (m.reconstruct) {
    if (m.modes.size() != 1) throw ModelError("reconstruction needs exactly one mode");
    if (m.reconstruct->cutoff < 0) throw ModelError("reconstruction cutoff must be non-negative");
  }
}

}  // namespace posp
