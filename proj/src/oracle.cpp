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

#include "posp/oracle.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

namespace posp {

long HilbertConfig::dim() const {
  long d = 1;
  for (int n : n_max) {
    d *= (n + 1);
    if (d > (1L << 40)) return d;
  }
  for (int l : levels) {
    d *= l;
    if (d > (1L << 40)) return d;
  }
  return d;
}

HilbertConfig default_hilbert(const ModelSpec& m, int override_cutoff) {
  HilbertConfig h;
  int extra = 0;
  for (const auto& e : m.emitters) extra += e.levels - 1;
  for (std::size_t i = 0; i < m.modes.size(); ++i) {
    if (override_cutoff > 0) {
      h.n_max.push_back(override_cutoff);
      continue;
    }
    const double r = i < m.initial.alpha0.size() ? std::abs(m.initial.alpha0[i]) : 0.0;
    int n = static_cast<int>(std::ceil(r * r + 6.0 * r + 4.0)) + extra;
    if (m.reconstruct && m.reconstruct->mode == static_cast<int>(i)) n = std::max(n, m.reconstruct->cutoff + 4);
    h.n_max.push_back(std::max(n, 4));
  }
  for (const auto& e : m.emitters) h.levels.push_back(e.levels);
  return h;
}

namespace {

SpMat eye(long n) {
  SpMat I(n, n);
  I.setIdentity();
  return I;
}

// local operator embedded at factor position k of the product space
SpMat embed(const SpMat& local, std::size_t k, const std::vector<long>& dims) {
  SpMat out = eye(1);
  for (std::size_t j = 0; j < dims.size(); ++j) {
    SpMat f = j == k ? local : eye(dims[j]);
    SpMat t = Eigen::kroneckerProduct(out, f).eval();
    out = t;
  }
  return out;
}

}  // namespace

OperatorSet build_operators(const ModelSpec& m, const HilbertConfig& h) {
  if (h.dim() > kMaxHilbertDim)
    throw OracleError("Hilbert dimension " + std::to_string(h.dim()) + " exceeds " + std::to_string(kMaxHilbertDim) +
                      "; lower the Fock cutoffs");
  if (h.n_max.size() != m.modes.size() || h.levels.size() != m.emitters.size())
    throw OracleError("Hilbert configuration does not match the model");
  OperatorSet ops;
  ops.cfg = h;
  ops.hbar = m.hamiltonian.hbar;
  std::vector<long> dims;
  for (int n : h.n_max) dims.push_back(n + 1);
  for (int l : h.levels) dims.push_back(l);
  const long d = h.dim();
  ops.identity = eye(d);
  for (std::size_t i = 0; i < h.n_max.size(); ++i) {
    const int n = h.n_max[i];
    SpMat a(n + 1, n + 1);
    std::vector<Eigen::Triplet<cplx>> tr;
    for (int k = 1; k <= n; ++k) tr.emplace_back(k - 1, k, std::sqrt(static_cast<double>(k)));
    a.setFromTriplets(tr.begin(), tr.end());
    SpMat ad = SpMat(a.adjoint());
    ops.a.push_back(embed(a, i, dims));
    ops.adag.push_back(embed(ad, i, dims));
  }
  for (std::size_t e = 0; e < h.levels.size(); ++e) {
    const int n = h.levels[e];
    std::vector<SpMat> s;
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q) {
        SpMat loc(n, n);
        loc.insert(p, q) = 1.0;
        s.push_back(embed(loc, h.n_max.size() + e, dims));
      }
    ops.sigma.push_back(s);
  }
  ops.H = ops.op_for(m.hamiltonian.poly);
  for (std::size_t e = 0; e < m.lindblad.size() && e < m.emitters.size(); ++e) {
    const auto& g = m.lindblad[e];
    if (g.is_zero()) continue;
    Eigen::MatrixXcd G = g.grouped();
    G = 0.5 * (G + G.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G);
    const double floor = 1e-12 * g.max_abs();
    const int n = g.levels;
    for (int k = 0; k < G.rows(); ++k) {
      const double lam = es.eigenvalues()(k);
      if (lam <= floor) continue;
      SpMat L(d, d);
      for (int pq = 0; pq < n * n; ++pq) {
        const cplx c = es.eigenvectors()(pq, k);
        if (c != cplx(0.0)) L += ops.sigma[e][static_cast<std::size_t>(pq)] * (cplx(0.0, 1.0) * std::sqrt(lam) * c);
      }
      ops.L.push_back(L);
    }
  }
  return ops;
}

SpMat OperatorSet::op_for(const Polynomial& p) const {
  const long d = identity.rows();
  SpMat out(d, d);
  for (const auto& [mono, c] : p.terms()) {
    if (has_same_emitter_product(mono)) continue;
    SpMat t = identity * c;
    for (const auto& s : mono) {
      const std::size_t i = static_cast<std::size_t>(s.index);
      switch (s.kind) {
        case SymKind::FieldAmpDag:
          t = (t * adag[i]).eval();
          break;
        case SymKind::FieldAmp:
          t = (t * a[i]).eval();
          break;
        case SymKind::EmitterRho: {
          const int n = cfg.levels[i];
          t = (t * sigma[i][static_cast<std::size_t>(s.q * n + s.p)]).eval();
          break;
        }
        default:
          throw OracleError("C-variable symbols have no operator image; write the model with rho or sigma");
      }
    }
    out += t;
  }
  out.prune(cplx(0.0));
  return out;
}

DensityOperator initial_density(const ModelSpec& m, const HilbertConfig& h) {
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Ones(1, 1);
  for (std::size_t i = 0; i < h.n_max.size(); ++i) {
    const int n = h.n_max[i];
    const cplx a = i < m.initial.alpha0.size() ? m.initial.alpha0[i] : cplx(0.0);
    Eigen::VectorXcd v(n + 1);
    cplx c = std::exp(-0.5 * std::norm(a));
    for (int k = 0; k <= n; ++k) {
      v(k) = c;
      c *= a / std::sqrt(static_cast<double>(k + 1));
    }
    v /= v.norm();
    Eigen::MatrixXcd loc = v * v.adjoint();
    rho = Eigen::kroneckerProduct(rho, loc).eval();
  }
  for (std::size_t e = 0; e < h.levels.size(); ++e) {
    const Eigen::MatrixXcd& p0 = m.initial.emitters[e].density;
    rho = Eigen::kroneckerProduct(rho, p0).eval();
  }
  return rho;
}

cplx expectation(const SpMat& op, const DensityOperator& rho) {
  cplx s = 0.0;
  for (int k = 0; k < op.outerSize(); ++k)
    for (SpMat::InnerIterator it(op, k); it; ++it) s += it.value() * rho(it.col(), it.row());
  return s;
}

namespace {

struct Liouvillian {
  SpMat H;
  std::vector<SpMat> L, Ld;
  SpMat K;  // sum L+ L
  cplx mih;

  DensityOperator apply(const DensityOperator& r) const {
    DensityOperator out = mih * (H * r - r * H);
    if (!L.empty()) {
      out -= 0.5 * (K * r + r * K);
      for (std::size_t k = 0; k < L.size(); ++k) {
        DensityOperator lr = L[k] * r;
        out += lr * Ld[k];
      }
    }
    return out;
  }
};

}  // namespace

MasterResult evolve_master(const DensityOperator& rho0, const OperatorSet& ops, double t0, double t1, double dt,
                           int stride) {
  if (stride < 1) throw OracleError("stride must be positive");
  if (!(dt > 0.0)) throw OracleError("dt must be positive");
  const double tol_h = 1e-10;
  if ((rho0 - rho0.adjoint()).cwiseAbs().maxCoeff() > tol_h) throw OracleError("initial density is not Hermitian");
  if (std::abs(rho0.trace() - cplx(1.0)) > 1e-10) throw OracleError("initial density does not have unit trace");

  Liouvillian lv;
  lv.H = ops.H;
  lv.mih = cplx(0.0, -1.0 / ops.hbar);
  lv.L = ops.L;
  const long d = ops.identity.rows();
  lv.K = SpMat(d, d);
  for (const auto& L : ops.L) {
    lv.Ld.push_back(SpMat(L.adjoint()));
    lv.K += SpMat(L.adjoint()) * L;
  }
  const double span = t1 - t0;
  const long steps = std::lround(span / dt);
  if (std::abs(span / dt - static_cast<double>(steps)) > 1e-9 * std::max(1.0, static_cast<double>(steps)))
    throw OracleError("(t1 - t0) / dt is not an integer");
  if (steps % stride != 0) throw OracleError("step count is not a multiple of the output stride");

  for (int attempt = 0; attempt <= 4; ++attempt) {
    const long sub = 1L << attempt;
    const double h = dt / static_cast<double>(sub);
    MasterResult res;
    res.dt_used = h;
    DensityOperator r = rho0;
    res.times.push_back(t0);
    res.states.push_back(r);
    bool ok = true;
    for (long k = 1; k <= steps && ok; ++k) {
      for (long j = 0; j < sub; ++j) {
        DensityOperator k1 = lv.apply(r);
        DensityOperator k2 = lv.apply(r + 0.5 * h * k1);
        DensityOperator k3 = lv.apply(r + 0.5 * h * k2);
        DensityOperator k4 = lv.apply(r + h * k3);
        r += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      const double drift = std::abs(r.trace() - cplx(1.0));
      res.max_trace_drift = std::max(res.max_trace_drift, drift);
      if (!(drift <= 1e-9)) ok = false;
      if (k % stride == 0) {
        res.times.push_back(t0 + static_cast<double>(k) * dt);
        res.states.push_back(r);
      }
    }
    if (ok) return res;
  }
  throw OracleError("master equation integration unstable: trace drift exceeded 1e-9 after 4 step halvings");
}

}  // namespace posp
