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

#include "posp/factorization.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace posp {

double max_abs(const Eigen::MatrixXcd& m) {
  double r = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) r = std::max(r, std::norm(m(i, j)));
  return std::sqrt(r);
}

Eigen::MatrixXcd DiffusionFactor::full(int n) const {
  Eigen::MatrixXcd f = Eigen::MatrixXcd::Zero(n, rank);
  for (std::size_t k = 0; k < rows.size(); ++k) f.row(rows[k]) = B.row(static_cast<Eigen::Index>(k));
  return f;
}

namespace {

double residual_of(const Eigen::MatrixXcd& S0, const Eigen::MatrixXcd& B, int rank) {
  const Eigen::Index m = S0.rows();
  double r = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i; j < m; ++j) {
      cplx acc = 0.0;
      for (int k = 0; k < rank; ++k) acc += B(i, k) * B(j, k);
      r = std::max(r, std::norm(acc - S0(i, j)));
    }
  return std::sqrt(r);
}

// Returns the rank; B(:, 0..rank) filled.
int ldlt_root_free(FactorWorkspace& ws, double tol) {
  Eigen::MatrixXcd& S = ws.S;
  Eigen::MatrixXcd& B = ws.B;
  const int m = static_cast<int>(S.rows());
  ws.active.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) ws.active[static_cast<std::size_t>(i)] = i;
  B.setZero(m, m);
  int col = 0;
  while (!ws.active.empty()) {
    double amax = 0.0, dmax = 0.0;
    int bi = -1, bj = -1, dk = -1;
    for (std::size_t x = 0; x < ws.active.size(); ++x) {
      const int i = ws.active[x];
      double d = std::norm(S(i, i));
      if (d > dmax) {
        dmax = d;
        dk = i;
      }
      for (std::size_t y = x + 1; y < ws.active.size(); ++y) {
        const int j = ws.active[y];
        double v = std::norm(S(i, j));
        if (v > amax) {
          amax = v;
          bi = i;
          bj = j;
        }
      }
    }
    // squared magnitudes: 0.25 is the 1/2 pivot ratio
    double smax = std::max(amax, dmax);
    if (smax <= tol * tol) break;
    if (dmax >= 0.25 * smax) {
      const cplx piv = std::sqrt(S(dk, dk));
      for (int i : ws.active) B(i, col) = S(i, dk) / piv;
      for (std::size_t x = 0; x < ws.active.size(); ++x) {
        const int i = ws.active[x];
        const cplx bi0 = B(i, col);
        for (std::size_t y = x; y < ws.active.size(); ++y) {
          const int j = ws.active[y];
          S(i, j) -= bi0 * B(j, col);
          S(j, i) = S(i, j);
        }
      }
      std::erase(ws.active, dk);
      col += 1;
    } else {
      const cplx a = S(bi, bi), b = S(bi, bj), c = S(bj, bj);
      const cplx det = a * c - b * b;
      const cplx tr = a + c;
      cplx s = std::sqrt(det);
      if (std::norm(tr - 2.0 * s) > std::norm(tr + 2.0 * s)) s = -s;
      const cplx t = std::sqrt(tr + 2.0 * s);
      // T = (P + sI)/t is the symmetric square root of P; columns = S(:,[i j]) P^-1 T
      const cplx t11 = (a + s) / t, t12 = b / t, t22 = (c + s) / t;
      const cplx i11 = c / det, i12 = -b / det, i22 = a / det;
      const cplx m11 = i11 * t11 + i12 * t12, m12 = i11 * t12 + i12 * t22;
      const cplx m21 = i12 * t11 + i22 * t12, m22 = i12 * t12 + i22 * t22;
      for (int r : ws.active) {
        const cplx u = S(r, bi), v = S(r, bj);
        B(r, col) = u * m11 + v * m21;
        B(r, col + 1) = u * m12 + v * m22;
      }
      for (std::size_t x = 0; x < ws.active.size(); ++x) {
        const int i = ws.active[x];
        const cplx b0 = B(i, col), b1 = B(i, col + 1);
        for (std::size_t y = x; y < ws.active.size(); ++y) {
          const int j = ws.active[y];
          S(i, j) -= b0 * B(j, col) + b1 * B(j, col + 1);
          S(j, i) = S(i, j);
        }
      }
      std::erase(ws.active, bi);
      std::erase(ws.active, bj);
      col += 2;
    }
  }
  return col;
}

}  // namespace

Eigen::MatrixXcd takagi_factor(const Eigen::MatrixXcd& D, double tol) {
  const Eigen::Index m = D.rows();
  Eigen::MatrixXd A = D.real(), Bm = D.imag();
  A = 0.5 * (A + A.transpose()).eval();
  Bm = 0.5 * (Bm + Bm.transpose()).eval();
  Eigen::MatrixXd M(2 * m, 2 * m);
  M << A, Bm, Bm, -A;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  std::vector<Eigen::VectorXcd> cols;
  for (Eigen::Index k = 0; k < 2 * m; ++k) {
    double sig = es.eigenvalues()(k);
    if (sig <= tol) continue;
    Eigen::VectorXd v = es.eigenvectors().col(k);
    Eigen::VectorXcd u(m);
    for (Eigen::Index i = 0; i < m; ++i) u(i) = cplx(v(i), v(i + m)) * std::sqrt(sig);
    cols.push_back(u);
  }
  Eigen::MatrixXcd W(m, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) W.col(static_cast<Eigen::Index>(k)) = cols[k];
  return W;
}

void factor_symmetric(const Eigen::MatrixXcd& S0, DiffusionFactor& out, FactorWorkspace& ws) {
  if (!S0.allFinite()) throw FactorizationError("non-finite diffusion matrix", 0);
  const double dnorm = max_abs(S0);
  const double tol = 1e-12 * dnorm;
  const double accept = 1e-10 * (1.0 + dnorm);
  out.dnorm = dnorm;
  out.takagi = false;
  ws.S = S0;
  int rank = ldlt_root_free(ws, tol);
  double res = residual_of(S0, ws.B, rank);
  if (res <= accept && std::isfinite(res)) {
    out.rank = rank;
    out.residual = res;
    out.B = ws.B.leftCols(rank);
    return;
  }
  // rank re-estimation through the Takagi route
  Eigen::MatrixXcd W = takagi_factor(S0, tol);
  int r2 = static_cast<int>(W.cols());
  double res2 = residual_of(S0, W, r2);
  if (res2 <= accept && std::isfinite(res2)) {
    out.rank = r2;
    out.residual = res2;
    out.B = W;
    out.takagi = true;
    return;
  }
  throw FactorizationError("diffusion factorization failed (residual " + std::to_string(std::min(res, res2)) + ")",
                           rank);
}

DiffusionFactor factor_symmetric(const Eigen::MatrixXcd& S0) {
  DiffusionFactor f;
  FactorWorkspace ws;
  factor_symmetric(S0, f, ws);
  f.rows.resize(static_cast<std::size_t>(S0.rows()));
  for (int i = 0; i < S0.rows(); ++i) f.rows[static_cast<std::size_t>(i)] = i;
  return f;
}

DiffusionFactor factor_matrix(const Eigen::MatrixXcd& D) {
  std::vector<int> rows;
  for (int i = 0; i < D.rows(); ++i) {
    bool nz = false;
    for (int j = 0; j < D.cols() && !nz; ++j) nz = D(i, j) != cplx(0.0);
    if (nz) rows.push_back(i);
  }
  Eigen::MatrixXcd S(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.size(); ++j)
      S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = D(rows[i], rows[j]);
  DiffusionFactor f;
  FactorWorkspace ws;
  factor_symmetric(S, f, ws);
  f.rows = rows;
  return f;
}

DiffusionFactor factor_diffusion(const CompiledSystem& sys, const std::vector<cplx>& x) {
  return factor_matrix(diffusion_matrix(sys, x));
}

}  // namespace posp
