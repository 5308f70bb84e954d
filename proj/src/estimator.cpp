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

#include "posp/estimator.hpp"

#include <cmath>
#include <limits>

namespace posp {

namespace {

// Jackknife of sum(num)/sum(den) over groups with at least one survivor.
void jackknife(const std::vector<cplx>& num, const std::vector<cplx>& den, const std::vector<long>& alive,
               cplx& value, double& se) {
  cplx N = 0.0, D = 0.0;
  std::size_t used = 0;
  for (std::size_t g = 0; g < num.size(); ++g) {
    if (alive[g] == 0) continue;
    N += num[g];
    D += den[g];
    ++used;
  }
  value = N / D;
  if (used < 2) {
    se = std::numeric_limits<double>::infinity();
    return;
  }
  std::vector<cplx> th;
  th.reserve(used);
  cplx mean = 0.0;
  for (std::size_t g = 0; g < num.size(); ++g) {
    if (alive[g] == 0) continue;
    cplx v = (N - num[g]) / (D - den[g]);
    th.push_back(v);
    mean += v;
  }
  mean /= static_cast<double>(used);
  double ss = 0.0;
  for (auto v : th) ss += std::norm(v - mean);
  se = std::sqrt(ss * static_cast<double>(used - 1) / static_cast<double>(used));
  if (!std::isfinite(se)) se = std::numeric_limits<double>::infinity();
}

}  // namespace

MomentSeries estimate(const EnsembleResult& r, std::size_t c) {
  if (c >= r.n_channels) throw EstimatorError("unknown channel");
  const std::size_t G = static_cast<std::size_t>(r.groups);
  MomentSeries out;
  std::vector<cplx> num(G), den(G);
  std::vector<long> alive(G);
  for (std::size_t t = 0; t < r.nt(); ++t) {
    MomentEstimate m;
    m.t = r.times[t];
    m.diverged = r.diverged[t];
    cplx D = 0.0;
    double w2 = 0.0;
    for (std::size_t g = 0; g < G; ++g) {
      num[g] = r.num[r.idx_tcg(t, c, g)];
      den[g] = r.den[r.idx_tg(t, g)];
      alive[g] = r.alive[r.idx_tg(t, g)];
      m.alive += alive[g];
      D += den[g];
      w2 += r.wabs2[r.idx_tg(t, g)];
    }
    m.n_eff = w2 > 0.0 ? std::norm(D) / w2 : 0.0;
    m.unreliable = m.n_eff < 10.0;
    if (m.alive == 0) {
      m.value = cplx(std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN());
      m.stderr_ = std::numeric_limits<double>::infinity();
      out.push_back(m);
      continue;
    }
    if (r.literal_zero[c]) {
      m.value = 0.0;
      m.stderr_ = 0.0;
      out.push_back(m);
      continue;
    }
    cplx v;
    double se;
    jackknife(num, den, alive, v, se);
    m.value = r.ref[r.idx_tc(t, c)] + v;
    m.stderr_ = se;
    out.push_back(m);
  }
  return out;
}

MomentSeries estimate(const EnsembleResult& r, const std::string& label) {
  for (std::size_t c = 0; c < r.labels.size() && c < r.n_channels; ++c)
    if (r.labels[c] == label) return estimate(r, c);
  throw EstimatorError("unknown observable '" + label + "'");
}

MomentSeries estimate_omega(const EnsembleResult& r) {
  const std::size_t G = static_cast<std::size_t>(r.groups);
  MomentSeries out;
  std::vector<cplx> num(G), den(G);
  std::vector<long> alive(G);
  for (std::size_t t = 0; t < r.nt(); ++t) {
    MomentEstimate m;
    m.t = r.times[t];
    m.diverged = r.diverged[t];
    for (std::size_t g = 0; g < G; ++g) {
      num[g] = r.omega[r.idx_tg(t, g)];
      alive[g] = r.alive[r.idx_tg(t, g)];
      den[g] = static_cast<double>(alive[g]);
      m.alive += alive[g];
    }
    m.n_eff = static_cast<double>(m.alive);
    if (m.alive == 0) {
      m.value = std::numeric_limits<double>::quiet_NaN();
      m.stderr_ = std::numeric_limits<double>::infinity();
    } else {
      jackknife(num, den, alive, m.value, m.stderr_);
    }
    out.push_back(m);
  }
  return out;
}

cplx lambda_element(cplx a, cplx adag, int m, int n) {
  cplx am = 1.0, bn = 1.0;
  for (int k = 1; k <= m; ++k) am *= a / std::sqrt(static_cast<double>(k));
  for (int k = 1; k <= n; ++k) bn *= adag / std::sqrt(static_cast<double>(k));
  return am * bn * std::exp(-a * adag);
}

std::vector<Reconstruction> reconstruct_single_mode(const EnsembleResult& r, int cutoff) {
  const int K = cutoff;
  const std::size_t nl = static_cast<std::size_t>((K + 1) * (K + 1));
  if (r.n_channels < nl) throw EstimatorError("ensemble has no Lambda channels");
  const std::size_t base = r.n_channels - nl;
  if (r.labels.size() <= base || r.labels[base] != "L0_0") throw EstimatorError("ensemble has no Lambda channels");
  std::vector<MomentSeries> series;
  series.reserve(nl);
  for (std::size_t c = 0; c < nl; ++c) series.push_back(estimate(r, base + c));
  std::vector<Reconstruction> out;
  for (std::size_t t = 0; t < r.nt(); ++t) {
    Reconstruction rec;
    rec.t = r.times[t];
    rec.raw.resize(K + 1, K + 1);
    rec.stderr_.resize(K + 1, K + 1);
    for (int i = 0; i <= K; ++i)
      for (int j = 0; j <= K; ++j) {
        const auto& e = series[static_cast<std::size_t>(i * (K + 1) + j)][t];
        rec.raw(i, j) = e.value;
        rec.stderr_(i, j) = e.stderr_;
      }
    rec.raw_trace = rec.raw.trace();
    Eigen::MatrixXcd h = 0.5 * (rec.raw + rec.raw.adjoint());
    cplx tr = h.trace();
    rec.rho = h / tr;
    rec.cutoff_ok = rec.raw_trace.real() >= 1.0 - 1e-3;
    out.push_back(rec);
  }
  return out;
}

}  // namespace posp
