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

#include "posp/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

namespace posp {

long TimeGrid::steps() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("time step must be positive");
  if (!(t1 >= t0)) throw std::invalid_argument("t1 must not precede t0");
  if (stride < 1) throw std::invalid_argument("output stride must be at least 1");
  const double span = t1 - t0;
  const double ratio = span / dt;
  const double k = std::round(ratio);
  if (std::abs(ratio - k) > 1e-9 * std::max(1.0, k))
    throw std::invalid_argument("(t1 - t0) / dt is not an integer");
  const long n = static_cast<long>(k);
  if (n % stride != 0) throw std::invalid_argument("step count is not a multiple of the output stride");
  return n;
}

long EnsembleResult::last_valid_output() const {
  long last = -1;
  for (std::size_t t = 0; t < nt(); ++t) {
    long a = 0;
    for (int g = 0; g < groups; ++g) a += alive[idx_tg(t, static_cast<std::size_t>(g))];
    if (a > 0) last = static_cast<long>(t);
  }
  return last;
}

namespace {

bool bad(cplx v) {
  return !std::isfinite(v.real()) || !std::isfinite(v.imag()) || std::norm(v) > kDivergenceBound * kDivergenceBound;
}

}  // namespace

void step(const CompiledSystem& sys, TrajectoryState& s, double dt, Rng& rng, StepWorkspace& ws) {
  const std::size_t n = sys.dim();
  const int nd = sys.noise_dim();
  const cplx* x = s.x.data();
  ws.drift.resize(n);
  for (std::size_t k = 0; k < n; ++k) ws.drift[k] = sys.drift[k].eval(x);

  const std::size_t ne = sys.diff.size();
  const std::size_t nb = sys.gauged ? sys.border.size() : 0;
  ws.dvals.resize(ne + nb + 1);
  ws.pos.assign(static_cast<std::size_t>(nd), -1);
  for (std::size_t k = 0; k < ne; ++k) {
    cplx v = sys.diff[k].eval(x);
    ws.dvals[k] = v;
    if (v != cplx(0.0)) {
      ws.pos[static_cast<std::size_t>(sys.diff_row[k])] = 0;
      ws.pos[static_cast<std::size_t>(sys.diff_col[k])] = 0;
    }
  }
  const int wslot = static_cast<int>(n);
  cplx a0 = 0.0;
  if (sys.gauged) {
    for (std::size_t k = 0; k < nb; ++k) {
      cplx v = sys.border[k].eval(x);
      ws.dvals[ne + k] = v;
      if (v != cplx(0.0)) {
        ws.pos[static_cast<std::size_t>(sys.border_slot[k])] = 0;
        ws.pos[static_cast<std::size_t>(wslot)] = 0;
      }
    }
    cplx v = sys.corner.eval(x);
    ws.dvals[ne + nb] = v;
    if (v != cplx(0.0)) ws.pos[static_cast<std::size_t>(wslot)] = 0;
    a0 = sys.gauge_a0.eval(x);
  }
  ws.rows.clear();
  for (int i = 0; i < nd; ++i)
    if (ws.pos[static_cast<std::size_t>(i)] == 0) {
      ws.pos[static_cast<std::size_t>(i)] = static_cast<int>(ws.rows.size());
      ws.rows.push_back(i);
    }

  const std::size_t m = ws.rows.size();
  int rank = 0;
  if (m > 0) {
    ws.S.setZero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    auto put = [&](int r, int c, cplx v) {
      if (v == cplx(0.0)) return;
      const int i = ws.pos[static_cast<std::size_t>(r)], j = ws.pos[static_cast<std::size_t>(c)];
      ws.S(i, j) = v;
      ws.S(j, i) = v;
    };
    for (std::size_t k = 0; k < ne; ++k) put(sys.diff_row[k], sys.diff_col[k], ws.dvals[k]);
    if (sys.gauged) {
      for (std::size_t k = 0; k < nb; ++k) put(sys.border_slot[k], wslot, ws.dvals[ne + k]);
      put(wslot, wslot, ws.dvals[ne + nb]);
    }
    factor_symmetric(ws.S, ws.factor, ws.fws);
    rank = ws.factor.rank;
  }
  ws.w.resize(static_cast<std::size_t>(rank));
  for (int j = 0; j < rank; ++j) ws.w[static_cast<std::size_t>(j)] = rng.normal();

  const double sdt = std::sqrt(dt);
  for (std::size_t k = 0; k < n; ++k) {
    cplx inc = ws.drift[k] * dt;
    const int r = ws.pos[k];
    if (r >= 0) {
      cplx nz = 0.0;
      for (int j = 0; j < rank; ++j) nz += ws.factor.B(r, j) * ws.w[static_cast<std::size_t>(j)];
      inc += nz * sdt;
    }
    s.x[k] += inc;
  }
  if (sys.gauged) {
    cplx inc = a0 * dt;
    const int r = ws.pos[static_cast<std::size_t>(wslot)];
    if (r >= 0) {
      cplx nz = 0.0;
      for (int j = 0; j < rank; ++j) nz += ws.factor.B(r, j) * ws.w[static_cast<std::size_t>(j)];
      inc += nz * sdt;
    }
    s.c0 += inc;
  }
  s.t += dt;
  bool div = !std::isfinite(s.c0.real()) || !std::isfinite(s.c0.imag());
  for (std::size_t k = 0; k < n && !div; ++k) div = bad(s.x[k]);
  if (div) s.diverged = true;
}

TrajectoryRecord run_trajectory(const CompiledSystem& sys, const WeightedSample& init, const TimeGrid& grid,
                                Rng& rng) {
  const long nout = grid.outputs();
  TrajectoryRecord rec;
  TrajectoryState s;
  s.x = init.state;
  s.logweight = init.logweight;
  s.t = grid.t0;
  StepWorkspace ws;
  for (long o = 0; o < nout; ++o) {
    if (o > 0) {
      for (int k = 0; k < grid.stride && !s.diverged; ++k) {
        try {
          step(sys, s, grid.dt, rng, ws);
        } catch (const FactorizationError& e) {
          s.diverged = true;
          rec.diagnostic = e.what();
        }
      }
      s.t = grid.time_at_output(o);
    }
    if (s.diverged) {
      rec.diverged = true;
      break;
    }
    rec.times.push_back(s.t);
    rec.states.push_back(s.x);
    rec.logweights.push_back(s.logweight + s.c0);
    rec.exit_time = s.t;
  }
  return rec;
}

TrajectoryRecord run_trajectory(const CompiledSystem& sys, const WeightedSample& init, const TimeGrid& grid,
                                std::uint64_t seed, std::uint64_t index) {
  Rng rng(seed, index);
  return run_trajectory(sys, init, grid, rng);
}

ChannelSet make_channels(const CompiledSystem& sys, const std::vector<ObservableSpec>& obs) {
  ChannelSet ch;
  for (const auto& o : obs) {
    bool zero = false;
    Polynomial p = map_observable(o.expr, sys.formulation, &zero);
    ch.labels.push_back(o.label);
    ch.polys.emplace_back(p, sys.slot);
    ch.literal_zero.push_back(zero);
  }
  return ch;
}

void add_lambda_channels(ChannelSet& ch, const CompiledSystem& sys, int mode, int cutoff) {
  if (mode < 0 || mode >= static_cast<int>(sys.mode_slot.size())) throw std::invalid_argument("bad mode index");
  if (cutoff < 0 || cutoff > 170) throw std::invalid_argument("bad reconstruction cutoff");
  ch.lambda_mode = mode;
  ch.lambda_cutoff = cutoff;
}

void add_variable_channels(ChannelSet& ch, const CompiledSystem& sys) {
  for (std::size_t k = 0; k < sys.variables.size(); ++k) {
    ch.labels.push_back("var" + std::to_string(k));
    ch.polys.emplace_back(Polynomial::symbol(sys.variables[k]), sys.slot);
    ch.literal_zero.push_back(false);
  }
}

namespace {

void lambda_values(const ChannelSet& ch, const CompiledSystem& sys, const std::vector<cplx>& x, cplx* out,
                   std::vector<cplx>& am, std::vector<cplx>& bn) {
  const int K = ch.lambda_cutoff;
  const std::size_t slot = static_cast<std::size_t>(sys.mode_slot[static_cast<std::size_t>(ch.lambda_mode)]);
  const cplx a = x[slot], b = x[slot + 1];
  am.resize(static_cast<std::size_t>(K + 1));
  bn.resize(static_cast<std::size_t>(K + 1));
  am[0] = bn[0] = 1.0;
  for (int k = 1; k <= K; ++k) {
    const double s = 1.0 / std::sqrt(static_cast<double>(k));
    am[static_cast<std::size_t>(k)] = am[static_cast<std::size_t>(k - 1)] * a * s;
    bn[static_cast<std::size_t>(k)] = bn[static_cast<std::size_t>(k - 1)] * b * s;
  }
  const cplx e = std::exp(-a * b);
  for (int i = 0; i <= K; ++i)
    for (int j = 0; j <= K; ++j)
      out[static_cast<std::size_t>(i * (K + 1) + j)] = am[static_cast<std::size_t>(i)] * bn[static_cast<std::size_t>(j)] * e;
}

void channel_values(const ChannelSet& ch, const CompiledSystem& sys, const std::vector<cplx>& x,
                    std::vector<cplx>& out, std::vector<cplx>& am, std::vector<cplx>& bn) {
  out.resize(ch.size());
  for (std::size_t c = 0; c < ch.n_poly(); ++c) out[c] = ch.literal_zero[c] ? cplx(0.0) : ch.polys[c].eval(x.data());
  if (ch.n_lambda()) lambda_values(ch, sys, x, out.data() + ch.n_poly(), am, bn);
}

struct GroupSums {
  std::vector<cplx> num, den, omega;
  std::vector<double> wabs2;
  std::vector<long> alive, diverged;
  long failures = 0;
  std::vector<std::string> diag;
  double sum_abs_omega = 0.0;
  long n_final = 0;
  double max_abs_log = 0.0;
};

}  // namespace

EnsembleResult run_ensemble(const CompiledSystem& sys, const InitialStateSpec& spec, const TimeGrid& grid, long n,
                            std::uint64_t seed, const ChannelSet& channels, const EnsembleOptions& opt) {
  if (n < 2) throw std::invalid_argument("ensemble size must be at least 2");
  const long nout = grid.outputs();
  const std::size_t nt = static_cast<std::size_t>(nout);
  const std::size_t nc = channels.size();

  EnsembleResult res;
  res.n = n;
  res.groups = static_cast<int>(std::min<long>(n, std::max(2, opt.max_groups)));
  res.labels = channels.labels;
  for (int k = 0; k < channels.lambda_cutoff + 1 && channels.n_lambda(); ++k)
    for (int j = 0; j <= channels.lambda_cutoff; ++j)
      res.labels.push_back("L" + std::to_string(k) + "_" + std::to_string(j));
  res.literal_zero = channels.literal_zero;
  res.literal_zero.resize(nc, false);
  res.n_channels = nc;
  res.gauged = sys.gauged;
  res.truncated = sys.truncated;
  for (long o = 0; o < nout; ++o) res.times.push_back(grid.time_at_output(o));
  const std::size_t G = static_cast<std::size_t>(res.groups);

  // reference values from trajectory 0
  res.ref.assign(nt * nc, cplx(0.0));
  {
    Rng rng(seed, 0);
    WeightedSample s0 = init_sample(sys, spec, rng);
    TrajectoryRecord rec = run_trajectory(sys, s0, grid, rng);
    std::vector<cplx> vals, am, bn;
    for (std::size_t t = 0; t < rec.states.size(); ++t) {
      channel_values(channels, sys, rec.states[t], vals, am, bn);
      for (std::size_t c = 0; c < nc; ++c)
        if (std::isfinite(vals[c].real()) && std::isfinite(vals[c].imag())) res.ref[t * nc + c] = vals[c];
    }
    for (std::size_t t = rec.states.size(); t < nt; ++t)
      for (std::size_t c = 0; c < nc; ++c) res.ref[t * nc + c] = t > 0 ? res.ref[(t - 1) * nc + c] : cplx(0.0);
  }

  std::vector<GroupSums> sums(G);
  std::atomic<std::size_t> next_group{0};

  auto worker = [&]() {
    StepWorkspace ws;
    std::vector<cplx> vals, am, bn;
    for (;;) {
      const std::size_t g = next_group.fetch_add(1);
      if (g >= G) return;
      GroupSums& gs = sums[g];
      gs.num.assign(nt * nc, cplx(0.0));
      gs.den.assign(nt, cplx(0.0));
      gs.omega.assign(nt, cplx(0.0));
      gs.wabs2.assign(nt, 0.0);
      gs.alive.assign(nt, 0);
      gs.diverged.assign(nt, 0);
      const long k0 = static_cast<long>(g) * n / static_cast<long>(G);
      const long k1 = static_cast<long>(g + 1) * n / static_cast<long>(G);
      for (long k = k0; k < k1; ++k) {
        Rng rng(seed, static_cast<std::uint64_t>(k));
        WeightedSample s0 = init_sample(sys, spec, rng);
        TrajectoryState s;
        s.x = std::move(s0.state);
        s.logweight = s0.logweight;
        s.t = grid.t0;
        for (long o = 0; o < nout; ++o) {
          if (o > 0) {
            for (int j = 0; j < grid.stride && !s.diverged; ++j) {
              try {
                step(sys, s, grid.dt, rng, ws);
              } catch (const FactorizationError& e) {
                s.diverged = true;
                ++gs.failures;
                if (gs.diag.size() < 4)
                  gs.diag.push_back("trajectory " + std::to_string(k) + " at t=" + std::to_string(s.t) + ": " + e.what());
              }
            }
          }
          const std::size_t t = static_cast<std::size_t>(o);
          if (s.diverged) {
            gs.diverged[t] += 1;
            continue;
          }
          const cplx w = s.weight();
          channel_values(channels, sys, s.x, vals, am, bn);
          for (std::size_t c = 0; c < nc; ++c) {
            if (res.literal_zero[c]) continue;
            gs.num[t * nc + c] += w * (vals[c] - res.ref[t * nc + c]);
          }
          gs.den[t] += w;
          gs.wabs2[t] += std::norm(w);
          gs.alive[t] += 1;
          gs.omega[t] += std::exp(s.c0);
          gs.max_abs_log = std::max(gs.max_abs_log, std::abs(s.c0));
          if (o == nout - 1) {
            gs.sum_abs_omega += std::abs(std::exp(s.c0));
            gs.n_final += 1;
          }
        }
      }
    }
  };

  int nw = opt.workers > 0 ? opt.workers : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  nw = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(nw), G));
  if (nw <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nw; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  res.num.assign(nt * nc * G, cplx(0.0));
  res.den.assign(nt * G, cplx(0.0));
  res.omega.assign(nt * G, cplx(0.0));
  res.wabs2.assign(nt * G, 0.0);
  res.alive.assign(nt * G, 0);
  res.diverged.assign(nt, 0);
  double sum_abs = 0.0;
  long nfin = 0;
  for (std::size_t g = 0; g < G; ++g) {
    const GroupSums& gs = sums[g];
    for (std::size_t t = 0; t < nt; ++t) {
      for (std::size_t c = 0; c < nc; ++c) res.num[res.idx_tcg(t, c, g)] = gs.num[t * nc + c];
      res.den[res.idx_tg(t, g)] = gs.den[t];
      res.omega[res.idx_tg(t, g)] = gs.omega[t];
      res.wabs2[res.idx_tg(t, g)] = gs.wabs2[t];
      res.alive[res.idx_tg(t, g)] = gs.alive[t];
      res.diverged[t] += gs.diverged[t];
    }
    res.factorization_failures += gs.failures;
    for (const auto& d : gs.diag)
      if (res.diagnostics.size() < 8) res.diagnostics.push_back(d);
    sum_abs += gs.sum_abs_omega;
    nfin += gs.n_final;
    res.max_abs_log_omega = std::max(res.max_abs_log_omega, gs.max_abs_log);
  }
  res.mean_abs_omega = nfin > 0 ? sum_abs / static_cast<double>(nfin) : 0.0;
  if (nfin == 0) {
    const long lv = res.last_valid_output();
    const double tl = lv >= 0 ? res.times[static_cast<std::size_t>(lv)] : grid.t0;
    throw AllDivergedError("all trajectories diverged; last valid time " + std::to_string(tl), tl,
                           std::make_shared<EnsembleResult>(std::move(res)));
  }
  return res;
}

}  // namespace posp
