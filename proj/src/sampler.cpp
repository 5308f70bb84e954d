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

#include "posp/sampler.hpp"

#include <cmath>
#include <numbers>

namespace posp {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t s = splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  eng_.seed(seq);
}

namespace {

// psi uniform on [0, 2pi), redrawn in the (measure-zero) event of a vanishing weight
template <class W>
PhaseDraw weighted_phase(Rng& rng, W weight) {
  for (;;) {
    const double psi = 2.0 * std::numbers::pi * rng.uniform();
    const cplx w = weight(psi);
    if (std::abs(w) < 1e-300) continue;
    const cplx v = std::polar(1.0, psi);
    return {v, v, std::log(w)};
  }
}

}  // namespace

PhaseDraw sample_eta(Rng& rng) {
  return weighted_phase(rng, [](double psi) { return 1.0 + std::polar(1.0, -psi); });
}

PhaseDraw sample_theta(Rng& rng) {
  return weighted_phase(rng, [](double psi) { return 1.0 + std::polar(1.0, -2.0 * psi); });
}

PhaseDraw sample_proper(Rng& rng) {
  // u: r^2/2 ~ Gamma(2,1) with a uniform angle; v: complex Gaussian, unit variance per part
  const double r = std::sqrt(2.0 * rng.gamma2());
  const cplx u = std::polar(r, 2.0 * std::numbers::pi * rng.uniform());
  const double vr = rng.normal();
  const double vi = rng.normal();
  const cplx v(vr, vi);
  const double s = std::sqrt(0.5);
  return {(u + v) * s, std::conj((u - v) * s), 0.0};
}

WeightedSample init_effective_density(const CompiledSystem& sys, const InitialStateSpec& spec, Rng& rng) {
  if (sys.formulation != Formulation::EffectiveDensity)
    throw SamplerError("effective-density sampler used with a C-variable system");
  WeightedSample ws;
  ws.state.assign(sys.dim(), cplx(0.0));
  for (std::size_t i = 0; i < sys.mode_slot.size(); ++i) {
    const cplx a0 = i < spec.alpha0.size() ? spec.alpha0[i] : cplx(0.0);
    ws.state[static_cast<std::size_t>(sys.mode_slot[i])] = a0;
    ws.state[static_cast<std::size_t>(sys.mode_slot[i] + 1)] = std::conj(a0);
  }
  for (std::size_t a = 0; a < sys.emitter_slot.size(); ++a) {
    if (a >= spec.emitters.size()) throw SamplerError("missing initial state for an emitter");
    const auto& p0 = spec.emitters[a].density;
    const int n = static_cast<int>(p0.rows());
    cplx eta = 1.0;
    if (spec.eta == PhaseSampling::Weighted) {
      auto d = sample_eta(rng);
      eta = d.value;
      ws.logweight += d.logweight;
    } else if (spec.eta == PhaseSampling::Proper) {
      auto d = sample_proper(rng);
      eta = d.value * d.partner;
    }
    const std::size_t base = static_cast<std::size_t>(sys.emitter_slot[a]);
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q) ws.state[base + static_cast<std::size_t>(p * n + q)] = eta * p0(p, q);
  }
  return ws;
}

WeightedSample init_cvariables(const CompiledSystem& sys, const InitialStateSpec& spec, Rng& rng) {
  if (sys.formulation != Formulation::CVariable)
    throw SamplerError("C-variable sampler used with an effective-density system");
  WeightedSample ws;
  ws.state.assign(sys.dim(), cplx(0.0));
  for (std::size_t i = 0; i < sys.mode_slot.size(); ++i) {
    const cplx a0 = i < spec.alpha0.size() ? spec.alpha0[i] : cplx(0.0);
    ws.state[static_cast<std::size_t>(sys.mode_slot[i])] = a0;
    ws.state[static_cast<std::size_t>(sys.mode_slot[i] + 1)] = std::conj(a0);
  }
  for (std::size_t a = 0; a < sys.emitter_slot.size(); ++a) {
    if (a >= spec.emitters.size()) throw SamplerError("missing initial state for an emitter");
    const auto& e = spec.emitters[a];
    if (e.kind == EmitterInit::Kind::Mixed) throw SamplerError("mixed initial state in the C-variable formulation");
    const int n = static_cast<int>(e.amplitudes.size());
    cplx th = 1.0, thd = 1.0;
    if (spec.theta == PhaseSampling::Weighted) {
      auto d = sample_theta(rng);
      th = thd = d.value;
      ws.logweight += d.logweight;
    } else if (spec.theta == PhaseSampling::Proper) {
      auto d = sample_proper(rng);
      th = d.value;
      thd = d.partner;
    }
    const cplx ph = std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform());
    const std::size_t base = static_cast<std::size_t>(sys.emitter_slot[a]);
    for (int p = 0; p < n; ++p) {
      ws.state[base + static_cast<std::size_t>(p)] = th * e.amplitudes(p) * ph;
      ws.state[base + static_cast<std::size_t>(n + p)] = thd * std::conj(e.amplitudes(p)) * std::conj(ph);
    }
  }
  return ws;
}

WeightedSample init_sample(const CompiledSystem& sys, const InitialStateSpec& spec, Rng& rng) {
  return sys.formulation == Formulation::CVariable ? init_cvariables(sys, spec, rng)
                                                   : init_effective_density(sys, spec, rng);
}

}  // namespace posp
