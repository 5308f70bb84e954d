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

#include "posp/gauge.hpp"

#include "posp/estimator.hpp"

namespace posp {

CompiledSystem apply_drift_gauge(const CompiledSystem& sys, const GaugeSpec& g) {
  if (sys.gauged) throw CompileError("system already carries a drift gauge");
  CompiledSystem out = sys;
  for (const auto& [s, dA] : g.delta_drift) {
    auto it = sys.slot.find(s);
    if (it == sys.slot.end()) throw CompileError("gauge targets a variable that is not part of the state");
    for (const auto& v : symbols_of(dA))
      if (!sys.slot.count(v)) throw CompileError("gauge polynomial uses a symbol outside the state");
    const std::size_t k = static_cast<std::size_t>(it->second);
    if (dA.is_zero()) continue;
    out.drift_sym.drift[k] += dA;
    out.drift[k] = CompiledPoly(out.drift_sym.drift[k], out.slot);
    out.gauge_border_sym.emplace_back(it->second, -dA);
    out.border_slot.push_back(it->second);
    out.border.emplace_back(-dA, out.slot);
  }
  for (const auto& v : symbols_of(g.a0))
    if (!sys.slot.count(v)) throw CompileError("gauge A0 uses a symbol outside the state");
  out.gauged = true;
  out.gauge_a0_sym = g.a0;
  out.gauge_a0 = CompiledPoly(g.a0, out.slot);
  out.corner = CompiledPoly(g.a0 * -2.0, out.slot);
  out.gauge_source = g.source;
  return out;
}

std::vector<std::vector<MomentEstimate>> weighted_expectation(const EnsembleResult& r) {
  std::vector<std::vector<MomentEstimate>> out;
  for (std::size_t c = 0; c < r.n_channels; ++c) out.push_back(estimate(r, c));
  return out;
}

}  // namespace posp
