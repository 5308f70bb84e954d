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

#include "posp/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "posp/gauge.hpp"
#include "posp/oracle.hpp"
#include "posp/parser.hpp"

namespace posp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string sanitize(const std::string& s) {
  std::string r;
  for (char c : s) r += (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') ? c : '_';
  return r.empty() ? "obs" : r;
}

struct Loaded {
  ModelSpec model;
  CompiledSystem sys;
};

// Returns an exit code != 0 on failure after printing the diagnostic.
int load(const RunConfig& cfg, Loaded& out, std::ostream& err, bool compile_it = true) {
  std::string text;
  try {
    text = read_file(cfg.model_path);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    out.model = parse_model(text);
  } catch (const ParseError& e) {
    err << cfg.model_path << ":" << e.line() << ":" << e.column() << ": error: " << e.message() << "\n";
    return kExitConfig;
  }
  if (cfg.formulation) out.model.formulation = *cfg.formulation;
  if (!cfg.gauge_path.empty()) {
    try {
      out.model.gauge = parse_gauge(read_file(cfg.gauge_path), out.model);
    } catch (const ParseError& e) {
      err << cfg.gauge_path << ":" << e.line() << ":" << e.column() << ": error: " << e.message() << "\n";
      return kExitConfig;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitConfig;
    }
  }
  try {
    validate_model(out.model);
  } catch (const ModelError& e) {
    err << cfg.model_path << ": error: " << e.what() << "\n";
    return kExitConfig;
  }
  if (!compile_it) return kExitOk;
  try {
    out.sys = compile(out.model, cfg.allow_truncation);
  } catch (const std::exception& e) {
    err << cfg.model_path << ": error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}

std::vector<ObservableSpec> observables_or_default(const ModelSpec& m) {
  if (!m.observables.empty()) return m.observables;
  std::vector<ObservableSpec> obs;
  for (std::size_t i = 0; i < m.modes.size(); ++i) {
    const int mi = static_cast<int>(i);
    obs.push_back({"a_" + m.modes[i], Polynomial::symbol(PhaseSymbol::alpha(mi))});
    obs.push_back({"n_" + m.modes[i], Polynomial::symbol(PhaseSymbol::alpha_dag(mi)) *
                                          Polynomial::symbol(PhaseSymbol::alpha(mi))});
  }
  for (std::size_t a = 0; a < m.emitters.size(); ++a) {
    const auto& e = m.emitters[a];
    for (int p = 0; p < e.levels; ++p) {
      std::string lab = p < static_cast<int>(e.labels.size()) ? e.labels[static_cast<std::size_t>(p)] : std::to_string(p);
      obs.push_back({"P_" + e.name + "_" + lab, Polynomial::symbol(PhaseSymbol::rho(static_cast<int>(a), p, p))});
    }
  }
  return obs;
}

TimeGrid grid_of(const RunConfig& cfg) { return TimeGrid{cfg.t0, cfg.t1, cfg.dt, cfg.stride}; }

json config_json(const RunConfig& cfg, const ModelSpec& m) {
  json j;
  j["model"] = cfg.model_path;
  j["t0"] = cfg.t0;
  j["t1"] = cfg.t1;
  j["dt"] = cfg.dt;
  j["stride"] = cfg.stride;
  j["n"] = cfg.n;
  j["seed"] = cfg.seed;
  j["formulation"] = m.formulation == Formulation::CVariable ? "cvar" : "rho";
  j["allow_truncation"] = cfg.allow_truncation;
  j["gauge_file"] = cfg.gauge_path;
  j["workers"] = cfg.workers;
  j["format"] = cfg.format;
  return j;
}

std::string sampling_name(PhaseSampling s) {
  return s == PhaseSampling::Off ? "off" : (s == PhaseSampling::Proper ? "proper" : "weighted");
}

}  // namespace

std::string series_csv(const MomentSeries& s) {
  std::ostringstream os;
  os << "t,re,im,stderr,n_eff,diverged\n";
  for (const auto& m : s)
    os << num(m.t) << "," << num(m.value.real()) << "," << num(m.value.imag()) << "," << num(m.stderr_) << ","
       << num(m.n_eff) << "," << m.diverged << "\n";
  return os.str();
}

int generic_noise_rank(const CompiledSystem& sys, int samples, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int best = 0;
  for (int k = 0; k < samples; ++k) {
    std::vector<cplx> x(sys.dim());
    for (auto& v : x) v = cplx(u(eng), u(eng));
    try {
      best = std::max(best, factor_diffusion(sys, x).rank);
    } catch (const FactorizationError&) {
    }
  }
  return best;
}

int cmd_validate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  Loaded L;
  RunConfig c2 = cfg;
  c2.allow_truncation = true;  // classify first, apply the policy below
  if (int rc = load(c2, L, err); rc != kExitOk) return rc;
  const ModelSpec& m = L.model;
  out << "parsed " << m.modes.size() << " mode(s), " << m.emitters.size() << " emitter(s)\n";
  for (std::size_t a = 0; a < m.lindblad.size(); ++a) {
    if (m.lindblad[a].is_zero()) continue;
    double lo = 0.0;
    gamma_is_psd(m.lindblad[a], &lo);
    out << "gamma " << m.emitters[a].name << ": positive semi-definite (min eigenvalue " << num(lo) << ")\n";
  }
  const auto& rep = L.sys.exactness;
  const int rank = generic_noise_rank(L.sys);
  out << (rep.exact ? "Exact" : "Approximate") << "; " << L.sys.dim() << " variables; " << rank
      << " noise channels\n";
  if (!rep.exact) {
    for (const auto& mono : rep.offending) {
      Polynomial p;
      p.add_term(mono, 1.0);
      out << "  offending term: " << print_polynomial(p, m) << "\n";
    }
    if (!cfg.allow_truncation) {
      err << "warning: model is Approximate; rerun with --allow-truncation to accept the second-order truncation\n";
      return kExitConfig;
    }
    err << "warning: model is Approximate; terms beyond second order are truncated\n";
  }
  if (cfg.dump) out << dump_system(L.sys, m);
  return kExitOk;
}

int cmd_run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  Loaded L;
  if (int rc = load(cfg, L, err); rc != kExitOk) return rc;
  const ModelSpec& m = L.model;
  TimeGrid grid = grid_of(cfg);
  try {
    grid.steps();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  if (cfg.n < 2) {
    err << "error: ensemble size must be at least 2\n";
    return kExitConfig;
  }
  if (cfg.format != "csv" && cfg.format != "json") {
    err << "error: format must be csv or json\n";
    return kExitConfig;
  }
  auto obs = observables_or_default(m);
  ChannelSet ch;
  try {
    ch = make_channels(L.sys, obs);
    if (m.reconstruct) add_lambda_channels(ch, L.sys, m.reconstruct->mode, m.reconstruct->cutoff);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  if (cfg.dump) out << dump_system(L.sys, m);

  int status = kExitOk;
  std::string failure;
  EnsembleResult res;
  try {
    res = run_ensemble(L.sys, m.initial, grid, cfg.n, cfg.seed, ch, EnsembleOptions{cfg.workers, 256});
  } catch (const AllDivergedError& e) {
    res = *e.partial;
    status = kExitRuntime;
    failure = e.what();
    err << "error: " << e.what() << "\n";
  }

  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) {
    err << "error: cannot create " << cfg.out_dir << ": " << ec.message() << "\n";
    return kExitConfig;
  }
  json report;
  report["program"] = "posp";
  report["command"] = "run";
  report["config"] = config_json(cfg, m);
  report["model_text"] = print_model(m);
  report["seed"] = cfg.seed;
  report["n"] = cfg.n;
  report["formulation"] = m.formulation == Formulation::CVariable ? "cvar" : "rho";
  report["sampling"] = {{"eta", sampling_name(m.initial.eta)}, {"theta", sampling_name(m.initial.theta)}};
  report["truncation"] = {{"approximate", L.sys.truncated}, {"allowed", cfg.allow_truncation}};
  json gj;
  gj["active"] = L.sys.gauged;
  gj["identity"] = !m.gauge || m.gauge->is_identity();
  gj["source"] = m.gauge ? m.gauge->source : std::string();
  gj["mean_abs_omega"] = res.mean_abs_omega;
  gj["max_abs_log_omega"] = res.max_abs_log_omega;
  report["gauge"] = gj;
  report["divergence"] = {{"policy", "freeze at |x| > 1e9 or non-finite; excluded from later averages"},
                          {"final_count", res.diverged.empty() ? 0 : res.diverged.back()},
                          {"factorization_failures", res.factorization_failures},
                          {"diagnostics", res.diagnostics}};
  json files = json::array();
  json series = json::object();
  for (std::size_t c = 0; c < ch.n_poly(); ++c) {
    MomentSeries s = estimate(res, c);
    const std::string& label = res.labels[c];
    if (cfg.format == "csv") {
      std::string fn = sanitize(label) + ".csv";
      std::ofstream(fs::path(cfg.out_dir) / fn) << series_csv(s);
      files.push_back(fn);
    }
    json rows = json::array();
    for (const auto& e : s)
      rows.push_back({e.t, e.value.real(), e.value.imag(), e.stderr_, e.n_eff, e.diverged});
    series[label] = rows;
    out << label << ": " << s.size() << " rows";
    if (!s.empty()) out << ", final " << num(s.back().value.real()) << (s.back().value.imag() < 0 ? "" : "+")
                        << num(s.back().value.imag()) << "i +- " << num(s.back().stderr_);
    out << "\n";
  }
  if (cfg.format == "json") {
    json rj;
    rj["columns"] = {"t", "re", "im", "stderr", "n_eff", "diverged"};
    rj["series"] = series;
    std::ofstream(fs::path(cfg.out_dir) / "results.json") << rj.dump(1) << "\n";
    files.push_back("results.json");
  }
  if (m.reconstruct && status == kExitOk) {
    auto rec = reconstruct_single_mode(res, m.reconstruct->cutoff);
    json rj = json::array();
    for (const auto& r : rec) {
      json e;
      e["t"] = r.t;
      e["raw_trace"] = {r.raw_trace.real(), r.raw_trace.imag()};
      e["cutoff_ok"] = r.cutoff_ok;
      json re = json::array(), im = json::array(), se = json::array();
      for (int i = 0; i < r.rho.rows(); ++i) {
        json a = json::array(), b = json::array(), s = json::array();
        for (int k = 0; k < r.rho.cols(); ++k) {
          a.push_back(r.rho(i, k).real());
          b.push_back(r.rho(i, k).imag());
          s.push_back(r.stderr_(i, k));
        }
        re.push_back(a);
        im.push_back(b);
        se.push_back(s);
      }
      e["re"] = re;
      e["im"] = im;
      e["stderr"] = se;
      rj.push_back(e);
      if (!r.cutoff_ok) err << "warning: reconstruction mass below 1-1e-3 at t=" << num(r.t) << "; raise the cutoff\n";
    }
    std::ofstream(fs::path(cfg.out_dir) / "reconstruction.json") << rj.dump(1) << "\n";
    files.push_back("reconstruction.json");
  }
  report["outputs"] = files;
  report["status"] = status == kExitOk ? "ok" : "all_diverged";
  if (!failure.empty()) report["failure"] = failure;
  std::ofstream(fs::path(cfg.out_dir) / "run_report.json") << report.dump(1) << "\n";
  return status;
}

int cmd_compare(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  Loaded L;
  if (int rc = load(cfg, L, err); rc != kExitOk) return rc;
  const ModelSpec& m = L.model;
  TimeGrid grid = grid_of(cfg);
  try {
    grid.steps();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  if (cfg.n < 2) {
    err << "error: ensemble size must be at least 2\n";
    return kExitConfig;
  }
  HilbertConfig hc = default_hilbert(m, cfg.cutoff);
  OperatorSet ops;
  try {
    ops = build_operators(m, hc);
  } catch (const OracleError& e) {
    err << "error: " << e.what() << " (try --cutoff with a smaller value)\n";
    return kExitConfig;
  }
  MasterResult mr;
  try {
    mr = evolve_master(initial_density(m, hc), ops, cfg.t0, cfg.t1, cfg.dt, cfg.stride);
  } catch (const OracleError& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  auto obs = observables_or_default(m);
  ChannelSet ch = make_channels(L.sys, obs);
  EnsembleResult res;
  int status = kExitOk;
  try {
    res = run_ensemble(L.sys, m.initial, grid, cfg.n, cfg.seed, ch, EnsembleOptions{cfg.workers, 256});
  } catch (const AllDivergedError& e) {
    res = *e.partial;
    status = kExitRuntime;
    err << "error: " << e.what() << "\n";
  }
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) {
    err << "error: cannot create " << cfg.out_dir << ": " << ec.message() << "\n";
    return kExitConfig;
  }
  std::ostringstream table;
  table << "observable,t,engine_re,engine_im,stderr,oracle_re,oracle_im,z,diverged\n";
  bool pass = true;
  out << "oracle: dimension " << hc.dim() << ", max trace drift " << num(mr.max_trace_drift) << "\n";
  for (std::size_t c = 0; c < obs.size(); ++c) {
    MomentSeries s = estimate(res, c);
    SpMat op = ops.op_for(obs[c].expr);
    MomentSeries os;
    double zmax = 0.0;
    for (std::size_t t = 0; t < s.size(); ++t) {
      const cplx ov = expectation(op, mr.states[t]);
      MomentEstimate oe;
      oe.t = mr.times[t];
      oe.value = ov;
      os.push_back(oe);
      const double d = std::abs(s[t].value - ov);
      double z = d / std::sqrt(s[t].stderr_ * s[t].stderr_ + cfg.tolerance * cfg.tolerance);
      if (!std::isfinite(d)) z = std::numeric_limits<double>::infinity();
      if (!std::isfinite(s[t].stderr_)) z = std::isfinite(d) ? 0.0 : z;
      zmax = std::max(zmax, z);
      table << obs[c].label << "," << num(s[t].t) << "," << num(s[t].value.real()) << "," << num(s[t].value.imag())
            << "," << num(s[t].stderr_) << "," << num(ov.real()) << "," << num(ov.imag()) << "," << num(z) << ","
            << s[t].diverged << "\n";
    }
    const std::string base = sanitize(obs[c].label);
    std::ofstream(fs::path(cfg.out_dir) / (base + ".csv")) << series_csv(s);
    std::ofstream(fs::path(cfg.out_dir) / (base + ".oracle.csv")) << series_csv(os);
    const bool ok = zmax <= cfg.z_threshold;
    pass = pass && ok;
    out << obs[c].label << ": max z " << num(zmax) << (ok ? " PASS" : " FAIL") << "\n";
  }
  std::ofstream(fs::path(cfg.out_dir) / "compare.csv") << table.str();
  out << (pass ? "compare: PASS" : "compare: FAIL") << " (threshold " << cfg.z_threshold << ")\n";
  if (status != kExitOk) return status;
  return pass ? kExitOk : kExitRuntime;
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"posp: positive-P stochastic simulator"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string formulation;

  auto add_common = [&](CLI::App* sc, bool run_flags) {
    sc->add_option("--model", cfg.model_path, "model file")->required()->check(CLI::ExistingFile);
    sc->add_option("--formulation", formulation, "rho or cvar")->check(CLI::IsMember({"rho", "cvar"}));
    sc->add_flag("--allow-truncation", cfg.allow_truncation, "accept Approximate models");
    sc->add_option("--gauge", cfg.gauge_path, "gauge clause file")->check(CLI::ExistingFile);
    sc->add_flag("--dump", cfg.dump, "print drift and diffusion polynomials");
    if (!run_flags) return;
    sc->add_option("--t0", cfg.t0, "start time");
    sc->add_option("--t1", cfg.t1, "end time");
    sc->add_option("--dt", cfg.dt, "time step");
    sc->add_option("--stride", cfg.stride, "output stride in steps");
    sc->add_option("--n", cfg.n, "number of trajectories");
    sc->add_option("--seed", cfg.seed, "random seed");
    sc->add_option("--workers", cfg.workers, "worker threads (0 = all cores)");
    sc->add_option("--out", cfg.out_dir, "output directory");
    sc->add_option("--format", cfg.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  };
  auto* v = app.add_subcommand("validate", "parse and classify a model");
  add_common(v, false);
  auto* r = app.add_subcommand("run", "run a trajectory ensemble");
  add_common(r, true);
  auto* c = app.add_subcommand("compare", "run the ensemble and the master-equation oracle");
  add_common(c, true);
  c->add_option("--cutoff", cfg.cutoff, "Fock cutoff for every mode (default: from the initial state)");
  c->add_option("--z", cfg.z_threshold, "pass threshold on |engine - oracle| / stderr");
  c->add_option("--tolerance", cfg.tolerance, "absolute allowance added in quadrature to stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  if (formulation == "rho") cfg.formulation = Formulation::EffectiveDensity;
  if (formulation == "cvar") cfg.formulation = Formulation::CVariable;
  try {
    if (v->parsed()) return cmd_validate(cfg, out, err);
    if (r->parsed()) return cmd_run(cfg, out, err);
    if (c->parsed()) return cmd_compare(cfg, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace posp
