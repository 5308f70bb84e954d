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


#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <unistd.h>

#include "posp/cli.hpp"
#include "test_util.hpp"

using namespace posp;
namespace fs = std::filesystem;
using posp::testing::model_path;

namespace {

struct Out {
  int rc;
  std::string out, err;
};

Out cli(std::vector<std::string> args) {
  args.insert(args.begin(), "posp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  int rc = cli_main(static_cast<int>(argv.size()), argv.data(), o, e);
  return {rc, o.str(), e.str()};
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("posp_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> v;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) v.push_back(l);
  return v;
}

}  // namespace

TEST_CASE("validate classifies the bundled Jaynes-Cummings model") {
  Out r = cli({"validate", "--model", model_path("jaynes_cummings.posp")});
  CHECK(r.rc == kExitOk);
  CHECK(r.out.find("Exact; 6 variables; 4 noise channels") != std::string::npos);
  Out d = cli({"validate", "--model", model_path("two_level_decay.posp"), "--dump"});
  CHECK(d.rc == kExitOk);
  CHECK(d.out.find("positive semi-definite") != std::string::npos);
  CHECK(d.out.find("# drift") != std::string::npos);
}

TEST_CASE("Approximate models need --allow-truncation") {
  Out r = cli({"validate", "--model", model_path("cubic.posp")});
  CHECK(r.rc == kExitConfig);
  CHECK(r.out.find("Approximate") != std::string::npos);
  Out ok = cli({"validate", "--model", model_path("cubic.posp"), "--allow-truncation"});
  CHECK(ok.rc == kExitOk);
  CHECK(ok.err.find("warning") != std::string::npos);
}

TEST_CASE("malformed files give a line and column") {
  fs::path d = scratch("bad");
  std::ofstream(d / "bad.posp") << "mode f;\nH = adag(f) * * a(f);\n";
  Out r = cli({"validate", "--model", (d / "bad.posp").string()});
  CHECK(r.rc == kExitConfig);
  CHECK(r.err.find("bad.posp:2:15:") != std::string::npos);
  Out missing = cli({"validate", "--model", (d / "missing.posp").string()});
  CHECK(missing.rc == kExitConfig);
  Out flags = cli({"run", "--model", model_path("kerr.posp"), "--n", "1"});
  CHECK(flags.rc == kExitConfig);
  Out grid = cli({"run", "--model", model_path("kerr.posp"), "--dt", "3e-3", "--out", d.string()});
  CHECK(grid.rc == kExitConfig);
}

TEST_CASE("run writes one CSV per observable with the documented schema") {
  fs::path d = scratch("run");
  Out r = cli({"run", "--model", model_path("jaynes_cummings.posp"), "--t1", "1", "--dt", "1e-3", "--stride", "50",
               "--n", "200", "--seed", "3", "--out", d.string()});
  REQUIRE(r.rc == kExitOk);
  auto l = lines(slurp(d / "P_e.csv"));
  REQUIRE(l.size() == 1 + 1000 / 50 + 1);
  CHECK(l[0] == "t,re,im,stderr,n_eff,diverged");
  CHECK(fs::exists(d / "n.csv"));
  auto rep = nlohmann::json::parse(slurp(d / "run_report.json"));
  CHECK(rep["seed"] == 3);
  CHECK(rep["config"]["n"] == 200);
  CHECK(rep["truncation"]["approximate"] == false);
  CHECK(rep["status"] == "ok");
}

TEST_CASE("same seed gives byte-identical output") {
  fs::path a = scratch("seed_a"), b = scratch("seed_b");
  for (const auto& d : {a, b})
    REQUIRE(cli({"run", "--model", model_path("kerr.posp"), "--t1", "0.1", "--dt", "1e-3", "--stride", "10", "--n",
                 "300", "--seed", "9", "--out", d.string()})
                .rc == kExitOk);
  for (const char* f : {"a.csv", "a2.csv", "n.csv", "reconstruction.json"}) CHECK(slurp(a / f) == slurp(b / f));
  CHECK(!slurp(a / "a.csv").empty());
}

TEST_CASE("json output format") {
  fs::path d = scratch("json");
  Out r = cli({"run", "--model", model_path("free_mode.posp"), "--t1", "0.1", "--dt", "1e-3", "--stride", "10", "--n",
               "4", "--format", "json", "--out", d.string()});
  REQUIRE(r.rc == kExitOk);
  auto j = nlohmann::json::parse(slurp(d / "results.json"));
  CHECK(j["series"]["n"].size() == 11);
  CHECK_FALSE(fs::exists(d / "n.csv"));
}

TEST_CASE("all-diverged runs exit 2 and keep partial output") {
  fs::path d = scratch("blowup");
  std::ofstream(d / "blow.posp") << "mode f;\nH = 1i * adag(f) * a(f)^2;\ninit mode f coherent 1;\n"
                                    "observe \"a\" = a(f);\n";
  Out r = cli({"run", "--model", (d / "blow.posp").string(), "--t1", "2", "--dt", "1e-3", "--stride", "100", "--n",
               "4", "--out", d.string()});
  CHECK(r.rc == kExitRuntime);
  CHECK(fs::exists(d / "a.csv"));
  auto rep = nlohmann::json::parse(slurp(d / "run_report.json"));
  CHECK(rep["status"] == "all_diverged");
}

TEST_CASE("compare: deterministic decay matches the oracle tightly") {
  fs::path d = scratch("cmp");
  Out r = cli({"compare", "--model", model_path("two_level_decay.posp"), "--t1", "2", "--dt", "1e-4", "--stride",
               "1000", "--n", "8", "--out", d.string()});
  CHECK(r.rc == kExitOk);
  CHECK(fs::exists(d / "P_e.oracle.csv"));
  auto l = lines(slurp(d / "compare.csv"));
  REQUIRE(l.size() > 1);
  for (std::size_t k = 1; k < l.size(); ++k) {
    const std::string z = l[k].substr(0, l[k].rfind(','));
    CHECK(std::stod(z.substr(z.rfind(',') + 1)) <= 0.1);
  }
}

TEST_CASE("compare: oracle guard") {
  fs::path d = scratch("guard");
  Out r = cli({"compare", "--model", model_path("jaynes_cummings.posp"), "--cutoff", "5000", "--out", d.string()});
  CHECK(r.rc == kExitConfig);
  CHECK(r.err.find("cutoff") != std::string::npos);
}

TEST_CASE("cvar and rho runs of Jaynes-Cummings agree") {
  fs::path a = scratch("rho"), b = scratch("cvar");
  for (auto [d, f] : {std::pair{a, "rho"}, std::pair{b, "cvar"}})
    REQUIRE(cli({"run", "--model", model_path("jaynes_cummings.posp"), "--t1", "1", "--dt", "1e-3", "--stride", "100",
                 "--n", "4000", "--formulation", f, "--out", d.string()})
                .rc == kExitOk);
  auto la = lines(slurp(a / "P_e.csv")), lb = lines(slurp(b / "P_e.csv"));
  REQUIRE(la.size() == lb.size());
  for (std::size_t k = 1; k < la.size(); ++k) {
    double ta, ra, ia, sa, tb, rb, ib, sb;
    std::sscanf(la[k].c_str(), "%lf,%lf,%lf,%lf", &ta, &ra, &ia, &sa);
    std::sscanf(lb[k].c_str(), "%lf,%lf,%lf,%lf", &tb, &rb, &ib, &sb);
    CHECK(std::hypot(ra - rb, ia - ib) <= 4.0 * std::hypot(sa, sb));
  }
}

TEST_CASE("help and unknown subcommands") {
  CHECK(cli({"--help"}).rc == kExitOk);
  CHECK(cli({"frobnicate"}).rc == kExitConfig);
  CHECK(cli({}).rc == kExitConfig);
}
