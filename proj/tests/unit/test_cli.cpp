#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "thermo/cli/sweep.hpp"

using namespace thermo;
using namespace thermo::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("thermo_test_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return path / name;
  }
};

const char* kFreeSpin = R"({
  // comment lines are allowed
  "model": "free_spin",
  "fields": [0.5, 2.0],
  "temperatures": {"min": 0.01, "max": 20.0, "points": 120},
  "output": "out"
})";

int run_cli(const std::string& args) {
  const std::string cmd = std::string(THERMO_BIN) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) { return read_file(p.string()); }

} // namespace

TEST(Config, HashStableUnderKeyReorderingAndFormatting) {
  const auto a = parse_config(kFreeSpin);
  const auto b = parse_config(R"({"temperatures":{"points":120,"max":20.0,"min":0.01},"output":"elsewhere",
                                 "fields":[0.5,2.0],"model":"free_spin"})");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 64u);
  const auto c = parse_config(R"({"model":"free_spin","fields":[0.5,2.0],
                                 "temperatures":{"min":0.01,"max":20.0,"points":121}})");
  EXPECT_NE(a.hash(), c.hash());
  // Point hashes ignore the rest of the sweep, so cached points are shared.
  const auto d = parse_config(R"({"model":"free_spin","fields":[0.5],
                                 "temperatures":{"min":0.01,"max":20.0,"points":120}})");
  EXPECT_EQ(point_hash(a, {0.0, 0.5}), point_hash(d, {0.0, 0.5}));
  EXPECT_NE(point_hash(a, {0.0, 0.5}), point_hash(a, {0.0, 2.0}));
}

TEST(Config, DiagnosticsNameLineOrField) {
  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message("{\n\"model\": \"nbl\",\n\"fields\": [1, 2,,]\n}").find("line 3"), std::string::npos);
  EXPECT_NE(message(R"({"model":"nbl","fields":[1],"temperatures":{},"colour":1})").find("'colour'"),
            std::string::npos);
  EXPECT_NE(message(R"({"model":"nbl","temperatures":{}})").find("'fields'"), std::string::npos);
  EXPECT_NE(message(R"({"model":"nbl","fields":[1]})").find("'temperatures'"), std::string::npos);
  EXPECT_NE(message(R"({"model":"kondo","fields":[1]})").find("'model'"), std::string::npos);
  EXPECT_NE(message(R"({"model":"nrg","fields":[1],"solver":{"N_s":20}})").find("'solver.N_s'"),
            std::string::npos);
  EXPECT_NE(message(R"({"model":"nrg","fields":[1],"dos":{"family":"tbg","r":-2}})").find("'dos'"),
            std::string::npos);
  EXPECT_NE(message(R"({"model":"nbl","fields":[],"temperatures":{}})").find("non-empty"), std::string::npos);
  EXPECT_NO_THROW(parse_config(R"({"model":"nrg","fields":[0]})"));
}

TEST(Config, TemperatureGridIsDecreasingAndHitsEndpoints) {
  const TemperatureGrid g{1e-3, 2.0, 17};
  const auto v = g.values();
  ASSERT_EQ(v.size(), 17u);
  EXPECT_EQ(v.front(), 2.0);
  EXPECT_EQ(v.back(), 1e-3);
  for (std::size_t i = 1; i < v.size(); ++i) EXPECT_LT(v[i], v[i - 1]);
}

TEST(Csv, RoundTripIsExact) {
  ThermoCurve c;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 50; ++i) c.rows.push_back({std::exp(u(rng)), u(rng), u(rng), u(rng), u(rng) * 1e-300, NAN, u(rng)});
  c.rows[3].dm_dT = INFINITY;
  const auto text = curve_to_csv(c);
  EXPECT_EQ(text.rfind("# schema=1\n", 0), 0u);
  const auto back = curve_from_csv(text);
  ASSERT_EQ(back.rows.size(), c.rows.size());
  EXPECT_EQ(curve_to_csv(back), text);
  for (std::size_t i = 0; i < c.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].T, c.rows[i].T);
    EXPECT_EQ(back.rows[i].m_imp, c.rows[i].m_imp);
    EXPECT_TRUE(std::isnan(back.rows[i].qsnr));
  }
  EXPECT_THROW(curve_from_csv("# schema=2\n"), ValidationError);
  EXPECT_THROW(curve_from_csv("# schema=1\nT,m\n"), ValidationError);
  EXPECT_THROW(curve_from_csv(std::string("# schema=1\n") + kCurveHeader + "\n1,2,3\n"), ValidationError);
}

TEST(Sweep, DeterministicAndCacheAgreesWithFreshRun) {
  TempDir tmp;
  auto cfg = parse_config(kFreeSpin, tmp.path);
  cfg.output_dir = tmp.path / "fresh";
  const auto fresh = run_sweep(cfg);
  cfg.output_dir = tmp.path / "again";
  const auto again = run_sweep(cfg);
  ASSERT_EQ(fresh.records.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    ASSERT_TRUE(fresh.records[i].ok);
    EXPECT_EQ(slurp(tmp.path / "fresh" / fresh.records[i].csv), slurp(tmp.path / "again" / again.records[i].csv));
  }

  SweepOptions o;
  o.cache = RunCache(tmp.path / "cache");
  cfg.output_dir = tmp.path / "c1";
  const auto first = run_sweep(cfg, o);
  cfg.output_dir = tmp.path / "c2";
  const auto second = run_sweep(cfg, o);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_FALSE(first.records[i].cached);
    EXPECT_TRUE(second.records[i].cached);
    EXPECT_EQ(slurp(tmp.path / "c2" / second.records[i].csv), slurp(tmp.path / "fresh" / fresh.records[i].csv));
  }
  cfg.cache = CachePolicy::Refresh;
  cfg.output_dir = tmp.path / "c3";
  EXPECT_FALSE(run_sweep(cfg, o).records[0].cached);
}

TEST(Sweep, WorkerCountDoesNotChangeOutput) {
  TempDir tmp;
  auto cfg = parse_config(R"({"model":"ising","couplings":[0.1,0.4],"fields":[0.05,0.5],
                              "temperatures":{"min":0.01,"max":2,"points":30}})");
  cfg.output_dir = tmp.path / "w1";
  SweepOptions o;
  o.workers = 1;
  const auto a = run_sweep(cfg, o);
  cfg.output_dir = tmp.path / "w4";
  o.workers = 4;
  const auto b = run_sweep(cfg, o);
  ASSERT_EQ(a.records.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(a.records[i].id, b.records[i].id);
    EXPECT_EQ(slurp(tmp.path / "w1" / a.records[i].csv), slurp(tmp.path / "w4" / b.records[i].csv));
  }
}

TEST(Sweep, PointFailuresAreRecordedNotFatal) {
  TempDir tmp;
  // The chain is too short to reach the requested temperatures.
  auto cfg = parse_config(R"({"model":"nrg","couplings":[0.3],"fields":[0.0, 0.5],
                              "temperatures":{"min":0.01,"max":1,"points":10},
                              "solver":{"n_sites":6,"N_s":100}})");
  cfg.output_dir = tmp.path;
  const auto m = run_sweep(cfg);
  ASSERT_EQ(m.records.size(), 2u);
  for (const auto& r : m.records) {
    EXPECT_FALSE(r.ok);
    EXPECT_FALSE(r.error.empty());
  }
  const auto loaded = Manifest::load(tmp.path / "manifest.json");
  EXPECT_EQ(loaded.records.size(), m.records.size());
  EXPECT_EQ(loaded.config_hash, cfg.hash());
}

TEST(Report, FreeSpinPeakCheckAndMissingArtifacts) {
  TempDir tmp;
  auto cfg = parse_config(R"({"model":"free_spin","fields":[0.1, 1.0],
                              "temperatures":{"min":0.001,"max":100,"points":400}})");
  cfg.output_dir = tmp.path;
  const auto m = run_sweep(cfg);
  const auto rep = cmd_report(Manifest::load(tmp.path / "manifest.json"));
  EXPECT_FALSE(rep.partial);
  EXPECT_TRUE(rep.body["checks"]["free_spin_peak"].get<bool>());
  fs::remove(tmp.path / m.records[0].csv);
  EXPECT_TRUE(cmd_report(Manifest::load(tmp.path / "manifest.json")).partial);
}

TEST(Collapse, RefusesMixedFamiliesUnlessAllowed) {
  Manifest a, b;
  a.dos = {{"family", "flat"}, {"D", 1.0}};
  b.dos = {{"family", "tbg"}, {"D", 1.0}, {"r", -0.25}};
  EXPECT_THROW(cmd_collapse({a, b}, {}), ConfigError);
}

TEST(Cache, AtomicWriteLeavesNoTemporaries) {
  TempDir tmp;
  RunCache c(tmp.path);
  c.put("abc", "hello");
  EXPECT_EQ(*c.get("abc"), "hello");
  EXPECT_FALSE(c.get("missing").has_value());
  int files = 0;
  for (auto& e : fs::directory_iterator(tmp.path)) {
    (void)e;
    ++files;
  }
  EXPECT_EQ(files, 1);
}

TEST(Binary, ExitCodes) {
  TempDir tmp;
  const auto good = tmp.write("good.json", R"({"model":"free_spin","fields":[1.0],
      "temperatures":{"min":0.01,"max":10,"points":50},"output":"out"})");
  const auto bad = tmp.write("bad.json", R"({"model":"free_spin","fields":[1.0],"bogus":1})");
  const auto partial = tmp.write("partial.json", R"({"model":"nrg","couplings":[0.3],"fields":[0.5],
      "temperatures":{"min":0.01,"max":1,"points":10},"solver":{"n_sites":6,"N_s":100},"output":"pout"})");
  EXPECT_EQ(run_cli("sweep " + good.string()), 0);
  EXPECT_TRUE(fs::exists(tmp.path / "out" / "manifest.json"));
  EXPECT_EQ(run_cli("report " + (tmp.path / "out" / "manifest.json").string()), 0);
  EXPECT_EQ(run_cli("collapse " + (tmp.path / "out" / "manifest.json").string() + " --tk=bogus"), 2);
  EXPECT_EQ(run_cli("sweep " + bad.string()), 2);
  EXPECT_EQ(run_cli("sweep " + (tmp.path / "nope.json").string()), 2);
  EXPECT_EQ(run_cli("sweep"), 2);
  EXPECT_EQ(run_cli("dos graphene:D=1 --emit-grid --points 200 --out " + (tmp.path / "g.csv").string()), 0);
  EXPECT_EQ(slurp(tmp.path / "g.csv").rfind("# schema=1\nw,rho,re_g,im_g\n", 0), 0u);
  EXPECT_EQ(run_cli("dos nosuchfamily"), 2);
  EXPECT_EQ(run_cli("sweep " + partial.string()), 3);
  EXPECT_FALSE(Manifest::load(tmp.path / "pout" / "manifest.json").records[0].ok);
}
