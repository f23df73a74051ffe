#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "fcoc/synthetic.hpp"

namespace fs = std::filesystem;
using fcoc::cli::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = fcoc::cli::run(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("fcoc_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

int subprocess(const std::string& args) {
  const std::string cmd = std::string(FCOC_TOOL_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

/// Features CSV over business days with rv, r and v plus optional extras.
std::string features_csv(std::size_t n, std::uint64_t seed) {
  fcoc::synthetic::Rng rng(seed);
  const auto dates = fcoc::synthetic::business_days(fcoc::synthetic::kSyntheticStart, n);
  std::ostringstream os;
  os << "date,rv,bpv,r,v\n";
  for (std::size_t i = 0; i < n; ++i)
    os << fcoc::market::format_date(dates[i]) << ',' << 1.0 + rng.uniform() << ',' << 1.0 + rng.uniform() << ','
       << rng.normal() << ',' << rng.normal() << '\n';
  return os.str();
}

}  // namespace

TEST(CliFeatures, TwoDayPriceFile) {
  const auto dir = scratch("features");
  spit(dir / "in.csv",
       "timestamp,price\n"
       "2024-01-02 09:30,100\n2024-01-02 10:30,101\n2024-01-02 11:30,100.5\n"
       "2024-01-03 09:30,100\n2024-01-03 10:30,102\n2024-01-03 11:30,101\n");
  const auto r = run({"features", "--input", (dir / "in.csv").string(), "--out", (dir / "f.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines_of(slurp(dir / "f.csv"));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], "date,rv,bpv,r,v");
  EXPECT_EQ(rows[1].substr(0, 10), "2024-01-03");
  EXPECT_TRUE(fs::exists(dir / "f.csv.manifest.json"));
}

TEST(CliFeatures, NonPositivePriceNamesLine) {
  const auto dir = scratch("badprice");
  spit(dir / "in.csv", "timestamp,price\n2024-01-02 09:30,100\n2024-01-02 10:30,0\n2024-01-02 11:30,1\n");
  const auto r = run({"features", "--input", (dir / "in.csv").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
}

TEST(CliFeatures, Idempotent) {
  const auto dir = scratch("idem");
  ASSERT_EQ(run({"synth", "--days", "20", "--seed", "3", "--out", (dir / "g.csv").string()}).code, 0);
  const auto a = run({"features", "--input", (dir / "g.csv").string()});
  const auto b = run({"features", "--input", (dir / "g.csv").string()});
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(lines_of(a.out).size(), 20u);
}

TEST(CliHurst, SingleWindow) {
  const auto dir = scratch("hurst");
  spit(dir / "f.csv", features_csv(252, 1));
  const auto r = run({"hurst", "--features", (dir / "f.csv").string(), "--out", (dir / "h.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines_of(slurp(dir / "h.csv"));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], "date,h_overall,h_positive,h_negative");
}

TEST(CliHurst, TooFewRowsIsInputError) {
  const auto dir = scratch("hurst_short");
  spit(dir / "f.csv", features_csv(100, 1));
  EXPECT_EQ(run({"hurst", "--features", (dir / "f.csv").string()}).code, 2);
}

TEST(CliOscillator, BifurcationStaysBounded) {
  const auto r = run({"oscillator", "--type", "9", "--mode", "bifurcation", "--grid-n", "31"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines_of(r.out);
  EXPECT_EQ(rows[0], "input,value");
  EXPECT_EQ(rows.size(), 1u + 31u * 100u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double value = std::stod(rows[i].substr(rows[i].find(',') + 1));
    ASSERT_LE(std::abs(value), 3.0);
  }
}

TEST(CliOscillator, LutHeaderAndMetaAtOrigin) {
  const auto lut = run({"oscillator", "--mode", "lut", "--knots", "5"});
  ASSERT_EQ(lut.code, 0) << lut.err;
  const auto rows = lines_of(lut.out);
  EXPECT_EQ(rows[0], "knot,t1,t2,t3,t4,t5,t6,t7,t8,t9,t10,envelope");
  EXPECT_EQ(rows.size(), 6u);

  const auto meta = run({"oscillator", "--mode", "meta", "--at", "0"});
  ASSERT_EQ(meta.code, 0) << meta.err;
  const auto m = lines_of(meta.out);
  ASSERT_EQ(m.size(), 11u);
  for (std::size_t i = 1; i < m.size(); ++i) EXPECT_EQ(std::stod(m[i].substr(m[i].find(',') + 1)), 0.0) << m[i];
}

TEST(CliOscillator, UnknownTypeIsInputError) {
  EXPECT_EQ(run({"oscillator", "--type", "11"}).code, 2);
  EXPECT_EQ(run({"oscillator", "--mode", "nope"}).code, 2);
}

TEST(CliTrain, LinearModelRecoversLeadingColumn) {
  const auto dir = scratch("train_identity");
  fcoc::synthetic::Rng rng(5);
  const std::size_t n = 400;
  const auto dates = fcoc::synthetic::business_days(fcoc::synthetic::kSyntheticStart, n);
  std::vector<double> rv(n + 1);
  for (double& x : rv) x = 1.0 + rng.uniform();
  std::ostringstream os;
  os << "date,rv,lead\n";
  for (std::size_t i = 0; i < n; ++i)
    os << fcoc::market::format_date(dates[i]) << ',' << rv[i] << ',' << rv[i + 1] << '\n';
  spit(dir / "f.csv", os.str());
  const auto r = run({"train", "--features", (dir / "f.csv").string(), "--out-dir", (dir / "m").string(),
                      "--columns", "lead", "--target", "rv", "--look-back", "5", "--widths", "1", "--activation",
                      "identity", "--epochs", "300", "--learning-rate", "0.05", "--batch-size", "16"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto metrics = json::parse(slurp(dir / "m" / "metrics.json"));
  EXPECT_GT(metrics["test"]["r2"].get<double>(), 0.99);
  for (const char* f : {"model.json", "predictions.csv", "manifest.json"}) EXPECT_TRUE(fs::exists(dir / "m" / f)) << f;

  const auto e = run({"eval", "--model", (dir / "m" / "model.json").string(), "--features",
                      (dir / "f.csv").string(), "--out-dir", (dir / "e").string()});
  ASSERT_EQ(e.code, 0) << e.err;
  const auto eval_metrics = json::parse(slurp(dir / "e" / "metrics.json"));
  EXPECT_NEAR(eval_metrics["test"]["mse"].get<double>(), metrics["test"]["mse"].get<double>(), 1e-12);
}

TEST(CliTrain, SeedRepeatIsIdentical) {
  const auto dir = scratch("train_seed");
  spit(dir / "f.csv", features_csv(200, 2));
  auto once = [&](const std::string& sub) {
    const auto r = run({"train", "--features", (dir / "f.csv").string(), "--out-dir", (dir / sub).string(),
                        "--look-back", "5", "--widths", "4,1", "--epochs", "5", "--seed", "11"});
    EXPECT_EQ(r.code, 0) << r.err;
    return slurp(dir / sub / "metrics.json");
  };
  EXPECT_EQ(once("a"), once("b"));
}

TEST(CliTrain, AblationWritesFourConfigurations) {
  const auto dir = scratch("ablation");
  spit(dir / "f.csv", features_csv(260, 4));
  const auto r = run({"train", "--features", (dir / "f.csv").string(), "--out-dir", (dir / "a").string(),
                      "--look-back", "5", "--widths", "4,1", "--epochs", "2", "--window", "128", "--stride", "1",
                      "--ablation", "all"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto metrics = json::parse(slurp(dir / "a" / "metrics.json"));
  ASSERT_EQ(metrics["configurations"].size(), 4u);
  std::size_t rows = metrics["configurations"]["benchmark"]["rows"];
  for (const char* name : {"benchmark", "coc_only", "ffc_only", "full"}) {
    EXPECT_EQ(metrics["configurations"][name]["rows"].get<std::size_t>(), rows) << name;
    EXPECT_TRUE(fs::exists(dir / "a" / (std::string("model_") + name + ".json"))) << name;
  }
}

TEST(CliConfig, FileOverridesFlagsAndRejectsUnknownKeys) {
  const auto dir = scratch("config");
  spit(dir / "c.json", R"({"n": 50, "kind": "fgn"})");
  const auto r = run({"synth", "--kind", "garch", "--n", "10", "--config", (dir / "c.json").string(), "--out",
                      (dir / "s.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines_of(slurp(dir / "s.csv")).size(), 51u);
  const auto manifest = json::parse(slurp(dir / "s.csv.manifest.json"));
  EXPECT_EQ(manifest["config"]["kind"], "fgn");
  EXPECT_EQ(manifest["config_sha256"].get<std::string>().size(), 64u);

  spit(dir / "bad.json", R"({"bogus": 1})");
  EXPECT_EQ(run({"synth", "--config", (dir / "bad.json").string()}).code, 2);
}

TEST(CliSynth, DeterministicAndValidated) {
  const auto a = run({"synth", "--kind", "fgn", "--n", "300", "--hurst", "0.7", "--seed", "9"});
  const auto b = run({"synth", "--kind", "fgn", "--n", "300", "--hurst", "0.7", "--seed", "9"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(lines_of(a.out).size(), 301u);
  EXPECT_EQ(lines_of(a.out)[1].substr(0, 10), "2000-01-03");
  EXPECT_EQ(run({"synth", "--kind", "fgn", "--hurst", "1.5"}).code, 2);

  const auto asym = run({"synth", "--kind", "asym", "--n", "40"});
  ASSERT_EQ(asym.code, 0);
  EXPECT_EQ(lines_of(asym.out)[0], "date,rx,ry");
  EXPECT_EQ(lines_of(asym.out).size(), 41u);
}

TEST(CliExitCodes, Binary) {
  const auto dir = scratch("exit");
  EXPECT_EQ(subprocess("--version"), 0);
  EXPECT_EQ(subprocess("synth --kind fgn --n 10"), 0);
  EXPECT_EQ(subprocess("no-such-command"), 2);
  EXPECT_EQ(subprocess("synth --kind fgn --hurst 0"), 2);
  EXPECT_EQ(subprocess("features --input " + (dir / "missing.csv").string()), 2);

  std::ostringstream os;
  os << "date,rv,bpv,r,v\n";
  const auto dates = fcoc::synthetic::business_days(fcoc::synthetic::kSyntheticStart, 120);
  for (std::size_t i = 0; i < dates.size(); ++i)
    os << fcoc::market::format_date(dates[i]) << ',' << (i % 2 ? 1e300 : 1e299) << ",1," << 0.1 * static_cast<double>(i % 7) << ',' << 0.2 * static_cast<double>(i % 5) << "\n";
  spit(dir / "huge.csv", os.str());
  EXPECT_EQ(subprocess("train --features " + (dir / "huge.csv").string() + " --out-dir " + (dir / "m").string() +
                       " --look-back 5 --widths 4,1 --epochs 3 --learning-rate 10"),
            3);
}
