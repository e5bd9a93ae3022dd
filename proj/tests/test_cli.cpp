#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "bregdiag/csv.hpp"
#include "bregdiag/sim.hpp"

using namespace bregdiag;
namespace fs = std::filesystem;

namespace {

const std::string kTool = BREGDIAG_TOOL;

struct RunResult {
  int exit_code = -1;
  std::string output;
};

fs::path work_dir() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / "bregdiag_cli_test";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

RunResult run_tool(const std::string& args) {
  const fs::path log = work_dir() / "last_output.txt";
  const std::string cmd = kTool + " " + args + " > " + log.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  RunResult res;
  res.exit_code = raw < 0 ? raw : WEXITSTATUS(raw);
  std::ifstream in(log);
  std::ostringstream buf;
  buf << in.rdbuf();
  res.output = buf.str();
  return res;
}

void write_logistic_csv(const fs::path& path, const Vector& beta, int n, std::uint64_t seed,
                        int flip_obs = 0) {
  Rng rng(seed);
  SimData data = generate_logistic(beta, n, rng);
  if (flip_obs > 0)
    data.response = contaminate(data.response, {PerturbationScheme::Kind::label_flip, {flip_obs}});
  Matrix out(n, 3);
  out.col(0) = data.response;
  out.col(1) = data.design.col(1);
  out.col(2) = data.design.col(2);
  write_csv(path.string(), {"y", "x1", "x2"}, out);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("fit recovers the generating coefficients on simulated data") {
  const fs::path dir = work_dir();
  write_logistic_csv(dir / "model1.csv", (Vector(3) << 1.3, -0.7, 0.3).finished(), 300, 2025);
  const auto res = run_tool("fit --data " + (dir / "model1.csv").string() +
                            " --model logistic --prior 3 --seed 7 --out " +
                            (dir / "fit_model1").string());
  CHECK(res.exit_code == 0);

  const RawCsv summary = read_csv_raw((dir / "fit_model1" / "summary.csv").string());
  REQUIRE(summary.rows.size() == 3);
  const Vector truth = (Vector(3) << 1.3, -0.7, 0.3).finished();
  for (size_t j = 0; j < 3; ++j) {
    CHECK(summary.rows[j][0] == "beta" + std::to_string(j));
    const double mean = std::stod(summary.rows[j][1]);
    const double rhat = std::stod(summary.rows[j][3]);
    const double ess = std::stod(summary.rows[j][4]);
    CHECK(std::abs(mean - truth[static_cast<Index>(j)]) < 0.3);
    CHECK(rhat < 1.05);
    CHECK(ess > 100.0);
  }
  CHECK(fs::exists(dir / "fit_model1" / "manifest.json"));
}

TEST_CASE("repeated --seed gives byte-identical draws files") {
  const fs::path dir = work_dir();
  write_logistic_csv(dir / "seed_data.csv", (Vector(3) << 0.5, -0.3, 0.2).finished(), 60, 11);
  const std::string base = "fit --data " + (dir / "seed_data.csv").string() +
                           " --model logistic --prior 1 --iters 400 --warmup 200 --seed 99 --out ";
  CHECK(run_tool(base + (dir / "seed_a").string()).exit_code == 0);
  CHECK(run_tool(base + (dir / "seed_b").string()).exit_code == 0);
  CHECK(slurp(dir / "seed_a" / "draws_chain_1.csv") == slurp(dir / "seed_b" / "draws_chain_1.csv"));
  CHECK(slurp(dir / "seed_a" / "draws_chain_2.csv") == slurp(dir / "seed_b" / "draws_chain_2.csv"));
}

TEST_CASE("fit on an empty CSV fails and names the file") {
  const fs::path dir = work_dir();
  std::ofstream(dir / "empty.csv").close();
  const auto res =
      run_tool("fit --data " + (dir / "empty.csv").string() + " --model logistic --out " +
               (dir / "nowhere").string());
  CHECK(res.exit_code == 1);
  CHECK(res.output.find("empty.csv") != std::string::npos);
}

TEST_CASE("malformed CSV errors carry the file and line number") {
  const fs::path dir = work_dir();
  {
    std::ofstream bad(dir / "bad_rows.csv");
    bad << "y,x1,x2\n0,0.1,0.2\n\n1,not_a_number,0.4\n";
  }
  const auto res = run_tool("fit --data " + (dir / "bad_rows.csv").string() +
                            " --model logistic --out " + (dir / "nowhere3").string());
  CHECK(res.exit_code == 1);
  CHECK(res.output.find("bad_rows.csv:4") != std::string::npos);
  CHECK(res.output.find("not_a_number") != std::string::npos);

  {
    std::ofstream bad(dir / "bad_fields.csv");
    bad << "y,x1,x2\n0,0.1,0.2\n1,0.3\n";
  }
  const auto res2 = run_tool("fit --data " + (dir / "bad_fields.csv").string() +
                             " --model logistic --out " + (dir / "nowhere4").string());
  CHECK(res2.exit_code == 1);
  CHECK(res2.output.find("bad_fields.csv:3") != std::string::npos);
}

TEST_CASE("fit warns with exit code 2 when rhat exceeds the threshold") {
  const fs::path dir = work_dir();
  write_logistic_csv(dir / "warn_data.csv", (Vector(3) << 0.5, -0.3, 0.2).finished(), 40, 12);
  const auto res = run_tool("fit --data " + (dir / "warn_data.csv").string() +
                            " --model logistic --iters 400 --warmup 200 --rhat-warn 0.5 --out " +
                            (dir / "warn_out").string());
  CHECK(res.exit_code == 2);
  CHECK(res.output.find("rhat") != std::string::npos);
}

TEST_CASE("diagnose flags a flipped label and both alpha paths agree on the argmax") {
  const fs::path dir = work_dir();
  write_logistic_csv(dir / "flip.csv", (Vector(3) << -3.0, -0.7, 0.3).finished(), 100, 31, 64);

  const std::string fit_cmd = "fit --data " + (dir / "flip.csv").string() +
                              " --model logistic --prior 3 --iters 1500 --warmup 500 --seed 5 "
                              "--out " +
                              (dir / "flip_fit").string();
  REQUIRE(run_tool(fit_cmd).exit_code == 0);

  const std::string common = "diagnose --data " + (dir / "flip.csv").string() +
                             " --model logistic --prior 3 --draws " + (dir / "flip_fit").string() +
                             " --multiplier 2 --out ";
  const auto kl = run_tool(common + (dir / "diag_kl").string());
  CHECK(kl.exit_code == 0);
  const auto a2 = run_tool(common + (dir / "diag_a2").string() + " --alpha 2 --estimator alpha");
  CHECK(a2.exit_code == 0);

  const CsvTable kl_csv = read_csv((dir / "diag_kl" / "divergence.csv").string());
  const CsvTable a2_csv = read_csv((dir / "diag_a2" / "divergence.csv").string());
  // observation 64 is flagged in the KL report
  bool flagged64 = false;
  for (Index i = 0; i < kl_csv.rows(); ++i)
    if (kl_csv.values(i, 0) == 64 && kl_csv.values(i, 3) == 1) flagged64 = true;
  CHECK(flagged64);
  // identical argmax across the two estimators
  Index kl_best = 0, a2_best = 0;
  kl_csv.values.col(2).maxCoeff(&kl_best);
  a2_csv.values.col(2).maxCoeff(&a2_best);
  CHECK(kl_csv.values(kl_best, 0) == a2_csv.values(a2_best, 0));
}

TEST_CASE("diagnose on clean data flags only a modest tail at multiplier 3") {
  const fs::path dir = work_dir();
  write_logistic_csv(dir / "clean.csv", (Vector(3) << 0.5, -0.3, 0.2).finished(), 100, 77);
  const auto res = run_tool("diagnose --data " + (dir / "clean.csv").string() +
                            " --model logistic --prior 1 --iters 1200 --warmup 400 --seed 3 "
                            "--multiplier 3 --out " +
                            (dir / "diag_clean").string());
  CHECK(res.exit_code == 0);
  const CsvTable csv = read_csv((dir / "diag_clean" / "divergence.csv").string());
  CHECK(csv.values.col(3).sum() <= 15.0);  // <= 15% of n flagged on clean data
}

TEST_CASE("diagnose rejects draws with the wrong parameter count") {
  const fs::path dir = work_dir();
  // two-coefficient dataset, diagnosed against three-coefficient draws
  Rng rng(17);
  SimData data = generate_logistic((Vector(2) << 0.4, -0.2).finished(), 40, rng);
  Matrix out(40, 2);
  out.col(0) = data.response;
  out.col(1) = data.design.col(1);
  write_csv((dir / "two_col.csv").string(), {"y", "x1"}, out);

  const auto res = run_tool("diagnose --data " + (dir / "two_col.csv").string() +
                            " --model logistic --draws " + (dir / "flip_fit").string() +
                            " --out " + (dir / "diag_bad").string());
  CHECK(res.exit_code == 1);
  CHECK(res.output.find("parameter-count mismatch") != std::string::npos);
}

TEST_CASE("simulate is byte-identical across worker counts") {
  const fs::path dir = work_dir();
  {
    std::ofstream cfg(dir / "tiny.cfg");
    cfg << "study = influence\nmodel = logistic\ntrue_params = -3,-0.7,0.3\n"
        << "n = 40\nprior = 3\nscenarios = I,II\nwatched = 5,17,29\nreplications = 4\n"
        << "chains = 2\niterations = 600\nwarmup = 300\nseed = 321\n";
  }
  const std::string base = "simulate --config " + (dir / "tiny.cfg").string();
  CHECK(run_tool(base + " --workers 1 --out " + (dir / "sim_w1").string()).exit_code == 0);
  CHECK(run_tool(base + " --workers 8 --out " + (dir / "sim_w8").string()).exit_code == 0);
  CHECK(slurp(dir / "sim_w1" / "influence_table.csv") ==
        slurp(dir / "sim_w8" / "influence_table.csv"));
  CHECK(slurp(dir / "sim_w1" / "influence_table.txt") ==
        slurp(dir / "sim_w8" / "influence_table.txt"));
}

TEST_CASE("simulate rejects an unknown scenario label, listing the valid ones") {
  const fs::path dir = work_dir();
  {
    std::ofstream cfg(dir / "bad.cfg");
    cfg << "study = influence\nmodel = logistic\ntrue_params = -3,-0.7,0.3\n"
        << "n = 40\nscenarios = V\nwatched = 5,17,29\nreplications = 2\n";
  }
  const auto res = run_tool("simulate --config " + (dir / "bad.cfg").string() + " --out " +
                            (dir / "sim_bad").string());
  CHECK(res.exit_code == 1);
  CHECK(res.output.find("I, II, III, IV") != std::string::npos);
}

TEST_CASE("spatial and garch ingestion schemas") {
  const fs::path dir = work_dir();

  // spatial: columns named x, y, z
  {
    Rng rng(21);
    const SimData data =
        generate_spatial((Vector(6) << 3.0, 0.25, 0.65, 0.2, -0.3, -0.2).finished(), 1.0, 50, rng);
    Matrix out(50, 3);
    out.col(0) = data.coords.col(0);
    out.col(1) = data.coords.col(1);
    out.col(2) = data.response;
    write_csv((dir / "spatial.csv").string(), {"x", "y", "z"}, out);
  }
  const auto sres = run_tool("fit --data " + (dir / "spatial.csv").string() +
                             " --model spatial --prior 2 --iters 600 --warmup 300 --out " +
                             (dir / "fit_spatial").string());
  CHECK(sres.exit_code == 0);
  const RawCsv ssum = read_csv_raw((dir / "fit_spatial" / "summary.csv").string());
  CHECK(ssum.rows.size() == 7);
  CHECK(ssum.rows.back()[0] == "sigma2");

  // spatial data without the named columns is rejected
  write_csv((dir / "unnamed.csv").string(), {"a", "b", "c"}, Matrix::Random(10, 3));
  const auto bad = run_tool("fit --data " + (dir / "unnamed.csv").string() +
                            " --model spatial --out " + (dir / "nowhere2").string());
  CHECK(bad.exit_code == 1);
  CHECK(bad.output.find("x, y, z") != std::string::npos);

  // garch: prices converted by --log-returns
  {
    Rng rng(22);
    const SimData data = generate_garch(2.0, 0.2, 0.6, 120, 200, rng);
    Matrix prices(121, 1);
    prices(0, 0) = 100.0;
    for (int t = 0; t < 120; ++t)
      prices(t + 1, 0) = prices(t, 0) * std::exp(data.response[t] / 100.0);
    write_csv((dir / "prices.csv").string(), {"price"}, prices);
  }
  const auto gres = run_tool("fit --data " + (dir / "prices.csv").string() +
                             " --model garch --prior 3 --log-returns --iters 600 --warmup 300 "
                             "--out " +
                             (dir / "fit_garch").string());
  CHECK(gres.exit_code == 0);
  const RawCsv gsum = read_csv_raw((dir / "fit_garch" / "summary.csv").string());
  CHECK(gsum.rows.size() == 3);
  CHECK(gsum.rows[0][0] == "alpha0");
}

TEST_CASE("simulate runs a bias study from a config") {
  const fs::path dir = work_dir();
  {
    std::ofstream cfg(dir / "bias.cfg");
    cfg << "study = bias\nmodel = logistic\ntrue_params = 1.3,-0.7,0.3\nn = 60\nprior = 3\n"
        << "replications = 4\nchains = 2\niterations = 600\nwarmup = 300\nseed = 12\n"
        << "watched = 5,10,15\n";
  }
  const auto res = run_tool("simulate --config " + (dir / "bias.cfg").string() + " --out " +
                            (dir / "sim_bias").string());
  CHECK(res.exit_code == 0);
  const RawCsv table = read_csv_raw((dir / "sim_bias" / "bias_table.csv").string());
  REQUIRE(table.rows.size() == 3);
  CHECK(table.header == std::vector<std::string>{"parameter", "true", "bias", "smse", "mse"});
  CHECK(table.rows[0][0] == "beta0");
  CHECK(fs::exists(dir / "sim_bias" / "bias_table.txt"));
}

TEST_CASE("garch deletion semantics flag changes the diagnose scores") {
  const fs::path dir = work_dir();
  {
    Rng rng(23);
    const SimData data = generate_garch(2.0, 0.2, 0.6, 80, 200, rng);
    Matrix out(80, 1);
    out.col(0) = data.response;
    write_csv((dir / "garch80.csv").string(), {"r"}, out);
  }
  const std::string common = "diagnose --data " + (dir / "garch80.csv").string() +
                             " --model garch --prior 3 --iters 800 --warmup 400 --seed 9 --out ";
  REQUIRE(run_tool(common + (dir / "g_impute").string()).exit_code == 0);
  REQUIRE(run_tool(common + (dir / "g_keep").string() + " --keep-deleted-in-path").exit_code == 0);
  const CsvTable a = read_csv((dir / "g_impute" / "divergence.csv").string());
  const CsvTable b = read_csv((dir / "g_keep" / "divergence.csv").string());
  REQUIRE(a.rows() == b.rows());
  // same observations, different raw scores (the recursion differs downstream)
  CHECK((a.values.col(0) - b.values.col(0)).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((a.values.col(1) - b.values.col(1)).lpNorm<Eigen::Infinity>() > 0.0);
}

TEST_CASE("manifest digest is stable under key reordering") {
  const fs::path dir = work_dir();
  {
    std::ofstream a(dir / "order_a.cfg");
    a << "study = influence\nmodel = logistic\ntrue_params = -3,-0.7,0.3\nn = 30\nprior = 3\n"
      << "scenarios = I\nwatched = 5,10,15\nreplications = 2\nchains = 2\niterations = 300\n"
      << "warmup = 150\nseed = 9\n";
    std::ofstream b(dir / "order_b.cfg");
    b << "seed = 9\nwarmup = 150\niterations = 300\nchains = 2\nreplications = 2\n"
      << "watched = 5,10,15\nscenarios = I\nprior = 3\nn = 30\ntrue_params = -3,-0.7,0.3\n"
      << "model = logistic\nstudy = influence\n";
  }
  REQUIRE(run_tool("simulate --config " + (dir / "order_a.cfg").string() + " --out " +
                   (dir / "ord_a").string())
              .exit_code == 0);
  REQUIRE(run_tool("simulate --config " + (dir / "order_b.cfg").string() + " --out " +
                   (dir / "ord_b").string())
              .exit_code == 0);
  auto digest_of = [](const fs::path& p) {
    const std::string text = slurp(p / "manifest.json");
    const auto key = text.find("config_digest");
    REQUIRE(key != std::string::npos);
    const auto start = text.find(':', key) + 3;
    return text.substr(start, text.find('"', start) - start);
  };
  CHECK(digest_of(dir / "ord_a") == digest_of(dir / "ord_b"));
}

TEST_CASE("report merges a single run verbatim and rejects mismatched observation sets") {
  const fs::path dir = work_dir();
  // single-run report carries the summary table
  const auto single = run_tool("report " + (dir / "fit_model1").string() + " --out " +
                               (dir / "single.md").string());
  CHECK(single.exit_code == 0);
  const std::string md = slurp(dir / "single.md");
  CHECK(md.find("summary.csv") != std::string::npos);
  CHECK(md.find("beta0") != std::string::npos);

  // two diagnose runs over different observation sets cannot be joined
  write_logistic_csv(dir / "short.csv", (Vector(3) << 0.5, -0.3, 0.2).finished(), 30, 13);
  REQUIRE(run_tool("diagnose --data " + (dir / "short.csv").string() +
                   " --model logistic --iters 400 --warmup 200 --out " +
                   (dir / "diag_short").string())
              .exit_code == 0);
  const auto mismatch = run_tool("report " + (dir / "diag_kl").string() + " " +
                                 (dir / "diag_short").string() + " --out " +
                                 (dir / "mismatch.md").string());
  CHECK(mismatch.exit_code == 1);
  CHECK(mismatch.output.find("observation ids") != std::string::npos);
}
