#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "deepcam/error.hpp"
#include "deepcam/modelio.hpp"

using namespace deepcam;
namespace fs = std::filesystem;

#ifndef DEEPCAM_FIXTURES
#define DEEPCAM_FIXTURES "tests/fixtures"
#endif

namespace {

const std::string kModel = std::string(DEEPCAM_FIXTURES) + "/lenet5.dcam";
const std::string kData = std::string(DEEPCAM_FIXTURES) + "/mnist1k.dcds";

struct Run {
  int code;
  std::string out, err;
};

Run invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("deepcam_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  const auto b = read_file(p);
  return {b.begin(), b.end()};
}

}  // namespace

TEST_CASE("hash spec parsing") {
  CHECK(cli::resolve_hash_spec("uniform:512", 3) == std::vector<std::size_t>{512, 512, 512});
  CHECK(cli::resolve_hash_spec("list:256,1024", 2) == std::vector<std::size_t>{256, 1024});
  CHECK_THROWS_AS(cli::resolve_hash_spec("list:256", 2), ConfigError);
  CHECK_THROWS_AS(cli::resolve_hash_spec("uniform:300", 1), ConfigError);
  CHECK_THROWS_AS(cli::resolve_hash_spec("uniform:abc", 1), ConfigError);
  CHECK_THROWS_AS(cli::resolve_hash_spec("random:1", 1), ConfigError);
  CHECK_THROWS_AS(cli::resolve_hash_spec("file:/nonexistent/x.cfg", 1), IoError);
  CHECK(cli::parse_dims("1x32x32") == Dims{1, 32, 32});
  CHECK(cli::parse_dims("5x7") == Dims{1, 5, 7});
  CHECK_THROWS_AS(cli::parse_dims("1x0x3"), ConfigError);
}

TEST_CASE("quantile") {
  CHECK(cli::quantile({3, 1, 2}, 0.5) == 2);
  CHECK(cli::quantile({1, 2, 3, 4}, 0.5) == 2.5);
  CHECK(cli::quantile({0, 10}, 0.95) == doctest::Approx(9.5));
}

TEST_CASE("exit codes") {
  CHECK(invoke({}).code == cli::kValidation);
  CHECK(invoke({"--help"}).code == cli::kOk);
  CHECK(invoke({"run", "--model", kModel, "--data", kData, "--rows", "100"}).code == cli::kValidation);
  CHECK(invoke({"run", "--model", kModel, "--data", kData, "--dataflow", "xs"}).code == cli::kValidation);
  CHECK(invoke({"run", "--model", "/nonexistent.dcam", "--data", kData}).code == cli::kIo);
  CHECK(invoke({"run", "--model", kData, "--data", kData}).code == cli::kIo);
  CHECK(invoke({"dotbench", "--k", "4"}).code == cli::kValidation);
  CHECK(invoke({"cost", "--input", "1x32x32"}).code == cli::kValidation);
}

TEST_CASE("dotbench output") {
  const Run empty = invoke({"dotbench", "--trials", "0"});
  CHECK(empty.code == 0);
  CHECK(empty.out == "kind,k,variant,trials,algebraic,median_approx,median_abs_err,p95_abs_err,median_rel_err,p95_rel_err\n");

  const Run r = invoke({"dotbench", "--k", "256,1024", "--trials", "200", "--seed", "3"});
  CHECK(r.code == 0);
  CHECK(r.out.find("worked_pair,1024,piecewise,100,2.0766085,") != std::string::npos);
  CHECK(r.out == invoke({"dotbench", "--k", "256,1024", "--trials", "200", "--seed", "3"}).out);

  cli::DotbenchConfig cfg;
  cfg.ks = {256, 1024};
  cfg.trials = 300;
  const auto rows = cli::dotbench(cfg);
  REQUIRE(rows.size() == 8);
  CHECK(rows[0].k == 256);
  CHECK(rows[2].median_abs < rows[0].median_abs);
}

TEST_CASE("cost on the first-layer example") {
  const Run ws = invoke({"cost", "--input", "1x32x32", "--kernels", "6", "--kernel", "5", "--dataflow", "ws",
                      "--hash", "uniform:256", "--peak-utilization"});
  CHECK(ws.code == 0);
  CHECK(ws.out.find("\n0,ws,64,256,784,6,") != std::string::npos);
  CHECK(ws.out.find(",0.09375,") != std::string::npos);
  const Run as = invoke({"cost", "--input", "1x32x32", "--kernels", "6", "--dataflow", "as", "--hash", "uniform:256",
                      "--peak-utilization"});
  CHECK(as.out.find("\n0,as,64,256,78,784,") != std::string::npos);
  CHECK(as.out.find(",1,") != std::string::npos);
}

TEST_CASE("run writes identical reports twice and the dry run matches its cost section") {
  const fs::path a = scratch("run_a"), b = scratch("run_b"), plots = scratch("plots");
  const std::vector<std::string> base{"run", "--model", kModel, "--data", kData, "--limit", "20"};
  auto with = [&](std::vector<std::string> extra) {
    auto v = base;
    v.insert(v.end(), extra.begin(), extra.end());
    return v;
  };
  const Run ra = invoke(with({"--out", a.string(), "--plot", plots.string(), "--threads", "2"}));
  REQUIRE(ra.code == 0);
  CHECK(ra.out.find("top1: ") != std::string::npos);
  CHECK(invoke(with({"--out", b.string(), "--threads", "1"})).code == 0);
  CHECK(slurp(a / "cost.csv") == slurp(b / "cost.csv"));
  CHECK(slurp(a / "summary.txt") == slurp(b / "summary.txt"));
  CHECK(fs::exists(plots / "run_cycles.svg"));

  const fs::path dry = scratch("dry.csv");
  CHECK(invoke({"cost", "--model", kModel, "--runs", "20", "--out", dry.string()}).code == 0);
  CHECK(slurp(dry) == slurp(a / "cost.csv"));

  const auto summary = KeyValueConfig::load(a / "summary.txt");
  CHECK(summary.at("samples") == "20");
  CHECK(summary.at("hash_lengths") == "1024,1024,1024,1024,1024");

  const Run exact = invoke(with({"--arithmetic", "exact"}));
  CHECK(exact.code == 0);

  for (const auto& p : {a, b, plots, dry}) fs::remove_all(p);
}

TEST_CASE("cost table override through the environment") {
  const fs::path table = scratch("table.cfg");
  write_text(table, "finalize_energy_pj = 0\n");
  const std::vector<std::string> args{"cost", "--input", "1x32x32", "--kernels", "6", "--hash", "uniform:256"};
  const std::string plain = invoke(args).out;
  ::setenv("DEEPCAM_COST_TABLE", table.c_str(), 1);
  const std::string overridden = invoke(args).out;
  ::setenv("DEEPCAM_COST_TABLE", "/nonexistent/table.cfg", 1);
  const int missing = invoke(args).code;
  ::unsetenv("DEEPCAM_COST_TABLE");
  CHECK(plain != overridden);
  CHECK(missing == cli::kIo);
  fs::remove(table);
}
