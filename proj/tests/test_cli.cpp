#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "cli_runner.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const char* kSmallConfig = R"({
  "schema_version": 1, "seed": 3,
  "potential": {"kind": "ring"},
  "dataset": {"chains": 100, "burn": 20, "steps": 4},
  "model": {"layers": 2, "components": 4, "hidden": [8]},
  "train": {"iterations": 6, "batch_size": 50, "eval_every": 3},
  "md": {"equil_steps": 10, "prod_steps": 30, "replicas": 2}
})";

std::vector<std::vector<double>> read_csv(const fs::path& p, std::string& header) {
  std::istringstream in(cli::slurp(p));
  std::getline(in, header);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<double> r;
    std::istringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) r.push_back(std::stod(tok));
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

TEST_CASE("every command is byte-for-byte reproducible under a fixed seed") {
  const auto root = cli::scratch("cli_determinism");
  cli::write(root / "config.json", kSmallConfig);
  const auto a = root / "a", b = root / "b";
  fs::create_directories(a);
  fs::create_directories(b);
  const std::string config = (root / "config.json").string();
  REQUIRE(cli::run_pipeline(a, config) == "");
  REQUIRE(cli::run_pipeline(b, config) == "");
  // Paths printed to stdout differ by directory name; compare everything else.
  auto diff = cli::differing_files(a, b);
  diff.erase(std::remove_if(diff.begin(), diff.end(), [](const std::string& s) { return s.rfind("stdout_", 0) == 0; }), diff.end());
  CHECK(diff.empty());
  for (const auto& f : diff) MESSAGE("differs: " << f);
  CHECK(fs::exists(a / "data.csv.meta.json"));
  for (const char* f : {"model.json", "best.json", "metrics.csv", "validation.csv", "summary.json"}) CHECK(fs::exists(a / "run" / f));
}

TEST_CASE("a different seed changes the data") {
  const auto root = cli::scratch("cli_seed");
  cli::write(root / "config.json", kSmallConfig);
  const std::string c = "'" + (root / "config.json").string() + "'";
  REQUIRE(cli::run("gen-data --config " + c + " --out '" + (root / "a.csv").string() + "' --seed 1") == 0);
  REQUIRE(cli::run("gen-data --config " + c + " --out '" + (root / "b.csv").string() + "' --seed 2") == 0);
  REQUIRE(cli::run("gen-data --config " + c + " --out '" + (root / "c.csv").string() + "'") == 0);
  CHECK(cli::slurp(root / "a.csv") != cli::slurp(root / "b.csv"));
  const auto meta = nlohmann::json::parse(cli::slurp(root / "c.csv.meta.json"));
  CHECK(meta.dump().find("\"seed\":3") != std::string::npos);
}

TEST_CASE("usage and configuration errors exit with status 2") {
  const auto root = cli::scratch("cli_errors");
  cli::write(root / "config.json", kSmallConfig);
  cli::write(root / "bad.json", R"({"schema_version": 1, "potential": {"kind": "ring"}, "trian": {}})");
  cli::write(root / "old.json", R"({"schema_version": 7})");
  const std::string out = " --out '" + (root / "x.csv").string() + "'";
  const auto log = (root / "log.txt").string();
  CHECK(cli::run("", log) == 2);
  CHECK(cli::run("no-such-command", log) == 2);
  CHECK(cli::run("gen-data" + out, log) == 2);
  CHECK(cli::run("gen-data --config '" + (root / "missing.json").string() + "'" + out, log) == 2);
  CHECK(cli::slurp(log).find("cannot open") != std::string::npos);
  CHECK(cli::run("gen-data --config '" + (root / "bad.json").string() + "'" + out, log) == 2);
  CHECK(cli::slurp(log).find("trian") != std::string::npos);
  CHECK(cli::run("gen-data --config '" + (root / "old.json").string() + "'" + out, log) == 2);
  CHECK(cli::slurp(log).find("schema_version") != std::string::npos);
  CHECK(cli::run("gen-data --config '" + (root / "config.json").string() + "' --out '" + (root / "nodir" / "x.csv").string() + "'", log) == 2);
  CHECK(cli::run("mdsim --config '" + (root / "config.json").string() + "'" + out, log) == 2);
  CHECK(cli::run("export-grid" + out, log) == 2);
  CHECK(cli::run("bench-rootfind --bins 1" + out, log) == 2);
  CHECK(cli::run("eval --model '" + (root / "config.json").string() + "' --data '" + (root / "x.csv").string() + "'", log) == 2);
}

TEST_CASE("help lists the subcommands and exit codes") {
  const auto root = cli::scratch("cli_help");
  const auto log = (root / "help.txt").string();
  CHECK(cli::run("--help", log) == 0);
  const std::string h = cli::slurp(log);
  for (const char* s : {"gen-data", "train", "eval", "mdsim", "bench-rootfind", "export-grid", "Exit codes"}) CHECK(h.find(s) != std::string::npos);
}

TEST_CASE("exported grids cover the resolution squared") {
  const auto root = cli::scratch("cli_grid");
  cli::write(root / "flat.json", R"({"schema_version": 1, "potential": {"kind": "flat", "dims": 2}})");
  const auto csv = root / "flat.csv";
  REQUIRE(cli::run("export-grid --potential '" + (root / "flat.json").string() + "' --resolution 12 --out '" + csv.string() + "'") == 0);
  std::string header;
  const auto rows = read_csv(csv, header);
  CHECK(header == "x1,x2,u,f1,f2");
  REQUIRE(rows.size() == 144);
  std::set<double> xs;
  for (const auto& r : rows) {
    CHECK(r[2] == 0.0);
    CHECK(r[3] == 0.0);
    CHECK(r[4] == 0.0);
    xs.insert(r[0]);
  }
  CHECK(xs.size() == 12);
}
