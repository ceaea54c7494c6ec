#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "skillmaster/cli.hpp"
#include "skillmaster/tool_protocol.hpp"

using namespace skillmaster;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / "skillmaster_cli_tests" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string smoke_config() {
  return (fs::path(SKILLMASTER_SOURCE_DIR) / "configs" / "smoke.conf").string();
}

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

// Table without its first (title) line.
std::string body(const std::string& table) {
  return table.substr(table.find('\n') + 1);
}

// One trained checkpoint shared by the eval and probe cases.
const fs::path& trained() {
  static const fs::path dir = [] {
    const auto d = scratch("trained");
    const auto r = cli({"train", "--config", smoke_config(), "--out", d.string()});
    REQUIRE(r.code == 0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("train: missing config fails with a message") {
  const auto r = cli({"train", "--config", "/nonexistent/x.conf"});
  CHECK(r.code != 0);
  CHECK(r.err.find("/nonexistent/x.conf") != std::string::npos);
}

TEST_CASE("train: writes metrics, checkpoint, final bank and echoes eval") {
  const auto d = scratch("train");
  const auto r = cli({"train", "--config", smoke_config(), "--iterations", "4", "--ablation", "no_utility", "--out",
                      d.string()});
  REQUIRE(r.code == 0);
  const std::string metrics = slurp(d / "metrics.csv");
  CHECK(metrics.rfind(std::string(kMetricsHeader) + "\n", 0) == 0);
  CHECK(count_lines(metrics) == 5);
  CHECK(fs::exists(d / "final_bank.json"));
  CHECK(fs::exists(d / "checkpoint" / "params.txt"));
  const std::string snapshot = slurp(d / "checkpoint" / "config.txt");
  CHECK(snapshot.find("ablation = no_utility") != std::string::npos);
  CHECK(snapshot.find("iterations = 4") != std::string::npos);
  CHECK(r.out.find("All") != std::string::npos);
}

TEST_CASE("train: bad override is reported") {
  const auto r = cli({"train", "--config", smoke_config(), "--ablation", "bogus", "--out", scratch("bad").string()});
  CHECK(r.code != 0);
  CHECK(r.err.find("bogus") != std::string::npos);
}

TEST_CASE("train: resume reproduces the uninterrupted metrics") {
  const auto full = scratch("full");
  const auto half = scratch("half");
  const auto rest = scratch("rest");
  REQUIRE(cli({"train", "--config", smoke_config(), "--iterations", "6", "--out", full.string()}).code == 0);
  REQUIRE(cli({"train", "--config", smoke_config(), "--iterations", "3", "--out", half.string()}).code == 0);
  REQUIRE(cli({"train", "--config", smoke_config(), "--iterations", "6", "--resume", (half / "checkpoint").string(),
               "--out", rest.string()})
              .code == 0);
  CHECK(slurp(rest / "metrics.csv") == slurp(full / "metrics.csv"));
  CHECK(slurp(rest / "final_bank.json") == slurp(full / "final_bank.json"));
}

TEST_CASE("eval: deterministic, split checked, compare table") {
  const auto ckpt = (trained() / "checkpoint").string();
  const auto a = cli({"eval", "--checkpoint", ckpt});
  const auto b = cli({"eval", "--checkpoint", ckpt});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.find("pick2") != std::string::npos);
  CHECK(cli({"eval", "--checkpoint", ckpt, "--split", "validation"}).code != 0);
  CHECK(cli({"eval", "--checkpoint", "/nonexistent"}).code != 0);

  const auto cmp = cli({"eval", "--checkpoint", ckpt, "--compare"});
  REQUIRE(cmp.code == 0);
  CHECK(cmp.out.find("delta") != std::string::npos);
}

TEST_CASE("eval: --no-retrieval on an empty bank matches the default run") {
  const auto d = scratch("empty");
  REQUIRE(cli({"train", "--config", smoke_config(), "--iterations", "0", "--bank-fraction", "0", "--out", d.string()})
              .code == 0);
  const auto ckpt = (d / "checkpoint").string();
  const auto with = cli({"eval", "--checkpoint", ckpt});
  const auto without = cli({"eval", "--checkpoint", ckpt, "--no-retrieval"});
  REQUIRE(with.code == 0);
  REQUIRE(without.code == 0);
  CHECK(body(with.out) == body(without.out));
}

TEST_CASE("probe: keep refused, parse failure reported, valid propose evaluated") {
  const auto ckpt = (trained() / "checkpoint").string();
  const auto d = scratch("probe");

  const auto keep = d / "keep.txt";
  std::ofstream(keep) << render_wire(KeepSkill{"covered"});
  const auto k = cli({"probe", "--checkpoint", ckpt, "--mutation", keep.string()});
  CHECK(k.code != 0);
  CHECK(k.err.find("keep_skill") != std::string::npos);

  const auto bad = d / "bad.txt";
  std::ofstream(bad) << "<think>x</think><tool_call>{oops</tool_call>";
  const auto b = cli({"probe", "--checkpoint", ckpt, "--mutation", bad.string()});
  CHECK(b.code != 0);
  CHECK(b.err.find("MalformedPayload") != std::string::npos);

  const auto good = d / "good.txt";
  std::ofstream(good) << render_wire(ProposeSkill{"cool", "Cool It While Held",
                                                  "Keep holding the target while you cool it at the fridge.",
                                                  "Cooling tasks.", "Cooling did nothing."});
  const auto g = cli({"probe", "--checkpoint", ckpt, "--mutation", good.string()});
  REQUIRE(g.code == 0);
  // smoke.conf uses K = 2.
  CHECK(count_lines(g.out) == 3);
  CHECK(g.out.find("r_utility=") != std::string::npos);
}

TEST_CASE("bank: show, diff, validate") {
  const auto d = scratch("bank");
  const auto data = fs::path(SKILLMASTER_SOURCE_DIR) / "data" / "household_seed_bank.json";
  const auto same = cli({"bank", "diff", data.string(), data.string()});
  REQUIRE(same.code == 0);
  CHECK(same.out == "no differences\n");

  const auto shown = cli({"bank", "show", data.string()});
  REQUIRE(shown.code == 0);
  CHECK(shown.out.rfind("bank version 0, 6 skills\n", 0) == 0);
  CHECK(shown.out.find("[heat]") != std::string::npos);

  const auto empty = d / "empty.json";
  std::ofstream(empty) << R"({"version": 0, "general": [], "by_category": {}})";
  const auto e = cli({"bank", "show", empty.string()});
  CHECK(e.code == 0);
  CHECK(e.out == "bank version 0, 0 skills\n");

  const auto dup = d / "dup.json";
  std::ofstream(dup) << R"({"version": 1, "general": [
    {"id": "sk-000007", "category": "general", "title": "A", "principle": "p", "when_to_apply": "w",
     "evidence_or_reason": "e", "directives": [], "created_at_iteration": 0, "revision": 0},
    {"id": "sk-000007", "category": "general", "title": "B", "principle": "p", "when_to_apply": "w",
     "evidence_or_reason": "e", "directives": [], "created_at_iteration": 0, "revision": 0}],
    "by_category": {}})";
  const auto v = cli({"bank", "validate", dup.string()});
  CHECK(v.code != 0);
  CHECK(v.err.find("sk-000007") != std::string::npos);
  CHECK(cli({"bank", "validate", data.string()}).code == 0);

  const auto changed = cli({"bank", "diff", data.string(), (trained() / "final_bank.json").string()});
  CHECK(changed.code == 0);
}

TEST_CASE("usage errors") {
  CHECK(cli({}).code != 0);
  CHECK(cli({"frobnicate"}).code != 0);
  CHECK(cli({"--help"}).code == 0);
}
