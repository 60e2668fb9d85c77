#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <sstream>

#include "membrane/cli.hpp"
#include "membrane/io.hpp"
#include "support.hpp"

using namespace testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("membrane_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

int run_cli(const std::string& cmd, const std::string& cfg, const fs::path& out, std::optional<fs::path> resume = {}) {
  RunRequest req{cmd, Config::parse(cfg), out, {}, resume};
  std::ostringstream log;
  return run(req, log);
}

State sample_state() {
  const auto g = SphGrid::for_band(6);
  std::mt19937_64 rng(21);
  State s{Embedding::unit_sphere(g), VectorField(g), 1.25};
  for (int c = 0; c < 3; ++c) s.wdot.comp[c] = synthesize(random_field(6, rng), g);
  s.w.w += 0.01 * s.wdot;
  return s;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = Config::parse(
      "top = 1\n"
      "[run]\n"
      "lmax = 12   # comment\n"
      "T = 2.5\n"
      "; full-line comment\n"
      "[filter]\n"
      "dealias = false\n"
      "[lifespan]\n"
      "epsilons = 0.1, 0.01\n");
  CHECK(c.get_int("top", 0) == 1);
  CHECK(c.get_int("run.lmax", 0) == 12);
  CHECK(c.get_double("run.T", 0) == 2.5);
  CHECK(c.get_double("run.b", 0.75) == 0.75);
  CHECK_FALSE(c.get_bool("filter.dealias", true));
  CHECK(c.get_doubles("lifespan.epsilons", {}) == std::vector<double>{0.1, 0.01});
  CHECK(c.unused().empty());
  CHECK_NOTHROW(c.reject_unused());
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(Config::parse("[run]\nlmax = 4\nlmax = 5\n"), ValidationError);
  CHECK_THROWS_AS(Config::parse("no equals sign\n"), ValidationError);
  auto c = Config::parse("[run]\nlmax = four\nextra = 1\n");
  CHECK_THROWS_AS(c.get_int("run.lmax", 0), ValidationError);
  CHECK(c.unused() == std::vector<std::string>{"run.extra"});
  CHECK_THROWS_AS(c.reject_unused(), ValidationError);
  c.set("run.T=3");
  CHECK(c.get_double("run.T", 0) == 3.0);
  CHECK_THROWS_AS(c.set("nonsense"), ValidationError);
  CHECK_THROWS_AS(Config::load("/nonexistent/membrane.cfg"), IoError);
}

TEST_CASE("mode lists") {
  const auto m = parse_modes("2,0,0.01; 3,-1,0.02,tangent ; 4,2,0.5,normal,velocity");
  REQUIRE(m.size() == 3);
  CHECK(m[0].l == 2);
  CHECK(m[0].channel == Channel::normal);
  CHECK_FALSE(m[0].velocity);
  CHECK(m[1].m == -1);
  CHECK(m[1].channel == Channel::tangent);
  CHECK(m[2].velocity);
  CHECK(m[2].amplitude == 0.5);
  CHECK(parse_modes("").empty());
  CHECK_THROWS_AS(parse_modes("2,3,0.1"), ValidationError);
  CHECK_THROWS_AS(parse_modes("2,0"), ValidationError);
}

TEST_CASE("CSV roundtrip") {
  for (double v : {0.1, 1.0 / 3, -2.5e-300, 6.02214076e23, 0.0})
    CHECK(std::stod(format_double(v)) == v);
  const auto dir = scratch("csv");
  {
    CsvWriter w(dir / "a.csv", {"t", "x"});
    w.row({0.1, 1.0 / 3});
    w.row({0.2, -1e-17});
    CHECK_THROWS_AS(w.row({1.0}), ValidationError);
  }
  std::istringstream in(slurp(dir / "a.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,x");
  std::getline(in, line);
  const auto comma = line.find(',');
  CHECK(std::stod(line.substr(comma + 1)) == 1.0 / 3);
}

TEST_CASE("FNV-1a digests") {
  CHECK(fnv1a64("", 0) == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a", 1) == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar", 6) == 0x85944171f73967e8ULL);
}

TEST_CASE("checkpoint roundtrip and corruption") {
  const auto dir = scratch("ckpt");
  const State s = sample_state();
  const auto path = dir / "s.memb";
  write_checkpoint(s, path);
  CHECK_FALSE(fs::exists(dir / "s.memb.tmp"));
  const State r = read_checkpoint(path);
  CHECK(r.t == s.t);
  CHECK(r.w.lmax == s.w.lmax);
  CHECK(max_abs(r.w.w, s.w.w) == 0.0);
  CHECK(max_abs(r.wdot, s.wdot) == 0.0);

  const std::string bytes = slurp(path);
  spit(dir / "short.memb", bytes.substr(0, bytes.size() - 9));
  CHECK_THROWS_AS(read_checkpoint(dir / "short.memb"), CorruptCheckpoint);
  std::string flipped = bytes;
  flipped[40] ^= 0x01;
  spit(dir / "flip.memb", flipped);
  CHECK_THROWS_AS(read_checkpoint(dir / "flip.memb"), CorruptCheckpoint);
  std::string magic = bytes;
  magic[0] = 'X';
  spit(dir / "magic.memb", magic);
  CHECK_THROWS_AS(read_checkpoint(dir / "magic.memb"), CorruptCheckpoint);
  std::string bumped = bytes;
  bumped[4] = static_cast<char>(kCheckpointVersion + 1);
  spit(dir / "v2.memb", bumped);
  CHECK_THROWS_AS(read_checkpoint(dir / "v2.memb"), VersionMismatch);
  CHECK_THROWS_AS(read_checkpoint(dir / "missing.memb"), IoError);
}

TEST_CASE("command run writes a manifest") {
  const auto out = scratch("breather");
  REQUIRE(run_cli("breather", "[breather]\nr0 = 1.05\nT = 1\ndt = 0.01\n", out) == kExitOk);
  const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(m["command"] == "breather");
  CHECK(m["exit_code"] == 0);
  bool found = false;
  for (const auto& o : m["outputs"]) {
    if (o["path"] == "report.csv") {
      found = true;
      CHECK(o["digest"] == digest_file(out / "report.csv"));
    }
  }
  CHECK(found);
}

TEST_CASE("invalid input exits with 2 and writes only the manifest") {
  const auto out = scratch("invalid");
  CHECK(run_cli("breather", "[breather]\nr0 = 1.05\nbogus = 3\n", out) == kExitValidation);
  CHECK(fs::exists(out / "manifest.json"));
  CHECK_FALSE(fs::exists(out / "report.csv"));
  const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(m["exit_code"] == 2);
  CHECK(std::string(m["error"]).find("breather.bogus") != std::string::npos);
  CHECK(run_cli("nonexistent", "", scratch("unknown")) == kExitValidation);
  CHECK(run_cli("simulate", "[run]\nlmax = 1\n", scratch("lmax")) == kExitValidation);
  CHECK(run_cli("breather", "", scratch("resume"), fs::path("x.memb")) == kExitValidation);
}

TEST_CASE("runs are deterministic") {
  const std::string cfg = "[run]\nlmax = 6\nT = 0.3\nsample_dt = 0.1\n[initial]\nrandom_lmax = 4\nepsilon = 0.01\nseed = 5\n";
  const auto a = scratch("det_a"), b = scratch("det_b");
  REQUIRE(run_cli("simulate", cfg, a) == kExitOk);
  REQUIRE(run_cli("simulate", cfg, b) == kExitOk);
  CHECK(slurp(a / "report.csv") == slurp(b / "report.csv"));
  CHECK(slurp(a / "checkpoints" / "final.memb") == slurp(b / "checkpoints" / "final.memb"));
  const auto c = scratch("det_c"), d = scratch("det_d");
  REQUIRE(run_cli("breather", "[breather]\nT = 2\n", c) == kExitOk);
  REQUIRE(run_cli("breather", "[breather]\nT = 2\n", d) == kExitOk);
  CHECK(slurp(c / "report.csv") == slurp(d / "report.csv"));
}

TEST_CASE("resume continues a run") {
  const std::string modes = "[initial]\nmodes = 2,0,0.01\n";
  const auto base = [&](const char* T) { return std::string("[run]\nlmax = 6\nb = 1\ndt = 0.05\nsample_dt = 0.1\nT = ") + T + "\n" + modes; };
  const auto full = scratch("full"), first = scratch("first"), second = scratch("second");
  REQUIRE(run_cli("simulate", base("0.4"), full) == kExitOk);
  REQUIRE(run_cli("simulate", base("0.2"), first) == kExitOk);
  REQUIRE(run_cli("simulate", base("0.4"), second, first / "checkpoints" / "final.memb") == kExitOk);
  const State a = read_checkpoint(full / "checkpoints" / "final.memb");
  const State b = read_checkpoint(second / "checkpoints" / "final.memb");
  CHECK(b.t == doctest::Approx(0.4));
  CHECK(max_abs(a.w.w, b.w.w) < 1e-12);
}

TEST_CASE("periodic checkpoints") {
  const auto out = scratch("periodic");
  REQUIRE(run_cli("simulate", "[run]\nlmax = 4\nT = 0.5\ndt = 0.05\ncheckpoint_every = 5\n", out) == kExitOk);
  CHECK(fs::exists(out / "checkpoints" / "step_00000005.memb"));
  CHECK(fs::exists(out / "checkpoints" / "step_00000010.memb"));
  CHECK(read_checkpoint(out / "checkpoints" / "step_00000005.memb").t == doctest::Approx(0.25));
}

TEST_CASE("every command runs with small settings") {
  const std::vector<std::pair<std::string, std::string>> jobs{
      {"linear", "[linear]\nlmax = 6\nT = 1\n"},
      {"split", "[split]\nlmax = 6\nT = 2\n"},
      {"spectrum", "[spectrum]\nlmax = 4\n"},
      {"smoothing-axioms", "[smoothing]\nsamples = 5\nlmax = 8\n"},
      {"nash-moser", "[nash-moser]\nlmax = 4\nT = 0.5\nsample_dt = 0.05\nmax_iterations = 2\n"},
      {"lifespan-scan", "[run]\nlmax = 4\nT = 0.5\n[lifespan]\nepsilons = 0.1\n"}};
  for (const auto& [cmd, cfg] : jobs) {
    CAPTURE(cmd);
    const auto out = scratch("cmd_" + cmd);
    CHECK(run_cli(cmd, cfg, out) == kExitOk);
    CHECK(fs::exists(out / "report.csv"));
  }
  CHECK(command_names().size() == 8);
}
