#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "mradon/errors.hpp"
#include "mradon/io.hpp"

// The configuration layer lives with the tool, not the library; pull the
// translation unit in directly for white-box testing.
#include "../tools/config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mradon;

namespace {

fs::path tmp_root() {
  const fs::path p = fs::path(MRADON_TEST_TMP);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MRADON_CLI_PATH) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

}  // namespace

TEST_CASE("float64 files round trip bit-exactly") {
  const fs::path p = tmp_root() / "roundtrip.f64";
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  std::vector<double> vals(257);
  for (double& v : vals) v = u(rng);
  vals[0] = 0.0;
  vals[1] = -0.0;
  vals[2] = 1e-308;
  io::write_f64(p.string(), vals);
  const std::vector<double> back = io::read_f64(p.string());
  REQUIRE(back.size() == vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) CHECK(back[i] == vals[i]);
  CHECK(std::signbit(back[1]));
}

TEST_CASE("csv files carry 17 significant digits and a header") {
  const fs::path p = tmp_root() / "table.csv";
  const double x = 0.1 + 0.2;  // not representable exactly: digits matter
  io::write_csv(p.string(), {"alpha", "beta"}, {{x, 1.0}, {-2.5, 3.0e-17}});
  const std::string text = io::read_text(p.string());
  CHECK(text.substr(0, 11) == "alpha,beta\n");
  CHECK(text.find("0.30000000000000004") != std::string::npos);
  CHECK(text.find("3.0000000000000001e-17") != std::string::npos);
  CHECK(text.back() == '\n');
}

TEST_CASE("pgm files have the 16-bit binary header and big-endian samples") {
  const fs::path p = tmp_root() / "image.pgm";
  // 3 wide, 2 tall; top-left = 0, bottom-right = 1 -> full scale
  io::write_pgm16(p.string(), 3, 2, std::vector<double>{0.0, 0.25, 0.5, 0.75, 0.9, 1.0},
                  0.0, 1.0);
  std::ifstream f(p, std::ios::binary);
  std::string header;
  std::getline(f, header);
  CHECK(header == "P5");
  int w, h, maxv;
  f >> w >> h >> maxv;
  CHECK(w == 3);
  CHECK(h == 2);
  CHECK(maxv == 65535);
  f.get();  // single whitespace after maxval
  std::vector<unsigned char> bytes(12);
  f.read(reinterpret_cast<char*>(bytes.data()), 12);
  CHECK(bytes[0] == 0);  // first sample 0x0000
  CHECK(bytes[1] == 0);
  CHECK(bytes[10] == 0xFF);  // last sample 0xFFFF
  CHECK(bytes[11] == 0xFF);
}

TEST_CASE("configuration text parses into dotted keys") {
  const std::string text =
      "# comment\n"
      "seed = 7\n"
      "name = \"run one\"  # trailing comment\n"
      "\n"
      "[domain]\n"
      "kind = \"ellipse\"\n"
      "semi_axes = [2.0, 1.0]\n"
      "flag = true\n"
      "nested = [[1, 2], [3, 4]]\n";
  const cli::Config cfg = cli::parse_config(text);
  CHECK(cli::get_integer(cfg, "seed") == 7);
  CHECK(cli::get_string(cfg, "name") == "run one");
  CHECK(cli::get_string(cfg, "domain.kind") == "ellipse");
  CHECK(cli::get_number_list(cfg, "domain.semi_axes") == std::vector<double>{2.0, 1.0});
  CHECK(cli::get_bool_or(cfg, "domain.flag", false));
  const cli::Array& nested = cfg.at("domain.nested").array("domain.nested");
  REQUIRE(nested.size() == 2);
  CHECK(nested[1].array("domain.nested")[0].number("domain.nested") == 3.0);
}

TEST_CASE("configuration errors name the offending content") {
  CHECK_THROWS_WITH_AS(cli::parse_config("x = \n"), doctest::Contains("line 1"),
                       config_error);
  CHECK_THROWS_WITH_AS(cli::parse_config("a = 1\na = 2\n"), doctest::Contains("duplicate"),
                       config_error);
  CHECK_THROWS_WITH_AS(cli::parse_config("[sec\nk = 1\n"),
                       doctest::Contains("unterminated"), config_error);
  cli::Config cfg;
  CHECK_THROWS_WITH_AS(cli::get_number(cfg, "resolution.mode_count"),
                       doctest::Contains("resolution.mode_count"), config_error);
  cfg["k"] = cli::Value{std::string("text")};
  CHECK_THROWS_WITH_AS(cli::get_number(cfg, "k"), doctest::Contains("'k'"), config_error);
}

TEST_CASE("overrides replace keys using the same value grammar") {
  cli::Config cfg = cli::parse_config("[resolution]\nmode_count = 129\n");
  cli::apply_override(cfg, "resolution.mode_count=513");
  CHECK(cli::get_integer(cfg, "resolution.mode_count") == 513);
  cli::apply_override(cfg, "domain.semi_axes=[1.5, 0.5]");
  CHECK(cli::get_number_list(cfg, "domain.semi_axes") == std::vector<double>{1.5, 0.5});
  cli::apply_override(cfg, "domain.kind=\"disk\"");
  CHECK(cli::get_string(cfg, "domain.kind") == "disk");
  CHECK_THROWS_AS(cli::apply_override(cfg, "no-equals-sign"), config_error);
}

TEST_CASE("rendered configuration text parses back to the same map") {
  const std::string text =
      "seed = 3\nout = \"d\"\n[domain]\nkind = \"ellipse\"\nsemi_axes = [2.25, 1.0]\n"
      "[resolution]\nmode_count = 65\n";
  const cli::Config cfg = cli::parse_config(text);
  const cli::Config again = cli::parse_config(cli::render_config(cfg));
  REQUIRE(again.size() == cfg.size());
  CHECK(cli::get_number_list(again, "domain.semi_axes") ==
        std::vector<double>{2.25, 1.0});
  CHECK(cli::get_integer(again, "resolution.mode_count") == 65);
  CHECK(cli::get_string(again, "out") == "d");
}

// ---------------------------------------------------------------------------
// command-line driver, exercised as a subprocess

TEST_CASE("cli: invalid resolution exits with the config code and names the key") {
  const fs::path dir = tmp_root() / "cli_badres";
  fs::remove_all(dir);
  const fs::path cfgp = tmp_root() / "badres.toml";
  write_file(cfgp,
             "[domain]\nkind = \"disk\"\n[phantom]\nbumps = [[0.0, 0.0, 0.3, 1.0]]\n"
             "[resolution]\nboundary_resolution = 4\n");
  const int code =
      run_cli("forward --config " + cfgp.string() + " --out " + dir.string());
  CHECK(code == 2);
  const json err = json::parse(std::ifstream(dir / "error.json"));
  CHECK(err["error"]["message"].get<std::string>().find("boundary_resolution") !=
        std::string::npos);
  // no partial artifacts survive
  CHECK(!fs::exists(dir / "means.f64"));
  CHECK(!fs::exists(dir / "config.resolved.toml"));
}

TEST_CASE("cli: unknown keys are rejected") {
  const fs::path cfgp = tmp_root() / "typo.toml";
  write_file(cfgp, "[domain]\nkind = \"disk\"\n[resolution]\nboundray_resolution = 64\n");
  CHECK(run_cli("rigidity --config " + cfgp.string() + " --out " +
                (tmp_root() / "cli_typo").string()) == 2);
}

TEST_CASE("cli: missing input directory exits with the io code") {
  const fs::path cfgp = tmp_root() / "noinput.toml";
  write_file(cfgp,
             "[domain]\nkind = \"disk\"\n[invert]\ninput = \"/nonexistent/means/dir\"\n");
  const fs::path dir = tmp_root() / "cli_noinput";
  fs::remove_all(dir);
  const int code = run_cli("invert --config " + cfgp.string() + " --out " + dir.string());
  CHECK(code == 4);
  const json err = json::parse(std::ifstream(dir / "error.json"));
  CHECK(err["error"]["kind"] == "io-failure");
}

TEST_CASE("cli: forward then invert by artifact path, with deterministic bytes") {
  const fs::path cfgp = tmp_root() / "pipeline.toml";
  write_file(cfgp,
             "seed = 11\n[domain]\nkind = \"ellipse\"\nsemi_axes = [1.6, 1.0]\n"
             "angle = 0.3\n[phantom]\nbumps = [[0.35, 0.1, 0.4, 1.0]]\n"
             "[resolution]\nboundary_resolution = 96\nradial_resolution = 512\n"
             "grid_resolution = 24\n");
  const fs::path fwd1 = tmp_root() / "cli_fwd1", fwd2 = tmp_root() / "cli_fwd2";
  fs::remove_all(fwd1);
  fs::remove_all(fwd2);
  REQUIRE(run_cli("forward --config " + cfgp.string() + " --out " + fwd1.string()) == 0);
  REQUIRE(run_cli("forward --config " + cfgp.string() + " --out " + fwd2.string()) == 0);

  // byte-identical artifacts; only meta.json's timestamp (and the echoed out
  // path) may differ between the two runs
  for (const char* name : {"means.f64", "boundary.csv", "forward.json"}) {
    const std::string a = io::read_text((fwd1 / name).string());
    const std::string b = io::read_text((fwd2 / name).string());
    CHECK(a == b);
  }
  const json m1 = json::parse(std::ifstream(fwd1 / "meta.json"));
  json m2 = json::parse(std::ifstream(fwd2 / "meta.json"));
  m2["timestamp"] = m1["timestamp"];
  CHECK(m1 == m2);

  const fs::path inv = tmp_root() / "cli_inv";
  fs::remove_all(inv);
  REQUIRE(run_cli("invert --config " + cfgp.string() + " --out " + inv.string() +
                  " --set invert.input=\\\"" + fwd1.string() + "\\\"") == 0);
  const json summary = json::parse(std::ifstream(inv / "error_summary.json"));
  CHECK(summary["l2_relative_error"].get<double>() < 0.05);
  CHECK(fs::exists(inv / "reconstruction.pgm"));
  CHECK(fs::exists(inv / "config.resolved.toml"));
  CHECK(fs::exists(inv / "meta.json"));
}

TEST_CASE("cli: the shipped demo reports a collapsed kernel ratio") {
  const fs::path dir = tmp_root() / "cli_demo";
  fs::remove_all(dir);
  REQUIRE(run_cli("demo --seed 20240901 --set kernel.pairs=60 --set "
                  "resolution.mode_count=129 --set rigidity.directions=16 --out " +
                  dir.string()) == 0);
  const json rep = json::parse(std::ifstream(dir / "demo_report.json"));
  CHECK(rep["kernel_sup_ratio"].get<double>() <= 1e-3);
  CHECK(rep["kernel_sup"]["superellipse"].get<double>() > 1e-2);
  CHECK(rep["rigidity"]["ellipse"]["verdict"] == "ellipsoid-consistent");
  CHECK(rep["rigidity"]["superellipse"]["verdict"] == "non-ellipsoid");
}

TEST_CASE("cli: help exits cleanly and bad flags exit with the config code") {
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("forward --no-such-flag") == 2);
  CHECK(run_cli("") == 2);  // a subcommand is required
}
