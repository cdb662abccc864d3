// Command-line driver: forward data generation, filtered backprojection,
// error-kernel sampling, rigidity diagnostics, Neumann-corrected inversion
// and a fixed demonstration run. Every subcommand resolves one configuration
// (file + --set overrides + defaults), echoes it into the output directory,
// writes its artifacts in a deterministic order, and finishes with a
// meta.json whose timestamp is the only run-dependent byte in the directory.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "config.hpp"
#include "json.hpp"
#include "mradon/errors.hpp"
#include "mradon/forward.hpp"
#include "mradon/geometry.hpp"
#include "mradon/grid.hpp"
#include "mradon/inversion.hpp"
#include "mradon/io.hpp"
#include "mradon/rigidity.hpp"
#include "mradon/transforms.hpp"
#include "mradon/vec.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mradon;
using cli::Config;

namespace {

// ---------------------------------------------------------------------------
// run context: output directory plus the list of artifacts written so far,
// so that a failed run can remove its partial outputs before reporting.

struct RunContext {
  fs::path out_dir;
  std::vector<fs::path> written;

  std::string path(const std::string& name) {
    const fs::path p = out_dir / name;
    written.push_back(p);
    return p.string();
  }
  void discard_artifacts() {
    for (const fs::path& p : written) {
      std::error_code ec;
      fs::remove(p, ec);
    }
    written.clear();
  }
};

std::string timestamp_utc() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_json_file(RunContext& ctx, const std::string& name, const json& j) {
  io::write_text(ctx.path(name), j.dump(2) + "\n");
}

// meta.json is written last and carries the run's single timestamp field.
void finish_run(RunContext& ctx, const std::string& experiment, json extra = json::object()) {
  extra["experiment"] = experiment;
  extra["timestamp"] = timestamp_utc();
  write_json_file(ctx, "meta.json", extra);
}

// ---------------------------------------------------------------------------
// configuration schema

const std::set<std::string>& allowed_keys() {
  static const std::set<std::string> keys = {
      "experiment", "seed", "out", "threads",
      "domain.kind", "domain.radius", "domain.semi_axes", "domain.center", "domain.angle",
      "domain.rotation", "domain.exponent",
      "phantom.bumps",
      "resolution.boundary_resolution", "resolution.boundary_mu", "resolution.boundary_phi",
      "resolution.radial_resolution", "resolution.grid_resolution", "resolution.mode_count",
      "resolution.buckets", "resolution.r_max",
      "forward.sinogram", "forward.sinogram_directions", "forward.sinogram_offsets",
      "invert.input",
      "kernel.pairs",
      "rigidity.directions",
      "neumann.steps", "neumann.grid_resolution", "neumann.source_resolution",
      "neumann.calibration_probes",
  };
  return keys;
}

[[noreturn]] void bad_key(const std::string& key, const std::string& why) {
  throw config_error(errc::config_invalid, "config key '" + key + "' " + why);
}

void require_min(const Config& cfg, const std::string& key, long fallback, long min_value) {
  const long v = cli::get_integer_or(cfg, key, fallback);
  if (v < min_value) bad_key(key, "must be at least " + std::to_string(min_value));
}

int domain_dimension(const Config& cfg) {
  const std::string kind = cli::get_string(cfg, "domain.kind");
  if (kind == "disk" || kind == "ellipse" || kind == "superellipse") return 2;
  if (kind == "ball" || kind == "ellipsoid") return 3;
  bad_key("domain.kind", "must be one of disk, ellipse, superellipse, ball, ellipsoid");
}

Vec3 vec_from_list(const std::vector<double>& v, const std::string& key, int dim) {
  if (static_cast<int>(v.size()) != dim)
    bad_key(key, "must have " + std::to_string(dim) + " entries");
  return Vec3{v[0], v[1], dim == 3 ? v[2] : 0.0};
}

std::unique_ptr<ConvexDomain> build_domain(const Config& cfg) {
  const std::string kind = cli::get_string(cfg, "domain.kind");
  const int dim = domain_dimension(cfg);
  Vec3 center{};
  if (cli::has_key(cfg, "domain.center"))
    center = vec_from_list(cli::get_number_list(cfg, "domain.center"), "domain.center", dim);

  if (kind == "disk" || kind == "ball") {
    const double r = cli::get_number_or(cfg, "domain.radius", 1.0);
    if (!(r > 0.0)) bad_key("domain.radius", "must be positive");
    if (kind == "disk") return std::make_unique<Ellipsoid>(r, r, center);
    return std::make_unique<Ellipsoid>(r, r, r, center,
                                       std::array<double, 9>{1, 0, 0, 0, 1, 0, 0, 0, 1});
  }

  std::vector<double> axes = cli::get_number_list(cfg, "domain.semi_axes");
  if (static_cast<int>(axes.size()) != dim)
    bad_key("domain.semi_axes", "must have " + std::to_string(dim) + " entries");
  for (double a : axes)
    if (!(a > 0.0)) bad_key("domain.semi_axes", "entries must be positive");

  if (kind == "ellipse") {
    const double angle = cli::get_number_or(cfg, "domain.angle", 0.0);
    return std::make_unique<Ellipsoid>(axes[0], axes[1], center, angle);
  }
  if (kind == "superellipse") {
    const long p = cli::get_integer_or(cfg, "domain.exponent", 4);
    if (p < 4 || p % 2 != 0) bad_key("domain.exponent", "must be an even integer >= 4");
    const double angle = cli::get_number_or(cfg, "domain.angle", 0.0);
    return std::make_unique<Superellipse>(static_cast<int>(p), axes[0], axes[1], center, angle);
  }
  // ellipsoid
  std::array<double, 9> rot{1, 0, 0, 0, 1, 0, 0, 0, 1};
  if (cli::has_key(cfg, "domain.rotation")) {
    const std::vector<double> r = cli::get_number_list(cfg, "domain.rotation");
    if (r.size() != 9) bad_key("domain.rotation", "must have 9 entries (row-major)");
    std::copy(r.begin(), r.end(), rot.begin());
  }
  return std::make_unique<Ellipsoid>(axes[0], axes[1], axes[2], center, rot);
}

Phantom build_phantom(const Config& cfg, int dim) {
  if (!cli::has_key(cfg, "phantom.bumps"))
    bad_key("phantom.bumps", "is required for this experiment");
  const cli::Array& rows = cfg.at("phantom.bumps").array("phantom.bumps");
  if (rows.empty()) bad_key("phantom.bumps", "must contain at least one bump");
  Phantom ph;
  for (const cli::Value& row : rows) {
    const cli::Array& entry = row.array("phantom.bumps");
    if (static_cast<int>(entry.size()) != dim + 2)
      bad_key("phantom.bumps",
              "entries must be [center..., radius, amplitude] with " +
                  std::to_string(dim + 2) + " numbers");
    std::vector<double> e;
    for (const cli::Value& v : entry) e.push_back(v.number("phantom.bumps"));
    Bump b;
    b.center = Vec3{e[0], e[1], dim == 3 ? e[2] : 0.0};
    b.radius = e[dim];
    b.amplitude = e[dim + 1];
    if (!(b.radius > 0.0)) bad_key("phantom.bumps", "radius must be positive");
    if (!std::isfinite(b.amplitude)) bad_key("phantom.bumps", "amplitude must be finite");
    ph.bumps.push_back(b);
  }
  return ph;
}

// Checks every recognized numeric field against the module preconditions and
// rejects unknown keys, so typos fail loudly instead of silently using a
// default.
void validate_config(const Config& cfg, const std::string& experiment) {
  for (const auto& [key, value] : cfg) {
    (void)value;
    if (!allowed_keys().count(key)) bad_key(key, "is not recognized");
  }
  if (cli::has_key(cfg, "seed") && cli::get_integer(cfg, "seed") < 0)
    bad_key("seed", "must be nonnegative");
  if (cli::has_key(cfg, "threads") && cli::get_integer(cfg, "threads") < 0)
    bad_key("threads", "must be nonnegative");

  require_min(cfg, "resolution.boundary_resolution", 512, 16);
  require_min(cfg, "resolution.boundary_mu", 32, 8);
  require_min(cfg, "resolution.boundary_phi", 64, 8);
  require_min(cfg, "resolution.radial_resolution", 512, 16);
  require_min(cfg, "resolution.grid_resolution", 64, 8);
  require_min(cfg, "resolution.mode_count", 513, 33);
  require_min(cfg, "resolution.buckets", 720, 8);
  require_min(cfg, "forward.sinogram_directions", 64, 4);
  require_min(cfg, "forward.sinogram_offsets", 129, 4);
  require_min(cfg, "kernel.pairs", 200, 1);
  require_min(cfg, "rigidity.directions", 64, 8);
  require_min(cfg, "neumann.steps", 3, 1);
  require_min(cfg, "neumann.grid_resolution", 64, 8);
  require_min(cfg, "neumann.source_resolution", 256, 32);
  require_min(cfg, "neumann.calibration_probes", 128, 8);
  if (cli::has_key(cfg, "resolution.r_max") &&
      !(cli::get_number(cfg, "resolution.r_max") > 0.0))
    bad_key("resolution.r_max", "must be positive");

  const bool needs_domain = experiment != "demo";
  if (needs_domain) {
    if (!cli::has_key(cfg, "domain.kind")) bad_key("domain.kind", "is required");
    const int dim = domain_dimension(cfg);
    if (dim == 3 && cli::has_key(cfg, "domain.angle"))
      bad_key("domain.angle", "applies to planar domains only (use domain.rotation)");
    build_domain(cfg);  // full parameter checks
    if (experiment == "neumann" && dim != 2)
      bad_key("domain.kind", "must be planar for the Neumann experiment");
    if (experiment == "forward" || experiment == "invert" || experiment == "neumann") {
      if (!(experiment == "invert" && cli::has_key(cfg, "invert.input")))
        build_phantom(cfg, dim);
    }
    if (cli::get_bool_or(cfg, "forward.sinogram", false) && dim != 2)
      bad_key("forward.sinogram", "is available for planar domains only");
  }
}

// Materializes every key the run will read, so the echoed configuration is
// self-contained: re-running with it reproduces the outputs byte for byte.
void resolve_defaults(Config& cfg, const std::string& experiment) {
  auto set_default = [&cfg](const std::string& key, cli::Value v) {
    if (!cfg.count(key)) cfg.emplace(key, std::move(v));
  };
  cfg["experiment"] = cli::Value{experiment};
  set_default("seed", cli::Value{20240901.0});
  set_default("threads", cli::Value{0.0});

  const bool planar = experiment == "demo" || domain_dimension(cfg) == 2;
  const bool uses_means =
      experiment == "forward" || experiment == "invert" || experiment == "neumann";
  if (uses_means) {
    if (planar)
      set_default("resolution.boundary_resolution", cli::Value{512.0});
    else {
      set_default("resolution.boundary_mu", cli::Value{32.0});
      set_default("resolution.boundary_phi", cli::Value{64.0});
    }
    set_default("resolution.radial_resolution", cli::Value{planar ? 1024.0 : 512.0});
  }
  if (experiment == "invert")
    set_default("resolution.grid_resolution", cli::Value{planar ? 128.0 : 48.0});
  if (experiment == "kernel" || experiment == "demo" || experiment == "rigidity")
    set_default("resolution.mode_count", cli::Value{513.0});
  if (experiment == "forward" && cli::get_bool_or(cfg, "forward.sinogram", false)) {
    set_default("forward.sinogram_directions", cli::Value{64.0});
    set_default("forward.sinogram_offsets", cli::Value{129.0});
    set_default("resolution.mode_count", cli::Value{513.0});
  }
  if (experiment == "kernel" || experiment == "demo")
    set_default("kernel.pairs", cli::Value{200.0});
  if (experiment == "rigidity" || experiment == "demo")
    set_default("rigidity.directions", cli::Value{64.0});
  if (experiment == "neumann") {
    set_default("resolution.mode_count", cli::Value{513.0});
    set_default("resolution.buckets", cli::Value{720.0});
    set_default("neumann.steps", cli::Value{3.0});
    set_default("neumann.grid_resolution", cli::Value{64.0});
    set_default("neumann.source_resolution", cli::Value{256.0});
    set_default("neumann.calibration_probes", cli::Value{128.0});
  }
}

// ---------------------------------------------------------------------------
// shared numeric helpers

std::uint64_t config_seed(const Config& cfg) {
  return static_cast<std::uint64_t>(cli::get_integer_or(cfg, "seed", 20240901));
}

// Deterministic interior probe pairs: rejection sampling in the bounding box,
// restricted to the 0.9-scaled body so chord charts stay clear of tangency,
// with a minimum separation relative to the diameter.
std::vector<std::pair<Vec3, Vec3>> sample_pairs(const ConvexDomain& dom, int n_pairs,
                                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const int dim = dom.dimension();
  const Vec3 ex{1, 0, 0}, ey{0, 1, 0}, ez{0, 0, 1};
  const Vec3 center = estimate_center(dom).center;
  const double rx = std::max(dom.support(ex) - center.x, center.x + dom.support(-1.0 * ex));
  const double ry = std::max(dom.support(ey) - center.y, center.y + dom.support(-1.0 * ey));
  const double rz =
      dim == 3 ? std::max(dom.support(ez) - center.z, center.z + dom.support(-1.0 * ez)) : 0.0;
  const double min_sep = 1e-3 * dom.diameter();
  auto draw = [&]() {
    for (int tries = 0; tries < 8192; ++tries) {
      const Vec3 p{center.x + rx * unit(rng), center.y + ry * unit(rng),
                   dim == 3 ? center.z + rz * unit(rng) : 0.0};
      const Vec3 q = center + (1.0 / 0.9) * (p - center);
      if (dom.contains(p) && dom.contains(q)) return p;
    }
    throw numerical_error(errc::degenerate_domain, "interior sampling failed");
  };
  std::vector<std::pair<Vec3, Vec3>> pairs;
  pairs.reserve(n_pairs);
  while (static_cast<int>(pairs.size()) < n_pairs) {
    const Vec3 x0 = draw();
    const Vec3 x1 = draw();
    if ((x1 - x0).norm() < min_sep) continue;
    pairs.emplace_back(x0, x1);
  }
  return pairs;
}

GridSpec grid_over(const ConvexDomain& dom, int n, double margin = 1.05) {
  const Vec3 ex{1, 0, 0}, ey{0, 1, 0}, ez{0, 0, 1};
  GridSpec spec;
  spec.dim = dom.dimension();
  auto extent = [&](const Vec3& e, double& lo, double& hi) {
    hi = dom.support(e);
    lo = -dom.support(-1.0 * e);
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo) * margin;
    lo = mid - half;
    hi = mid + half;
  };
  double x0, x1, y0, y1, z0 = 0.0, z1 = 0.0;
  extent(ex, x0, x1);
  extent(ey, y0, y1);
  if (spec.dim == 3) extent(ez, z0, z1);
  spec.nx = spec.ny = n;
  spec.nz = spec.dim == 3 ? n : 1;
  spec.x0 = x0;
  spec.y0 = y0;
  spec.z0 = z0;
  spec.dx = (x1 - x0) / n;
  spec.dy = (y1 - y0) / n;
  spec.dz = spec.dim == 3 ? (z1 - z0) / n : 1.0;
  return spec;
}

struct GridErrors {
  double l2_relative = 0.0;
  double sup_relative = 0.0;
};

GridErrors grid_errors(const ScalarGrid& f, const ScalarGrid& truth) {
  double num = 0.0, den = 0.0, sup = 0.0, tsup = 0.0;
  for (std::size_t i = 0; i < truth.values.size(); ++i) {
    const double d = f.values[i] - truth.values[i];
    num += d * d;
    den += truth.values[i] * truth.values[i];
    sup = std::max(sup, std::abs(d));
    tsup = std::max(tsup, std::abs(truth.values[i]));
  }
  GridErrors e;
  e.l2_relative = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
  e.sup_relative = tsup > 0.0 ? sup / tsup : sup;
  return e;
}

std::vector<std::vector<double>> read_csv_numeric(const std::string& path) {
  const std::string text = io::read_text(path);
  std::vector<std::vector<double>> rows;
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    const std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (first) {  // header
      first = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t c = 0;
    while (c <= line.size()) {
      std::size_t comma = line.find(',', c);
      if (comma == std::string::npos) comma = line.size();
      row.push_back(std::strtod(line.c_str() + c, nullptr));
      c = comma + 1;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// forward artifacts (means.f64 + boundary.csv + forward.json) and their
// reload for the invert pipeline.

void write_means(RunContext& ctx, const MeansData& data, json& info) {
  std::vector<std::vector<double>> rows;
  rows.reserve(data.boundary.size());
  for (int i = 0; i < data.boundary.size(); ++i) {
    const Vec3& p = data.boundary.nodes[i];
    const Vec3& n = data.boundary.normals[i];
    rows.push_back({p.x, p.y, p.z, n.x, n.y, n.z, data.boundary.weights[i]});
  }
  io::write_csv(ctx.path("boundary.csv"), {"x", "y", "z", "nx", "ny", "nz", "weight"}, rows);
  io::write_f64(ctx.path("means.f64"), data.values);
  info["dim"] = data.dim;
  info["n_centers"] = data.boundary.size();
  info["n_r"] = data.n_r;
  info["r_max"] = data.r_max;
  info["boundary_file"] = "boundary.csv";
  info["means_file"] = "means.f64";
  write_json_file(ctx, "forward.json", info);
}

MeansData read_means(const std::string& dir) {
  const fs::path base(dir);
  const json info = json::parse(io::read_text((base / "forward.json").string()));
  MeansData data;
  data.dim = info.at("dim").get<int>();
  data.n_r = info.at("n_r").get<int>();
  data.r_max = info.at("r_max").get<double>();
  data.boundary.dim = data.dim;
  for (const std::vector<double>& row :
       read_csv_numeric((base / info.at("boundary_file").get<std::string>()).string())) {
    if (row.size() != 7)
      throw io_error("boundary table rows must have 7 columns, got " +
                     std::to_string(row.size()));
    data.boundary.nodes.push_back({row[0], row[1], row[2]});
    data.boundary.normals.push_back({row[3], row[4], row[5]});
    data.boundary.weights.push_back(row[6]);
  }
  data.values = io::read_f64((base / info.at("means_file").get<std::string>()).string());
  const std::size_t expect =
      static_cast<std::size_t>(data.boundary.size()) * static_cast<std::size_t>(data.n_r);
  if (data.values.size() != expect)
    throw io_error("means file holds " + std::to_string(data.values.size()) +
                   " values, expected " + std::to_string(expect));
  return data;
}

MeansData compute_means(const Config& cfg, const ConvexDomain& dom, const Phantom& ph) {
  const double r_max = cli::get_number_or(cfg, "resolution.r_max", -1.0);
  const int n_r = static_cast<int>(cli::get_integer_or(cfg, "resolution.radial_resolution",
                                                       dom.dimension() == 2 ? 1024 : 512));
  if (dom.dimension() == 2) {
    const int nb = static_cast<int>(cli::get_integer_or(cfg, "resolution.boundary_resolution", 512));
    return means_dataset(dom, ph, nb, n_r, r_max);
  }
  const int n_mu = static_cast<int>(cli::get_integer_or(cfg, "resolution.boundary_mu", 32));
  const int n_phi = static_cast<int>(cli::get_integer_or(cfg, "resolution.boundary_phi", 64));
  return means_dataset3(dom, ph, n_mu, n_phi, n_r, r_max);
}

// ---------------------------------------------------------------------------
// experiments

void run_forward(RunContext& ctx, const Config& cfg) {
  const auto dom = build_domain(cfg);
  const Phantom ph = build_phantom(cfg, dom->dimension());
  const MeansData data = compute_means(cfg, *dom, ph);
  json info;
  write_means(ctx, data, info);

  if (cli::get_bool_or(cfg, "forward.sinogram", false)) {
    const int n_dirs = static_cast<int>(cli::get_integer_or(cfg, "forward.sinogram_directions", 64));
    const int n_t = static_cast<int>(cli::get_integer_or(cfg, "forward.sinogram_offsets", 129));
    const int modes = static_cast<int>(cli::get_integer_or(cfg, "resolution.mode_count", 513));
    std::vector<std::vector<double>> rows;
    rows.reserve(static_cast<std::size_t>(n_dirs) * n_t);
    for (int d = 0; d < n_dirs; ++d) {
      const double theta = M_PI * d / n_dirs;
      const Vec3 w{std::cos(theta), std::sin(theta), 0.0};
      const ChordProfile profile = chord_profile(*dom, w, modes);
      const HilbertProfile hp = hilbert_finite(profile);
      for (int j = 0; j < n_t; ++j) {
        const double u = -1.0 + 2.0 * (j + 0.5) / n_t;
        const double t = profile.B + profile.C * u;
        rows.push_back({theta, t, profile.value(t), hp.value(t)});
      }
    }
    io::write_csv(ctx.path("sinogram.csv"), {"theta", "t", "slice_volume", "hilbert"}, rows);
  }

  finish_run(ctx, "forward", {{"n_centers", data.boundary.size()}, {"n_r", data.n_r}});
}

void run_invert(RunContext& ctx, const Config& cfg) {
  const auto dom = build_domain(cfg);
  const int dim = dom->dimension();
  MeansData data;
  if (cli::has_key(cfg, "invert.input")) {
    data = read_means(cli::get_string(cfg, "invert.input"));
    if (data.dim != dim)
      throw config_error(errc::config_invalid,
                         "config key 'invert.input' holds " + std::to_string(data.dim) +
                             "-dimensional data but 'domain.kind' is " +
                             std::to_string(dim) + "-dimensional");
  } else {
    data = compute_means(cfg, *dom, build_phantom(cfg, dim));
  }

  const FilteredData filtered = radial_filter(data);
  const Backprojection ub(filtered);
  const int n = static_cast<int>(
      cli::get_integer_or(cfg, "resolution.grid_resolution", dim == 2 ? 128 : 48));
  const GridSpec spec = grid_over(*dom, n);
  const ScalarGrid rec = ub.reconstruct(spec, dom.get());
  io::write_f64(ctx.path("reconstruction.f64"), rec.values);
  if (dim == 2) {
    double hi = 0.0;
    for (double v : rec.values) hi = std::max(hi, std::abs(v));
    io::write_pgm16(ctx.path("reconstruction.pgm"), spec.ny, spec.nx, rec.values, 0.0,
                    hi > 0.0 ? hi : 1.0);
  }

  json summary;
  summary["grid"] = dim == 2 ? json::array({spec.nx, spec.ny}) : json::array({spec.nx, spec.ny, spec.nz});
  summary["origin"] = {spec.x0, spec.y0, spec.z0};
  summary["spacing"] = {spec.dx, spec.dy, spec.dz};
  summary["filter_tail"] = filtered.max_tail();
  if (cli::has_key(cfg, "phantom.bumps")) {
    const Phantom ph = build_phantom(cfg, dim);
    const ScalarGrid truth = rasterize(ph, spec);
    const GridErrors err = grid_errors(rec, truth);
    summary["l2_relative_error"] = err.l2_relative;
    summary["sup_relative_error"] = err.sup_relative;
  }
  write_json_file(ctx, "error_summary.json", summary);
  finish_run(ctx, "invert", {{"grid_resolution", n}});
}

void run_kernel(RunContext& ctx, const Config& cfg) {
  const auto dom = build_domain(cfg);
  const int n_pairs = static_cast<int>(cli::get_integer_or(cfg, "kernel.pairs", 200));
  const int modes = static_cast<int>(cli::get_integer_or(cfg, "resolution.mode_count", 513));
  const auto pairs = sample_pairs(*dom, n_pairs, config_seed(cfg));
  std::vector<std::vector<double>> rows;
  rows.reserve(pairs.size());
  double sup = 0.0;
  int skipped = 0;
  for (const auto& [x0, x1] : pairs) {
    const PairChart pc = pair_chart(x0, x1);
    double v;
    try {
      v = error_kernel(*dom, x0, x1, modes);
    } catch (const error& e) {
      if (e.kind() == errc::endpoint_proximity || e.kind() == errc::non_converged_profile) {
        ++skipped;
        continue;
      }
      throw;
    }
    sup = std::max(sup, std::abs(v));
    rows.push_back({x0.x, x0.y, x0.z, x1.x, x1.y, x1.z, pc.omega.x, pc.omega.y, pc.omega.z,
                    pc.s_star, v});
  }
  io::write_csv(ctx.path("kernel_samples.csv"),
                {"x0_x", "x0_y", "x0_z", "x1_x", "x1_y", "x1_z", "omega_x", "omega_y", "omega_z",
                 "s_star", "kernel"},
                rows);
  finish_run(ctx, "kernel",
             {{"pairs", n_pairs}, {"skipped", skipped}, {"kernel_sup", sup}});
}

json report_to_json(const RigidityReport& rep) {
  json j;
  switch (rep.verdict) {
    case RigidityReport::Verdict::ellipsoid_consistent: j["verdict"] = "ellipsoid-consistent"; break;
    case RigidityReport::Verdict::non_ellipsoid: j["verdict"] = "non-ellipsoid"; break;
    case RigidityReport::Verdict::inconclusive: j["verdict"] = "inconclusive"; break;
  }
  j["reasons"] = rep.reasons;
  j["center"] = {{"point", {rep.center.center.x, rep.center.center.y, rep.center.center.z}},
                 {"residual", rep.center.residual}};
  j["quadratic"] = {{"fit_ok", rep.quadratic_fit_ok},
                    {"form", rep.quadratic.form},
                    {"semi_axes", rep.quadratic.semi_axes},
                    {"axes", rep.quadratic.axes},
                    {"residual", rep.quadratic.residual}};
  j["moment_residuals"] = rep.moment_residuals;
  j["kernel_signal"] = rep.kernel_signal;
  j["exponents"] = rep.exponents;  // refused directions serialize as null
  j["irregular_directions"] = rep.irregular_directions;
  j["exponent_deviation"] = rep.exponent_deviation;
  return j;
}

void run_rigidity(RunContext& ctx, const Config& cfg) {
  const auto dom = build_domain(cfg);
  const int n_dirs = static_cast<int>(cli::get_integer_or(cfg, "rigidity.directions", 64));
  const RigidityReport rep = rigidity_report(*dom, n_dirs, config_seed(cfg));
  write_json_file(ctx, "rigidity_report.json", report_to_json(rep));
  json meta;
  meta["directions"] = n_dirs;
  switch (rep.verdict) {
    case RigidityReport::Verdict::ellipsoid_consistent: meta["verdict"] = "ellipsoid-consistent"; break;
    case RigidityReport::Verdict::non_ellipsoid: meta["verdict"] = "non-ellipsoid"; break;
    case RigidityReport::Verdict::inconclusive: meta["verdict"] = "inconclusive"; break;
  }
  finish_run(ctx, "rigidity", meta);
}

void run_neumann(RunContext& ctx, const Config& cfg) {
  const auto dom = build_domain(cfg);
  const Phantom ph = build_phantom(cfg, 2);
  const MeansData data = compute_means(cfg, *dom, ph);
  const FilteredData filtered = radial_filter(data);
  const Backprojection ub(filtered);
  const int modes = static_cast<int>(cli::get_integer_or(cfg, "resolution.mode_count", 513));
  const int buckets = static_cast<int>(cli::get_integer_or(cfg, "resolution.buckets", 720));
  const ErrorKernel kernel(*dom, modes, buckets);

  // Calibrate the error-operator constant on a fine source grid: the
  // measured backprojection error at interior probes against the operator
  // applied to the true phantom.
  const int src_n = static_cast<int>(cli::get_integer_or(cfg, "neumann.source_resolution", 256));
  const int n_probes = static_cast<int>(cli::get_integer_or(cfg, "neumann.calibration_probes", 128));
  const GridSpec src_spec = grid_over(*dom, src_n);
  const ScalarGrid src = rasterize(ph, src_spec);
  // Probes stay inside the 0.9-scaled body: for any source cell the pair then
  // charts safely away from the chord endpoints.
  const Vec3 body_center = estimate_center(*dom).center;
  std::vector<Vec3> inside;
  for (int i = 0; i < src_spec.nx; ++i)
    for (int j = 0; j < src_spec.ny; ++j) {
      const Vec3 x = src_spec.center(i, j, 0);
      if (dom->contains(x) && dom->contains(body_center + (1.0 / 0.9) * (x - body_center)))
        inside.push_back(x);
    }
  const std::size_t stride = std::max<std::size_t>(1, inside.size() / n_probes);
  std::vector<Vec3> probes;
  for (std::size_t i = 0; i < inside.size(); i += stride) probes.push_back(inside[i]);
  std::vector<double> measured, predicted;
  const std::vector<double> applied = apply_error_operator(kernel, src, probes);
  for (std::size_t p = 0; p < probes.size(); ++p) {
    measured.push_back(ph.value(probes[p]) - ub(probes[p]));
    predicted.push_back(applied[p]);
  }
  const CalibrationResult cal = calibrate_constant(measured, predicted);

  const int n = static_cast<int>(cli::get_integer_or(cfg, "neumann.grid_resolution", 64));
  const int steps = static_cast<int>(cli::get_integer_or(cfg, "neumann.steps", 3));
  const GridSpec spec = grid_over(*dom, n);
  const ScalarGrid truth = rasterize(ph, spec);
  const NeumannResult res = neumann_solve(ub, kernel, cal.c, spec, *dom, steps, &truth);

  std::vector<std::vector<double>> trace;
  trace.push_back({0.0, 0.0, res.error_norms[0]});
  for (int s = 1; s <= steps; ++s)
    trace.push_back({static_cast<double>(s), res.correction_norms[s - 1], res.error_norms[s]});
  io::write_csv(ctx.path("neumann_trace.csv"),
                {"step", "correction_norm", "l2_relative_error"}, trace);
  io::write_f64(ctx.path("neumann_final.f64"), res.f.values);
  double hi = 0.0;
  for (double v : res.f.values) hi = std::max(hi, std::abs(v));
  io::write_pgm16(ctx.path("neumann_final.pgm"), spec.ny, spec.nx, res.f.values, 0.0,
                  hi > 0.0 ? hi : 1.0);

  json summary;
  summary["constant"] = cal.c;
  summary["calibration_fit_residual"] = cal.fit_residual;
  summary["calibration_probes"] = probes.size();
  summary["flagged_buckets"] = kernel.flagged_buckets();
  summary["plain_l2_error"] = res.error_norms.front();
  summary["corrected_l2_error"] = res.error_norms.back();
  summary["improvement_factor"] =
      res.error_norms.back() > 0.0 ? res.error_norms.front() / res.error_norms.back()
                                   : std::numeric_limits<double>::infinity();
  write_json_file(ctx, "neumann_summary.json", summary);
  finish_run(ctx, "neumann", {{"steps", steps}, {"grid_resolution", n}});
}

// Fixed side-by-side comparison: a rotated, translated ellipse against the
// quartic superellipse of the same semi-axes. The ellipse's error kernel
// collapses to numerical zero while the superellipse keeps an order-one
// kernel, and the rigidity verdicts split accordingly.
void run_demo(RunContext& ctx, const Config& cfg) {
  const Ellipsoid ellipse(2.0, 1.0, Vec3{0.3, -0.2, 0.0}, 0.7);
  const Superellipse super(4, 2.0, 1.0);
  const int n_pairs = static_cast<int>(cli::get_integer_or(cfg, "kernel.pairs", 200));
  const int modes = static_cast<int>(cli::get_integer_or(cfg, "resolution.mode_count", 513));
  const int n_dirs = static_cast<int>(cli::get_integer_or(cfg, "rigidity.directions", 64));
  const std::uint64_t seed = config_seed(cfg);

  auto kernel_sup_over_pairs = [&](const ConvexDomain& dom) {
    double sup = 0.0;
    for (const auto& [x0, x1] : sample_pairs(dom, n_pairs, seed)) {
      try {
        sup = std::max(sup, std::abs(error_kernel(dom, x0, x1, modes)));
      } catch (const error& e) {
        if (e.kind() != errc::endpoint_proximity && e.kind() != errc::non_converged_profile)
          throw;
      }
    }
    return sup;
  };
  const double sup_ellipse = kernel_sup_over_pairs(ellipse);
  const double sup_super = kernel_sup_over_pairs(super);
  const double ratio = sup_super > 0.0 ? sup_ellipse / sup_super
                                       : std::numeric_limits<double>::infinity();

  const RigidityReport rep_ellipse = rigidity_report(ellipse, n_dirs, seed);
  const RigidityReport rep_super = rigidity_report(super, n_dirs, seed);

  json j;
  j["bodies"] = {{"ellipse",
                  {{"semi_axes", {2.0, 1.0}}, {"center", {0.3, -0.2}}, {"angle", 0.7}}},
                 {"superellipse", {{"exponent", 4}, {"semi_axes", {2.0, 1.0}}}}};
  j["pairs"] = n_pairs;
  j["kernel_sup"] = {{"ellipse", sup_ellipse}, {"superellipse", sup_super}};
  j["kernel_sup_ratio"] = ratio;
  j["ratio_within_1e-3"] = ratio <= 1e-3;
  j["rigidity"] = {{"ellipse", report_to_json(rep_ellipse)},
                   {"superellipse", report_to_json(rep_super)}};
  write_json_file(ctx, "demo_report.json", j);
  finish_run(ctx, "demo",
             {{"kernel_sup_ratio", ratio}, {"ratio_within_1e-3", ratio <= 1e-3}});
}

// ---------------------------------------------------------------------------
// dispatch

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  int threads = -1;
  long seed = -1;
  bool out_given = false;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--config", opt.config_path, "configuration file (TOML subset)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", opt.out_dir, "output directory");
  cmd->add_option("--set", opt.overrides, "override a config key (key.path=value, repeatable)");
  cmd->add_option("--threads", opt.threads, "worker thread count (0 = library default)");
  cmd->add_option("--seed", opt.seed, "random seed override");
}

int classify(const error& e) {
  if (dynamic_cast<const config_error*>(&e)) return 2;
  if (dynamic_cast<const io_error*>(&e)) return 4;
  return 3;
}

int run_experiment(const std::string& name, const CommonOptions& opt,
                   const std::function<void(RunContext&, const Config&)>& body) {
  RunContext ctx;
  std::string kind = "numerical";
  std::string message;
  int code = 3;
  if (!opt.out_dir.empty()) ctx.out_dir = opt.out_dir;  // error.json target on early failure
  try {
    Config cfg;
    if (!opt.config_path.empty()) cfg = cli::parse_config(io::read_text(opt.config_path));
    for (const std::string& s : opt.overrides) cli::apply_override(cfg, s);
    if (opt.seed >= 0) cfg["seed"] = cli::Value{static_cast<double>(opt.seed)};
    if (opt.threads >= 0) cfg["threads"] = cli::Value{static_cast<double>(opt.threads)};
    if (!opt.out_dir.empty()) cfg["out"] = cli::Value{opt.out_dir};

    validate_config(cfg, name);
    resolve_defaults(cfg, name);

    const std::string out = cli::get_string_or(cfg, "out", name + "_out");
    cfg["out"] = cli::Value{out};
    ctx.out_dir = out;
    fs::create_directories(ctx.out_dir);

#ifdef _OPENMP
    const long threads = cli::get_integer_or(cfg, "threads", 0);
    if (threads > 0) omp_set_num_threads(static_cast<int>(threads));
#endif

    io::write_text(ctx.path("config.resolved.toml"), cli::render_config(cfg));
    body(ctx, cfg);
    return 0;
  } catch (const error& e) {
    code = classify(e);
    kind = errc_name(e.kind());
    message = e.what();
  } catch (const fs::filesystem_error& e) {
    code = 4;
    kind = "io-failure";
    message = e.what();
  } catch (const std::exception& e) {
    code = 3;
    kind = "unexpected";
    message = e.what();
  }
  ctx.discard_artifacts();
  std::cerr << "error (" << kind << "): " << message << "\n";
  if (!ctx.out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);
    if (!ec) {
      const json err = {{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
      std::ofstream f(ctx.out_dir / "error.json");
      f << err.dump(2) << "\n";
    }
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Spherical-mean transforms on convex domains: forward data, universal "
      "filtered backprojection, error-kernel diagnostics and ellipsoid "
      "rigidity tests"};
  app.require_subcommand(1);

  std::map<std::string, CommonOptions> opts;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"forward", "sample boundary spherical means of a phantom"},
      {"invert", "filtered backprojection reconstruction with error summary"},
      {"kernel", "sample the reconstruction-error kernel over probe pairs"},
      {"rigidity", "run the ellipsoid rigidity diagnostics"},
      {"neumann", "calibrated Neumann correction of the backprojection"},
      {"demo", "ellipse vs superellipse side-by-side comparison"},
  };
  for (const auto& [name, desc] : commands) add_common(app.add_subcommand(name, desc), opts[name]);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  CommonOptions& opt = opts[name];
  const std::map<std::string, std::function<void(RunContext&, const Config&)>> runners = {
      {"forward", run_forward}, {"invert", run_invert},   {"kernel", run_kernel},
      {"rigidity", run_rigidity}, {"neumann", run_neumann}, {"demo", run_demo},
  };
  return run_experiment(name, opt, runners.at(name));
}
