#include "tsc/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "tsc/bench.hpp"
#include "tsc/dataio.hpp"
#include "tsc/errors.hpp"
#include "tsc/liegroup.hpp"

namespace fs = std::filesystem;

namespace tsc {
namespace {

// Stream ids for rngs that must be independent of the training stream.
constexpr std::uint64_t kPoolStream = 0xda7aULL;

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& val, int line) {
  char* end = nullptr;
  const double v = std::strtod(val.c_str(), &end);
  if (end == val.c_str() || *end != '\0' || !std::isfinite(v))
    throw ConfigError("config line " + std::to_string(line) +
                      ": bad number for " + key + ": '" + val + "'");
  return v;
}

long long parse_int(const std::string& key, const std::string& val, int line) {
  char* end = nullptr;
  const long long v = std::strtoll(val.c_str(), &end, 10);
  if (end == val.c_str() || *end != '\0')
    throw ConfigError("config line " + std::to_string(line) +
                      ": bad integer for " + key + ": '" + val + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& val, int line) {
  if (val == "1" || val == "true") return true;
  if (val == "0" || val == "false") return false;
  throw ConfigError("config line " + std::to_string(line) +
                    ": bad boolean for " + key + ": '" + val + "'");
}

void apply_key(RunConfig& rc, const std::string& key, const std::string& val,
               int line) {
  TrainConfig& t = rc.train;
  auto d = [&] { return parse_double(key, val, line); };
  auto i = [&] { return static_cast<int>(parse_int(key, val, line)); };
  auto b = [&] { return parse_bool(key, val, line); };

  if (key == "side") t.side = i();
  else if (key == "roots") t.roots = i();
  else if (key == "branching") t.branching = i();
  else if (key == "depth") t.depth = i();
  else if (key == "lambda_w") t.lambda_w = d();
  else if (key == "lambda_base") t.lambda_base = d();
  else if (key.rfind("lambda_mult", 0) == 0 && key.size() == 12 &&
           key[11] >= '1' && key[11] <= '6')
    t.lambda_mult[key[11] - '1'] = d();
  else if (key == "eta") t.eta = d();
  else if (key == "eta_decay") t.eta_decay = d();
  else if (key == "backtrack_max") t.backtrack_max = i();
  else if (key == "batch_size") t.batch_size = i();
  else if (key == "epochs") t.epochs = i();
  else if (key == "grad_samples") t.grad_samples = i();
  else if (key == "grad_fixed_nodes") t.grad_fixed_nodes = b();
  else if (key == "x_max") t.x_max = d();
  else if (key == "underuse_threshold") t.underuse_threshold = d();
  else if (key == "sigma_reinit") t.sigma_reinit = d();
  else if (key == "reinit_period") t.reinit_period = i();
  else if (key == "sigma_init") t.sigma_init = d();
  else if (key == "seed")
    t.seed = static_cast<std::uint64_t>(parse_int(key, val, line));
  else if (key == "num_threads") t.num_threads = i();
  else if (key == "pool_size") rc.pool_size = i();
  else if (key == "eval_fraction") rc.eval_fraction = d();
  else if (key == "sc_epochs") rc.sc_epochs = i();
  else
    throw ConfigError("config line " + std::to_string(line) +
                      ": unknown key '" + key + "'");
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig rc;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    apply_key(rc, key, val, lineno);
  }
  return rc;
}

std::pair<int, int> parse_layout(const std::string& text) {
  const std::size_t x = text.find('x');
  if (x == std::string::npos || x == 0 || x + 1 >= text.size())
    throw ConfigError("bad layout '" + text + "' (expected e.g. 4x8)");
  try {
    std::size_t used = 0;
    const int v = std::stoi(text.substr(0, x), &used);
    if (used != x) throw std::invalid_argument("");
    const std::string rest = text.substr(x + 1);
    const int b = std::stoi(rest, &used);
    if (used != rest.size()) throw std::invalid_argument("");
    if (v < 1 || b < 1) throw std::invalid_argument("");
    return {v, b};
  } catch (const std::exception&) {
    throw ConfigError("bad layout '" + text + "' (expected e.g. 4x8)");
  }
}

namespace {

RunConfig load_run_config(const std::string& config_path,
                          const std::optional<std::uint64_t>& seed_override) {
  RunConfig rc;
  if (!config_path.empty()) {
    std::ifstream f(config_path, std::ios::binary);
    if (!f) throw ConfigError("cannot open config file " + config_path);
    std::ostringstream ss;
    ss << f.rdbuf();
    rc = parse_config_text(ss.str());
  }
  if (seed_override) rc.train.seed = *seed_override;
  rc.train.validate();
  if (rc.pool_size < 1) throw ConfigError("config: pool_size must be >= 1");
  if (rc.eval_fraction <= 0.0 || rc.eval_fraction >= 1.0)
    throw ConfigError("config: eval_fraction must lie in (0, 1)");
  return rc;
}

// Image sources: explicit .pgm files, or directories scanned for *.pgm in
// name order so runs are reproducible across filesystems.
std::vector<std::string> collect_image_files(
    const std::vector<std::string>& sources) {
  std::vector<std::string> files;
  for (const std::string& src : sources) {
    std::error_code ec;
    if (fs::is_directory(src, ec)) {
      std::vector<std::string> here;
      for (const auto& entry : fs::directory_iterator(src, ec))
        if (entry.path().extension() == ".pgm")
          here.push_back(entry.path().string());
      if (here.empty())
        throw DataError("no .pgm files in directory " + src);
      std::sort(here.begin(), here.end());
      files.insert(files.end(), here.begin(), here.end());
    } else {
      files.push_back(src);
    }
  }
  return files;
}

PatchBatch build_pool(const std::vector<std::string>& image_sources,
                      int synthetic_count, int side, int count, Rng& rng) {
  if (synthetic_count > 0) {
    if (side != 8)
      throw ConfigError("synthetic lines are 8x8; set side = 8");
    return gen_synthetic_lines(synthetic_count, side, rng);
  }
  if (image_sources.empty())
    throw ConfigError("no data source: pass --images or --synthetic-lines");
  const std::vector<std::string> files = collect_image_files(image_sources);
  std::vector<Mat> images;
  std::vector<std::string> names;
  for (const std::string& f : files) {
    images.push_back(load_grayscale(f));
    names.push_back(fs::path(f).filename().string());
  }
  return sample_patches(images, names, side, count, rng);
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw DataError("short write to " + path.string());
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"transformational sparse coding: training and benchmarks"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed_override;
  bool quiet = false;
  app.add_option("--config", config_path, "flat key = value config file");
  app.add_option("--seed", seed_override, "seed override");
  app.add_option("--out", out_dir, "output directory");
  app.add_flag("--quiet", quiet, "suppress progress output");

  // Shared data-source flags (train / compare / sweep).
  struct DataArgs {
    std::vector<std::string> images;
    int synthetic = 0;
  };
  auto add_data_args = [](CLI::App* cmd, DataArgs& da) {
    cmd->add_option("--images", da.images,
                    ".pgm files or directories of them");
    cmd->add_option("--synthetic-lines", da.synthetic,
                    "use N synthetic line patches instead of images");
  };

  int exit_code = 0;

  CLI::App* cmd_train = app.add_subcommand("train", "fit a forest");
  DataArgs train_data;
  add_data_args(cmd_train, train_data);
  std::optional<int> epochs_override;
  cmd_train->add_option("--epochs", epochs_override,
                        "override the configured epoch count");
  cmd_train->callback([&]() {
    RunConfig rc = load_run_config(config_path, seed_override);
    if (epochs_override) {
      rc.train.epochs = *epochs_override;
      rc.train.validate();
    }
    Rng pool_rng = Rng(rc.train.seed).fork(kPoolStream);
    const PatchBatch pool =
        build_pool(train_data.images, train_data.synthetic, rc.train.side,
                   rc.pool_size, pool_rng);
    fs::create_directories(out_dir);
    const fs::path metrics_path = fs::path(out_dir) / "metrics.txt";
    const fs::path model_path = fs::path(out_dir) / "model.tsc";
    std::ofstream metrics(metrics_path, std::ios::binary);
    if (!metrics)
      throw DataError("cannot open " + metrics_path.string() + " for writing");
    const TrainResult res = train(rc.train, pool, &metrics);
    metrics.close();
    save_model(res.forest, model_path.string());
    if (!quiet) {
      out << "wrote " << model_path.string() << " and "
          << metrics_path.string() << "\n";
      if (res.metrics.epochs.empty()) {
        out << "0 epochs trained; model is the seeded initialization\n";
      } else {
        const EpochRecord& last = res.metrics.epochs.back();
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "%d epochs; final mse %.6g, sparsity %.4g, %zu re-inits\n",
                      static_cast<int>(res.metrics.epochs.size()),
                      last.loss.mse, last.sparsity,
                      res.metrics.reinit_log.size());
        out << buf;
      }
    }
  });

  CLI::App* cmd_compare =
      app.add_subcommand("compare", "TSC vs sparse-coding table");
  DataArgs compare_data;
  add_data_args(cmd_compare, compare_data);
  std::vector<std::string> row_args;
  cmd_compare->add_option("--row", row_args,
                          "comparison row as LAMBDA:VxB (repeatable)")
      ->required();
  cmd_compare->callback([&]() {
    const RunConfig rc = load_run_config(config_path, seed_override);
    std::vector<CompareRowSpec> specs;
    for (const std::string& raw : row_args) {
      const std::size_t colon = raw.find(':');
      if (colon == std::string::npos)
        throw ConfigError("bad row '" + raw + "' (expected LAMBDA:VxB)");
      CompareRowSpec spec;
      spec.lambda_w = parse_double("--row", raw.substr(0, colon), 0);
      const auto [v, b] = parse_layout(raw.substr(colon + 1));
      spec.roots = v;
      spec.branching = b;
      specs.push_back(spec);
    }
    Rng pool_rng = Rng(rc.train.seed).fork(kPoolStream);
    const PatchBatch pool =
        build_pool(compare_data.images, compare_data.synthetic, rc.train.side,
                   rc.pool_size, pool_rng);
    CompareOptions opts;
    opts.train = rc.train;
    opts.sc_epochs = rc.sc_epochs;
    opts.eval_fraction = rc.eval_fraction;
    const std::vector<CompareRow> rows =
        run_comparison(specs, pool, opts, quiet ? nullptr : &err);
    fs::create_directories(out_dir);
    std::ostringstream csv;
    write_comparison_csv(rows, csv);
    write_text_file(fs::path(out_dir) / "compare.csv", csv.str());
    out << format_comparison_table(rows);
    for (const CompareRow& r : rows)
      if (!r.ok && exit_code == 0) exit_code = r.error_exit;
  });

  CLI::App* cmd_export =
      app.add_subcommand("export-features", "render leaves or roots as a PGM");
  std::string export_model, export_image;
  std::string export_mode = "leaves";
  cmd_export->add_option("--model", export_model, "model checkpoint")
      ->required();
  cmd_export->add_option("--mode", export_mode, "leaves|roots")
      ->check(CLI::IsMember({"leaves", "roots"}));
  cmd_export->add_option("--out-image", export_image,
                         "output path (default <out>/features.pgm)");
  cmd_export->callback([&]() {
    load_run_config(config_path, seed_override);  // surface config errors
    const Forest forest = load_model(export_model);
    const GeneratorSet gens = build_generators(forest.side);
    const Mat sheet = feature_grid_image(
        forest, gens,
        export_mode == "roots" ? GridMode::kRoots : GridMode::kLeaves);
    fs::path path = export_image.empty()
                        ? fs::path(out_dir) / "features.pgm"
                        : fs::path(export_image);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    save_pgm(sheet, path.string());
    if (!quiet)
      out << "wrote " << path.string() << " (" << sheet.rows() << "x"
          << sheet.cols() << ")\n";
  });

  CLI::App* cmd_sweep =
      app.add_subcommand("sweep", "reconstruction-error surface over 2 axes");
  DataArgs sweep_data;
  add_data_args(cmd_sweep, sweep_data);
  std::string sweep_model, sweep_range;
  std::string sweep_axes = "1,2";
  std::string sweep_grid = "17x17";
  int sweep_tree = 0;
  int sweep_count = 2000;
  cmd_sweep->add_option("--model", sweep_model, "model checkpoint")
      ->required();
  cmd_sweep->add_option("--tree", sweep_tree, "tree whose root is swept");
  cmd_sweep->add_option("--axes", sweep_axes,
                        "generator pair, 1-based (default 1,2)");
  cmd_sweep->add_option("--grid", sweep_grid, "grid points, e.g. 17x17");
  cmd_sweep->add_option("--range", sweep_range,
                        "ranges LO:HI,LO:HI (default per-generator)");
  cmd_sweep->add_option("--count", sweep_count, "patches to average over");
  cmd_sweep->callback([&]() {
    const RunConfig rc = load_run_config(config_path, seed_override);
    const Forest forest = load_model(sweep_model);
    if (sweep_tree < 0 ||
        static_cast<std::size_t>(sweep_tree) >= forest.trees.size())
      throw ConfigError("sweep: tree index out of range");
    if (sweep_count < 1) throw ConfigError("sweep: count must be >= 1");

    SweepSpec spec;
    {
      const std::size_t comma = sweep_axes.find(',');
      if (comma == std::string::npos)
        throw ConfigError("bad --axes '" + sweep_axes + "' (expected J,K)");
      spec.axis_a = static_cast<int>(parse_int("--axes", trim(sweep_axes.substr(0, comma)), 0)) - 1;
      spec.axis_b = static_cast<int>(parse_int("--axes", trim(sweep_axes.substr(comma + 1)), 0)) - 1;
      if (spec.axis_a < 0 || spec.axis_a >= kNumGenerators || spec.axis_b < 0 ||
          spec.axis_b >= kNumGenerators || spec.axis_a == spec.axis_b)
        throw ConfigError("bad --axes '" + sweep_axes +
                          "': need two distinct generators in 1..6");
      const auto [ga, gb] = parse_layout(sweep_grid);
      spec.grid_a = ga;
      spec.grid_b = gb;
      const auto half = default_sweep_halfranges();
      spec.lo_a = -half[spec.axis_a];
      spec.hi_a = half[spec.axis_a];
      spec.lo_b = -half[spec.axis_b];
      spec.hi_b = half[spec.axis_b];
      if (!sweep_range.empty()) {
        const std::size_t c = sweep_range.find(',');
        if (c == std::string::npos)
          throw ConfigError("bad --range (expected LO:HI,LO:HI)");
        auto parse_pair = [&](const std::string& s, double& lo, double& hi) {
          const std::size_t colon = s.find(':');
          if (colon == std::string::npos)
            throw ConfigError("bad --range (expected LO:HI,LO:HI)");
          lo = parse_double("--range", trim(s.substr(0, colon)), 0);
          hi = parse_double("--range", trim(s.substr(colon + 1)), 0);
          if (!(lo < hi)) throw ConfigError("bad --range: need LO < HI");
        };
        parse_pair(sweep_range.substr(0, c), spec.lo_a, spec.hi_a);
        parse_pair(sweep_range.substr(c + 1), spec.lo_b, spec.hi_b);
      }
    }

    Rng pool_rng = Rng(rc.train.seed).fork(kPoolStream);
    const PatchBatch batch =
        build_pool(sweep_data.images, sweep_data.synthetic, forest.side,
                   sweep_count, pool_rng);
    const GeneratorSet gens = build_generators(forest.side);
    const SweepSurface surface =
        sweep_surface(gens, forest.trees[sweep_tree].root, batch, spec);

    fs::create_directories(out_dir);
    std::ostringstream csv;
    write_sweep_csv(surface, csv);
    write_text_file(fs::path(out_dir) / "sweep.csv", csv.str());
    save_pgm(surface.normalized, (fs::path(out_dir) / "sweep.pgm").string());
    if (!quiet)
      out << "wrote sweep.csv and sweep.pgm; minimum at ("
          << surface.argmin_a << ", " << surface.argmin_b << ")\n";
  });

  CLI::App* cmd_dof =
      app.add_subcommand("dof", "degrees-of-freedom report for a layout");
  std::string dof_layout;
  int dof_pixels = 100;
  int dof_group = 6;
  cmd_dof->add_option("--layout", dof_layout, "forest layout VxB")->required();
  cmd_dof->add_option("--pixels", dof_pixels, "patch dimension M (default 100)");
  cmd_dof->add_option("--group-dim", dof_group,
                      "transform parameters per branch (3 or 6)")
      ->check(CLI::IsMember({3, 6}));
  cmd_dof->callback([&]() {
    const auto [v, b] = parse_layout(dof_layout);
    if (dof_pixels < 1) throw ConfigError("dof: pixels must be >= 1");
    const DofReport rep = dof_report(v, b, dof_pixels, dof_group);
    out << "df_tsc " << rep.df_tsc << "\n";
    out << "df_sc " << rep.df_sc << "\n";
    out << "ratio " << format_ratio(rep.ratio) << "\n";
    if (!rep.note.empty()) out << rep.note << "\n";
  });

  CLI::App* cmd_lines =
      app.add_subcommand("gen-lines", "synthetic line patches as a PGM sheet");
  int lines_count = 64;
  std::string lines_sheet;
  cmd_lines->add_option("--count", lines_count, "number of patches");
  cmd_lines->add_option("--sheet", lines_sheet,
                        "output path (default <out>/lines.pgm)");
  cmd_lines->callback([&]() {
    const RunConfig rc = load_run_config(config_path, seed_override);
    if (lines_count < 1) throw ConfigError("gen-lines: count must be >= 1");
    Rng rng = Rng(rc.train.seed).fork(kPoolStream);
    const PatchBatch batch = gen_synthetic_lines(lines_count, 8, rng);
    const int side = batch.side;
    const int cols = static_cast<int>(
        std::ceil(std::sqrt(static_cast<double>(lines_count))));
    const int rows = (lines_count + cols - 1) / cols;
    Mat sheet(rows * side + (rows - 1), cols * side + (cols - 1));
    for (int i = 0; i < lines_count; ++i) {
      const double* cell = batch.patches.row(i);
      double lo = cell[0], hi = cell[0];
      for (int p = 0; p < side * side; ++p) {
        lo = std::min(lo, cell[p]);
        hi = std::max(hi, cell[p]);
      }
      const double range = hi - lo;
      const int r0 = (i / cols) * (side + 1), c0 = (i % cols) * (side + 1);
      for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c)
          sheet(r0 + r, c0 + c) =
              range > 0 ? (cell[r * side + c] - lo) / range : 0.5;
    }
    fs::path path = lines_sheet.empty() ? fs::path(out_dir) / "lines.pgm"
                                        : fs::path(lines_sheet);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    save_pgm(sheet, path.string());
    if (!quiet) out << "wrote " << path.string() << "\n";
  });

  std::vector<const char*> argv;
  argv.push_back("tsc");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}

}  // namespace tsc
