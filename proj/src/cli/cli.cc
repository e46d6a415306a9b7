// Copyright (c) 2026 The Hyperfuse Authors. All Rights Reserved
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hyperfuse/cli.h"

#include <CLI11.hpp>
#include <json.hpp>
#include <pthread.h>
#include <signal.h>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "hyperfuse/chunkstore/bench.h"
#include "hyperfuse/chunkstore/block_server.h"
#include "hyperfuse/chunkstore/store.h"
#include "hyperfuse/datacube.h"
#include "hyperfuse/error.h"
#include "hyperfuse/fusion.h"
#include "hyperfuse/lstm.h"
#include "hyperfuse/metrics.h"
#include "hyperfuse/rng.h"
#include "hyperfuse/simulate.h"

namespace hyperfuse::cli {

namespace fs = std::filesystem;
namespace cs = chunkstore;
using nlohmann::ordered_json;

fs::path resolve_output(const fs::path& out_dir, const std::string& path) {
  if (path.empty()) throw Error(ErrorCode::kUsageError, "empty output path");
  const fs::path base = fs::weakly_canonical(fs::absolute(out_dir));
  fs::path p(path);
  if (p.is_relative()) p = base / p;
  p = fs::weakly_canonical(p);
  const fs::path rel = p.lexically_relative(base);
  if (rel.empty() || rel == "." || *rel.begin() == "..") {
    throw Error(ErrorCode::kUsageError,
                "output '" + path + "' is not inside the output directory " + base.string());
  }
  return p;
}

namespace {

constexpr char kVersion[] = "0.1.0";
constexpr std::uint64_t kBenchDataStream = 3;

struct Globals {
  std::uint64_t seed = 0;
  bool verbose = false;
  std::string out_dir;
};

// Per-invocation state shared by the subcommand actions.
class Context {
 public:
  Context(const Globals& g, std::ostream& out, std::ostream& err)
      : globals_(g), out_(out), err_(err) {}

  void prepare() {
    std::error_code ec;
    fs::create_directories(globals_.out_dir, ec);
    if (!fs::is_directory(globals_.out_dir)) {
      throw Error(ErrorCode::kIoError, "cannot create output directory " + globals_.out_dir);
    }
    base_ = fs::weakly_canonical(fs::absolute(globals_.out_dir));
  }

  // Resolves an output path under the output directory, creating parents.
  fs::path output(const std::string& path) {
    fs::path p = resolve_output(base_, path);
    fs::create_directories(p.parent_path());
    outputs_.push_back(p.lexically_relative(base_).generic_string());
    return p;
  }

  // A directory that a storage node or server writes into; same confinement.
  fs::path storage_dir(const std::string& path) {
    fs::path p = resolve_output(base_, path);
    fs::create_directories(p);
    return p;
  }

  void metric(const std::string& name, double v) {
    out_ << "metric=" << name << " value=";
    if (v == std::floor(v) && std::fabs(v) < 0x1p53) {
      out_ << static_cast<long long>(v);
    } else {
      out_ << metrics::format_number(v);
    }
    out_ << '\n';
  }

  void log(const std::string& msg) {
    if (globals_.verbose) err_ << msg << '\n';
  }

  std::uint64_t seed() const { return globals_.seed; }
  const std::vector<std::string>& outputs() const { return outputs_; }
  const fs::path& base() const { return base_; }
  std::ostream& out() { return out_; }

 private:
  const Globals& globals_;
  std::ostream& out_;
  std::ostream& err_;
  fs::path base_;
  std::vector<std::string> outputs_;
};

using Action = std::function<void(Context&)>;

void require_input(const std::string& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw Error(ErrorCode::kMissingFile, path);
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open for writing: " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

std::vector<std::size_t> parse_size_list(const std::string& text, const char* what) {
  std::vector<std::size_t> out;
  if (text.empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t v = 0;
    auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size()) {
      throw Error(ErrorCode::kUsageError, std::string("bad ") + what + " '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string loss_csv(const std::vector<double>& losses) {
  std::string s = "epoch,loss\n";
  for (std::size_t e = 0; e < losses.size(); ++e) {
    s += std::to_string(e) + "," + metrics::format_number(losses[e]) + "\n";
  }
  return s;
}

void report_metrics(Context& ctx, const std::string& prefix, const metrics::QualityReport& r) {
  ctx.metric(prefix + "mean_ssim", r.mean_ssim);
  ctx.metric(prefix + "std_ssim", r.std_ssim);
  ctx.metric(prefix + "mean_psnr", r.mean_psnr);
  ctx.metric(prefix + "std_psnr", r.std_psnr);
}

const std::map<std::string, metrics::SsimMode> kModes = {
    {"global", metrics::SsimMode::kGlobal}, {"windowed", metrics::SsimMode::kWindowedMean}};
const std::map<std::string, metrics::RangePolicy> kRangePolicies = {
    {"reference", metrics::RangePolicy::kReferenceBand}, {"fixed", metrics::RangePolicy::kFixed}};
const std::map<std::string, simulate::DecimationMode> kDecimationModes = {
    {"mean", simulate::DecimationMode::kMean}, {"subsample", simulate::DecimationMode::kSubsample}};

// SSIM flags shared by fuse, eval and repro.
void add_ssim_options(CLI::App* sub, metrics::SsimConfig& cfg) {
  sub->add_option("--mode", cfg.mode, "SSIM mode: global or windowed")
      ->transform(CLI::CheckedTransformer(kModes, CLI::ignore_case))
      ->default_str("global");
  sub->add_option("--window", cfg.window, "Window side for windowed SSIM")
      ->check(CLI::PositiveNumber);
  sub->add_option("--range-policy", cfg.range,
                  "SSIM dynamic range: reference (per-band max-min) or fixed (--dynamic-range)")
      ->transform(CLI::CheckedTransformer(kRangePolicies, CLI::ignore_case))
      ->default_str("reference");
  sub->add_option("--dynamic-range", cfg.L, "L for --range-policy fixed")
      ->check(CLI::PositiveNumber);
}

// --- synth ---------------------------------------------------------------

Action add_synth(CLI::App& app) {
  struct Opts {
    std::size_t rows = 32, cols = 32, bands = 8;
    double sigma_lo = 2.5, sigma_hi = 5.0;
    std::string out = "synth.hdr";
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("synth", "Write a seeded smooth synthetic cube");
  sub->add_option("--rows", o->rows, "Rows")->check(CLI::PositiveNumber);
  sub->add_option("--cols", o->cols, "Columns")->check(CLI::PositiveNumber);
  sub->add_option("--bands", o->bands, "Bands")->check(CLI::PositiveNumber);
  sub->add_option("--sigma-lo", o->sigma_lo, "Smallest Gaussian width (px, 32x32 scale)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--sigma-hi", o->sigma_hi, "Largest Gaussian width (px, 32x32 scale)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--out", o->out, "Output header");
  return [o](Context& ctx) {
    if (o->sigma_hi < o->sigma_lo) {
      throw Error(ErrorCode::kUsageError, "--sigma-hi must be >= --sigma-lo");
    }
    const fs::path out = ctx.output(o->out);
    HyperCube cube = simulate::synthetic_smooth_cube(o->rows, o->cols, o->bands, ctx.seed(),
                                                     o->sigma_lo, o->sigma_hi);
    save_cube(cube, out);
    ctx.metric("rows", static_cast<double>(cube.rows()));
    ctx.metric("cols", static_cast<double>(cube.cols()));
    ctx.metric("bands", static_cast<double>(cube.bands()));
  };
}

// --- simulate ------------------------------------------------------------

Action add_simulate(CLI::App& app) {
  struct Opts {
    std::string in, out_hsi = "hsi_lo.hdr", out_msi = "msi.hdr";
    std::size_t factor = 4;
    simulate::DecimationMode mode = simulate::DecimationMode::kMean;
    std::string ranges = "blue=445:516,green=506:595,red=632:698,nir=757:853";
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("simulate", "Derive low-resolution HSI and MSI from a cube");
  sub->add_option("--in", o->in, "Reference cube header")->required();
  sub->add_option("--factor", o->factor, "Spatial decimation factor (>= 2)")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20));
  sub->add_option("--decimation", o->mode, "Decimation: mean or subsample")
      ->transform(CLI::CheckedTransformer(kDecimationModes, CLI::ignore_case))
      ->default_str("mean");
  sub->add_option("--ranges", o->ranges, "MSI band ranges name=lo:hi,... (nm)");
  sub->add_option("--out-hsi", o->out_hsi, "Low-resolution HSI header");
  sub->add_option("--out-msi", o->out_msi, "MSI header");
  return [o](Context& ctx) {
    simulate::SimulationSpec spec;
    spec.decimation_factor = o->factor;
    spec.mode = o->mode;
    spec.msi_ranges = simulate::parse_ranges(o->ranges);
    spec.validate();
    require_input(o->in);
    const fs::path out_hsi = ctx.output(o->out_hsi);
    const fs::path out_msi = ctx.output(o->out_msi);

    HyperCube ref = load_cube(o->in);
    HyperCube lo = simulate::decimate(ref, spec.decimation_factor, spec.mode);
    HyperCube msi = simulate::synthesize_msi(ref, spec.msi_ranges);
    save_cube(lo, out_hsi);
    save_cube(msi, out_msi);
    ctx.metric("hsi_rows", static_cast<double>(lo.rows()));
    ctx.metric("hsi_cols", static_cast<double>(lo.cols()));
    ctx.metric("msi_bands", static_cast<double>(msi.bands()));
  };
}

// --- fuse / repro --------------------------------------------------------

struct FuseOpts {
  std::string lambda = "lambda3";
  double train_frac = 0.8;
  std::size_t count = 0;
  std::size_t epochs = 400;
  double lr = 0.5;
  std::size_t hidden = 8;
  std::size_t factor = 4;
  double clip_norm = 0;
  std::string ranges = "blue=445:516,green=506:595,red=632:698,nir=757:853";
  metrics::SsimConfig ssim;
  std::string out = "fused.hdr";
  std::string report = "report.csv";
  std::string baseline_report = "baseline.csv";
  std::string checkpoint = "lstm.ckpt";
  std::string loss = "loss.csv";
  std::string pgm_bands;
};

void add_fuse_options(CLI::App* sub, FuseOpts& o) {
  sub->add_option("--lambda", o.lambda, "Patch sizes: lambda1|lambda2|lambda3 or e.g. 16,14,12,10");
  sub->add_option("--train-frac", o.train_frac, "Fraction of grid positions used for training")
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--count", o.count, "Training window count (0: from --train-frac)");
  sub->add_option("--epochs", o.epochs, "Gradient-descent epochs")->check(CLI::PositiveNumber);
  sub->add_option("--lr", o.lr, "Learning rate")->check(CLI::PositiveNumber);
  sub->add_option("--hidden", o.hidden, "LSTM hidden units")->check(CLI::PositiveNumber);
  sub->add_option("--factor", o.factor, "Spatial decimation factor (>= 2)")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20));
  sub->add_option("--clip-norm", o.clip_norm, "Global gradient-norm clip (0: off)")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--ranges", o.ranges, "MSI band ranges name=lo:hi,... (nm)");
  add_ssim_options(sub, o.ssim);
  sub->add_option("--out", o.out, "Fused cube header");
  sub->add_option("--report", o.report, "Fused-vs-reference report CSV");
  sub->add_option("--baseline-report", o.baseline_report,
                  "Nearest-neighbour baseline report CSV");
  sub->add_option("--checkpoint", o.checkpoint, "Trained LSTM checkpoint");
  sub->add_option("--loss", o.loss, "Per-epoch loss CSV");
  sub->add_option("--pgm-bands", o.pgm_bands, "Comma list of bands to export as PGM");
}

fusion::FusionConfig to_fusion_config(const FuseOpts& o, std::uint64_t seed) {
  fusion::FusionConfig cfg;
  cfg.patch_set = fusion::parse_patch_set(o.lambda);
  cfg.patch_set.train_fraction = o.train_frac;
  if (o.count > 0) cfg.patch_set.count = o.count;
  cfg.epochs = o.epochs;
  cfg.learning_rate = o.lr;
  cfg.hidden_units = o.hidden;
  cfg.seed = seed;
  cfg.decimation_factor = o.factor;
  cfg.msi_ranges = simulate::parse_ranges(o.ranges);
  if (o.clip_norm > 0) cfg.clip_norm = o.clip_norm;
  cfg.ssim = o.ssim;
  cfg.validate();
  return cfg;
}

struct FuseOutputs {
  fs::path cube, report, baseline, checkpoint, loss;
  std::vector<std::size_t> pgm_bands;
};

FuseOutputs resolve_fuse_outputs(Context& ctx, const FuseOpts& o) {
  FuseOutputs out;
  out.cube = ctx.output(o.out);
  out.report = ctx.output(o.report);
  out.baseline = ctx.output(o.baseline_report);
  out.checkpoint = ctx.output(o.checkpoint);
  out.loss = ctx.output(o.loss);
  out.pgm_bands = parse_size_list(o.pgm_bands, "band index");
  return out;
}

fusion::FusionResult run_fusion(Context& ctx, const HyperCube& ref, const FuseOpts& o,
                                const fusion::FusionConfig& cfg, const FuseOutputs& paths) {
  for (std::size_t b : paths.pgm_bands) {
    if (b >= ref.bands()) {
      throw Error(ErrorCode::kBandOutOfRange, "--pgm-bands " + std::to_string(b) + " >= " +
                                                  std::to_string(ref.bands()));
    }
  }
  ctx.log("fusing " + std::to_string(ref.rows()) + "x" + std::to_string(ref.cols()) + "x" +
          std::to_string(ref.bands()) + " with sizes " + o.lambda);
  fusion::FusionResult res = fusion::fuse_pipeline(ref, cfg);
  save_cube(res.fused, paths.cube);
  metrics::write_report_csv(res.report, paths.report);
  metrics::write_report_csv(res.baseline, paths.baseline);
  lstm::save_checkpoint(res.training.params, paths.checkpoint);
  write_text(paths.loss, loss_csv(res.training.loss_history));
  for (std::size_t b : paths.pgm_bands) {
    const std::string stem = paths.cube.stem().string();
    const fs::path dir = paths.cube.parent_path();
    const std::string fused_pgm = stem + "_band" + std::to_string(b) + ".pgm";
    const std::string ref_pgm = "reference_band" + std::to_string(b) + ".pgm";
    export_band_image(band(res.fused, b), ctx.output((dir / fused_pgm).string()));
    export_band_image(band(res.reference, b), ctx.output((dir / ref_pgm).string()));
  }
  ctx.metric("patches", static_cast<double>(res.patch_count));
  ctx.metric("initial_loss", res.training.loss_history.front());
  ctx.metric("final_loss", res.training.loss_history.back());
  report_metrics(ctx, "", res.report);
  report_metrics(ctx, "baseline_", res.baseline);
  return res;
}

Action add_fuse(CLI::App& app) {
  struct Opts {
    std::string ref;
    FuseOpts fuse;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("fuse", "Simulate inputs from a reference cube and fuse them");
  sub->add_option("--ref", o->ref, "Reference cube header")->required();
  add_fuse_options(sub, o->fuse);
  return [o](Context& ctx) {
    const fusion::FusionConfig cfg = to_fusion_config(o->fuse, ctx.seed());
    require_input(o->ref);
    const FuseOutputs paths = resolve_fuse_outputs(ctx, o->fuse);
    run_fusion(ctx, load_cube(o->ref), o->fuse, cfg, paths);
  };
}

// --- eval ----------------------------------------------------------------

Action add_eval(CLI::App& app) {
  struct Opts {
    std::string fused, ref, out = "eval.csv";
    bool crop_ref = false;
    metrics::SsimConfig ssim;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("eval", "Per-band SSIM/PSNR of a cube against a reference");
  sub->add_option("--fused", o->fused, "Cube to evaluate")->required();
  sub->add_option("--ref", o->ref, "Reference cube header")->required();
  sub->add_option("--out", o->out, "Report CSV");
  sub->add_flag("--crop-ref", o->crop_ref,
                "Crop the reference to the evaluated cube's rows and columns first");
  add_ssim_options(sub, o->ssim);
  return [o](Context& ctx) {
    o->ssim.validate();
    require_input(o->fused);
    require_input(o->ref);
    const fs::path out = ctx.output(o->out);
    HyperCube fused = load_cube(o->fused);
    HyperCube ref = load_cube(o->ref);
    if (o->crop_ref) ref = crop(ref, fused.rows(), fused.cols());
    metrics::QualityReport r = metrics::evaluate_cube(fused, ref, o->ssim);
    metrics::write_report_csv(r, out);
    report_metrics(ctx, "", r);
  };
}

// --- export --------------------------------------------------------------

Action add_export(CLI::App& app) {
  struct Opts {
    std::string in, out = "band.pgm";
    std::size_t band = 0;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("export", "Write one band as an 8-bit PGM");
  sub->add_option("--in", o->in, "Cube header")->required();
  sub->add_option("--band", o->band, "Band index");
  sub->add_option("--out", o->out, "PGM path");
  return [o](Context& ctx) {
    require_input(o->in);
    const fs::path out = ctx.output(o->out);
    export_band_image(band(load_cube(o->in), o->band), out);
  };
}

// --- repro ---------------------------------------------------------------

Action add_repro(CLI::App& app) {
  struct Opts {
    std::string ref;
    FuseOpts fuse;
  };
  auto o = std::make_shared<Opts>();
  o->fuse.lambda.clear();
  o->fuse.report = "fused_report.csv";
  auto* sub = app.add_subcommand(
      "repro",
      "simulate -> fuse -> eval in one go. Without --ref a 32x32x8 synthetic cube is "
      "generated. Default sizes: lambda1 with --ref, lambda3 without");
  sub->add_option("--ref", o->ref, "Reference cube header (optional)");
  add_fuse_options(sub, o->fuse);
  return [o](Context& ctx) {
    FuseOpts fo = o->fuse;
    if (fo.lambda.empty()) fo.lambda = o->ref.empty() ? "lambda3" : "lambda1";
    const fusion::FusionConfig cfg = to_fusion_config(fo, ctx.seed());
    if (!o->ref.empty()) require_input(o->ref);
    std::optional<fs::path> synth_path;
    if (o->ref.empty()) synth_path = ctx.output("synth.hdr");
    const fs::path lo_path = ctx.output("hsi_lo.hdr");
    const fs::path msi_path = ctx.output("msi.hdr");
    const fs::path eval_path = ctx.output("eval.csv");
    const FuseOutputs paths = resolve_fuse_outputs(ctx, fo);

    HyperCube ref = o->ref.empty() ? simulate::synthetic_smooth_cube(32, 32, 8, ctx.seed())
                                   : load_cube(o->ref);
    if (synth_path) save_cube(ref, *synth_path);
    fusion::FusionResult res = run_fusion(ctx, ref, fo, cfg, paths);
    save_cube(res.hsi_lo, lo_path);
    save_cube(res.msi, msi_path);

    // Re-evaluate from the files on disk, as `eval --crop-ref` would.
    HyperCube fused = load_cube(paths.cube);
    HyperCube ref_disk = o->ref.empty() ? load_cube(*synth_path) : load_cube(o->ref);
    ref_disk = crop(ref_disk, fused.rows(), fused.cols());
    metrics::QualityReport r = metrics::evaluate_cube(fused, ref_disk, cfg.ssim);
    metrics::write_report_csv(r, eval_path);
    report_metrics(ctx, "eval_", r);
  };
}

// --- store ---------------------------------------------------------------

struct NodeOpts {
  std::string nodes;
  std::string dead;
};

void add_node_options(CLI::App* sub, NodeOpts& o) {
  sub->add_option("--nodes", o.nodes,
                  "Storage nodes: [id=]dir:<path> or [id=]tcp:<host>:<port>, comma-separated; "
                  "dir paths live under the output directory")
      ->required();
  sub->add_option("--dead", o.dead, "Comma list of node ids to treat as failed");
}

std::unique_ptr<cs::NodeRegistry> make_registry(Context& ctx, const NodeOpts& o) {
  std::vector<cs::NodeSpec> specs = cs::parse_node_specs(o.nodes);
  for (auto& s : specs) {
    if (s.kind == cs::NodeSpec::Kind::kDir) s.path = ctx.storage_dir(s.path).string();
  }
  auto reg = std::make_unique<cs::NodeRegistry>(specs);
  for (const auto& id : split_commas(o.dead)) reg->set_alive(id, false);
  return reg;
}

Action add_store(CLI::App& app) {
  auto* store = app.add_subcommand("store", "Chunked object store");
  store->require_subcommand(1);
  std::vector<std::pair<CLI::App*, Action>> actions;

  {
    struct Opts {
      NodeOpts nodes;
      std::string in, name, manifest;
      std::size_t chunk_size = 65536, replication = 2;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = store->add_subcommand("put", "Split a file into replicated chunks");
    add_node_options(sub, o->nodes);
    sub->add_option("--in", o->in, "File to store")->required();
    sub->add_option("--name", o->name, "Stored file name (default: input file name)");
    sub->add_option("--chunk-size", o->chunk_size, "Chunk size in bytes");
    sub->add_option("--replication", o->replication, "Replicas per chunk")
        ->check(CLI::PositiveNumber);
    sub->add_option("--manifest", o->manifest, "Manifest output (default: <name>.manifest)");
    sub->fallthrough();
    actions.emplace_back(sub, [o](Context& ctx) {
      require_input(o->in);
      const std::string name = o->name.empty() ? fs::path(o->in).filename().string() : o->name;
      const fs::path manifest_path =
          ctx.output(o->manifest.empty() ? name + ".manifest" : o->manifest);
      auto reg = make_registry(ctx, o->nodes);
      const std::vector<std::uint8_t> data = read_bytes(o->in);
      cs::ChunkManifest m =
          cs::put(name, data, {o->chunk_size, o->replication, ctx.seed()}, *reg);
      cs::save_manifest(m, manifest_path);
      ctx.metric("bytes", static_cast<double>(m.file_size));
      ctx.metric("chunks", static_cast<double>(m.chunks.size()));
    });
  }
  {
    struct Opts {
      NodeOpts nodes;
      std::string manifest, out;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = store->add_subcommand("get", "Reassemble a stored file");
    add_node_options(sub, o->nodes);
    sub->add_option("--manifest", o->manifest, "Manifest to read")->required();
    sub->add_option("--out", o->out, "Output file")->required();
    sub->fallthrough();
    actions.emplace_back(sub, [o](Context& ctx) {
      require_input(o->manifest);
      const fs::path out = ctx.output(o->out);
      auto reg = make_registry(ctx, o->nodes);
      const std::vector<std::uint8_t> data = cs::get(cs::load_manifest(o->manifest), *reg);
      write_bytes(out, data);
      ctx.metric("bytes", static_cast<double>(data.size()));
    });
  }
  {
    struct Opts {
      NodeOpts nodes;
      std::string manifest;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = store->add_subcommand("delete", "Remove every replica of a stored file");
    add_node_options(sub, o->nodes);
    sub->add_option("--manifest", o->manifest, "Manifest to read")->required();
    sub->fallthrough();
    actions.emplace_back(sub, [o](Context& ctx) {
      require_input(o->manifest);
      auto reg = make_registry(ctx, o->nodes);
      cs::DeleteReport r = cs::remove(cs::load_manifest(o->manifest), *reg);
      ctx.metric("removed", static_cast<double>(r.removed));
      ctx.metric("missing", static_cast<double>(r.missing));
      ctx.metric("skipped_dead", static_cast<double>(r.skipped_dead));
    });
  }
  {
    struct Opts {
      NodeOpts nodes;
      std::string in, chunk_sizes, out = "bench.csv";
      std::size_t size = 10 * 1024 * 1024, trials = 10, replication = 2;
      bool parse = false;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = store->add_subcommand("bench", "Download time versus chunk size");
    add_node_options(sub, o->nodes);
    sub->add_option("--in", o->in, "File to benchmark (default: seeded random bytes)");
    sub->add_option("--size", o->size, "Random file size when --in is absent")
        ->check(CLI::PositiveNumber);
    sub->add_option("--chunk-sizes", o->chunk_sizes,
                    "Comma list of chunk sizes (default: 4K,16K,32K,64K,128K,1M,10M,100M)");
    sub->add_option("--trials", o->trials, "Timed downloads per chunk size")
        ->check(CLI::PositiveNumber);
    sub->add_option("--replication", o->replication, "Replicas per chunk")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--parse", o->parse, "Decode the payload as a cube inside the timed region "
                                       "(--in must be a cube header)");
    sub->add_option("--out", o->out, "Benchmark CSV");
    sub->fallthrough();
    actions.emplace_back(sub, [o](Context& ctx) {
      if (o->parse && o->in.empty()) {
        throw Error(ErrorCode::kUsageError, "--parse needs --in <cube.hdr>");
      }
      cs::BenchOptions opts;
      if (!o->chunk_sizes.empty()) opts.chunk_sizes = parse_size_list(o->chunk_sizes, "chunk size");
      opts.trials = o->trials;
      opts.replication = o->replication;
      opts.seed = ctx.seed();
      if (!o->in.empty()) require_input(o->in);
      const fs::path out = ctx.output(o->out);
      auto reg = make_registry(ctx, o->nodes);

      std::vector<std::uint8_t> data;
      std::string source;
      if (o->parse) {
        const CubeHeader header = read_header(o->in);
        const fs::path payload = payload_path_for(o->in);
        data = read_bytes(payload);
        source = payload.string() + " (decoded as cube)";
        opts.parse = [header](cs::ByteSpan bytes) {
          HyperCube cube = decode_payload(header, std::as_bytes(bytes));
          (void)cube;
        };
      } else if (!o->in.empty()) {
        data = read_bytes(o->in);
        source = o->in;
      } else {
        Rng rng(Rng::derive(ctx.seed(), kBenchDataStream));
        data.resize(o->size);
        for (auto& b : data) b = static_cast<std::uint8_t>(rng.next() >> 56);
        source = "random " + std::to_string(o->size) + " bytes";
      }
      std::vector<std::string> notes = {
          "download time per chunk size; file: " + source,
          "bytes=" + std::to_string(data.size()) + " trials=" + std::to_string(opts.trials) +
              " replication=" + std::to_string(opts.replication),
          "each trial reads through fresh file handles / connections; the OS page cache is "
          "not dropped, so repeated trials may be served from memory"};
      for (const auto& n : reg->nodes()) notes.push_back("node " + n.id + " " + n.address);
      cs::BenchReport report = cs::bench_download(data, opts, *reg);
      cs::write_bench_csv(report, notes, out);
      for (const auto& r : report.results) {
        ctx.metric("mean_s_" + std::to_string(r.chunk_size), r.mean_s);
      }
      ctx.metric("overall_std_s", report.overall_std_s);
      ctx.metric("best_chunk_size", static_cast<double>(report.best_chunk_size));
    });
  }
  {
    struct Opts {
      std::string root = "node", host = "127.0.0.1";
      std::uint16_t port = 0;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = store->add_subcommand("serve", "Run a TCP block server until SIGINT/SIGTERM");
    sub->add_option("--root", o->root, "Chunk directory (under the output directory)");
    sub->add_option("--host", o->host, "Bind address");
    sub->add_option("--port", o->port, "Port (0: ephemeral)");
    sub->fallthrough();
    actions.emplace_back(sub, [o](Context& ctx) {
      const fs::path root = ctx.storage_dir(o->root);
      sigset_t set, old;
      sigemptyset(&set);
      sigaddset(&set, SIGINT);
      sigaddset(&set, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &set, &old);
      cs::BlockServer server(root, o->host, o->port);
      server.start();
      ctx.out() << "listening " << server.host() << ":" << server.port() << std::endl;
      ctx.metric("port", server.port());
      ctx.out().flush();
      int sig = 0;
      sigwait(&set, &sig);
      server.stop();
      pthread_sigmask(SIG_SETMASK, &old, nullptr);
    });
  }

  return [actions](Context& ctx) {
    for (const auto& [sub, action] : actions) {
      if (sub->parsed()) {
        action(ctx);
        return;
      }
    }
    throw Error(ErrorCode::kUsageError, "store needs a subcommand");
  };
}

// Every option of the selected command path, as given or defaulted.
ordered_json describe_options(const CLI::App* app) {
  ordered_json j = ordered_json::object();
  for (const CLI::Option* opt : app->get_options()) {
    const std::string name = opt->get_name();
    if (name.empty() || name == "--help" || name == "--version") continue;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      j[opt->get_name()] = res.size() == 1 ? ordered_json(res.front()) : ordered_json(res);
    } else {
      j[opt->get_name()] = opt->get_default_str();
    }
  }
  return j;
}

void write_provenance(Context& ctx, const std::vector<std::string>& args,
                      const std::vector<const CLI::App*>& path, const Globals& g) {
  ordered_json j;
  j["program"] = "hyperfuse";
  j["version"] = kVersion;
  j["argv"] = args;
  std::string command;
  for (const auto* sub : path) command += (command.empty() ? "" : " ") + sub->get_name();
  j["command"] = command;
  j["seed"] = g.seed;
  j["out_dir"] = ctx.base().string();
  ordered_json opts = ordered_json::object();
  for (const auto* sub : path) opts[sub->get_name()] = describe_options(sub);
  j["options"] = opts;
  j["outputs"] = ctx.outputs();
  write_text(ctx.base() / "run.json", j.dump(2) + "\n");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"hyperfuse: HSI/MSI fusion, quality metrics and a chunked object store",
               "hyperfuse"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Globals g;
  const char* env_out = std::getenv("HYPERFUSE_OUT");
  g.out_dir = env_out != nullptr && *env_out != '\0' ? env_out : ".";
  app.add_option("--seed", g.seed, "Seed for every random choice");
  app.add_flag("-v,--verbose", g.verbose, "Progress messages on stderr");
  app.add_option("--out-dir", g.out_dir,
                 "Directory that receives every output (default: $HYPERFUSE_OUT or .)");

  std::vector<std::pair<CLI::App*, Action>> commands;
  auto reg = [&](Action a, const std::string& name) {
    CLI::App* sub = app.get_subcommand(name);
    sub->fallthrough();
    commands.emplace_back(sub, std::move(a));
  };
  reg(add_synth(app), "synth");
  reg(add_simulate(app), "simulate");
  reg(add_fuse(app), "fuse");
  reg(add_eval(app), "eval");
  reg(add_export(app), "export");
  reg(add_repro(app), "repro");
  reg(add_store(app), "store");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n"
        << "run with --help for usage\n";
    return kExitUsageError;
  }

  Context ctx(g, out, err);
  try {
    for (auto& [sub, action] : commands) {
      if (!sub->parsed()) continue;
      std::vector<const CLI::App*> path = {sub};
      for (const CLI::App* s = sub; !s->get_subcommands().empty();) {
        s = s->get_subcommands().front();
        path.push_back(s);
      }
      ctx.prepare();
      action(ctx);
      write_provenance(ctx, args, path, g);
      return kExitOk;
    }
    err << "error: no subcommand\n";
    return kExitUsageError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::kUsageError ? kExitUsageError : kExitDomainError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomainError;
  }
}

}  // namespace hyperfuse::cli
