// synshadow: command-line front end for matte rendering, triplet synthesis,
// parameter estimation, slope augmentation and scoring.
//
// Exit codes: 0 success, 1 validation error, 2 runtime error. Errors are
// reported on stderr as one JSON object per line.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "synshadow.hpp"

namespace fs = std::filesystem;
using namespace synshadow;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

void report_error(const std::string& kind, const std::string& message, std::optional<std::uint64_t> item = {}) {
  nlohmann::json j = {{"error", kind}, {"message", message}};
  if (item) j["item"] = *item;
  std::cerr << j.dump() << '\n';
}

struct CommonOptions {
  std::string config_path;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  bool dry_run = false;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* workers_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonOptions& c) {
  cmd->add_option("--config", c.config_path, "Pipeline config file")->check(CLI::ExistingFile);
  c.seed_opt = cmd->add_option("--seed", c.seed, "Run seed");
  c.workers_opt = cmd->add_option("--workers", c.workers, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--dry-run", c.dry_run, "Validate and print the plan without writing files");
}

PipelineConfig resolve_config(const CommonOptions& c) {
  PipelineConfig cfg = c.config_path.empty() ? PipelineConfig{} : load_config(c.config_path);
  if (c.seed_opt->count()) cfg.sampler.seed = c.seed;
  if (c.workers_opt->count()) cfg.workers = c.workers;
  cfg.render.seed = cfg.sampler.seed;
  cfg.render.workers = cfg.workers;
  return cfg;
}

std::vector<fs::path> image_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& [stem, path] : images_by_stem(dir)) files.push_back(path);
  return files;
}

void report_failures(const std::vector<ItemFailure>& failures) {
  for (const auto& f : failures) report_error("item", f.message, f.item);
}

// --------------------------------------------------------------------------

struct RenderMattesOptions {
  CommonOptions common;
  std::uint64_t count = 0;
  std::string meshes;
  std::string out;
};

int run_render_mattes(const RenderMattesOptions& o) {
  PipelineConfig cfg = resolve_config(o.common);
  if (!o.meshes.empty()) cfg.meshes = o.meshes;
  if (!o.out.empty()) cfg.out = o.out;
  if (cfg.meshes.empty()) detail::fail_validation("no mesh directory (--meshes or paths.meshes)");
  if (cfg.out.empty()) detail::fail_validation("no output directory (--out or paths.out)");
  cfg.validate();
  const MeshLibrary lib = load_mesh_directory(cfg.meshes);
  for (const auto& f : lib.failures) report_error("asset", f);
  if (lib.meshes.empty()) detail::fail_validation("no loadable .obj meshes in '" + cfg.meshes.string() + "'");
  if (o.common.dry_run) {
    describe(std::cout, cfg);
    std::cout << "plan: render " << o.count << " mattes from " << lib.meshes.size() << " meshes into '"
              << cfg.out.string() << "'\n";
    return kExitOk;
  }
  const auto report = render_matte_batch(lib.meshes, cfg.scene, cfg.render, cfg.seed(), o.count, cfg.out, cfg.workers);
  report_failures(report.failures);
  std::cout << "rendered " << report.written << " mattes\n";
  return report.failures.empty() ? kExitOk : kExitRuntime;
}

// --------------------------------------------------------------------------

struct SynthesizeOptions {
  CommonOptions common;
  std::uint64_t count = 0;
  std::string backgrounds;
  std::string mattes;
  std::string meshes;
  std::string out;
  std::string strategy;
  bool render_online = false;
};

int run_synthesize(const SynthesizeOptions& o) {
  PipelineConfig cfg = resolve_config(o.common);
  if (!o.backgrounds.empty()) cfg.backgrounds = o.backgrounds;
  if (!o.mattes.empty()) cfg.mattes = o.mattes;
  if (!o.meshes.empty()) cfg.meshes = o.meshes;
  if (!o.out.empty()) cfg.out = o.out;
  if (!o.strategy.empty()) cfg.sampler.strategy = parse_strategy(o.strategy);
  if (cfg.backgrounds.empty()) detail::fail_validation("no background directory (--backgrounds or paths.backgrounds)");
  if (cfg.out.empty()) detail::fail_validation("no output directory (--out or paths.out)");
  if (o.render_online ? cfg.meshes.empty() : cfg.mattes.empty())
    detail::fail_validation(o.render_online ? "--render-online needs a mesh directory"
                                            : "no matte directory (--mattes or paths.mattes)");
  cfg.validate();

  BatchInputs inputs;
  for (const auto& p : image_files(cfg.backgrounds)) inputs.backgrounds.push_back(background_file(p));
  if (inputs.backgrounds.empty()) detail::fail_validation("no images in '" + cfg.backgrounds.string() + "'");
  auto lib = std::make_shared<MeshLibrary>();
  if (o.render_online) {
    *lib = load_mesh_directory(cfg.meshes);
    for (const auto& f : lib->failures) report_error("asset", f);
    if (lib->meshes.empty()) detail::fail_validation("no loadable .obj meshes in '" + cfg.meshes.string() + "'");
    RenderSettings settings = cfg.render;
    settings.workers = 1;
    const SceneRanges ranges = cfg.scene;
    const std::uint64_t seed = cfg.seed();
    inputs.online_matte = [lib, settings, ranges, seed](std::uint64_t item) {
      return MatteSource{"online-" + item_stem(item), [lib, settings, ranges, seed, item] {
                           return render_scene_item(lib->meshes, ranges, settings, seed, item).matte;
                         }};
    };
  } else {
    for (const auto& p : image_files(cfg.mattes)) inputs.mattes.push_back(matte_file(p));
    if (inputs.mattes.empty()) detail::fail_validation("no images in '" + cfg.mattes.string() + "'");
  }

  if (o.common.dry_run) {
    describe(std::cout, cfg);
    std::cout << "plan: synthesize " << o.count << " triplets from " << inputs.backgrounds.size() << " backgrounds and "
              << (o.render_online ? "online-rendered mattes" : std::to_string(inputs.mattes.size()) + " mattes")
              << " into '" << cfg.out.string() << "'\n";
    return kExitOk;
  }
  const auto report = batch_synthesize(inputs, cfg.sampler, {o.count, cfg.out, cfg.workers});
  report_failures(report.failures);
  const double rate = report.seconds > 0 ? static_cast<double>(report.written) / report.seconds : 0.0;
  std::cout << "synthesized " << report.written << " triplets in " << report.seconds << " s (" << rate
            << " triplets/s)\n";
  return report.failures.empty() ? kExitOk : kExitRuntime;
}

// --------------------------------------------------------------------------

struct EstimateOptions {
  CommonOptions common;
  std::string dataset;
  std::string shadow;
  std::string shadow_free;
  std::string mask;
  std::string out;
  double threshold = kUmbraThreshold;
  std::string slope_source = "green";
  std::string estimator = "ols";
};

int run_estimate(const EstimateOptions& o) {
  fs::path shadow_dir = o.shadow, free_dir = o.shadow_free, mask_dir = o.mask;
  if (!o.dataset.empty()) {
    if (shadow_dir.empty()) shadow_dir = fs::path(o.dataset) / "shadow";
    if (free_dir.empty()) free_dir = fs::path(o.dataset) / "shadow_free";
    if (mask_dir.empty()) mask_dir = fs::path(o.dataset) / "matte";
  }
  if (shadow_dir.empty() || free_dir.empty() || mask_dir.empty())
    detail::fail_validation("estimate needs --dataset or all of --shadow, --shadow-free, --mask");
  FitOptions fit;
  if (o.slope_source == "mean") fit.slope_source = SlopeSource::mean;
  else if (o.slope_source != "green") detail::fail_validation("--slope-source must be green or mean");
  if (o.estimator == "theil_sen") fit.estimator = Estimator::theil_sen;
  else if (o.estimator != "ols") detail::fail_validation("--estimator must be ols or theil_sen");
  if (!(o.threshold >= 0.0 && o.threshold <= 1.0)) detail::fail_validation("--threshold must lie in [0,1]");

  const auto shadows = images_by_stem(shadow_dir);
  const auto frees = images_by_stem(free_dir);
  const auto masks = images_by_stem(mask_dir);
  if (o.common.dry_run) {
    std::cout << "plan: fit " << shadows.size() << " shadow images from '" << shadow_dir.string() << "'\n";
    return kExitOk;
  }

  std::ofstream file;
  if (!o.out.empty()) {
    file.open(o.out, std::ios::binary);
    if (!file) throw IoError("cannot write '" + o.out + "'");
  }
  std::ostream& os = o.out.empty() ? std::cout : file;
  csv::write_row(os, {"stem", "slope_0", "intercept_0", "r2_0", "slope_1", "intercept_1", "r2_1", "slope_2",
                      "intercept_2", "r2_2", "l0", "l1", "l2", "s1"});
  bool any_failed = false;
  for (const auto& [stem, path] : shadows) {
    if (!frees.contains(stem) || !masks.contains(stem)) {
      report_error("orphan", "no shadow-free or mask counterpart for '" + stem + "'");
      any_failed = true;
      continue;
    }
    try {
      const auto r = estimate_params(load_image(path), load_image(frees.at(stem)),
                                     binarize_matte(load_matte(masks.at(stem)), o.threshold), fit);
      std::vector<std::string> row{stem};
      for (const auto& c : r.per_channel)
        for (double v : {c.slope, c.intercept, c.r2}) row.push_back(csv::format_double(v));
      for (double v : {r.params.l0(), r.params.l1(), r.params.l2(), r.params.s1()}) row.push_back(csv::format_double(v));
      csv::write_row(os, row);
    } catch (const std::exception& e) {
      report_error("fit", stem + ": " + e.what());
      any_failed = true;
    }
  }
  return any_failed ? kExitRuntime : kExitOk;
}

// --------------------------------------------------------------------------

struct AugmentOptions {
  CommonOptions common;
  std::string params;
  std::string manifest;
  std::string out;
  double scale = 1.0;
  CLI::Option* scale_opt = nullptr;
};

SlopeParams parse_params(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) v.push_back(csv::parse_double(tok));
  if (v.size() != 4) detail::fail_validation("--params expects l0,l1,l2,s1");
  return SlopeParams::make(v[0], v[1], v[2], v[3]);
}

int run_augment(const AugmentOptions& o) {
  const bool fixed = o.scale_opt->count() > 0;
  if (fixed && !(o.scale >= kAugmentScaleMin && o.scale <= kAugmentScaleMax))
    detail::fail_validation("--scale must lie in [0.8, 1.2]");
  if (o.params.empty() == o.manifest.empty()) detail::fail_validation("augment needs exactly one of --params, --manifest");
  const PipelineConfig cfg = resolve_config(o.common);
  if (o.common.dry_run) {
    std::cout << "plan: augment " << (o.params.empty() ? "manifest '" + o.manifest + "'" : "params " + o.params)
              << (fixed ? " with scale " + csv::format_double(o.scale) : " with random scales in [0.8, 1.2]") << "\n";
    return kExitOk;
  }
  auto draw_scale = [&](std::uint64_t item) {
    if (fixed) return o.scale;
    RandomStream s = RandomStream::for_item(cfg.seed(), "augment", item);
    return s.uniform(kAugmentScaleMin, kAugmentScaleMax);
  };
  std::ofstream file;
  if (!o.out.empty()) {
    file.open(o.out, std::ios::binary);
    if (!file) throw IoError("cannot write '" + o.out + "'");
  }
  std::ostream& os = o.out.empty() ? std::cout : file;

  if (!o.params.empty()) {
    const double scale = draw_scale(0);
    const SlopeParams p = augment_slope(parse_params(o.params), scale);
    csv::write_row(os, {"l0", "l1", "l2", "s1", "scale"});
    csv::write_row(os, {csv::format_double(p.l0()), csv::format_double(p.l1()), csv::format_double(p.l2()),
                        csv::format_double(p.s1()), csv::format_double(scale)});
    return kExitOk;
  }

  std::ifstream in(o.manifest);
  if (!in) throw IoError("cannot open manifest '" + o.manifest + "'");
  const csv::Table table = csv::read_table(in);
  const std::size_t cols[4] = {table.column("l0"), table.column("l1"), table.column("l2"), table.column("s1")};
  auto header = table.header;
  header.push_back("scale");
  csv::write_row(os, header);
  bool any_failed = false;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    auto row = table.rows[r];
    row.resize(table.header.size());
    if (row[cols[0]].empty()) {  // non-affine strategy row
      row.push_back("");
      csv::write_row(os, row);
      continue;
    }
    try {
      const double scale = draw_scale(r);
      const SlopeParams p = augment_slope(
          SlopeParams::make(csv::parse_double(row[cols[0]]), csv::parse_double(row[cols[1]]),
                            csv::parse_double(row[cols[2]]), csv::parse_double(row[cols[3]])),
          scale);
      row[cols[3]] = csv::format_double(p.s1());
      row.push_back(csv::format_double(scale));
      csv::write_row(os, row);
    } catch (const std::exception& e) {
      report_error("augment", e.what(), r);
      any_failed = true;
    }
  }
  return any_failed ? kExitRuntime : kExitOk;
}

// --------------------------------------------------------------------------

struct ScoreOptions {
  CommonOptions common;
  std::string pred;
  std::string gt;
  std::string mask;
  std::string metric = "rmse_lab";
  std::string out;
  bool pooled = false;
  double threshold = kDefaultBinarizeThreshold;
};

int run_score(const ScoreOptions& o) {
  ScoreInputs in;
  in.pred_dir = o.pred;
  in.gt_dir = o.gt;
  in.mask_dir = o.mask;
  in.metric = parse_metric(o.metric);
  in.aggregation = o.pooled ? Aggregation::pixel_pooled : Aggregation::per_image_mean;
  in.mask_threshold = o.threshold;
  if (in.metric == Metric::rmse_lab && o.mask.empty()) detail::fail_validation("rmse_lab scoring needs --mask");
  if (o.common.dry_run) {
    std::cout << "plan: score '" << o.pred << "' against '" << o.gt << "' with " << o.metric << "\n";
    return kExitOk;
  }
  const ScoreReport report = score_dataset(in);
  for (const auto& p : report.problems) report_error("score", p);
  std::ofstream file;
  if (!o.out.empty()) {
    file.open(o.out, std::ios::binary);
    if (!file) throw IoError("cannot write '" + o.out + "'");
  }
  write_scores_csv(o.out.empty() ? std::cout : file, report, in.aggregation);
  return report.problems.empty() ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shadow / shadow-free / matte triplet synthesis toolkit"};
  app.require_subcommand(1);

  RenderMattesOptions rm;
  auto* render_cmd = app.add_subcommand("render-mattes", "Render random soft-shadow mattes from meshes");
  add_common(render_cmd, rm.common);
  render_cmd->add_option("--count", rm.count, "Number of mattes")->required();
  render_cmd->add_option("--meshes", rm.meshes, "Directory of .obj occluder meshes");
  render_cmd->add_option("--out", rm.out, "Output directory");

  SynthesizeOptions sy;
  auto* synth_cmd = app.add_subcommand("synthesize", "Compose shadow/shadow-free/matte triplets");
  add_common(synth_cmd, sy.common);
  synth_cmd->add_option("--count", sy.count, "Number of triplets")->required();
  synth_cmd->add_option("--backgrounds", sy.backgrounds, "Directory of shadow-free backgrounds");
  synth_cmd->add_option("--mattes", sy.mattes, "Directory of matte images");
  synth_cmd->add_option("--meshes", sy.meshes, "Mesh directory for --render-online");
  synth_cmd->add_option("--out", sy.out, "Output directory");
  synth_cmd->add_option("--strategy", sy.strategy, "Darkening strategy");
  synth_cmd->add_flag("--render-online", sy.render_online, "Render a fresh matte per item");

  EstimateOptions es;
  auto* est_cmd = app.add_subcommand("estimate", "Fit attenuation parameters to shadow/shadow-free pairs");
  add_common(est_cmd, es.common);
  est_cmd->add_option("--dataset", es.dataset, "Directory with shadow/, shadow_free/, matte/");
  est_cmd->add_option("--shadow", es.shadow, "Shadow image directory");
  est_cmd->add_option("--shadow-free", es.shadow_free, "Shadow-free image directory");
  est_cmd->add_option("--mask", es.mask, "Mask or matte directory");
  est_cmd->add_option("--threshold", es.threshold, "Mask binarization threshold");
  est_cmd->add_option("--slope-source", es.slope_source, "green or mean");
  est_cmd->add_option("--estimator", es.estimator, "ols or theil_sen");
  est_cmd->add_option("--out", es.out, "CSV output (default stdout)");

  AugmentOptions au;
  auto* aug_cmd = app.add_subcommand("augment", "Scale attenuation slopes by a factor in [0.8, 1.2]");
  add_common(aug_cmd, au.common);
  aug_cmd->add_option("--params", au.params, "l0,l1,l2,s1");
  aug_cmd->add_option("--manifest", au.manifest, "Triplet manifest CSV to augment");
  au.scale_opt = aug_cmd->add_option("--scale", au.scale, "Fixed scale; random per row when omitted");
  aug_cmd->add_option("--out", au.out, "CSV output (default stdout)");

  ScoreOptions sc;
  auto* score_cmd = app.add_subcommand("score", "Score predictions with RMSE-LAB or BER");
  add_common(score_cmd, sc.common);
  score_cmd->add_option("--pred", sc.pred, "Prediction directory")->required();
  score_cmd->add_option("--gt", sc.gt, "Ground-truth directory")->required();
  score_cmd->add_option("--mask", sc.mask, "Shadow mask directory (rmse_lab)");
  score_cmd->add_option("--metric", sc.metric, "rmse_lab or ber");
  score_cmd->add_option("--threshold", sc.threshold, "Mask binarization threshold");
  score_cmd->add_flag("--pooled", sc.pooled, "Pool pixels across images instead of averaging per image");
  score_cmd->add_option("--out", sc.out, "CSV output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("validation", e.what());
    return kExitValidation;
  }

  try {
    if (*render_cmd) return run_render_mattes(rm);
    if (*synth_cmd) return run_synthesize(sy);
    if (*est_cmd) return run_estimate(es);
    if (*aug_cmd) return run_augment(au);
    if (*score_cmd) return run_score(sc);
  } catch (const ValidationError& e) {
    report_error("validation", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    report_error("runtime", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}
