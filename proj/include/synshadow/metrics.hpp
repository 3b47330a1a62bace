#pragma once

// RMSE in CIELAB split into shadow (S), non-shadow (NS) and all pixels, and
// the balance error rate for detection masks (percent scale).

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "csv.hpp"
#include "image.hpp"
#include "image_io.hpp"

namespace synshadow {

struct RegionScores {
  double shadow = 0.0;
  double non_shadow = 0.0;
  double all = 0.0;
  // Set when the region had no pixels; its score is reported as 0.
  bool shadow_empty = false;
  bool non_shadow_empty = false;
};

// Per-region raw sums; lets dataset scores be pooled over pixels.
struct RmseAccumulator {
  double sq_shadow = 0.0;
  double sq_non_shadow = 0.0;
  std::size_t n_shadow = 0;
  std::size_t n_non_shadow = 0;

  RegionScores scores() const {
    RegionScores s;
    s.shadow_empty = n_shadow == 0;
    s.non_shadow_empty = n_non_shadow == 0;
    s.shadow = n_shadow ? std::sqrt(sq_shadow / static_cast<double>(n_shadow)) : 0.0;
    s.non_shadow = n_non_shadow ? std::sqrt(sq_non_shadow / static_cast<double>(n_non_shadow)) : 0.0;
    const std::size_t n = n_shadow + n_non_shadow;
    s.all = n ? std::sqrt((sq_shadow + sq_non_shadow) / static_cast<double>(n)) : 0.0;
    return s;
  }
};

inline RmseAccumulator rmse_lab_sums(const ImageRGB& pred, const ImageRGB& gt, const BinaryMask& mask) {
  if (!pred.same_size(gt) || !pred.same_size(mask)) detail::fail_validation("metric inputs differ in size");
  const LabImage a = rgb_to_lab(pred);
  const LabImage b = rgb_to_lab(gt);
  RmseAccumulator acc;
  for (std::size_t i = 0; i < a.pixels(); ++i) {
    auto p = a.pixel(i);
    auto q = b.pixel(i);
    const double d = (p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]) + (p[2] - q[2]) * (p[2] - q[2]);
    if (mask.values()[i]) {
      acc.sq_shadow += d;
      ++acc.n_shadow;
    } else {
      acc.sq_non_shadow += d;
      ++acc.n_non_shadow;
    }
  }
  return acc;
}

inline RegionScores rmse_lab(const ImageRGB& pred, const ImageRGB& gt, const BinaryMask& mask) {
  return rmse_lab_sums(pred, gt, mask).scores();
}

struct BerCounts {
  std::size_t true_pos = 0;
  std::size_t true_neg = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;

  RegionScores scores() const {
    if (positives == 0 || negatives == 0)
      detail::fail_validation("BER needs both shadow and non-shadow ground-truth pixels");
    const double tpr = static_cast<double>(true_pos) / static_cast<double>(positives);
    const double tnr = static_cast<double>(true_neg) / static_cast<double>(negatives);
    return {(1.0 - tpr) * 100.0, (1.0 - tnr) * 100.0, (1.0 - 0.5 * (tpr + tnr)) * 100.0};
  }
};

inline BerCounts ber_counts(const BinaryMask& pred, const BinaryMask& gt) {
  if (!pred.same_size(gt)) detail::fail_validation("BER inputs differ in size");
  BerCounts c;
  for (std::size_t i = 0; i < gt.pixels(); ++i) {
    const bool g = gt.values()[i] != 0;
    const bool p = pred.values()[i] != 0;
    if (g) {
      ++c.positives;
      if (p) ++c.true_pos;
    } else {
      ++c.negatives;
      if (!p) ++c.true_neg;
    }
  }
  return c;
}

inline RegionScores ber(const BinaryMask& pred, const BinaryMask& gt) { return ber_counts(pred, gt).scores(); }

// ---------------------------------------------------------------------------
// Dataset scoring

enum class Metric { rmse_lab, ber };

inline Metric parse_metric(const std::string& name) {
  if (name == "rmse_lab" || name == "rmse") return Metric::rmse_lab;
  if (name == "ber") return Metric::ber;
  detail::fail_validation("unknown metric '" + name + "'");
}

struct ScoreRow {
  std::string stem;
  RegionScores scores;
};

struct ScoreReport {
  std::vector<ScoreRow> rows;
  RegionScores aggregate;
  std::vector<std::string> problems;  // orphan stems and unreadable files
};

enum class Aggregation { per_image_mean, pixel_pooled };

struct ScoreInputs {
  std::filesystem::path pred_dir;
  std::filesystem::path gt_dir;
  std::filesystem::path mask_dir;  // RMSE region masks; unused for BER
  Metric metric = Metric::rmse_lab;
  Aggregation aggregation = Aggregation::per_image_mean;
  double mask_threshold = kDefaultBinarizeThreshold;
};

namespace detail {

inline bool is_image_file(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace detail

/// Image files in a directory keyed by stem, sorted.
inline std::map<std::string, std::filesystem::path> images_by_stem(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) detail::fail_validation("not a directory: '" + dir.string() + "'");
  std::map<std::string, std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && detail::is_image_file(entry.path()))
      out.emplace(entry.path().stem().string(), entry.path());
  return out;
}

inline ScoreReport score_dataset(const ScoreInputs& in) {
  const auto preds = images_by_stem(in.pred_dir);
  const auto gts = images_by_stem(in.gt_dir);
  const bool need_mask = in.metric == Metric::rmse_lab;
  const auto masks = need_mask ? images_by_stem(in.mask_dir) : std::map<std::string, std::filesystem::path>{};

  ScoreReport report;
  std::set<std::string> stems;
  for (const auto& [s, _] : preds) stems.insert(s);
  for (const auto& [s, _] : gts) stems.insert(s);
  if (need_mask)
    for (const auto& [s, _] : masks) stems.insert(s);

  RmseAccumulator pooled_rmse;
  BerCounts pooled_ber;
  RegionScores sum;
  for (const auto& stem : stems) {
    const bool has_pred = preds.contains(stem), has_gt = gts.contains(stem);
    const bool has_mask = !need_mask || masks.contains(stem);
    if (!has_pred || !has_gt || !has_mask) {
      std::string missing;
      if (!has_pred) missing += " pred";
      if (!has_gt) missing += " gt";
      if (!has_mask) missing += " mask";
      report.problems.push_back("orphan stem '" + stem + "' (missing:" + missing + ")");
      continue;
    }
    try {
      RegionScores s;
      if (need_mask) {
        const auto acc = rmse_lab_sums(load_image(preds.at(stem)), load_image(gts.at(stem)),
                                       binarize_matte(load_matte(masks.at(stem)), in.mask_threshold));
        pooled_rmse.sq_shadow += acc.sq_shadow;
        pooled_rmse.sq_non_shadow += acc.sq_non_shadow;
        pooled_rmse.n_shadow += acc.n_shadow;
        pooled_rmse.n_non_shadow += acc.n_non_shadow;
        s = acc.scores();
      } else {
        const auto c = ber_counts(binarize_matte(load_matte(preds.at(stem)), in.mask_threshold),
                                  binarize_matte(load_matte(gts.at(stem)), in.mask_threshold));
        s = c.scores();
        pooled_ber.true_pos += c.true_pos;
        pooled_ber.true_neg += c.true_neg;
        pooled_ber.positives += c.positives;
        pooled_ber.negatives += c.negatives;
      }
      sum.shadow += s.shadow;
      sum.non_shadow += s.non_shadow;
      sum.all += s.all;
      report.rows.push_back({stem, s});
    } catch (const std::exception& e) {
      report.problems.push_back("failed to score '" + stem + "': " + e.what());
    }
  }
  if (!report.rows.empty()) {
    if (in.aggregation == Aggregation::pixel_pooled) {
      report.aggregate = need_mask ? pooled_rmse.scores() : pooled_ber.scores();
    } else {
      const auto n = static_cast<double>(report.rows.size());
      report.aggregate = {sum.shadow / n, sum.non_shadow / n, sum.all / n};
    }
  }
  return report;
}

inline void write_scores_csv(std::ostream& os, const ScoreReport& report, Aggregation aggregation) {
  csv::write_row(os, {"stem", "S", "NS", "ALL"});
  for (const auto& r : report.rows)
    csv::write_row(os, {r.stem, csv::format_double(r.scores.shadow), csv::format_double(r.scores.non_shadow),
                        csv::format_double(r.scores.all)});
  csv::write_row(os, {aggregation == Aggregation::pixel_pooled ? "pooled" : "mean",
                      csv::format_double(report.aggregate.shadow), csv::format_double(report.aggregate.non_shadow),
                      csv::format_double(report.aggregate.all)});
}

}  // namespace synshadow
