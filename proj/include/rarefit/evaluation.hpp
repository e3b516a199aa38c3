#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rarefit/alignment.hpp"
#include "rarefit/baseline_matcher.hpp"
#include "rarefit/dataset.hpp"
#include "rarefit/fusion.hpp"

namespace rarefit {

/// Cumulative match characteristic. accuracies[k - 1] is the Rank-k rate.
struct CmcCurve {
  std::vector<double> accuracies;
  std::size_t n_latents = 0;
  std::size_t gallery_size = 0;

  /// Rank-k identification rate for k >= 1; NaN for an empty curve.
  double rank(std::size_t k) const;
  double rank1() const { return rank(1); }

  bool operator==(const CmcCurve&) const = default;
};

/// latent id -> mated tenprint id
using MateMap = std::map<std::string, std::string>;

/// Rank of each latent's mate in its row (1 = best). Ties count against the
/// mate. Throws InvalidInput when a mate id is missing from the gallery.
std::vector<std::size_t> mate_ranks(const ScoreMatrix& m, const MateMap& mates);

/// CMC from per-latent mate ranks over a gallery of `gallery_size`.
CmcCurve cmc_from_ranks(std::span<const std::size_t> ranks, std::size_t gallery_size);

CmcCurve cmc(const ScoreMatrix& m, const MateMap& mates);

struct DensityHistogram {
  std::size_t bins = 0;
  /// Normalised masses per bin over [0, 1]; each sums to 1.
  std::vector<double> genuine;
  std::vector<double> impostor;
  std::size_t genuine_count = 0;
  std::size_t impostor_count = 0;

  std::size_t genuine_mode() const;
  std::size_t impostor_mode() const;
};

/// Histograms of e_hat split by ground truth. Throws EmptyClass when either
/// side has no records.
DensityHistogram error_density(std::span<const ScoreRecord> records, std::size_t bins = 50);

/// Mann-Whitney AUC: P(genuine > impostor) + 0.5 P(tie).
double mann_whitney_auc(std::span<const double> genuine, std::span<const double> impostor);

/// Which score of a record to rank on.
enum class ScoreKind { Baseline, Fused, Modified };

/// Rank-1 rate over the latents present in `records`, ranking each latent's
/// records by the chosen score. Every latent needs exactly one genuine record.
double rank1_from_records(std::span<const ScoreRecord> records, ScoreKind kind);

/// Rebuilds a score matrix from records.
ScoreMatrix records_to_matrix(std::span<const ScoreRecord> records, ScoreKind kind,
                              MateMap* mates = nullptr);

struct SweepResult {
  std::vector<double> thresholds;
  std::vector<double> rank1;
  double best_e_t = 0.0;
  double best_rank1 = 0.0;
};

/// Inclusive threshold grid lo, lo + step, ..., hi.
std::vector<double> threshold_grid(double lo, double hi, double step);

/// Recomputes S'' and Rank-1 for every grid threshold. The best threshold is
/// the smallest one reaching the maximum Rank-1.
SweepResult sweep_threshold(std::span<const ScoreRecord> records, const FusionParams& base,
                            double lo = 0.8, double hi = 1.0, double step = 0.005);

struct InternalMatcher {
  MatcherConfig config;
};
struct ExternalScores {
  std::filesystem::path path;
};
using MatcherChoice = std::variant<InternalMatcher, ExternalScores>;

struct EvaluationOptions {
  unsigned threads = 0;
  std::size_t density_bins = 50;
  double sweep_min = 0.8;
  double sweep_max = 1.0;
  double sweep_step = 0.005;
  /// Replace params.e_t by the best swept threshold.
  bool tune_threshold = false;
  /// With tune_threshold: sweep on even-position rare latents, report on all.
  bool holdout = false;
};

struct ScopeReport {
  CmcCurve baseline;
  CmcCurve fused;
  CmcCurve modified;
};

struct Report {
  FusionParams params;
  AlignmentConfig alignment;
  /// Comparisons of rare-feature latents against the rare-feature gallery.
  std::vector<ScoreRecord> records;
  ScopeReport rare_subset;
  /// All latents against the full gallery; latents without rare minutiae keep
  /// the baseline score in every curve.
  ScopeReport full;
  std::optional<DensityHistogram> density;
  SweepResult sweep;
  std::size_t n_subjects = 0;
  std::size_t n_rare = 0;
};

/// Baseline score matrix over all subjects (rows = latents, columns =
/// tenprints, both in dataset order), normalised to [0, 1].
ScoreMatrix baseline_scores(const Dataset& d, const MatcherChoice& matcher,
                            unsigned threads = 0);

/// e_hat for each listed latent against every tenprint; row-major
/// rows.size() x subjects.size().
std::vector<double> similarity_matrix(const Dataset& d, std::span<const std::size_t> rows,
                                      const AlignmentConfig& cfg, unsigned threads = 0);

Report evaluate_full(const Dataset& d, const MatcherChoice& matcher,
                     const AlignmentConfig& cfg, const FusionParams& params,
                     const EvaluationOptions& options = {});

/// Writes the CSV report files (and SVG renderings when `svg`).
void write_report(const Report& report, const std::filesystem::path& dir, bool svg = false);

void write_sweep_csv(const SweepResult& sweep, const std::filesystem::path& path);

}  // namespace rarefit
