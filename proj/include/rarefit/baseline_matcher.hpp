#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rarefit/minutia.hpp"

namespace rarefit {

/// How the built-in matcher sees rare minutiae.
enum class RareHandling {
  Demote,  ///< treated as ridge endings
  Drop,    ///< ignored
};

struct MatcherConfig {
  double distance_tolerance = 10.0;  // px
  double angle_tolerance_deg = 20.0;
  RareHandling rare = RareHandling::Demote;
  /// When > 0, only the largest group of associations whose implied global
  /// rotations fit in a window of this width is counted.
  double rotation_window_deg = 40.0;
};

/// Intra-set minutia-pair features of one impression: segment length and the
/// two minutia directions measured relative to the segment.
class PairTable {
 public:
  struct Entry {
    double length = 0.0;
    double rel_first = 0.0;
    double rel_second = 0.0;
    double direction = 0.0;  // segment direction, degrees
  };

  PairTable(const MinutiaSet& set, const MatcherConfig& cfg);

  /// Each unordered pair once, first index < second index.
  std::span<const Entry> forward() const { return forward_; }
  /// Both orientations of every pair, bucketed by rel_first then sorted by
  /// length inside each bucket.
  std::span<const Entry> bucket(std::size_t b) const;
  std::size_t bucket_count() const { return bucket_start_.size() - 1; }
  double bucket_width() const { return bucket_width_; }
  std::size_t minutia_count() const { return minutia_count_; }

 private:
  std::vector<Entry> forward_;
  std::vector<Entry> both_;
  std::vector<std::size_t> bucket_start_;
  double bucket_width_ = 20.0;
  std::size_t minutia_count_ = 0;
};

/// Number of compatible pair associations between the two tables: segment
/// lengths within the distance tolerance and both relative directions within
/// the angle tolerance.
double match_score(const PairTable& latent, const PairTable& tenprint,
                   const MatcherConfig& cfg);

double internal_match_score(const MinutiaSet& latent, const MinutiaSet& tenprint,
                            const MatcherConfig& cfg = {});

/// Dense latent x tenprint score matrix, row-major.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(std::vector<std::string> latent_ids, std::vector<std::string> tenprint_ids);
  ScoreMatrix(std::vector<std::string> latent_ids, std::vector<std::string> tenprint_ids,
              std::vector<double> scores);

  std::size_t rows() const { return latent_ids_.size(); }
  std::size_t cols() const { return tenprint_ids_.size(); }
  double& at(std::size_t r, std::size_t c) { return scores_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return scores_[r * cols() + c]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(scores_).subspan(r * cols(), cols());
  }
  std::span<const double> values() const { return scores_; }

  const std::vector<std::string>& latent_ids() const { return latent_ids_; }
  const std::vector<std::string>& tenprint_ids() const { return tenprint_ids_; }

  /// Sub-matrix with the given row and column indices, in that order.
  ScoreMatrix select(std::span<const std::size_t> rows,
                     std::span<const std::size_t> cols) const;

  bool operator==(const ScoreMatrix&) const = default;

 private:
  std::vector<std::string> latent_ids_;
  std::vector<std::string> tenprint_ids_;
  std::vector<double> scores_;
};

/// Parses the score CSV: header "latent_id,<tenprint ids...>", then one row per
/// latent. Throws ParseError with row/column context.
ScoreMatrix load_external_scores(const std::filesystem::path& path);

/// As above, and additionally requires the latent and tenprint id sets to
/// equal `expected_ids` exactly; the result is reordered to that order.
ScoreMatrix load_external_scores(const std::filesystem::path& path,
                                 std::span<const std::string> expected_ids);

void save_scores(const ScoreMatrix& m, const std::filesystem::path& path);

/// Matrix-global min-max scaling to [0, 1]; a constant matrix maps to 0.5.
ScoreMatrix normalize_scores(const ScoreMatrix& m);

}  // namespace rarefit
