#pragma once

#include <string>

#include "rarefit/alignment.hpp"
#include "rarefit/minutia.hpp"

namespace rarefit {

/// Reward/penalty multipliers and the similarity threshold of the second
/// stage.
struct FusionParams {
  double alpha = 2.0;
  double beta = 1.0;
  double e_t = 0.92;

  /// Throws InvalidInput unless alpha >= beta > 0 and e_t in [0, 1].
  void validate() const;
};

struct ScoreRecord {
  std::string latent_id;
  std::string tenprint_id;
  double s_m = 0.0;
  double e_hat = 0.0;
  double s_prime = 0.0;
  double s_double_prime = 0.0;
  bool is_genuine = false;

  bool operator==(const ScoreRecord&) const = default;
};

/// Mean-rule fusion (s_m + e_hat) / 2. Both inputs must lie in [0, 1].
double fuse_mean(double s_m, double e_hat);

/// s_prime * alpha when e_hat > e_t, otherwise s_prime * beta. Not clamped.
double threshold_modify(double s_prime, double e_hat, const FusionParams& params);

/// Builds a record from already computed s_m and e_hat.
ScoreRecord make_record(std::string latent_id, std::string tenprint_id, double s_m,
                        double e_hat, bool is_genuine, const FusionParams& params);

/// Runs the alignment stage for (latent, tenprint) and fuses with `s_m`. The
/// genuine flag is set when the two set ids are equal.
ScoreRecord score_comparison(const MinutiaSet& latent, const MinutiaSet& tenprint,
                             double s_m, const AlignmentConfig& cfg,
                             const FusionParams& params);

}  // namespace rarefit
