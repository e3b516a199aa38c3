#include "rarefit/fusion.hpp"

#include <cmath>

#include "rarefit/error.hpp"

namespace rarefit {

namespace {

bool unit(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

}  // namespace

void FusionParams::validate() const {
  if (!(beta > 0.0)) throw InvalidInput("beta must be > 0");
  if (!(alpha >= beta)) throw InvalidInput("alpha must be >= beta");
  if (!unit(e_t)) throw InvalidInput("e_t must lie in [0, 1]");
}

double fuse_mean(double s_m, double e_hat) {
  if (!unit(s_m) || !unit(e_hat)) {
    throw InvalidInput("fuse_mean: scores must lie in [0, 1]");
  }
  return (s_m + e_hat) / 2.0;
}

double threshold_modify(double s_prime, double e_hat, const FusionParams& params) {
  return e_hat > params.e_t ? s_prime * params.alpha : s_prime * params.beta;
}

ScoreRecord make_record(std::string latent_id, std::string tenprint_id, double s_m,
                        double e_hat, bool is_genuine, const FusionParams& params) {
  ScoreRecord r;
  r.latent_id = std::move(latent_id);
  r.tenprint_id = std::move(tenprint_id);
  r.s_m = s_m;
  r.e_hat = e_hat;
  r.s_prime = fuse_mean(s_m, e_hat);
  r.s_double_prime = threshold_modify(r.s_prime, e_hat, params);
  r.is_genuine = is_genuine;
  return r;
}

ScoreRecord score_comparison(const MinutiaSet& latent, const MinutiaSet& tenprint,
                             double s_m, const AlignmentConfig& cfg,
                             const FusionParams& params) {
  const double e_hat = error_to_similarity(fitting_error(latent, tenprint, cfg), cfg);
  return make_record(latent.id(), tenprint.id(), s_m, e_hat, latent.id() == tenprint.id(),
                     params);
}

}  // namespace rarefit
