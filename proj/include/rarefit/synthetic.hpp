#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "rarefit/dataset.hpp"

namespace rarefit {

/// Latent minutia-type counts of the Guardia Civil casework database
/// (3376 minutiae over 268 latents), indexed by type code - 1.
inline constexpr std::array<std::size_t, kMinutiaTypeCount> kCaseworkTypeCounts = {
    1902, 1222, 5, 8, 150, 7, 69, 12, 0, 1, 0, 0, 0, 0, 0};

/// kCaseworkTypeCounts normalised to probabilities.
std::array<double, kMinutiaTypeCount> casework_type_distribution();

struct SynthParams {
  std::size_t n_subjects = 150;
  double tenprint_minutiae_mean = 125.0;
  double latent_minutiae_mean = 13.0;
  double area_width = 400.0;
  double area_height = 400.0;
  double min_spacing = 8.0;
  double position_jitter_sigma = 3.0;  // px
  double angle_jitter_sigma = 5.0;     // degrees
  double max_rotation_deg = 45.0;
  /// Probability per type code - 1; sums to 1.
  std::array<double, kMinutiaTypeCount> type_distribution = casework_type_distribution();
  /// Chance that a latent rare minutia is lost (dropped, or demoted to a
  /// typical type with equal odds).
  double rare_dropout_prob = 0.1;
  std::uint64_t seed = 1;

  /// Throws InvalidInput when an invariant does not hold.
  void validate() const;
};

/// Seed-deterministic dataset: each tenprint is a spaced uniform scatter, each
/// latent a jittered, rigidly moved contiguous patch of its tenprint. Throws
/// GenerationError when the area cannot hold the requested spacing.
Dataset gen_synthetic(const SynthParams& params, unsigned threads = 1);

}  // namespace rarefit
