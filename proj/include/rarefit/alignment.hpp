#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "rarefit/minutia.hpp"

namespace rarefit {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2&) const = default;
};

/// Similarity assigned when no same-type rare anchor exists (or no anchor
/// yields a usable fit).
inline constexpr double kFallbackSimilarity = 0.25;

struct AlignmentConfig {
  double rotation_min_deg = -45.0;
  double rotation_max_deg = 45.0;
  double rotation_step_deg = 1.0;
  /// Mating distance in pixels, used for both closeness and correspondence.
  double distance_threshold = 15.0;
  std::size_t min_correspondences = 3;
  /// Fitting error (px^2) at which the similarity saturates to 0.
  double error_cap = 2500.0;
  /// Charge every unmated latent minutia distance_threshold^2 and average
  /// over the whole latent. When false the per-anchor error is the plain
  /// mean residual over the mated pairs.
  bool penalize_unmatched = true;

  /// Throws InvalidInput when an invariant does not hold.
  void validate() const;

  /// Inclusive grid rotation_min, rotation_min + step, ..., rotation_max.
  std::vector<double> rotation_grid() const;
};

/// Two same-type rare minutiae, one per set, that are superimposed by the
/// translation `delta`.
struct AnchorPair {
  std::size_t latent_index = 0;
  std::size_t tenprint_index = 0;
  Minutia latent_anchor;
  Minutia tenprint_anchor;
  Point2 delta;
};

/// One-to-one pairing (latent_index, tenprint_index) found at `rotation_deg`.
struct Correspondence {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double rotation_deg = 0.0;

  std::size_t size() const { return pairs.size(); }
};

/// Least-squares affine map M_s ~= A L + tau. The third row of A is fixed to
/// (0, 0, 1); tau is the anchor translation.
struct AffineFit {
  Eigen::Matrix3d A = Eigen::Matrix3d::Identity();
  Point2 tau;
  /// Mean squared residual over the fitted pairs (px^2).
  double error = 0.0;
  Correspondence correspondence;
};

/// Uniform-grid nearest-neighbour index over the (x, y) of a minutia set.
class PointIndex {
 public:
  explicit PointIndex(std::span<const Point2> points);
  explicit PointIndex(const MinutiaSet& set);

  /// Euclidean distance from `q` to the closest indexed point.
  double nearest_distance(Point2 q) const;

  std::size_t size() const { return points_.size(); }

 private:
  void build();

  std::vector<Point2> points_;
  double x0_ = 0.0;
  double y0_ = 0.0;
  double cell_ = 1.0;
  int nx_ = 1;
  int ny_ = 1;
  std::vector<std::size_t> cell_start_;
  std::vector<Point2> sorted_;
};

std::vector<Point2> locations(const MinutiaSet& set);

/// All same-type (rare latent, rare tenprint) pairs, latent-major order.
std::vector<AnchorPair> enumerate_anchor_pairs(const MinutiaSet& latent,
                                               const MinutiaSet& tenprint);

/// Translates every latent minutia by anchor.delta and rotates it by
/// `angle_deg` about the tenprint anchor. Thetas shift by the same angle.
MinutiaSet transform_latent(const MinutiaSet& latent, const AnchorPair& anchor,
                            double angle_deg);

/// Point form of transform_latent.
Point2 transform_point(Point2 p, const AnchorPair& anchor, double angle_deg);

/// Mean over latent minutiae of the distance to the nearest tenprint minutia.
double mean_closest_distance(const MinutiaSet& aligned, const MinutiaSet& tenprint);
double mean_closest_distance(std::span<const Point2> aligned, const PointIndex& tenprint);

struct RotationSearch {
  double angle_deg = 0.0;
  double mean_distance = 0.0;
};

/// Scans the rotation grid and returns the angle with the smallest mean
/// closest distance. Ties go to the smaller |angle|, then the more negative.
RotationSearch search_rotation(const MinutiaSet& latent, const MinutiaSet& tenprint,
                               const AnchorPair& anchor, const AlignmentConfig& cfg);
RotationSearch search_rotation(const MinutiaSet& latent, const PointIndex& tenprint,
                               const AnchorPair& anchor, const AlignmentConfig& cfg);

/// Greedy ascending-distance one-to-one matching; only pairs within
/// cfg.distance_threshold are accepted. Distance ties resolve by
/// (latent_index, tenprint_index).
Correspondence establish_correspondence(const MinutiaSet& aligned,
                                        const MinutiaSet& tenprint,
                                        const AlignmentConfig& cfg);

/// Solves for the six free entries of A minimising
/// sum_i |m'_i - A m_i - tau|^2 over the given point pairs.
///
/// Throws InsufficientCorrespondence below `min_correspondences` pairs (or on
/// a size mismatch) and DegenerateGeometry when the latent points are
/// collinear.
AffineFit fit_affine(std::span<const Point2> latent_points,
                     std::span<const Point2> tenprint_points, Point2 tau,
                     std::size_t min_correspondences = 3);

enum class AlignmentStatus {
  Fitted,
  NoAnchor,
  InsufficientCorrespondence,
};

std::string_view status_name(AlignmentStatus s);

struct AnchorOutcome {
  AnchorPair anchor;
  RotationSearch rotation;
  Correspondence correspondence;
  std::optional<AffineFit> fit;
  /// Error used to rank this anchor; absent when the anchor was skipped.
  std::optional<double> error;
};

struct AlignmentResult {
  AlignmentStatus status = AlignmentStatus::NoAnchor;
  std::optional<double> error;
  std::optional<std::size_t> best_anchor;
  std::vector<AnchorOutcome> anchors;
};

/// Full first stage: every anchor is rotated, mated, and fitted; the result
/// keeps the anchor with the smallest error.
AlignmentResult align(const MinutiaSet& latent, const MinutiaSet& tenprint,
                      const AlignmentConfig& cfg);
AlignmentResult align(const MinutiaSet& latent, const MinutiaSet& tenprint,
                      const PointIndex& tenprint_index, const AlignmentConfig& cfg);

/// Minimum anchor error, or nullopt when no anchor produced a fit.
std::optional<double> fitting_error(const MinutiaSet& latent, const MinutiaSet& tenprint,
                                    const AlignmentConfig& cfg);

/// Smallest present value; nullopt if none.
std::optional<double> min_error(std::span<const std::optional<double>> errors);

/// 1 - min(E, cap)/cap, or kFallbackSimilarity when E is absent.
/// Throws InvalidInput for negative E.
double error_to_similarity(std::optional<double> error, const AlignmentConfig& cfg);

}  // namespace rarefit
