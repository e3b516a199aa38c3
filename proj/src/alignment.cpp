#include "rarefit/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "rarefit/error.hpp"

namespace rarefit {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

inline double distance(Point2 a, Point2 b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

// Relative eigenvalue floor below which the centred latent scatter is
// treated as rank deficient.
constexpr double kDegenerateRatio = 1e-10;

}  // namespace

void AlignmentConfig::validate() const {
  if (!(rotation_min_deg < rotation_max_deg)) {
    throw InvalidInput("rotation_min_deg must be below rotation_max_deg");
  }
  if (!(rotation_step_deg > 0.0)) throw InvalidInput("rotation_step_deg must be > 0");
  if (!(distance_threshold > 0.0)) throw InvalidInput("distance_threshold must be > 0");
  if (min_correspondences < 3) throw InvalidInput("min_correspondences must be >= 3");
  if (!(error_cap > 0.0)) throw InvalidInput("error_cap must be > 0");
}

std::vector<double> AlignmentConfig::rotation_grid() const {
  const double span = rotation_max_deg - rotation_min_deg;
  const auto steps = static_cast<long>(std::floor(span / rotation_step_deg + 1e-9));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(steps) + 1);
  for (long k = 0; k <= steps; ++k) {
    grid.push_back(rotation_min_deg + static_cast<double>(k) * rotation_step_deg);
  }
  return grid;
}

// --- PointIndex -------------------------------------------------------------

PointIndex::PointIndex(std::span<const Point2> points)
    : points_(points.begin(), points.end()) {
  build();
}

PointIndex::PointIndex(const MinutiaSet& set) : points_(locations(set)) { build(); }

void PointIndex::build() {
  if (points_.empty()) throw InvalidInput("PointIndex: no points");
  double x1 = points_.front().x;
  double y1 = points_.front().y;
  x0_ = x1;
  y0_ = y1;
  for (const auto& p : points_) {
    x0_ = std::min(x0_, p.x);
    y0_ = std::min(y0_, p.y);
    x1 = std::max(x1, p.x);
    y1 = std::max(y1, p.y);
  }
  const double w = x1 - x0_;
  const double h = y1 - y0_;
  const double n = static_cast<double>(points_.size());
  cell_ = std::max(0.5 * std::sqrt(std::max(w * h, 1.0) / n), 1.0);
  // queries beyond the margin fall back to a linear scan
  const double margin = std::max(2.0 * cell_, 0.25 * std::max(w, h));
  x0_ -= margin;
  y0_ -= margin;
  nx_ = std::clamp(static_cast<int>((w + 2.0 * margin) / cell_) + 1, 1, 256);
  ny_ = std::clamp(static_cast<int>((h + 2.0 * margin) / cell_) + 1, 1, 256);
  cell_ = std::max({cell_, (w + 2.0 * margin) / nx_ * (1.0 + 1e-9),
                    (h + 2.0 * margin) / ny_ * (1.0 + 1e-9)});

  // A point can be nearest to some query in a cell only if its distance to
  // the cell is at most the smallest farthest-corner distance of any point.
  constexpr double kSlack = 1e-6;
  const auto ncells = static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_);
  cell_start_.assign(ncells + 1, 0);
  sorted_.clear();
  for (int j = 0; j < ny_; ++j) {
    for (int i = 0; i < nx_; ++i) {
      const double rx0 = x0_ + i * cell_ - kSlack;
      const double rx1 = x0_ + (i + 1) * cell_ + kSlack;
      const double ry0 = y0_ + j * cell_ - kSlack;
      const double ry1 = y0_ + (j + 1) * cell_ + kSlack;
      double upper = std::numeric_limits<double>::infinity();
      for (const auto& p : points_) {
        const double fx = std::max(std::abs(p.x - rx0), std::abs(p.x - rx1));
        const double fy = std::max(std::abs(p.y - ry0), std::abs(p.y - ry1));
        upper = std::min(upper, fx * fx + fy * fy);
      }
      for (const auto& p : points_) {
        const double dx = std::max({rx0 - p.x, 0.0, p.x - rx1});
        const double dy = std::max({ry0 - p.y, 0.0, p.y - ry1});
        if (dx * dx + dy * dy <= upper * (1.0 + 1e-9) + kSlack) sorted_.push_back(p);
      }
      cell_start_[static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) +
                  static_cast<std::size_t>(i) + 1] = sorted_.size();
    }
  }
}

double PointIndex::nearest_distance(Point2 q) const {
  const double fx = std::floor((q.x - x0_) / cell_);
  const double fy = std::floor((q.y - y0_) / cell_);
  std::size_t lo = 0;
  std::size_t hi = 0;
  std::span<const Point2> candidates;
  if (fx >= 0.0 && fy >= 0.0 && fx < nx_ && fy < ny_) {
    const auto c = static_cast<std::size_t>(fy) * static_cast<std::size_t>(nx_) +
                   static_cast<std::size_t>(fx);
    lo = cell_start_[c];
    hi = cell_start_[c + 1];
    candidates = std::span<const Point2>(sorted_).subspan(lo, hi - lo);
  } else {
    candidates = points_;
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : candidates) {
    const double dx = q.x - p.x;
    const double dy = q.y - p.y;
    best = std::min(best, dx * dx + dy * dy);
  }
  return std::sqrt(best);
}

// --- geometry -----------------------------------------------------------------

std::vector<Point2> locations(const MinutiaSet& set) {
  std::vector<Point2> out;
  out.reserve(set.size());
  for (const auto& m : set) out.push_back({m.x, m.y});
  return out;
}

std::vector<AnchorPair> enumerate_anchor_pairs(const MinutiaSet& latent,
                                               const MinutiaSet& tenprint) {
  std::vector<AnchorPair> out;
  for (std::size_t i = 0; i < latent.size(); ++i) {
    const Minutia& l = latent[i];
    if (!is_rare(l.type)) continue;
    for (std::size_t j = 0; j < tenprint.size(); ++j) {
      const Minutia& t = tenprint[j];
      if (t.type != l.type) continue;
      out.push_back({i, j, l, t, {t.x - l.x, t.y - l.y}});
    }
  }
  return out;
}

namespace {

struct Rotation {
  double c;
  double s;
  explicit Rotation(double angle_deg)
      : c(std::cos(angle_deg * kDegToRad)), s(std::sin(angle_deg * kDegToRad)) {}
};

inline Point2 rotate_about_anchor(Point2 p, const AnchorPair& anchor, const Rotation& r) {
  // p + delta - pivot, with pivot = tenprint anchor, is p - latent anchor
  const double u = p.x - anchor.latent_anchor.x;
  const double v = p.y - anchor.latent_anchor.y;
  return {anchor.tenprint_anchor.x + (r.c * u - r.s * v),
          anchor.tenprint_anchor.y + (r.s * u + r.c * v)};
}

}  // namespace

Point2 transform_point(Point2 p, const AnchorPair& anchor, double angle_deg) {
  return rotate_about_anchor(p, anchor, Rotation(angle_deg));
}

MinutiaSet transform_latent(const MinutiaSet& latent, const AnchorPair& anchor,
                            double angle_deg) {
  const Rotation rot(angle_deg);
  std::vector<Minutia> out;
  out.reserve(latent.size());
  for (const auto& m : latent) {
    const Point2 p = rotate_about_anchor({m.x, m.y}, anchor, rot);
    Minutia t;
    t.x = p.x;
    t.y = p.y;
    t.theta = wrap_degrees(m.theta + angle_deg);
    t.type = m.type;
    out.push_back(std::move(t));
  }
  return MinutiaSet(latent.id(), latent.kind(), std::move(out));
}

double mean_closest_distance(std::span<const Point2> aligned, const PointIndex& tenprint) {
  if (aligned.empty()) throw InvalidInput("mean_closest_distance: empty latent");
  double sum = 0.0;
  for (const auto& p : aligned) sum += tenprint.nearest_distance(p);
  return sum / static_cast<double>(aligned.size());
}

double mean_closest_distance(const MinutiaSet& aligned, const MinutiaSet& tenprint) {
  const PointIndex index(tenprint);
  const auto pts = locations(aligned);
  return mean_closest_distance(pts, index);
}

RotationSearch search_rotation(const MinutiaSet& latent, const PointIndex& tenprint,
                               const AnchorPair& anchor, const AlignmentConfig& cfg) {
  const auto grid = cfg.rotation_grid();
  const auto pts = locations(latent);
  const auto n = static_cast<double>(pts.size());

  // (mean, |angle|, angle) lexicographic order decides the winner, so the
  // evaluation order below only affects how much gets pruned.
  auto better = [](double mean, double angle, const RotationSearch& best) {
    if (mean != best.mean_distance) return mean < best.mean_distance;
    const double fa = std::abs(angle);
    const double fb = std::abs(best.angle_deg);
    return fa != fb ? fa < fb : angle < best.angle_deg;
  };

  RotationSearch best{0.0, std::numeric_limits<double>::infinity()};
  auto evaluate = [&](double angle) {
    // Partial sums only grow, so a partial mean above the incumbent cannot
    // win; equality is kept because the tie rule may still prefer it.
    const Rotation rot(angle);
    double sum = 0.0;
    for (const auto& p : pts) {
      sum += tenprint.nearest_distance(rotate_about_anchor(p, anchor, rot));
      if (sum / n > best.mean_distance) return;
    }
    const double mean = sum / n;
    if (better(mean, angle, best)) best = {angle, mean};
  };

  // coarse pass, then the remaining angles nearest the coarse winner first
  constexpr std::size_t kCoarseStride = 8;
  std::vector<double> rest;
  rest.reserve(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (k % kCoarseStride == 0) {
      evaluate(grid[k]);
    } else {
      rest.push_back(grid[k]);
    }
  }
  const double centre = best.angle_deg;
  std::stable_sort(rest.begin(), rest.end(), [centre](double a, double b) {
    return std::abs(a - centre) < std::abs(b - centre);
  });
  for (const double angle : rest) evaluate(angle);
  return best;
}

RotationSearch search_rotation(const MinutiaSet& latent, const MinutiaSet& tenprint,
                               const AnchorPair& anchor, const AlignmentConfig& cfg) {
  return search_rotation(latent, PointIndex(tenprint), anchor, cfg);
}

Correspondence establish_correspondence(const MinutiaSet& aligned,
                                        const MinutiaSet& tenprint,
                                        const AlignmentConfig& cfg) {
  struct Candidate {
    double d;
    std::size_t li;
    std::size_t ti;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    const Point2 a{aligned[i].x, aligned[i].y};
    for (std::size_t j = 0; j < tenprint.size(); ++j) {
      const double d = distance(a, {tenprint[j].x, tenprint[j].y});
      if (d <= cfg.distance_threshold) candidates.push_back({d, i, j});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.d != b.d) return a.d < b.d;
    if (a.li != b.li) return a.li < b.li;
    return a.ti < b.ti;
  });

  std::vector<bool> used_l(aligned.size(), false);
  std::vector<bool> used_t(tenprint.size(), false);
  Correspondence corr;
  for (const auto& c : candidates) {
    if (used_l[c.li] || used_t[c.ti]) continue;
    used_l[c.li] = true;
    used_t[c.ti] = true;
    corr.pairs.emplace_back(c.li, c.ti);
  }
  return corr;
}

AffineFit fit_affine(std::span<const Point2> latent_points,
                     std::span<const Point2> tenprint_points, Point2 tau,
                     std::size_t min_correspondences) {
  if (latent_points.size() != tenprint_points.size()) {
    throw InsufficientCorrespondence("fit_affine: point lists differ in length");
  }
  const std::size_t p = latent_points.size();
  if (p < min_correspondences) {
    throw InsufficientCorrespondence("fit_affine: " + std::to_string(p) +
                                     " correspondences, need " +
                                     std::to_string(min_correspondences));
  }

  // Targets with the fixed translation removed: b_i = m'_i - tau.
  // Normal equations are solved in centred form; the centroid terms recover
  // the third column of A.
  const auto n = static_cast<double>(p);
  Eigen::Vector2d mean_l = Eigen::Vector2d::Zero();
  Eigen::Vector2d mean_b = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < p; ++i) {
    mean_l += Eigen::Vector2d(latent_points[i].x, latent_points[i].y);
    mean_b += Eigen::Vector2d(tenprint_points[i].x - tau.x, tenprint_points[i].y - tau.y);
  }
  mean_l /= n;
  mean_b /= n;

  Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d cross = Eigen::Matrix2d::Zero();
  for (std::size_t i = 0; i < p; ++i) {
    const Eigen::Vector2d l = Eigen::Vector2d(latent_points[i].x, latent_points[i].y) - mean_l;
    const Eigen::Vector2d b =
        Eigen::Vector2d(tenprint_points[i].x - tau.x, tenprint_points[i].y - tau.y) - mean_b;
    scatter += l * l.transpose();
    cross += l * b.transpose();
  }

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(scatter, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues()(0);
  const double lmax = eig.eigenvalues()(1);
  if (!(lmax > 0.0) || lmin <= kDegenerateRatio * lmax) {
    throw DegenerateGeometry("fit_affine: latent points are collinear or coincident");
  }

  // scatter * W = cross; column k of W is row k of the linear block of A
  const Eigen::Matrix2d W = scatter.ldlt().solve(cross);
  AffineFit fit;
  fit.tau = tau;
  fit.A.setZero();
  fit.A.topLeftCorner<2, 2>() = W.transpose();
  fit.A.block<2, 1>(0, 2) = mean_b - W.transpose() * mean_l;
  fit.A(2, 2) = 1.0;

  double sum = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    const double lx = latent_points[i].x;
    const double ly = latent_points[i].y;
    const double rx =
        tenprint_points[i].x - (fit.A(0, 0) * lx + fit.A(0, 1) * ly + fit.A(0, 2) + tau.x);
    const double ry =
        tenprint_points[i].y - (fit.A(1, 0) * lx + fit.A(1, 1) * ly + fit.A(1, 2) + tau.y);
    sum += rx * rx + ry * ry;
  }
  fit.error = sum / n;
  return fit;
}

std::string_view status_name(AlignmentStatus s) {
  switch (s) {
    case AlignmentStatus::Fitted:
      return "fitted";
    case AlignmentStatus::NoAnchor:
      return "no-anchor";
    case AlignmentStatus::InsufficientCorrespondence:
      return "insufficient-correspondence";
  }
  return "unknown";
}

AlignmentResult align(const MinutiaSet& latent, const MinutiaSet& tenprint,
                      const PointIndex& tenprint_index, const AlignmentConfig& cfg) {
  AlignmentResult result;
  const auto anchors = enumerate_anchor_pairs(latent, tenprint);
  if (anchors.empty()) {
    result.status = AlignmentStatus::NoAnchor;
    return result;
  }

  const double penalty = cfg.distance_threshold * cfg.distance_threshold;
  std::vector<std::optional<double>> errors;
  for (const auto& anchor : anchors) {
    AnchorOutcome out;
    out.anchor = anchor;
    out.rotation = search_rotation(latent, tenprint_index, anchor, cfg);
    const MinutiaSet aligned = transform_latent(latent, anchor, out.rotation.angle_deg);
    out.correspondence = establish_correspondence(aligned, tenprint, cfg);
    out.correspondence.rotation_deg = out.rotation.angle_deg;

    const std::size_t mated = out.correspondence.size();
    if (mated >= cfg.min_correspondences) {
      std::vector<Point2> lp;
      std::vector<Point2> tp;
      lp.reserve(mated);
      tp.reserve(mated);
      for (const auto& [li, ti] : out.correspondence.pairs) {
        lp.push_back({latent[li].x, latent[li].y});
        tp.push_back({tenprint[ti].x, tenprint[ti].y});
      }
      try {
        AffineFit fit = fit_affine(lp, tp, anchor.delta, cfg.min_correspondences);
        fit.correspondence = out.correspondence;
        const std::size_t unmated = latent.size() - mated;
        if (!cfg.penalize_unmatched || unmated == 0) {
          out.error = fit.error;
        } else {
          out.error = (fit.error * static_cast<double>(mated) +
                       static_cast<double>(unmated) * penalty) /
                      static_cast<double>(latent.size());
        }
        out.fit = std::move(fit);
      } catch (const DegenerateGeometry&) {
        // anchor skipped
      }
    }
    errors.push_back(out.error);
    result.anchors.push_back(std::move(out));
  }

  result.error = min_error(errors);
  if (result.error) {
    result.status = AlignmentStatus::Fitted;
    for (std::size_t i = 0; i < errors.size(); ++i) {
      if (errors[i] && *errors[i] == *result.error) {
        result.best_anchor = i;
        break;
      }
    }
  } else {
    result.status = AlignmentStatus::InsufficientCorrespondence;
  }
  return result;
}

AlignmentResult align(const MinutiaSet& latent, const MinutiaSet& tenprint,
                      const AlignmentConfig& cfg) {
  return align(latent, tenprint, PointIndex(tenprint), cfg);
}

std::optional<double> fitting_error(const MinutiaSet& latent, const MinutiaSet& tenprint,
                                    const AlignmentConfig& cfg) {
  return align(latent, tenprint, cfg).error;
}

std::optional<double> min_error(std::span<const std::optional<double>> errors) {
  std::optional<double> best;
  for (const auto& e : errors) {
    if (e && (!best || *e < *best)) best = e;
  }
  return best;
}

double error_to_similarity(std::optional<double> error, const AlignmentConfig& cfg) {
  if (!error) return kFallbackSimilarity;
  if (std::isnan(*error) || *error < 0.0) {
    throw InvalidInput("error_to_similarity: negative fitting error");
  }
  return 1.0 - std::min(*error, cfg.error_cap) / cfg.error_cap;
}

}  // namespace rarefit
