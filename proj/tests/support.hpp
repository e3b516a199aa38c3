#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rarefit/alignment.hpp"
#include "rarefit/dataset.hpp"
#include "rarefit/minutia.hpp"

namespace testing {

using rarefit::Minutia;
using rarefit::MinutiaSet;
using rarefit::MinutiaType;
using rarefit::Point2;
using rarefit::SetKind;

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline Minutia make_minutia(double x, double y, double theta,
                            MinutiaType type = MinutiaType::RidgeEnding) {
  Minutia m;
  m.x = x;
  m.y = y;
  m.theta = theta;
  m.type = type;
  return m;
}

inline MinutiaType typical_type(Rng& rng) {
  return uniform_index(rng, 0, 1) == 0 ? MinutiaType::RidgeEnding : MinutiaType::Bifurcation;
}

/// Spaced random minutiae in [origin, origin + extent)^2, all typical types.
inline std::vector<Minutia> scatter(Rng& rng, std::size_t n, double extent = 400.0,
                                    double spacing = 8.0, double origin = 100.0) {
  std::vector<Minutia> out;
  while (out.size() < n) {
    const double x = origin + uniform(rng, 0.0, extent);
    const double y = origin + uniform(rng, 0.0, extent);
    bool ok = true;
    for (const auto& m : out) {
      if (std::hypot(m.x - x, m.y - y) < spacing) {
        ok = false;
        break;
      }
    }
    if (ok) out.push_back(make_minutia(x, y, uniform(rng, 0.0, 360.0), typical_type(rng)));
  }
  return out;
}

inline Point2 rotate_about(Point2 p, Point2 pivot, double deg) {
  const double r = deg * std::numbers::pi / 180.0;
  const double c = std::cos(r);
  const double s = std::sin(r);
  const double dx = p.x - pivot.x;
  const double dy = p.y - pivot.y;
  return {pivot.x + c * dx - s * dy, pivot.y + s * dx + c * dy};
}

/// A tenprint and a latent cut from it, rigidly moved so that rotating the
/// latent by `angle_deg` about the shared anchor restores the tenprint
/// coordinates exactly.
struct ConstructedPair {
  MinutiaSet latent;
  MinutiaSet tenprint;
  std::size_t latent_anchor = 0;
  std::size_t tenprint_anchor = 0;
  double angle_deg = 0.0;
  Point2 shift;
};

inline ConstructedPair constructed_pair(Rng& rng, double angle_deg, std::size_t tenprint_size = 60,
                                        std::size_t latent_size = 13,
                                        MinutiaType anchor_type = MinutiaType::Fragment) {
  auto tp = scatter(rng, tenprint_size);
  const std::size_t a = uniform_index(rng, 0, tp.size() - 1);
  tp[a].type = anchor_type;

  std::vector<std::size_t> order(tp.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return std::hypot(tp[i].x - tp[a].x, tp[i].y - tp[a].y) <
           std::hypot(tp[j].x - tp[a].x, tp[j].y - tp[a].y);
  });
  order.resize(std::min(latent_size, order.size()));
  std::shuffle(order.begin(), order.end(), rng);

  const Point2 shift{uniform(rng, -60.0, 60.0), uniform(rng, -60.0, 60.0)};
  const Point2 pivot{tp[a].x, tp[a].y};
  std::vector<Minutia> lat;
  std::size_t latent_anchor = 0;
  for (const std::size_t i : order) {
    const Point2 q = rotate_about({tp[i].x, tp[i].y}, pivot, -angle_deg);
    if (i == a) latent_anchor = lat.size();
    lat.push_back(make_minutia(q.x + shift.x, q.y + shift.y,
                               rarefit::wrap_degrees(tp[i].theta - angle_deg), tp[i].type));
  }
  return {MinutiaSet("s", SetKind::Latent, std::move(lat)),
          MinutiaSet("s", SetKind::Tenprint, std::move(tp)), latent_anchor, a, angle_deg,
          shift};
}

/// Latents holding exactly `counts[c - 1]` minutiae of type code c, spread
/// over sets of at most 13; each tenprint copies its latent.
inline rarefit::Dataset frequency_fixture(std::span<const std::size_t> counts) {
  std::vector<MinutiaType> pool;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    for (std::size_t k = 0; k < counts[c]; ++k) pool.push_back(static_cast<MinutiaType>(c + 1));
  }
  rarefit::Dataset d;
  std::size_t next = 0;
  while (next < pool.size()) {
    std::vector<Minutia> ms;
    for (std::size_t k = 0; k < 13 && next < pool.size(); ++k, ++next) {
      ms.push_back(make_minutia(20.0 + 25.0 * static_cast<double>(k), 40.0, 90.0, pool[next]));
    }
    char id[16];
    std::snprintf(id, sizeof id, "g%03zu", d.subjects.size() + 1);
    d.subjects.push_back(rarefit::make_subject(id, ms, ms));
  }
  return d;
}

// --- brute-force oracles --------------------------------------------------------

inline double brute_nearest(Point2 q, std::span<const Point2> pts) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : pts) best = std::min(best, std::hypot(p.x - q.x, p.y - q.y));
  return best;
}

inline double brute_mean_closest(std::span<const Point2> latent, std::span<const Point2> tp) {
  double sum = 0.0;
  for (const auto& q : latent) sum += brute_nearest(q, tp);
  return sum / static_cast<double>(latent.size());
}

/// Smallest mean under (mean, |angle|, angle) order over every grid angle.
inline rarefit::RotationSearch brute_rotation(const MinutiaSet& latent,
                                              const MinutiaSet& tenprint,
                                              const rarefit::AnchorPair& anchor,
                                              const rarefit::AlignmentConfig& cfg) {
  const auto tp = rarefit::locations(tenprint);
  rarefit::RotationSearch best{0.0, std::numeric_limits<double>::infinity()};
  for (const double angle : cfg.rotation_grid()) {
    std::vector<Point2> moved;
    for (const auto& m : latent) moved.push_back(rarefit::transform_point({m.x, m.y}, anchor, angle));
    const double mean = brute_mean_closest(moved, tp);
    const bool better =
        mean < best.mean_distance ||
        (mean == best.mean_distance &&
         (std::abs(angle) < std::abs(best.angle_deg) ||
          (std::abs(angle) == std::abs(best.angle_deg) && angle < best.angle_deg)));
    if (better) best = {angle, mean};
  }
  return best;
}

/// Greedy matching by repeated global minimum search over unmatched pairs.
inline std::vector<std::pair<std::size_t, std::size_t>> brute_greedy(const MinutiaSet& latent,
                                                                     const MinutiaSet& tenprint,
                                                                     double threshold) {
  std::vector<bool> lu(latent.size(), false);
  std::vector<bool> tu(tenprint.size(), false);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (;;) {
    double bd = std::numeric_limits<double>::infinity();
    std::size_t bi = 0;
    std::size_t bj = 0;
    for (std::size_t i = 0; i < latent.size(); ++i) {
      if (lu[i]) continue;
      for (std::size_t j = 0; j < tenprint.size(); ++j) {
        if (tu[j]) continue;
        const double d = std::hypot(latent[i].x - tenprint[j].x, latent[i].y - tenprint[j].y);
        if (d > threshold) continue;
        if (d < bd) {
          bd = d;
          bi = i;
          bj = j;
        }
      }
    }
    if (!std::isfinite(bd)) break;
    lu[bi] = true;
    tu[bj] = true;
    out.emplace_back(bi, bj);
  }
  return out;
}

/// Rank of the mate: number of row entries scoring at least the mate score.
inline std::size_t brute_rank(std::span<const double> row, std::size_t mate_col) {
  std::size_t r = 0;
  for (const double s : row) r += s >= row[mate_col] ? 1 : 0;
  return r;
}

}  // namespace testing
