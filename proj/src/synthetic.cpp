#include "rarefit/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "rarefit/error.hpp"
#include "rarefit/parallel.hpp"

namespace rarefit {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
// rejection-sampling budget per tenprint minutia
constexpr std::size_t kPlacementAttempts = 500;
constexpr double kRawPointOffset = 3.0;

std::string subject_id(std::size_t index, std::size_t total) {
  const std::string digits = std::to_string(index + 1);
  const std::size_t width = std::max<std::size_t>(3, std::to_string(total).size());
  return "s" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

// Mean location / minimum orientation of two or three marked points around
// the feature, as an examiner would annotate a deviation or an assemble.
Minutia multipoint_feature(double x, double y, double theta, MinutiaType type,
                           std::mt19937_64& rng) {
  const std::size_t n = type == MinutiaType::Assemble ? 3 : 2;
  std::uniform_real_distribution<double> spread(0.0, 10.0);
  std::vector<RawPoint> pts;
  for (std::size_t k = 0; k < n; ++k) {
    const double offset = (static_cast<double>(k) - static_cast<double>(n - 1) / 2.0) *
                          kRawPointOffset;
    const double dir = theta * kDegToRad;
    pts.push_back({std::max(0.0, x + offset * std::cos(dir)),
                   std::max(0.0, y + offset * std::sin(dir)),
                   wrap_degrees(theta + spread(rng))});
  }
  return collapse_multipoint(pts, type);
}

bool is_multipoint(MinutiaType t) {
  return t == MinutiaType::Deviation || t == MinutiaType::Assemble;
}

Subject make_one(const SynthParams& params, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(params.seed),
                    static_cast<std::uint32_t>(params.seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> ux(0.0, params.area_width);
  std::uniform_real_distribution<double> uy(0.0, params.area_height);
  std::uniform_real_distribution<double> utheta(0.0, 360.0);
  std::discrete_distribution<int> utype(params.type_distribution.begin(),
                                        params.type_distribution.end());

  const auto n_tenprint = std::max<std::size_t>(
      3, std::poisson_distribution<std::size_t>(params.tenprint_minutiae_mean)(rng));

  // tenprint: uniform scatter with minimum spacing
  std::vector<Minutia> tenprint;
  tenprint.reserve(n_tenprint);
  const double spacing2 = params.min_spacing * params.min_spacing;
  std::size_t attempts = 0;
  while (tenprint.size() < n_tenprint) {
    if (++attempts > kPlacementAttempts * n_tenprint) {
      throw GenerationError("cannot place " + std::to_string(n_tenprint) +
                            " minutiae with spacing " + std::to_string(params.min_spacing) +
                            " px in a " + std::to_string(params.area_width) + "x" +
                            std::to_string(params.area_height) + " area");
    }
    const double x = ux(rng);
    const double y = uy(rng);
    const bool crowded = std::any_of(tenprint.begin(), tenprint.end(), [&](const Minutia& m) {
      const double dx = m.x - x;
      const double dy = m.y - y;
      return dx * dx + dy * dy < spacing2;
    });
    if (crowded) continue;
    const double theta = utheta(rng);
    const auto type = static_cast<MinutiaType>(utype(rng) + 1);
    if (is_multipoint(type)) {
      tenprint.push_back(multipoint_feature(x, y, theta, type, rng));
    } else {
      tenprint.push_back({x, y, theta, type, std::nullopt});
    }
  }

  // latent: the k tenprint minutiae nearest a random seed minutia
  const auto k = std::clamp<std::size_t>(
      std::poisson_distribution<std::size_t>(params.latent_minutiae_mean)(rng), 3, n_tenprint);
  const std::size_t centre =
      std::uniform_int_distribution<std::size_t>(0, n_tenprint - 1)(rng);
  std::vector<std::size_t> order(n_tenprint);
  std::iota(order.begin(), order.end(), 0);
  auto dist2 = [&](std::size_t i) {
    const double dx = tenprint[i].x - tenprint[centre].x;
    const double dy = tenprint[i].y - tenprint[centre].y;
    return dx * dx + dy * dy;
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dist2(a) < dist2(b); });
  order.resize(k);
  std::shuffle(order.begin(), order.end(), rng);

  std::normal_distribution<double> pos_noise(0.0, 1.0);
  std::normal_distribution<double> ang_noise(0.0, 1.0);
  std::vector<Minutia> latent;
  latent.reserve(k);
  for (const std::size_t i : order) {
    Minutia m;
    m.x = tenprint[i].x + params.position_jitter_sigma * pos_noise(rng);
    m.y = tenprint[i].y + params.position_jitter_sigma * pos_noise(rng);
    m.theta = tenprint[i].theta + params.angle_jitter_sigma * ang_noise(rng);
    m.type = tenprint[i].type;
    latent.push_back(m);
  }

  // global rigid motion about the patch centroid, then a positive offset
  const double rot =
      std::uniform_real_distribution<double>(-params.max_rotation_deg, params.max_rotation_deg)(rng);
  double cx = 0.0;
  double cy = 0.0;
  for (const auto& m : latent) {
    cx += m.x;
    cy += m.y;
  }
  cx /= static_cast<double>(latent.size());
  cy /= static_cast<double>(latent.size());
  const double c = std::cos(rot * kDegToRad);
  const double s = std::sin(rot * kDegToRad);
  double minx = 0.0;
  double miny = 0.0;
  for (std::size_t i = 0; i < latent.size(); ++i) {
    auto& m = latent[i];
    const double u = m.x - cx;
    const double v = m.y - cy;
    m.x = c * u - s * v;
    m.y = s * u + c * v;
    m.theta = wrap_degrees(m.theta + rot);
    minx = i == 0 ? m.x : std::min(minx, m.x);
    miny = i == 0 ? m.y : std::min(miny, m.y);
  }
  std::uniform_real_distribution<double> margin(10.0, 60.0);
  const double ox = margin(rng) - minx;
  const double oy = margin(rng) - miny;
  for (auto& m : latent) {
    m.x += ox;
    m.y += oy;
  }

  // rare minutiae are not always repeatable across captures
  std::bernoulli_distribution lost(params.rare_dropout_prob);
  std::bernoulli_distribution coin(0.5);
  std::vector<Minutia> kept;
  kept.reserve(latent.size());
  for (std::size_t i = 0; i < latent.size(); ++i) {
    Minutia m = latent[i];
    if (is_rare(m.type) && lost(rng)) {
      const bool drop = coin(rng);
      const bool demote_to_bifurcation = coin(rng);
      const bool would_empty = kept.empty() && i + 1 == latent.size();
      if (drop && !would_empty) continue;
      m.type = demote_to_bifurcation ? MinutiaType::Bifurcation : MinutiaType::RidgeEnding;
    }
    kept.push_back(m);
  }

  return make_subject(subject_id(index, params.n_subjects), std::move(kept),
                      std::move(tenprint));
}

}  // namespace

std::array<double, kMinutiaTypeCount> casework_type_distribution() {
  std::array<double, kMinutiaTypeCount> p{};
  const double total = static_cast<double>(
      std::accumulate(kCaseworkTypeCounts.begin(), kCaseworkTypeCounts.end(), std::size_t{0}));
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = static_cast<double>(kCaseworkTypeCounts[i]) / total;
  }
  return p;
}

void SynthParams::validate() const {
  if (n_subjects == 0) throw InvalidInput("n_subjects must be positive");
  if (!(latent_minutiae_mean > 0.0) || !(latent_minutiae_mean < tenprint_minutiae_mean)) {
    throw InvalidInput("latent_minutiae_mean must be positive and below tenprint_minutiae_mean");
  }
  if (!(area_width > 0.0) || !(area_height > 0.0)) throw InvalidInput("area must be positive");
  if (!(min_spacing >= 0.0)) throw InvalidInput("min_spacing must be >= 0");
  if (!(position_jitter_sigma >= 0.0) || !(angle_jitter_sigma >= 0.0)) {
    throw InvalidInput("jitter sigmas must be >= 0");
  }
  if (!(max_rotation_deg >= 0.0) || max_rotation_deg > 180.0) {
    throw InvalidInput("max_rotation_deg must lie in [0, 180]");
  }
  if (!(rare_dropout_prob >= 0.0) || rare_dropout_prob > 1.0) {
    throw InvalidInput("rare_dropout_prob must lie in [0, 1]");
  }
  double sum = 0.0;
  for (const double p : type_distribution) {
    if (!(p >= 0.0)) throw InvalidInput("type probabilities must be >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidInput("type probabilities must sum to 1");
}

Dataset gen_synthetic(const SynthParams& params, unsigned threads) {
  params.validate();
  std::vector<std::optional<Subject>> slots(params.n_subjects);
  parallel_for(params.n_subjects, threads,
               [&](std::size_t i) { slots[i].emplace(make_one(params, i)); });
  Dataset d;
  d.seed = params.seed;
  d.source = "synthetic";
  d.subjects.reserve(params.n_subjects);
  for (auto& s : slots) d.subjects.push_back(std::move(*s));
  return d;
}

}  // namespace rarefit
