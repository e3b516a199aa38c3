#include "rarefit/minutia.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <tuple>

#include "rarefit/error.hpp"

namespace rarefit {

namespace {

constexpr std::array<std::string_view, kMinutiaTypeCount> kTypeNames = {
    "RidgeEnding", "Bifurcation",   "Deviation",   "Bridge", "Fragment",
    "Interruption", "Enclosure",    "Point",       "RidgeCrossing",
    "Transversal", "Circle",        "Delta",       "Assemble",
    "MStructure",  "Return"};

constexpr double kRawPointTolerance = 1e-9;

bool valid_theta(double theta) {
  return std::isfinite(theta) && theta >= 0.0 && theta < 360.0;
}

}  // namespace

MinutiaType minutia_type_from_code(int code) {
  if (code < 1 || code > kMinutiaTypeCount) {
    throw ValidationError("minutia type code " + std::to_string(code) +
                          " outside [1, 15]");
  }
  return static_cast<MinutiaType>(code);
}

std::string_view type_name(MinutiaType t) {
  return kTypeNames.at(static_cast<std::size_t>(type_code(t) - 1));
}

std::string_view kind_name(SetKind kind) {
  return kind == SetKind::Latent ? "latent" : "tenprint";
}

double wrap_degrees(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w < 0.0) w += 360.0;
  // fmod of a tiny negative value can round up to exactly 360
  if (w >= 360.0) w = 0.0;
  return w;
}

Minutia collapse_multipoint(std::span<const RawPoint> points, MinutiaType type) {
  if (points.empty()) {
    throw InvalidInput("collapse_multipoint: empty point list");
  }
  double sx = 0.0;
  double sy = 0.0;
  double min_theta = points.front().theta;
  for (const auto& p : points) {
    if (!valid_theta(p.theta)) {
      throw InvalidInput("collapse_multipoint: theta " + std::to_string(p.theta) +
                         " outside [0, 360)");
    }
    sx += p.x;
    sy += p.y;
    min_theta = std::min(min_theta, p.theta);
  }
  const auto n = static_cast<double>(points.size());
  Minutia m;
  m.x = sx / n;
  m.y = sy / n;
  m.theta = min_theta;
  m.type = type;
  m.raw_points = std::vector<RawPoint>(points.begin(), points.end());
  return m;
}

void validate_minutia(const Minutia& m) {
  if (!std::isfinite(m.x) || !std::isfinite(m.y)) {
    throw ValidationError("minutia location is not finite");
  }
  if (!valid_theta(m.theta)) {
    throw ValidationError("minutia theta " + std::to_string(m.theta) +
                          " outside [0, 360)");
  }
  (void)minutia_type_from_code(type_code(m.type));
  if (m.raw_points) {
    if (m.raw_points->empty()) {
      throw ValidationError("raw_points present but empty");
    }
    Minutia collapsed;
    try {
      collapsed = collapse_multipoint(*m.raw_points, m.type);
    } catch (const InvalidInput& e) {
      throw ValidationError(e.what());
    }
    if (std::abs(collapsed.x - m.x) > kRawPointTolerance ||
        std::abs(collapsed.y - m.y) > kRawPointTolerance ||
        std::abs(collapsed.theta - m.theta) > kRawPointTolerance) {
      throw ValidationError("minutia does not equal the collapse of its raw_points");
    }
  }
}

MinutiaSet::MinutiaSet(std::string id, SetKind kind, std::vector<Minutia> minutiae)
    : id_(std::move(id)), kind_(kind), minutiae_(std::move(minutiae)) {
  if (minutiae_.empty()) {
    throw ValidationError(std::string(kind_name(kind_)) + " '" + id_ +
                          "' has no minutiae");
  }
  for (const auto& m : minutiae_) validate_minutia(m);

  std::vector<std::tuple<double, double, int>> keys;
  keys.reserve(minutiae_.size());
  for (const auto& m : minutiae_) keys.emplace_back(m.x, m.y, type_code(m.type));
  std::sort(keys.begin(), keys.end());
  if (std::adjacent_find(keys.begin(), keys.end()) != keys.end()) {
    throw ValidationError(std::string(kind_name(kind_)) + " '" + id_ +
                          "' contains duplicate minutiae");
  }
}

std::vector<Minutia> rare_minutiae(const MinutiaSet& set) {
  std::vector<Minutia> out;
  for (const auto& m : set) {
    if (is_rare(m.type)) out.push_back(m);
  }
  return out;
}

bool has_rare(const MinutiaSet& set) {
  return std::any_of(set.begin(), set.end(),
                     [](const Minutia& m) { return is_rare(m.type); });
}

}  // namespace rarefit
