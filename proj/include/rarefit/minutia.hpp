#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rarefit {

/// Extended minutia taxonomy. Codes 1 and 2 are the typical minutiae that
/// standard matchers use; every other code is a rare feature.
enum class MinutiaType : std::uint8_t {
  RidgeEnding = 1,
  Bifurcation = 2,
  Deviation = 3,
  Bridge = 4,
  Fragment = 5,
  Interruption = 6,
  Enclosure = 7,
  Point = 8,
  RidgeCrossing = 9,
  Transversal = 10,
  Circle = 11,
  Delta = 12,
  Assemble = 13,
  MStructure = 14,
  Return = 15,
};

inline constexpr int kMinutiaTypeCount = 15;

constexpr int type_code(MinutiaType t) { return static_cast<int>(t); }

constexpr bool is_rare(MinutiaType t) { return type_code(t) > 2; }

/// Throws ValidationError for codes outside [1, 15].
MinutiaType minutia_type_from_code(int code);

std::string_view type_name(MinutiaType t);

/// One marked point of a multi-point rare feature, before collapse.
struct RawPoint {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  bool operator==(const RawPoint&) const = default;
};

/// Location in pixels (500 ppi), orientation in degrees in [0, 360).
struct Minutia {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  MinutiaType type = MinutiaType::RidgeEnding;
  std::optional<std::vector<RawPoint>> raw_points;

  bool operator==(const Minutia&) const = default;
};

/// Mean location and numeric (non-circular) minimum orientation of the
/// points; raw points are kept on the result. Throws InvalidInput when
/// `points` is empty or a theta is outside [0, 360).
Minutia collapse_multipoint(std::span<const RawPoint> points, MinutiaType type);

/// Checks finiteness, the theta range, and raw-point consistency.
void validate_minutia(const Minutia& m);

/// Wraps an angle in degrees into [0, 360).
double wrap_degrees(double deg);

enum class SetKind { Latent, Tenprint };

std::string_view kind_name(SetKind kind);

/// Ordered, non-empty collection of minutiae from one impression. Immutable
/// after construction.
class MinutiaSet {
 public:
  /// Throws ValidationError when empty, when a minutia is invalid, or when two
  /// minutiae share (x, y, type).
  MinutiaSet(std::string id, SetKind kind, std::vector<Minutia> minutiae);

  const std::string& id() const { return id_; }
  SetKind kind() const { return kind_; }
  std::span<const Minutia> minutiae() const { return minutiae_; }
  std::size_t size() const { return minutiae_.size(); }
  const Minutia& operator[](std::size_t i) const { return minutiae_[i]; }
  auto begin() const { return minutiae_.begin(); }
  auto end() const { return minutiae_.end(); }

  bool operator==(const MinutiaSet&) const = default;

 private:
  std::string id_;
  SetKind kind_;
  std::vector<Minutia> minutiae_;
};

/// Rare minutiae of `set` in their original order.
std::vector<Minutia> rare_minutiae(const MinutiaSet& set);

bool has_rare(const MinutiaSet& set);

}  // namespace rarefit
