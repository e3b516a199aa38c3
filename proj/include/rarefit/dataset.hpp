#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rarefit/minutia.hpp"

namespace rarefit {

/// A mated latent/tenprint pair. Both sets carry the subject id.
struct Subject {
  std::string id;
  MinutiaSet latent;
  MinutiaSet tenprint;
  bool has_rare = false;

  bool operator==(const Subject&) const = default;
};

struct Dataset {
  std::vector<Subject> subjects;
  int resolution_ppi = 500;
  std::optional<std::uint64_t> seed;
  std::string source;

  std::vector<std::string> subject_ids() const;

  bool operator==(const Dataset&) const = default;
};

/// Builds a subject, computing has_rare from the latent.
Subject make_subject(std::string id, std::vector<Minutia> latent,
                     std::vector<Minutia> tenprint);

/// JSON dataset I/O. Schema violations throw ParseError naming the subject and
/// field path; domain violations (theta range, type code, duplicates,
/// negative coordinates) throw ValidationError.
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& d, const std::filesystem::path& path);
Dataset parse_dataset(const std::string& json_text);
std::string dump_dataset(const Dataset& d);

/// A single minutia set document: {"minutiae": [...]}. The id is taken from
/// the file stem.
MinutiaSet load_minutia_set(const std::filesystem::path& path, SetKind kind);
void save_minutia_set(const MinutiaSet& set, const std::filesystem::path& path);

enum class FrequencyScope { Latents, Tenprints };

struct TypeFrequencyTable {
  std::array<std::size_t, kMinutiaTypeCount> counts{};
  std::array<double, kMinutiaTypeCount> p{};
  std::size_t total = 0;

  std::size_t count(MinutiaType t) const { return counts[type_code(t) - 1]; }
  double probability(MinutiaType t) const { return p[type_code(t) - 1]; }
};

/// Per-type counts and p_i = count / total over every minutia in scope.
/// Throws ValidationError when the scope holds no minutiae.
TypeFrequencyTable type_frequencies(const Dataset& d, FrequencyScope scope);

}  // namespace rarefit
