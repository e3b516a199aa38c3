#include "rarefit/baseline_matcher.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <unordered_map>

#include "rarefit/error.hpp"

namespace rarefit {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double angle_diff(double a, double b) {
  const double d = std::abs(a - b);
  return d > 180.0 ? 360.0 - d : d;
}

PairTable::Entry make_entry(const Minutia& a, const Minutia& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double dir = wrap_degrees(std::atan2(dy, dx) * kRadToDeg);
  return {std::sqrt(dx * dx + dy * dy), wrap_degrees(a.theta - dir),
          wrap_degrees(b.theta - dir), dir};
}

// Size of the largest subset of angles (degrees) that fits in a circular
// window of the given width.
std::size_t max_window_count(std::vector<double>& angles, double width) {
  if (angles.empty()) return 0;
  std::sort(angles.begin(), angles.end());
  const std::size_t n = angles.size();
  std::size_t best = 0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (j < i) j = i;
    // j walks the unrolled circle: index k >= n stands for angles[k - n] + 360
    auto unrolled = [&](std::size_t k) { return k < n ? angles[k] : angles[k - n] + 360.0; };
    while (j + 1 < i + n && unrolled(j + 1) - angles[i] <= width) ++j;
    best = std::max(best, j - i + 1);
  }
  return best;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

PairTable::PairTable(const MinutiaSet& set, const MatcherConfig& cfg) {
  std::vector<Minutia> used;
  used.reserve(set.size());
  for (const auto& m : set) {
    if (is_rare(m.type) && cfg.rare == RareHandling::Drop) continue;
    used.push_back(m);
  }
  minutia_count_ = used.size();

  for (std::size_t i = 0; i < used.size(); ++i) {
    for (std::size_t j = i + 1; j < used.size(); ++j) {
      forward_.push_back(make_entry(used[i], used[j]));
      both_.push_back(forward_.back());
      both_.push_back(make_entry(used[j], used[i]));
    }
  }

  const auto nb = static_cast<std::size_t>(
      std::max(1.0, std::floor(360.0 / std::max(cfg.angle_tolerance_deg, 1e-3))));
  bucket_width_ = 360.0 / static_cast<double>(nb);
  auto bucket_of = [&](const Entry& e) {
    return std::min(static_cast<std::size_t>(e.rel_first / bucket_width_), nb - 1);
  };
  std::sort(both_.begin(), both_.end(), [&](const Entry& a, const Entry& b) {
    const auto ba = bucket_of(a);
    const auto bb = bucket_of(b);
    if (ba != bb) return ba < bb;
    if (a.length != b.length) return a.length < b.length;
    if (a.rel_first != b.rel_first) return a.rel_first < b.rel_first;
    return a.rel_second < b.rel_second;
  });
  bucket_start_.assign(nb + 1, 0);
  for (const auto& e : both_) ++bucket_start_[bucket_of(e) + 1];
  for (std::size_t b = 0; b < nb; ++b) bucket_start_[b + 1] += bucket_start_[b];
}

std::span<const PairTable::Entry> PairTable::bucket(std::size_t b) const {
  return std::span<const Entry>(both_).subspan(bucket_start_[b],
                                               bucket_start_[b + 1] - bucket_start_[b]);
}

double match_score(const PairTable& latent, const PairTable& tenprint,
                   const MatcherConfig& cfg) {
  const double dtol = cfg.distance_tolerance;
  const double atol = cfg.angle_tolerance_deg;
  const std::size_t nb = tenprint.bucket_count();
  const double w = tenprint.bucket_width();
  const bool windowed = cfg.rotation_window_deg > 0.0;

  std::size_t count = 0;
  std::vector<double> rotations;
  std::vector<std::size_t> buckets;
  for (const auto& l : latent.forward()) {
    buckets.clear();
    if (nb <= 3) {
      for (std::size_t b = 0; b < nb; ++b) buckets.push_back(b);
    } else {
      const auto lo = static_cast<long>(std::floor((l.rel_first - atol) / w));
      const auto hi = static_cast<long>(std::floor((l.rel_first + atol) / w));
      const auto n = static_cast<long>(nb);
      for (long b = lo; b <= hi; ++b) {
        const auto idx = static_cast<std::size_t>(((b % n) + n) % n);
        if (std::find(buckets.begin(), buckets.end(), idx) == buckets.end()) {
          buckets.push_back(idx);
        }
      }
    }
    for (const std::size_t b : buckets) {
      const auto entries = tenprint.bucket(b);
      auto it = std::lower_bound(
          entries.begin(), entries.end(), l.length - dtol,
          [](const PairTable::Entry& e, double v) { return e.length < v; });
      for (; it != entries.end() && it->length <= l.length + dtol; ++it) {
        if (std::abs(it->length - l.length) > dtol) continue;
        if (angle_diff(it->rel_first, l.rel_first) > atol) continue;
        if (angle_diff(it->rel_second, l.rel_second) > atol) continue;
        ++count;
        if (windowed) rotations.push_back(wrap_degrees(it->direction - l.direction));
      }
    }
  }
  if (windowed) return static_cast<double>(max_window_count(rotations, cfg.rotation_window_deg));
  return static_cast<double>(count);
}

double internal_match_score(const MinutiaSet& latent, const MinutiaSet& tenprint,
                            const MatcherConfig& cfg) {
  return match_score(PairTable(latent, cfg), PairTable(tenprint, cfg), cfg);
}

// --- ScoreMatrix ----------------------------------------------------------------

ScoreMatrix::ScoreMatrix(std::vector<std::string> latent_ids,
                         std::vector<std::string> tenprint_ids)
    : latent_ids_(std::move(latent_ids)),
      tenprint_ids_(std::move(tenprint_ids)),
      scores_(latent_ids_.size() * tenprint_ids_.size(), 0.0) {}

ScoreMatrix::ScoreMatrix(std::vector<std::string> latent_ids,
                         std::vector<std::string> tenprint_ids, std::vector<double> scores)
    : latent_ids_(std::move(latent_ids)),
      tenprint_ids_(std::move(tenprint_ids)),
      scores_(std::move(scores)) {
  if (scores_.size() != latent_ids_.size() * tenprint_ids_.size()) {
    throw InvalidInput("ScoreMatrix: score count does not match id lists");
  }
  for (const double s : scores_) {
    if (!std::isfinite(s)) throw InvalidInput("ScoreMatrix: non-finite score");
  }
}

ScoreMatrix ScoreMatrix::select(std::span<const std::size_t> rows,
                                std::span<const std::size_t> cols) const {
  std::vector<std::string> lids;
  std::vector<std::string> tids;
  for (auto r : rows) lids.push_back(latent_ids_.at(r));
  for (auto c : cols) tids.push_back(tenprint_ids_.at(c));
  std::vector<double> s;
  s.reserve(rows.size() * cols.size());
  for (auto r : rows) {
    for (auto c : cols) s.push_back(at(r, c));
  }
  return ScoreMatrix(std::move(lids), std::move(tids), std::move(s));
}

ScoreMatrix load_external_scores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("score file '" + path.string() + "' cannot be opened");

  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(path.string() + ": missing header row");
  }
  auto header = split_csv(line);
  if (header.empty() || header.front() != "latent_id") {
    throw ParseError(path.string() + ": header must start with 'latent_id'");
  }
  std::vector<std::string> tids(header.begin() + 1, header.end());
  if (tids.empty()) throw ParseError(path.string() + ": header lists no tenprint ids");
  {
    std::set<std::string> uniq(tids.begin(), tids.end());
    if (uniq.size() != tids.size() || uniq.count("")) {
      throw ParseError(path.string() + ": tenprint ids must be unique and non-empty");
    }
  }

  std::vector<std::string> lids;
  std::vector<double> values;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != tids.size() + 1) {
      throw ParseError(path.string() + ": row " + std::to_string(row) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(tids.size() + 1));
    }
    if (cells[0].empty()) {
      throw ParseError(path.string() + ": row " + std::to_string(row) + " has empty latent id");
    }
    lids.push_back(cells[0]);
    for (std::size_t c = 1; c < cells.size(); ++c) {
      const std::string& cell = cells[c];
      double v = 0.0;
      const auto* first = cell.data();
      const auto* last = cell.data() + cell.size();
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
        throw ParseError(path.string() + ": row " + std::to_string(row) + ", column " +
                         std::to_string(c + 1) + " ('" + tids[c - 1] + "'): invalid value '" +
                         cell + "'");
      }
      values.push_back(v);
    }
  }
  if (lids.empty()) throw ParseError(path.string() + ": no latent rows");
  std::set<std::string> uniq(lids.begin(), lids.end());
  if (uniq.size() != lids.size()) throw ParseError(path.string() + ": duplicate latent id");
  return ScoreMatrix(std::move(lids), std::move(tids), std::move(values));
}

ScoreMatrix load_external_scores(const std::filesystem::path& path,
                                 std::span<const std::string> expected_ids) {
  const ScoreMatrix raw = load_external_scores(path);
  auto index_of = [&](const std::vector<std::string>& ids, const char* what) {
    if (ids.size() != expected_ids.size()) {
      throw ParseError(path.string() + ": " + what + " ids do not match the dataset (" +
                       std::to_string(ids.size()) + " vs " +
                       std::to_string(expected_ids.size()) + ")");
    }
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < ids.size(); ++i) pos.emplace(ids[i], i);
    std::vector<std::size_t> order;
    for (const auto& id : expected_ids) {
      auto it = pos.find(id);
      if (it == pos.end()) {
        throw ParseError(path.string() + ": " + what + " id '" + id +
                         "' from the dataset is missing");
      }
      order.push_back(it->second);
    }
    return order;
  };
  const auto rows = index_of(raw.latent_ids(), "latent");
  const auto cols = index_of(raw.tenprint_ids(), "tenprint");
  return raw.select(rows, cols);
}

void save_scores(const ScoreMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "latent_id";
  for (const auto& t : m.tenprint_ids()) out << ',' << t;
  out << '\n';
  out.precision(17);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out << m.latent_ids()[r];
    for (std::size_t c = 0; c < m.cols(); ++c) out << ',' << m.at(r, c);
    out << '\n';
  }
}

ScoreMatrix normalize_scores(const ScoreMatrix& m) {
  const auto v = m.values();
  std::vector<double> out(v.begin(), v.end());
  if (out.empty()) return m;
  const auto [lo, hi] = std::minmax_element(out.begin(), out.end());
  const double mn = *lo;
  const double mx = *hi;
  if (mx == mn) {
    std::fill(out.begin(), out.end(), 0.5);
  } else {
    for (double& s : out) s = (s - mn) / (mx - mn);
  }
  return ScoreMatrix(m.latent_ids(), m.tenprint_ids(), std::move(out));
}

}  // namespace rarefit
