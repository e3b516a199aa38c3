#include "rarefit/dataset.hpp"

#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "json.hpp"
#include "rarefit/error.hpp"

namespace rarefit {

namespace {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

class Parser {
 public:
  [[noreturn]] void fail(const std::string& path, const std::string& what) const {
    std::string msg = "dataset";
    if (!subject_.empty()) msg += " subject '" + subject_ + "'";
    throw ParseError(msg + " at " + path + ": " + what);
  }

  [[noreturn]] void invalid(const std::string& path, const std::string& what) const {
    std::string msg = "dataset";
    if (!subject_.empty()) msg += " subject '" + subject_ + "'";
    throw ValidationError(msg + " at " + path + ": " + what);
  }

  void expect_object(const json& j, const std::string& path,
                     std::initializer_list<const char*> required,
                     std::initializer_list<const char*> optional = {}) const {
    if (!j.is_object()) fail(path, "expected an object");
    for (const char* key : required) {
      if (!j.contains(key)) fail(path, std::string("missing field '") + key + "'");
    }
    for (const auto& [key, value] : j.items()) {
      bool known = false;
      for (const char* k : required) known = known || key == k;
      for (const char* k : optional) known = known || key == k;
      if (!known) fail(path, "unknown field '" + key + "'");
    }
  }

  double number(const json& j, const std::string& path) const {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
  }

  Minutia minutia(const json& j, const std::string& path) const {
    expect_object(j, path, {"x", "y", "theta_deg", "type"}, {"raw_points"});
    Minutia m;
    m.x = number(j["x"], path + ".x");
    m.y = number(j["y"], path + ".y");
    m.theta = number(j["theta_deg"], path + ".theta_deg");
    if (!j["type"].is_number_integer()) fail(path + ".type", "expected an integer type code");
    const auto code = j["type"].get<long long>();
    if (code < 1 || code > kMinutiaTypeCount) {
      invalid(path + ".type", "type code " + std::to_string(code) + " outside [1, 15]");
    }
    m.type = static_cast<MinutiaType>(code);
    if (!(m.x >= 0.0) || !(m.y >= 0.0)) invalid(path, "coordinates must be non-negative");
    if (j.contains("raw_points") && !j["raw_points"].is_null()) {
      const json& rp = j["raw_points"];
      if (!rp.is_array()) fail(path + ".raw_points", "expected an array or null");
      std::vector<RawPoint> pts;
      for (std::size_t k = 0; k < rp.size(); ++k) {
        const std::string p = path + ".raw_points[" + std::to_string(k) + "]";
        if (!rp[k].is_array() || rp[k].size() != 3) fail(p, "expected [x, y, theta]");
        pts.push_back({number(rp[k][0], p + "[0]"), number(rp[k][1], p + "[1]"),
                       number(rp[k][2], p + "[2]")});
      }
      m.raw_points = std::move(pts);
    }
    try {
      validate_minutia(m);
    } catch (const ValidationError& e) {
      invalid(path, e.what());
    }
    return m;
  }

  std::vector<Minutia> minutia_list(const json& j, const std::string& path) const {
    expect_object(j, path, {"minutiae"});
    const json& arr = j["minutiae"];
    if (!arr.is_array()) fail(path + ".minutiae", "expected an array");
    std::vector<Minutia> out;
    out.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
      out.push_back(minutia(arr[i], path + ".minutiae[" + std::to_string(i) + "]"));
    }
    return out;
  }

  MinutiaSet minutia_set(const json& j, const std::string& path, const std::string& id,
                         SetKind kind) const {
    auto list = minutia_list(j, path);
    try {
      return MinutiaSet(id, kind, std::move(list));
    } catch (const ValidationError& e) {
      invalid(path, e.what());
    }
  }

  Dataset dataset(const json& root) {
    expect_object(root, "$", {"version", "resolution_ppi", "seed", "subjects"}, {"source"});
    if (!root["version"].is_number_integer() || root["version"].get<long long>() != 1) {
      fail("$.version", "unsupported version (expected 1)");
    }
    Dataset d;
    if (!root["resolution_ppi"].is_number_integer()) fail("$.resolution_ppi", "expected an integer");
    d.resolution_ppi = root["resolution_ppi"].get<int>();
    if (d.resolution_ppi <= 0) invalid("$.resolution_ppi", "must be positive");
    const json& seed = root["seed"];
    if (seed.is_number_unsigned()) {
      d.seed = seed.get<std::uint64_t>();
    } else if (!seed.is_null()) {
      fail("$.seed", "expected a non-negative integer or null");
    }
    if (root.contains("source")) {
      if (!root["source"].is_string()) fail("$.source", "expected a string");
      d.source = root["source"].get<std::string>();
    }
    const json& subjects = root["subjects"];
    if (!subjects.is_array()) fail("$.subjects", "expected an array");

    std::set<std::string> seen;
    for (std::size_t i = 0; i < subjects.size(); ++i) {
      const std::string path = "$.subjects[" + std::to_string(i) + "]";
      const json& s = subjects[i];
      subject_.clear();
      expect_object(s, path, {"id", "latent", "tenprint"}, {"has_rare"});
      if (!s["id"].is_string() || s["id"].get<std::string>().empty()) {
        fail(path + ".id", "expected a non-empty string");
      }
      subject_ = s["id"].get<std::string>();
      if (!seen.insert(subject_).second) invalid(path + ".id", "duplicate subject id");
      MinutiaSet latent = minutia_set(s["latent"], path + ".latent", subject_, SetKind::Latent);
      MinutiaSet tenprint =
          minutia_set(s["tenprint"], path + ".tenprint", subject_, SetKind::Tenprint);
      const bool rare = has_rare(latent);
      if (s.contains("has_rare")) {
        if (!s["has_rare"].is_boolean()) fail(path + ".has_rare", "expected a boolean");
        if (s["has_rare"].get<bool>() != rare) {
          invalid(path + ".has_rare", "does not match the latent's rare minutiae");
        }
      }
      d.subjects.push_back({subject_, std::move(latent), std::move(tenprint), rare});
    }
    subject_.clear();
    return d;
  }

 private:
  std::string subject_;
};

ordered minutia_json(const Minutia& m) {
  ordered j;
  j["x"] = m.x;
  j["y"] = m.y;
  j["theta_deg"] = m.theta;
  j["type"] = type_code(m.type);
  if (m.raw_points) {
    ordered arr = ordered::array();
    for (const auto& p : *m.raw_points) arr.push_back(ordered::array({p.x, p.y, p.theta}));
    j["raw_points"] = std::move(arr);
  } else {
    j["raw_points"] = nullptr;
  }
  return j;
}

ordered set_json(const MinutiaSet& set) {
  ordered arr = ordered::array();
  for (const auto& m : set) arr.push_back(minutia_json(m));
  ordered j;
  j["minutiae"] = std::move(arr);
  return j;
}

json parse_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(origin + ": malformed JSON: " + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace

std::vector<std::string> Dataset::subject_ids() const {
  std::vector<std::string> ids;
  ids.reserve(subjects.size());
  for (const auto& s : subjects) ids.push_back(s.id);
  return ids;
}

Subject make_subject(std::string id, std::vector<Minutia> latent,
                     std::vector<Minutia> tenprint) {
  MinutiaSet l(id, SetKind::Latent, std::move(latent));
  MinutiaSet t(id, SetKind::Tenprint, std::move(tenprint));
  const bool rare = has_rare(l);
  return {std::move(id), std::move(l), std::move(t), rare};
}

Dataset parse_dataset(const std::string& json_text) {
  Parser parser;
  return parser.dataset(parse_text(json_text, "dataset"));
}

std::string dump_dataset(const Dataset& d) {
  ordered root;
  root["version"] = 1;
  root["resolution_ppi"] = d.resolution_ppi;
  if (d.seed) {
    root["seed"] = *d.seed;
  } else {
    root["seed"] = nullptr;
  }
  if (!d.source.empty()) root["source"] = d.source;
  ordered subjects = ordered::array();
  for (const auto& s : d.subjects) {
    ordered js;
    js["id"] = s.id;
    js["latent"] = set_json(s.latent);
    js["tenprint"] = set_json(s.tenprint);
    subjects.push_back(std::move(js));
  }
  root["subjects"] = std::move(subjects);
  return root.dump(1) + "\n";
}

Dataset load_dataset(const std::filesystem::path& path) {
  return parse_dataset(read_file(path));
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  write_file(path, dump_dataset(d));
}

MinutiaSet load_minutia_set(const std::filesystem::path& path, SetKind kind) {
  const json j = parse_text(read_file(path), path.string());
  Parser parser;
  return parser.minutia_set(j, "$", path.stem().string(), kind);
}

void save_minutia_set(const MinutiaSet& set, const std::filesystem::path& path) {
  write_file(path, set_json(set).dump(1) + "\n");
}

TypeFrequencyTable type_frequencies(const Dataset& d, FrequencyScope scope) {
  TypeFrequencyTable t;
  for (const auto& s : d.subjects) {
    const MinutiaSet& set = scope == FrequencyScope::Latents ? s.latent : s.tenprint;
    for (const auto& m : set) ++t.counts[type_code(m.type) - 1];
    t.total += set.size();
  }
  if (t.total == 0) {
    throw ValidationError(std::string("type_frequencies: no ") +
                          (scope == FrequencyScope::Latents ? "latent" : "tenprint") +
                          " minutiae in the dataset");
  }
  for (std::size_t i = 0; i < t.counts.size(); ++i) {
    t.p[i] = static_cast<double>(t.counts[i]) / static_cast<double>(t.total);
  }
  return t;
}

}  // namespace rarefit
