#include <cmath>
#include <filesystem>
#include <set>
#include <string>

#include "doctest.h"
#include "rarefit/alignment.hpp"
#include "rarefit/dataset.hpp"
#include "rarefit/error.hpp"
#include "rarefit/synthetic.hpp"
#include "support.hpp"

using namespace rarefit;
using testing::make_minutia;

namespace {

const char* kMinimal = R"({
 "version": 1,
 "resolution_ppi": 500,
 "seed": null,
 "subjects": [
  {"id": "a1",
   "latent": {"minutiae": [{"x": 10, "y": 20, "theta_deg": 30, "type": 5, "raw_points": null},
                           {"x": 40, "y": 20, "theta_deg": 0, "type": 1}]},
   "tenprint": {"minutiae": [{"x": 12, "y": 22, "theta_deg": 31, "type": 5}]}}
 ]
})";

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

template <class E>
std::string error_of(const std::string& text) {
  try {
    (void)parse_dataset(text);
  } catch (const E& e) {
    return e.what();
  }
  FAIL("expected an exception");
  return {};
}

}  // namespace

TEST_CASE("minimal dataset") {
  const auto d = parse_dataset(kMinimal);
  REQUIRE(d.subjects.size() == 1);
  CHECK(d.subjects[0].id == "a1");
  CHECK(d.subjects[0].has_rare);
  CHECK(d.subjects[0].latent.size() == 2);
  CHECK(d.subjects[0].latent.kind() == SetKind::Latent);
  CHECK(d.subjects[0].tenprint.id() == "a1");
  CHECK_FALSE(d.seed);
  CHECK(d.resolution_ppi == 500);
}

TEST_CASE("schema and domain errors") {
  const std::string base = kMinimal;
  CHECK(error_of<ValidationError>(replace(base, "\"type\": 5, \"raw", "\"type\": 16, \"raw"))
            .find("$.subjects[0].latent.minutiae[0].type") != std::string::npos);
  CHECK(error_of<ParseError>(replace(base, "\"version\": 1", "\"version\": 1, \"extra\": 2"))
            .find("extra") != std::string::npos);
  CHECK(error_of<ParseError>(replace(base, "\"theta_deg\": 0", "\"theta\": 0"))
            .find("a1") != std::string::npos);
  CHECK(error_of<ParseError>("{ not json").size() > 0);
  CHECK(error_of<ParseError>(replace(base, "\"version\": 1", "\"version\": 2")).size() > 0);
  CHECK(error_of<ValidationError>(replace(base, "\"x\": 40", "\"x\": -4")).size() > 0);
  CHECK(error_of<ValidationError>(replace(base, "\"theta_deg\": 0", "\"theta_deg\": 360")).size() > 0);
  CHECK(error_of<ValidationError>(replace(base, "\"id\": \"a1\",", "\"id\": \"a1\", \"has_rare\": false,"))
            .find("has_rare") != std::string::npos);
  CHECK_NOTHROW(parse_dataset(replace(base, "\"id\": \"a1\",", "\"id\": \"a1\", \"has_rare\": true,")));
  CHECK(error_of<ValidationError>(replace(base, "\"latent\": {\"minutiae\": [{\"x\": 10",
                                          "\"latent\": {\"minutiae\": [{\"x\": 40, \"y\": 20, "
                                          "\"theta_deg\": 3, \"type\": 1}, {\"x\": 10"))
            .find("duplicate") != std::string::npos);
  CHECK(error_of<ValidationError>(replace(base, "\"tenprint\": {\"minutiae\": [{\"x\": 12, \"y\": 22, \"theta_deg\": 31, \"type\": 5}]}",
                                          "\"tenprint\": {\"minutiae\": []}"))
            .size() > 0);
  CHECK_THROWS_AS(load_dataset("/nonexistent/data.json"), ParseError);
}

TEST_CASE("raw points survive a round trip and must match their collapse") {
  auto m = make_minutia(15, 30, 10, MinutiaType::Deviation);
  m.raw_points = std::vector<RawPoint>{{10, 20, 30}, {20, 40, 10}};
  Dataset d;
  d.subjects.push_back(make_subject("r1", {m, make_minutia(50, 50, 0)}, {m}));
  const auto back = parse_dataset(dump_dataset(d));
  CHECK(back == d);
  const std::string text = dump_dataset(d);
  CHECK_THROWS_AS(parse_dataset(replace(text, "\"x\": 15.0", "\"x\": 16.0")), ValidationError);
}

TEST_CASE("synthetic datasets round-trip through files") {
  SynthParams p;
  p.n_subjects = 50;
  p.seed = 77;
  const auto d = gen_synthetic(p);
  const auto path = std::filesystem::temp_directory_path() / "rarefit_test_ds.json";
  save_dataset(d, path);
  const auto back = load_dataset(path);
  CHECK(back == d);
  CHECK(dump_dataset(back) == dump_dataset(d));
  CHECK(back.seed == std::optional<std::uint64_t>(77));
  CHECK(back.source == "synthetic");
}

TEST_CASE("single minutia set files") {
  testing::Rng rng(67);
  const MinutiaSet s("ignored", SetKind::Latent, testing::scatter(rng, 9));
  const auto path = std::filesystem::temp_directory_path() / "rarefit_probe_set.json";
  save_minutia_set(s, path);
  const auto back = load_minutia_set(path, SetKind::Tenprint);
  CHECK(back.id() == "rarefit_probe_set");
  CHECK(back.kind() == SetKind::Tenprint);
  REQUIRE(back.size() == s.size());
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(back[i] == s[i]);
}

TEST_CASE("type frequencies reproduce the casework table") {
  const auto d = testing::frequency_fixture(kCaseworkTypeCounts);
  const auto t = type_frequencies(d, FrequencyScope::Latents);
  CHECK(t.total == 3376);
  auto rounded = [](double p) { return std::round(p * 1e4) / 1e4; };
  CHECK(rounded(t.probability(MinutiaType::RidgeEnding)) == 0.5634);
  CHECK(rounded(t.probability(MinutiaType::Bifurcation)) == 0.3620);
  CHECK(rounded(t.probability(MinutiaType::Deviation)) == 0.0015);
  CHECK(rounded(t.probability(MinutiaType::Bridge)) == 0.0024);
  CHECK(rounded(t.probability(MinutiaType::Fragment)) == 0.0444);
  CHECK(rounded(t.probability(MinutiaType::Interruption)) == 0.0021);
  CHECK(rounded(t.probability(MinutiaType::Enclosure)) == 0.0204);
  CHECK(rounded(t.probability(MinutiaType::Point)) == 0.0036);
  CHECK(rounded(t.probability(MinutiaType::Transversal)) == 0.0003);
  CHECK(t.count(MinutiaType::Circle) == 0);

  double sum = 0;
  for (const double p : t.p) sum += p;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(type_frequencies(Dataset{}, FrequencyScope::Latents), ValidationError);
}

TEST_CASE("generator determinism") {
  SynthParams p;
  p.n_subjects = 30;
  p.seed = 5;
  const auto a = gen_synthetic(p);
  const auto b = gen_synthetic(p);
  CHECK(a == b);
  CHECK(gen_synthetic(p, 3) == a);
  p.seed = 6;
  CHECK_FALSE(gen_synthetic(p) == a);
  CHECK(a.subjects.front().id == "s001");
  CHECK(a.subjects.back().id == "s030");
}

TEST_CASE("generated datasets honour the configured means and geometry") {
  SynthParams p;
  p.seed = 3;
  const auto d = gen_synthetic(p);
  REQUIRE(d.subjects.size() == 150);
  double lat = 0;
  double tp = 0;
  for (const auto& s : d.subjects) {
    lat += static_cast<double>(s.latent.size());
    tp += static_cast<double>(s.tenprint.size());
    CHECK(s.latent.size() >= 3);
    CHECK(s.has_rare == has_rare(s.latent));
    for (const auto& m : s.latent) {
      CHECK(m.x >= 0.0);
      CHECK(m.y >= 0.0);
    }
    // latent rare types are always present in the mate
    std::set<int> tp_types;
    for (const auto& m : s.tenprint) tp_types.insert(type_code(m.type));
    for (const auto& m : rare_minutiae(s.latent)) CHECK(tp_types.count(type_code(m.type)) == 1);
    // spacing
    const auto pts = locations(s.tenprint);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        CHECK(std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y) >= p.min_spacing - 1e-9);
      }
    }
  }
  CHECK(std::abs(lat / 150 - 13.0) <= 1.0);
  CHECK(std::abs(tp / 150 - 125.0) <= 3.0);
}

TEST_CASE("noise-free generation yields exact rigid subsets") {
  SynthParams p;
  p.n_subjects = 40;
  p.seed = 9;
  p.position_jitter_sigma = 0;
  p.angle_jitter_sigma = 0;
  p.rare_dropout_prob = 0;
  const auto d = gen_synthetic(p);
  const AlignmentConfig cfg;
  std::size_t checked = 0;
  for (const auto& s : d.subjects) {
    if (!s.has_rare) continue;
    const auto e = fitting_error(s.latent, s.tenprint, cfg);
    REQUIRE(e);
    CHECK(*e < 1e-6);
    ++checked;
  }
  CHECK(checked > 5);
}

TEST_CASE("large generation matches the type distribution") {
  SynthParams p;
  p.n_subjects = 10000;
  p.seed = 21;
  const auto d = gen_synthetic(p);
  const auto t = type_frequencies(d, FrequencyScope::Tenprints);
  for (std::size_t i = 0; i < kMinutiaTypeCount; ++i) {
    CHECK(std::abs(t.p[i] - p.type_distribution[i]) <= 0.02);
  }
}

TEST_CASE("generator parameter errors") {
  SynthParams p;
  p.area_width = 10;
  p.area_height = 10;
  CHECK_THROWS_AS(gen_synthetic(p), GenerationError);
  p = {};
  p.n_subjects = 0;
  CHECK_THROWS_AS(gen_synthetic(p), InvalidInput);
  p = {};
  p.rare_dropout_prob = 1.5;
  CHECK_THROWS_AS(gen_synthetic(p), InvalidInput);
  p = {};
  p.type_distribution[0] += 0.5;
  CHECK_THROWS_AS(gen_synthetic(p), InvalidInput);
  const auto dist = casework_type_distribution();
  CHECK(dist[0] == 1902.0 / 3376.0);
}
