#include "rarefit/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <numeric>
#include <unordered_map>

#include "rarefit/error.hpp"
#include "rarefit/parallel.hpp"
#include "svg.hpp"

namespace rarefit {

namespace {

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

double score_of(const ScoreRecord& r, ScoreKind kind) {
  switch (kind) {
    case ScoreKind::Baseline:
      return r.s_m;
    case ScoreKind::Fused:
      return r.s_prime;
    case ScoreKind::Modified:
      return r.s_double_prime;
  }
  return r.s_m;
}

// Records grouped per latent, with the position of the genuine record.
struct LatentGroup {
  std::vector<std::size_t> members;
  std::size_t genuine = 0;
};

std::vector<LatentGroup> group_records(std::span<const ScoreRecord> records) {
  std::unordered_map<std::string, std::size_t> index;
  std::vector<LatentGroup> groups;
  std::vector<int> genuine_count;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto [it, inserted] = index.emplace(records[i].latent_id, groups.size());
    if (inserted) {
      groups.emplace_back();
      genuine_count.push_back(0);
    }
    auto& g = groups[it->second];
    g.members.push_back(i);
    if (records[i].is_genuine) {
      g.genuine = i;
      ++genuine_count[it->second];
    }
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (genuine_count[g] != 1) {
      throw InvalidInput("latent '" + records[groups[g].members.front()].latent_id +
                         "' needs exactly one genuine record");
    }
  }
  return groups;
}

template <typename ScoreFn>
double rank1_of_groups(const std::vector<LatentGroup>& groups, ScoreFn&& score) {
  if (groups.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t hits = 0;
  for (const auto& g : groups) {
    const double mate = score(g.genuine);
    bool first = true;
    for (const std::size_t i : g.members) {
      if (i != g.genuine && score(i) >= mate) {
        first = false;
        break;
      }
    }
    if (first) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(groups.size());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

std::string cmc_csv(const CmcCurve& c) {
  std::string s = "rank,accuracy\n";
  for (std::size_t k = 0; k < c.accuracies.size(); ++k) {
    s += std::to_string(k + 1) + "," + fmt("%.6f", c.accuracies[k]) + "\n";
  }
  return s;
}

svg::Series cmc_series(const std::string& name, const CmcCurve& c) {
  svg::Series s{name, {}, {}, true};
  for (std::size_t k = 0; k < c.accuracies.size(); ++k) {
    s.x.push_back(static_cast<double>(k + 1));
    s.y.push_back(c.accuracies[k]);
  }
  return s;
}

std::string cmc_svg(const std::string& title, const ScopeReport& scope) {
  svg::Axes axes{title, "Rank", "Identification rate", 1.0,
                 static_cast<double>(std::max<std::size_t>(scope.baseline.gallery_size, 2)),
                 0.0, 1.0};
  return svg::line_chart(axes, {cmc_series("S_m (baseline)", scope.baseline),
                                cmc_series("S' (fused)", scope.fused),
                                cmc_series("S'' (threshold)", scope.modified)});
}

}  // namespace

// --- CMC ----------------------------------------------------------------------

double CmcCurve::rank(std::size_t k) const {
  if (k == 0) throw InvalidInput("CMC ranks start at 1");
  if (accuracies.empty()) return std::numeric_limits<double>::quiet_NaN();
  return accuracies[std::min(k, accuracies.size()) - 1];
}

std::vector<std::size_t> mate_ranks(const ScoreMatrix& m, const MateMap& mates) {
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t c = 0; c < m.cols(); ++c) col.emplace(m.tenprint_ids()[c], c);
  std::vector<std::size_t> ranks;
  ranks.reserve(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto& lid = m.latent_ids()[r];
    const auto mate = mates.find(lid);
    if (mate == mates.end()) throw InvalidInput("latent '" + lid + "' has no mate");
    const auto c = col.find(mate->second);
    if (c == col.end()) {
      throw InvalidInput("mate '" + mate->second + "' of latent '" + lid +
                         "' is not in the gallery");
    }
    const auto row = m.row(r);
    const double s = row[c->second];
    ranks.push_back(static_cast<std::size_t>(
        std::count_if(row.begin(), row.end(), [&](double v) { return v >= s; })));
  }
  return ranks;
}

CmcCurve cmc_from_ranks(std::span<const std::size_t> ranks, std::size_t gallery_size) {
  CmcCurve c;
  c.n_latents = ranks.size();
  c.gallery_size = gallery_size;
  if (ranks.empty()) return c;
  std::vector<std::size_t> at(gallery_size + 1, 0);
  for (const std::size_t r : ranks) {
    if (r == 0 || r > gallery_size) throw InvalidInput("mate rank outside the gallery");
    ++at[r];
  }
  c.accuracies.resize(gallery_size);
  std::size_t cum = 0;
  for (std::size_t k = 1; k <= gallery_size; ++k) {
    cum += at[k];
    c.accuracies[k - 1] = static_cast<double>(cum) / static_cast<double>(ranks.size());
  }
  return c;
}

CmcCurve cmc(const ScoreMatrix& m, const MateMap& mates) {
  const auto ranks = mate_ranks(m, mates);
  return cmc_from_ranks(ranks, m.cols());
}

// --- densities ------------------------------------------------------------------

std::size_t DensityHistogram::genuine_mode() const {
  return static_cast<std::size_t>(std::max_element(genuine.begin(), genuine.end()) -
                                  genuine.begin());
}

std::size_t DensityHistogram::impostor_mode() const {
  return static_cast<std::size_t>(std::max_element(impostor.begin(), impostor.end()) -
                                  impostor.begin());
}

DensityHistogram error_density(std::span<const ScoreRecord> records, std::size_t bins) {
  if (bins == 0) throw InvalidInput("error_density: bins must be positive");
  DensityHistogram h;
  h.bins = bins;
  h.genuine.assign(bins, 0.0);
  h.impostor.assign(bins, 0.0);
  for (const auto& r : records) {
    const double e = std::clamp(r.e_hat, 0.0, 1.0);
    const auto b = std::min(static_cast<std::size_t>(e * static_cast<double>(bins)), bins - 1);
    if (r.is_genuine) {
      h.genuine[b] += 1.0;
      ++h.genuine_count;
    } else {
      h.impostor[b] += 1.0;
      ++h.impostor_count;
    }
  }
  if (h.genuine_count == 0) throw EmptyClass("error_density: no genuine comparisons");
  if (h.impostor_count == 0) throw EmptyClass("error_density: no impostor comparisons");
  for (auto& v : h.genuine) v /= static_cast<double>(h.genuine_count);
  for (auto& v : h.impostor) v /= static_cast<double>(h.impostor_count);
  return h;
}

double mann_whitney_auc(std::span<const double> genuine, std::span<const double> impostor) {
  if (genuine.empty() || impostor.empty()) throw EmptyClass("mann_whitney_auc: empty class");
  struct Item {
    double v;
    bool g;
  };
  std::vector<Item> all;
  all.reserve(genuine.size() + impostor.size());
  for (double v : genuine) all.push_back({v, true});
  for (double v : impostor) all.push_back({v, false});
  std::sort(all.begin(), all.end(), [](const Item& a, const Item& b) { return a.v < b.v; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].v == all[i].v) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (all[k].g) rank_sum += avg;
    }
    i = j;
  }
  const auto n1 = static_cast<double>(genuine.size());
  const auto n2 = static_cast<double>(impostor.size());
  return (rank_sum - n1 * (n1 + 1.0) / 2.0) / (n1 * n2);
}

// --- records --------------------------------------------------------------------

double rank1_from_records(std::span<const ScoreRecord> records, ScoreKind kind) {
  const auto groups = group_records(records);
  return rank1_of_groups(groups, [&](std::size_t i) { return score_of(records[i], kind); });
}

ScoreMatrix records_to_matrix(std::span<const ScoreRecord> records, ScoreKind kind,
                              MateMap* mates) {
  std::vector<std::string> lids;
  std::vector<std::string> tids;
  std::unordered_map<std::string, std::size_t> lpos;
  std::unordered_map<std::string, std::size_t> tpos;
  for (const auto& r : records) {
    if (lpos.emplace(r.latent_id, lids.size()).second) lids.push_back(r.latent_id);
    if (tpos.emplace(r.tenprint_id, tids.size()).second) tids.push_back(r.tenprint_id);
  }
  std::vector<double> values(lids.size() * tids.size(), 0.0);
  std::vector<bool> filled(values.size(), false);
  for (const auto& r : records) {
    const std::size_t k = lpos[r.latent_id] * tids.size() + tpos[r.tenprint_id];
    values[k] = score_of(r, kind);
    filled[k] = true;
    if (mates && r.is_genuine) (*mates)[r.latent_id] = r.tenprint_id;
  }
  if (std::find(filled.begin(), filled.end(), false) != filled.end()) {
    throw InvalidInput("records do not form a complete latent x tenprint grid");
  }
  return ScoreMatrix(std::move(lids), std::move(tids), std::move(values));
}

// --- threshold sweep ------------------------------------------------------------

std::vector<double> threshold_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw InvalidInput("threshold grid needs lo <= hi, step > 0");
  const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(n) + 1);
  for (long k = 0; k <= n; ++k) {
    const double v = lo + static_cast<double>(k) * step;
    grid.push_back(std::round(v * 1e12) / 1e12);
  }
  return grid;
}

SweepResult sweep_threshold(std::span<const ScoreRecord> records, const FusionParams& base,
                            double lo, double hi, double step) {
  SweepResult out;
  out.thresholds = threshold_grid(lo, hi, step);
  const auto groups = group_records(records);
  out.best_rank1 = -1.0;
  for (const double t : out.thresholds) {
    FusionParams p = base;
    p.e_t = t;
    const double r1 = rank1_of_groups(groups, [&](std::size_t i) {
      return threshold_modify(records[i].s_prime, records[i].e_hat, p);
    });
    out.rank1.push_back(r1);
    if (r1 > out.best_rank1) {
      out.best_rank1 = r1;
      out.best_e_t = t;
    }
  }
  return out;
}

// --- pipeline -------------------------------------------------------------------

ScoreMatrix baseline_scores(const Dataset& d, const MatcherChoice& matcher, unsigned threads) {
  const auto ids = d.subject_ids();
  if (const auto* ext = std::get_if<ExternalScores>(&matcher)) {
    return normalize_scores(load_external_scores(ext->path, ids));
  }
  const auto& cfg = std::get<InternalMatcher>(matcher).config;
  const std::size_t n = d.subjects.size();
  std::vector<std::unique_ptr<PairTable>> latents(n);
  std::vector<std::unique_ptr<PairTable>> tenprints(n);
  parallel_for(n, threads, [&](std::size_t i) {
    latents[i] = std::make_unique<PairTable>(d.subjects[i].latent, cfg);
    tenprints[i] = std::make_unique<PairTable>(d.subjects[i].tenprint, cfg);
  });
  ScoreMatrix raw(ids, ids);
  parallel_for(n, threads, [&](std::size_t r) {
    for (std::size_t c = 0; c < n; ++c) raw.at(r, c) = match_score(*latents[r], *tenprints[c], cfg);
  });
  return normalize_scores(raw);
}

std::vector<double> similarity_matrix(const Dataset& d, std::span<const std::size_t> rows,
                                      const AlignmentConfig& cfg, unsigned threads) {
  cfg.validate();
  const std::size_t n = d.subjects.size();
  std::vector<std::unique_ptr<PointIndex>> index(n);
  parallel_for(n, threads, [&](std::size_t c) {
    index[c] = std::make_unique<PointIndex>(d.subjects[c].tenprint);
  });
  std::vector<double> out(rows.size() * n, 0.0);
  parallel_for(rows.size() * n, threads, [&](std::size_t k) {
    const std::size_t r = k / n;
    const std::size_t c = k % n;
    const auto& latent = d.subjects[rows[r]].latent;
    const auto& tenprint = d.subjects[c].tenprint;
    out[k] = error_to_similarity(align(latent, tenprint, *index[c], cfg).error, cfg);
  });
  return out;
}

Report evaluate_full(const Dataset& d, const MatcherChoice& matcher,
                     const AlignmentConfig& cfg, const FusionParams& params,
                     const EvaluationOptions& options) {
  cfg.validate();
  params.validate();
  const std::size_t n = d.subjects.size();
  if (n == 0) throw InvalidInput("evaluate_full: empty dataset");

  Report report;
  report.alignment = cfg;
  report.params = params;
  report.n_subjects = n;

  const ScoreMatrix sm = baseline_scores(d, matcher, options.threads);

  std::vector<std::size_t> rare;
  for (std::size_t i = 0; i < n; ++i) {
    if (d.subjects[i].has_rare) rare.push_back(i);
  }
  report.n_rare = rare.size();
  const auto e_hat = similarity_matrix(d, rare, cfg, options.threads);

  auto build_records = [&](const FusionParams& p) {
    std::vector<ScoreRecord> recs;
    recs.reserve(rare.size() * rare.size());
    for (std::size_t r = 0; r < rare.size(); ++r) {
      for (const std::size_t c : rare) {
        recs.push_back(make_record(d.subjects[rare[r]].id, d.subjects[c].id,
                                   sm.at(rare[r], c), e_hat[r * n + c], rare[r] == c, p));
      }
    }
    return recs;
  };

  FusionParams effective = params;
  if (!rare.empty()) {
    auto recs = build_records(params);
    std::vector<ScoreRecord> tuning;
    if (options.tune_threshold && options.holdout) {
      for (std::size_t r = 0; r < rare.size(); r += 2) {
        tuning.insert(tuning.end(), recs.begin() + static_cast<long>(r * rare.size()),
                      recs.begin() + static_cast<long>((r + 1) * rare.size()));
      }
    } else {
      tuning = recs;
    }
    report.sweep = sweep_threshold(tuning, params, options.sweep_min, options.sweep_max,
                                   options.sweep_step);
    if (options.tune_threshold) {
      effective.e_t = report.sweep.best_e_t;
      recs = build_records(effective);
    }
    report.records = std::move(recs);
  }
  report.params = effective;

  MateMap mates;
  for (const auto& s : d.subjects) mates[s.id] = s.id;

  if (!report.records.empty()) {
    report.rare_subset.baseline = cmc(records_to_matrix(report.records, ScoreKind::Baseline), mates);
    report.rare_subset.fused = cmc(records_to_matrix(report.records, ScoreKind::Fused), mates);
    report.rare_subset.modified =
        cmc(records_to_matrix(report.records, ScoreKind::Modified), mates);
    try {
      report.density = error_density(report.records, options.density_bins);
    } catch (const EmptyClass&) {
      report.density.reset();
    }
  }

  std::vector<std::ptrdiff_t> rare_row(n, -1);
  for (std::size_t r = 0; r < rare.size(); ++r) rare_row[rare[r]] = static_cast<std::ptrdiff_t>(r);
  ScoreMatrix fused = sm;
  ScoreMatrix modified = sm;
  for (std::size_t r = 0; r < n; ++r) {
    if (rare_row[r] < 0) continue;
    const auto rr = static_cast<std::size_t>(rare_row[r]);
    for (std::size_t c = 0; c < n; ++c) {
      const double e = e_hat[rr * n + c];
      const double sp = fuse_mean(sm.at(r, c), e);
      fused.at(r, c) = sp;
      modified.at(r, c) = threshold_modify(sp, e, effective);
    }
  }
  report.full.baseline = cmc(sm, mates);
  report.full.fused = cmc(fused, mates);
  report.full.modified = cmc(modified, mates);
  return report;
}

void write_sweep_csv(const SweepResult& sweep, const std::filesystem::path& path) {
  std::string s = "e_t,rank1\n";
  for (std::size_t i = 0; i < sweep.thresholds.size(); ++i) {
    s += fmt("%.3f", sweep.thresholds[i]) + "," + fmt("%.6f", sweep.rank1[i]) + "\n";
  }
  write_text(path, s);
}

void write_report(const Report& report, const std::filesystem::path& dir, bool svg) {
  std::filesystem::create_directories(dir);

  write_text(dir / "cmc_baseline.csv", cmc_csv(report.rare_subset.baseline));
  write_text(dir / "cmc_fused.csv", cmc_csv(report.rare_subset.fused));
  write_text(dir / "cmc_modified.csv", cmc_csv(report.rare_subset.modified));
  write_text(dir / "cmc_full_baseline.csv", cmc_csv(report.full.baseline));
  write_text(dir / "cmc_full_fused.csv", cmc_csv(report.full.fused));
  write_text(dir / "cmc_full_modified.csv", cmc_csv(report.full.modified));

  std::string summary = "scope,n_latents,gallery_size,baseline,fused,modified,e_t,alpha,beta\n";
  auto row = [&](const char* name, const ScopeReport& s) {
    summary += std::string(name) + "," + std::to_string(s.baseline.n_latents) + "," +
               std::to_string(s.baseline.gallery_size) + "," +
               fmt("%.6f", s.baseline.rank1()) + "," + fmt("%.6f", s.fused.rank1()) + "," +
               fmt("%.6f", s.modified.rank1()) + "," + fmt("%.3f", report.params.e_t) + "," +
               fmt("%g", report.params.alpha) + "," + fmt("%g", report.params.beta) + "\n";
  };
  row("rare_subset", report.rare_subset);
  row("full", report.full);
  write_text(dir / "rank1_summary.csv", summary);

  std::string density = "bin_lo,bin_hi,genuine,impostor\n";
  if (report.density) {
    const auto& h = *report.density;
    for (std::size_t b = 0; b < h.bins; ++b) {
      const double lo = static_cast<double>(b) / static_cast<double>(h.bins);
      const double hi = static_cast<double>(b + 1) / static_cast<double>(h.bins);
      density += fmt("%.4f", lo) + "," + fmt("%.4f", hi) + "," + fmt("%.6f", h.genuine[b]) +
                 "," + fmt("%.6f", h.impostor[b]) + "\n";
    }
  }
  write_text(dir / "error_density.csv", density);
  write_sweep_csv(report.sweep, dir / "sweep.csv");

  std::string recs = "latent_id,tenprint_id,is_genuine,s_m,e_hat,s_prime,s_double_prime\n";
  for (const auto& r : report.records) {
    recs += r.latent_id + "," + r.tenprint_id + "," + (r.is_genuine ? "1" : "0") + "," +
            fmt("%.17g", r.s_m) + "," + fmt("%.17g", r.e_hat) + "," + fmt("%.17g", r.s_prime) +
            "," + fmt("%.17g", r.s_double_prime) + "\n";
  }
  write_text(dir / "records.csv", recs);

  if (!svg) return;
  write_text(dir / "cmc_rare_subset.svg", cmc_svg("CMC, rare-feature subset", report.rare_subset));
  write_text(dir / "cmc_full.svg", cmc_svg("CMC, full set", report.full));
  if (report.density) {
    const auto& h = *report.density;
    svg::Series g{"match", {}, {}, false};
    svg::Series im{"non-match", {}, {}, false};
    double ymax = 0.0;
    for (std::size_t b = 0; b < h.bins; ++b) {
      const double centre = (static_cast<double>(b) + 0.5) / static_cast<double>(h.bins);
      g.x.push_back(centre);
      g.y.push_back(h.genuine[b]);
      im.x.push_back(centre);
      im.y.push_back(h.impostor[b]);
      ymax = std::max({ymax, h.genuine[b], h.impostor[b]});
    }
    write_text(dir / "error_density.svg",
               svg::line_chart({"Fitting-error similarity density", "E-hat", "Mass", 0.0, 1.0,
                                0.0, ymax > 0.0 ? ymax * 1.05 : 1.0},
                               {g, im}));
  }
  if (!report.sweep.thresholds.empty()) {
    svg::Series s{"Rank-1", report.sweep.thresholds, report.sweep.rank1, false};
    write_text(dir / "sweep.svg",
               svg::line_chart({"Rank-1 versus threshold", "E_t", "Rank-1",
                                report.sweep.thresholds.front(), report.sweep.thresholds.back(),
                                0.0, 1.0},
                               {s}));
  }
}

}  // namespace rarefit
