#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rarefit/alignment.hpp"
#include "rarefit/dataset.hpp"
#include "rarefit/error.hpp"
#include "rarefit/evaluation.hpp"
#include "rarefit/fusion.hpp"
#include "rarefit/parallel.hpp"
#include "rarefit/synthetic.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace rarefit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParse = 2;
constexpr int kExitValidation = 3;
constexpr int kExitInternal = 4;

struct Common {
  AlignmentConfig align;
  FusionParams fusion;
  unsigned threads = 0;
  bool json = false;
  std::string config;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "TOML-style file with option defaults");
  sub->add_option("--threads", c.threads, "worker threads (0 = all cores)");
  sub->add_flag("--json", c.json, "machine-readable output");
  sub->add_option("--dist-threshold", c.align.distance_threshold, "mating distance (px)")
      ->capture_default_str();
  sub->add_option("--error-cap", c.align.error_cap, "fitting error mapped to similarity 0 (px^2)")
      ->capture_default_str();
  sub->add_option("--rot-step", c.align.rotation_step_deg, "rotation grid step (deg)")
      ->capture_default_str();
  sub->add_option("--rot-min", c.align.rotation_min_deg)->capture_default_str();
  sub->add_option("--rot-max", c.align.rotation_max_deg)->capture_default_str();
  sub->add_option("--min-correspondences", c.align.min_correspondences)->capture_default_str();
  sub->add_option("--penalize-unmatched", c.align.penalize_unmatched,
                  "charge unmated latent minutiae the threshold squared")
      ->capture_default_str();
  sub->add_option("--et", c.fusion.e_t, "similarity threshold")->capture_default_str();
  sub->add_option("--alpha", c.fusion.alpha, "reward multiplier")->capture_default_str();
  sub->add_option("--beta", c.fusion.beta, "penalty multiplier")->capture_default_str();
}

struct MatcherOpts {
  std::string choice = "internal";
  MatcherConfig config;
  std::string rare = "demote";
};

void add_matcher(CLI::App* sub, MatcherOpts& m) {
  sub->add_option("--matcher", m.choice, "internal | external:<scores.csv>")->capture_default_str();
  sub->add_option("--match-dist-tol", m.config.distance_tolerance)->capture_default_str();
  sub->add_option("--match-angle-tol", m.config.angle_tolerance_deg)->capture_default_str();
  sub->add_option("--match-window", m.config.rotation_window_deg,
                  "rotation consensus window (deg, 0 = off)")
      ->capture_default_str();
  sub->add_option("--match-rare", m.rare, "rare minutiae in the baseline matcher")
      ->check(CLI::IsMember({"demote", "drop"}))
      ->capture_default_str();
}

MatcherChoice matcher_choice(const MatcherOpts& m) {
  constexpr std::string_view ext = "external:";
  if (m.choice.rfind(ext, 0) == 0) {
    const std::string path = m.choice.substr(ext.size());
    if (path.empty()) throw ParseError("--matcher external: needs a score file path");
    return ExternalScores{path};
  }
  if (m.choice != "internal") throw ParseError("--matcher must be internal or external:<path>");
  MatcherConfig cfg = m.config;
  cfg.rare = m.rare == "drop" ? RareHandling::Drop : RareHandling::Demote;
  return InternalMatcher{cfg};
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string fixed(double v, int digits = 4) {
  if (!std::isfinite(v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

json scope_json(const ScopeReport& s) {
  return {{"baseline", number_or_null(s.baseline.rank1())},
          {"fused", number_or_null(s.fused.rank1())},
          {"modified", number_or_null(s.modified.rank1())},
          {"n_latents", s.baseline.n_latents},
          {"gallery_size", s.baseline.gallery_size}};
}

// --- subcommands ------------------------------------------------------------------

int cmd_fit(const std::string& latent_path, const std::string& tenprint_path, const Common& c) {
  c.align.validate();
  const auto latent = load_minutia_set(latent_path, SetKind::Latent);
  const auto tenprint = load_minutia_set(tenprint_path, SetKind::Tenprint);
  const auto result = align(latent, tenprint, c.align);
  const double e_hat = error_to_similarity(result.error, c.align);

  const AnchorOutcome* best =
      result.best_anchor ? &result.anchors[*result.best_anchor] : nullptr;
  if (c.json) {
    json j;
    j["E"] = result.error ? json(*result.error) : json(nullptr);
    j["E_hat"] = e_hat;
    j["status"] = std::string(status_name(result.status));
    j["reason"] = result.error ? json(nullptr) : json(std::string(status_name(result.status)));
    j["anchors_tried"] = result.anchors.size();
    if (best) {
      j["anchor"] = {{"latent_index", best->anchor.latent_index},
                     {"tenprint_index", best->anchor.tenprint_index},
                     {"type", std::string(type_name(best->anchor.latent_anchor.type))},
                     {"rotation_deg", best->rotation.angle_deg}};
      j["correspondences"] = best->correspondence.size();
    } else {
      j["anchor"] = nullptr;
      j["correspondences"] = 0;
    }
    std::cout << j.dump(2) << "\n";
    return kExitOk;
  }

  if (result.error) {
    std::cout << "E        " << fixed(*result.error, 6) << "\n";
  } else {
    std::cout << "E        absent (" << status_name(result.status) << ")\n";
  }
  std::cout << "E_hat    " << fixed(e_hat, 6) << "\n";
  if (best) {
    std::cout << "anchor   latent #" << best->anchor.latent_index << " / tenprint #"
              << best->anchor.tenprint_index << " ("
              << type_name(best->anchor.latent_anchor.type) << "), rotation "
              << best->rotation.angle_deg << " deg\n";
    std::cout << "mated    " << best->correspondence.size() << " of " << latent.size() << "\n";
  } else {
    std::cout << "reason   " << status_name(result.status) << "\n";
  }
  return kExitOk;
}

int cmd_evaluate(const std::string& dataset, const std::string& out, const MatcherOpts& m,
                 const Common& c, EvaluationOptions opts, bool svg) {
  c.align.validate();
  c.fusion.validate();
  const auto choice = matcher_choice(m);
  const auto d = load_dataset(dataset);
  opts.threads = c.threads;
  const auto report = evaluate_full(d, choice, c.align, c.fusion, opts);
  write_report(report, out, svg);

  if (c.json) {
    json j;
    j["n_subjects"] = report.n_subjects;
    j["n_rare"] = report.n_rare;
    j["e_t"] = report.params.e_t;
    j["alpha"] = report.params.alpha;
    j["beta"] = report.params.beta;
    j["rare_subset"] = scope_json(report.rare_subset);
    j["full"] = scope_json(report.full);
    j["best_e_t"] = report.n_rare > 0 ? json(report.sweep.best_e_t) : json(nullptr);
    j["out"] = out;
    std::cout << j.dump(2) << "\n";
    return kExitOk;
  }
  std::cout << "subjects " << report.n_subjects << ", with rare latent minutiae "
            << report.n_rare << "\n";
  std::cout << "e_t " << report.params.e_t << "  alpha " << report.params.alpha << "  beta "
            << report.params.beta << "\n";
  std::cout << "Rank-1          baseline  fused     modified\n";
  auto line = [](const char* name, const ScopeReport& s) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-15s %-9s %-9s %s\n", name, fixed(s.baseline.rank1()).c_str(),
                  fixed(s.fused.rank1()).c_str(), fixed(s.modified.rank1()).c_str());
    std::cout << buf;
  };
  line("rare subset", report.rare_subset);
  line("full set", report.full);
  std::cout << "report written to " << out << "\n";
  return kExitOk;
}

int cmd_sweep(const std::string& dataset, const std::string& out, const MatcherOpts& m,
              const Common& c, const EvaluationOptions& opts) {
  c.align.validate();
  c.fusion.validate();
  const auto choice = matcher_choice(m);
  const auto d = load_dataset(dataset);
  EvaluationOptions o = opts;
  o.threads = c.threads;
  const auto report = evaluate_full(d, choice, c.align, c.fusion, o);
  if (report.records.empty()) {
    throw ValidationError("no latent in the dataset carries a rare minutia; nothing to sweep");
  }
  fs::create_directories(out);
  write_sweep_csv(report.sweep, fs::path(out) / "sweep.csv");

  if (c.json) {
    json j;
    j["best_e_t"] = report.sweep.best_e_t;
    j["best_rank1"] = report.sweep.best_rank1;
    j["rows"] = report.sweep.thresholds.size();
    j["out"] = (fs::path(out) / "sweep.csv").string();
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "best_e_t " << fixed(report.sweep.best_e_t, 3) << "  rank1 "
              << fixed(report.sweep.best_rank1) << "  (" << report.sweep.thresholds.size()
              << " thresholds)\n";
  }
  return kExitOk;
}

int cmd_synth(SynthParams p, const std::string& out, const Common& c) {
  const auto d = gen_synthetic(p, resolve_threads(c.threads));
  save_dataset(d, out);
  std::size_t lat = 0;
  std::size_t tp = 0;
  std::size_t rare = 0;
  for (const auto& s : d.subjects) {
    lat += s.latent.size();
    tp += s.tenprint.size();
    rare += s.has_rare ? 1 : 0;
  }
  const double n = static_cast<double>(d.subjects.size());
  if (c.json) {
    json j;
    j["subjects"] = d.subjects.size();
    j["seed"] = p.seed;
    j["with_rare"] = rare;
    j["mean_latent_minutiae"] = static_cast<double>(lat) / n;
    j["mean_tenprint_minutiae"] = static_cast<double>(tp) / n;
    j["out"] = out;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << d.subjects.size() << " subjects (seed " << p.seed << "), " << rare
              << " with rare latent minutiae; mean minutiae latent "
              << fixed(static_cast<double>(lat) / n, 2) << ", tenprint "
              << fixed(static_cast<double>(tp) / n, 2) << "\n";
    std::cout << "written to " << out << "\n";
  }
  return kExitOk;
}

int cmd_stats(const std::string& dataset, const std::string& scope, const Common& c) {
  const auto d = load_dataset(dataset);
  const auto t = type_frequencies(
      d, scope == "tenprints" ? FrequencyScope::Tenprints : FrequencyScope::Latents);
  if (c.json) {
    json rows = json::array();
    for (int code = 1; code <= kMinutiaTypeCount; ++code) {
      const auto type = minutia_type_from_code(code);
      if (t.count(type) == 0) continue;
      rows.push_back({{"code", code},
                      {"type", std::string(type_name(type))},
                      {"p", t.probability(type)},
                      {"count", t.count(type)}});
    }
    std::cout << json{{"scope", scope}, {"total", t.total}, {"types", rows}}.dump(2) << "\n";
    return kExitOk;
  }
  std::printf("%-4s %-14s %-10s %s\n", "No", "Type", "p_i", "count");
  for (int code = 1; code <= kMinutiaTypeCount; ++code) {
    const auto type = minutia_type_from_code(code);
    if (t.count(type) == 0) continue;
    std::printf("%-4d %-14s %-10.4f %zu\n", code, std::string(type_name(type)).c_str(),
                t.probability(type), t.count(type));
  }
  std::printf("total %zu minutiae (%s)\n", t.total, scope.c_str());
  return kExitOk;
}

// Options from --config are placed ahead of the command line, so with
// take-last semantics the explicit flags win.
std::vector<std::string> config_args(const std::vector<std::string>& argv,
                                     const std::string& subcommand) {
  std::string path;
  for (std::size_t i = 0; i < argv.size(); ++i) {
    if (argv[i] == "--config" && i + 1 < argv.size()) path = argv[i + 1];
    if (argv[i].rfind("--config=", 0) == 0) path = argv[i].substr(9);
  }
  if (path.empty()) return {};
  if (!fs::is_regular_file(path)) throw ParseError("config file '" + path + "' is not readable");
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_file(path);
  } catch (const CLI::Error& e) {
    throw ParseError("config file '" + path + "': " + e.what());
  }
  std::vector<std::string> args;
  for (const auto& item : items) {
    const bool top = item.parents.empty();
    const bool ours = item.parents.size() == 1 && item.parents[0] == subcommand;
    if (!(top || ours) || item.name == "config" || item.name == "++" || item.name == "--") continue;
    std::string name = item.name;
    std::replace(name.begin(), name.end(), '_', '-');
    for (const auto& v : item.inputs) args.push_back("--" + name + "=" + v);
    if (item.inputs.empty()) args.push_back("--" + name);
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rare-minutia alignment and score fusion for latent fingerprint matching"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  Common common;
  MatcherOpts matcher;
  EvaluationOptions eval_opts;
  SynthParams synth;
  std::string dataset;
  std::string out;
  std::string latent_path;
  std::string tenprint_path;
  std::string scope = "latents";
  bool no_svg = false;

  auto* fit = app.add_subcommand("fit", "align one latent against one tenprint");
  fit->add_option("latent", latent_path, "latent minutia set (JSON)")->required();
  fit->add_option("tenprint", tenprint_path, "tenprint minutia set (JSON)")->required();
  add_common(fit, common);

  auto* evaluate = app.add_subcommand("evaluate", "identification experiment over a dataset");
  evaluate->add_option("--dataset", dataset)->required();
  evaluate->add_option("--out", out, "report directory")->required();
  evaluate->add_flag("--tune-et", eval_opts.tune_threshold, "use the best swept threshold");
  evaluate->add_flag("--holdout", eval_opts.holdout,
                     "with --tune-et: tune on every other rare latent");
  evaluate->add_flag("--no-svg", no_svg, "skip the SVG figures");
  evaluate->add_option("--density-bins", eval_opts.density_bins)->capture_default_str();
  add_common(evaluate, common);
  add_matcher(evaluate, matcher);

  auto* sweep = app.add_subcommand("sweep", "Rank-1 as a function of the similarity threshold");
  sweep->add_option("--dataset", dataset)->required();
  sweep->add_option("--out", out, "output directory")->required();
  sweep->add_option("--et-min", eval_opts.sweep_min)->capture_default_str();
  sweep->add_option("--et-max", eval_opts.sweep_max)->capture_default_str();
  sweep->add_option("--step", eval_opts.sweep_step)->capture_default_str();
  add_common(sweep, common);
  add_matcher(sweep, matcher);

  auto* synthc = app.add_subcommand("synth", "generate a synthetic dataset");
  synthc->add_option("--out", out, "dataset file")->required();
  synthc->add_option("--seed", synth.seed)->capture_default_str();
  synthc->add_option("--subjects", synth.n_subjects)->capture_default_str();
  synthc->add_option("--latent-mean", synth.latent_minutiae_mean)->capture_default_str();
  synthc->add_option("--tenprint-mean", synth.tenprint_minutiae_mean)->capture_default_str();
  synthc->add_option("--width", synth.area_width)->capture_default_str();
  synthc->add_option("--height", synth.area_height)->capture_default_str();
  synthc->add_option("--spacing", synth.min_spacing)->capture_default_str();
  synthc->add_option("--jitter", synth.position_jitter_sigma, "position noise sigma (px)")
      ->capture_default_str();
  synthc->add_option("--angle-jitter", synth.angle_jitter_sigma, "direction noise sigma (deg)")
      ->capture_default_str();
  synthc->add_option("--max-rotation", synth.max_rotation_deg)->capture_default_str();
  synthc->add_option("--rare-dropout", synth.rare_dropout_prob)->capture_default_str();
  add_common(synthc, common);

  auto* stats = app.add_subcommand("stats", "minutia type frequencies of a dataset");
  stats->add_option("--dataset", dataset)->required();
  stats->add_option("--scope", scope)
      ->check(CLI::IsMember({"latents", "tenprints"}))
      ->capture_default_str();
  add_common(stats, common);

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    std::string sub;
    for (const auto& a : args) {
      if (a == "fit" || a == "evaluate" || a == "sweep" || a == "synth" || a == "stats") {
        sub = a;
        break;
      }
    }
    if (!sub.empty()) {
      auto extra = config_args(args, sub);
      const auto pos = std::find(args.begin(), args.end(), sub) + 1;
      args.insert(pos, extra.begin(), extra.end());
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  }

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitParse;
  }

  try {
    if (*fit) return cmd_fit(latent_path, tenprint_path, common);
    if (*evaluate) return cmd_evaluate(dataset, out, matcher, common, eval_opts, !no_svg);
    if (*sweep) return cmd_sweep(dataset, out, matcher, common, eval_opts);
    if (*synthc) return cmd_synth(synth, out, common);
    if (*stats) return cmd_stats(dataset, scope, common);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const GenerationError& e) {
    std::cerr << "generation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
