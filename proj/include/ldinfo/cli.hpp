#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ldinfo/affine.hpp"
#include "ldinfo/boost.hpp"
#include "ldinfo/core.hpp"
#include "ldinfo/info.hpp"
#include "ldinfo/io.hpp"
#include "ldinfo/littlestone.hpp"
#include "ldinfo/parallel.hpp"
#include "ldinfo/stable.hpp"

namespace ldinfo::cli {

inline constexpr const char* kSchema = "ldinfo.experiment/1";
inline constexpr const char* kVersion = "ldinfo-1.0.0";
inline constexpr const char* kSeedEnv = "LDINFO_SEED";

enum ExitCode : int { kOk = 0, kInternal = 1, kConfigError = 2, kResourceError = 3, kIoError = 4 };

enum class Format { json, csv, both };

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"ldim", "soa", "stability", "boost", "mi", "bounds", "affine", "all"};
  return names;
}

struct ExperimentConfig {
  json raw;
  std::string config_hash;

  std::optional<HypothesisClass> hypotheses;
  std::optional<AffineClassParams> affine;
  std::optional<RealizableDistribution> distribution;

  Regime regime = Regime::desk_scale;
  std::optional<std::size_t> leaf_size;
  std::optional<std::uint64_t> n1;
  std::optional<std::size_t> k;
  std::optional<double> eta;

  double epsilon = 0.5;
  double delta = 0.05;
  std::optional<int> d;
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  std::optional<std::size_t> horizon;
  std::size_t soa_sample = 0;
  bool exact_mi = false;
  std::size_t exact_n = 1;
  std::size_t exact_k = 3;
  std::optional<std::size_t> exact_threshold;
};

namespace detail {

template <class T>
std::optional<T> opt(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

inline Hypothesis target_from_json(const json& dist, const HypothesisClass& c,
                                   const std::optional<AffineClassParams>& affine) {
  if (dist.contains("target")) {
    const auto h = Hypothesis::from_string(dist.at("target").get<std::string>());
    if (!c.contains(h)) throw InvalidArgument("distribution: target is not a member of the class");
    return h;
  }
  if (dist.contains("target_points")) {
    if (!affine) throw InvalidArgument("distribution: target_points needs an affine class");
    const auto pts = dist.at("target_points").get<std::vector<FqVector>>();
    const auto hull = affine_hull(affine->q, std::span<const FqVector>(pts));
    if (hull.dim() > affine->d) throw InvalidArgument("distribution: target subspace exceeds dimension d");
    return indicator(*affine, hull);
  }
  if (dist.contains("target_id")) {
    const auto id = dist.at("target_id").get<std::size_t>();
    if (id >= c.size()) throw InvalidArgument("distribution: target_id not in class");
    return c.row(id);
  }
  throw InvalidArgument("distribution: one of target, target_id, target_points is required");
}

}  // namespace detail

// Parses and validates a config document. Relative class-file paths resolve
// against `base_dir`.
inline ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir = ".") {
  if (!j.is_object()) throw InvalidArgument("config: top level must be an object");
  if (j.value("schema", std::string()) != kSchema) {
    throw InvalidArgument(std::string("config: 'schema' must be \"") + kSchema + "\"");
  }
  ExperimentConfig cfg;
  cfg.raw = j;
  cfg.config_hash = fnv1a_hex(j.dump());
  try {
    if (j.contains("class")) {
      const json& c = j.at("class");
      const auto kind = c.at("kind").get<std::string>();
      if (kind == "matrix") {
        cfg.hypotheses = make_class(rows_from_json(c.at("rows")));
      } else if (kind == "thresholds") {
        cfg.hypotheses = threshold_class(c.at("N").get<std::size_t>());
      } else if (kind == "cube") {
        cfg.hypotheses = full_cube(c.at("m").get<std::size_t>());
      } else if (kind == "affine") {
        AffineClassParams p{c.at("q").get<std::uint32_t>(), c.at("l").get<std::size_t>(), c.at("d").get<int>()};
        p.validate();
        cfg.affine = p;
        if (p.domain_size() <= kAffineEnumerationLimit) cfg.hypotheses = enumerate_affine_class(p);
      } else if (kind == "file") {
        std::filesystem::path path = c.at("path").get<std::string>();
        if (path.is_relative()) path = base_dir / path;
        cfg.hypotheses = read_class_file(path);
      } else {
        throw InvalidArgument("config: unknown class kind '" + kind + "'");
      }
    }
    if (j.contains("distribution")) {
      if (!cfg.hypotheses && !cfg.affine) throw InvalidArgument("config: distribution needs a class");
      json dj = j.at("distribution");
      if (dj.contains("file")) {
        std::filesystem::path path = dj.at("file").get<std::string>();
        if (path.is_relative()) path = base_dir / path;
        if (!cfg.hypotheses) throw InvalidArgument("config: a distribution file needs an enumerable class");
        dj = read_json_file(path);
      }
      const std::size_t m = cfg.hypotheses ? cfg.hypotheses->domain_size() : cfg.affine->domain_size();
      std::vector<double> pmf;
      if (!dj.contains("pmf") || (dj.at("pmf").is_string() && dj.at("pmf").get<std::string>() == "uniform")) {
        pmf.assign(m, 1.0 / static_cast<double>(m));
      } else {
        pmf = dj.at("pmf").get<std::vector<double>>();
      }
      Hypothesis target = cfg.hypotheses ? detail::target_from_json(dj, *cfg.hypotheses, cfg.affine)
                                         : detail::target_from_json(dj, HypothesisClass{}, cfg.affine);
      cfg.distribution.emplace(std::move(pmf), std::move(target));
    }
    const auto regime = j.value("regime", std::string("desk-scale"));
    if (regime == "faithful") {
      cfg.regime = Regime::faithful;
    } else if (regime == "desk-scale") {
      cfg.regime = Regime::desk_scale;
    } else {
      throw InvalidArgument("config: regime must be 'faithful' or 'desk-scale'");
    }
    if (j.contains("desk_scale")) {
      const json& ds = j.at("desk_scale");
      cfg.leaf_size = detail::opt<std::size_t>(ds, "leaf_size");
      cfg.n1 = detail::opt<std::uint64_t>(ds, "n1");
      cfg.k = detail::opt<std::size_t>(ds, "k");
      cfg.eta = detail::opt<double>(ds, "eta");
    }
    cfg.epsilon = j.value("epsilon", 0.5);
    cfg.delta = j.value("delta", 0.05);
    cfg.d = detail::opt<int>(j, "d");
    cfg.trials = j.value("trials", std::size_t{1000});
    cfg.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("soa")) {
      cfg.horizon = detail::opt<std::size_t>(j.at("soa"), "horizon");
      cfg.soa_sample = j.at("soa").value("sample_size", std::size_t{0});
    }
    if (j.contains("mi")) {
      cfg.exact_mi = j.at("mi").value("exact", false);
      cfg.exact_n = j.at("mi").value("n", std::size_t{1});
      cfg.exact_k = j.at("mi").value("k", std::size_t{3});
      cfg.exact_threshold = detail::opt<std::size_t>(j.at("mi"), "threshold");
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) throw InvalidArgument("config: epsilon must lie in (0, 1)");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw InvalidArgument("config: delta must lie in (0, 1)");
  if (cfg.trials == 0) throw InvalidArgument("config: trials must be >= 1");
  if (cfg.regime == Regime::desk_scale && (cfg.leaf_size.value_or(1) == 0 || cfg.n1.value_or(1) == 0)) {
    throw InvalidArgument("config: desk-scale leaf_size and n1 must be >= 1");
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_json_file(path), path.parent_path());
}

/// Resolved learner parameters for one experiment.
struct Plan {
  int d = 0;
  StabilityParams params;
  std::size_t k = 0;
  double eta = 0.0;
  std::size_t threshold = 0;
};

// d is the ldim of the class unless set explicitly. The affine learner runs
// its tournament to depth d+1, so its sample layout is sized for d+1.
inline Plan make_plan(const ExperimentConfig& cfg, bool affine_learner = false) {
  Plan p;
  if (affine_learner) {
    if (!cfg.affine) throw InvalidArgument("config: the affine stage needs an affine class");
    p.d = cfg.affine->d;
  } else if (cfg.d) {
    p.d = *cfg.d;
  } else if (cfg.hypotheses) {
    p.d = ldim(*cfg.hypotheses);
  } else {
    throw InvalidArgument("config: set 'd' or give a class");
  }
  if (p.d < 0) throw InvalidArgument("config: d must be >= 0");
  const int depth = affine_learner ? p.d + 1 : p.d;
  p.params = lemma1_params(depth, cfg.epsilon);
  p.params.d = depth;
  if (cfg.regime == Regime::desk_scale) {
    if (!cfg.leaf_size || !cfg.n1) throw InvalidArgument("config: desk-scale regime needs desk_scale.leaf_size and n1");
    p.params = desk_scale(p.params, *cfg.leaf_size, *cfg.n1);
  } else if (!p.params.executable) {
    std::ostringstream os;
    os << "faithful sample size n = " << p.params.n << " exceeds " << kDeskScaleLimit
       << "; use the desk-scale regime with explicit overrides";
    throw ResourceError(os.str());
  }
  p.eta = cfg.eta.value_or(affine_learner ? 1.0 / (p.d + 2.0) : p.params.eta);
  if (!(p.eta > 0.0 && p.eta <= 1.0)) throw InvalidArgument("config: eta must lie in (0, 1]");
  p.k = cfg.k.value_or(k_choice(cfg.delta, p.eta));
  BoostConfig bc{p.k, p.eta, p.params.sample_size(), 0};
  bc.validate();
  p.threshold = bc.threshold();
  return p;
}

using Records = std::vector<json>;

namespace detail {

inline json n_to_json(const BigInt& n) {
  if (n <= BigInt(std::numeric_limits<std::uint64_t>::max())) return static_cast<std::uint64_t>(n);
  return n.str();
}

inline const HypothesisClass& need_class(const ExperimentConfig& cfg) {
  if (!cfg.hypotheses) throw InvalidArgument("config: this stage needs an enumerable class");
  return *cfg.hypotheses;
}

inline const RealizableDistribution& need_distribution(const ExperimentConfig& cfg) {
  if (!cfg.distribution) throw InvalidArgument("config: this stage needs a distribution");
  return *cfg.distribution;
}

// Per-stage stream index under the master seed; fixed so that `all` and the
// single-stage subcommands produce the same numbers.
inline std::uint64_t stage_stream(const std::string& stage) {
  const auto& names = subcommands();
  return static_cast<std::uint64_t>(std::find(names.begin(), names.end(), stage) - names.begin());
}

inline void stage_ldim(const ExperimentConfig& cfg, Records& out) {
  const auto& c = need_class(cfg);
  json r;
  r["stage"] = "ldim";
  r["kind"] = "summary";
  r["ldim"] = ldim(c);
  r["class_size"] = c.size();
  r["domain_size"] = c.domain_size();
  out.push_back(std::move(r));
}

inline void stage_soa(const ExperimentConfig& cfg, const RandomSource& rng, Records& out) {
  const auto& c = need_class(cfg);
  auto solver = std::make_shared<const LdimSolver>(c);
  const int d = solver->ldim();
  const std::size_t horizon = cfg.horizon.value_or(static_cast<std::size_t>(d) + 2);
  json r;
  r["stage"] = "soa";
  r["kind"] = "summary";
  r["ldim"] = d;
  r["horizon"] = horizon;
  r["worst_case_mistakes"] = worst_case_mistakes(SoaLearner{solver}, c, horizon);
  if (cfg.distribution) {
    RandomSource data = rng.derive(0);
    const std::size_t n = cfg.soa_sample ? cfg.soa_sample : 4 * c.domain_size();
    const Sample s = draw_sample(*cfg.distribution, n, data);
    const SoaRun run = soa_run(solver, s);
    r["sample_size"] = n;
    r["sample_mistakes"] = run.mistakes;
    r["sample_output"] = run.output.to_string();
    r["sample_true_error"] = round12(true_error(run.output, *cfg.distribution));
  }
  out.push_back(std::move(r));
}

inline json plan_json(const Plan& p) {
  json j;
  j["d"] = p.d;
  j["k"] = p.k;
  j["eta"] = round12(p.eta);
  j["n1"] = p.params.n1;
  j["leaf_size"] = p.params.leaf_size;
  j["n"] = p.params.sample_size();
  j["vote_threshold"] = p.threshold;
  return j;
}

inline void stage_stability(const ExperimentConfig& cfg, const RandomSource& rng, std::size_t threads,
                            Records& out) {
  const auto& c = need_class(cfg);
  const auto& dist = need_distribution(cfg);
  const Plan plan = make_plan(cfg);
  const GloballyStableLearner g(std::make_shared<const LdimSolver>(c), plan.params);
  auto outputs = parallel_map<std::optional<Hypothesis>>(cfg.trials, threads, [&](std::size_t i) {
    return std::optional<Hypothesis>(globally_stable_learn(g, dist, rng.derive(i)).output);
  });
  const StabilityReport rep = make_stability_report(outputs);
  const double lemma3 = std::log2(4.0 / plan.eta) / static_cast<double>(plan.params.n1);
  std::size_t violations = 0;
  for (const auto& [h, cnt] : rep.counts) {
    if (static_cast<double>(cnt) / static_cast<double>(rep.trials) > plan.eta / 4.0 && true_error(h, dist) > lemma3) {
      ++violations;
    }
  }
  for (const auto& [h, cnt] : rep.counts) {
    json t = hypothesis_to_json(h, &c);
    t["stage"] = "stability";
    t["kind"] = "hypothesis";
    t["count"] = cnt;
    t["freq"] = round12(static_cast<double>(cnt) / static_cast<double>(rep.trials));
    t["true_error"] = round12(true_error(h, dist));
    out.push_back(std::move(t));
  }
  json s = plan_json(plan);
  s["stage"] = "stability";
  s["kind"] = "summary";
  s["trials"] = rep.trials;
  s["f0"] = rep.f0.to_string();
  s["eta_hat"] = round12(rep.eta_hat);
  s["wilson_lower"] = round12(rep.wilson_lower);
  s["confidence_radius"] = round12(rep.confidence_radius);
  s["distinct_outputs"] = rep.counts.size();
  s["lemma3_loss_bound"] = round12(lemma3);
  s["lemma3_violations"] = violations;
  out.push_back(std::move(s));
}

inline void stage_boost(const ExperimentConfig& cfg, const RandomSource& rng, std::size_t threads, Records& out) {
  const auto& c = need_class(cfg);
  const auto& dist = need_distribution(cfg);
  const Plan plan = make_plan(cfg);
  const GloballyStableLearner g(std::make_shared<const LdimSolver>(c), plan.params);
  const BoostConfig bc{plan.k, plan.eta, plan.params.sample_size(), cfg.seed};
  auto outcomes = parallel_map<BoostOutcome>(cfg.trials, threads,
                                             [&](std::size_t i) { return run_boost(g, dist, bc, rng.derive(i), 1); });
  std::size_t failures = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    json t = boost_outcome_to_json(outcomes[i]);
    t["stage"] = "boost";
    t["kind"] = "trial";
    t["run"] = i;
    out.push_back(std::move(t));
    if (outcomes[i].failed()) ++failures;
  }
  const double tt = static_cast<double>(cfg.trials);
  const double p = static_cast<double>(failures) / tt;
  const auto bounds = failure_and_lemma_bounds(plan.k, plan.eta, plan.params.n1);
  json s = plan_json(plan);
  s["stage"] = "boost";
  s["kind"] = "summary";
  s["trials"] = cfg.trials;
  s["failures"] = failures;
  s["failure_rate"] = round12(p);
  s["failure_bound"] = round12(bounds.failure_bound);
  s["failure_bound_plus_3sigma"] = round12(bounds.failure_bound + 3.0 * std::sqrt(p * (1.0 - p) / tt));
  out.push_back(std::move(s));
}

inline json entropy_summary(const EntropyEstimate& e) {
  json s;
  s["entropy_hat"] = round12(e.estimate.value);
  s["miller_madow"] = round12(e.estimate.miller_madow);
  s["confidence_radius"] = round12(e.estimate.confidence_radius);
  s["entropy_upper"] = round12(e.estimate.upper());
  s["support_size"] = e.estimate.support_size;
  s["trials"] = e.estimate.trials;
  s["bias_note"] = e.estimate.bias_note;
  std::size_t failures = 0;
  for (const auto& [o, cnt] : e.counts) {
    if (!o) failures += cnt;
  }
  s["failures"] = failures;
  return s;
}

inline void push_trials(const std::string& stage, const EntropyEstimate& e, Records& out) {
  for (std::size_t i = 0; i < e.per_trial.size(); ++i) {
    json t;
    t["stage"] = stage;
    t["kind"] = "trial";
    t["trial"] = i;
    t["outcome"] = outcome_string(e.per_trial[i]);
    out.push_back(std::move(t));
  }
}

inline void stage_mi(const ExperimentConfig& cfg, const RandomSource& rng, std::size_t threads, Records& out) {
  const auto& c = need_class(cfg);
  const auto& dist = need_distribution(cfg);
  const Plan plan = make_plan(cfg);
  const GloballyStableLearner g(std::make_shared<const LdimSolver>(c), plan.params);
  const auto a = boosted_algorithm(g, plan.threshold);
  if (cfg.trials < 100) throw InvalidArgument("config: the mi stage needs trials >= 100");
  const EntropyEstimate e = estimate_entropy_mc(a, dist, plan.params.sample_size(), plan.k, cfg.trials, rng, threads);
  push_trials("mi", e, out);
  json s = entropy_summary(e);
  s.update(plan_json(plan));
  s["stage"] = "mi";
  s["kind"] = "summary";
  s["theorem1_rhs"] = round12(bound_theorem1(plan.k, plan.eta).total);
  s["theorem2_rhs"] = round12(bound_theorem2(plan.d));
  if (cfg.exact_mi) {
    // G itself needs too many examples to enumerate, so the exact column uses
    // the vote over SOA-on-sample outputs on a tiny (n, k) instance.
    auto solver = std::make_shared<const LdimSolver>(c);
    auto soa_on_sample = [solver](std::span<const LabeledExample> s, auto&) { return soa_run(solver, s).output; };
    const std::size_t threshold = cfg.exact_threshold.value_or(cfg.exact_k / 2 + 1);
    const auto exact =
        exact_mutual_information(boosted_algorithm(soa_on_sample, threshold), dist, cfg.exact_n, cfg.exact_k);
    s["mi_exact"] = round12(exact.value);
    s["mi_exact_learner"] = "soa-on-sample";
    s["mi_exact_n"] = cfg.exact_n;
    s["mi_exact_k"] = cfg.exact_k;
    s["mi_exact_threshold"] = threshold;
  }
  out.push_back(std::move(s));
}

inline void stage_bounds(const ExperimentConfig& cfg, Records& out) {
  int d = 0;
  if (cfg.d) {
    d = *cfg.d;
  } else if (cfg.hypotheses) {
    d = ldim(*cfg.hypotheses);
  } else {
    throw InvalidArgument("config: the bounds stage needs 'd' or a class");
  }
  const StabilityParams lp = lemma1_params(d, cfg.epsilon);
  const double eta = cfg.eta.value_or(lp.eta);
  const std::size_t k = cfg.k.value_or(k_choice(cfg.delta, eta));
  const std::uint64_t n1 = cfg.n1.value_or(lp.n1);
  const BoundReport br = bound_report({d, k, eta, n1, cfg.epsilon, cfg.delta});
  json s;
  s["stage"] = "bounds";
  s["kind"] = "summary";
  s["d"] = d;
  s["epsilon"] = round12(cfg.epsilon);
  s["delta"] = round12(cfg.delta);
  s["n"] = n_to_json(lp.n);
  s["n1"] = n1;
  s["eta"] = round12(eta);
  s["log2_eta"] = round12(lp.log2_eta);
  s["k"] = k;
  s["vote_threshold"] = vote_threshold(eta, k);
  s["theorem1_rhs"] = br.theorem1 ? round12(br.theorem1->total) : json(nullptr);
  s["theorem1_first_term"] = br.theorem1 ? round12(br.theorem1->first_term) : json(nullptr);
  s["theorem2_rhs"] = round12(br.theorem2_rhs);
  s["proposition_rhs"] = round12(br.proposition_rhs);
  s["failure_bound"] = round12(br.lemmas.failure_bound);
  s["lemma2_bound"] = round12(br.lemmas.lemma2_bound);
  s["lemma3_loss"] = round12(br.lemmas.lemma3_loss);
  out.push_back(std::move(s));
}

inline void stage_affine(const ExperimentConfig& cfg, const RandomSource& rng, std::size_t threads, Records& out) {
  if (!cfg.affine) throw InvalidArgument("config: the affine stage needs an affine class");
  const auto& dist = need_distribution(cfg);
  const Plan plan = make_plan(cfg, true);
  const StableAffineLearner g(*cfg.affine, plan.params.leaf_size, plan.params.n1, dist.target());
  std::atomic<std::size_t> appended{0}, appended_false{0};
  auto audited = [&](std::span<const LabeledExample> s, auto& coins) {
    const AffineRun run = g.run(s, coins);
    appended += run.appended;
    appended_false += run.appended_false;
    return run.output_indicator;
  };
  const auto a = boosted_algorithm(audited, plan.threshold);
  if (cfg.trials < 100) throw InvalidArgument("config: the affine stage needs trials >= 100");
  const EntropyEstimate e = estimate_entropy_mc(a, dist, g.sample_size(), plan.k, cfg.trials, rng, threads);
  push_trials("affine", e, out);
  json s = entropy_summary(e);
  s.update(plan_json(plan));
  s["n"] = g.sample_size();
  s["stage"] = "affine";
  s["kind"] = "summary";
  s["q"] = cfg.affine->q;
  s["l"] = cfg.affine->l;
  s["proposition_rhs"] = round12(proposition_affine_bound(plan.d));
  s["appended_examples"] = appended.load();
  s["appended_with_false_label"] = appended_false.load();
  if (cfg.hypotheses) s["ldim"] = ldim(*cfg.hypotheses);
  out.push_back(std::move(s));
}

}  // namespace detail

/// Runs one subcommand (or `all`) and returns its records in order.
inline Records run_stage(const std::string& command, const ExperimentConfig& cfg, std::uint64_t seed,
                         std::size_t threads) {
  const RandomSource master(seed, 0);
  Records out;
  auto run = [&](const std::string& stage) {
    const RandomSource rng = master.derive(detail::stage_stream(stage));
    if (stage == "ldim") detail::stage_ldim(cfg, out);
    else if (stage == "soa") detail::stage_soa(cfg, rng, out);
    else if (stage == "stability") detail::stage_stability(cfg, rng, threads, out);
    else if (stage == "boost") detail::stage_boost(cfg, rng, threads, out);
    else if (stage == "mi") detail::stage_mi(cfg, rng, threads, out);
    else if (stage == "bounds") detail::stage_bounds(cfg, out);
    else if (stage == "affine") detail::stage_affine(cfg, rng, threads, out);
    else throw InvalidArgument("unknown subcommand '" + stage + "'");
  };
  if (command == "all") {
    for (const auto& s : subcommands()) {
      if (s == "all") continue;
      if (s == "affine" && !cfg.affine) continue;
      if ((s == "stability" || s == "boost" || s == "mi") && (!cfg.hypotheses || !cfg.distribution)) continue;
      if ((s == "ldim" || s == "soa") && !cfg.hypotheses) continue;
      run(s);
    }
  } else {
    run(command);
  }
  const std::string regime = to_string(cfg.regime);
  for (auto& r : out) {
    r["config_hash"] = cfg.config_hash;
    r["seed"] = seed;
    r["regime"] = regime;
    r["version"] = kVersion;
  }
  return out;
}

inline const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols{"stage",        "d",           "k",          "eta",
                                             "n1",           "theorem1_rhs", "theorem2_rhs", "failure_bound",
                                             "entropy_hat",  "mi_exact",     "trials",     "seed",
                                             "regime",       "config_hash"};
  return cols;
}

inline std::string csv_cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_number_float()) return format12(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

/// CSV over the summary records only, fixed column order.
inline std::string render_csv(const Records& records) {
  std::string s;
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) s += (i ? "," : "") + cols[i];
  s += '\n';
  for (const auto& r : records) {
    if (r.value("kind", std::string()) != "summary") continue;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i) s += ',';
      if (r.contains(cols[i])) s += csv_cell(r.at(cols[i]));
    }
    s += '\n';
  }
  return s;
}

inline std::string render_jsonl(const Records& records) {
  std::string s;
  for (const auto& r : records) {
    s += dump12(r);
    s += '\n';
  }
  return s;
}

// Writes <dir>/<stem>.jsonl and/or <dir>/<stem>.csv. If any write fails the
// files already written by this call are removed.
inline std::vector<std::filesystem::path> emit_report(const Records& records, const std::filesystem::path& dir,
                                                      const std::string& stem, Format format = Format::both) {
  if (records.empty()) throw InvalidArgument("emit_report: no records");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  try {
    if (format != Format::csv) {
      const auto p = dir / (stem + ".jsonl");
      write_text_atomic(p, render_jsonl(records));
      written.push_back(p);
    }
    if (format != Format::json) {
      const auto p = dir / (stem + ".csv");
      write_text_atomic(p, render_csv(records));
      written.push_back(p);
    }
  } catch (...) {
    for (const auto& p : written) std::filesystem::remove(p, ec);
    throw;
  }
  return written;
}

struct Options {
  std::string command;
  std::filesystem::path config;
  std::filesystem::path out = "out";
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  Format format = Format::both;
};

/// Seed precedence: config < LDINFO_SEED < --seed.
inline std::uint64_t resolve_seed(const ExperimentConfig& cfg, const Options& opt) {
  if (opt.seed) return *opt.seed;
  if (const char* env = std::getenv(kSeedEnv); env && *env) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0') throw InvalidArgument(std::string(kSeedEnv) + " must be an unsigned integer");
    return v;
  }
  return cfg.seed;
}

inline std::vector<std::filesystem::path> run_experiment(const Options& opt) {
  if (opt.threads == 0) throw InvalidArgument("--threads must be >= 1");
  const ExperimentConfig cfg = load_config(opt.config);
  const std::uint64_t seed = resolve_seed(cfg, opt);
  const Records records = run_stage(opt.command, cfg, seed, opt.threads);
  return emit_report(records, opt.out, opt.command, opt.format);
}

/// Full command line front end; returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& err = std::cerr) {
  CLI::App app{"Littlestone dimension, stable learning and information complexity experiments"};
  app.require_subcommand(1);
  Options opt;
  std::string format = "both";
  for (const auto& name : subcommands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", opt.config, "experiment config (JSON)")->required();
    sub->add_option("--seed", opt.seed, "master seed; overrides the config and LDINFO_SEED");
    sub->add_option("--threads", opt.threads, "worker threads (results do not depend on it)");
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--format", format, "json, csv or both")->check(CLI::IsMember({"json", "csv", "both"}));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, std::cout, err);
    return rc == 0 ? kOk : kConfigError;
  }
  opt.command = app.get_subcommands().front()->get_name();
  opt.format = format == "json" ? Format::json : format == "csv" ? Format::csv : Format::both;
  try {
    for (const auto& p : run_experiment(opt)) std::cout << p.string() << '\n';
    return kOk;
  } catch (const ResourceError& e) {
    err << "resource guard: " << e.what() << '\n';
    return kResourceError;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const InvalidArgument& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NotRealizableError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}

}  // namespace ldinfo::cli
