#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "kgpoison/attack_direct.hpp"
#include "kgpoison/attack_indirect.hpp"
#include "kgpoison/baselines.hpp"
#include "kgpoison/checkpoint.hpp"
#include "kgpoison/error.hpp"
#include "kgpoison/evaluator.hpp"
#include "kgpoison/model.hpp"
#include "kgpoison/report.hpp"
#include "kgpoison/trainer.hpp"
#include "kgpoison/triple_io.hpp"
#include "kgpoison/triple_store.hpp"

namespace kgp {

enum class Strategy {
  DirectAdd,
  DirectDelete,
  IndirectAdd,
  IndirectDelete,
  RandomDA,
  RandomDD,
  RandomIA,
  RandomID,
};

constexpr std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::DirectAdd: return "direct-add";
    case Strategy::DirectDelete: return "direct-delete";
    case Strategy::IndirectAdd: return "indirect-add";
    case Strategy::IndirectDelete: return "indirect-delete";
    case Strategy::RandomDA: return "random-da";
    case Strategy::RandomDD: return "random-dd";
    case Strategy::RandomIA: return "random-ia";
    case Strategy::RandomID: return "random-id";
  }
  return "unknown";
}

inline Strategy parse_strategy(std::string_view s) {
  for (auto st : {Strategy::DirectAdd, Strategy::DirectDelete, Strategy::IndirectAdd,
                  Strategy::IndirectDelete, Strategy::RandomDA, Strategy::RandomDD,
                  Strategy::RandomIA, Strategy::RandomID})
    if (to_string(st) == s) return st;
  throw Error(ErrorCode::InvalidConfig, "unknown strategy '" + std::string(s) + "'");
}

constexpr Action strategy_action(Strategy s) {
  switch (s) {
    case Strategy::DirectAdd:
    case Strategy::IndirectAdd:
    case Strategy::RandomDA:
    case Strategy::RandomIA: return Action::Add;
    default: return Action::Delete;
  }
}

constexpr bool strategy_is_indirect(Strategy s) {
  return s == Strategy::IndirectAdd || s == Strategy::IndirectDelete || s == Strategy::RandomIA ||
         s == Strategy::RandomID;
}

struct ExperimentConfig {
  std::string dataset_name = "dataset";
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  TripleFormat format = TripleFormat::NameTSV;
  ModelKind model = ModelKind::TransE;
  TrainConfig train;
  Strategy strategy = Strategy::DirectDelete;
  std::size_t budget = 1;
  double step_eps_h = 1.0;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double lambda = 1.0;
  std::size_t add_candidate_sample = 10000;
  std::size_t k_hops = 2;
  std::size_t paths = 10;
  Side target_side = Side::Head;
  bool both_orientations = false;
  bool promote = false;
  std::optional<Side> rank_side_only;
  std::size_t num_targets = 100;
  std::uint64_t seed = 2019;
  std::filesystem::path out_dir = "out";
  bool per_target_retrain = false;

  AttackConfig attack_config() const {
    AttackConfig a;
    a.budget = budget;
    a.step_eps_h = step_eps_h;
    a.lambda1 = lambda1;
    a.lambda2 = lambda2;
    a.add_candidate_sample = add_candidate_sample;
    a.target_side = target_side;
    a.rng_seed = seed;
    a.both_orientations = both_orientations;
    a.promote = promote;
    return a;
  }

  IndirectConfig indirect_config() const {
    IndirectConfig c;
    c.k_hops = k_hops;
    c.paths = paths;
    c.lambda = lambda;
    c.budget = budget;
    c.step_eps_h = step_eps_h;
    c.lambda1 = lambda1;
    c.lambda2 = lambda2;
    c.add_candidate_sample = add_candidate_sample;
    c.target_side = target_side;
    c.rng_seed = seed;
    c.both_orientations = both_orientations;
    c.promote = promote;
    return c;
  }

  Json attack_json() const {
    Json j{{"strategy", std::string(to_string(strategy))},
           {"budget", budget},
           {"eps_h", step_eps_h},
           {"lambda1", lambda1},
           {"lambda2", lambda2},
           {"lambda", lambda},
           {"sample", add_candidate_sample},
           {"k_hops", k_hops},
           {"paths", paths},
           {"side", target_side == Side::Head ? "head" : "tail"},
           {"both_orientations", both_orientations},
           {"promote", promote}};
    return j;
  }
};

struct Dataset {
  Vocabulary vocab;
  TripleStore train;
  TripleStore test;
  std::size_t train_duplicates = 0;
  std::size_t test_skipped = 0;
};

inline Dataset load_dataset(const std::filesystem::path& train_path,
                            const std::filesystem::path& test_path, TripleFormat format) {
  auto tr = load_triples(train_path, format);
  if (tr.duplicates > 0)
    std::cerr << "note: " << tr.duplicates << " duplicate training triples dropped\n";
  Dataset ds{std::move(tr.vocab), std::move(tr.store), {}, tr.duplicates, 0};
  if (!test_path.empty()) {
    auto te = load_triples(test_path, format, ds.vocab);
    if (te.skipped_unknown > 0)
      std::cerr << "warning: " << te.skipped_unknown
                << " test triples reference entities/relations absent from training; skipped\n";
    ds.test = std::move(te.store);
    ds.test_skipped = te.skipped_unknown;
  }
  return ds;
}

// Uniform sample (without replacement) of test facts absent from training.
inline std::vector<Triple> sample_targets(const TripleStore& test, const TripleStore& train,
                                          std::size_t n, std::uint64_t seed) {
  std::vector<Triple> eligible;
  for (const auto& t : test.triples())
    if (!train.contains(t)) eligible.push_back(t);
  require(n <= eligible.size(), ErrorCode::InsufficientEligibleTargets,
          "requested " + std::to_string(n) + " targets, " + std::to_string(eligible.size()) +
              " eligible");
  Rng rng(derive_seed(seed, {0x7a29e7}));
  std::shuffle(eligible.begin(), eligible.end(), rng);
  eligible.resize(n);
  return eligible;
}

// Applies perturbations in order. A triple may be touched at most once:
// deletes must hit original members, adds must be non-members.
inline TripleStore apply_perturbations(const TripleStore& store,
                                       std::span<const Perturbation> perts) {
  std::set<Triple> touched;
  std::vector<Triple> adds, deletes;
  for (const auto& p : perts) {
    bool fresh = touched.insert(p.triple).second;
    if (p.action == Action::Delete) {
      require(fresh && store.contains(p.triple), ErrorCode::ConflictingPerturbation,
              "delete of absent or already-touched " + to_string(p.triple));
      deletes.push_back(p.triple);
    } else {
      require(fresh && !store.contains(p.triple), ErrorCode::ConflictingPerturbation,
              "add of existing or already-touched " + to_string(p.triple));
      adds.push_back(p.triple);
    }
  }
  return store.with_edits(adds, deletes);
}

struct TargetAttack {
  Triple target;
  std::vector<Perturbation> perturbations;
  std::vector<IndirectPerturbation> indirect;  // filled for informed indirect strategies
  std::string status = "ok";                   // or the abort reason
  double seconds = 0;
};

// Runs the configured strategy against one target. Attack aborts
// (ZeroResidual, NoPaths, NoCandidates, ...) are recorded, not thrown.
inline TargetAttack attack_target(const TripleStore& train, const EmbeddingStore& emb,
                                  const Triple& target, const ExperimentConfig& cfg) {
  TargetAttack ta;
  ta.target = target;
  const auto start = std::chrono::steady_clock::now();
  try {
    const Action mode = strategy_action(cfg.strategy);
    switch (cfg.strategy) {
      case Strategy::DirectAdd:
      case Strategy::DirectDelete:
        ta.perturbations = direct_attack(train, emb, target, cfg.attack_config(), mode);
        break;
      case Strategy::IndirectAdd:
      case Strategy::IndirectDelete:
        ta.indirect = indirect_attack(train, emb, target, cfg.indirect_config(), mode);
        ta.perturbations = plain(ta.indirect);
        break;
      case Strategy::RandomDA:
      case Strategy::RandomDD:
        ta.perturbations = random_direct(train, target, cfg.target_side, cfg.budget, mode, cfg.seed,
                                         cfg.both_orientations);
        break;
      case Strategy::RandomIA:
      case Strategy::RandomID:
        ta.perturbations =
            random_indirect(train, target, cfg.target_side, cfg.k_hops, cfg.budget, mode, cfg.seed);
        break;
    }
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::ZeroResidual:
      case ErrorCode::ZeroGradient:
      case ErrorCode::NoPaths:
      case ErrorCode::NoCandidates:
      case ErrorCode::TargetInTrainingSet:
        ta.status = std::string(to_string(e.code()));
        ta.perturbations.clear();
        ta.indirect.clear();
        break;
      default: throw;
    }
  }
  ta.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return ta;
}

inline std::vector<TargetAttack> attack_targets(const TripleStore& train, const EmbeddingStore& emb,
                                                std::span<const Triple> targets,
                                                const ExperimentConfig& cfg) {
  std::vector<TargetAttack> out;
  out.reserve(targets.size());
  for (const auto& t : targets) out.push_back(attack_target(train, emb, t, cfg));
  return out;
}

// Union of all targets' perturbations, first occurrence wins.
inline std::vector<Perturbation> merge_perturbations(std::span<const TargetAttack> attacks) {
  std::set<Triple> seen;
  std::vector<Perturbation> out;
  for (const auto& a : attacks)
    for (const auto& p : a.perturbations)
      if (seen.insert(p.triple).second) out.push_back(p);
  return out;
}

struct PipelineResult {
  EvalReport clean;
  EvalReport poisoned;
  std::vector<TargetAttack> attacks;
  std::size_t applied_perturbations = 0;
  std::uint64_t clean_hash = 0;
  std::uint64_t poisoned_hash = 0;
};

// Attack generation, poisoning, from-scratch retraining and evaluation on top
// of an already-trained clean model.
inline PipelineResult poison_and_evaluate(const Dataset& ds, const EmbeddingStore& clean_emb,
                                          const EvalReport& clean_report,
                                          std::span<const Triple> targets,
                                          const ExperimentConfig& cfg,
                                          EmbeddingStore* poisoned_out = nullptr,
                                          TripleStore* poisoned_store_out = nullptr) {
  PipelineResult res;
  res.clean = clean_report;
  res.clean_hash = dataset_hash(ds.train);
  res.attacks = attack_targets(ds.train, clean_emb, targets, cfg);

  if (cfg.per_target_retrain) {
    std::vector<RankResult> ranks;
    for (const auto& a : res.attacks) {
      auto store = apply_perturbations(ds.train, a.perturbations);
      auto emb = train(store, cfg.model, cfg.train);
      ranks.push_back(rank_target(emb, a.target));
      res.applied_perturbations += a.perturbations.size();
    }
    res.poisoned = aggregate(ranks, cfg.rank_side_only);
    res.poisoned_hash = res.clean_hash;
    return res;
  }

  auto merged = merge_perturbations(res.attacks);
  res.applied_perturbations = merged.size();
  auto poisoned_store = apply_perturbations(ds.train, merged);
  res.poisoned_hash = dataset_hash(poisoned_store);
  auto poisoned = train(poisoned_store, cfg.model, cfg.train);
  res.poisoned = evaluate(poisoned, targets, cfg.rank_side_only);
  if (poisoned_out) *poisoned_out = std::move(poisoned);
  if (poisoned_store_out) *poisoned_store_out = std::move(poisoned_store);
  return res;
}

inline Json perturbations_json(std::span<const TargetAttack> attacks, Strategy strategy) {
  Json arr = Json::array();
  for (const auto& a : attacks) {
    Json list = Json::array();
    if (!a.indirect.empty())
      for (const auto& ip : a.indirect) list.push_back(perturbation_json(ip));
    else
      for (const auto& p : a.perturbations) list.push_back(perturbation_json(p));
    arr.push_back({{"target", triple_json(a.target)},
                   {"strategy", std::string(to_string(strategy))},
                   {"status", a.status},
                   {"perturbations", list}});
  }
  return arr;
}

inline std::vector<Perturbation> perturbations_from_json(const Json& j) {
  std::vector<Perturbation> out;
  for (const auto& entry : j)
    for (const auto& p : entry.at("perturbations")) out.push_back(perturbation_from_json(p));
  return out;
}

inline Json report_json(const PipelineResult& res, const ExperimentConfig& cfg) {
  Json flagged = Json::array();
  for (const auto& a : res.attacks)
    if (a.status != "ok") flagged.push_back({{"target", triple_json(a.target)}, {"reason", a.status}});
  Json meta{{"dataset", cfg.dataset_name},
            {"model", std::string(to_string(cfg.model))},
            {"strategy", std::string(to_string(cfg.strategy))},
            {"budget", cfg.budget},
            {"num_targets", res.clean.per_target.size()},
            {"seed", cfg.seed},
            {"retraining", cfg.per_target_retrain ? "per-target" : "once-per-strategy"},
            {"rank_sides", !cfg.rank_side_only ? "both"
                           : *cfg.rank_side_only == Side::Head ? "head" : "tail"},
            {"clean_dataset_hash", hex64(res.clean_hash)},
            {"poisoned_dataset_hash", hex64(res.poisoned_hash)},
            {"applied_perturbations", res.applied_perturbations},
            {"train_config", cfg.train.to_json()},
            {"attack_config", cfg.attack_json()}};
  return {{"metadata", meta},
          {"clean", eval_json(res.clean)},
          {"poisoned", eval_json(res.poisoned)},
          {"flagged_targets", flagged}};
}

inline std::string summary_csv_header() {
  return "dataset,model,strategy,budget,clean_mrr,poisoned_mrr,clean_h10,poisoned_h10";
}

inline std::string summary_csv_row(const PipelineResult& res, const ExperimentConfig& cfg) {
  return cfg.dataset_name + "," + std::string(to_string(cfg.model)) + "," +
         std::string(to_string(cfg.strategy)) + "," + std::to_string(cfg.budget) + "," +
         fixed6(res.clean.mrr) + "," + fixed6(res.poisoned.mrr) + "," +
         fixed6(res.clean.hits_at_10) + "," + fixed6(res.poisoned.hits_at_10);
}

struct TimingRow {
  Strategy strategy;
  std::size_t targets = 0;
  double mean_seconds = 0;
  double max_seconds = 0;
};

// Mean wall-clock perturbation-generation time per target (training excluded).
inline TimingRow report_timing(std::span<const TargetAttack> attacks, Strategy strategy) {
  TimingRow row{strategy, attacks.size(), 0, 0};
  for (const auto& a : attacks) {
    row.mean_seconds += a.seconds;
    row.max_seconds = std::max(row.max_seconds, a.seconds);
  }
  if (!attacks.empty()) row.mean_seconds /= static_cast<double>(attacks.size());
  return row;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + path.string());
  out << text;
  require(static_cast<bool>(out), ErrorCode::Io, "write failed " + path.string());
}

inline void write_timing_csv(const std::filesystem::path& path, std::span<const TimingRow> rows) {
  std::string text = "strategy,targets,mean_seconds,max_seconds\n";
  for (const auto& r : rows)
    text += std::string(to_string(r.strategy)) + "," + std::to_string(r.targets) + "," +
            fixed6(r.mean_seconds) + "," + fixed6(r.max_seconds) + "\n";
  write_text(path, text);
}

// End-to-end run: train clean, evaluate, attack, poison, retrain, evaluate,
// and write report.json, summary.csv, perturbations.json, timing.csv,
// checkpoints and the poisoned training file into cfg.out_dir.
inline PipelineResult run_pipeline(const ExperimentConfig& cfg) {
  auto ds = load_dataset(cfg.train_path, cfg.test_path, cfg.format);
  auto targets = sample_targets(ds.test, ds.train, cfg.num_targets, cfg.seed);
  auto clean = train(ds.train, cfg.model, cfg.train);
  auto clean_report = evaluate(clean, targets, cfg.rank_side_only);

  EmbeddingStore poisoned;
  TripleStore poisoned_store;
  auto res = poison_and_evaluate(ds, clean, clean_report, targets, cfg, &poisoned, &poisoned_store);

  std::filesystem::create_directories(cfg.out_dir);
  save_checkpoint(cfg.out_dir / "clean.kgeb", clean);
  save_checkpoint_sidecar(cfg.out_dir / "clean.kgeb", cfg.model, ds.train, cfg.train.seed,
                          cfg.train.to_json());
  if (!cfg.per_target_retrain) {
    save_checkpoint(cfg.out_dir / "poisoned.kgeb", poisoned);
    save_checkpoint_sidecar(cfg.out_dir / "poisoned.kgeb", cfg.model, poisoned_store,
                            cfg.train.seed, cfg.train.to_json());
    write_triples(cfg.out_dir / "poisoned_train.txt", TripleFormat::NameTSV, ds.vocab,
                  poisoned_store.triples());
  }
  write_text(cfg.out_dir / "report.json", report_json(res, cfg).dump(2) + "\n");
  write_text(cfg.out_dir / "perturbations.json",
             perturbations_json(res.attacks, cfg.strategy).dump(2) + "\n");
  write_text(cfg.out_dir / "summary.csv",
             summary_csv_header() + "\n" + summary_csv_row(res, cfg) + "\n");
  TimingRow timing = report_timing(res.attacks, cfg.strategy);
  write_timing_csv(cfg.out_dir / "timing.csv", std::span<const TimingRow>(&timing, 1));
  return res;
}

}  // namespace kgp
