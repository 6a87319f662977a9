#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "test_util.hpp"

using namespace kgp;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes a small named dataset: 40 entities on a ring with chords, 3 relations.
fs::path synthetic_dataset(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("kgp_exp_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::mt19937_64 rng(77);
  std::set<std::tuple<int, int, int>> all;
  for (int i = 0; i < 40; ++i) {
    all.insert({i, 0, (i + 1) % 40});
    all.insert({i, 1, (i + 5) % 40});
  }
  while (all.size() < 190) {
    int h = int(rng() % 40), t = int(rng() % 40);
    if (h != t) all.insert({h, 2, t});
  }
  std::vector<std::tuple<int, int, int>> v(all.begin(), all.end());
  std::shuffle(v.begin(), v.end(), rng);
  std::ofstream train(dir / "train.txt"), test(dir / "test.txt");
  for (std::size_t i = 0; i < v.size(); ++i) {
    auto [h, r, t] = v[i];
    (i < 30 ? test : train) << "e" << h << "\trel" << r << "\te" << t << "\n";
  }
  return dir;
}

ExperimentConfig small_config(const fs::path& data, const fs::path& out) {
  ExperimentConfig cfg;
  cfg.dataset_name = "synthetic";
  cfg.train_path = data / "train.txt";
  cfg.test_path = data / "test.txt";
  cfg.train.dim = 8;
  cfg.train.epochs = 30;
  cfg.train.batch_size = 32;
  cfg.num_targets = 10;
  cfg.out_dir = out;
  return cfg;
}

}  // namespace

TEST(SampleTargets, WholeSetShuffledAndSeeded) {
  auto train = support::make_store(6, 1, {{0, 0, 1}, {1, 0, 2}});
  auto test = support::make_store(6, 1, {{0, 0, 1}, {2, 0, 3}, {3, 0, 4}, {4, 0, 5}, {5, 0, 0}});
  auto all = sample_targets(test, train, 4, 9);
  ASSERT_EQ(all.size(), 4u);
  std::set<Triple> got(all.begin(), all.end());
  EXPECT_EQ(got, (std::set<Triple>{{2, 0, 3}, {3, 0, 4}, {4, 0, 5}, {5, 0, 0}}));
  EXPECT_EQ(sample_targets(test, train, 3, 9), sample_targets(test, train, 3, 9));
  for (const auto& t : sample_targets(test, train, 3, 10)) EXPECT_FALSE(train.contains(t));
  try {
    sample_targets(test, train, 5, 9);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientEligibleTargets);
  }
}

TEST(ApplyPerturbations, Contract) {
  auto store = support::make_store(4, 1, {{0, 0, 1}, {1, 0, 2}, {2, 0, 3}});
  auto same = apply_perturbations(store, {});
  EXPECT_TRUE(std::equal(same.triples().begin(), same.triples().end(), store.triples().begin(),
                         store.triples().end()));

  std::vector<Perturbation> dels{{Action::Delete, {0, 0, 1}, 0}, {Action::Delete, {2, 0, 3}, 0}};
  EXPECT_EQ(apply_perturbations(store, dels).size(), 1u);

  std::vector<Perturbation> mixed{{Action::Add, {3, 0, 0}, 0}, {Action::Delete, {1, 0, 2}, 0}};
  auto p = apply_perturbations(store, mixed);
  EXPECT_EQ(p.size(), 3u);
  EXPECT_TRUE(p.contains({3, 0, 0}));
  EXPECT_FALSE(p.contains({1, 0, 2}));

  auto conflict = [&](std::vector<Perturbation> perts) {
    try {
      apply_perturbations(store, perts);
      return false;
    } catch (const Error& e) {
      return e.code() == ErrorCode::ConflictingPerturbation;
    }
  };
  EXPECT_TRUE(conflict({{Action::Add, {3, 0, 1}, 0}, {Action::Delete, {3, 0, 1}, 0}}));
  EXPECT_TRUE(conflict({{Action::Delete, {0, 0, 1}, 0}, {Action::Delete, {0, 0, 1}, 0}}));
  EXPECT_TRUE(conflict({{Action::Add, {0, 0, 1}, 0}}));
  EXPECT_TRUE(conflict({{Action::Delete, {3, 0, 2}, 0}}));
}

TEST(Strategy, NamesRoundTrip) {
  for (const char* s : {"direct-add", "direct-delete", "indirect-add", "indirect-delete",
                        "random-da", "random-dd", "random-ia", "random-id"})
    EXPECT_EQ(to_string(parse_strategy(s)), s);
  EXPECT_THROW(parse_strategy("direct"), Error);
  EXPECT_EQ(strategy_action(Strategy::RandomIA), Action::Add);
  EXPECT_TRUE(strategy_is_indirect(Strategy::RandomID));
  EXPECT_FALSE(strategy_is_indirect(Strategy::DirectAdd));
}

TEST(Config, ParsesSectionsAndComments) {
  auto path = fs::temp_directory_path() / "kgp_cfg_test.conf";
  std::ofstream(path) << "# header\n[train]\nepochs = 5   ; inline\nlr=0.5\n\n[attack]\n"
                         "strategy = random-dd\n";
  auto entries = read_config_file(path);
  ASSERT_EQ(entries.size(), 3u);
  EXPECT_EQ(entries[0], (std::pair<std::string, std::string>{"epochs", "5"}));
  EXPECT_EQ(entries[2].second, "random-dd");
  EXPECT_EQ(config_to_args(entries),
            (std::vector<std::string>{"--epochs", "5", "--lr", "0.5", "--strategy", "random-dd"}));

  std::ofstream(path) << "epochs = 5\n[x]\nepochs = 6\n";
  EXPECT_THROW(read_config_file(path), Error);
  std::ofstream(path) << "epochs 5\n";
  EXPECT_THROW(read_config_file(path), Error);
}

TEST(Pipeline, DeterministicReportsAndCheckpoints) {
  auto data = synthetic_dataset("det");
  auto out_a = data / "a", out_b = data / "b";
  for (auto strategy : {Strategy::DirectDelete, Strategy::IndirectAdd}) {
    auto cfg = small_config(data, out_a);
    cfg.strategy = strategy;
    cfg.budget = 2;
    auto ra = run_pipeline(cfg);
    cfg.out_dir = out_b;
    run_pipeline(cfg);
    for (const char* f : {"report.json", "perturbations.json", "summary.csv", "clean.kgeb",
                          "poisoned.kgeb", "clean.kgeb.json", "poisoned_train.txt"})
      EXPECT_EQ(slurp(out_a / f), slurp(out_b / f)) << f;
    EXPECT_LE(ra.applied_perturbations, cfg.num_targets * cfg.budget);
    auto report = Json::parse(slurp(out_a / "report.json"));
    EXPECT_EQ(report["metadata"]["retraining"], "once-per-strategy");
    EXPECT_EQ(report["clean"]["ranks"].size(), cfg.num_targets);
  }
}

TEST(Pipeline, PoisonedStoreRoundTripsThroughTsv) {
  auto data = synthetic_dataset("roundtrip");
  auto cfg = small_config(data, data / "out");
  cfg.strategy = Strategy::DirectAdd;
  cfg.budget = 3;
  auto ds = load_dataset(cfg.train_path, cfg.test_path, cfg.format);
  auto targets = sample_targets(ds.test, ds.train, cfg.num_targets, cfg.seed);
  auto clean = train(ds.train, cfg.model, cfg.train);
  EmbeddingStore poisoned;
  TripleStore poisoned_store;
  auto res = poison_and_evaluate(ds, clean, evaluate(clean, targets), targets, cfg, &poisoned,
                                 &poisoned_store);
  EXPECT_EQ(poisoned_store.size(), ds.train.size() + res.applied_perturbations);
  write_triples(data / "poisoned.txt", TripleFormat::NameTSV, ds.vocab, poisoned_store.triples());
  auto back = load_triples(data / "poisoned.txt", TripleFormat::NameTSV, ds.vocab);
  EXPECT_EQ(dataset_hash(back.store), dataset_hash(poisoned_store));
  write_triples(data / "poisoned2id.txt", TripleFormat::IdTSV, ds.vocab, poisoned_store.triples());
  auto back_ids = load_triples(data / "poisoned2id.txt", TripleFormat::IdTSV, ds.vocab);
  EXPECT_EQ(dataset_hash(back_ids.store), dataset_hash(poisoned_store));
}

TEST(Pipeline, AbortedTargetsAreFlagged) {
  // an isolated head has no delete candidates
  auto train = support::make_store(4, 1, {{0, 0, 1}, {1, 0, 2}});
  auto emb = init_embeddings(ModelKind::TransE, 4, 1, 4, 1);
  ExperimentConfig cfg;
  cfg.strategy = Strategy::DirectDelete;
  auto a = attack_target(train, emb, {3, 0, 0}, cfg);
  EXPECT_EQ(a.status, "NoCandidates");
  EXPECT_TRUE(a.perturbations.empty());
  cfg.strategy = Strategy::IndirectDelete;
  EXPECT_EQ(attack_target(train, emb, {3, 0, 0}, cfg).status, "NoPaths");
}

TEST(Pipeline, PerTargetRetrainMode) {
  auto data = synthetic_dataset("pertarget");
  auto cfg = small_config(data, data / "out");
  cfg.num_targets = 3;
  cfg.per_target_retrain = true;
  auto res = run_pipeline(cfg);
  EXPECT_EQ(res.poisoned.per_target.size(), 3u);
  auto report = Json::parse(slurp(cfg.out_dir / "report.json"));
  EXPECT_EQ(report["metadata"]["retraining"], "per-target");
}

TEST(Timing, GrowsWithCandidateSample) {
  std::mt19937_64 rng(5);
  TripleStore store(3000, 10);
  while (store.size() < 9000) {
    Triple t{EntityId(rng() % 3000), RelationId(rng() % 10), EntityId(rng() % 3000)};
    if (t.head != t.tail) store.insert(t);
  }
  auto emb = init_embeddings(ModelKind::TransE, 3000, 10, 50, 2);
  std::vector<Triple> targets;
  for (EntityId h = 0; targets.size() < 20; ++h)
    if (!store.contains({h, 0, h + 1})) targets.push_back({h, 0, h + 1});
  ExperimentConfig cfg;
  cfg.strategy = Strategy::DirectAdd;
  auto time_with = [&](std::size_t sample) {
    cfg.add_candidate_sample = sample;
    auto attacks = attack_targets(store, emb, targets, cfg);
    return report_timing(attacks, cfg.strategy).mean_seconds;
  };
  double small = time_with(1000), large = time_with(10000);
  std::cout << "direct-add s/target: sample 1k " << small << ", 10k " << large << "\n";
  EXPECT_GT(large, small);
}

#ifdef KGP_CLI_PATH
TEST(Cli, SubcommandsEndToEnd) {
  auto data = synthetic_dataset("cli");
  const std::string cli = KGP_CLI_PATH;
  auto run = [&](const std::string& args) {
    return std::system((cli + " " + args + " > " + (data / "log.txt").string() + " 2>&1").c_str());
  };
  auto out = data / "out";
  std::ofstream(data / "run.conf") << "[train]\ndim = 8\nepochs = 500\nbatch-size = 32\n"
                                      "[attack]\ntargets = 5\n";
  const std::string common = "--dataset " + data.string() + " --config " +
                             (data / "run.conf").string() + " --epochs 10 --out " + out.string();
  ASSERT_EQ(run("train " + common), 0) << slurp(data / "log.txt");
  ASSERT_TRUE(fs::exists(out / "clean.kgeb"));
  auto sidecar = Json::parse(slurp(out / "clean.kgeb.json"));
  EXPECT_EQ(sidecar["train_config"]["epochs"], 10);  // flag beats the config file
  EXPECT_EQ(sidecar["train_config"]["dim"], 8);

  const std::string ck = " --checkpoint " + (out / "clean.kgeb").string();
  ASSERT_EQ(run("eval " + common + ck), 0) << slurp(data / "log.txt");
  EXPECT_NE(slurp(data / "log.txt").find("MRR"), std::string::npos);
  ASSERT_EQ(run("attack " + common + ck + " --strategy direct-add --budget 2"), 0);
  auto perts = Json::parse(slurp(out / "perturbations.json"));
  EXPECT_EQ(perts.size(), 5u);
  ASSERT_EQ(run("poison " + common + " --perturbations " + (out / "perturbations.json").string()),
            0);
  auto poisoned = load_triples(out / "train.txt", TripleFormat::NameTSV);
  EXPECT_GT(poisoned.store.size(), 0u);

  ASSERT_EQ(run("pipeline " + common + " --strategy random-dd"), 0) << slurp(data / "log.txt");
  for (const char* f : {"report.json", "summary.csv", "perturbations.json", "timing.csv",
                        "poisoned.kgeb"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  ASSERT_EQ(run("sweep " + common + " --budgets 1,2"), 0) << slurp(data / "log.txt");
  auto csv = slurp(out / "summary.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);

  EXPECT_NE(run("train --model nope " + common), 0);
  EXPECT_NE(run("bogus"), 0);
}
#endif
