// Command-line front end: train / attack / poison / eval / pipeline / sweep.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "kgpoison/kgpoison.hpp"

namespace fs = std::filesystem;
using namespace kgp;

namespace {

struct CliOptions {
  ExperimentConfig cfg;
  std::string config_file;
  std::string dataset;
  std::string train_path;
  std::string test_path;
  std::string format = "auto";
  std::string model = "transe";
  std::string strategy = "direct-delete";
  std::string side = "head";
  std::string rank_sides = "both";
  std::string checkpoint;
  std::string perturbations;
  std::string budgets = "1,2,4,6";
  std::string out = "out";
};

void add_options(CLI::App* app, CliOptions& o) {
  auto& c = o.cfg;
  app->add_option("--config", o.config_file, "key = value config file; flags override it");
  app->add_option("--dataset", o.dataset, "directory with train.txt/test.txt or train2id.txt/test2id.txt");
  app->add_option("--train", o.train_path, "training triples (overrides --dataset)");
  app->add_option("--test", o.test_path, "held-out triples (overrides --dataset)");
  app->add_option("--format", o.format, "auto, name-tsv or id-tsv");
  app->add_option("--model", o.model, "transe, transr or rescal");
  app->add_option("--strategy", o.strategy,
                  "direct-add, direct-delete, indirect-add, indirect-delete, random-da, random-dd, "
                  "random-ia, random-id");
  app->add_option("--budget", c.budget, "perturbations per target (M)");
  app->add_option("--k-hops", c.k_hops, "path length K for indirect attacks");
  app->add_option("--paths", c.paths, "paths kept per target (P)");
  app->add_option("--eps-h", c.step_eps_h, "perturbation step size");
  app->add_option("--lambda1", c.lambda1, "delete trade-off");
  app->add_option("--lambda2", c.lambda2, "add trade-off");
  app->add_option("--lambda", c.lambda, "path penalty weight");
  app->add_option("--sample", c.add_candidate_sample, "add candidates sampled per entity (0 = all)");
  app->add_option("--side", o.side, "attacked entity: head or tail");
  app->add_option("--both-orientations", c.both_orientations, "delete/add candidates on both sides");
  app->add_option("--promote", c.promote, "raise instead of degrade plausibility");
  app->add_option("--rank-sides", o.rank_sides, "both, head or tail");
  app->add_option("--targets", c.num_targets, "number of targeted test facts");
  app->add_option("--seed", c.seed, "seed for target sampling and attacks");
  app->add_option("--threads", c.train.threads, "training workers");
  app->add_option("--dim", c.train.dim, "embedding dimension");
  app->add_option("--epochs", c.train.epochs, "training epochs");
  app->add_option("--batch-size", c.train.batch_size, "mini-batch size");
  app->add_option("--lr", c.train.learning_rate, "SGD learning rate");
  app->add_option("--margin", c.train.margin, "margin of the ranking loss");
  app->add_option("--negatives", c.train.negatives_per_positive, "negatives per positive");
  app->add_option("--train-seed", c.train.seed, "training seed");
  app->add_option("--normalize", c.train.normalize_entities, "clamp entity norms to 1");
  app->add_option("--log-progress", c.train.log_progress, "print epoch, mean_loss to stderr");
  app->add_option("--per-target-retrain", c.per_target_retrain, "retrain once per target");
  app->add_option("--checkpoint", o.checkpoint, "trained checkpoint (.kgeb)");
  app->add_option("--perturbations", o.perturbations, "perturbations.json to apply");
  app->add_option("--budgets", o.budgets, "comma-separated budgets for sweep");
  app->add_option("--out", o.out, "output directory");
}

Side parse_side(const std::string& s) {
  if (s == "head") return Side::Head;
  if (s == "tail") return Side::Tail;
  throw Error(ErrorCode::InvalidConfig, "side must be head or tail");
}

// Fills the dataset paths and enums from the string options.
void finalize(CliOptions& o) {
  auto& c = o.cfg;
  c.model = parse_model_kind(o.model);
  c.strategy = parse_strategy(o.strategy);
  c.target_side = parse_side(o.side);
  if (o.rank_sides == "both") c.rank_side_only.reset();
  else c.rank_side_only = parse_side(o.rank_sides);
  c.out_dir = o.out;

  TripleFormat fmt = TripleFormat::NameTSV;
  bool fmt_known = o.format != "auto";
  if (o.format == "id-tsv") fmt = TripleFormat::IdTSV;
  else if (fmt_known && o.format != "name-tsv")
    throw Error(ErrorCode::InvalidConfig, "format must be auto, name-tsv or id-tsv");
  if (!o.dataset.empty()) {
    fs::path dir = o.dataset;
    c.dataset_name = dir.filename().string();
    if (c.dataset_name.empty()) c.dataset_name = dir.parent_path().filename().string();
    bool ids = fmt_known ? fmt == TripleFormat::IdTSV
                         : !fs::exists(dir / "train.txt") && fs::exists(dir / "train2id.txt");
    fmt = ids ? TripleFormat::IdTSV : TripleFormat::NameTSV;
    c.train_path = dir / (ids ? "train2id.txt" : "train.txt");
    c.test_path = dir / (ids ? "test2id.txt" : "test.txt");
  }
  if (!o.train_path.empty()) c.train_path = o.train_path;
  if (!o.test_path.empty()) c.test_path = o.test_path;
  c.format = fmt;
  require(!c.train_path.empty(), ErrorCode::InvalidConfig, "--dataset or --train is required");
}

std::vector<std::size_t> parse_budgets(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoul(item));
  require(!out.empty(), ErrorCode::InvalidConfig, "empty --budgets");
  return out;
}

int cmd_train(CliOptions& o) {
  auto ds = load_dataset(o.cfg.train_path, {}, o.cfg.format);
  auto emb = train(ds.train, o.cfg.model, o.cfg.train);
  fs::create_directories(o.cfg.out_dir);
  auto path = o.checkpoint.empty() ? o.cfg.out_dir / "clean.kgeb" : fs::path(o.checkpoint);
  save_checkpoint(path, emb);
  save_checkpoint_sidecar(path, o.cfg.model, ds.train, o.cfg.train.seed, o.cfg.train.to_json());
  std::cout << "wrote " << path.string() << " (" << ds.vocab.num_entities() << " entities, "
            << ds.vocab.num_relations() << " relations, " << ds.train.size() << " triples)\n";
  return 0;
}

EmbeddingStore load_checked(const CliOptions& o, const Dataset& ds) {
  require(!o.checkpoint.empty(), ErrorCode::InvalidConfig, "--checkpoint is required");
  auto emb = load_checkpoint(o.checkpoint);
  require(emb.num_entities() == ds.vocab.num_entities() &&
              emb.num_relations() == ds.vocab.num_relations(),
          ErrorCode::DimensionMismatch, "checkpoint does not match the dataset vocabulary");
  return emb;
}

int cmd_attack(CliOptions& o) {
  auto ds = load_dataset(o.cfg.train_path, o.cfg.test_path, o.cfg.format);
  auto emb = load_checked(o, ds);
  auto targets = sample_targets(ds.test, ds.train, o.cfg.num_targets, o.cfg.seed);
  auto attacks = attack_targets(ds.train, emb, targets, o.cfg);
  fs::create_directories(o.cfg.out_dir);
  write_text(o.cfg.out_dir / "perturbations.json",
             perturbations_json(attacks, o.cfg.strategy).dump(2) + "\n");
  TimingRow t = report_timing(attacks, o.cfg.strategy);
  write_timing_csv(o.cfg.out_dir / "timing.csv", std::span<const TimingRow>(&t, 1));
  std::cout << "wrote " << (o.cfg.out_dir / "perturbations.json").string() << " ("
            << merge_perturbations(attacks).size() << " distinct perturbations, "
            << fixed6(t.mean_seconds) << " s/target)\n";
  return 0;
}

int cmd_poison(CliOptions& o) {
  require(!o.perturbations.empty(), ErrorCode::InvalidConfig, "--perturbations is required");
  auto ds = load_dataset(o.cfg.train_path, {}, o.cfg.format);
  std::ifstream in(o.perturbations);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + o.perturbations);
  auto perts = perturbations_from_json(Json::parse(in));
  std::vector<Perturbation> unique;
  std::set<Triple> seen;
  for (const auto& p : perts)
    if (seen.insert(p.triple).second) unique.push_back(p);
  auto poisoned = apply_perturbations(ds.train, unique);
  fs::create_directories(o.cfg.out_dir);
  bool ids = o.cfg.format == TripleFormat::IdTSV;
  auto path = o.cfg.out_dir / (ids ? "train2id.txt" : "train.txt");
  write_triples(path, o.cfg.format, ds.vocab, poisoned.triples());
  if (ids) write_id_tables(o.cfg.out_dir, ds.vocab);
  std::cout << "wrote " << path.string() << " (" << ds.train.size() << " -> " << poisoned.size()
            << " triples)\n";
  return 0;
}

int cmd_eval(CliOptions& o) {
  auto ds = load_dataset(o.cfg.train_path, o.cfg.test_path, o.cfg.format);
  auto emb = load_checked(o, ds);
  auto targets = sample_targets(ds.test, ds.train, o.cfg.num_targets, o.cfg.seed);
  auto rep = evaluate(emb, targets, o.cfg.rank_side_only);
  fs::create_directories(o.cfg.out_dir);
  write_text(o.cfg.out_dir / "eval.json", eval_json(rep).dump(2) + "\n");
  std::cout << "MRR " << fixed6(rep.mrr) << "  H@10 " << fixed6(rep.hits_at_10) << "\n";
  return 0;
}

int cmd_pipeline(CliOptions& o) {
  auto res = run_pipeline(o.cfg);
  std::cout << summary_csv_header() << "\n" << summary_csv_row(res, o.cfg) << "\n";
  return 0;
}

int cmd_sweep(CliOptions& o) {
  auto& cfg = o.cfg;
  auto ds = load_dataset(cfg.train_path, cfg.test_path, cfg.format);
  auto targets = sample_targets(ds.test, ds.train, cfg.num_targets, cfg.seed);
  auto clean = train(ds.train, cfg.model, cfg.train);
  auto clean_report = evaluate(clean, targets, cfg.rank_side_only);
  fs::create_directories(cfg.out_dir);
  save_checkpoint(cfg.out_dir / "clean.kgeb", clean);
  save_checkpoint_sidecar(cfg.out_dir / "clean.kgeb", cfg.model, ds.train, cfg.train.seed,
                          cfg.train.to_json());
  std::string csv = summary_csv_header() + "\n";
  std::vector<TimingRow> timing;
  for (auto m : parse_budgets(o.budgets)) {
    cfg.budget = m;
    auto res = poison_and_evaluate(ds, clean, clean_report, targets, cfg);
    csv += summary_csv_row(res, cfg) + "\n";
    timing.push_back(report_timing(res.attacks, cfg.strategy));
    write_text(cfg.out_dir / ("report_M" + std::to_string(m) + ".json"),
               report_json(res, cfg).dump(2) + "\n");
    std::cout << summary_csv_row(res, cfg) << std::endl;
  }
  write_text(cfg.out_dir / "summary.csv", csv);
  write_timing_csv(cfg.out_dir / "timing.csv", timing);
  return 0;
}

// Splices "--key value" pairs from --config (if any) right after the
// subcommand name so that later explicit flags win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  for (std::size_t i = 1; i + 1 < args.size(); ++i) {
    if (args[i] == "--config") {
      auto extra = config_to_args(read_config_file(args[i + 1]));
      std::size_t at = args.size() > 1 ? 2 : 1;
      args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), extra.begin(), extra.end());
      break;
    }
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-graph embedding training and data-poisoning attacks"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  CliOptions opts;
  struct Cmd {
    const char* name;
    const char* help;
    int (*run)(CliOptions&);
  };
  const Cmd cmds[] = {
      {"train", "train an embedding model", cmd_train},
      {"attack", "generate perturbations for sampled targets", cmd_attack},
      {"poison", "apply perturbations.json to the training set", cmd_poison},
      {"eval", "rank sampled targets under a checkpoint", cmd_eval},
      {"pipeline", "train, attack, poison, retrain and evaluate", cmd_pipeline},
      {"sweep", "pipeline over several budgets with one clean model", cmd_sweep},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : cmds) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_options(sub, opts);
    subs.push_back(sub);
  }

  try {
    auto args = expand_config(argc, argv);
    std::vector<char*> cargs;
    for (auto& a : args) cargs.push_back(a.data());
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    finalize(opts);
    for (std::size_t i = 0; i < subs.size(); ++i)
      if (subs[i]->parsed()) return cmds[i].run(opts);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
