// Command-line front end: toy-data generation, training, evaluation and the
// numeric audit suites. Exit codes: 0 ok, 1 usage/config, 2 data error,
// 3 audit failure, 4 divergence.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "ssrec/audit.hpp"
#include "ssrec/checkpoint.hpp"
#include "ssrec/common.hpp"
#include "ssrec/config.hpp"
#include "ssrec/data.hpp"
#include "ssrec/evaluator.hpp"
#include "ssrec/kernels.hpp"
#include "ssrec/model.hpp"
#include "ssrec/threading.hpp"
#include "ssrec/trainer.hpp"

namespace fs = std::filesystem;
using namespace ssrec;

namespace {

struct ToyArgs {
  std::string out;
  uint64_t seed = 0;
  bool seed_set = false;
  int users = 100, items = 100, seq_len = 100;
  int64_t t_max = 10000;
};

int cmd_gen_toy(const ToyArgs& a) {
  if (!a.seed_set) throw UsageError("gen-toy requires an explicit --seed");
  data::ToyConfig cfg;
  cfg.n_users = a.users;
  cfg.n_items = a.items;
  cfg.seq_len = a.seq_len;
  cfg.t_max = a.t_max;
  cfg.seed = a.seed;
  const auto toy = data::generate_toy_dataset(cfg);
  data::write_interactions(a.out, toy.records);
  std::printf("wrote %zu interactions for %d users to %s\n", toy.records.size(), cfg.n_users,
              a.out.c_str());
  return 0;
}

struct TrainArgs {
  std::string config_path;
  std::vector<std::string> sets;
  // shorthand overrides, applied after --set
  std::vector<std::pair<std::string, std::string>> shorthands;
};

config::RunConfig resolve_config(const TrainArgs& a) {
  config::RunConfig cfg;
  config::KeyValues kv;
  if (!a.config_path.empty()) kv = config::parse_config_file(a.config_path);
  config::apply(cfg, kv);
  config::apply(cfg, config::env_overrides());
  config::KeyValues flag_kv;
  for (const auto& s : a.sets) {
    const size_t eq = s.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
    flag_kv[s.substr(0, eq)] = s.substr(eq + 1);
  }
  for (const auto& [k, v] : a.shorthands) flag_kv[k] = v;
  config::apply(cfg, flag_kv);
  return cfg;
}

int cmd_train(const TrainArgs& args) {
  config::RunConfig cfg = resolve_config(args);
  if (cfg.data_path.empty()) throw UsageError("train requires data.path (--data or config)");
  kernels::set_isa(cfg.simd.c_str());

  fs::create_directories(cfg.out_dir);

  const auto parsed = data::parse_interactions(cfg.data_path, config::parse_options(cfg));
  if (parsed.records.empty()) throw DataError("no interactions parsed from " + cfg.data_path);
  parsed.items.write(cfg.out_dir + "/item_map.tsv");
  parsed.users.write(cfg.out_dir + "/user_map.tsv");

  const auto seqs = data::build_user_sequences(parsed.records);
  const auto corpus = data::split_corpus(seqs);

  double scale = 0.0;
  if (cfg.norm_scale == "auto") {
    scale = data::median_nonzero_interval(corpus.train);
  } else {
    scale = std::stod(cfg.norm_scale);
    if (!(scale > 0.0)) throw ConfigError("norm.scale must be positive");
  }

  model::ModelConfig mc = config::model_config(cfg, parsed.n_items());
  mc.interval_scale = scale;
  model::ModelState m = model::init_model(mc, cfg.seed);

  {
    std::ofstream rc(cfg.out_dir + "/resolved.config");
    rc << config::serialize(cfg);
    rc << "# derived\n# n_items = " << parsed.n_items() << "\n# interval_scale = " << scale
       << "\n";
  }

  const train::TrainConfig tc = config::train_config(cfg);
  std::printf("training: %d users, %d items, %zu eval users, scale %.3f\n", parsed.n_users(),
              parsed.n_items(), corpus.eval_users.size(), scale);

  train::TrainResult result;
  try {
    result = train::train(m, corpus, tc, [&](const train::EpochStats& st) {
      std::printf("epoch %3d  loss %.4f  valid HR@%d %.4f NDCG %.4f MRR %.4f\n", st.epoch,
                  st.train_loss, tc.eval_k, st.hr, st.ndcg, st.mrr);
      std::fflush(stdout);
      return true;
    });
  } catch (const DivergenceError& e) {
    std::ofstream diag(cfg.out_dir + "/divergence.txt");
    diag << e.what() << "\nepoch=" << e.epoch << "\nbatch=" << e.batch << "\nloss=" << e.loss
         << "\n";
    throw;
  }

  train::write_history(cfg.out_dir + "/history.tsv", result.history);
  train::save_checkpoint(m, cfg.out_dir + "/best.ckpt");

  eval::EvalOptions eopt;
  eopt.k = cfg.eval_k;
  eopt.filter_history = cfg.filter_history;
  eopt.split = eval::Split::Test;
  eopt.threads = tc.threads > 0 ? tc.threads : default_threads();
  const auto metrics = eval::evaluate(m, corpus, eopt);

  const std::string report = eval::format_report(metrics);
  std::ofstream(cfg.out_dir + "/test_metrics.txt") << report;
  std::printf("best epoch %d (valid NDCG@%d %.4f)\ntest split:\n%s%s\n", result.best_epoch,
              tc.eval_k, result.best_ndcg, report.c_str(),
              eval::machine_line(metrics, "test").c_str());
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::string data_path;
  std::string delim = "\t";
  std::string columns = "user,item,time";
  std::string header = "auto";
  std::string split = "test";
  std::string by_length;
  std::string out_path;
  int k = 10;
  bool filter_history = false;
  int threads = 0;
  std::string simd = "auto";
};

int cmd_eval(const EvalArgs& a) {
  kernels::set_isa(a.simd.c_str());
  model::ModelState m = train::load_checkpoint(a.checkpoint);

  config::RunConfig dc;
  dc.data_delim = a.delim;
  dc.data_columns = a.columns;
  dc.data_header = a.header;
  const auto parsed = data::parse_interactions(a.data_path, config::parse_options(dc));
  if (parsed.n_items() != m.cfg.n_items)
    throw DataError("vocabulary mismatch: checkpoint has " + std::to_string(m.cfg.n_items) +
                    " items, dataset has " + std::to_string(parsed.n_items()));

  const auto corpus = data::split_corpus(data::build_user_sequences(parsed.records));

  eval::EvalOptions opt;
  opt.k = a.k;
  opt.filter_history = a.filter_history;
  opt.split = a.split == "valid" ? eval::Split::Valid : eval::Split::Test;
  opt.threads = a.threads > 0 ? a.threads : default_threads();

  std::ostringstream os;
  if (a.by_length.empty()) {
    const auto metrics = eval::evaluate(m, corpus, opt);
    os << eval::format_report(metrics) << eval::machine_line(metrics, a.split) << "\n";
  } else {
    std::vector<int> edges;
    std::istringstream in(a.by_length);
    std::string tok;
    while (std::getline(in, tok, ',')) edges.push_back(std::stoi(tok));
    const auto buckets = eval::evaluate_by_length(m, corpus, edges, opt);
    for (const auto& [label, metrics] : buckets) {
      os << "bucket " << label << "\n"
         << eval::format_report(metrics) << eval::machine_line(metrics, a.split + label)
         << "\n";
    }
  }
  std::fputs(os.str().c_str(), stdout);
  if (!a.out_path.empty()) std::ofstream(a.out_path) << os.str();
  return 0;
}

struct AuditArgs {
  std::string suite = "all";
  uint64_t seed = 20240901;
  bool inject_fault = false;
  std::string simd = "auto";
};

int cmd_audit(const AuditArgs& a) {
  kernels::set_isa(a.simd.c_str());
  std::vector<std::string> names;
  if (a.suite == "all")
    names = audit::suite_names();
  else
    names.push_back(a.suite);

  const auto results = audit::run_suites(names, a.seed, a.inject_fault ? 1 : 0);
  bool all_pass = true;
  for (const auto& r : results) {
    std::printf("[%s] %-5s %s (%.2fs)\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                r.detail.c_str(), r.seconds);
    all_pass = all_pass && r.pass;
  }
  if (!all_pass) throw AuditError("numeric audit failed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"continuous-time state-space sequential recommender"};
  app.require_subcommand(1);

  ToyArgs toy;
  auto* gen = app.add_subcommand("gen-toy", "generate the synthetic time-determined dataset");
  gen->add_option("--out", toy.out, "output interaction file")->required();
  gen->add_option("--seed", toy.seed, "generator seed (required)")
      ->each([&toy](const std::string&) { toy.seed_set = true; });
  gen->add_option("--users", toy.users, "number of users");
  gen->add_option("--items", toy.items, "number of items");
  gen->add_option("--seq-len", toy.seq_len, "interactions per user");
  gen->add_option("--t-max", toy.t_max, "timestamp upper bound (exclusive)");

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "train a model and evaluate the test split");
  tr->add_option("--config", ta.config_path, "key=value config file");
  tr->add_option("--set", ta.sets, "override any config key (key=value, repeatable)");
  auto shorthand = [&ta, tr](const char* flag, const char* key, const char* help) {
    tr->add_option(flag)->description(help)->each([&ta, key](const std::string& v) {
      ta.shorthands.emplace_back(key, v);
    });
  };
  shorthand("--data", "data.path", "interaction file");
  shorthand("--out", "out.dir", "run directory");
  shorthand("--seed", "train.seed", "training seed");
  shorthand("--ablation", "model.ablation", "full|ignore_time|s5_only|s6_only");
  shorthand("--drop-prob", "train.drop_prob", "partial-observation drop probability");
  shorthand("--blocks", "model.blocks", "stacked block count");
  shorthand("--epochs", "train.max_epochs", "epoch cap");
  shorthand("--lr", "train.lr", "learning rate");
  shorthand("--batch-size", "train.batch_size", "sequences per batch");
  shorthand("--max-len", "model.max_len", "sequence length cap");
  shorthand("--embed-dim", "model.embed_dim", "embedding width");
  shorthand("--state-dim", "model.state_dim", "state dimension");
  shorthand("--threads", "train.threads", "worker threads (0 = hardware)");
  shorthand("--k", "eval.k", "metric cutoff");
  shorthand("--simd", "simd", "scalar|avx2|auto");

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  ev->add_option("--checkpoint", ea.checkpoint, "model checkpoint")->required();
  ev->add_option("--data", ea.data_path, "interaction file")->required();
  ev->add_option("--delim", ea.delim, "column delimiter");
  ev->add_option("--columns", ea.columns, "column order (user,item,time,skip)");
  ev->add_option("--header", ea.header, "auto|yes|no");
  ev->add_option("--split", ea.split, "valid|test");
  ev->add_option("--k", ea.k, "metric cutoff");
  ev->add_option("--by-length", ea.by_length, "bucket upper edges, e.g. 200,400,600,800");
  ev->add_flag("--filter-history", ea.filter_history, "exclude seen items from candidates");
  ev->add_option("--out", ea.out_path, "write the report here as well");
  ev->add_option("--threads", ea.threads, "worker threads");
  ev->add_option("--simd", ea.simd, "scalar|avx2|auto");

  AuditArgs aa;
  auto* au = app.add_subcommand("audit", "run the numeric verification suites");
  au->add_option("--suite", aa.suite, "all|scan|zoh|cross|grad|simd");
  au->add_option("--seed", aa.seed, "suite seed");
  au->add_flag("--inject-fault", aa.inject_fault,
               "perturb one computed value to demonstrate sensitivity");
  au->add_option("--simd", aa.simd, "scalar|avx2|auto");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_gen_toy(toy);
    if (tr->parsed()) return cmd_train(ta);
    if (ev->parsed()) return cmd_eval(ea);
    if (au->parsed()) return cmd_audit(aa);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "divergence: %s\n", e.what());
    return 4;
  } catch (const AuditError& e) {
    std::fprintf(stderr, "audit: %s\n", e.what());
    return 3;
  } catch (const CheckpointError& e) {
    std::fprintf(stderr, "checkpoint error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
