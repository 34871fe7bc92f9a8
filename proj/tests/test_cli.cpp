// Drives the installed binary end to end. The harness exports SSREC_BIN.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

std::string bin() {
  const char* b = std::getenv("SSREC_BIN");
  REQUIRE(b != nullptr);
  return b;
}

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run(const std::string& args) {
  const std::string cmd = bin() + " " + args + " 2>&1";
  std::array<char, 4096> buf{};
  RunResult res;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) res.out.append(buf.data(), n);
  const int status = pclose(pipe);
  res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("gen-toy") {
  SUBCASE("default invocation writes 10000 lines") {
    const auto r = run("gen-toy --out /tmp/ssrec_cli_toy.tsv --seed 5");
    CHECK(r.code == 0);
    std::ifstream in("/tmp/ssrec_cli_toy.tsv");
    size_t lines = 0;
    std::string line;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 10000);
  }
  SUBCASE("same seed twice gives identical files") {
    run("gen-toy --out /tmp/ssrec_cli_toy_a.tsv --seed 9");
    run("gen-toy --out /tmp/ssrec_cli_toy_b.tsv --seed 9");
    CHECK(slurp("/tmp/ssrec_cli_toy_a.tsv") == slurp("/tmp/ssrec_cli_toy_b.tsv"));
    run("gen-toy --out /tmp/ssrec_cli_toy_c.tsv --seed 10");
    CHECK(slurp("/tmp/ssrec_cli_toy_a.tsv") != slurp("/tmp/ssrec_cli_toy_c.tsv"));
  }
  SUBCASE("seed is mandatory") {
    const auto r = run("gen-toy --out /tmp/ssrec_cli_toy_d.tsv");
    CHECK(r.code == 1);
  }
}

TEST_CASE("train, eval and error paths") {
  run("gen-toy --out /tmp/ssrec_cli_data.tsv --seed 21 --users 30 --seq-len 10");

  const std::string train_args =
      "train --data /tmp/ssrec_cli_data.tsv --out /tmp/ssrec_cli_run --seed 4 --epochs 2 "
      "--blocks 1 --embed-dim 8 --state-dim 4 --max-len 10 --batch-size 16 --lr 0.003 "
      "--threads 2 --set model.dropout=0.1";
  const auto tr = run(train_args);
  CHECK(tr.code == 0);
  CHECK(tr.out.find("epoch   1") != std::string::npos);

  SUBCASE("run directory is self-describing") {
    const auto cfg = slurp("/tmp/ssrec_cli_run/resolved.config");
    CHECK(cfg.find("train.seed = 4") != std::string::npos);
    CHECK(cfg.find("model.embed_dim = 8") != std::string::npos);
    CHECK(!slurp("/tmp/ssrec_cli_run/history.tsv").empty());
    CHECK(!slurp("/tmp/ssrec_cli_run/item_map.tsv").empty());
    CHECK(!slurp("/tmp/ssrec_cli_run/test_metrics.txt").empty());
  }

  SUBCASE("same seed reproduces history and metrics bitwise") {
    const auto again = run(
        "train --data /tmp/ssrec_cli_data.tsv --out /tmp/ssrec_cli_run_b --seed 4 --epochs 2 "
        "--blocks 1 --embed-dim 8 --state-dim 4 --max-len 10 --batch-size 16 --lr 0.003 "
        "--threads 2 --set model.dropout=0.1");
    CHECK(again.code == 0);
    CHECK(slurp("/tmp/ssrec_cli_run_b/history.tsv") == slurp("/tmp/ssrec_cli_run/history.tsv"));
    CHECK(slurp("/tmp/ssrec_cli_run_b/test_metrics.txt") ==
          slurp("/tmp/ssrec_cli_run/test_metrics.txt"));
  }

  SUBCASE("replaying the resolved config reproduces the run") {
    const auto replay = run("train --config /tmp/ssrec_cli_run/resolved.config --out /tmp/ssrec_cli_replay");
    CHECK(replay.code == 0);
    CHECK(slurp("/tmp/ssrec_cli_replay/history.tsv") == slurp("/tmp/ssrec_cli_run/history.tsv"));
    CHECK(slurp("/tmp/ssrec_cli_replay/test_metrics.txt") ==
          slurp("/tmp/ssrec_cli_run/test_metrics.txt"));
  }

  SUBCASE("eval --split valid matches the recorded best validation metric") {
    // the trainer restores the best-NDCG parameters, so a standalone valid
    // eval of the checkpoint equals the history's best line
    double best = -1.0;
    std::istringstream hist(slurp("/tmp/ssrec_cli_run/history.tsv"));
    std::string line;
    std::getline(hist, line);  // header
    while (std::getline(hist, line)) {
      std::istringstream ls(line);
      std::string epoch, loss, hr, ndcg;
      std::getline(ls, epoch, '\t');
      std::getline(ls, loss, '\t');
      std::getline(ls, hr, '\t');
      std::getline(ls, ndcg, '\t');
      best = std::max(best, std::stod(ndcg));
    }
    const auto ev = run(
        "eval --checkpoint /tmp/ssrec_cli_run/best.ckpt --data /tmp/ssrec_cli_data.tsv "
        "--split valid --threads 2");
    CHECK(ev.code == 0);
    const auto pos = ev.out.find("NDCG@10=");
    REQUIRE(pos != std::string::npos);
    const double got = std::stod(ev.out.substr(pos + 8));
    CHECK(std::fabs(got - best) < 1e-6 + 1e-12);
  }

  SUBCASE("eval of the saved checkpoint matches the training report") {
    const auto ev = run(
        "eval --checkpoint /tmp/ssrec_cli_run/best.ckpt --data /tmp/ssrec_cli_data.tsv "
        "--threads 2");
    CHECK(ev.code == 0);
    const auto recorded = slurp("/tmp/ssrec_cli_run/test_metrics.txt");
    // both reports carry the identical metric lines
    std::istringstream in(recorded);
    std::string line;
    while (std::getline(in, line))
      if (line.rfind("HR@", 0) == 0 || line.rfind("NDCG@", 0) == 0 ||
          line.rfind("MRR@", 0) == 0)
        CHECK(ev.out.find(line) != std::string::npos);
  }

  SUBCASE("by-length bucketing emits the requested buckets") {
    const auto ev = run(
        "eval --checkpoint /tmp/ssrec_cli_run/best.ckpt --data /tmp/ssrec_cli_data.tsv "
        "--by-length 5,20 --threads 2");
    CHECK(ev.code == 0);
    CHECK(ev.out.find("bucket (0,5]") != std::string::npos);
    CHECK(ev.out.find("bucket (5,20]") != std::string::npos);
  }

  SUBCASE("missing checkpoint is a data error") {
    const auto ev = run("eval --checkpoint /tmp/nope.ckpt --data /tmp/ssrec_cli_data.tsv");
    CHECK(ev.code == 2);
  }

  SUBCASE("vocabulary mismatch is refused") {
    run("gen-toy --out /tmp/ssrec_cli_small.tsv --seed 77 --users 4 --items 9 --seq-len 8");
    const auto ev = run(
        "eval --checkpoint /tmp/ssrec_cli_run/best.ckpt --data /tmp/ssrec_cli_small.tsv");
    CHECK(ev.code == 2);
    CHECK(ev.out.find("vocabulary mismatch") != std::string::npos);
  }

  SUBCASE("unknown config key is named") {
    const auto r = run("train --data /tmp/ssrec_cli_data.tsv --set model.emebd_dim=8");
    CHECK(r.code == 1);
    CHECK(r.out.find("model.emebd_dim") != std::string::npos);
  }

  SUBCASE("missing data file is a data error") {
    const auto r = run("train --data /tmp/definitely_missing.tsv --epochs 1");
    CHECK(r.code == 2);
  }

  SUBCASE("environment overrides are honored") {
    const auto r = run(
        "train --data /tmp/ssrec_cli_data.tsv --out /tmp/ssrec_cli_env --epochs 1 "
        "--embed-dim 8 --state-dim 4 --max-len 10");
    CHECK(r.code == 0);
    setenv("SSREC_model__embed_dim", "6", 1);
    const auto r2 = run(
        "train --data /tmp/ssrec_cli_data.tsv --out /tmp/ssrec_cli_env2 --epochs 1 "
        "--state-dim 4 --max-len 10");
    unsetenv("SSREC_model__embed_dim");
    CHECK(r2.code == 0);
    CHECK(slurp("/tmp/ssrec_cli_env2/resolved.config").find("model.embed_dim = 6") !=
          std::string::npos);
  }
}

TEST_CASE("config file round trip") {
  std::ofstream cfg("/tmp/ssrec_cli.config");
  cfg << "# toy run\n"
      << "data.path = /tmp/ssrec_cli_data.tsv\n"
      << "model.embed_dim = 8\n"
      << "model.state_dim = 4\n"
      << "model.max_len = 10\n"
      << "train.max_epochs = 1\n"
      << "train.batch_size = 16\n"
      << "out.dir = /tmp/ssrec_cli_cfgrun\n";
  cfg.close();
  run("gen-toy --out /tmp/ssrec_cli_data.tsv --seed 21 --users 30 --seq-len 10");
  const auto r = run("train --config /tmp/ssrec_cli.config");
  CHECK(r.code == 0);
  // flags override the file
  const auto r2 = run("train --config /tmp/ssrec_cli.config --out /tmp/ssrec_cli_cfgrun2");
  CHECK(r2.code == 0);
  CHECK(slurp("/tmp/ssrec_cli_cfgrun2/resolved.config").find("out.dir = /tmp/ssrec_cli_cfgrun2") !=
        std::string::npos);
}

TEST_CASE("audit command") {
  const auto ok = run("audit --suite scan");
  CHECK(ok.code == 0);
  CHECK(ok.out.find("[PASS] scan") != std::string::npos);

  const auto all = run("audit");
  CHECK(all.code == 0);

  const auto bad = run("audit --suite zoh --inject-fault");
  CHECK(bad.code == 3);
  CHECK(bad.out.find("[FAIL]") != std::string::npos);

  const auto unknown = run("audit --suite warp");
  CHECK(unknown.code == 1);
}

TEST_CASE("usage errors") {
  CHECK(run("").code == 1);
  CHECK(run("frobnicate").code == 1);
  CHECK(run("train --data").code == 1);
}
