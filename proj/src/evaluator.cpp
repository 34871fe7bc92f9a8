#include "ssrec/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "ssrec/common.hpp"
#include "ssrec/kernels.hpp"
#include "ssrec/threading.hpp"

namespace ssrec::eval {

int rank_of_target(const double* logits, int n, int target_index) {
  const double ts = logits[target_index];
  int above = 0;
  for (int i = 0; i < n; ++i)
    if (i != target_index && logits[i] >= ts) ++above;
  return 1 + above;
}

Pointwise metrics_at_k(int rank, int k) {
  Pointwise p;
  if (rank <= k) {
    p.hr = 1.0;
    p.ndcg = 1.0 / std::log2(static_cast<double>(rank) + 1.0);
    p.mrr = 1.0 / static_cast<double>(rank);
  }
  return p;
}

namespace {

struct EvalCase {
  data::UserSequence history;  // raw timestamps/intervals, final slot = query
  int32_t target = 0;
  size_t history_len = 0;  // pre-truncation length, for bucketing
};

std::vector<EvalCase> build_cases(const model::ModelState& m, const data::SplitCorpus& corpus,
                                  Split split, size_t* n_skipped) {
  std::vector<EvalCase> cases;
  for (const auto& eu : corpus.eval_users) {
    const data::UserSequence& prefix = corpus.train[eu.train_index];
    if (prefix.items.empty()) {
      ++*n_skipped;
      continue;
    }
    EvalCase c;
    if (split == Split::Valid) {
      c.history = prefix;
      data::set_final_interval(c.history, eu.valid.ts);
      c.target = eu.valid.item;
    } else {
      c.history = prefix;
      c.history.items.push_back(eu.valid.item);
      c.history.timestamps.push_back(eu.valid.ts);
      c.history.intervals.back() = static_cast<double>(
          std::llabs(eu.valid.ts - prefix.timestamps.back()));
      c.history.intervals.push_back(0.0);
      data::set_final_interval(c.history, eu.test.ts);
      c.target = eu.test.item;
    }
    if (c.target < 1 || c.target > m.cfg.n_items)
      throw DataError("evaluation target outside the model's catalog: " +
                      std::to_string(c.target));
    c.history_len = c.history.size();
    data::normalize_intervals(c.history, m.cfg.interval_scale, m.cfg.interval_clamp);
    cases.push_back(std::move(c));
  }
  return cases;
}

// One left-padded row per case; the final position carries the query interval.
data::Batch cases_to_batch(const std::vector<EvalCase>& cases, size_t begin, size_t end,
                           int max_len) {
  data::Batch b;
  b.rows = static_cast<int>(end - begin);
  b.len = max_len;
  const size_t cells = static_cast<size_t>(b.rows) * b.len;
  b.items.assign(cells, 0);
  b.intervals.assign(cells, 0.0);
  b.targets.assign(cells, 0);
  b.valid.assign(cells, 0);
  for (size_t ci = begin; ci < end; ++ci) {
    const auto& h = cases[ci].history;
    const int r = static_cast<int>(ci - begin);
    const size_t n = h.size();
    const size_t keep = std::min<size_t>(n, static_cast<size_t>(max_len));
    const size_t first = n - keep;
    const int pad = max_len - static_cast<int>(keep);
    for (size_t i = 0; i < keep; ++i) {
      const size_t idx = b.at(r, pad + static_cast<int>(i));
      b.items[idx] = h.items[first + i];
      b.intervals[idx] = h.intervals[first + i];
      b.valid[idx] = 1;
    }
  }
  return b;
}

struct RankedCases {
  std::vector<int> ranks;  // aligned with cases
};

RankedCases rank_cases(const model::ModelState& m, const std::vector<EvalCase>& cases,
                       const EvalOptions& opt) {
  RankedCases out;
  out.ranks.assign(cases.size(), 0);
  const int d = m.cfg.d;
  const int n_items = m.cfg.n_items;

  for (size_t begin = 0; begin < cases.size();
       begin += static_cast<size_t>(opt.batch_rows)) {
    const size_t end = std::min(cases.size(), begin + static_cast<size_t>(opt.batch_rows));
    const data::Batch batch = cases_to_batch(cases, begin, end, m.cfg.max_len);
    model::ForwardOptions fopt;
    fopt.training = false;
    fopt.threads = opt.threads;
    const std::vector<double> outp = model::forward(m, batch, fopt);

    parallel_for_chunks(end - begin, opt.threads, [&](int, size_t rb, size_t re_) {
      std::vector<double> logits(n_items);
      for (size_t r = rb; r < re_; ++r) {
        const size_t ci = begin + r;
        const size_t last = batch.at(static_cast<int>(r), batch.len - 1);
        model::score(m, outp.data() + last * d, logits.data());
        const int32_t target = cases[ci].target;
        if (opt.filter_history) {
          for (int32_t it : cases[ci].history.items)
            if (it != target && it >= 1) logits[it - 1] = -1e300;
        }
        out.ranks[ci] = rank_of_target(logits.data(), n_items, target - 1);
      }
    });
  }
  return out;
}

Metrics aggregate(const std::vector<int>& ranks, const EvalOptions& opt, size_t n_skipped) {
  Metrics m;
  m.k = opt.k;
  m.history_filtered = opt.filter_history;
  m.n_skipped = n_skipped;
  for (int rank : ranks) {
    const Pointwise p = metrics_at_k(rank, opt.k);
    m.hr += p.hr;
    m.ndcg += p.ndcg;
    m.mrr += p.mrr;
    ++m.n_users;
  }
  if (m.n_users > 0) {
    m.hr /= static_cast<double>(m.n_users);
    m.ndcg /= static_cast<double>(m.n_users);
    m.mrr /= static_cast<double>(m.n_users);
  }
  return m;
}

}  // namespace

Metrics evaluate(const model::ModelState& m, const data::SplitCorpus& corpus,
                 const EvalOptions& opt) {
  size_t skipped = 0;
  const auto cases = build_cases(m, corpus, opt.split, &skipped);
  const auto ranked = rank_cases(m, cases, opt);
  return aggregate(ranked.ranks, opt, skipped);
}

std::map<std::string, Metrics> evaluate_by_length(const model::ModelState& m,
                                                  const data::SplitCorpus& corpus,
                                                  const std::vector<int>& bucket_edges,
                                                  const EvalOptions& opt) {
  for (size_t i = 1; i < bucket_edges.size(); ++i)
    if (bucket_edges[i] <= bucket_edges[i - 1])
      throw ConfigError("bucket edges must be strictly increasing");
  if (bucket_edges.empty()) throw ConfigError("bucket edges must be non-empty");

  size_t skipped = 0;
  const auto cases = build_cases(m, corpus, opt.split, &skipped);
  const auto ranked = rank_cases(m, cases, opt);

  auto label = [](int lo, int hi) {
    std::ostringstream os;
    os << "(" << lo << "," << hi << "]";
    return os.str();
  };

  std::map<std::string, std::vector<int>> bucket_ranks;
  std::vector<std::string> labels;
  int lo = 0;
  for (int hi : bucket_edges) {
    labels.push_back(label(lo, hi));
    bucket_ranks[labels.back()] = {};
    lo = hi;
  }
  const std::string overflow =
      "(" + std::to_string(bucket_edges.back()) + ",inf)";

  for (size_t i = 0; i < cases.size(); ++i) {
    const size_t len = cases[i].history_len;
    int prev = 0;
    std::string key;
    for (size_t bi = 0; bi < bucket_edges.size(); ++bi) {
      if (len > static_cast<size_t>(prev) && len <= static_cast<size_t>(bucket_edges[bi])) {
        key = labels[bi];
        break;
      }
      prev = bucket_edges[bi];
    }
    if (key.empty()) key = overflow;
    bucket_ranks[key].push_back(ranked.ranks[i]);
  }

  std::map<std::string, Metrics> out;
  for (const auto& [key, ranks] : bucket_ranks) {
    if (key == overflow && ranks.empty()) continue;
    out[key] = aggregate(ranks, opt, 0);
  }
  return out;
}

std::string format_report(const Metrics& m) {
  std::ostringstream os;
  os << "k=" << m.k << "\n";
  os << "n_users=" << m.n_users << "\n";
  os << "n_skipped=" << m.n_skipped << "\n";
  os << "history_filtered=" << (m.history_filtered ? "true" : "false") << "\n";
  char buf[96];
  std::snprintf(buf, sizeof(buf), "HR@%d=%.6f\n", m.k, m.hr);
  os << buf;
  std::snprintf(buf, sizeof(buf), "NDCG@%d=%.6f\n", m.k, m.ndcg);
  os << buf;
  std::snprintf(buf, sizeof(buf), "MRR@%d=%.6f\n", m.k, m.mrr);
  os << buf;
  return os.str();
}

std::string machine_line(const Metrics& m, const std::string& tag) {
  char buf[224];
  std::snprintf(buf, sizeof(buf), "%s\t%d\t%zu\t%.8f\t%.8f\t%.8f", tag.c_str(), m.k, m.n_users,
                m.hr, m.ndcg, m.mrr);
  return buf;
}

}  // namespace ssrec::eval
