#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ssrec/data.hpp"
#include "ssrec/model.hpp"

namespace ssrec::eval {

// Rank with pessimistic ties: 1 + #{scores >= target score, excluding target}.
int rank_of_target(const double* logits, int n, int target_index);

struct Pointwise {
  double hr = 0.0, ndcg = 0.0, mrr = 0.0;
};
Pointwise metrics_at_k(int rank, int k);

struct Metrics {
  double hr = 0.0, ndcg = 0.0, mrr = 0.0;
  int k = 10;
  size_t n_users = 0;    // users evaluated
  size_t n_skipped = 0;  // users without usable history
  bool history_filtered = false;
};

enum class Split { Valid, Test };

struct EvalOptions {
  int k = 10;
  // Exclude items already in the user's history from the candidate ranking.
  bool filter_history = false;
  Split split = Split::Test;
  int batch_rows = 64;
  int threads = 1;
};

// Full-catalog leave-one-out ranking. Histories are truncated to the model's
// max_len; the final interval spans from the last history item to the target
// time, normalized with the scale carried by the model config.
Metrics evaluate(const model::ModelState& m, const data::SplitCorpus& corpus,
                 const EvalOptions& opt);

// Per-length-bucket breakdown. Edges are upper bounds: (0,e0], (e0,e1], ...;
// histories longer than the last edge land in an overflow bucket.
std::map<std::string, Metrics> evaluate_by_length(const model::ModelState& m,
                                                  const data::SplitCorpus& corpus,
                                                  const std::vector<int>& bucket_edges,
                                                  const EvalOptions& opt);

std::string format_report(const Metrics& m);                       // key=value lines
std::string machine_line(const Metrics& m, const std::string& tag);  // single TSV record

}  // namespace ssrec::eval
