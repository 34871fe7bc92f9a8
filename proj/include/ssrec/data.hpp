#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "ssrec/rng.hpp"

namespace ssrec::data {

// One (user, item, timestamp) event with dense ids. Item ids start at 1;
// 0 is the padding sentinel.
struct Interaction {
  int32_t user = 0;
  int32_t item = 0;
  int64_t ts = 0;
};

struct ParseOptions {
  std::string delim = "\t";
  // tokens: user, item, time, skip (skip ignores a column)
  std::vector<std::string> columns = {"user", "item", "time"};
  enum class Header { Auto, Yes, No };
  Header header = Header::Auto;
  bool lenient = false;  // skip malformed lines instead of failing
};

struct IdMap {
  std::vector<std::string> dense_to_raw;  // index = dense - first_id
  std::unordered_map<std::string, int32_t> raw_to_dense;
  int32_t first_id = 0;

  int32_t intern(const std::string& raw);
  int32_t size() const { return static_cast<int32_t>(dense_to_raw.size()); }
  void write(const std::string& path) const;  // two columns: raw dense
};

struct ParseResult {
  std::vector<Interaction> records;
  IdMap items;  // dense 1..N
  IdMap users;  // dense 0..U-1
  size_t skipped = 0;

  int32_t n_items() const { return items.size(); }
  int32_t n_users() const { return users.size(); }
};

ParseResult parse_interactions(const std::string& path, const ParseOptions& opt = {});
ParseResult parse_interactions(std::istream& in, const ParseOptions& opt,
                               const std::string& name);

// Time-sorted per-user view. intervals[i] = t[i+1] - t[i] for i < n-1; the
// final slot spans from the last consumed item to the prediction time and is
// filled by set_final_interval once a query time is known.
struct UserSequence {
  int32_t user = 0;
  std::vector<int32_t> items;
  std::vector<int64_t> timestamps;
  std::vector<double> intervals;

  size_t size() const { return items.size(); }
  // A single interaction cannot form a training target.
  bool trainable() const { return items.size() >= 2; }
};

// Sorted by user id; within a user, stable sort by timestamp.
std::vector<UserSequence> build_user_sequences(const std::vector<Interaction>& records);

void set_final_interval(UserSequence& seq, int64_t query_ts);

// intervals <- clamp(intervals / scale, 0, clamp_max)
void normalize_intervals(UserSequence& seq, double scale, double clamp_max = 10.0);

// Median of the nonzero consecutive intervals across the given sequences
// (final query-time slots excluded). Returns 1 when no nonzero interval exists.
double median_nonzero_interval(const std::vector<UserSequence>& seqs);

// ---------------------------------------------------------------------------
// Synthetic time-determined dataset: per user a period t in [1, 100] is drawn,
// then seq_len events with timestamp uniform in [0, t_max) and
// item = timestamp mod t. The next item is a pure function of the query time.
// ---------------------------------------------------------------------------
struct ToyConfig {
  int n_users = 100;
  int n_items = 100;
  int seq_len = 100;
  int64_t t_max = 10000;
  uint64_t seed = 0;
};

struct ToyDataset {
  std::vector<Interaction> records;  // raw ids (user 0.., item = ts mod period)
  std::vector<int32_t> periods;      // per-user period t
};

ToyDataset generate_toy_dataset(const ToyConfig& cfg);
void write_interactions(const std::string& path, const std::vector<Interaction>& records);

// ---------------------------------------------------------------------------
// Leave-one-out split.
// ---------------------------------------------------------------------------
struct EvalTarget {
  int32_t item = 0;
  int64_t ts = 0;
};

struct LeaveOneOut {
  UserSequence train;  // first n-2 interactions
  EvalTarget valid;    // second to last
  EvalTarget test;     // last
};

// Requires seq.size() >= 3.
LeaveOneOut leave_one_out_split(const UserSequence& seq);

struct SplitCorpus {
  std::vector<UserSequence> train;  // training prefixes (short users keep all)
  struct EvalUser {
    int32_t user = 0;
    size_t train_index = 0;  // into train
    EvalTarget valid;
    EvalTarget test;
  };
  std::vector<EvalUser> eval_users;  // users with length >= 3
  size_t n_excluded = 0;             // users too short for evaluation
  size_t n_single = 0;               // flagged: single interaction, no target
};

SplitCorpus split_corpus(const std::vector<UserSequence>& seqs);

// Each item dropped independently with probability p; survivors keep their
// timestamps so consecutive intervals merge. Never returns an empty sequence.
UserSequence simulate_partial_observation(const UserSequence& seq, double p, Rng& rng);

// ---------------------------------------------------------------------------
// Batches: left-padded item/interval grids with per-position next-item targets.
// ---------------------------------------------------------------------------
struct Batch {
  int rows = 0;
  int len = 0;
  std::vector<int32_t> items;      // rows*len, 0 = pad
  std::vector<double> intervals;   // rows*len
  std::vector<int32_t> targets;    // rows*len, 0 = no target
  std::vector<uint8_t> valid;      // rows*len

  size_t at(int r, int l) const { return static_cast<size_t>(r) * len + l; }
};

// Sequences are truncated to their most recent max_len items. Sequences that
// cannot form a training pair (length < 2) are skipped.
std::vector<Batch> make_batches(const std::vector<UserSequence>& seqs, int max_len,
                                int batch_rows);

// Recovers the truncated (item, interval) lists from one batch row.
std::pair<std::vector<int32_t>, std::vector<double>> unpad_row(const Batch& b, int row);

}  // namespace ssrec::data
