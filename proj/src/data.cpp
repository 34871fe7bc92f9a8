#include "ssrec/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ssrec/common.hpp"

namespace ssrec::data {

int32_t IdMap::intern(const std::string& raw) {
  auto it = raw_to_dense.find(raw);
  if (it != raw_to_dense.end()) return it->second;
  const int32_t id = first_id + size();
  raw_to_dense.emplace(raw, id);
  dense_to_raw.push_back(raw);
  return id;
}

void IdMap::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write id map: " + path);
  for (int32_t i = 0; i < size(); ++i)
    out << dense_to_raw[i] << '\t' << (first_id + i) << '\n';
}

namespace {

std::vector<std::string> split_line(const std::string& line, const std::string& delim) {
  std::vector<std::string> out;
  if (delim.empty()) throw ConfigError("empty delimiter");
  size_t pos = 0;
  while (true) {
    const size_t next = line.find(delim, pos);
    if (next == std::string::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + delim.size();
  }
  return out;
}

bool parse_i64(const std::string& s, int64_t& out) {
  if (s.empty()) return false;
  size_t i = 0;
  if (s[0] == '-' || s[0] == '+') i = 1;
  if (i == s.size()) return false;
  int64_t v = 0;
  for (; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
  }
  out = s[0] == '-' ? -v : v;
  return true;
}

struct ColumnSpec {
  int user = -1, item = -1, time = -1;
  size_t min_fields = 0;
};

ColumnSpec resolve_columns(const ParseOptions& opt) {
  ColumnSpec spec;
  for (size_t i = 0; i < opt.columns.size(); ++i) {
    const std::string& c = opt.columns[i];
    if (c == "user")
      spec.user = static_cast<int>(i);
    else if (c == "item")
      spec.item = static_cast<int>(i);
    else if (c == "time")
      spec.time = static_cast<int>(i);
    else if (c != "skip")
      throw ConfigError("unknown column token '" + c + "' (user|item|time|skip)");
  }
  if (spec.user < 0 || spec.item < 0 || spec.time < 0)
    throw ConfigError("column spec must name user, item and time");
  spec.min_fields = opt.columns.size();
  return spec;
}

}  // namespace

ParseResult parse_interactions(std::istream& in, const ParseOptions& opt,
                               const std::string& name) {
  const ColumnSpec spec = resolve_columns(opt);
  ParseResult res;
  res.items.first_id = 1;  // 0 reserved for padding
  res.users.first_id = 0;

  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    const auto fields = split_line(line, opt.delim);
    int64_t ts = 0;
    bool ok = fields.size() >= spec.min_fields &&
              parse_i64(fields[spec.time], ts) && ts >= 0;
    if (!ok) {
      if (lineno == 1 && opt.header != ParseOptions::Header::No) {
        continue;  // optional header line
      }
      if (opt.lenient) {
        ++res.skipped;
        continue;
      }
      throw DataError(name + ":" + std::to_string(lineno) + ": malformed interaction line");
    }
    if (lineno == 1 && opt.header == ParseOptions::Header::Yes) continue;

    Interaction rec;
    rec.user = res.users.intern(fields[spec.user]);
    rec.item = res.items.intern(fields[spec.item]);
    rec.ts = ts;
    res.records.push_back(rec);
  }
  return res;
}

ParseResult parse_interactions(const std::string& path, const ParseOptions& opt) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open interaction file: " + path);
  return parse_interactions(in, opt, path);
}

std::vector<UserSequence> build_user_sequences(const std::vector<Interaction>& records) {
  int32_t max_user = -1;
  for (const auto& r : records) max_user = std::max(max_user, r.user);

  std::vector<std::vector<std::pair<int64_t, int32_t>>> per_user(max_user + 1);
  for (const auto& r : records) per_user[r.user].emplace_back(r.ts, r.item);

  std::vector<UserSequence> out;
  out.reserve(per_user.size());
  for (int32_t u = 0; u <= max_user; ++u) {
    auto& evs = per_user[u];
    if (evs.empty()) continue;
    std::stable_sort(evs.begin(), evs.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    UserSequence seq;
    seq.user = u;
    seq.items.reserve(evs.size());
    seq.timestamps.reserve(evs.size());
    for (const auto& [ts, item] : evs) {
      seq.items.push_back(item);
      seq.timestamps.push_back(ts);
    }
    seq.intervals.resize(evs.size(), 0.0);
    for (size_t i = 0; i + 1 < evs.size(); ++i)
      seq.intervals[i] =
          static_cast<double>(std::llabs(seq.timestamps[i + 1] - seq.timestamps[i]));
    out.push_back(std::move(seq));
  }
  return out;
}

void set_final_interval(UserSequence& seq, int64_t query_ts) {
  if (seq.items.empty()) return;
  seq.intervals.back() =
      static_cast<double>(std::llabs(query_ts - seq.timestamps.back()));
}

void normalize_intervals(UserSequence& seq, double scale, double clamp_max) {
  if (!(scale > 0.0)) throw ConfigError("interval scale must be > 0");
  for (double& v : seq.intervals) v = std::min(v / scale, clamp_max);
}

double median_nonzero_interval(const std::vector<UserSequence>& seqs) {
  std::vector<double> vals;
  for (const auto& s : seqs)
    for (size_t i = 0; i + 1 < s.intervals.size(); ++i)
      if (s.intervals[i] > 0.0) vals.push_back(s.intervals[i]);
  if (vals.empty()) return 1.0;
  const size_t mid = vals.size() / 2;
  std::nth_element(vals.begin(), vals.begin() + mid, vals.end());
  if (vals.size() % 2 == 1) return vals[mid];
  const double hi = vals[mid];
  const double lo = *std::max_element(vals.begin(), vals.begin() + mid);
  return 0.5 * (lo + hi);
}

ToyDataset generate_toy_dataset(const ToyConfig& cfg) {
  if (cfg.n_users <= 0 || cfg.n_items <= 0 || cfg.seq_len <= 0 || cfg.t_max <= 0)
    throw ConfigError("toy dataset parameters must be positive");
  Rng rng(cfg.seed);
  ToyDataset out;
  out.records.reserve(static_cast<size_t>(cfg.n_users) * cfg.seq_len);
  out.periods.reserve(cfg.n_users);
  for (int u = 0; u < cfg.n_users; ++u) {
    // period from [1, n_items]; 0 would make the modulo undefined
    const int32_t t = static_cast<int32_t>(rng.int_range(1, cfg.n_items));
    out.periods.push_back(t);
    for (int i = 0; i < cfg.seq_len; ++i) {
      const int64_t ts = static_cast<int64_t>(rng.below(static_cast<uint64_t>(cfg.t_max)));
      out.records.push_back({u, static_cast<int32_t>(ts % t), ts});
    }
  }
  return out;
}

void write_interactions(const std::string& path, const std::vector<Interaction>& records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write interaction file: " + path);
  for (const auto& r : records) out << r.user << '\t' << r.item << '\t' << r.ts << '\n';
}

LeaveOneOut leave_one_out_split(const UserSequence& seq) {
  if (seq.size() < 3) throw DataError("leave_one_out_split requires length >= 3");
  const size_t n = seq.size();
  LeaveOneOut out;
  out.train.user = seq.user;
  out.train.items.assign(seq.items.begin(), seq.items.end() - 2);
  out.train.timestamps.assign(seq.timestamps.begin(), seq.timestamps.end() - 2);
  out.train.intervals.assign(seq.intervals.begin(), seq.intervals.end() - 2);
  out.train.intervals.back() = 0.0;  // final slot is set per query
  out.valid = {seq.items[n - 2], seq.timestamps[n - 2]};
  out.test = {seq.items[n - 1], seq.timestamps[n - 1]};
  return out;
}

SplitCorpus split_corpus(const std::vector<UserSequence>& seqs) {
  SplitCorpus out;
  for (const auto& seq : seqs) {
    if (seq.size() >= 3) {
      LeaveOneOut loo = leave_one_out_split(seq);
      SplitCorpus::EvalUser eu;
      eu.user = seq.user;
      eu.train_index = out.train.size();
      eu.valid = loo.valid;
      eu.test = loo.test;
      out.eval_users.push_back(eu);
      out.train.push_back(std::move(loo.train));
    } else {
      // too short to hold out targets; keep everything for training
      ++out.n_excluded;
      if (seq.size() == 1) ++out.n_single;
      out.train.push_back(seq);
    }
  }
  return out;
}

UserSequence simulate_partial_observation(const UserSequence& seq, double p, Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw ConfigError("drop probability must be in [0, 1)");
  UserSequence out;
  out.user = seq.user;
  for (size_t i = 0; i < seq.size(); ++i) {
    if (rng.bernoulli(p)) continue;
    out.items.push_back(seq.items[i]);
    out.timestamps.push_back(seq.timestamps[i]);
  }
  if (out.items.empty() && !seq.items.empty()) {
    out.items.push_back(seq.items.back());
    out.timestamps.push_back(seq.timestamps.back());
  }
  out.intervals.resize(out.items.size(), 0.0);
  for (size_t i = 0; i + 1 < out.items.size(); ++i)
    out.intervals[i] =
        static_cast<double>(std::llabs(out.timestamps[i + 1] - out.timestamps[i]));
  return out;
}

std::vector<Batch> make_batches(const std::vector<UserSequence>& seqs, int max_len,
                                int batch_rows) {
  if (max_len < 1) throw ConfigError("max_len must be >= 1");
  if (batch_rows < 1) throw ConfigError("batch size must be >= 1");

  std::vector<const UserSequence*> usable;
  for (const auto& s : seqs)
    if (s.trainable()) usable.push_back(&s);

  std::vector<Batch> out;
  for (size_t start = 0; start < usable.size(); start += batch_rows) {
    const int rows = static_cast<int>(std::min<size_t>(batch_rows, usable.size() - start));
    Batch b;
    b.rows = rows;
    b.len = max_len;
    const size_t cells = static_cast<size_t>(rows) * max_len;
    b.items.assign(cells, 0);
    b.intervals.assign(cells, 0.0);
    b.targets.assign(cells, 0);
    b.valid.assign(cells, 0);

    for (int r = 0; r < rows; ++r) {
      const UserSequence& s = *usable[start + r];
      const size_t n = s.size();
      const size_t keep = std::min<size_t>(n, static_cast<size_t>(max_len));
      const size_t first = n - keep;  // truncate to the most recent items
      const int pad = max_len - static_cast<int>(keep);
      for (size_t i = 0; i < keep; ++i) {
        const size_t idx = b.at(r, pad + static_cast<int>(i));
        const size_t src = first + i;
        b.items[idx] = s.items[src];
        b.valid[idx] = 1;
        b.targets[idx] = src + 1 < n ? s.items[src + 1] : 0;
        // forward-looking step: the interval consumed at position i spans to
        // the next interaction; the last position has no defined step
        b.intervals[idx] = src + 1 < n ? s.intervals[src] : 0.0;
      }
    }
    out.push_back(std::move(b));
  }
  return out;
}

std::pair<std::vector<int32_t>, std::vector<double>> unpad_row(const Batch& b, int row) {
  std::vector<int32_t> items;
  std::vector<double> intervals;
  for (int l = 0; l < b.len; ++l) {
    const size_t idx = b.at(row, l);
    if (!b.valid[idx]) continue;
    items.push_back(b.items[idx]);
    intervals.push_back(b.intervals[idx]);
  }
  return {std::move(items), std::move(intervals)};
}

}  // namespace ssrec::data
