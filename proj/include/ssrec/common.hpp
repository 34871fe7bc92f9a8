#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ssrec {

// Error taxonomy, mapped to process exit codes by the CLI:
//   UsageError/ConfigError -> 1, DataError -> 2, AuditError -> 3, DivergenceError -> 4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UsageError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct DataError : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};
struct CheckpointError : Error {
  using Error::Error;
};
struct AuditError : Error {
  using Error::Error;
};

struct DivergenceError : Error {
  int epoch = -1;
  int batch = -1;
  double loss = 0.0;
  DivergenceError(const std::string& msg, int epoch_, int batch_, double loss_)
      : Error(msg), epoch(epoch_), batch(batch_), loss(loss_) {}
};

// FNV-1a over raw bytes; used for parameter digests and stream forking.
inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = 1469598103934665603ull) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace ssrec
