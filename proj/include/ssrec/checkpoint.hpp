#pragma once

#include <string>

#include "ssrec/model.hpp"

namespace ssrec::train {

// Versioned binary container: magic, version, config header, named parameter
// blobs in declared order, trailing CRC32 over everything before it.
// Round trips are bitwise exact.
void save_checkpoint(const model::ModelState& m, const std::string& path);

model::ModelState load_checkpoint(const std::string& path);

// Load and verify the stored config matches; mismatches raise CheckpointError
// naming the offending fields.
model::ModelState load_checkpoint(const std::string& path, const model::ModelConfig& expected);

}  // namespace ssrec::train
