#pragma once

#include <string>

#include "pdfscan/model.hpp"

namespace pdfscan::models {

// Binary checkpoint files: magic "PDFSCK01", then a JSON header carrying
// the architecture config, training metadata, and a block table; parameter
// payload is float32 little-endian. load_checkpoint throws
// CorruptCheckpointError / UnknownArchError on malformed input.
void save_checkpoint(const ModelCheckpoint& ckpt, const std::string& path);
ModelCheckpoint load_checkpoint(const std::string& path);

}  // namespace pdfscan::models
