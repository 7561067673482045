#pragma once

#include <filesystem>

#include "evdi/train.hpp"

namespace evdi {

// Checkpoint directory layout:
//   canvas.pfm            colour canvas (float32, for inspection)
//   residual_cK.pfm       one single-channel map per residual channel
//   crf.csv               curve,knot,param (full precision)
//   state.txt             iteration, stage, geometry, gates, rng state
//   params.bin            exact doubles of every parameter and Adam moment
// Loading reads params.bin, so a resumed run continues bit-identically.
void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

std::string format_crf_csv(const Crf& crf);

}  // namespace evdi
