#pragma once

#include <optional>
#include <string>

#include "empmp/model.hpp"
#include "empmp/optimizer.hpp"

namespace empmp {

struct CheckpointMeta {
  std::uint32_t completed_epochs = 0;
  std::uint64_t optimizer_step = 0;
};

// Binary container: magic "EMPM", version, the full model config, meta, then
// one named record per parameter (and per optimizer moment when present),
// each a little-endian f64 payload guarded by a CRC32. Round-trips are
// bit-exact. Layout details in docs/FORMATS.md.
void save_checkpoint(const std::string& path, const EmpmpModel& model,
                     const AdamState* optimizer = nullptr, CheckpointMeta meta = {});

struct LoadedCheckpoint {
  EmpmpModel model;
  std::optional<AdamState> optimizer;
  CheckpointMeta meta;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace empmp
