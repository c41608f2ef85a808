#pragma once

#include <cstdint>
#include <filesystem>

#include "mmsplat/optimizer.hpp"
#include "mmsplat/scene.hpp"

namespace mmsplat {

// Versioned binary scene checkpoint; field order documented in
// docs/formats.md. Round trips bit-exactly, including optimizer moments so
// training can resume with identical trajectories.
struct Checkpoint {
    Scene scene;
    std::uint64_t iteration = 0;
    bool has_optimizer = false;
    OptimizerState optimizer;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mmsplat
