#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "mmsplat/scene.hpp"

namespace mmsplat {

enum class PruneMode : std::uint8_t {
    Hard = 0,  // remove the gaussian when its strongest indicator is weak
    Soft = 1,  // switch off weak modalities; remove weak single-modal gaussians
};

struct DensifyConfig {
    double grad_threshold = 2e-7;          // clone/split trigger on mean positional grad norm
    double decomp_threshold = 0.0002;      // gradient-difference trigger
    double size_split_threshold = 4.0;     // world units; larger gaussians split, smaller clone
    double opacity_prune_threshold = 0.005;
    double single_modal_prune_threshold = 0.5;
    int interval = 100;
    PruneMode mode = PruneMode::Soft;
    bool enable_decomposition = true;
    // Decompose only the most conflicting pair instead of one copy per
    // active modality.
    bool partial_fanout = false;
    double clone_nudge_factor = 0.1;   // step against the mean gradient, in units of scale
    double split_scale_divisor = 1.6;
    std::optional<double> world_size_cap;  // optional prune of overlarge gaussians
};

// ||mean_grad(m_i) - mean_grad(m_j)||_2 over the accumulation window; 0 when
// either side has no evidence (off slot or zero count).
double gradient_difference(const ModalGaussian& g, int modality_i, int modality_j);

// Largest gradient difference over pairs of active modalities.
double max_pairwise_gradient_difference(const ModalGaussian& g);

// Splits a multi-modal gaussian into single-modal copies: identical geometry,
// one active modality each, logits and features of the other slots retained.
// Gradient accumulators start fresh. Throws when fewer than two modalities
// are active.
std::vector<ModalGaussian> decompose(const ModalGaussian& g);

// Switches off modality m of gaussian `index`; removes the gaussian when no
// modality remains active. Returns true when the gaussian was removed.
bool soft_prune(Scene& scene, std::size_t index, int modality_id);

struct DensifyReport {
    std::uint64_t cloned = 0;
    std::uint64_t split = 0;
    std::uint64_t decomposed = 0;           // gaussians replaced by fan-out
    std::uint64_t decomposed_children = 0;  // total copies emitted
    std::uint64_t soft_pruned = 0;          // modality slots switched off
    std::uint64_t hard_pruned = 0;          // gaussians removed in the prune phase
    // result row -> pre-pass row, or -1 for gaussians created this pass.
    // Lets the trainer carry optimizer moments across the restructure.
    std::vector<std::int64_t> provenance;

    std::int64_t net_change() const {
        return static_cast<std::int64_t>(cloned) + static_cast<std::int64_t>(split) +
               (static_cast<std::int64_t>(decomposed_children) -
                static_cast<std::int64_t>(decomposed)) -
               static_cast<std::int64_t>(hard_pruned);
    }
};

// One adaptive-density pass: decomposition, then clone/split, then prune,
// then accumulator reset. `seed`/`pass_index` key the split sampling so a
// resumed run reproduces the same children.
DensifyReport densify_and_prune(Scene& scene, const DensifyConfig& cfg, std::uint64_t seed = 0,
                                std::uint64_t pass_index = 0);

// Appends "iteration,cloned,split,decomposed,soft_pruned,hard_pruned,total"
// to a CSV log, writing the header when the file is new.
void append_densify_log(const std::filesystem::path& csv_path, std::uint64_t iteration,
                        const DensifyReport& report, std::size_t total_gaussians);

}  // namespace mmsplat
