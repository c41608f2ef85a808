#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mmsplat/checkpoint.hpp"
#include "mmsplat/dataset.hpp"
#include "mmsplat/density.hpp"
#include "mmsplat/optimizer.hpp"
#include "mmsplat/render.hpp"

namespace mmsplat {

struct TrainConfig {
    std::uint64_t seed = 1;
    int iterations = 3000;
    int init_gaussians = 600;
    SceneMode mode = SceneMode::PerModalityIndicator;

    // Method flags; folded into the densify config at run time.
    bool enable_decomposition = true;
    PruneMode prune_mode = PruneMode::Soft;

    LearningRates lr;
    double means_lr_final = 1.6e-6;
    // Horizon of the exponential means-lr decay; 0 means `iterations`. Kept
    // separate so a run stopped early and resumed reproduces the straight
    // run exactly.
    int lr_schedule_iterations = 0;

    int densify_start = 500;
    int densify_stop = 2500;
    DensifyConfig densify;

    double lambda_ssim = 0.2;
    double cutoff = 1.0 / 255.0;
    double background = 0.0;
    int workers = 0;
    std::map<std::string, double> loss_weight_override;

    void validate() const;  // throws std::invalid_argument on bad values
    RenderOptions render_options() const;
    DensifyConfig effective_densify() const;
};

TrainConfig train_config_from_json_file(const std::filesystem::path& path);
TrainConfig train_config_from_json_text(const std::string& text);
std::string train_config_to_json_text(const TrainConfig& cfg);

struct IndicatorHistogram {
    std::string name;
    double lo = 0.0, hi = 1.0;
    std::vector<std::uint64_t> bins;
    std::uint64_t off_count = 0;  // slots in the exact off state
};

struct RunReport {
    struct ModalityMetrics {
        int id = -1;
        std::string name;
        double psnr = 0.0;
        double ssim = 0.0;
    };
    std::vector<ModalityMetrics> per_modality;
    bool has_language = false;
    double miou = 0.0;
    double localization = 0.0;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::uint64_t final_gaussians = 0;
    std::vector<std::array<std::uint64_t, 2>> count_trajectory;  // (iteration, count)
    std::vector<IndicatorHistogram> indicator_histograms;        // per modality
    std::vector<IndicatorHistogram> indicator_diff_histograms;   // per modality pair
    double wall_clock_seconds = 0.0;

    double mean_psnr() const;
};

// Timing is left out of the deterministic form so identical runs compare
// bitwise equal as serialized text.
std::string report_to_json_text(const RunReport& report, bool include_timing = true);
void write_report_files(const std::filesystem::path& dir, const std::string& stem,
                        const RunReport& report);

struct TrainOutput {
    RunReport report;
    Checkpoint checkpoint;
};

// Full training loop: render -> loss -> backward -> step -> periodic densify.
// `out_dir` empty skips all file output; `resume` continues a checkpointed
// run (iteration counter, optimizer moments and accumulators included).
TrainOutput train(const TrainConfig& cfg, const Dataset& data,
                  const std::filesystem::path& out_dir = {}, const Checkpoint* resume = nullptr);

// Renders the checkpointed scene and computes all metrics without mutating
// it. Throws when the checkpoint's modality roster does not match the
// dataset, naming the offending modality.
RunReport evaluate(const Checkpoint& ckpt, const Dataset& data,
                   const RenderOptions& opts = RenderOptions::fast(), int workers = 0);

struct AblationRow {
    std::string name;
    bool failed = false;
    std::string error;
    RunReport report;
};

struct AblationTable {
    std::vector<AblationRow> rows;
};

// Runs each named configuration and collects one comparison table; failures
// become marked rows instead of aborting the matrix.
AblationTable ablate(const std::vector<std::pair<std::string, TrainConfig>>& matrix,
                     const Dataset& data, const std::filesystem::path& out_dir = {});

void write_ablation_files(const std::filesystem::path& dir, const std::string& stem,
                          const AblationTable& table,
                          const std::vector<ModalityDescriptor>& roster);

struct CalibrationRow {
    double grad_threshold = 0.0;
    std::uint64_t final_gaussians = 0;
    double mean_psnr = 0.0;
};

struct CalibrationResult {
    std::vector<CalibrationRow> rows;
    double recommended = 0.0;
};

// Sweeps the clone/split gradient threshold on a dataset and recommends the
// value with the best mean PSNR (fewer gaussians on ties).
CalibrationResult calibrate_grad_threshold(const TrainConfig& base, const Dataset& data,
                                           const std::vector<double>& candidates);

}  // namespace mmsplat
