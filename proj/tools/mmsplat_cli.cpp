// Command line front end: fixture generation, training, rendering,
// evaluation, ablation matrices, and threshold calibration.
//
// Exit codes: 0 success, 2 configuration error, 3 data error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mmsplat/checkpoint.hpp"
#include "mmsplat/dataset.hpp"
#include "mmsplat/image.hpp"
#include "mmsplat/render.hpp"
#include "mmsplat/synth.hpp"
#include "mmsplat/train.hpp"

namespace fs = std::filesystem;
using namespace mmsplat;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct ConfigCliArgs {
    std::string config_file;
    std::optional<std::uint64_t> seed;
    std::optional<int> iterations;
    std::optional<int> init_gaussians;
    std::optional<std::string> mode;
    std::optional<std::string> prune_mode;
    std::optional<bool> decomposition;
    std::optional<int> workers;
    std::optional<int> densify_start;
    std::optional<int> densify_stop;
    std::optional<int> densify_interval;
};

void add_config_options(CLI::App* cmd, ConfigCliArgs& args) {
    cmd->add_option("--config", args.config_file, "JSON training config file");
    cmd->add_option("--seed", args.seed, "Override the config seed");
    cmd->add_option("--iterations", args.iterations, "Override the iteration count");
    cmd->add_option("--init-gaussians", args.init_gaussians, "Override the initial gaussian count");
    cmd->add_option("--mode", args.mode,
                    "Scene mode: per_modality_indicator | shared_opacity");
    cmd->add_option("--prune-mode", args.prune_mode, "Prune mode: soft | hard");
    cmd->add_flag("--decomposition,!--no-decomposition", args.decomposition,
                  "Enable or disable multimodal decomposition");
    cmd->add_option("--workers", args.workers, "Render/backward worker threads (0 = auto)");
    cmd->add_option("--densify-start", args.densify_start, "First densify iteration");
    cmd->add_option("--densify-stop", args.densify_stop, "Last densify iteration");
    cmd->add_option("--densify-interval", args.densify_interval, "Iterations between passes");
}

TrainConfig resolve_config(const ConfigCliArgs& args) {
    TrainConfig cfg;
    if (!args.config_file.empty()) cfg = train_config_from_json_file(args.config_file);
    if (args.seed) cfg.seed = *args.seed;
    if (args.iterations) cfg.iterations = *args.iterations;
    if (args.init_gaussians) cfg.init_gaussians = *args.init_gaussians;
    if (args.densify_start) cfg.densify_start = *args.densify_start;
    if (args.densify_stop) cfg.densify_stop = *args.densify_stop;
    if (args.densify_interval) cfg.densify.interval = *args.densify_interval;
    // A shortened run with the window fully on defaults scales it down
    // proportionally instead of failing validation.
    if (args.iterations && args.config_file.empty() && !args.densify_start &&
        !args.densify_stop && cfg.densify_stop > cfg.iterations) {
        const TrainConfig defaults;
        const double scale =
            static_cast<double>(cfg.iterations) / static_cast<double>(defaults.iterations);
        cfg.densify_start = static_cast<int>(defaults.densify_start * scale);
        cfg.densify_stop = static_cast<int>(defaults.densify_stop * scale);
        cfg.densify.interval = std::max(1, static_cast<int>(defaults.densify.interval * scale));
    }
    if (args.mode) {
        if (*args.mode == "shared_opacity")
            cfg.mode = SceneMode::SharedOpacity;
        else if (*args.mode == "per_modality_indicator")
            cfg.mode = SceneMode::PerModalityIndicator;
        else
            throw std::invalid_argument("unknown --mode: " + *args.mode);
    }
    if (args.prune_mode) {
        if (*args.prune_mode == "soft")
            cfg.prune_mode = PruneMode::Soft;
        else if (*args.prune_mode == "hard")
            cfg.prune_mode = PruneMode::Hard;
        else
            throw std::invalid_argument("unknown --prune-mode: " + *args.prune_mode);
    }
    if (args.decomposition) cfg.enable_decomposition = *args.decomposition;
    if (args.workers) cfg.workers = *args.workers;
    cfg.validate();
    return cfg;
}

void print_report_summary(const RunReport& report) {
    for (const auto& m : report.per_modality)
        std::cout << "  " << m.name << ": psnr " << m.psnr << " dB, ssim " << m.ssim << "\n";
    if (report.has_language)
        std::cout << "  miou " << report.miou << ", localization " << report.localization
                  << "\n";
    std::cout << "  gaussians " << report.final_gaussians << ", wall clock "
              << report.wall_clock_seconds << " s\n";
}

// The Table-5 style five-row matrix, shared seed.
std::vector<std::pair<std::string, TrainConfig>> default_ablation_matrix(const TrainConfig& base) {
    auto row = [&](SceneMode mode, PruneMode prune, bool decomp) {
        TrainConfig c = base;
        c.mode = mode;
        c.prune_mode = prune;
        c.enable_decomposition = decomp;
        return c;
    };
    return {
        {"mm_j", row(SceneMode::SharedOpacity, PruneMode::Hard, false)},
        {"mm", row(SceneMode::PerModalityIndicator, PruneMode::Hard, false)},
        {"prune_hard", row(SceneMode::PerModalityIndicator, PruneMode::Hard, false)},
        {"prune_soft", row(SceneMode::PerModalityIndicator, PruneMode::Soft, false)},
        {"decomp", row(SceneMode::PerModalityIndicator, PruneMode::Soft, true)},
    };
}

int run(int argc, char** argv) {
    CLI::App app{"Desk-scale differentiable multimodal gaussian splatting"};
    app.require_subcommand(1);

    // --- generate ----------------------------------------------------------
    auto* gen = app.add_subcommand("generate", "Write a synthetic multimodal fixture dataset");
    std::string gen_out = "dataset";
    SyntheticSceneSpec spec;
    gen->add_option("--out", gen_out, "Output dataset directory")->required();
    gen->add_option("--seed", spec.seed, "Generator seed");
    gen->add_option("--width", spec.width, "Image width");
    gen->add_option("--height", spec.height, "Image height");
    gen->add_option("--objects", spec.object_count, "Object count");
    gen->add_option("--rgb-freq", spec.rgb_texture_freq, "RGB texture frequency (cycles/pixel)");
    gen->add_option("--blur-sigma", spec.thermal_blur_sigma, "Thermal blur sigma (pixels)");
    gen->add_option("--noise", spec.noise_sigma, "Additive noise sigma");

    // --- train ------------------------------------------------------------
    auto* tr = app.add_subcommand("train", "Train a scene on a dataset");
    std::string tr_data, tr_out = "run", tr_resume;
    ConfigCliArgs tr_args;
    tr->add_option("--data", tr_data, "Dataset directory")->required();
    tr->add_option("--out", tr_out, "Output directory (checkpoint, reports, logs)");
    tr->add_option("--resume", tr_resume, "Checkpoint to resume from");
    add_config_options(tr, tr_args);

    // --- render -------------------------------------------------------------
    auto* rd = app.add_subcommand("render", "Render all modalities of a checkpoint");
    std::string rd_ckpt, rd_out = "renders";
    double rd_cutoff = 1.0 / 255.0;
    rd->add_option("--checkpoint", rd_ckpt, "Scene checkpoint")->required();
    rd->add_option("--out", rd_out, "Output directory");
    rd->add_option("--cutoff", rd_cutoff, "Per-gaussian contribution cutoff");

    // --- eval ---------------------------------------------------------------
    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint against a dataset");
    std::string ev_ckpt, ev_data, ev_out;
    ev->add_option("--checkpoint", ev_ckpt, "Scene checkpoint")->required();
    ev->add_option("--data", ev_data, "Dataset directory")->required();
    ev->add_option("--out", ev_out, "Optional output directory for report files");

    // --- ablate --------------------------------------------------------------
    auto* ab = app.add_subcommand("ablate", "Run the five-row component ablation matrix");
    std::string ab_data, ab_out = "ablation";
    ConfigCliArgs ab_args;
    ab->add_option("--data", ab_data, "Dataset directory")->required();
    ab->add_option("--out", ab_out, "Output directory");
    add_config_options(ab, ab_args);

    // --- calibrate-thresholds -------------------------------------------------
    auto* cal = app.add_subcommand("calibrate-thresholds",
                                   "Sweep the clone/split gradient threshold");
    std::string cal_data, cal_out;
    std::vector<double> cal_candidates;
    ConfigCliArgs cal_args;
    cal->add_option("--data", cal_data, "Dataset directory")->required();
    cal->add_option("--out", cal_out, "Optional CSV output path");
    cal->add_option("--candidates", cal_candidates, "Threshold candidates")
        ->expected(-1);
    add_config_options(cal, cal_args);

    CLI11_PARSE(app, argc, argv);

    if (gen->parsed()) {
        const Dataset data = make_fixture_dataset(spec);
        write_dataset(gen_out, data);
        std::cout << "wrote dataset to " << gen_out << " (" << data.width << "x" << data.height
                  << ", " << data.modalities.size() << " modalities, " << data.labels.size()
                  << " labels)\n";
        return kExitOk;
    }

    if (tr->parsed()) {
        const TrainConfig cfg = resolve_config(tr_args);
        const Dataset data = read_dataset(tr_data);
        std::optional<Checkpoint> resume;
        if (!tr_resume.empty()) resume = load_checkpoint(tr_resume);
        const TrainOutput out =
            train(cfg, data, tr_out, resume ? &*resume : nullptr);
        std::cout << "trained " << cfg.iterations << " iterations\n";
        print_report_summary(out.report);
        std::cout << "checkpoint: " << (fs::path(tr_out) / "checkpoint.mmsp").string() << "\n";
        return kExitOk;
    }

    if (rd->parsed()) {
        const Checkpoint ckpt = load_checkpoint(rd_ckpt);
        RenderOptions opts = RenderOptions::fast();
        opts.cutoff = rd_cutoff;
        fs::create_directories(rd_out);
        for (const auto& m : ckpt.scene.modalities) {
            const RenderResult rr = render_modality(ckpt.scene, m.id, opts);
            write_flat_image(fs::path(rd_out) / m.name, rr.image);
            if (rr.image.channels == 3)
                write_png_rgb(fs::path(rd_out) / (m.name + ".png"), rr.image);
            std::cout << "rendered " << m.name << "\n";
        }
        return kExitOk;
    }

    if (ev->parsed()) {
        const Checkpoint ckpt = load_checkpoint(ev_ckpt);
        const Dataset data = read_dataset(ev_data);
        const RunReport report = evaluate(ckpt, data);
        print_report_summary(report);
        if (!ev_out.empty()) write_report_files(ev_out, "eval", report);
        return kExitOk;
    }

    if (ab->parsed()) {
        const TrainConfig base = resolve_config(ab_args);
        const Dataset data = read_dataset(ab_data);
        const AblationTable table = ablate(default_ablation_matrix(base), data, ab_out);
        for (const auto& row : table.rows) {
            std::cout << row.name << ": ";
            if (row.failed) {
                std::cout << "FAILED (" << row.error << ")\n";
                continue;
            }
            std::cout << "gaussians " << row.report.final_gaussians;
            for (const auto& m : row.report.per_modality)
                std::cout << ", " << m.name << " " << m.psnr << " dB";
            if (row.report.has_language) std::cout << ", miou " << row.report.miou;
            std::cout << "\n";
        }
        std::cout << "table: " << (fs::path(ab_out) / "ablation.csv").string() << "\n";
        return kExitOk;
    }

    if (cal->parsed()) {
        TrainConfig base = resolve_config(cal_args);
        const Dataset data = read_dataset(cal_data);
        if (cal_candidates.empty())
            cal_candidates = {5e-8, 1e-7, 2e-7, 4e-7, 8e-7};
        const CalibrationResult result =
            calibrate_grad_threshold(base, data, cal_candidates);
        std::ostringstream csv;
        csv << "grad_threshold,final_gaussians,mean_psnr\n";
        for (const auto& row : result.rows) {
            csv << row.grad_threshold << ',' << row.final_gaussians << ',' << row.mean_psnr
                << "\n";
            std::cout << "threshold " << row.grad_threshold << ": " << row.final_gaussians
                      << " gaussians, mean psnr " << row.mean_psnr << "\n";
        }
        std::cout << "recommended grad_threshold: " << result.recommended << "\n";
        if (!cal_out.empty()) {
            std::ofstream f(cal_out);
            f << csv.str();
        }
        return kExitOk;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}
