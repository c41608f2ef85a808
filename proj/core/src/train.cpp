#include "mmsplat/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "mmsplat/backward.hpp"
#include "mmsplat/losses.hpp"
#include "mmsplat/metrics.hpp"
#include "mmsplat/synth.hpp"

namespace mmsplat {

using nlohmann::json;

namespace {

constexpr int kHistogramBins = 20;

double scheduled_means_lr(const TrainConfig& cfg, std::uint64_t iteration) {
    const int horizon = cfg.lr_schedule_iterations > 0 ? cfg.lr_schedule_iterations
                                                       : cfg.iterations;
    const double t = std::min(1.0, static_cast<double>(iteration) / std::max(1, horizon));
    return cfg.lr.means * std::pow(cfg.means_lr_final / cfg.lr.means, t);
}

void check_roster_match(const std::vector<ModalityDescriptor>& a,
                        const std::vector<ModalityDescriptor>& b) {
    for (const auto& ma : a) {
        const ModalityDescriptor* found = nullptr;
        for (const auto& mb : b)
            if (mb.id == ma.id && mb.name == ma.name && mb.feature_dim == ma.feature_dim)
                found = &mb;
        if (!found)
            throw std::runtime_error("modality roster mismatch: modality '" + ma.name +
                                     "' (id " + std::to_string(ma.id) +
                                     ", dim " + std::to_string(ma.feature_dim) +
                                     ") has no counterpart");
    }
    if (a.size() != b.size())
        throw std::runtime_error("modality roster mismatch: different modality counts");
}

void apply_weight_overrides(std::vector<ModalityDescriptor>& roster,
                            const std::map<std::string, double>& overrides) {
    for (const auto& [name, weight] : overrides) {
        bool found = false;
        for (auto& m : roster)
            if (m.name == name) {
                m.loss_weight = weight;
                found = true;
            }
        if (!found)
            throw std::invalid_argument("config: loss_weight_override names unknown modality '" +
                                        name + "'");
    }
}

IndicatorHistogram make_histogram(const std::string& name, double lo, double hi) {
    IndicatorHistogram h;
    h.name = name;
    h.lo = lo;
    h.hi = hi;
    h.bins.assign(kHistogramBins, 0);
    return h;
}

void bump(IndicatorHistogram& h, double value) {
    const double t = (value - h.lo) / (h.hi - h.lo);
    int bin = static_cast<int>(t * kHistogramBins);
    bin = std::max(0, std::min(kHistogramBins - 1, bin));
    h.bins[static_cast<std::size_t>(bin)] += 1;
}

std::vector<IndicatorHistogram> build_indicator_histograms(const Scene& scene) {
    std::vector<IndicatorHistogram> out;
    for (const auto& m : scene.modalities) {
        IndicatorHistogram h = make_histogram(m.name, 0.0, 1.0);
        for (const auto& g : scene.gaussians) {
            if (scene.mode == SceneMode::SharedOpacity) {
                bump(h, sigmoid(g.shared_opacity_logit));
                continue;
            }
            const auto& slot = g.slots[static_cast<std::size_t>(m.id)];
            if (!slot.on)
                h.off_count += 1;
            else
                bump(h, sigmoid(slot.indicator_logit));
        }
        out.push_back(std::move(h));
    }
    return out;
}

std::vector<IndicatorHistogram> build_diff_histograms(const Scene& scene) {
    std::vector<IndicatorHistogram> out;
    for (std::size_t a = 0; a < scene.modalities.size(); ++a) {
        for (std::size_t b = a + 1; b < scene.modalities.size(); ++b) {
            IndicatorHistogram h = make_histogram(
                scene.modalities[a].name + "-" + scene.modalities[b].name, -1.0, 1.0);
            for (std::size_t g = 0; g < scene.size(); ++g)
                bump(h, scene.effective_alpha(g, static_cast<int>(a)) -
                            scene.effective_alpha(g, static_cast<int>(b)));
            out.push_back(std::move(h));
        }
    }
    return out;
}

// Metrics, histograms, and counts for the scene as it stands.
RunReport build_report(const Scene& scene, const Dataset& data, const RenderOptions& opts,
                       int workers) {
    RenderOptions o = opts;
    o.workers = workers != 0 ? workers : opts.workers;
    RunReport report;
    for (const auto& m : scene.modalities) {
        const RenderResult rr = render_modality(scene, m.id, o);
        const ModalityImage& truth = data.truth_for(m.id);
        RunReport::ModalityMetrics mm;
        mm.id = m.id;
        mm.name = m.name;
        mm.psnr = psnr(rr.image, truth);
        mm.ssim = ssim(rr.image, truth);
        report.per_modality.push_back(mm);

        if (m.loss_kind == LossKind::FeatureL1 && !data.labels.empty() &&
            !report.has_language) {
            const auto table = data.label_feature_table();
            report.miou = miou(nearest_label_masks(rr.image, table), data.masks);
            report.localization =
                localization_accuracy(peak_relevancy_points(rr.image, table), data.masks);
            report.has_language = true;
        }
    }
    report.final_gaussians = scene.size();
    report.indicator_histograms = build_indicator_histograms(scene);
    report.indicator_diff_histograms = build_diff_histograms(scene);
    return report;
}

}  // namespace

double RunReport::mean_psnr() const {
    double acc = 0.0;
    for (const auto& m : per_modality) acc += m.psnr;
    return per_modality.empty() ? 0.0 : acc / static_cast<double>(per_modality.size());
}

TrainOutput train(const TrainConfig& cfg, const Dataset& data,
                  const std::filesystem::path& out_dir, const Checkpoint* resume) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();

    Scene scene;
    OptimizerState opt;
    std::uint64_t start_iter = 0;

    if (resume) {
        check_roster_match(resume->scene.modalities, data.modalities);
        if (resume->scene.viewport.width != data.width ||
            resume->scene.viewport.height != data.height)
            throw std::runtime_error("resume checkpoint viewport does not match dataset");
        scene = resume->scene;
        start_iter = resume->iteration;
        opt = resume->has_optimizer ? resume->optimizer
                                    : OptimizerState(scene.size(), scene.modalities);
    } else {
        scene = init_scene_from_truth(data, cfg.init_gaussians, cfg.seed, cfg.mode);
        opt = OptimizerState(scene.size(), scene.modalities);
    }
    apply_weight_overrides(scene.modalities, cfg.loss_weight_override);
    scene.validate();
    if (start_iter >= static_cast<std::uint64_t>(cfg.iterations))
        throw std::invalid_argument("config: iterations must exceed the resumed iteration");

    const RenderOptions opts = cfg.render_options();
    const DensifyConfig dense = cfg.effective_densify();

    if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
    const std::filesystem::path densify_log =
        out_dir.empty() ? std::filesystem::path{} : out_dir / "densify_log.csv";

    RunReport report;
    report.count_trajectory.push_back({start_iter, scene.size()});

    std::vector<LossResult> losses(scene.modalities.size());
    for (std::uint64_t it = start_iter; it < static_cast<std::uint64_t>(cfg.iterations); ++it) {
        LearningRates lr_it = cfg.lr;
        lr_it.means = scheduled_means_lr(cfg, it);

        std::vector<GradientSet> grads;
        grads.reserve(scene.modalities.size());
        for (const auto& m : scene.modalities) {
            RenderResult rr = render_modality(scene, m.id, opts);
            losses[static_cast<std::size_t>(m.id)] =
                modality_loss(m, rr.image, data.truth_for(m.id), cfg.lambda_ssim);
            LossResult& loss = losses[static_cast<std::size_t>(m.id)];
            // The modality weight scales the upstream gradient, so the
            // accumulated positional gradients are the ones that actually
            // reach the parameters.
            for (double& v : loss.d_render.data) v *= m.loss_weight;
            grads.push_back(backward_modality(scene, m.id, rr.trace, loss.d_render, cfg.workers));
        }
        const LossReport loss_report = total_loss(scene.modalities, losses);
        if (it == start_iter) report.initial_loss = loss_report.total;
        report.final_loss = loss_report.total;

        accumulate_positional_grads(scene, grads);
        optimizer_step(scene, grads, lr_it, opt);

        const std::uint64_t next = it + 1;
        const bool densify_due =
            next > static_cast<std::uint64_t>(cfg.densify_start) &&
            next <= static_cast<std::uint64_t>(cfg.densify_stop) &&
            (next - static_cast<std::uint64_t>(cfg.densify_start)) %
                    static_cast<std::uint64_t>(dense.interval) ==
                0;
        if (densify_due) {
            const DensifyReport dr = densify_and_prune(scene, dense, cfg.seed, next);
            opt.remap(dr.provenance);
            report.count_trajectory.push_back({next, scene.size()});
            if (!densify_log.empty()) append_densify_log(densify_log, next, dr, scene.size());
        }
    }

    TrainOutput out;
    out.checkpoint.scene = std::move(scene);
    out.checkpoint.iteration = static_cast<std::uint64_t>(cfg.iterations);
    out.checkpoint.has_optimizer = true;
    out.checkpoint.optimizer = std::move(opt);

    RunReport metrics = build_report(out.checkpoint.scene, data, opts, cfg.workers);
    metrics.initial_loss = report.initial_loss;
    metrics.final_loss = report.final_loss;
    metrics.count_trajectory = std::move(report.count_trajectory);
    metrics.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.report = std::move(metrics);

    if (!out_dir.empty()) {
        save_checkpoint(out_dir / "checkpoint.mmsp", out.checkpoint);
        write_report_files(out_dir, "report", out.report);
        std::ofstream cfg_out(out_dir / "config.json");
        cfg_out << train_config_to_json_text(cfg) << "\n";
    }
    return out;
}

RunReport evaluate(const Checkpoint& ckpt, const Dataset& data, const RenderOptions& opts,
                   int workers) {
    check_roster_match(ckpt.scene.modalities, data.modalities);
    if (ckpt.scene.viewport.width != data.width || ckpt.scene.viewport.height != data.height)
        throw std::runtime_error("checkpoint viewport does not match dataset");
    RunReport report = build_report(ckpt.scene, data, opts, workers);
    report.count_trajectory.push_back({ckpt.iteration, ckpt.scene.size()});
    return report;
}

std::string report_to_json_text(const RunReport& report, bool include_timing) {
    json j;
    json mods = json::array();
    for (const auto& m : report.per_modality)
        mods.push_back({{"id", m.id}, {"name", m.name}, {"psnr", m.psnr}, {"ssim", m.ssim}});
    j["per_modality"] = mods;
    if (report.has_language) {
        j["miou"] = report.miou;
        j["localization_accuracy"] = report.localization;
    }
    j["initial_loss"] = report.initial_loss;
    j["final_loss"] = report.final_loss;
    j["final_gaussians"] = report.final_gaussians;
    json traj = json::array();
    for (const auto& [iter, count] : report.count_trajectory)
        traj.push_back({{"iteration", iter}, {"count", count}});
    j["count_trajectory"] = traj;
    auto hist_json = [](const std::vector<IndicatorHistogram>& hs) {
        json arr = json::array();
        for (const auto& h : hs)
            arr.push_back({{"name", h.name},
                           {"lo", h.lo},
                           {"hi", h.hi},
                           {"bins", h.bins},
                           {"off_count", h.off_count}});
        return arr;
    };
    j["indicator_histograms"] = hist_json(report.indicator_histograms);
    j["indicator_diff_histograms"] = hist_json(report.indicator_diff_histograms);
    if (include_timing) j["wall_clock_seconds"] = report.wall_clock_seconds;
    return j.dump(2);
}

void write_report_files(const std::filesystem::path& dir, const std::string& stem,
                        const RunReport& report) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir / (stem + ".json"));
        if (!f) throw std::runtime_error("cannot write report json");
        f << report_to_json_text(report, true) << "\n";
    }
    std::ofstream f(dir / (stem + ".csv"));
    if (!f) throw std::runtime_error("cannot write report csv");
    f << "metric,modality,value\n";
    for (const auto& m : report.per_modality) {
        f << "psnr," << m.name << ',' << m.psnr << "\n";
        f << "ssim," << m.name << ',' << m.ssim << "\n";
    }
    if (report.has_language) {
        f << "miou,language," << report.miou << "\n";
        f << "localization_accuracy,language," << report.localization << "\n";
    }
    f << "final_gaussians,," << report.final_gaussians << "\n";
    f << "initial_loss,," << report.initial_loss << "\n";
    f << "final_loss,," << report.final_loss << "\n";
    f << "wall_clock_seconds,," << report.wall_clock_seconds << "\n";
}

AblationTable ablate(const std::vector<std::pair<std::string, TrainConfig>>& matrix,
                     const Dataset& data, const std::filesystem::path& out_dir) {
    if (matrix.empty()) throw std::invalid_argument("ablate: empty configuration matrix");
    AblationTable table;
    for (const auto& [name, cfg] : matrix) {
        AblationRow row;
        row.name = name;
        try {
            const std::filesystem::path run_dir =
                out_dir.empty() ? std::filesystem::path{} : out_dir / name;
            row.report = train(cfg, data, run_dir).report;
        } catch (const std::exception& e) {
            row.failed = true;
            row.error = e.what();
        }
        table.rows.push_back(std::move(row));
    }
    if (!out_dir.empty()) write_ablation_files(out_dir, "ablation", table, data.modalities);
    return table;
}

void write_ablation_files(const std::filesystem::path& dir, const std::string& stem,
                          const AblationTable& table,
                          const std::vector<ModalityDescriptor>& roster) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir / (stem + ".csv"));
        f << "method";
        for (const auto& m : roster) f << ',' << m.name << "_psnr," << m.name << "_ssim";
        f << ",miou,localization_accuracy,gaussians,status\n";
        for (const auto& row : table.rows) {
            f << row.name;
            if (row.failed) {
                for (std::size_t i = 0; i < roster.size(); ++i) f << ",,";
                f << ",,,FAILED: " << row.error << "\n";
                continue;
            }
            for (const auto& m : row.report.per_modality)
                f << ',' << m.psnr << ',' << m.ssim;
            if (row.report.has_language)
                f << ',' << row.report.miou << ',' << row.report.localization;
            else
                f << ",,";
            f << ',' << row.report.final_gaussians << ",ok\n";
        }
    }
    json j = json::array();
    for (const auto& row : table.rows) {
        json r;
        r["method"] = row.name;
        if (row.failed) {
            r["status"] = "failed";
            r["error"] = row.error;
        } else {
            r["status"] = "ok";
            r["report"] = json::parse(report_to_json_text(row.report, true));
        }
        j.push_back(r);
    }
    std::ofstream f(dir / (stem + ".json"));
    f << j.dump(2) << "\n";
}

CalibrationResult calibrate_grad_threshold(const TrainConfig& base, const Dataset& data,
                                           const std::vector<double>& candidates) {
    if (candidates.empty())
        throw std::invalid_argument("calibrate_grad_threshold: no candidates");
    CalibrationResult result;
    for (const double c : candidates) {
        TrainConfig cfg = base;
        cfg.densify.grad_threshold = c;
        const RunReport report = train(cfg, data).report;
        result.rows.push_back({c, report.final_gaussians, report.mean_psnr()});
    }
    const CalibrationRow* best = &result.rows.front();
    for (const auto& row : result.rows) {
        if (row.mean_psnr > best->mean_psnr ||
            (row.mean_psnr == best->mean_psnr && row.final_gaussians < best->final_gaussians))
            best = &row;
    }
    result.recommended = best->grad_threshold;
    return result;
}

}  // namespace mmsplat
