#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "mmsplat/train.hpp"

namespace mmsplat {

using nlohmann::json;

void TrainConfig::validate() const {
    if (iterations < 1) throw std::invalid_argument("config: iterations must be >= 1");
    if (init_gaussians < 1) throw std::invalid_argument("config: init_gaussians must be >= 1");
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument(std::string("config: ") + name + " must be > 0");
    };
    positive(lr.means, "lr.means");
    positive(means_lr_final, "means_lr_final");
    positive(lr.log_scales, "lr.log_scales");
    positive(lr.rotation, "lr.rotation");
    positive(lr.indicators, "lr.indicators");
    positive(lr.features, "lr.features");
    if (densify_start < 0 || densify_stop < densify_start || densify_stop > iterations)
        throw std::invalid_argument("config: densify window must satisfy 0 <= start <= stop <= iterations");
    if (densify.interval < 1) throw std::invalid_argument("config: densify.interval must be >= 1");
    auto nonneg = [](double v, const char* name) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument(std::string("config: ") + name + " must be >= 0");
    };
    nonneg(densify.grad_threshold, "densify.grad_threshold");
    nonneg(densify.decomp_threshold, "densify.decomp_threshold");
    nonneg(densify.size_split_threshold, "densify.size_split_threshold");
    nonneg(densify.opacity_prune_threshold, "densify.opacity_prune_threshold");
    nonneg(densify.single_modal_prune_threshold, "densify.single_modal_prune_threshold");
    if (!(cutoff >= 0.0 && cutoff < 1.0))
        throw std::invalid_argument("config: cutoff must lie in [0,1)");
    if (!(lambda_ssim >= 0.0 && lambda_ssim <= 1.0))
        throw std::invalid_argument("config: lambda_ssim must lie in [0,1]");
    if (lr_schedule_iterations < 0)
        throw std::invalid_argument("config: lr_schedule_iterations must be >= 0");
}

RenderOptions TrainConfig::render_options() const {
    RenderOptions o = RenderOptions::fast();
    o.cutoff = cutoff;
    o.background = background;
    o.workers = workers;
    return o;
}

DensifyConfig TrainConfig::effective_densify() const {
    DensifyConfig d = densify;
    d.mode = prune_mode;
    d.enable_decomposition = enable_decomposition;
    return d;
}

namespace {

const char* mode_name(SceneMode m) {
    return m == SceneMode::SharedOpacity ? "shared_opacity" : "per_modality_indicator";
}

SceneMode mode_from_name(const std::string& s) {
    if (s == "shared_opacity") return SceneMode::SharedOpacity;
    if (s == "per_modality_indicator") return SceneMode::PerModalityIndicator;
    throw std::invalid_argument("config: unknown mode: " + s);
}

const char* prune_name(PruneMode m) { return m == PruneMode::Hard ? "hard" : "soft"; }

PruneMode prune_from_name(const std::string& s) {
    if (s == "hard") return PruneMode::Hard;
    if (s == "soft") return PruneMode::Soft;
    throw std::invalid_argument("config: unknown prune_mode: " + s);
}

}  // namespace

std::string train_config_to_json_text(const TrainConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["iterations"] = c.iterations;
    j["init_gaussians"] = c.init_gaussians;
    j["mode"] = mode_name(c.mode);
    j["enable_decomposition"] = c.enable_decomposition;
    j["prune_mode"] = prune_name(c.prune_mode);
    j["learning_rates"] = {{"means", c.lr.means},
                           {"means_final", c.means_lr_final},
                           {"log_scales", c.lr.log_scales},
                           {"rotation", c.lr.rotation},
                           {"indicators", c.lr.indicators},
                           {"features", c.lr.features}};
    j["lr_schedule_iterations"] = c.lr_schedule_iterations;
    json d;
    d["start"] = c.densify_start;
    d["stop"] = c.densify_stop;
    d["interval"] = c.densify.interval;
    d["grad_threshold"] = c.densify.grad_threshold;
    d["decomp_threshold"] = c.densify.decomp_threshold;
    d["size_split_threshold"] = c.densify.size_split_threshold;
    d["opacity_prune_threshold"] = c.densify.opacity_prune_threshold;
    d["single_modal_prune_threshold"] = c.densify.single_modal_prune_threshold;
    d["clone_nudge_factor"] = c.densify.clone_nudge_factor;
    d["split_scale_divisor"] = c.densify.split_scale_divisor;
    d["partial_fanout"] = c.densify.partial_fanout;
    if (c.densify.world_size_cap)
        d["world_size_cap"] = *c.densify.world_size_cap;
    else
        d["world_size_cap"] = nullptr;
    j["densify"] = d;
    j["lambda_ssim"] = c.lambda_ssim;
    j["cutoff"] = c.cutoff;
    j["background"] = c.background;
    j["workers"] = c.workers;
    j["loss_weight_override"] = c.loss_weight_override;
    return j.dump(2);
}

TrainConfig train_config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
    }
    TrainConfig c;
    try {
        c.seed = j.value("seed", c.seed);
        c.iterations = j.value("iterations", c.iterations);
        c.init_gaussians = j.value("init_gaussians", c.init_gaussians);
        if (j.contains("mode")) c.mode = mode_from_name(j["mode"].get<std::string>());
        c.enable_decomposition = j.value("enable_decomposition", c.enable_decomposition);
        if (j.contains("prune_mode"))
            c.prune_mode = prune_from_name(j["prune_mode"].get<std::string>());
        if (j.contains("learning_rates")) {
            const auto& l = j["learning_rates"];
            c.lr.means = l.value("means", c.lr.means);
            c.means_lr_final = l.value("means_final", c.means_lr_final);
            c.lr.log_scales = l.value("log_scales", c.lr.log_scales);
            c.lr.rotation = l.value("rotation", c.lr.rotation);
            c.lr.indicators = l.value("indicators", c.lr.indicators);
            c.lr.features = l.value("features", c.lr.features);
        }
        c.lr_schedule_iterations = j.value("lr_schedule_iterations", c.lr_schedule_iterations);
        if (j.contains("densify")) {
            const auto& d = j["densify"];
            c.densify_start = d.value("start", c.densify_start);
            c.densify_stop = d.value("stop", c.densify_stop);
            c.densify.interval = d.value("interval", c.densify.interval);
            c.densify.grad_threshold = d.value("grad_threshold", c.densify.grad_threshold);
            c.densify.decomp_threshold = d.value("decomp_threshold", c.densify.decomp_threshold);
            c.densify.size_split_threshold =
                d.value("size_split_threshold", c.densify.size_split_threshold);
            c.densify.opacity_prune_threshold =
                d.value("opacity_prune_threshold", c.densify.opacity_prune_threshold);
            c.densify.single_modal_prune_threshold =
                d.value("single_modal_prune_threshold", c.densify.single_modal_prune_threshold);
            c.densify.clone_nudge_factor =
                d.value("clone_nudge_factor", c.densify.clone_nudge_factor);
            c.densify.split_scale_divisor =
                d.value("split_scale_divisor", c.densify.split_scale_divisor);
            c.densify.partial_fanout = d.value("partial_fanout", c.densify.partial_fanout);
            if (d.contains("world_size_cap") && !d["world_size_cap"].is_null())
                c.densify.world_size_cap = d["world_size_cap"].get<double>();
        }
        c.lambda_ssim = j.value("lambda_ssim", c.lambda_ssim);
        c.cutoff = j.value("cutoff", c.cutoff);
        c.background = j.value("background", c.background);
        c.workers = j.value("workers", c.workers);
        if (j.contains("loss_weight_override"))
            c.loss_weight_override =
                j["loss_weight_override"].get<std::map<std::string, double>>();
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

TrainConfig train_config_from_json_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("config: cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return train_config_from_json_text(text);
}

}  // namespace mmsplat
