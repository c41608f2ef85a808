#include "mmsplat/density.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "mmsplat/rng.hpp"

namespace mmsplat {

namespace {

Vec2 mean_grad(const ModalitySlot& s) {
    if (s.grad_count == 0) return {0.0, 0.0};
    const double inv = 1.0 / static_cast<double>(s.grad_count);
    return {s.grad_accum_vec.x * inv, s.grad_accum_vec.y * inv};
}

double mean_grad_norm(const ModalitySlot& s) {
    if (s.grad_count == 0) return 0.0;
    return s.grad_accum_norm / static_cast<double>(s.grad_count);
}

double max_mean_grad_norm(const ModalGaussian& g, bool shared_mode) {
    double best = 0.0;
    for (const auto& s : g.slots) {
        if (!shared_mode && !s.on) continue;
        best = std::max(best, mean_grad_norm(s));
    }
    return best;
}

double max_world_scale(const ModalGaussian& g) {
    return std::exp(std::max(g.log_scales.x, g.log_scales.y));
}

}  // namespace

double gradient_difference(const ModalGaussian& g, int modality_i, int modality_j) {
    const auto& si = g.slots.at(static_cast<std::size_t>(modality_i));
    const auto& sj = g.slots.at(static_cast<std::size_t>(modality_j));
    if (!si.on || !sj.on) return 0.0;
    if (si.grad_count == 0 || sj.grad_count == 0) return 0.0;  // no evidence of conflict
    return (mean_grad(si) - mean_grad(sj)).norm();
}

double max_pairwise_gradient_difference(const ModalGaussian& g) {
    double best = 0.0;
    for (std::size_t i = 0; i < g.slots.size(); ++i) {
        if (!g.slots[i].on) continue;
        for (std::size_t j = i + 1; j < g.slots.size(); ++j) {
            if (!g.slots[j].on) continue;
            best = std::max(best,
                            gradient_difference(g, static_cast<int>(i), static_cast<int>(j)));
        }
    }
    return best;
}

std::vector<ModalGaussian> decompose(const ModalGaussian& g) {
    if (g.active_slot_count() < 2)
        throw std::invalid_argument("decompose: gaussian is not multi-modal");
    std::vector<ModalGaussian> children;
    for (std::size_t m = 0; m < g.slots.size(); ++m) {
        if (!g.slots[m].on) continue;
        ModalGaussian child = g;
        for (std::size_t k = 0; k < child.slots.size(); ++k) {
            child.slots[k].on = (k == m);
            child.slots[k].reset_grad_accum();
        }
        children.push_back(std::move(child));
    }
    return children;
}

bool soft_prune(Scene& scene, std::size_t index, int modality_id) {
    ModalGaussian& g = scene.gaussians.at(index);
    ModalitySlot& slot = g.slots.at(static_cast<std::size_t>(modality_id));
    if (!slot.on) throw std::invalid_argument("soft_prune: modality already off");
    slot.on = false;
    if (g.active_slot_count() == 0) {
        scene.gaussians.erase(scene.gaussians.begin() + static_cast<std::ptrdiff_t>(index));
        return true;
    }
    return false;
}

DensifyReport densify_and_prune(Scene& scene, const DensifyConfig& cfg, std::uint64_t seed,
                                std::uint64_t pass_index) {
    DensifyReport report;
    const bool shared_mode = scene.mode == SceneMode::SharedOpacity;
    const std::size_t n0 = scene.size();
    if (n0 == 0) return report;

    // Provenance rows into the pre-pass list; composed through each step.
    std::vector<ModalGaussian> current = std::move(scene.gaussians);
    std::vector<std::int64_t> prov(n0);
    for (std::size_t i = 0; i < n0; ++i) prov[i] = static_cast<std::int64_t>(i);

    // --- step 1: multimodal decomposition --------------------------------
    if (cfg.enable_decomposition && !shared_mode) {
        std::vector<ModalGaussian> next;
        std::vector<std::int64_t> next_prov;
        next.reserve(current.size());
        next_prov.reserve(current.size());
        for (std::size_t i = 0; i < current.size(); ++i) {
            ModalGaussian& g = current[i];
            const bool fire = g.active_slot_count() >= 2 &&
                              max_pairwise_gradient_difference(g) > cfg.decomp_threshold;
            if (!fire) {
                next.push_back(std::move(g));
                next_prov.push_back(prov[i]);
                continue;
            }
            report.decomposed += 1;
            if (!cfg.partial_fanout) {
                for (auto& child : decompose(g)) {
                    next.push_back(std::move(child));
                    next_prov.push_back(-1);
                    report.decomposed_children += 1;
                }
            } else {
                // Peel off only the weaker side of the most conflicting pair.
                double best = -1.0;
                int peel = -1;
                for (std::size_t a = 0; a < g.slots.size(); ++a) {
                    if (!g.slots[a].on) continue;
                    for (std::size_t b = a + 1; b < g.slots.size(); ++b) {
                        if (!g.slots[b].on) continue;
                        const double gd =
                            gradient_difference(g, static_cast<int>(a), static_cast<int>(b));
                        if (gd > best) {
                            best = gd;
                            peel = mean_grad_norm(g.slots[a]) < mean_grad_norm(g.slots[b])
                                       ? static_cast<int>(a)
                                       : static_cast<int>(b);
                        }
                    }
                }
                ModalGaussian keeper = g;
                ModalGaussian peeled = g;
                for (std::size_t k = 0; k < g.slots.size(); ++k) {
                    keeper.slots[k].on = g.slots[k].on && static_cast<int>(k) != peel;
                    keeper.slots[k].reset_grad_accum();
                    peeled.slots[k].on = static_cast<int>(k) == peel;
                    peeled.slots[k].reset_grad_accum();
                }
                next.push_back(std::move(keeper));
                next_prov.push_back(-1);
                next.push_back(std::move(peeled));
                next_prov.push_back(-1);
                report.decomposed_children += 2;
            }
        }
        current = std::move(next);
        prov = std::move(next_prov);
    }

    // --- step 2: clone small / split large high-gradient gaussians -------
    {
        std::vector<ModalGaussian> next;
        std::vector<std::int64_t> next_prov;
        next.reserve(current.size());
        next_prov.reserve(current.size());
        for (std::size_t i = 0; i < current.size(); ++i) {
            ModalGaussian& g = current[i];
            // Fresh gaussians from step 1 carry zero accumulators and never fire.
            const bool fire = max_mean_grad_norm(g, shared_mode) > cfg.grad_threshold;
            if (!fire) {
                next.push_back(std::move(g));
                next_prov.push_back(prov[i]);
                continue;
            }
            if (max_world_scale(g) > cfg.size_split_threshold) {
                // Split: two children sampled within the parent, at reduced scale.
                report.split += 1;
                const double sx = std::exp(g.log_scales.x);
                const double sy = std::exp(g.log_scales.y);
                const Mat2 rot = Mat2::rotation(g.rotation);
                const double shrink = std::log(cfg.split_scale_divisor);
                const std::uint64_t key = rng::mix(seed, 0x73706c6974ULL, pass_index, i);
                for (int child_idx = 0; child_idx < 2; ++child_idx) {
                    ModalGaussian child = g;
                    const double nx = rng::normal(key, 2 * child_idx);
                    const double ny = rng::normal(key, 2 * child_idx + 1);
                    child.mean += rot * Vec2{nx * sx, ny * sy};
                    child.log_scales.x -= shrink;
                    child.log_scales.y -= shrink;
                    for (auto& s : child.slots) s.reset_grad_accum();
                    next.push_back(std::move(child));
                    next_prov.push_back(-1);
                }
            } else {
                // Clone: keep the parent, nudge the copy along the descent
                // direction of the mean positional gradient.
                report.cloned += 1;
                ModalGaussian copy = g;
                Vec2 dir{0.0, 0.0};
                for (const auto& s : g.slots) {
                    if (!shared_mode && !s.on) continue;
                    dir += mean_grad(s);
                }
                const double norm = dir.norm();
                if (norm > 0.0) {
                    const double step =
                        cfg.clone_nudge_factor *
                        std::sqrt(std::exp(g.log_scales.x) * std::exp(g.log_scales.y));
                    copy.mean += dir * (-step / norm);
                }
                for (auto& s : copy.slots) s.reset_grad_accum();
                next.push_back(std::move(g));
                next_prov.push_back(prov[i]);
                next.push_back(std::move(copy));
                next_prov.push_back(-1);
            }
        }
        current = std::move(next);
        prov = std::move(next_prov);
    }

    // --- step 3: prune -----------------------------------------------------
    {
        std::vector<ModalGaussian> next;
        std::vector<std::int64_t> next_prov;
        next.reserve(current.size());
        next_prov.reserve(current.size());
        for (std::size_t i = 0; i < current.size(); ++i) {
            ModalGaussian& g = current[i];
            if (cfg.world_size_cap && max_world_scale(g) > *cfg.world_size_cap) {
                report.hard_pruned += 1;
                continue;
            }
            bool remove = false;
            if (shared_mode) {
                remove = sigmoid(g.shared_opacity_logit) < cfg.opacity_prune_threshold;
            } else if (cfg.mode == PruneMode::Hard) {
                double max_alpha = 0.0;
                for (const auto& s : g.slots)
                    if (s.on) max_alpha = std::max(max_alpha, sigmoid(s.indicator_logit));
                remove = max_alpha < cfg.opacity_prune_threshold;
            } else {
                if (g.active_slot_count() >= 2) {
                    for (auto& s : g.slots) {
                        if (s.on && sigmoid(s.indicator_logit) < cfg.opacity_prune_threshold) {
                            s.on = false;
                            report.soft_pruned += 1;
                        }
                    }
                }
                const int active = g.active_slot_count();
                if (active == 0) {
                    remove = true;
                } else if (active == 1) {
                    for (const auto& s : g.slots)
                        if (s.on)
                            remove = sigmoid(s.indicator_logit) <
                                     cfg.single_modal_prune_threshold;
                }
            }
            if (remove) {
                report.hard_pruned += 1;
                continue;
            }
            next.push_back(std::move(g));
            next_prov.push_back(prov[i]);
        }
        current = std::move(next);
        prov = std::move(next_prov);
    }

    // --- step 4: reset accumulators ----------------------------------------
    for (auto& g : current)
        for (auto& s : g.slots) s.reset_grad_accum();

    scene.gaussians = std::move(current);
    report.provenance = std::move(prov);
    return report;
}

void append_densify_log(const std::filesystem::path& csv_path, std::uint64_t iteration,
                        const DensifyReport& report, std::size_t total_gaussians) {
    const bool fresh = !std::filesystem::exists(csv_path);
    std::ofstream f(csv_path, std::ios::app);
    if (!f) throw std::runtime_error("cannot open densify log: " + csv_path.string());
    if (fresh) f << "iteration,cloned,split,decomposed,soft_pruned,hard_pruned,total\n";
    f << iteration << ',' << report.cloned << ',' << report.split << ',' << report.decomposed
      << ',' << report.soft_pruned << ',' << report.hard_pruned << ',' << total_gaussians
      << '\n';
}

}  // namespace mmsplat
