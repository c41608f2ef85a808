#include "mmsplat/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace mmsplat {

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimK1 = 0.01;
constexpr double kSsimK2 = 0.03;

void require_same_shape(const ModalityImage& a, const ModalityImage& b, const char* who) {
    if (!a.same_shape(b)) throw std::invalid_argument(std::string(who) + ": shape mismatch");
}

std::vector<double> ssim_kernel() {
    std::vector<double> k(kSsimWindow);
    const int half = kSsimWindow / 2;
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - half;
        k[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
        sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
}

// Zero-padded separable convolution applied to several planes at once; the
// horizontal pass reads each source row once per plane, the vertical pass
// accumulates row-by-row.
void conv_same_multi(std::vector<std::vector<double>*> planes, int W, int H,
                     const std::vector<double>& k) {
    const int taps = static_cast<int>(k.size());
    const int half = taps / 2;
    static thread_local std::vector<double> tmp;
    for (auto* plane : planes) {
        tmp.assign(plane->size(), 0.0);
        const std::vector<double>& src = *plane;
        for (int r = 0; r < H; ++r) {
            const double* row = src.data() + static_cast<std::size_t>(r) * W;
            double* out = tmp.data() + static_cast<std::size_t>(r) * W;
            const int interior_end = W - half;
            int c = 0;
            for (; c < std::min(half, W); ++c) {
                double acc = 0.0;
                for (int t = std::max(-half, -c); t <= std::min(half, W - 1 - c); ++t)
                    acc += k[static_cast<std::size_t>(t + half)] * row[c + t];
                out[c] = acc;
            }
            for (; c < interior_end; ++c) {
                double acc = 0.0;
                const double* p = row + c - half;
                for (int t = 0; t < taps; ++t) acc += k[static_cast<std::size_t>(t)] * p[t];
                out[c] = acc;
            }
            for (; c < W; ++c) {
                double acc = 0.0;
                for (int t = std::max(-half, -c); t <= std::min(half, W - 1 - c); ++t)
                    acc += k[static_cast<std::size_t>(t + half)] * row[c + t];
                out[c] = acc;
            }
        }
        std::fill(plane->begin(), plane->end(), 0.0);
        for (int r = 0; r < H; ++r) {
            const int t0 = std::max(-half, -r);
            const int t1 = std::min(half, H - 1 - r);
            double* out = plane->data() + static_cast<std::size_t>(r) * W;
            for (int t = t0; t <= t1; ++t) {
                const double kt = k[static_cast<std::size_t>(t + half)];
                const double* p = tmp.data() + static_cast<std::size_t>(r + t) * W;
                for (int c = 0; c < W; ++c) out[c] += kt * p[c];
            }
        }
    }
}

struct SsimChannelResult {
    double mean_ssim;
    std::vector<double> d_render;  // d(mean ssim)/d(render plane)
};

// Windowed SSIM of one channel with its analytic gradient. Local statistics
// use zero-padded windows; the adjoint of that convolution is the same
// convolution because the kernel is symmetric.
SsimChannelResult ssim_channel(const std::vector<double>& x, const std::vector<double>& y,
                               int W, int H) {
    static const std::vector<double> kernel = ssim_kernel();
    const std::size_t n = x.size();
    const double c1 = kSsimK1 * kSsimK1;  // data range 1
    const double c2 = kSsimK2 * kSsimK2;

    std::vector<double> mu_x = x, mu_y = y, uxx(n), uyy(n), uxy(n);
    for (std::size_t i = 0; i < n; ++i) {
        uxx[i] = x[i] * x[i];
        uyy[i] = y[i] * y[i];
        uxy[i] = x[i] * y[i];
    }
    conv_same_multi({&mu_x, &mu_y, &uxx, &uyy, &uxy}, W, H, kernel);

    std::vector<double> d_mu(n), d_uxx(n), d_uxy(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double mx = mu_x[i], my = mu_y[i];
        const double sxx = uxx[i] - mx * mx;
        const double syy = uyy[i] - my * my;
        const double sxy = uxy[i] - mx * my;
        const double a1 = 2.0 * mx * my + c1;
        const double a2 = 2.0 * sxy + c2;
        const double b1 = mx * mx + my * my + c1;
        const double b2 = sxx + syy + c2;
        const double denom = b1 * b2;
        const double s = (a1 * a2) / denom;
        total += s;

        const double ds_da1 = a2 / denom;
        const double ds_da2 = a1 / denom;
        const double ds_db1 = -s / b1;
        const double ds_db2 = -s / b2;
        const double ds_dmx = ds_da1 * 2.0 * my + ds_db1 * 2.0 * mx;
        const double ds_dsxx = ds_db2;
        const double ds_dsxy = ds_da2 * 2.0;
        // Through sxx = uxx - mx^2 and sxy = uxy - mx*my.
        d_mu[i] = ds_dmx + ds_dsxx * (-2.0 * mx) + ds_dsxy * (-my);
        d_uxx[i] = ds_dsxx;
        d_uxy[i] = ds_dsxy;
    }

    conv_same_multi({&d_mu, &d_uxx, &d_uxy}, W, H, kernel);

    SsimChannelResult out;
    out.mean_ssim = total / static_cast<double>(n);
    out.d_render.resize(n);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        out.d_render[i] = inv_n * (d_mu[i] + 2.0 * x[i] * d_uxx[i] + y[i] * d_uxy[i]);
    return out;
}

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

double mean_ssim(const ModalityImage& render, const ModalityImage& truth) {
    require_same_shape(render, truth, "mean_ssim");
    const int W = render.width, H = render.height, C = render.channels;
    const std::size_t plane = static_cast<std::size_t>(W) * H;
    std::vector<double> xc(plane), yc(plane);
    double acc = 0.0;
    for (int ch = 0; ch < C; ++ch) {
        for (int r = 0; r < H; ++r)
            for (int c = 0; c < W; ++c) {
                xc[static_cast<std::size_t>(r) * W + c] = render.at(r, c, ch);
                yc[static_cast<std::size_t>(r) * W + c] = truth.at(r, c, ch);
            }
        acc += ssim_channel(xc, yc, W, H).mean_ssim;
    }
    return acc / C;
}

double total_variation(const ModalityImage& img) {
    const int W = img.width, H = img.height, C = img.channels;
    double sum = 0.0;
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c)
            for (int ch = 0; ch < C; ++ch) {
                if (c + 1 < W) sum += std::abs(img.at(r, c + 1, ch) - img.at(r, c, ch));
                if (r + 1 < H) sum += std::abs(img.at(r + 1, c, ch) - img.at(r, c, ch));
            }
    return sum / (static_cast<double>(W) * H * C);
}

LossResult loss_rgb_like(const ModalityImage& render, const ModalityImage& truth,
                         double lambda_ssim) {
    require_same_shape(render, truth, "loss_rgb_like");
    const int W = render.width, H = render.height, C = render.channels;
    const std::size_t plane = static_cast<std::size_t>(W) * H;
    const double inv_n = 1.0 / static_cast<double>(plane * C);

    LossResult out;
    out.d_render = ModalityImage(render.modality_id, W, H, C);

    double l1 = 0.0;
    for (std::size_t i = 0; i < render.data.size(); ++i) {
        const double diff = render.data[i] - truth.data[i];
        l1 += std::abs(diff);
        out.d_render.data[i] = (1.0 - lambda_ssim) * sgn(diff) * inv_n;
    }
    l1 *= inv_n;

    // Channel-wise SSIM, averaged.
    std::vector<double> xc(plane), yc(plane);
    double mean_ssim = 0.0;
    for (int ch = 0; ch < C; ++ch) {
        for (int r = 0; r < H; ++r)
            for (int c = 0; c < W; ++c) {
                xc[static_cast<std::size_t>(r) * W + c] = render.at(r, c, ch);
                yc[static_cast<std::size_t>(r) * W + c] = truth.at(r, c, ch);
            }
        const SsimChannelResult sr = ssim_channel(xc, yc, W, H);
        mean_ssim += sr.mean_ssim / C;
        const double scale = -lambda_ssim / C;  // d(1 - mean ssim)/d render
        for (int r = 0; r < H; ++r)
            for (int c = 0; c < W; ++c)
                out.d_render.at(r, c, ch) += scale * sr.d_render[static_cast<std::size_t>(r) * W + c];
    }

    out.breakdown.l1 = l1;
    out.breakdown.dssim = 1.0 - mean_ssim;
    out.value = (1.0 - lambda_ssim) * l1 + lambda_ssim * out.breakdown.dssim;
    return out;
}

LossResult loss_thermal(const ModalityImage& render, const ModalityImage& truth,
                        double lambda_smooth, double lambda_ssim) {
    LossResult out = loss_rgb_like(render, truth, lambda_ssim);
    const int W = render.width, H = render.height, C = render.channels;
    const double inv_n = 1.0 / (static_cast<double>(W) * H * C);

    double tv = 0.0;
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c)
            for (int ch = 0; ch < C; ++ch) {
                if (c + 1 < W) {
                    const double d = render.at(r, c + 1, ch) - render.at(r, c, ch);
                    tv += std::abs(d);
                    const double s = lambda_smooth * sgn(d) * inv_n;
                    out.d_render.at(r, c + 1, ch) += s;
                    out.d_render.at(r, c, ch) -= s;
                }
                if (r + 1 < H) {
                    const double d = render.at(r + 1, c, ch) - render.at(r, c, ch);
                    tv += std::abs(d);
                    const double s = lambda_smooth * sgn(d) * inv_n;
                    out.d_render.at(r + 1, c, ch) += s;
                    out.d_render.at(r, c, ch) -= s;
                }
            }
    out.breakdown.smooth = tv * inv_n;
    out.value += lambda_smooth * out.breakdown.smooth;
    return out;
}

LossResult loss_language(const ModalityImage& render, const ModalityImage& truth) {
    require_same_shape(render, truth, "loss_language");
    const double inv_n = 1.0 / static_cast<double>(render.data.size());
    LossResult out;
    out.d_render = ModalityImage(render.modality_id, render.width, render.height,
                                 render.channels);
    double l1 = 0.0;
    for (std::size_t i = 0; i < render.data.size(); ++i) {
        const double diff = render.data[i] - truth.data[i];
        l1 += std::abs(diff);
        out.d_render.data[i] = sgn(diff) * inv_n;
    }
    out.breakdown.feature_l1 = l1 * inv_n;
    out.value = out.breakdown.feature_l1;
    return out;
}

LossResult modality_loss(const ModalityDescriptor& desc, const ModalityImage& render,
                         const ModalityImage& truth, double lambda_ssim) {
    switch (desc.loss_kind) {
        case LossKind::L1Dssim: return loss_rgb_like(render, truth, lambda_ssim);
        case LossKind::L1DssimSmooth:
            return loss_thermal(render, truth, desc.smooth_weight, lambda_ssim);
        case LossKind::FeatureL1: return loss_language(render, truth);
    }
    throw std::invalid_argument("modality_loss: unknown loss kind");
}

LossReport total_loss(const std::vector<ModalityDescriptor>& roster,
                      const std::vector<LossResult>& losses) {
    if (roster.size() != losses.size())
        throw std::invalid_argument("total_loss: one loss per declared modality required");
    LossReport report;
    for (std::size_t m = 0; m < roster.size(); ++m) {
        LossReport::Entry e;
        e.modality_id = roster[m].id;
        e.name = roster[m].name;
        e.weight = roster[m].loss_weight;
        e.loss = losses[m].value;
        e.breakdown = losses[m].breakdown;
        report.per_modality.push_back(e);
        report.total += e.weight * e.loss;
    }
    return report;
}

}  // namespace mmsplat
