#include "mmsplat/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mmsplat {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; big-endian hosts unsupported");

namespace {

constexpr char kMagic[4] = {'M', 'M', 'S', 'P'};
constexpr std::uint32_t kVersion = 1;

struct Writer {
    std::ofstream f;
    explicit Writer(const std::filesystem::path& p) : f(p, std::ios::binary) {
        if (!f) throw std::runtime_error("cannot open for writing: " + p.string());
    }
    void bytes(const void* data, std::size_t n) {
        f.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    }
    template <typename T>
    void pod(T v) {
        bytes(&v, sizeof(T));
    }
    void str(const std::string& s) {
        pod<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
};

struct Reader {
    std::ifstream f;
    explicit Reader(const std::filesystem::path& p) : f(p, std::ios::binary) {
        if (!f) throw std::runtime_error("cannot open for reading: " + p.string());
    }
    void bytes(void* data, std::size_t n) {
        f.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(f.gcount()) != n)
            throw std::runtime_error("truncated checkpoint");
    }
    template <typename T>
    T pod() {
        T v;
        bytes(&v, sizeof(T));
        return v;
    }
    std::string str() {
        const auto n = pod<std::uint32_t>();
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    const Scene& scene = ckpt.scene;
    Writer w(path);
    w.bytes(kMagic, 4);
    w.pod<std::uint32_t>(kVersion);
    w.pod<std::uint32_t>(ckpt.has_optimizer ? 1u : 0u);  // flags
    w.pod<std::uint64_t>(ckpt.iteration);
    w.pod<std::uint8_t>(static_cast<std::uint8_t>(scene.mode));

    w.pod<std::uint32_t>(static_cast<std::uint32_t>(scene.viewport.width));
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(scene.viewport.height));
    const Mat2& a = scene.viewport.world_to_pixel;
    w.pod<double>(a.a);
    w.pod<double>(a.b);
    w.pod<double>(a.c);
    w.pod<double>(a.d);
    w.pod<double>(scene.viewport.pixel_offset.x);
    w.pod<double>(scene.viewport.pixel_offset.y);

    w.pod<std::uint32_t>(static_cast<std::uint32_t>(scene.modalities.size()));
    for (const auto& m : scene.modalities) {
        w.pod<std::uint32_t>(static_cast<std::uint32_t>(m.id));
        w.str(m.name);
        w.pod<std::uint32_t>(static_cast<std::uint32_t>(m.feature_dim));
        w.pod<std::uint8_t>(static_cast<std::uint8_t>(m.loss_kind));
        w.pod<double>(m.loss_weight);
        w.pod<double>(m.smooth_weight);
    }

    w.pod<std::uint64_t>(scene.size());
    for (const auto& g : scene.gaussians) {
        w.pod<double>(g.mean.x);
        w.pod<double>(g.mean.y);
        w.pod<double>(g.log_scales.x);
        w.pod<double>(g.log_scales.y);
        w.pod<double>(g.rotation);
        w.pod<double>(g.depth);
        w.pod<double>(g.shared_opacity_logit);
        for (const auto& s : g.slots) {
            w.pod<std::uint8_t>(s.on ? 1 : 0);
            w.pod<double>(s.indicator_logit);
            w.bytes(s.features.data(), s.features.size() * sizeof(double));
            w.pod<double>(s.grad_accum_norm);
            w.pod<double>(s.grad_accum_vec.x);
            w.pod<double>(s.grad_accum_vec.y);
            w.pod<std::uint64_t>(s.grad_count);
        }
    }

    if (ckpt.has_optimizer) {
        const OptimizerState& o = ckpt.optimizer;
        if (o.count() != scene.size())
            throw std::invalid_argument("save_checkpoint: optimizer state size mismatch");
        w.pod<std::uint64_t>(o.step);
        w.pod<std::uint64_t>(o.stride());
        w.bytes(o.raw_m().data(), o.raw_m().size() * sizeof(double));
        w.bytes(o.raw_v().data(), o.raw_v().size() * sizeof(double));
    }
    if (!w.f) throw std::runtime_error("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("not a scene checkpoint: " + path.string());
    const auto version = r.pod<std::uint32_t>();
    if (version != kVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    const auto flags = r.pod<std::uint32_t>();

    Checkpoint ckpt;
    ckpt.iteration = r.pod<std::uint64_t>();
    Scene& scene = ckpt.scene;
    scene.mode = static_cast<SceneMode>(r.pod<std::uint8_t>());

    scene.viewport.width = static_cast<int>(r.pod<std::uint32_t>());
    scene.viewport.height = static_cast<int>(r.pod<std::uint32_t>());
    scene.viewport.world_to_pixel.a = r.pod<double>();
    scene.viewport.world_to_pixel.b = r.pod<double>();
    scene.viewport.world_to_pixel.c = r.pod<double>();
    scene.viewport.world_to_pixel.d = r.pod<double>();
    scene.viewport.pixel_offset.x = r.pod<double>();
    scene.viewport.pixel_offset.y = r.pod<double>();

    const auto n_mod = r.pod<std::uint32_t>();
    scene.modalities.resize(n_mod);
    for (auto& m : scene.modalities) {
        m.id = static_cast<int>(r.pod<std::uint32_t>());
        m.name = r.str();
        m.feature_dim = static_cast<int>(r.pod<std::uint32_t>());
        m.loss_kind = static_cast<LossKind>(r.pod<std::uint8_t>());
        m.loss_weight = r.pod<double>();
        m.smooth_weight = r.pod<double>();
    }

    const auto n_gauss = r.pod<std::uint64_t>();
    scene.gaussians.resize(n_gauss);
    for (auto& g : scene.gaussians) {
        g.mean.x = r.pod<double>();
        g.mean.y = r.pod<double>();
        g.log_scales.x = r.pod<double>();
        g.log_scales.y = r.pod<double>();
        g.rotation = r.pod<double>();
        g.depth = r.pod<double>();
        g.shared_opacity_logit = r.pod<double>();
        g.slots.resize(n_mod);
        for (std::size_t m = 0; m < n_mod; ++m) {
            ModalitySlot& s = g.slots[m];
            s.on = r.pod<std::uint8_t>() != 0;
            s.indicator_logit = r.pod<double>();
            s.features.resize(static_cast<std::size_t>(scene.modalities[m].feature_dim));
            r.bytes(s.features.data(), s.features.size() * sizeof(double));
            s.grad_accum_norm = r.pod<double>();
            s.grad_accum_vec.x = r.pod<double>();
            s.grad_accum_vec.y = r.pod<double>();
            s.grad_count = r.pod<std::uint64_t>();
        }
    }
    scene.validate();

    if (flags & 1u) {
        ckpt.has_optimizer = true;
        OptimizerState state(scene.size(), scene.modalities);
        state.step = r.pod<std::uint64_t>();
        const auto stride = r.pod<std::uint64_t>();
        if (stride != state.stride())
            throw std::runtime_error("checkpoint optimizer stride mismatch");
        r.bytes(state.raw_m().data(), state.raw_m().size() * sizeof(double));
        r.bytes(state.raw_v().data(), state.raw_v().size() * sizeof(double));
        ckpt.optimizer = std::move(state);
    }
    return ckpt;
}

}  // namespace mmsplat
