#include "vdistill/distill.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "vdistill/io.hpp"

namespace vdistill {

namespace {
constexpr char kMagic[4] = {'D', 'V', 'D', 'S'};
constexpr std::uint16_t kVersion = 1;
}  // namespace

const SyntheticSet::ClassEntry& SyntheticSet::entry(int class_id) const {
    for (const auto& e : classes) {
        if (e.class_id == class_id) return e;
    }
    throw ContractError("SyntheticSet: no class " + std::to_string(class_id));
}

std::size_t SyntheticSet::stored_frames() const {
    std::size_t n = 0;
    for (const auto& e : classes) n += e.videos.size() * e.resolution;
    return n;
}

bool SyntheticSet::operator==(const SyntheticSet& o) const {
    if (classes.size() != o.classes.size()) return false;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        const auto& a = classes[i];
        const auto& b = o.classes[i];
        if (a.class_id != b.class_id || a.resolution != b.resolution ||
            a.videos.size() != b.videos.size()) {
            return false;
        }
        for (std::size_t j = 0; j < a.videos.size(); ++j) {
            if (!(a.videos[j].frames == b.videos[j].frames) ||
                a.videos[j].expand_len != b.videos[j].expand_len) {
                return false;
            }
        }
    }
    return true;
}

void validate(const DistillConfig& config) {
    if (config.N < 1) throw ConfigError("distill: N must be >= 1");
    if (!(config.beta > 0.0 && config.beta <= 1.0)) {
        throw ConfigError("distill: beta must be in (0, 1]");
    }
    if (config.ipc < 1) throw ConfigError("distill: ipc must be >= 1");
    if (config.real_batch_per_class < 1) throw ConfigError("distill: real batch must be >= 1");
    if (!(config.momentum_syn >= 0.0 && config.momentum_syn < 1.0)) {
        throw ConfigError("distill: momentum must be in [0, 1)");
    }
}

int early_iters(const DistillConfig& config) {
    validate(config);
    const long long n = std::llround(config.beta * static_cast<double>(config.N));
    return static_cast<int>(std::max(1LL, n));
}

SyntheticSet init_synthetic(const std::map<int, std::size_t>& actions, const VideoDims& dims,
                            const DistillConfig& config, RngStream rng) {
    validate(config);
    SyntheticSet set;
    set.dims = dims;
    for (const auto& [class_id, a] : actions) {
        if (a < 1 || a > dims.L) throw ContractError("init_synthetic: resolution outside [1, L]");
        SyntheticSet::ClassEntry entry;
        entry.class_id = class_id;
        entry.resolution = a;
        for (int i = 0; i < config.ipc; ++i) {
            auto stream = rng.fork("syn_init", static_cast<std::uint64_t>(class_id),
                                   static_cast<std::uint64_t>(i));
            CompactVideo v;
            v.frames = uniform(stream, 0.0, 1.0, {a, dims.H, dims.W, dims.C});
            v.expand_len = dims.L;
            entry.videos.push_back(std::move(v));
        }
        set.classes.push_back(std::move(entry));
    }
    return set;
}

DmLossResult dm_loss(const SyntheticSet& syn, const std::map<int, Tensor>& real_batches,
                     const EncoderParams& enc) {
    DmLossResult res;
    const std::size_t F = enc.config.feat_dim();
    for (const auto& entry : syn.classes) {
        auto it = real_batches.find(entry.class_id);
        if (it == real_batches.end() || it->second.shape[0] == 0) {
            throw ContractError("dm_loss: missing real batch for class " +
                                std::to_string(entry.class_id));
        }
        const std::size_t ipc = entry.videos.size();
        const VideoDims& d = syn.dims;

        Tensor syn_batch({ipc, d.L, d.H, d.W, d.C});
        const std::size_t vs = d.L * d.H * d.W * d.C;
        for (std::size_t i = 0; i < ipc; ++i) {
            Tensor expanded = expand(entry.videos[i]);
            std::copy(expanded.data.begin(), expanded.data.end(),
                      syn_batch.data.begin() + i * vs);
        }
        ForwardResult syn_fwd = forward(enc, syn_batch);
        ForwardResult real_fwd = forward(enc, it->second);

        std::vector<double> diff(F, 0.0);  // mean_syn - mean_real
        const std::size_t B_real = it->second.shape[0];
        for (std::size_t f = 0; f < F; ++f) {
            double ms = 0.0, mr = 0.0;
            for (std::size_t i = 0; i < ipc; ++i) ms += syn_fwd.features.data[i * F + f];
            for (std::size_t i = 0; i < B_real; ++i) mr += real_fwd.features.data[i * F + f];
            diff[f] = ms / static_cast<double>(ipc) - mr / static_cast<double>(B_real);
        }
        double loss_m = 0.0;
        for (double v : diff) loss_m += v * v;
        res.loss += loss_m;

        Tensor grad_features({ipc, F});
        for (std::size_t i = 0; i < ipc; ++i) {
            for (std::size_t f = 0; f < F; ++f) {
                grad_features.data[i * F + f] = 2.0 * diff[f] / static_cast<double>(ipc);
            }
        }
        Gradients grads = backward(enc, syn_fwd.cache, Tensor{}, grad_features);

        std::vector<Tensor> class_grads;
        for (std::size_t i = 0; i < ipc; ++i) {
            Tensor g({d.L, d.H, d.W, d.C});
            std::copy(grads.input.data.begin() + i * vs, grads.input.data.begin() + (i + 1) * vs,
                      g.data.begin());
            class_grads.push_back(expand_adjoint(g, entry.resolution));
        }
        res.grads.push_back(std::move(class_grads));
    }
    return res;
}

DdResult dd_update(const SyntheticSet& syn, const LabeledVideoSet& real, int iters,
                   const DistillConfig& config, RngStream rng) {
    if (iters < 1) throw ContractError("dd_update: iters must be >= 1");
    validate(config);
    DdResult res;
    res.syn = syn;

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < real.labels.size(); ++i) by_class[real.labels[i]].push_back(i);
    for (const auto& entry : res.syn.classes) {
        if (by_class.find(entry.class_id) == by_class.end()) {
            throw ContractError("dd_update: real set has no videos of class " +
                                std::to_string(entry.class_id));
        }
    }

    EncoderConfig enc_cfg;
    enc_cfg.T = syn.dims.L;
    enc_cfg.H = syn.dims.H;
    enc_cfg.W = syn.dims.W;
    enc_cfg.C = syn.dims.C;
    enc_cfg.num_classes = static_cast<int>(std::max<std::size_t>(1, syn.classes.size()));

    std::vector<std::vector<SgdState>> opt(res.syn.classes.size());
    for (std::size_t m = 0; m < res.syn.classes.size(); ++m) {
        for (const auto& v : res.syn.classes[m].videos) {
            opt[m].emplace_back(config.lr_syn, config.momentum_syn, v.frames.shape);
        }
    }

    const std::size_t vs = syn.dims.L * syn.dims.H * syn.dims.W * syn.dims.C;
    for (int it = 0; it < iters; ++it) {
        EncoderParams enc = init_params(
            enc_cfg, rng.fork("dm_encoder", 0, static_cast<std::uint64_t>(it)));
        std::map<int, Tensor> batches;
        for (const auto& entry : res.syn.classes) {
            const auto& pool = by_class[entry.class_id];
            const std::size_t bs =
                std::min<std::size_t>(static_cast<std::size_t>(config.real_batch_per_class),
                                      pool.size());
            auto stream = rng.fork("real_batch", static_cast<std::uint64_t>(entry.class_id),
                                   static_cast<std::uint64_t>(it));
            Tensor batch({bs, syn.dims.L, syn.dims.H, syn.dims.W, syn.dims.C});
            for (std::size_t i = 0; i < bs; ++i) {
                const Tensor& v = real.videos[pool[stream.next_index(pool.size())]];
                std::copy(v.data.begin(), v.data.end(), batch.data.begin() + i * vs);
            }
            batches.emplace(entry.class_id, std::move(batch));
        }
        DmLossResult lr = dm_loss(res.syn, batches, enc);
        if (!std::isfinite(lr.loss)) {
            throw DivergenceError("dd_update: loss became non-finite at iteration " +
                                  std::to_string(it));
        }
        res.loss_trace.push_back(lr.loss);
        for (std::size_t m = 0; m < res.syn.classes.size(); ++m) {
            auto& entry = res.syn.classes[m];
            for (std::size_t i = 0; i < entry.videos.size(); ++i) {
                sgd_step(entry.videos[i].frames, lr.grads[m][i], opt[m][i]);
                for (double& v : entry.videos[i].frames.data) v = std::clamp(v, 0.0, 1.0);
            }
        }
    }
    return res;
}

LabeledVideoSet expand_all(const SyntheticSet& syn) {
    LabeledVideoSet out;
    out.split = Split::train;
    out.generator_version = "synthetic";
    for (const auto& entry : syn.classes) {
        for (const auto& v : entry.videos) {
            out.videos.push_back(expand(v));
            out.labels.push_back(entry.class_id);
        }
    }
    return out;
}

void save_synthetic(const SyntheticSet& set, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for write: " + path);
    io::write_magic(os, kMagic);
    io::write_le<std::uint16_t>(os, kVersion);
    io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(set.dims.L));
    io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(set.dims.H));
    io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(set.dims.W));
    io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(set.dims.C));
    io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(set.classes.size()));
    for (const auto& entry : set.classes) {
        io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(entry.class_id));
        io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(entry.resolution));
        io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(entry.videos.size()));
        for (const auto& v : entry.videos) {
            for (double x : v.frames.data) io::write_f64(os, x);
        }
    }
}

SyntheticSet load_synthetic(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for read: " + path);
    io::check_magic(is, kMagic);
    io::check_version(io::read_le<std::uint16_t>(is, "version"), kVersion, "DVDS");
    SyntheticSet set;
    set.dims.L = io::read_le<std::uint32_t>(is, "L");
    set.dims.H = io::read_le<std::uint32_t>(is, "H");
    set.dims.W = io::read_le<std::uint32_t>(is, "W");
    set.dims.C = io::read_le<std::uint32_t>(is, "C");
    const std::uint32_t nclasses = io::read_le<std::uint32_t>(is, "class count");
    for (std::uint32_t m = 0; m < nclasses; ++m) {
        SyntheticSet::ClassEntry entry;
        entry.class_id = static_cast<int>(io::read_le<std::uint32_t>(is, "class id"));
        entry.resolution = io::read_le<std::uint32_t>(is, "resolution");
        const std::uint32_t ipc = io::read_le<std::uint32_t>(is, "ipc");
        for (std::uint32_t i = 0; i < ipc; ++i) {
            CompactVideo v;
            v.frames = Tensor({entry.resolution, set.dims.H, set.dims.W, set.dims.C});
            for (double& x : v.frames.data) x = io::read_f64(is, "frames");
            v.expand_len = set.dims.L;
            entry.videos.push_back(std::move(v));
        }
        set.classes.push_back(std::move(entry));
    }
    return set;
}

}  // namespace vdistill
