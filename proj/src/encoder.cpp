#include "vdistill/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "vdistill/io.hpp"
#include "vdistill/partition.hpp"

namespace vdistill {

namespace {

constexpr char kMagic[4] = {'D', 'V', 'D', 'P'};
constexpr std::uint16_t kVersion = 1;
constexpr std::size_t kC1 = 8;
constexpr std::size_t kC2 = 16;

// Same-padded 3x3x3 convolution, channel-first single sample.
void conv3d(const double* in, const double* w, const double* b, double* out, std::size_t cin,
            std::size_t cout, std::size_t T, std::size_t H, std::size_t W) {
    for (std::size_t oc = 0; oc < cout; ++oc) {
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t y = 0; y < H; ++y) {
                double* orow = out + ((oc * T + t) * H + y) * W;
                std::fill(orow, orow + W, b[oc]);
            }
        }
        for (std::size_t ic = 0; ic < cin; ++ic) {
            for (std::size_t t = 0; t < T; ++t) {
                for (std::size_t dt = 0; dt < 3; ++dt) {
                    if (t + dt < 1 || t + dt > T) continue;
                    const std::size_t tt = t + dt - 1;
                    for (std::size_t y = 0; y < H; ++y) {
                        double* orow = out + ((oc * T + t) * H + y) * W;
                        for (std::size_t dy = 0; dy < 3; ++dy) {
                            if (y + dy < 1 || y + dy > H) continue;
                            const std::size_t yy = y + dy - 1;
                            const double* irow = in + ((ic * T + tt) * H + yy) * W;
                            const double* wk = w + (((oc * cin + ic) * 3 + dt) * 3 + dy) * 3;
                            for (std::size_t x = 1; x < W; ++x) orow[x] += wk[0] * irow[x - 1];
                            for (std::size_t x = 0; x < W; ++x) orow[x] += wk[1] * irow[x];
                            for (std::size_t x = 0; x + 1 < W; ++x) orow[x] += wk[2] * irow[x + 1];
                        }
                    }
                }
            }
        }
    }
}

// Gradients of conv3d w.r.t. input, weights, bias. grad_in/grad_w/grad_b accumulate.
void conv3d_backward(const double* in, const double* w, const double* grad_out, double* grad_in,
                     double* grad_w, double* grad_b, std::size_t cin, std::size_t cout,
                     std::size_t T, std::size_t H, std::size_t W) {
    for (std::size_t oc = 0; oc < cout; ++oc) {
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t y = 0; y < H; ++y) {
                const double* grow = grad_out + ((oc * T + t) * H + y) * W;
                double s = 0.0;
                for (std::size_t x = 0; x < W; ++x) s += grow[x];
                grad_b[oc] += s;
            }
        }
        for (std::size_t ic = 0; ic < cin; ++ic) {
            for (std::size_t t = 0; t < T; ++t) {
                for (std::size_t dt = 0; dt < 3; ++dt) {
                    if (t + dt < 1 || t + dt > T) continue;
                    const std::size_t tt = t + dt - 1;
                    for (std::size_t y = 0; y < H; ++y) {
                        const double* grow = grad_out + ((oc * T + t) * H + y) * W;
                        for (std::size_t dy = 0; dy < 3; ++dy) {
                            if (y + dy < 1 || y + dy > H) continue;
                            const std::size_t yy = y + dy - 1;
                            const double* irow = in + ((ic * T + tt) * H + yy) * W;
                            double* girow = grad_in + ((ic * T + tt) * H + yy) * W;
                            const std::size_t wi = (((oc * cin + ic) * 3 + dt) * 3 + dy) * 3;
                            const double* wk = w + wi;
                            double* gwk = grad_w + wi;
                            double g0 = 0.0, g1 = 0.0, g2 = 0.0;
                            for (std::size_t x = 1; x < W; ++x) {
                                girow[x - 1] += wk[0] * grow[x];
                                g0 += grow[x] * irow[x - 1];
                            }
                            for (std::size_t x = 0; x < W; ++x) {
                                girow[x] += wk[1] * grow[x];
                                g1 += grow[x] * irow[x];
                            }
                            for (std::size_t x = 0; x + 1 < W; ++x) {
                                girow[x + 1] += wk[2] * grow[x];
                                g2 += grow[x] * irow[x + 1];
                            }
                            gwk[0] += g0;
                            gwk[1] += g1;
                            gwk[2] += g2;
                        }
                    }
                }
            }
        }
    }
}

// ReLU then 2x2 spatial mean-pool, per sample. pre: (C,T,H,W) -> out: (C,T,H/2,W/2)
void relu_pool(const double* pre, double* out, std::size_t ch, std::size_t T, std::size_t H,
               std::size_t W) {
    const std::size_t Ho = H / 2, Wo = W / 2;
    for (std::size_t c = 0; c < ch; ++c) {
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t y = 0; y < Ho; ++y) {
                const double* r0 = pre + ((c * T + t) * H + 2 * y) * W;
                const double* r1 = r0 + W;
                double* orow = out + ((c * T + t) * Ho + y) * Wo;
                for (std::size_t x = 0; x < Wo; ++x) {
                    double s = std::max(r0[2 * x], 0.0) + std::max(r0[2 * x + 1], 0.0) +
                               std::max(r1[2 * x], 0.0) + std::max(r1[2 * x + 1], 0.0);
                    orow[x] = 0.25 * s;
                }
            }
        }
    }
}

void relu_pool_backward(const double* pre, const double* grad_out, double* grad_pre,
                        std::size_t ch, std::size_t T, std::size_t H, std::size_t W) {
    const std::size_t Ho = H / 2, Wo = W / 2;
    for (std::size_t c = 0; c < ch; ++c) {
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t y = 0; y < Ho; ++y) {
                const double* p0 = pre + ((c * T + t) * H + 2 * y) * W;
                const double* p1 = p0 + W;
                double* g0 = grad_pre + ((c * T + t) * H + 2 * y) * W;
                double* g1 = g0 + W;
                const double* grow = grad_out + ((c * T + t) * Ho + y) * Wo;
                for (std::size_t x = 0; x < Wo; ++x) {
                    const double g = 0.25 * grow[x];
                    if (p0[2 * x] > 0.0) g0[2 * x] += g;
                    if (p0[2 * x + 1] > 0.0) g0[2 * x + 1] += g;
                    if (p1[2 * x] > 0.0) g1[2 * x] += g;
                    if (p1[2 * x + 1] > 0.0) g1[2 * x + 1] += g;
                }
            }
        }
    }
}

}  // namespace

void validate(const EncoderConfig& config) {
    if (config.T < 1) throw ConfigError("encoder: T must be >= 1");
    if (config.H % 4 != 0 || config.W % 4 != 0 || config.H < 4 || config.W < 4) {
        throw ConfigError("encoder: H and W must be multiples of 4");
    }
    if (config.C != 1 && config.C != 3) throw ConfigError("encoder: C must be 1 or 3");
    if (config.num_classes < 1) throw ConfigError("encoder: num_classes must be >= 1");
}

std::vector<Tensor*> EncoderParams::blocks() {
    return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &fc_feat_w, &fc_feat_b, &fc_head_w, &fc_head_b};
}

std::vector<const Tensor*> EncoderParams::blocks() const {
    return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &fc_feat_w, &fc_feat_b, &fc_head_w, &fc_head_b};
}

std::size_t EncoderParams::num_params() const {
    std::size_t n = 0;
    for (const Tensor* b : blocks()) n += b->numel();
    return n;
}

EncoderParams zero_params(const EncoderConfig& config) {
    validate(config);
    EncoderParams p;
    p.config = config;
    const std::size_t nc = static_cast<std::size_t>(config.num_classes);
    p.conv1_w = Tensor({kC1, config.C, 3, 3, 3});
    p.conv1_b = Tensor({kC1});
    p.conv2_w = Tensor({kC2, kC1, 3, 3, 3});
    p.conv2_b = Tensor({kC2});
    p.fc_feat_w = Tensor({config.feat_dim(), config.gvec_dim()});
    p.fc_feat_b = Tensor({config.feat_dim()});
    p.fc_head_w = Tensor({nc, config.feat_dim()});
    p.fc_head_b = Tensor({nc});
    return p;
}

EncoderParams init_params(const EncoderConfig& config, RngStream rng) {
    EncoderParams p = zero_params(config);
    auto fill = [&](Tensor& t, std::size_t fan_in) {
        const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double& v : t.data) v = s * (2.0 * rng.next_double() - 1.0);
    };
    fill(p.conv1_w, config.C * 27);
    fill(p.conv1_b, config.C * 27);
    fill(p.conv2_w, kC1 * 27);
    fill(p.conv2_b, kC1 * 27);
    fill(p.fc_feat_w, config.gvec_dim());
    fill(p.fc_feat_b, config.gvec_dim());
    fill(p.fc_head_w, config.feat_dim());
    fill(p.fc_head_b, config.feat_dim());
    return p;
}

ForwardResult forward(const EncoderParams& params, const Tensor& batch) {
    const EncoderConfig& cfg = params.config;
    if (batch.shape.size() != 5 || batch.shape[1] != cfg.T || batch.shape[2] != cfg.H ||
        batch.shape[3] != cfg.W || batch.shape[4] != cfg.C) {
        throw ContractError("forward: batch shape does not match encoder config");
    }
    require_finite(batch, "forward batch");
    const std::size_t B = batch.shape[0];
    const std::size_t T = cfg.T, H = cfg.H, W = cfg.W, C = cfg.C;
    const std::size_t H2 = H / 2, W2 = W / 2, H4 = H / 4, W4 = W / 4;
    const std::size_t G = cfg.gvec_dim(), F = cfg.feat_dim();
    const std::size_t nc = static_cast<std::size_t>(cfg.num_classes);

    ForwardResult res;
    ForwardCache& cache = res.cache;
    cache.batch = B;
    cache.stamp = params.stamp;
    cache.input_cf = Tensor({B, C, T, H, W});
    cache.pre1 = Tensor({B, kC1, T, H, W});
    cache.pooled1 = Tensor({B, kC1, T, H2, W2});
    cache.pre2 = Tensor({B, kC2, T, H2, W2});
    cache.gvec = Tensor({B, G});
    cache.features = Tensor({B, F});
    res.logits = Tensor({B, nc});

    Tensor pooled2({kC2, T, H4, W4});  // scratch, per sample
    for (std::size_t b = 0; b < B; ++b) {
        // (T,H,W,C) -> (C,T,H,W)
        double* in_cf = cache.input_cf.data.data() + b * C * T * H * W;
        const double* in = batch.data.data() + b * T * H * W * C;
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t y = 0; y < H; ++y) {
                for (std::size_t x = 0; x < W; ++x) {
                    for (std::size_t c = 0; c < C; ++c) {
                        in_cf[((c * T + t) * H + y) * W + x] = in[((t * H + y) * W + x) * C + c];
                    }
                }
            }
        }
        double* pre1 = cache.pre1.data.data() + b * kC1 * T * H * W;
        conv3d(in_cf, params.conv1_w.data.data(), params.conv1_b.data.data(), pre1, C, kC1, T, H,
               W);
        double* pooled1 = cache.pooled1.data.data() + b * kC1 * T * H2 * W2;
        relu_pool(pre1, pooled1, kC1, T, H, W);
        double* pre2 = cache.pre2.data.data() + b * kC2 * T * H2 * W2;
        conv3d(pooled1, params.conv2_w.data.data(), params.conv2_b.data.data(), pre2, kC1, kC2, T,
               H2, W2);
        relu_pool(pre2, pooled2.data.data(), kC2, T, H2, W2);

        // global spatial mean, time-ordered flatten: gvec[t*16 + c]
        double* gv = cache.gvec.data.data() + b * G;
        const double inv = 1.0 / static_cast<double>(H4 * W4);
        for (std::size_t c = 0; c < kC2; ++c) {
            for (std::size_t t = 0; t < T; ++t) {
                const double* plane = pooled2.data.data() + (c * T + t) * H4 * W4;
                double s = 0.0;
                for (std::size_t i = 0; i < H4 * W4; ++i) s += plane[i];
                gv[t * kC2 + c] = s * inv;
            }
        }
        double* feat = cache.features.data.data() + b * F;
        for (std::size_t f = 0; f < F; ++f) {
            const double* wrow = params.fc_feat_w.data.data() + f * G;
            double s = params.fc_feat_b.data[f];
            for (std::size_t g = 0; g < G; ++g) s += wrow[g] * gv[g];
            feat[f] = s;
        }
        double* logit = res.logits.data.data() + b * nc;
        for (std::size_t k = 0; k < nc; ++k) {
            const double* wrow = params.fc_head_w.data.data() + k * F;
            double s = params.fc_head_b.data[k];
            for (std::size_t f = 0; f < F; ++f) s += wrow[f] * feat[f];
            logit[k] = s;
        }
    }
    res.features = cache.features;
    return res;
}

Gradients backward(const EncoderParams& params, const ForwardCache& cache,
                   const Tensor& grad_logits, const Tensor& grad_features) {
    if (cache.stamp != params.stamp) {
        throw ContractError("backward: cache is stale (params updated since forward)");
    }
    const EncoderConfig& cfg = params.config;
    const std::size_t B = cache.batch;
    const std::size_t T = cfg.T, H = cfg.H, W = cfg.W, C = cfg.C;
    const std::size_t H2 = H / 2, W2 = W / 2, H4 = H / 4, W4 = W / 4;
    const std::size_t G = cfg.gvec_dim(), F = cfg.feat_dim();
    const std::size_t nc = static_cast<std::size_t>(cfg.num_classes);
    const bool has_gl = grad_logits.numel() > 0;
    const bool has_gf = grad_features.numel() > 0;
    if (has_gl && grad_logits.shape != std::vector<std::size_t>{B, nc}) {
        throw ContractError("backward: grad_logits shape mismatch");
    }
    if (has_gf && grad_features.shape != std::vector<std::size_t>{B, F}) {
        throw ContractError("backward: grad_features shape mismatch");
    }

    Gradients out;
    out.params = zero_params(cfg);
    out.input = Tensor({B, T, H, W, C});

    Tensor gfeat({F}), ggvec({G});
    Tensor gpooled2({kC2, T, H4, W4});
    Tensor gpre2({kC2, T, H2, W2});
    Tensor gpooled1({kC1, T, H2, W2});
    Tensor gpre1({kC1, T, H, W});
    Tensor gin_cf({C, T, H, W});

    for (std::size_t b = 0; b < B; ++b) {
        const double* feat = cache.features.data.data() + b * F;
        const double* gv = cache.gvec.data.data() + b * G;

        std::fill(gfeat.data.begin(), gfeat.data.end(), 0.0);
        if (has_gl) {
            const double* gl = grad_logits.data.data() + b * nc;
            for (std::size_t k = 0; k < nc; ++k) {
                const double g = gl[k];
                out.params.fc_head_b.data[k] += g;
                double* gwrow = out.params.fc_head_w.data.data() + k * F;
                const double* wrow = params.fc_head_w.data.data() + k * F;
                for (std::size_t f = 0; f < F; ++f) {
                    gwrow[f] += g * feat[f];
                    gfeat.data[f] += g * wrow[f];
                }
            }
        }
        if (has_gf) {
            const double* gf = grad_features.data.data() + b * F;
            for (std::size_t f = 0; f < F; ++f) gfeat.data[f] += gf[f];
        }

        std::fill(ggvec.data.begin(), ggvec.data.end(), 0.0);
        for (std::size_t f = 0; f < F; ++f) {
            const double g = gfeat.data[f];
            out.params.fc_feat_b.data[f] += g;
            double* gwrow = out.params.fc_feat_w.data.data() + f * G;
            const double* wrow = params.fc_feat_w.data.data() + f * G;
            for (std::size_t gidx = 0; gidx < G; ++gidx) {
                gwrow[gidx] += g * gv[gidx];
                ggvec.data[gidx] += g * wrow[gidx];
            }
        }

        const double inv = 1.0 / static_cast<double>(H4 * W4);
        for (std::size_t c = 0; c < kC2; ++c) {
            for (std::size_t t = 0; t < T; ++t) {
                const double g = ggvec.data[t * kC2 + c] * inv;
                double* plane = gpooled2.data.data() + (c * T + t) * H4 * W4;
                std::fill(plane, plane + H4 * W4, g);
            }
        }

        const double* pre2 = cache.pre2.data.data() + b * kC2 * T * H2 * W2;
        std::fill(gpre2.data.begin(), gpre2.data.end(), 0.0);
        relu_pool_backward(pre2, gpooled2.data.data(), gpre2.data.data(), kC2, T, H2, W2);

        const double* pooled1 = cache.pooled1.data.data() + b * kC1 * T * H2 * W2;
        std::fill(gpooled1.data.begin(), gpooled1.data.end(), 0.0);
        conv3d_backward(pooled1, params.conv2_w.data.data(), gpre2.data.data(),
                        gpooled1.data.data(), out.params.conv2_w.data.data(),
                        out.params.conv2_b.data.data(), kC1, kC2, T, H2, W2);

        const double* pre1 = cache.pre1.data.data() + b * kC1 * T * H * W;
        std::fill(gpre1.data.begin(), gpre1.data.end(), 0.0);
        relu_pool_backward(pre1, gpooled1.data.data(), gpre1.data.data(), kC1, T, H, W);

        const double* in_cf = cache.input_cf.data.data() + b * C * T * H * W;
        std::fill(gin_cf.data.begin(), gin_cf.data.end(), 0.0);
        conv3d_backward(in_cf, params.conv1_w.data.data(), gpre1.data.data(), gin_cf.data.data(),
                        out.params.conv1_w.data.data(), out.params.conv1_b.data.data(), C, kC1, T,
                        H, W);

        double* gin = out.input.data.data() + b * T * H * W * C;
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t y = 0; y < H; ++y) {
                for (std::size_t x = 0; x < W; ++x) {
                    for (std::size_t c = 0; c < C; ++c) {
                        gin[((t * H + y) * W + x) * C + c] =
                            gin_cf.data[((c * T + t) * H + y) * W + x];
                    }
                }
            }
        }
    }
    return out;
}

std::pair<double, Tensor> softmax_xent(const Tensor& logits, const std::vector<int>& labels) {
    const std::size_t B = logits.shape[0];
    const std::size_t nc = logits.shape[1];
    if (labels.size() != B) throw ContractError("softmax_xent: label count mismatch");
    Tensor grad({B, nc});
    double loss = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
        const double* row = logits.data.data() + b * nc;
        double* grow = grad.data.data() + b * nc;
        const double mx = *std::max_element(row, row + nc);
        double z = 0.0;
        for (std::size_t k = 0; k < nc; ++k) z += std::exp(row[k] - mx);
        const int label = labels[b];
        if (label < 0 || static_cast<std::size_t>(label) >= nc) {
            throw ContractError("softmax_xent: label out of range");
        }
        loss += -(row[label] - mx - std::log(z));
        for (std::size_t k = 0; k < nc; ++k) {
            double p = std::exp(row[k] - mx) / z;
            grow[k] = (p - (static_cast<std::size_t>(label) == k ? 1.0 : 0.0)) /
                      static_cast<double>(B);
        }
    }
    return {loss / static_cast<double>(B), std::move(grad)};
}

namespace {

Tensor stack_batch(const LabeledVideoSet& set, const std::vector<std::size_t>& idx) {
    const auto& s0 = set.videos[idx[0]].shape;
    Tensor batch({idx.size(), s0[0], s0[1], s0[2], s0[3]});
    const std::size_t n = set.videos[idx[0]].numel();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto& v = set.videos[idx[i]];
        std::copy(v.data.begin(), v.data.end(), batch.data.begin() + i * n);
    }
    return batch;
}

}  // namespace

TrainResult train_teacher(const LabeledVideoSet& train, const EncoderConfig& config,
                          const TrainConfig& tc, RngStream rng) {
    if (train.videos.empty()) throw ContractError("train_teacher: empty training set");
    validate(config);
    TrainResult res;
    res.params = init_params(config, rng.fork("init"));
    std::vector<SgdState> opt;
    for (Tensor* blk : res.params.blocks()) {
        opt.emplace_back(tc.lr, tc.momentum, blk->shape);
    }
    RngStream batch_rng = rng.fork("batches");
    const std::size_t n = train.videos.size();
    const std::size_t bs = std::min<std::size_t>(static_cast<std::size_t>(tc.batch_size), n);
    for (int it = 0; it < tc.iters; ++it) {
        std::vector<std::size_t> idx(bs);
        std::vector<int> labels(bs);
        for (std::size_t i = 0; i < bs; ++i) {
            idx[i] = batch_rng.next_index(n);
            labels[i] = train.labels[idx[i]];
        }
        Tensor batch = stack_batch(train, idx);
        ForwardResult fwd = forward(res.params, batch);
        auto [loss, grad_logits] = softmax_xent(fwd.logits, labels);
        if (!std::isfinite(loss)) {
            throw DivergenceError("train_teacher: loss became non-finite at iteration " +
                                  std::to_string(it));
        }
        std::size_t correct = 0;
        for (std::size_t i = 0; i < bs; ++i) {
            const double* row = fwd.logits.data.data() + i * fwd.logits.shape[1];
            std::size_t arg =
                std::max_element(row, row + fwd.logits.shape[1]) - row;
            if (static_cast<int>(arg) == labels[i]) ++correct;
        }
        res.loss_trace.push_back(loss);
        res.acc_trace.push_back(static_cast<double>(correct) / static_cast<double>(bs));
        Gradients grads = backward(res.params, fwd.cache, grad_logits, Tensor{});
        auto pblocks = res.params.blocks();
        auto gblocks = grads.params.blocks();
        for (std::size_t i = 0; i < pblocks.size(); ++i) {
            sgd_step(*pblocks[i], *gblocks[i], opt[i]);
        }
        ++res.params.stamp;
    }
    return res;
}

EvalReport evaluate(const EncoderParams& params, const LabeledVideoSet& test,
                    const std::optional<std::map<int, std::size_t>>& resolution_map) {
    if (test.videos.empty()) throw ContractError("evaluate: empty test set");
    std::set<int> present(test.labels.begin(), test.labels.end());
    if (resolution_map) {
        for (const auto& [cls, a] : *resolution_map) {
            if (!present.count(cls)) {
                throw ContractError("evaluate: unknown class " + std::to_string(cls) +
                                    " in resolution_map");
            }
            (void)a;
        }
        for (int cls : present) {
            if (!resolution_map->count(cls)) {
                throw ContractError("evaluate: resolution_map missing class " +
                                    std::to_string(cls));
            }
        }
    }
    std::map<int, std::size_t> total, correct;
    const std::size_t chunk = 16;
    for (std::size_t begin = 0; begin < test.videos.size(); begin += chunk) {
        const std::size_t end = std::min(begin + chunk, test.videos.size());
        std::vector<std::size_t> idx(end - begin);
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = begin + i;
        Tensor batch = stack_batch(test, idx);
        if (resolution_map) {
            const std::size_t L = batch.shape[1];
            const std::size_t vs = batch.numel() / batch.shape[0];
            for (std::size_t i = 0; i < idx.size(); ++i) {
                Tensor video({L, batch.shape[2], batch.shape[3], batch.shape[4]});
                std::copy(batch.data.begin() + i * vs, batch.data.begin() + (i + 1) * vs,
                          video.data.begin());
                Tensor part = partition(video, resolution_map->at(test.labels[idx[i]]));
                std::copy(part.data.begin(), part.data.end(), batch.data.begin() + i * vs);
            }
        }
        ForwardResult fwd = forward(params, batch);
        const std::size_t nc = fwd.logits.shape[1];
        for (std::size_t i = 0; i < idx.size(); ++i) {
            const double* row = fwd.logits.data.data() + i * nc;
            const std::size_t arg = std::max_element(row, row + nc) - row;
            const int label = test.labels[idx[i]];
            ++total[label];
            if (static_cast<int>(arg) == label) ++correct[label];
        }
    }
    EvalReport report;
    std::size_t all = 0, hit = 0;
    for (const auto& [cls, n] : total) {
        report.per_class[cls] = static_cast<double>(correct[cls]) / static_cast<double>(n);
        report.counts[cls] = n;
        all += n;
        hit += correct[cls];
    }
    report.overall = static_cast<double>(hit) / static_cast<double>(all);
    return report;
}

void save_params(const EncoderParams& params, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for write: " + path);
    io::write_magic(os, kMagic);
    io::write_le<std::uint16_t>(os, kVersion);
    io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(params.config.T));
    io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(params.config.H));
    io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(params.config.W));
    io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(params.config.C));
    io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(params.config.num_classes));
    for (const Tensor* blk : params.blocks()) {
        for (double v : blk->data) io::write_f64(os, v);
    }
}

EncoderParams load_params(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for read: " + path);
    io::check_magic(is, kMagic);
    io::check_version(io::read_le<std::uint16_t>(is, "version"), kVersion, "DVDP");
    EncoderConfig cfg;
    cfg.T = io::read_le<std::uint32_t>(is, "T");
    cfg.H = io::read_le<std::uint32_t>(is, "H");
    cfg.W = io::read_le<std::uint32_t>(is, "W");
    cfg.C = io::read_le<std::uint32_t>(is, "C");
    cfg.num_classes = static_cast<int>(io::read_le<std::uint32_t>(is, "num_classes"));
    EncoderParams params = zero_params(cfg);
    for (Tensor* blk : params.blocks()) {
        for (double& v : blk->data) v = io::read_f64(is, "weights");
    }
    return params;
}

}  // namespace vdistill
