#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vdistill/corpus.hpp"
#include "vdistill/numkit.hpp"

namespace vdistill {

struct EncoderConfig {
    std::size_t T = 8, H = 16, W = 16, C = 1;
    int num_classes = 8;

    std::size_t feat_dim() const { return 64; }
    std::size_t gvec_dim() const { return T * 16; }
};

void validate(const EncoderConfig& config);

// conv1(3x3x3, C->8) -> ReLU -> 2x2 spatial mean-pool
// conv2(3x3x3, 8->16) -> ReLU -> 2x2 spatial mean-pool
// -> global spatial mean per (frame, channel) -> time-ordered flatten
// -> fc_feat (T*16 -> 64) -> fc_head (64 -> num_classes)
struct EncoderParams {
    EncoderConfig config;
    Tensor conv1_w;  // (8, C, 3, 3, 3)
    Tensor conv1_b;  // (8)
    Tensor conv2_w;  // (16, 8, 3, 3, 3)
    Tensor conv2_b;  // (16)
    Tensor fc_feat_w;  // (64, T*16)
    Tensor fc_feat_b;  // (64)
    Tensor fc_head_w;  // (num_classes, 64)
    Tensor fc_head_b;  // (num_classes)
    std::uint64_t stamp = 0;  // bumped on every in-place update; guards stale caches

    std::vector<Tensor*> blocks();
    std::vector<const Tensor*> blocks() const;
    std::size_t num_params() const;
};

// All-zero parameters of the right shapes.
EncoderParams zero_params(const EncoderConfig& config);

// Uniform(-s, s) with s = 1/sqrt(fan_in) per block.
EncoderParams init_params(const EncoderConfig& config, RngStream rng);

struct ForwardCache {
    std::size_t batch = 0;
    std::uint64_t stamp = 0;
    Tensor input_cf;  // (B, C, T, H, W)
    Tensor pre1;      // (B, 8, T, H, W)
    Tensor pooled1;   // (B, 8, T, H/2, W/2)
    Tensor pre2;      // (B, 16, T, H/2, W/2)
    Tensor gvec;      // (B, T*16)
    Tensor features;  // (B, 64)
};

struct ForwardResult {
    Tensor features;  // (B, 64)
    Tensor logits;    // (B, num_classes)
    ForwardCache cache;
};

// batch: (B, T, H, W, C)
ForwardResult forward(const EncoderParams& params, const Tensor& batch);

struct Gradients {
    EncoderParams params;  // same shapes, gradient values
    Tensor input;          // (B, T, H, W, C)
};

// Either upstream gradient may be empty (numel 0).
Gradients backward(const EncoderParams& params, const ForwardCache& cache,
                   const Tensor& grad_logits, const Tensor& grad_features);

// Mean softmax cross-entropy over the batch and its logit gradient.
std::pair<double, Tensor> softmax_xent(const Tensor& logits, const std::vector<int>& labels);

struct TrainConfig {
    int iters = 1500;
    int batch_size = 16;
    double lr = 0.01;
    double momentum = 0.9;
};

struct TrainResult {
    EncoderParams params;
    std::vector<double> loss_trace;
    std::vector<double> acc_trace;  // minibatch accuracy per iteration
};

TrainResult train_teacher(const LabeledVideoSet& train, const EncoderConfig& config,
                          const TrainConfig& tc, RngStream rng);

struct EvalReport {
    std::map<int, double> per_class;  // absent classes simply have no entry
    std::map<int, std::size_t> counts;
    double overall = 0.0;
};

// If resolution_map is given, each test video of class m goes through the
// temporal partitioning operator at a_m before the forward pass.
EvalReport evaluate(const EncoderParams& params, const LabeledVideoSet& test,
                    const std::optional<std::map<int, std::size_t>>& resolution_map = {});

// DVDP checkpoint.
void save_params(const EncoderParams& params, const std::string& path);
EncoderParams load_params(const std::string& path);

}  // namespace vdistill
