#pragma once

#include <map>
#include <string>
#include <vector>

#include "vdistill/corpus.hpp"
#include "vdistill/encoder.hpp"
#include "vdistill/partition.hpp"

namespace vdistill {

struct VideoDims {
    std::size_t L = 8, H = 16, W = 16, C = 1;
};

// Per-class synthetic videos stored compactly at their temporal resolution.
struct SyntheticSet {
    struct ClassEntry {
        int class_id = 0;
        std::size_t resolution = 1;  // a_m
        std::vector<CompactVideo> videos;
    };
    std::vector<ClassEntry> classes;  // ascending class_id
    VideoDims dims;

    const ClassEntry& entry(int class_id) const;
    std::size_t stored_frames() const;  // sum over classes of ipc * a_m

    bool operator==(const SyntheticSet& o) const;
};

struct DistillConfig {
    int N = 5000;           // total DD iterations
    double beta = 0.02;     // early-stage fraction
    double lr_syn = 10.0;
    double momentum_syn = 0.95;
    int real_batch_per_class = 16;
    int ipc = 1;
};

void validate(const DistillConfig& config);

// round-to-nearest(beta * N), floored at 1.
int early_iters(const DistillConfig& config);

// IPC compact videos per class, pixels uniform in [0,1).
SyntheticSet init_synthetic(const std::map<int, std::size_t>& actions, const VideoDims& dims,
                            const DistillConfig& config, RngStream rng);

struct DmLossResult {
    double loss = 0.0;
    // grads[class index][video index], compact shape
    std::vector<std::vector<Tensor>> grads;
};

// Sum over classes of || mean feat(expanded syn) - mean feat(real batch) ||^2,
// with gradients pushed through the encoder and the expand adjoint.
DmLossResult dm_loss(const SyntheticSet& syn,
                     const std::map<int, Tensor>& real_batches,
                     const EncoderParams& enc);

struct DdResult {
    SyntheticSet syn;
    std::vector<double> loss_trace;
};

// Distribution-matching update loop: fresh random encoder each iteration,
// per-class real batches, SGD on compact pixels, clamp to [0,1].
DdResult dd_update(const SyntheticSet& syn, const LabeledVideoSet& real, int iters,
                   const DistillConfig& config, RngStream rng);

// Expanded synthetic videos as a labeled set (for student training / reward).
LabeledVideoSet expand_all(const SyntheticSet& syn);

// DVDS checkpoint.
void save_synthetic(const SyntheticSet& set, const std::string& path);
SyntheticSet load_synthetic(const std::string& path);

}  // namespace vdistill
