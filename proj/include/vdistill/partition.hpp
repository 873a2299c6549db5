#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "vdistill/numkit.hpp"

namespace vdistill {

// Synthetic video stored at its temporal resolution: `frames` holds `a`
// distinct frames, expanded to `expand_len` frames when fed to a model.
struct CompactVideo {
    Tensor frames;               // (a, H, W, C)
    std::size_t expand_len = 0;  // L

    std::size_t resolution() const { return frames.shape.empty() ? 0 : frames.shape[0]; }
};

// Uniform segmentation of [0, L) into a segments: segment i is
// [floor(i*L/a), floor((i+1)*L/a)). Every segment is nonempty for a <= L.
inline std::vector<std::pair<std::size_t, std::size_t>> segment_bounds(std::size_t L,
                                                                       std::size_t a) {
    if (a < 1 || a > L) throw ContractError("segment_bounds: require 1 <= a <= L");
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(a);
    for (std::size_t i = 0; i < a; ++i) {
        out.emplace_back(i * L / a, (i + 1) * L / a);
    }
    return out;
}

namespace detail {
inline std::size_t frame_size(const Tensor& video) {
    std::size_t fs = 1;
    for (std::size_t d = 1; d < video.shape.size(); ++d) fs *= video.shape[d];
    return fs;
}
}  // namespace detail

// Temporal crop: keep the first frame of each segment.
inline Tensor crop(const Tensor& video, std::size_t a) {
    if (video.shape.size() != 4) throw ContractError("crop: expected rank-4 video");
    const std::size_t L = video.shape[0];
    const auto bounds = segment_bounds(L, a);
    const std::size_t fs = detail::frame_size(video);
    Tensor out({a, video.shape[1], video.shape[2], video.shape[3]});
    for (std::size_t i = 0; i < a; ++i) {
        const double* src = video.data.data() + bounds[i].first * fs;
        std::copy(src, src + fs, out.data.data() + i * fs);
    }
    return out;
}

// Interleave-repeat back to full length: frame t takes compact frame i
// where t lies in segment i.
inline Tensor expand(const CompactVideo& compact) {
    const Tensor& c = compact.frames;
    if (c.shape.size() != 4) throw ContractError("expand: expected rank-4 frames");
    const std::size_t a = c.shape[0];
    const std::size_t L = compact.expand_len;
    const auto bounds = segment_bounds(L, a);
    const std::size_t fs = detail::frame_size(c);
    Tensor out({L, c.shape[1], c.shape[2], c.shape[3]});
    for (std::size_t i = 0; i < a; ++i) {
        const double* src = c.data.data() + i * fs;
        for (std::size_t t = bounds[i].first; t < bounds[i].second; ++t) {
            std::copy(src, src + fs, out.data.data() + t * fs);
        }
    }
    return out;
}

// Vector-Jacobian product of expand: compact gradient frame i sums the
// full-length gradient over segment i.
inline Tensor expand_adjoint(const Tensor& grad_out, std::size_t a) {
    if (grad_out.shape.size() != 4) throw ContractError("expand_adjoint: expected rank-4");
    const std::size_t L = grad_out.shape[0];
    const auto bounds = segment_bounds(L, a);
    const std::size_t fs = detail::frame_size(grad_out);
    Tensor out({a, grad_out.shape[1], grad_out.shape[2], grad_out.shape[3]});
    for (std::size_t i = 0; i < a; ++i) {
        double* dst = out.data.data() + i * fs;
        for (std::size_t t = bounds[i].first; t < bounds[i].second; ++t) {
            const double* src = grad_out.data.data() + t * fs;
            for (std::size_t j = 0; j < fs; ++j) dst[j] += src[j];
        }
    }
    return out;
}

// Full temporal partitioning operator: expand(crop(video, a)).
inline Tensor partition(const Tensor& video, std::size_t a) {
    CompactVideo c{crop(video, a), video.shape[0]};
    return expand(c);
}

}  // namespace vdistill
