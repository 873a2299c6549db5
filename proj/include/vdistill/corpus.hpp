#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vdistill/numkit.hpp"

namespace vdistill {

enum class Appearance { circle, square, stripes, checker, dot };
enum class Motion { none, jitter, left, right, up, down, oscillate_slow, oscillate_fast };

const char* to_string(Appearance a);
const char* to_string(Motion m);
Appearance appearance_from_string(const std::string& s);
Motion motion_from_string(const std::string& s);

struct ClassSpec {
    int class_id = 0;
    Appearance appearance = Appearance::circle;
    Motion motion = Motion::none;
    double speed = 0.0;  // pixels per frame

    bool is_static() const { return motion == Motion::none; }
};

enum class Split { train, test, reward };

const char* to_string(Split s);

struct LabeledVideoSet {
    std::vector<Tensor> videos;  // each (T, H, W, C)
    std::vector<int> labels;
    Split split = Split::train;
    std::uint64_t corpus_seed = 0;
    std::string generator_version;

    std::size_t size() const { return videos.size(); }

    bool operator==(const LabeledVideoSet& o) const {
        return videos == o.videos && labels == o.labels && split == o.split &&
               corpus_seed == o.corpus_seed && generator_version == o.generator_version;
    }
};

struct CorpusConfig {
    std::vector<ClassSpec> classes;
    int per_class_train = 16;
    int per_class_test = 8;
    int per_class_reward = 8;
    std::size_t T = 8, H = 16, W = 16, C = 1;
    double noise_std = 0.02;
    std::uint64_t seed = 1;
};

// 4 static classes (distinct appearances, no motion) + 4 dynamic classes
// (shared `dot` appearance, distinct motions). Any single frame identifies a
// static class; a single frame is ambiguous among the dynamic ones.
CorpusConfig default_corpus_config();

// Per-instance randomized placement: pattern anchor and phase offset.
struct InstancePhase {
    int cx = 0;
    int cy = 0;
    int offset = 0;
};

// Render one noise-free video of a class at the given phase. Frame 0 depends
// only on (appearance, phase), never on motion.
Tensor render_video(const ClassSpec& spec, std::size_t T, std::size_t H, std::size_t W,
                    std::size_t C, const InstancePhase& phase, RngStream jitter_rng);

struct Corpus {
    LabeledVideoSet train;
    LabeledVideoSet test;
    LabeledVideoSet reward;
};

void validate(const CorpusConfig& config);

// Deterministic in config: same config, bit-identical corpus. Pixels are
// quantized to f32 so container round-trips are exact.
Corpus generate(const CorpusConfig& config);

// Replace each video by one uniformly chosen frame repeated to full length.
LabeledVideoSet staticize(const LabeledVideoSet& set, RngStream rng);

// DVDC container.
void save(const LabeledVideoSet& set, const std::string& path);
LabeledVideoSet load(const std::string& path);

// JSON manifest with ClassSpec metadata, written beside the containers.
void write_manifest(const CorpusConfig& config, const std::string& path);
CorpusConfig read_manifest(const std::string& path);

}  // namespace vdistill
