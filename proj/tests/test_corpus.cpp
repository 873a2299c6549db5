#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "vdistill/corpus.hpp"

using namespace vdistill;
namespace fs = std::filesystem;

namespace {

CorpusConfig noise_free_config() {
    CorpusConfig cfg = default_corpus_config();
    cfg.noise_std = 0.0;
    return cfg;
}

bool frames_equal(const Tensor& video, std::size_t t0, std::size_t t1) {
    const std::size_t T = video.shape[0];
    const std::size_t fs = video.numel() / T;
    for (std::size_t i = 0; i < fs; ++i) {
        if (video.data[t0 * fs + i] != video.data[t1 * fs + i]) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("generate: counts and shapes of the default corpus") {
    Corpus c = generate(noise_free_config());
    CHECK(c.train.size() == 128);
    CHECK(c.test.size() == 64);
    CHECK(c.reward.size() == 64);
    for (const auto& v : c.train.videos) {
        CHECK(v.shape == std::vector<std::size_t>{8, 16, 16, 1});
    }
}

TEST_CASE("generate: static classes are temporally constant without noise") {
    Corpus c = generate(noise_free_config());
    for (std::size_t i = 0; i < c.train.size(); ++i) {
        if (c.train.labels[i] <= 3) {  // static classes in the default config
            for (std::size_t t = 1; t < 8; ++t) CHECK(frames_equal(c.train.videos[i], 0, t));
        }
    }
}

TEST_CASE("render: left vs right agree on frame 0 and differ on frame 1") {
    ClassSpec left{4, Appearance::dot, Motion::left, 2.0};
    ClassSpec right{5, Appearance::dot, Motion::right, 2.0};
    InstancePhase phase{5, 7, 0};
    RngStream jr(0);
    Tensor vl = render_video(left, 8, 16, 16, 1, phase, jr);
    Tensor vr = render_video(right, 8, 16, 16, 1, phase, jr);
    CHECK(frames_equal(vl, 0, 0));
    const std::size_t fs = 16 * 16;
    bool f0_same = true, f1_same = true;
    for (std::size_t i = 0; i < fs; ++i) {
        if (vl.data[i] != vr.data[i]) f0_same = false;
        if (vl.data[fs + i] != vr.data[fs + i]) f1_same = false;
    }
    CHECK(f0_same);
    CHECK_FALSE(f1_same);
}

TEST_CASE("render: every dynamic pair agrees on frame 0, disagrees later") {
    CorpusConfig cfg = noise_free_config();
    InstancePhase phase{8, 8, 1};
    for (std::size_t i = 4; i < 8; ++i) {
        for (std::size_t j = i + 1; j < 8; ++j) {
            RngStream jr(0);
            Tensor a = render_video(cfg.classes[i], 8, 16, 16, 1, phase, jr);
            Tensor b = render_video(cfg.classes[j], 8, 16, 16, 1, phase, jr);
            const std::size_t fs = 16 * 16;
            bool f0_same = true;
            for (std::size_t k = 0; k < fs; ++k) {
                if (a.data[k] != b.data[k]) f0_same = false;
            }
            CHECK(f0_same);
            CHECK_FALSE(a == b);
        }
    }
}

TEST_CASE("generate is a pure function of config") {
    CorpusConfig cfg = default_corpus_config();
    Corpus a = generate(cfg);
    Corpus b = generate(cfg);
    CHECK(a.train == b.train);
    CHECK(a.test == b.test);
    CHECK(a.reward == b.reward);
}

TEST_CASE("generate rejects overlapping class specs") {
    CorpusConfig cfg = default_corpus_config();
    cfg.classes.push_back({8, Appearance::circle, Motion::none, 0.0});  // same as class 0
    CHECK_THROWS_AS(generate(cfg), ConfigError);
}

TEST_CASE("generate rejects motion none with nonzero speed") {
    CorpusConfig cfg = default_corpus_config();
    cfg.classes[0].speed = 1.0;
    CHECK_THROWS_AS(generate(cfg), ConfigError);
}

TEST_CASE("staticize: already-static video unchanged, shape preserved, reproducible") {
    Corpus c = generate(noise_free_config());
    LabeledVideoSet s1 = staticize(c.train, RngStream(77, 1));
    LabeledVideoSet s2 = staticize(c.train, RngStream(77, 1));
    CHECK(s1 == s2);
    for (std::size_t i = 0; i < s1.size(); ++i) {
        CHECK(s1.videos[i].shape == c.train.videos[i].shape);
        for (std::size_t t = 1; t < 8; ++t) CHECK(frames_equal(s1.videos[i], 0, t));
        if (c.train.labels[i] <= 3) CHECK(s1.videos[i] == c.train.videos[i]);
    }
    CHECK(s1.labels == c.train.labels);
}

TEST_CASE("container round-trip is bit-exact") {
    Corpus c = generate(default_corpus_config());
    const std::string path = (fs::temp_directory_path() / "vdistill_corpus_test.bin").string();
    save(c.train, path);
    LabeledVideoSet loaded = load(path);
    CHECK(loaded == c.train);
    fs::remove(path);
}

TEST_CASE("container errors: bad magic, version mismatch, truncation") {
    Corpus c = generate(noise_free_config());
    const std::string path = (fs::temp_directory_path() / "vdistill_corpus_err.bin").string();
    save(c.train, path);

    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.put('X');
    }
    CHECK_THROWS_AS(load(path), BadMagicError);

    save(c.train, path);
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(4);
        f.put('\x63');  // pretend future version 99
        f.put('\x00');
    }
    CHECK_THROWS_AS(load(path), VersionMismatchError);

    save(c.train, path);
    fs::resize_file(path, fs::file_size(path) / 2);
    CHECK_THROWS_AS(load(path), TruncatedError);
    fs::remove(path);
}

TEST_CASE("manifest round-trip") {
    CorpusConfig cfg = default_corpus_config();
    const std::string path = (fs::temp_directory_path() / "vdistill_manifest.json").string();
    write_manifest(cfg, path);
    CorpusConfig back = read_manifest(path);
    CHECK(back.classes.size() == cfg.classes.size());
    CHECK(back.seed == cfg.seed);
    CHECK(back.noise_std == cfg.noise_std);
    CHECK(back.T == cfg.T);
    fs::remove(path);
}
