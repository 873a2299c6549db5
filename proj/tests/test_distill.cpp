#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "vdistill/distill.hpp"

using namespace vdistill;
namespace fs = std::filesystem;

namespace {

CorpusConfig small_corpus_config() {
    CorpusConfig cfg = default_corpus_config();
    cfg.per_class_train = 6;
    cfg.per_class_test = 2;
    cfg.per_class_reward = 2;
    cfg.noise_std = 0.0;
    return cfg;
}

DistillConfig small_dd() {
    DistillConfig dd;
    dd.N = 20;
    dd.beta = 0.25;
    dd.real_batch_per_class = 4;
    dd.ipc = 1;
    return dd;
}

std::map<int, std::size_t> actions_for(const std::vector<int>& ids, std::size_t a) {
    std::map<int, std::size_t> m;
    for (int cid : ids) m[cid] = a;
    return m;
}

}  // namespace

TEST_CASE("early_iters: paper defaults, full budget, floor at one") {
    DistillConfig dd;
    dd.beta = 0.02;
    dd.N = 5000;
    CHECK(early_iters(dd) == 100);
    dd.beta = 1.0;
    dd.N = 7;
    CHECK(early_iters(dd) == 7);
    dd.beta = 0.001;
    dd.N = 100;
    CHECK(early_iters(dd) == 1);
}

TEST_CASE("init_synthetic: storage bookkeeping and determinism") {
    VideoDims dims{8, 16, 16, 1};
    DistillConfig dd = small_dd();
    dd.ipc = 2;
    auto actions = std::map<int, std::size_t>{{0, 1}, {1, 4}, {2, 8}};
    SyntheticSet a = init_synthetic(actions, dims, dd, RngStream(5));
    SyntheticSet b = init_synthetic(actions, dims, dd, RngStream(5));
    CHECK(a == b);
    CHECK(a.stored_frames() == 2 * (1 + 4 + 8));
    CHECK(a.entry(0).videos[0].frames.shape == std::vector<std::size_t>{1, 16, 16, 1});
    for (const auto& e : a.classes) {
        for (const auto& v : e.videos) {
            for (double x : v.frames.data) {
                CHECK(x >= 0.0);
                CHECK(x < 1.0);
            }
        }
    }
}

TEST_CASE("dm_loss: zero at the quadratic minimum") {
    VideoDims dims{8, 16, 16, 1};
    Corpus corpus = generate(small_corpus_config());
    EncoderConfig ecfg;
    ecfg.num_classes = 8;
    EncoderParams enc = init_params(ecfg, RngStream(3));

    // one class, ipc=1, synthetic identical to the single real video
    SyntheticSet syn;
    syn.dims = dims;
    SyntheticSet::ClassEntry entry;
    entry.class_id = 0;
    entry.resolution = 8;
    entry.videos.push_back(CompactVideo{corpus.train.videos[0], 8});
    syn.classes.push_back(entry);

    Tensor batch({1, 8, 16, 16, 1});
    batch.data = corpus.train.videos[0].data;
    DmLossResult res = dm_loss(syn, {{0, batch}}, enc);
    CHECK(res.loss == doctest::Approx(0.0).epsilon(1e-12));
    for (double g : res.grads[0][0].data) CHECK(g == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("dm_loss: missing class batch is a contract violation") {
    VideoDims dims{8, 16, 16, 1};
    DistillConfig dd = small_dd();
    SyntheticSet syn = init_synthetic({{0, 4}}, dims, dd, RngStream(1));
    EncoderConfig ecfg;
    ecfg.num_classes = 8;
    EncoderParams enc = init_params(ecfg, RngStream(3));
    CHECK_THROWS_AS(dm_loss(syn, {}, enc), ContractError);
}

TEST_CASE("dm_loss gradient matches finite differences on compact pixels") {
    VideoDims dims{8, 16, 16, 1};
    DistillConfig dd = small_dd();
    Corpus corpus = generate(small_corpus_config());
    SyntheticSet syn = init_synthetic({{4, 4}}, dims, dd, RngStream(6));
    EncoderConfig ecfg;
    ecfg.num_classes = 8;
    EncoderParams enc = init_params(ecfg, RngStream(7));

    Tensor batch({3, 8, 16, 16, 1});
    std::size_t got = 0;
    const std::size_t vs = 8 * 16 * 16;
    for (std::size_t i = 0; i < corpus.train.size() && got < 3; ++i) {
        if (corpus.train.labels[i] == 4) {
            std::copy(corpus.train.videos[i].data.begin(), corpus.train.videos[i].data.end(),
                      batch.data.begin() + got * vs);
            ++got;
        }
    }
    std::map<int, Tensor> batches;
    batches.emplace(4, batch);

    DmLossResult res = dm_loss(syn, batches, enc);
    Tensor& frames = syn.classes[0].videos[0].frames;
    const double h = 1e-5;
    RngStream pick(8);
    for (int k = 0; k < 10; ++k) {
        const std::size_t i = pick.next_index(frames.numel());
        const double orig = frames.data[i];
        frames.data[i] = orig + h;
        const double up = dm_loss(syn, batches, enc).loss;
        frames.data[i] = orig - h;
        const double dn = dm_loss(syn, batches, enc).loss;
        frames.data[i] = orig;
        const double fd = (up - dn) / (2.0 * h);
        const double an = res.grads[0][0].data[i];
        const double denom = std::abs(fd) + std::abs(an);
        if (denom > 1e-8) CHECK(std::abs(fd - an) / denom < 1e-3);
    }
}

TEST_CASE("dd_update: zero learning rate leaves pixels unchanged") {
    VideoDims dims{8, 16, 16, 1};
    DistillConfig dd = small_dd();
    dd.lr_syn = 0.0;
    Corpus corpus = generate(small_corpus_config());
    SyntheticSet syn =
        init_synthetic(actions_for({0, 1, 2, 3, 4, 5, 6, 7}, 4), dims, dd, RngStream(2));
    DdResult res = dd_update(syn, corpus.train, 3, dd, RngStream(3));
    CHECK(res.syn == syn);
    CHECK(res.loss_trace.size() == 3);
}

TEST_CASE("dd_update: loss trace falls and pixels stay in range") {
    VideoDims dims{8, 16, 16, 1};
    DistillConfig dd = small_dd();
    Corpus corpus = generate(small_corpus_config());
    SyntheticSet syn =
        init_synthetic(actions_for({0, 1, 2, 3, 4, 5, 6, 7}, 4), dims, dd, RngStream(2));
    const int iters = 30;
    DdResult res = dd_update(syn, corpus.train, iters, dd, RngStream(3));
    double head = 0.0, tail = 0.0;
    const int k = iters / 10;
    for (int i = 0; i < k; ++i) head += res.loss_trace[i];
    for (int i = iters - k; i < iters; ++i) tail += res.loss_trace[i];
    CHECK(tail < head);
    for (const auto& e : res.syn.classes) {
        for (const auto& v : e.videos) {
            for (double x : v.frames.data) {
                CHECK(x >= 0.0);
                CHECK(x <= 1.0);
            }
        }
    }
    // determinism
    DdResult res2 = dd_update(syn, corpus.train, iters, dd, RngStream(3));
    CHECK(res2.syn == res.syn);
    CHECK(res2.loss_trace == res.loss_trace);
}

TEST_CASE("synthetic container: round-trip and size affine in stored frames") {
    VideoDims dims{8, 16, 16, 1};
    DistillConfig dd = small_dd();
    const std::string p1 = (fs::temp_directory_path() / "vdistill_syn1.bin").string();
    const std::string p2 = (fs::temp_directory_path() / "vdistill_syn2.bin").string();

    SyntheticSet s1 = init_synthetic({{0, 1}, {1, 1}}, dims, dd, RngStream(4));
    SyntheticSet s2 = init_synthetic({{0, 8}, {1, 4}}, dims, dd, RngStream(4));
    save_synthetic(s1, p1);
    save_synthetic(s2, p2);
    CHECK(load_synthetic(p1) == s1);
    CHECK(load_synthetic(p2) == s2);

    const auto frame_bytes = 16 * 16 * 1 * 8;  // f64 payload
    const long long d1 = static_cast<long long>(fs::file_size(p1));
    const long long d2 = static_cast<long long>(fs::file_size(p2));
    CHECK(d2 - d1 == static_cast<long long>((s2.stored_frames() - s1.stored_frames()) *
                                            frame_bytes));
    fs::remove(p1);
    fs::remove(p2);
}
