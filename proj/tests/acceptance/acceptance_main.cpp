// Acceptance gate: one pass/fail line per criterion, nonzero exit on failure.
// Criteria 4-6 and 8 are end-to-end statistical checks over seeds and use
// reduced budgets sized for a single desktop CPU core.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "vdistill/analysis.hpp"

using namespace vdistill;
namespace fs = std::filesystem;

namespace {

// ----- shared lean configuration for the end-to-end criteria -----

CorpusConfig lean_corpus(double noise_std, std::uint64_t seed) {
    CorpusConfig cfg = default_corpus_config();
    cfg.per_class_train = 8;
    cfg.per_class_test = 6;
    cfg.per_class_reward = 4;
    cfg.noise_std = noise_std;
    cfg.seed = seed;
    return cfg;
}

EncoderConfig lean_encoder() { return EncoderConfig{}; }

TrainConfig lean_teacher() { return TrainConfig{220, 16, 0.01, 0.9}; }
TrainConfig lean_student() { return TrainConfig{220, 16, 0.01, 0.9}; }

DistillConfig lean_dd() {
    DistillConfig dd;
    dd.N = 60;
    dd.beta = 0.1;  // 6 early-stage iterations
    dd.real_batch_per_class = 6;
    dd.ipc = 1;
    return dd;
}

RlConfig lean_rl() {
    RlConfig rl;
    rl.T = 12;
    return rl;
}

// Teacher whose only feature is the spatial mean of frame 0 (identity taps
// through both convolutions, fc_feat row 0 selecting the frame-0 slot).
EncoderParams frame_mean_teacher() {
    EncoderParams p = zero_params(EncoderConfig{});
    const std::size_t center = (1 * 3 + 1) * 3 + 1;
    p.conv1_w.data[center] = 1.0;
    p.conv2_w.data[center] = 1.0;
    p.fc_feat_w.data[0] = 1.0;
    ++p.stamp;
    return p;
}

Tensor constant_batch(double value) {
    Tensor t({2, 8, 16, 16, 1});
    std::fill(t.data.begin(), t.data.end(), value);
    return t;
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

std::string file_bytes(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// ----- criteria -----

bool criterion_equations(std::string& detail) {
    bool ok = true;
    // reward substitutions (exact)
    EncoderParams t = frame_mean_teacher();
    ok &= near(reward(t, constant_batch(0.4), constant_batch(0.4)), 1.0, 1e-12);
    ok &= near(reward(t, constant_batch(1.5), constant_batch(0.5)), 0.5, 1e-12);
    ok &= near(reward(t, constant_batch(3.0), constant_batch(0.0)), 0.25, 1e-12);

    // q-update substitutions to 1e-12
    ActionSpace acts{{1, 2, 4, 8}};
    RlConfig rl;
    {
        QTable q = QTable::zeros(acts, {0});
        rl.alpha = 0.1;
        rl.gamma = 0.5;
        q_update(q, 0, 2, 0.5, rl);
        ok &= near(q.value(0, 0, 2), 0.05, 1e-12);
    }
    {
        QTable q = QTable::zeros(acts, {0});
        rl.alpha = 1.0;
        rl.gamma = 0.0;
        q_update(q, 0, 1, 0.77, rl);
        ok &= near(q.value(0, 0, 1), 0.77, 1e-12);
    }
    {
        QTable q = QTable::zeros(acts, {0});
        q.at(0, 0, 2) = 0.2;
        q.at(0, 2, 1) = 0.4;
        rl.alpha = 0.1;
        rl.gamma = 0.5;
        q_update(q, 0, 2, 1.0, rl);
        ok &= near(q.value(0, 0, 2), 0.3, 1e-12);
    }

    // exploit/explore frequencies within +-0.02 over 1e4 draws at p = 0.8
    {
        QTable q = QTable::zeros(acts, {0});
        q.at(0, 0, 1) = 1.0;
        RngStream rng(77);
        int greedy = 0;
        const int n = 10000;
        for (int i = 0; i < n; ++i) {
            if (take_action(q, 0, 0.8, rng) == 1) ++greedy;
        }
        ok &= near(greedy / static_cast<double>(n), 0.8 + 0.2 / 4.0, 0.02);
    }

    // partition tables (exact)
    ok &= segment_bounds(8, 3) ==
          std::vector<std::pair<std::size_t, std::size_t>>{{0, 2}, {2, 5}, {5, 8}};
    Tensor ramp({8, 1, 1, 1});
    for (std::size_t i = 0; i < 8; ++i) ramp.data[i] = static_cast<double>(i);
    ok &= crop(ramp, 2).data == std::vector<double>{0, 4};
    ok &= crop(ramp, 3).data == std::vector<double>{0, 2, 5};
    ok &= expand(CompactVideo{Tensor({2, 1, 1, 1}, {10, 20}), 8}).data ==
          std::vector<double>{10, 10, 10, 10, 20, 20, 20, 20};
    ok &= expand(CompactVideo{Tensor({3, 1, 1, 1}, {1, 2, 3}), 8}).data ==
          std::vector<double>{1, 1, 2, 2, 2, 3, 3, 3};

    // early-stage budget
    DistillConfig dd;
    dd.beta = 0.02;
    dd.N = 5000;
    ok &= early_iters(dd) == 100;
    detail = "substitution examples, frequencies, partition tables, early budget";
    return ok;
}

bool criterion_gradients(std::string& detail) {
    bool ok = true;
    // adjoint identity to 1e-10
    RngStream rng(7);
    for (std::size_t a : {1u, 3u, 5u, 8u}) {
        Tensor x = uniform(rng, -1.0, 1.0, {a, 4, 4, 1});
        Tensor g = uniform(rng, -1.0, 1.0, {8, 4, 4, 1});
        Tensor ex = expand(CompactVideo{x, 8});
        double lhs = 0.0;
        for (std::size_t i = 0; i < ex.numel(); ++i) lhs += ex.data[i] * g.data[i];
        Tensor adj = expand_adjoint(g, a);
        double rhs = 0.0;
        for (std::size_t i = 0; i < x.numel(); ++i) rhs += x.data[i] * adj.data[i];
        ok &= near(lhs, rhs, 1e-10);
    }

    // encoder parameter + input gradients vs central differences, tiny net
    EncoderConfig cfg;
    cfg.T = 4;
    cfg.H = 8;
    cfg.W = 8;
    cfg.num_classes = 3;
    EncoderParams params = init_params(cfg, RngStream(3));
    Tensor batch = uniform(rng, 0.0, 1.0, {2, 4, 8, 8, 1});
    std::vector<int> labels{0, 2};
    auto objective = [&](const EncoderParams& p, const Tensor& b) {
        ForwardResult fwd = forward(p, b);
        return softmax_xent(fwd.logits, labels).first;
    };
    ForwardResult fwd = forward(params, batch);
    auto [loss, grad_logits] = softmax_xent(fwd.logits, labels);
    (void)loss;
    Gradients grads = backward(params, fwd.cache, grad_logits, Tensor{});
    const double h = 1e-5;
    int checked = 0;
    RngStream pick(11);
    auto pblocks = params.blocks();
    auto gblocks = grads.params.blocks();
    for (std::size_t bi = 0; bi < pblocks.size(); ++bi) {
        for (int k = 0; k < 4; ++k) {
            const std::size_t i = pick.next_index(pblocks[bi]->numel());
            const double orig = pblocks[bi]->data[i];
            pblocks[bi]->data[i] = orig + h;
            ++params.stamp;
            const double up = objective(params, batch);
            pblocks[bi]->data[i] = orig - h;
            ++params.stamp;
            const double dn = objective(params, batch);
            pblocks[bi]->data[i] = orig;
            ++params.stamp;
            const double fd = (up - dn) / (2.0 * h);
            const double an = gblocks[bi]->data[i];
            const double denom = std::abs(fd) + std::abs(an);
            if (denom > 1e-8) {
                ok &= std::abs(fd - an) / denom < 1e-3;
                ++checked;
            }
        }
    }
    for (int k = 0; k < 8; ++k) {
        const std::size_t i = pick.next_index(batch.numel());
        const double orig = batch.data[i];
        batch.data[i] = orig + h;
        const double up = objective(params, batch);
        batch.data[i] = orig - h;
        const double dn = objective(params, batch);
        batch.data[i] = orig;
        const double fd = (up - dn) / (2.0 * h);
        const double an = grads.input.data[i];
        const double denom = std::abs(fd) + std::abs(an);
        if (denom > 1e-8) {
            ok &= std::abs(fd - an) / denom < 1e-3;
            ++checked;
        }
    }

    // dm_loss pixel gradients through the expand adjoint
    {
        CorpusConfig ccfg = lean_corpus(0.0, 1);
        Corpus corpus = generate(ccfg);
        DistillConfig dd = lean_dd();
        VideoDims dims{8, 16, 16, 1};
        SyntheticSet syn = init_synthetic({{4, 4}}, dims, dd, RngStream(6));
        EncoderParams enc = init_params(EncoderConfig{}, RngStream(7));
        Tensor rb({2, 8, 16, 16, 1});
        std::size_t got = 0;
        const std::size_t vs = 8 * 16 * 16;
        for (std::size_t i = 0; i < corpus.train.size() && got < 2; ++i) {
            if (corpus.train.labels[i] == 4) {
                std::copy(corpus.train.videos[i].data.begin(), corpus.train.videos[i].data.end(),
                          rb.data.begin() + got * vs);
                ++got;
            }
        }
        std::map<int, Tensor> batches;
        batches.emplace(4, rb);
        DmLossResult res = dm_loss(syn, batches, enc);
        Tensor& frames = syn.classes[0].videos[0].frames;
        for (int k = 0; k < 6; ++k) {
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
            if (denom > 1e-8) {
                ok &= std::abs(fd - an) / denom < 1e-3;
                ++checked;
            }
        }
    }
    detail = std::to_string(checked) + " finite-difference probes, rel err < 1e-3";
    return ok;
}

bool criterion_q_sanity(std::string& detail) {
    ActionSpace acts{{1, 2, 4, 8}};
    auto stub_successes = [&](int T, double p, int n_seeds) {
        RlConfig rl;
        rl.T = T;
        rl.p = p;
        int successes = 0;
        for (std::uint64_t seed = 0; seed < static_cast<std::uint64_t>(n_seeds); ++seed) {
            QTable q = QTable::zeros(acts, {0});
            RewardFn probe = [](int, std::size_t a, int) { return a == 4 ? 1.0 : 0.1; };
            run_policy_learning(q, {0}, rl, probe, RngStream(seed));
            if (acts.resolutions[q.greedy_index(0)] == 4) ++successes;
        }
        return successes;
    };
    // pinned operating point: 50 trials at the shipped exploit probability
    const int pinned = stub_successes(50, 0.8, 20);
    // reference point showing the same loop converges given a longer horizon
    const int longer = stub_successes(400, 0.5, 20);

    QTable q = QTable::zeros(acts, {0});
    RlConfig fp;
    fp.alpha = 0.1;
    fp.gamma = 0.5;
    for (int i = 0; i < 200; ++i) q_update(q, 0, 0, 1.0, fp);
    const bool fixed_ok = std::abs(q.value(0, 0, 0) - 2.0) < 1e-3;
    detail = "stub-env success " + std::to_string(pinned) +
             "/20 at T=50 (reference: " + std::to_string(longer) +
             "/20 at T=400, p=0.5), fixed point " + (fixed_ok ? "hit" : "missed");
    return pinned >= 19 && fixed_ok;
}

bool criterion_dynamics_resolution(std::string& detail) {
    const int n_seeds = 10;
    int successes = 0;
    for (std::uint64_t seed = 1; seed <= n_seeds; ++seed) {
        Corpus corpus = generate(lean_corpus(0.02, seed));
        EncoderParams teacher =
            train_teacher(corpus.train, lean_encoder(), lean_teacher(), RngStream(seed)).params;
        VideoDims dims{8, 16, 16, 1};
        PolicyLearningResult plr = temporal_policy_learning(
            corpus.train, corpus.reward, teacher, ActionSpace::default_for(8), lean_rl(),
            lean_dd(), dims, RngStream(seed).fork("learn"));
        bool all_ok = true;
        for (const auto& [cid, cq] : plr.q.per_class) {
            (void)cq;
            const std::size_t a = plr.q.actions.resolutions[plr.q.greedy_index(cid)];
            if (cid <= 3) {
                if (a != 1) all_ok = false;
            } else {
                if (a <= 1) all_ok = false;
            }
        }
        if (all_ok) ++successes;
    }
    detail = "static->a=1 and dynamic->a>1 in " + std::to_string(successes) + "/10 seeds";
    return successes >= 8;
}

struct ArmOutcome {
    RunReport case_a, case_b, full;
    RunReport keyframe;
};

std::vector<ArmOutcome> run_ablations(int n_seeds) {
    std::vector<ArmOutcome> out;
    for (std::uint64_t seed = 1; seed <= static_cast<std::uint64_t>(n_seeds); ++seed) {
        Corpus corpus = generate(lean_corpus(0.02, seed));
        EncoderParams teacher =
            train_teacher(corpus.train, lean_encoder(), lean_teacher(), RngStream(seed)).params;
        // group labels from construction: classes 0-3 static (group 0), 4-7 dynamic (group 1)
        std::map<int, int> groups;
        for (int c = 0; c < 8; ++c) groups[c] = c <= 3 ? 0 : 1;
        AblationConfig cfg{lean_encoder(), lean_student(), lean_rl(), lean_dd()};
        AblationResult res = ablation_cases(corpus.train, corpus.test, corpus.reward, teacher,
                                            cfg, groups, seed);
        ArmOutcome o;
        o.case_a = res.case_a;
        o.case_b = res.case_b;
        o.full = res.full;
        SyntheticSet kf = baseline_keyframe(corpus.train, 1, RngStream(seed).fork("kf"));
        EvalReport kev = evaluate_synthetic(kf, corpus.test, lean_encoder(), lean_student(),
                                            RngStream(seed).fork("kf_student"));
        o.keyframe = make_run_report("keyframe", kev, groups, 0, seed);
        out.push_back(std::move(o));
    }
    return out;
}

bool criterion_ablation_ordering(const std::vector<ArmOutcome>& arms, std::string& detail) {
    int ordered = 0;
    for (const auto& o : arms) {
        if (o.case_a.mean <= o.case_b.mean && o.case_b.mean <= o.full.mean) ++ordered;
    }
    detail = "A <= B <= full in " + std::to_string(ordered) + "/" +
             std::to_string(arms.size()) + " seeds";
    return ordered >= 7;
}

bool criterion_group_degradation(const std::vector<ArmOutcome>& arms, std::string& detail) {
    // averaged over seeds: keyframe and Case A drop on the dynamic group, and
    // the adaptive pipeline's static-dynamic gap is strictly smaller
    auto mean_gap = [&](auto pick_run) {
        double gap = 0.0;
        for (const auto& o : arms) {
            const RunReport& r = pick_run(o);
            gap += r.group_acc.at(0) - r.group_acc.at(1);
        }
        return gap / static_cast<double>(arms.size());
    };
    const double kf_gap = mean_gap([](const ArmOutcome& o) -> const RunReport& {
        return o.keyframe;
    });
    const double a_gap = mean_gap([](const ArmOutcome& o) -> const RunReport& {
        return o.case_a;
    });
    const double full_gap = mean_gap([](const ArmOutcome& o) -> const RunReport& {
        return o.full;
    });
    std::ostringstream ss;
    ss << "static-minus-dynamic group gap: keyframe " << kf_gap << ", caseA " << a_gap
       << ", adaptive " << full_gap;
    detail = ss.str();
    return kf_gap > 0.0 && a_gap > 0.0 && full_gap < kf_gap && full_gap < a_gap;
}

bool criterion_costs(std::string& detail) {
    RlConfig rl;         // shipped default T=40
    DistillConfig dd;    // shipped defaults N=5000, beta=0.02
    CostTable t = search_cost_comparison(rl, dd, 4, 8);
    const bool exact = t.grid == 4LL * 8 * 5000 && t.naive_rl == 40LL * 8 * 5000 &&
                       t.early_rl == 40LL * 8 * 100 + 8LL * 5000;
    std::ostringstream ss;
    ss << "grid/early " << t.grid_over_early << ", naive/early " << t.naive_over_early;
    detail = ss.str();
    return exact && t.grid_over_early >= 2.0 && t.naive_over_early >= 10.0;
}

bool criterion_delta(std::string& detail) {
    const int n_seeds = 10;
    int separated = 0;
    for (std::uint64_t seed = 1; seed <= n_seeds; ++seed) {
        Corpus corpus = generate(lean_corpus(0.0, seed));
        DeltaReport rep = delta_split(corpus.train, corpus.test, lean_encoder(), lean_teacher(),
                                      4, RngStream(seed).fork("delta"));
        double min_dyn = 1e9, max_stat = -1e9;
        for (int c = 0; c < 8; ++c) {
            if (c <= 3) {
                max_stat = std::max(max_stat, rep.delta.at(c));
            } else {
                min_dyn = std::min(min_dyn, rep.delta.at(c));
            }
        }
        if (min_dyn > max_stat) ++separated;
    }
    // with default noise: pairwise rank agreement over the 16 dynamic-static pairs
    Corpus noisy = generate(lean_corpus(0.02, 3));
    DeltaReport rep = delta_split(noisy.train, noisy.test, lean_encoder(), lean_teacher(), 4,
                                  RngStream(3).fork("delta"));
    int agree = 0;
    for (int d = 4; d < 8; ++d) {
        for (int s = 0; s < 4; ++s) {
            if (rep.delta.at(d) > rep.delta.at(s)) ++agree;
        }
    }
    detail = "perfect separation " + std::to_string(separated) + "/10 noise-free seeds, " +
             std::to_string(agree) + "/16 noisy pairs ranked correctly";
    return separated >= 8 && agree >= 15;  // >= 90% of 16 pairs
}

bool criterion_reproducibility(std::string& detail) {
    const fs::path dir = fs::temp_directory_path() / "vdistill_acceptance_repro";
    fs::remove_all(dir);
    fs::create_directories(dir);
    bool ok = true;

    CorpusConfig ccfg = lean_corpus(0.02, 5);
    Corpus c1 = generate(ccfg);
    Corpus c2 = generate(ccfg);
    save(c1.train, (dir / "a.dvdc").string());
    save(c2.train, (dir / "b.dvdc").string());
    ok &= file_bytes((dir / "a.dvdc").string()) == file_bytes((dir / "b.dvdc").string());

    TrainConfig tc{40, 8, 0.01, 0.9};
    EncoderParams t1 = train_teacher(c1.train, lean_encoder(), tc, RngStream(5)).params;
    EncoderParams t2 = train_teacher(c2.train, lean_encoder(), tc, RngStream(5)).params;
    save_params(t1, (dir / "a.dvdp").string());
    save_params(t2, (dir / "b.dvdp").string());
    ok &= file_bytes((dir / "a.dvdp").string()) == file_bytes((dir / "b.dvdp").string());

    DistillConfig dd = lean_dd();
    dd.N = 8;
    VideoDims dims{8, 16, 16, 1};
    RlConfig rl;
    rl.T = 3;
    auto run_pipeline = [&](const Corpus& c, const EncoderParams& teacher,
                            const std::string& stem) {
        PolicyLearningResult plr = temporal_policy_learning(
            c.train, c.reward, teacher, ActionSpace::default_for(8), rl, dd, dims,
            RngStream(5).fork("learn"));
        SynthesisResult sr = synthesize(c.train, plr.q, dd, dims, RngStream(5).fork("synth"));
        save_synthetic(sr.syn, (dir / (stem + ".dvds")).string());
        save_policy(sr.policy, (dir / (stem + ".json")).string());
    };
    run_pipeline(c1, t1, "a");
    run_pipeline(c2, t2, "b");
    ok &= file_bytes((dir / "a.dvds").string()) == file_bytes((dir / "b.dvds").string());
    ok &= file_bytes((dir / "a.json").string()) == file_bytes((dir / "b.json").string());

    ReportBundle bundle;
    bundle.seed = 5;
    bundle.costs = search_cost_comparison(RlConfig{}, DistillConfig{}, 4, 8);
    bundle.has_costs = true;
    emit_report(bundle, (dir / "ra").string());
    emit_report(bundle, (dir / "rb").string());
    ok &= file_bytes((dir / "ra.json").string()) == file_bytes((dir / "rb.json").string());

    fs::remove_all(dir);
    detail = "corpus, teacher, synthetic set, policy and report rerun byte-identical";
    return ok;
}

}  // namespace

int main() {
    using Clock = std::chrono::steady_clock;
    int failures = 0;
    auto report = [&](int idx, const char* name, bool pass, const std::string& detail,
                      double secs) {
        std::printf("%s criterion %d (%s): %s [%.1fs]\n", pass ? "PASS" : "FAIL", idx, name,
                    detail.c_str(), secs);
        if (!pass) ++failures;
    };
    auto timed = [&](int idx, const char* name, const std::function<bool(std::string&)>& fn) {
        std::string detail;
        const auto t0 = Clock::now();
        bool pass = false;
        try {
            pass = fn(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        report(idx, name, pass, detail, secs);
    };

    timed(1, "equation conformance", criterion_equations);
    timed(2, "gradient correctness", criterion_gradients);
    timed(3, "q-learning sanity", criterion_q_sanity);
    timed(4, "dynamics-resolution correspondence", criterion_dynamics_resolution);

    std::vector<ArmOutcome> arms;
    {
        std::string detail;
        const auto t0 = Clock::now();
        bool pass5 = false, pass6 = false;
        std::string d5, d6;
        try {
            arms = run_ablations(10);
            pass5 = criterion_ablation_ordering(arms, d5);
            const double mid = std::chrono::duration<double>(Clock::now() - t0).count();
            report(5, "ablation ordering", pass5, d5, mid);
            const auto t1 = Clock::now();
            pass6 = criterion_group_degradation(arms, d6);
            report(6, "dynamic-group degradation", pass6, d6,
                   std::chrono::duration<double>(Clock::now() - t1).count());
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
            report(5, "ablation ordering", false, detail,
                   std::chrono::duration<double>(Clock::now() - t0).count());
            report(6, "dynamic-group degradation", false, detail, 0.0);
        }
    }

    timed(7, "search-cost claim", criterion_costs);
    timed(8, "delta-metric validity", criterion_delta);
    timed(9, "reproducibility", criterion_reproducibility);

    if (failures == 0) {
        std::printf("all 9 criteria passed\n");
    } else {
        std::printf("%d criteria failed\n", failures);
    }
    return failures == 0 ? 0 : 1;
}
