#include "vdistill/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace vdistill {

DeltaReport delta_split(const LabeledVideoSet& train, const LabeledVideoSet& test,
                        const EncoderConfig& enc, const TrainConfig& tc, std::size_t k,
                        RngStream rng) {
    std::set<int> cls(train.labels.begin(), train.labels.end());
    if (k > cls.size()) throw ContractError("delta_split: k exceeds class count");

    TrainResult full = train_teacher(train, enc, tc, rng.fork("train_full"));
    LabeledVideoSet static_train = staticize(train, rng.fork("frame_pick"));
    TrainResult stat = train_teacher(static_train, enc, tc, rng.fork("train_static"));

    EvalReport eval_full = evaluate(full.params, test);
    EvalReport eval_static = evaluate(stat.params, test);

    DeltaReport report;
    report.acc_full = eval_full.per_class;
    report.acc_static = eval_static.per_class;
    for (int cid : cls) {
        report.delta[cid] = eval_full.per_class.at(cid) - eval_static.per_class.at(cid);
    }
    report.ranking.assign(cls.begin(), cls.end());
    std::stable_sort(report.ranking.begin(), report.ranking.end(), [&](int a, int b) {
        return report.delta.at(a) > report.delta.at(b);
    });
    report.top_k.assign(report.ranking.begin(), report.ranking.begin() + k);
    return report;
}

std::map<int, int> delta_groups(const DeltaReport& report, int n_groups) {
    if (n_groups < 1) throw ContractError("delta_groups: n_groups must be >= 1");
    // ascending delta: group 0 is the most static bucket
    std::vector<int> ids(report.ranking.rbegin(), report.ranking.rend());
    std::map<int, int> groups;
    const std::size_t m = ids.size();
    for (std::size_t i = 0; i < m; ++i) {
        groups[ids[i]] = static_cast<int>(i * static_cast<std::size_t>(n_groups) / m);
    }
    return groups;
}

RunReport make_run_report(const std::string& method, const EvalReport& eval,
                          const std::map<int, int>& groups, long long dd_iters,
                          std::uint64_t seed) {
    RunReport r;
    r.method = method;
    r.per_class = eval.per_class;
    r.counts = eval.counts;
    r.mean = eval.overall;
    r.group_of_class = groups;
    r.dd_iters = dd_iters;
    r.seed = seed;
    std::map<int, std::size_t> gh, gn;
    for (const auto& [cls, acc] : eval.per_class) {
        auto it = groups.find(cls);
        if (it == groups.end()) continue;
        const std::size_t n = eval.counts.at(cls);
        gh[it->second] += static_cast<std::size_t>(std::lround(acc * static_cast<double>(n)));
        gn[it->second] += n;
    }
    for (const auto& [g, n] : gn) {
        r.group_acc[g] = static_cast<double>(gh[g]) / static_cast<double>(n);
    }
    return r;
}

namespace {

std::map<int, std::vector<std::size_t>> indices_by_class(const LabeledVideoSet& real) {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < real.labels.size(); ++i) by_class[real.labels[i]].push_back(i);
    return by_class;
}

// without replacement
std::vector<std::size_t> sample_ids(const std::vector<std::size_t>& pool, int ipc,
                                    RngStream& rng) {
    if (static_cast<std::size_t>(ipc) > pool.size()) {
        throw ContractError("baseline: ipc exceeds per-class count");
    }
    std::vector<std::size_t> shuffled = pool;
    for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
        std::swap(shuffled[i], shuffled[rng.next_index(i + 1)]);
    }
    shuffled.resize(static_cast<std::size_t>(ipc));
    return shuffled;
}

}  // namespace

SyntheticSet baseline_random(const LabeledVideoSet& real, int ipc, RngStream rng) {
    SyntheticSet set;
    const auto& s = real.videos.at(0).shape;
    set.dims = {s[0], s[1], s[2], s[3]};
    for (const auto& [cid, pool] : indices_by_class(real)) {
        auto stream = rng.fork("random_select", static_cast<std::uint64_t>(cid));
        SyntheticSet::ClassEntry entry;
        entry.class_id = cid;
        entry.resolution = set.dims.L;
        for (std::size_t idx : sample_ids(pool, ipc, stream)) {
            entry.videos.push_back(CompactVideo{real.videos[idx], set.dims.L});
        }
        set.classes.push_back(std::move(entry));
    }
    return set;
}

SyntheticSet baseline_keyframe(const LabeledVideoSet& real, int ipc, RngStream rng) {
    SyntheticSet set;
    const auto& s = real.videos.at(0).shape;
    set.dims = {s[0], s[1], s[2], s[3]};
    for (const auto& [cid, pool] : indices_by_class(real)) {
        auto stream = rng.fork("keyframe_select", static_cast<std::uint64_t>(cid));
        SyntheticSet::ClassEntry entry;
        entry.class_id = cid;
        entry.resolution = 1;
        for (std::size_t idx : sample_ids(pool, ipc, stream)) {
            const Tensor& v = real.videos[idx];
            const std::size_t fs = v.numel() / set.dims.L;
            const std::size_t pick = stream.next_index(set.dims.L);
            CompactVideo cv;
            cv.frames = Tensor({1, set.dims.H, set.dims.W, set.dims.C});
            std::copy(v.data.begin() + pick * fs, v.data.begin() + (pick + 1) * fs,
                      cv.frames.data.begin());
            cv.expand_len = set.dims.L;
            entry.videos.push_back(std::move(cv));
        }
        set.classes.push_back(std::move(entry));
    }
    return set;
}

EvalReport evaluate_synthetic(const SyntheticSet& syn, const LabeledVideoSet& test,
                              const EncoderConfig& enc, const TrainConfig& student,
                              RngStream rng) {
    LabeledVideoSet expanded = expand_all(syn);
    TrainResult trained = train_teacher(expanded, enc, student, rng);
    std::map<int, std::size_t> resolution_map;
    for (const auto& entry : syn.classes) resolution_map[entry.class_id] = entry.resolution;
    return evaluate(trained.params, test, resolution_map);
}

std::size_t search_universal_resolution(const LabeledVideoSet& train,
                                        const LabeledVideoSet& reward_split,
                                        const EncoderParams& teacher, const ActionSpace& actions,
                                        const RlConfig& rl, const DistillConfig& dd,
                                        const VideoDims& dims, RngStream rng) {
    validate(rl);
    validate(dd);
    actions.check(dims.L);
    std::set<int> cls(train.labels.begin(), train.labels.end());
    std::vector<int> class_ids(cls.begin(), cls.end());
    const int n_early = early_iters(dd);
    const std::size_t vs = dims.L * dims.H * dims.W * dims.C;

    const int universal_id = -1;
    QTable q = QTable::zeros(actions, {universal_id});
    RewardFn probe = [&](int, std::size_t a, int t) {
        double sum = 0.0;
        for (int cid : class_ids) {
            RngStream trial = rng.fork("trial", static_cast<std::uint64_t>(cid),
                                       static_cast<std::uint64_t>(t));
            SyntheticSet syn = init_synthetic({{cid, a}}, dims, dd, trial.fork("init"));
            DdResult ddr = dd_update(syn, train, n_early, dd, trial.fork("dd"));
            LabeledVideoSet expanded = expand_all(ddr.syn);
            Tensor syn_batch({expanded.videos.size(), dims.L, dims.H, dims.W, dims.C});
            for (std::size_t i = 0; i < expanded.videos.size(); ++i) {
                std::copy(expanded.videos[i].data.begin(), expanded.videos[i].data.end(),
                          syn_batch.data.begin() + i * vs);
            }
            std::vector<std::size_t> pool;
            for (std::size_t i = 0; i < reward_split.labels.size(); ++i) {
                if (reward_split.labels[i] == cid) pool.push_back(i);
            }
            if (pool.empty()) {
                throw ContractError("universal search: reward split has no class " +
                                    std::to_string(cid));
            }
            const std::size_t nb = std::min<std::size_t>(32, pool.size());
            Tensor real_batch({nb, dims.L, dims.H, dims.W, dims.C});
            for (std::size_t i = 0; i < nb; ++i) {
                const Tensor& v = reward_split.videos[pool[i]];
                std::copy(v.data.begin(), v.data.end(), real_batch.data.begin() + i * vs);
            }
            sum += reward(teacher, syn_batch, real_batch);
        }
        return sum / static_cast<double>(class_ids.size());
    };
    run_policy_learning(q, {universal_id}, rl, probe, rng.fork("policy"));
    return actions.resolutions[q.greedy_index(universal_id)];
}

AblationResult ablation_cases(const LabeledVideoSet& train, const LabeledVideoSet& test,
                              const LabeledVideoSet& reward_split, const EncoderParams& teacher,
                              const AblationConfig& cfg, const std::map<int, int>& groups,
                              std::uint64_t seed) {
    validate(cfg.rl);
    validate(cfg.dd);
    RngStream root(seed);
    std::set<int> cls(train.labels.begin(), train.labels.end());
    std::vector<int> class_ids(cls.begin(), cls.end());
    const long long m = static_cast<long long>(class_ids.size());
    const long long n_early = early_iters(cfg.dd);
    const long long per_class_budget = static_cast<long long>(cfg.rl.T) * n_early + cfg.dd.N;
    const VideoDims dims{cfg.enc.T, cfg.enc.H, cfg.enc.W, cfg.enc.C};
    const ActionSpace actions = ActionSpace::default_for(dims.L);

    AblationResult result;

    {  // Case A: identity partitioning, whole budget on plain distillation
        std::map<int, std::size_t> all_l;
        for (int cid : class_ids) all_l[cid] = dims.L;
        RngStream rng = root.fork("case_a");
        SyntheticSet syn = init_synthetic(all_l, dims, cfg.dd, rng.fork("init"));
        DdResult ddr = dd_update(syn, train, static_cast<int>(per_class_budget), cfg.dd,
                                 rng.fork("dd"));
        EvalReport eval =
            evaluate_synthetic(ddr.syn, test, cfg.enc, cfg.student, rng.fork("student"));
        result.case_a = make_run_report("case_a", eval, groups, per_class_budget * m, seed);
    }

    {  // Case B: one universal resolution searched with a single Q table
        RngStream rng = root.fork("case_b");
        const std::size_t a_star = search_universal_resolution(
            train, reward_split, teacher, actions, cfg.rl, cfg.dd, dims, rng.fork("search"));
        std::map<int, std::size_t> uniform_map;
        for (int cid : class_ids) {
            uniform_map[cid] = a_star;
            result.policy_b[cid] = a_star;
        }
        SyntheticSet syn = init_synthetic(uniform_map, dims, cfg.dd, rng.fork("init"));
        DdResult ddr = dd_update(syn, train, cfg.dd.N, cfg.dd, rng.fork("dd"));
        EvalReport eval =
            evaluate_synthetic(ddr.syn, test, cfg.enc, cfg.student, rng.fork("student"));
        result.case_b = make_run_report("case_b", eval, groups, per_class_budget * m, seed);
    }

    {  // full per-class adaptive pipeline
        RngStream rng = root.fork("full");
        PolicyLearningResult plr = temporal_policy_learning(
            train, reward_split, teacher, actions, cfg.rl, cfg.dd, dims, rng.fork("learn"));
        SynthesisResult synth = synthesize(train, plr.q, cfg.dd, dims, rng.fork("synth"));
        result.policy_full = synth.policy;
        EvalReport eval =
            evaluate_synthetic(synth.syn, test, cfg.enc, cfg.student, rng.fork("student"));
        result.full = make_run_report("full", eval, groups, per_class_budget * m, seed);
    }
    return result;
}

CostTable search_cost_comparison(const RlConfig& rl, const DistillConfig& dd,
                                 std::size_t n_actions, std::size_t n_classes) {
    validate(rl);
    validate(dd);
    CostTable t;
    const long long M = static_cast<long long>(n_classes);
    const long long A = static_cast<long long>(n_actions);
    const long long N = dd.N;
    const long long Ne = early_iters(dd);
    const long long T = rl.T;
    t.grid = A * M * N;
    t.naive_rl = T * M * N;
    t.early_rl = T * M * Ne + M * N;
    t.grid_over_early = static_cast<double>(t.grid) / static_cast<double>(t.early_rl);
    t.naive_over_early = static_cast<double>(t.naive_rl) / static_cast<double>(t.early_rl);
    return t;
}

std::vector<FeatureDumpEntry> feature_dump(const EncoderParams& teacher,
                                           const LabeledVideoSet& real,
                                           const SyntheticSet& syn) {
    const std::size_t F = teacher.config.feat_dim();
    std::vector<FeatureDumpEntry> out;
    auto mean_features = [&](const std::vector<const Tensor*>& videos) {
        std::vector<double> mean(F, 0.0);
        for (const Tensor* v : videos) {
            Tensor batch({1, v->shape[0], v->shape[1], v->shape[2], v->shape[3]});
            batch.data = v->data;
            ForwardResult fwd = forward(teacher, batch);
            for (std::size_t f = 0; f < F; ++f) mean[f] += fwd.features.data[f];
        }
        for (double& v : mean) v /= static_cast<double>(videos.size());
        return mean;
    };
    for (const auto& [cid, pool] : indices_by_class(real)) {
        std::vector<const Tensor*> vids;
        for (std::size_t i : pool) vids.push_back(&real.videos[i]);
        out.push_back({cid, "real", mean_features(vids)});
    }
    for (const auto& entry : syn.classes) {
        std::vector<Tensor> expanded;
        for (const auto& v : entry.videos) expanded.push_back(expand(v));
        std::vector<const Tensor*> vids;
        for (const auto& v : expanded) vids.push_back(&v);
        out.push_back({entry.class_id, "syn", mean_features(vids)});
    }
    return out;
}

namespace {

nlohmann::json run_to_json(const RunReport& r) {
    nlohmann::json j;
    j["method"] = r.method;
    j["mean"] = r.mean;
    j["dd_iters"] = r.dd_iters;
    j["seed"] = r.seed;
    for (const auto& [cls, acc] : r.per_class) {
        j["per_class"][std::to_string(cls)] = acc;
        j["counts"][std::to_string(cls)] = r.counts.at(cls);
    }
    for (const auto& [cls, g] : r.group_of_class) j["group_of_class"][std::to_string(cls)] = g;
    for (const auto& [g, acc] : r.group_acc) j["group_acc"][std::to_string(g)] = acc;
    return j;
}

RunReport run_from_json(const nlohmann::json& j) {
    RunReport r;
    r.method = j.at("method").get<std::string>();
    r.mean = j.at("mean").get<double>();
    r.dd_iters = j.at("dd_iters").get<long long>();
    r.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("per_class")) {
        for (const auto& [key, value] : j.at("per_class").items()) {
            r.per_class[std::stoi(key)] = value.get<double>();
        }
        for (const auto& [key, value] : j.at("counts").items()) {
            r.counts[std::stoi(key)] = value.get<std::size_t>();
        }
    }
    if (j.contains("group_of_class")) {
        for (const auto& [key, value] : j.at("group_of_class").items()) {
            r.group_of_class[std::stoi(key)] = value.get<int>();
        }
    }
    if (j.contains("group_acc")) {
        for (const auto& [key, value] : j.at("group_acc").items()) {
            r.group_acc[std::stoi(key)] = value.get<double>();
        }
    }
    return r;
}

}  // namespace

void emit_report(const ReportBundle& bundle, const std::string& prefix) {
    nlohmann::json j;
    j["version"] = bundle.version;
    j["seed"] = bundle.seed;
    if (!bundle.config_echo.empty()) {
        j["config"] = nlohmann::json::parse(bundle.config_echo);
    }
    j["runs"] = nlohmann::json::array();
    for (const auto& r : bundle.runs) j["runs"].push_back(run_to_json(r));
    for (const auto& [cls, d] : bundle.delta) j["delta"][std::to_string(cls)] = d;
    if (bundle.has_costs) {
        j["costs"] = {{"grid", bundle.costs.grid},
                      {"naive_rl", bundle.costs.naive_rl},
                      {"early_rl", bundle.costs.early_rl},
                      {"grid_over_early", bundle.costs.grid_over_early},
                      {"naive_over_early", bundle.costs.naive_over_early}};
    }
    {
        std::ofstream os(prefix + ".json");
        if (!os) throw IoError("cannot open for write: " + prefix + ".json");
        os << j.dump(2) << "\n";
    }
    {
        std::set<int> all_cls;
        for (const auto& r : bundle.runs) {
            for (const auto& [cls, acc] : r.per_class) {
                (void)acc;
                all_cls.insert(cls);
            }
        }
        for (const auto& [cls, d] : bundle.delta) {
            (void)d;
            all_cls.insert(cls);
        }
        std::ofstream os(prefix + ".csv");
        if (!os) throw IoError("cannot open for write: " + prefix + ".csv");
        os << "class";
        for (const auto& r : bundle.runs) os << "," << r.method << "_acc";
        if (!bundle.delta.empty()) os << ",delta";
        os << "\n";
        for (int cls : all_cls) {
            os << cls;
            for (const auto& r : bundle.runs) {
                os << ",";
                auto it = r.per_class.find(cls);
                if (it != r.per_class.end()) os << it->second;
            }
            if (!bundle.delta.empty()) {
                os << ",";
                auto it = bundle.delta.find(cls);
                if (it != bundle.delta.end()) os << it->second;
            }
            os << "\n";
        }
    }
    {
        nlohmann::json jf = nlohmann::json::array();
        for (const auto& e : bundle.features) {
            jf.push_back({{"class", e.class_id}, {"side", e.side}, {"vec", e.vec}});
        }
        std::ofstream os(prefix + "_features.json");
        if (!os) throw IoError("cannot open for write: " + prefix + "_features.json");
        os << jf.dump() << "\n";
    }
}

ReportBundle load_report(const std::string& json_path) {
    std::ifstream is(json_path);
    if (!is) throw IoError("cannot open for read: " + json_path);
    nlohmann::json j;
    is >> j;
    ReportBundle b;
    b.version = j.at("version").get<std::string>();
    b.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("config")) b.config_echo = j.at("config").dump();
    for (const auto& jr : j.at("runs")) b.runs.push_back(run_from_json(jr));
    if (j.contains("delta")) {
        for (const auto& [key, value] : j.at("delta").items()) {
            b.delta[std::stoi(key)] = value.get<double>();
        }
    }
    if (j.contains("costs")) {
        b.has_costs = true;
        b.costs.grid = j["costs"].at("grid").get<long long>();
        b.costs.naive_rl = j["costs"].at("naive_rl").get<long long>();
        b.costs.early_rl = j["costs"].at("early_rl").get<long long>();
        b.costs.grid_over_early = j["costs"].at("grid_over_early").get<double>();
        b.costs.naive_over_early = j["costs"].at("naive_over_early").get<double>();
    }
    return b;
}

}  // namespace vdistill
