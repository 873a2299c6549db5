// Command-line front end: each subcommand runs one cached pipeline stage and
// writes its outputs plus the effective config snapshot into the run directory.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "vdistill/analysis.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vdistill;

namespace {

struct MissingArtifact : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    CorpusConfig corpus;
    TrainConfig teacher;
    TrainConfig student;
    DistillConfig dd;
    RlConfig rl;
    int n_groups = 4;
    int top_k = 4;
    std::uint64_t seed = 1;
    int threads = 1;
};

RunConfig defaults() {
    RunConfig rc;
    rc.corpus = default_corpus_config();
    rc.teacher = TrainConfig{1500, 16, 0.01, 0.9};
    rc.student = TrainConfig{300, 8, 0.01, 0.9};
    return rc;
}

json to_json(const RunConfig& rc) {
    json j;
    j["seed"] = rc.seed;
    j["threads"] = rc.threads;
    j["corpus"]["seed"] = rc.corpus.seed;
    j["corpus"]["noise_std"] = rc.corpus.noise_std;
    j["corpus"]["per_class_train"] = rc.corpus.per_class_train;
    j["corpus"]["per_class_test"] = rc.corpus.per_class_test;
    j["corpus"]["per_class_reward"] = rc.corpus.per_class_reward;
    j["corpus"]["T"] = rc.corpus.T;
    j["corpus"]["H"] = rc.corpus.H;
    j["corpus"]["W"] = rc.corpus.W;
    j["corpus"]["C"] = rc.corpus.C;
    j["corpus"]["classes"] = json::array();
    for (const auto& c : rc.corpus.classes) {
        j["corpus"]["classes"].push_back({{"class_id", c.class_id},
                                          {"appearance", to_string(c.appearance)},
                                          {"motion", to_string(c.motion)},
                                          {"speed", c.speed}});
    }
    auto train_json = [](const TrainConfig& tc) {
        return json{{"iters", tc.iters},
                    {"batch_size", tc.batch_size},
                    {"lr", tc.lr},
                    {"momentum", tc.momentum}};
    };
    j["teacher"] = train_json(rc.teacher);
    j["student"] = train_json(rc.student);
    j["distill"] = {{"N", rc.dd.N},
                    {"beta", rc.dd.beta},
                    {"lr_syn", rc.dd.lr_syn},
                    {"momentum_syn", rc.dd.momentum_syn},
                    {"real_batch_per_class", rc.dd.real_batch_per_class},
                    {"ipc", rc.dd.ipc}};
    j["rl"] = {{"T", rc.rl.T}, {"alpha", rc.rl.alpha}, {"gamma", rc.rl.gamma}, {"p", rc.rl.p}};
    j["analysis"] = {{"n_groups", rc.n_groups}, {"top_k", rc.top_k}};
    return j;
}

template <typename T>
void pick(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

RunConfig from_json(const json& j) {
    RunConfig rc = defaults();
    pick(j, "seed", rc.seed);
    pick(j, "threads", rc.threads);
    if (j.contains("corpus")) {
        const json& c = j.at("corpus");
        pick(c, "seed", rc.corpus.seed);
        pick(c, "noise_std", rc.corpus.noise_std);
        pick(c, "per_class_train", rc.corpus.per_class_train);
        pick(c, "per_class_test", rc.corpus.per_class_test);
        pick(c, "per_class_reward", rc.corpus.per_class_reward);
        pick(c, "T", rc.corpus.T);
        pick(c, "H", rc.corpus.H);
        pick(c, "W", rc.corpus.W);
        pick(c, "C", rc.corpus.C);
        if (c.contains("classes")) {
            rc.corpus.classes.clear();
            for (const auto& jc : c.at("classes")) {
                ClassSpec spec;
                spec.class_id = jc.at("class_id").get<int>();
                spec.appearance = appearance_from_string(jc.at("appearance").get<std::string>());
                spec.motion = motion_from_string(jc.at("motion").get<std::string>());
                spec.speed = jc.value("speed", 0.0);
                rc.corpus.classes.push_back(spec);
            }
        }
    }
    auto pick_train = [&](const char* sec, TrainConfig& tc) {
        if (!j.contains(sec)) return;
        const json& t = j.at(sec);
        pick(t, "iters", tc.iters);
        pick(t, "batch_size", tc.batch_size);
        pick(t, "lr", tc.lr);
        pick(t, "momentum", tc.momentum);
    };
    pick_train("teacher", rc.teacher);
    pick_train("student", rc.student);
    if (j.contains("distill")) {
        const json& d = j.at("distill");
        pick(d, "N", rc.dd.N);
        pick(d, "beta", rc.dd.beta);
        pick(d, "lr_syn", rc.dd.lr_syn);
        pick(d, "momentum_syn", rc.dd.momentum_syn);
        pick(d, "real_batch_per_class", rc.dd.real_batch_per_class);
        pick(d, "ipc", rc.dd.ipc);
    }
    if (j.contains("rl")) {
        const json& r = j.at("rl");
        pick(r, "T", rc.rl.T);
        pick(r, "alpha", rc.rl.alpha);
        pick(r, "gamma", rc.rl.gamma);
        pick(r, "p", rc.rl.p);
    }
    if (j.contains("analysis")) {
        pick(j.at("analysis"), "n_groups", rc.n_groups);
        pick(j.at("analysis"), "top_k", rc.top_k);
    }
    return rc;
}

// Every scalar config key can be overridden via VDISTILL_<SECTION>_<KEY>
// (VDISTILL_SEED / VDISTILL_THREADS at the top level).
void apply_env_overrides(json& j, const std::string& prefix = "VDISTILL") {
    for (auto& [key, value] : j.items()) {
        std::string name = prefix + "_" + key;
        for (char& ch : name) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        if (value.is_object()) {
            apply_env_overrides(value, prefix + "_" + key);
            continue;
        }
        if (value.is_array()) continue;
        if (const char* env = std::getenv(name.c_str())) {
            value = json::parse(env, nullptr, false);
            if (value.is_discarded()) value = std::string(env);
        }
    }
}

RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_flag) {
    json j = to_json(defaults());
    if (!path.empty()) {
        std::ifstream is(path);
        if (!is) throw ConfigError("config file not found: " + path);
        json user;
        try {
            is >> user;
        } catch (const json::exception& e) {
            throw ConfigError("config parse failure in " + path + ": " + e.what());
        }
        j.merge_patch(user);
    }
    apply_env_overrides(j);
    RunConfig rc = from_json(j);
    if (seed_flag) {
        rc.seed = *seed_flag;
        rc.corpus.seed = *seed_flag;
    }
    if (rc.threads < 1) throw ConfigError("threads must be >= 1");
    validate(rc.corpus);
    validate(rc.dd);
    validate(rc.rl);
    return rc;
}

void echo_config(const RunConfig& rc, const fs::path& out) {
    fs::create_directories(out);
    std::ofstream os(out / "config_echo.json");
    if (!os) throw IoError("cannot open for write: " + (out / "config_echo.json").string());
    os << to_json(rc).dump(2) << "\n";
}

void require(const fs::path& p) {
    if (!fs::exists(p)) throw MissingArtifact("missing prerequisite artifact: " + p.string());
}

EncoderConfig encoder_config(const RunConfig& rc) {
    EncoderConfig enc;
    enc.T = rc.corpus.T;
    enc.H = rc.corpus.H;
    enc.W = rc.corpus.W;
    enc.C = rc.corpus.C;
    enc.num_classes = static_cast<int>(rc.corpus.classes.size());
    return enc;
}

VideoDims dims_of(const RunConfig& rc) {
    return {rc.corpus.T, rc.corpus.H, rc.corpus.W, rc.corpus.C};
}

std::map<int, int> load_groups(const fs::path& out) {
    std::map<int, int> groups;
    const fs::path p = out / "delta.json";
    if (!fs::exists(p)) return groups;
    std::ifstream is(p);
    json j;
    is >> j;
    for (const auto& [key, value] : j.at("groups").items()) {
        groups[std::stoi(key)] = value.get<int>();
    }
    return groups;
}

int cmd_gen_corpus(const RunConfig& rc, const fs::path& out) {
    echo_config(rc, out);
    Corpus corpus = generate(rc.corpus);
    save(corpus.train, (out / "train.dvdc").string());
    save(corpus.test, (out / "test.dvdc").string());
    save(corpus.reward, (out / "reward.dvdc").string());
    write_manifest(rc.corpus, (out / "manifest.json").string());
    std::cout << "train: " << corpus.train.size() << " videos\n"
              << "test: " << corpus.test.size() << " videos\n"
              << "reward: " << corpus.reward.size() << " videos\n";
    return 0;
}

int cmd_train_teacher(const RunConfig& rc, const fs::path& out) {
    require(out / "train.dvdc");
    echo_config(rc, out);
    LabeledVideoSet train = load((out / "train.dvdc").string());
    TrainResult res = train_teacher(train, encoder_config(rc), rc.teacher, RngStream(rc.seed));
    save_params(res.params, (out / "teacher.dvdp").string());
    json trace;
    trace["loss"] = res.loss_trace;
    trace["acc"] = res.acc_trace;
    std::ofstream os(out / "teacher_trace.json");
    os << trace.dump() << "\n";
    std::cout << "teacher: " << res.loss_trace.size() << " iterations, final minibatch acc "
              << (res.acc_trace.empty() ? 0.0 : res.acc_trace.back()) << "\n";
    return 0;
}

int cmd_delta_split(const RunConfig& rc, const fs::path& out) {
    require(out / "train.dvdc");
    require(out / "test.dvdc");
    echo_config(rc, out);
    LabeledVideoSet train = load((out / "train.dvdc").string());
    LabeledVideoSet test = load((out / "test.dvdc").string());
    DeltaReport rep = delta_split(train, test, encoder_config(rc), rc.teacher,
                                  static_cast<std::size_t>(rc.top_k),
                                  RngStream(rc.seed).fork("delta"));
    std::map<int, int> groups = delta_groups(rep, rc.n_groups);
    json j;
    for (const auto& [cid, d] : rep.delta) j["delta"][std::to_string(cid)] = d;
    for (const auto& [cid, a] : rep.acc_full) j["acc_full"][std::to_string(cid)] = a;
    for (const auto& [cid, a] : rep.acc_static) j["acc_static"][std::to_string(cid)] = a;
    j["ranking"] = rep.ranking;
    j["top_k"] = rep.top_k;
    for (const auto& [cid, g] : groups) j["groups"][std::to_string(cid)] = g;
    std::ofstream os(out / "delta.json");
    if (!os) throw IoError("cannot open for write: " + (out / "delta.json").string());
    os << j.dump(2) << "\n";
    std::cout << "delta: most dynamic class " << rep.ranking.front() << ", most static "
              << rep.ranking.back() << "\n";
    return 0;
}

int cmd_distill(const RunConfig& rc, const fs::path& out, const std::string& arm) {
    require(out / "train.dvdc");
    if (arm != "A") {
        require(out / "teacher.dvdp");
        require(out / "reward.dvdc");
    }
    echo_config(rc, out);
    LabeledVideoSet train = load((out / "train.dvdc").string());
    const VideoDims dims = dims_of(rc);
    const ActionSpace actions = ActionSpace::default_for(dims.L);
    RngStream rng(rc.seed);

    std::string stem;
    TemporalPolicy policy;
    SyntheticSet syn;
    if (arm == "A") {
        stem = "a";
        std::map<int, std::size_t> all_l;
        for (const auto& c : rc.corpus.classes) {
            all_l[c.class_id] = dims.L;
            policy[c.class_id] = dims.L;
        }
        RngStream arm_rng = rng.fork("case_a");
        SyntheticSet init = init_synthetic(all_l, dims, rc.dd, arm_rng.fork("init"));
        DdResult ddr = dd_update(init, train, rc.dd.N, rc.dd, arm_rng.fork("dd"));
        syn = std::move(ddr.syn);
    } else if (arm == "B") {
        stem = "b";
        EncoderParams teacher = load_params((out / "teacher.dvdp").string());
        LabeledVideoSet reward_split = load((out / "reward.dvdc").string());
        RngStream arm_root = rng.fork("case_b");
        const std::size_t a_star = search_universal_resolution(
            train, reward_split, teacher, actions, rc.rl, rc.dd, dims, arm_root.fork("search"));
        std::map<int, std::size_t> uniform_map;
        for (const auto& c : rc.corpus.classes) {
            uniform_map[c.class_id] = a_star;
            policy[c.class_id] = a_star;
        }
        SyntheticSet init = init_synthetic(uniform_map, dims, rc.dd, arm_root.fork("init"));
        DdResult ddr = dd_update(init, train, rc.dd.N, rc.dd, arm_root.fork("dd"));
        syn = std::move(ddr.syn);
    } else {
        stem = "full";
        EncoderParams teacher = load_params((out / "teacher.dvdp").string());
        LabeledVideoSet reward_split = load((out / "reward.dvdc").string());
        PolicyLearningResult plr = temporal_policy_learning(
            train, reward_split, teacher, actions, rc.rl, rc.dd, dims, rng.fork("learn"));
        SynthesisResult sr = synthesize(train, plr.q, rc.dd, dims, rng.fork("synth"));
        syn = std::move(sr.syn);
        policy = sr.policy;
        save_trial_log(plr.log, (out / ("trial_log_" + stem + ".json")).string());
    }
    save_synthetic(syn, (out / ("synthetic_" + stem + ".dvds")).string());
    save_policy(policy, (out / ("policy_" + stem + ".json")).string());
    std::cout << "distill " << arm << ": stored frames " << syn.stored_frames() << "\n";
    return 0;
}

int cmd_eval(const RunConfig& rc, const fs::path& out, const std::string& syn_path,
             const std::string& policy_path) {
    require(out / "test.dvdc");
    require(syn_path);
    echo_config(rc, out);
    LabeledVideoSet test = load((out / "test.dvdc").string());
    SyntheticSet syn = load_synthetic(syn_path);
    if (!policy_path.empty()) {
        require(policy_path);
        TemporalPolicy policy = load_policy(policy_path);
        for (auto& entry : syn.classes) entry.resolution = policy.at(entry.class_id);
    }
    EvalReport ev = evaluate_synthetic(syn, test, encoder_config(rc), rc.student,
                                       RngStream(rc.seed).fork("student"));
    RunReport rep = make_run_report(fs::path(syn_path).stem().string(), ev, load_groups(out),
                                    0, rc.seed);
    json j;
    j["method"] = rep.method;
    j["mean"] = rep.mean;
    for (const auto& [cid, a] : rep.per_class) j["per_class"][std::to_string(cid)] = a;
    for (const auto& [g, a] : rep.group_acc) j["group_acc"][std::to_string(g)] = a;
    const fs::path dst = out / ("eval_" + rep.method + ".json");
    std::ofstream os(dst);
    if (!os) throw IoError("cannot open for write: " + dst.string());
    os << j.dump(2) << "\n";
    std::cout << "eval " << rep.method << ": mean acc " << rep.mean << "\n";
    return 0;
}

int cmd_ablate(const RunConfig& rc, const fs::path& out) {
    require(out / "train.dvdc");
    require(out / "test.dvdc");
    require(out / "reward.dvdc");
    require(out / "teacher.dvdp");
    echo_config(rc, out);
    LabeledVideoSet train = load((out / "train.dvdc").string());
    LabeledVideoSet test = load((out / "test.dvdc").string());
    LabeledVideoSet reward_split = load((out / "reward.dvdc").string());
    EncoderParams teacher = load_params((out / "teacher.dvdp").string());
    AblationConfig acfg{encoder_config(rc), rc.student, rc.rl, rc.dd};
    AblationResult res =
        ablation_cases(train, test, reward_split, teacher, acfg, load_groups(out), rc.seed);

    ReportBundle bundle;
    bundle.seed = rc.seed;
    bundle.config_echo = to_json(rc).dump();
    bundle.runs = {res.case_a, res.case_b, res.full};
    bundle.costs = search_cost_comparison(rc.rl, rc.dd, ActionSpace::default_for(rc.corpus.T).size(),
                                          rc.corpus.classes.size());
    bundle.has_costs = true;
    emit_report(bundle, (out / "ablation").string());
    save_policy(res.policy_b, (out / "policy_b.json").string());
    save_policy(res.policy_full, (out / "policy_full.json").string());
    std::cout << "ablate: mean acc A " << res.case_a.mean << ", B " << res.case_b.mean
              << ", full " << res.full.mean << "\n";
    return 0;
}

int cmd_costs(const RunConfig& rc, const fs::path& out) {
    echo_config(rc, out);
    CostTable t = search_cost_comparison(rc.rl, rc.dd, ActionSpace::default_for(rc.corpus.T).size(),
                                         rc.corpus.classes.size());
    json j = {{"grid", t.grid},
              {"naive_rl", t.naive_rl},
              {"early_rl", t.early_rl},
              {"grid_over_early", t.grid_over_early},
              {"naive_over_early", t.naive_over_early}};
    std::ofstream os(out / "costs.json");
    if (!os) throw IoError("cannot open for write: " + (out / "costs.json").string());
    os << j.dump(2) << "\n";
    std::cout << "costs: grid " << t.grid << ", naive RL " << t.naive_rl << ", early RL "
              << t.early_rl << "\n";
    return 0;
}

int cmd_report(const RunConfig& rc, const fs::path& out) {
    echo_config(rc, out);
    ReportBundle bundle;
    bundle.seed = rc.seed;
    bundle.config_echo = to_json(rc).dump();
    if (fs::exists(out / "delta.json")) {
        std::ifstream is(out / "delta.json");
        json j;
        is >> j;
        for (const auto& [key, value] : j.at("delta").items()) {
            bundle.delta[std::stoi(key)] = value.get<double>();
        }
    }
    for (const auto& entry : fs::directory_iterator(out)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("eval_", 0) != 0 || entry.path().extension() != ".json") continue;
        std::ifstream is(entry.path());
        json j;
        is >> j;
        RunReport r;
        r.method = j.at("method").get<std::string>();
        r.mean = j.at("mean").get<double>();
        r.seed = rc.seed;
        if (j.contains("per_class")) {
            for (const auto& [key, value] : j.at("per_class").items()) {
                r.per_class[std::stoi(key)] = value.get<double>();
                r.counts[std::stoi(key)] = 0;
            }
        }
        bundle.runs.push_back(std::move(r));
    }
    bundle.costs = search_cost_comparison(rc.rl, rc.dd, ActionSpace::default_for(rc.corpus.T).size(),
                                          rc.corpus.classes.size());
    bundle.has_costs = true;
    if (fs::exists(out / "teacher.dvdp") && fs::exists(out / "synthetic_full.dvds") &&
        fs::exists(out / "train.dvdc")) {
        bundle.features = feature_dump(load_params((out / "teacher.dvdp").string()),
                                       load((out / "train.dvdc").string()),
                                       load_synthetic((out / "synthetic_full.dvds").string()));
    }
    emit_report(bundle, (out / "report").string());
    std::cout << "report: " << bundle.runs.size() << " runs merged\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"temporal-resolution-aware video dataset distillation"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "run";
    std::optional<std::uint64_t> seed_flag;
    int threads = 0;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--out", out_dir, "run directory for artifacts");
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "override the global seed");
    app.add_option("--threads", threads, "worker cap (compute is single-threaded)");

    auto* gen = app.add_subcommand("gen-corpus", "generate the toy corpus splits");
    auto* teach = app.add_subcommand("train-teacher", "train the teacher network");
    auto* delta = app.add_subcommand("delta-split", "rank classes by the dynamics gap");
    auto* dist = app.add_subcommand("distill", "search resolutions and distill");
    std::string arm = "full";
    dist->add_option("--case", arm, "A | B | full")
        ->check(CLI::IsMember({"A", "B", "full"}));
    int ipc_flag = 0;
    dist->add_option("--ipc", ipc_flag, "synthetic instances per class");
    auto* evalc = app.add_subcommand("eval", "train a student on a synthetic set and score it");
    std::string syn_path, policy_path;
    evalc->add_option("--syn", syn_path, "synthetic set checkpoint")->required();
    evalc->add_option("--policy", policy_path, "resolution map applied at evaluation time");
    auto* abl = app.add_subcommand("ablate", "run the three-arm comparison");
    abl->add_option("--ipc", ipc_flag, "synthetic instances per class");
    auto* costs = app.add_subcommand("costs", "closed-form search-cost table");
    auto* report = app.add_subcommand("report", "merge artifacts into the final report");

    CLI11_PARSE(app, argc, argv);

    try {
        if (seed_opt->count() > 0) seed_flag = seed_value;
        RunConfig rc = load_config(config_path, seed_flag);
        if (threads > 0) rc.threads = threads;
        if (ipc_flag > 0) rc.dd.ipc = ipc_flag;
        const fs::path out(out_dir);

        if (gen->parsed()) return cmd_gen_corpus(rc, out);
        if (teach->parsed()) return cmd_train_teacher(rc, out);
        if (delta->parsed()) return cmd_delta_split(rc, out);
        if (dist->parsed()) return cmd_distill(rc, out, arm);
        if (evalc->parsed()) return cmd_eval(rc, out, syn_path, policy_path);
        if (abl->parsed()) return cmd_ablate(rc, out);
        if (costs->parsed()) return cmd_costs(rc, out);
        if (report->parsed()) return cmd_report(rc, out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const MissingArtifact& e) {
        std::cerr << e.what() << "\n";
        return 3;
    } catch (const DivergenceError& e) {
        std::cerr << "numeric divergence: " << e.what() << "\n";
        return 4;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
