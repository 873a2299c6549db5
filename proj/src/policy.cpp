#include "vdistill/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace vdistill {

ActionSpace ActionSpace::default_for(std::size_t L) {
    ActionSpace as;
    for (std::size_t a = 1; a <= L; a *= 2) as.resolutions.push_back(a);
    if (as.resolutions.back() != L) as.resolutions.push_back(L);
    return as;
}

void ActionSpace::check(std::size_t L) const {
    if (resolutions.size() < 2) throw ConfigError("action space needs at least 2 entries");
    for (std::size_t i = 0; i < resolutions.size(); ++i) {
        if (resolutions[i] < 1 || resolutions[i] > L) {
            throw ConfigError("action space entry outside [1, L]");
        }
        if (i > 0 && resolutions[i] <= resolutions[i - 1]) {
            throw ConfigError("action space must be strictly increasing");
        }
    }
}

std::size_t ActionSpace::index_of(std::size_t a) const {
    for (std::size_t i = 0; i < resolutions.size(); ++i) {
        if (resolutions[i] == a) return i;
    }
    throw ContractError("action " + std::to_string(a) + " not in action space");
}

void validate(const RlConfig& config) {
    if (config.T < 1) throw ConfigError("rl: T must be >= 1");
    if (!(config.alpha > 0.0 && config.alpha <= 1.0)) throw ConfigError("rl: alpha outside (0,1]");
    if (!(config.gamma >= 0.0 && config.gamma < 1.0)) throw ConfigError("rl: gamma outside [0,1)");
    if (!(config.p >= 0.0 && config.p <= 1.0)) throw ConfigError("rl: p outside [0,1]");
}

QTable QTable::zeros(const ActionSpace& actions, const std::vector<int>& class_ids) {
    QTable q;
    q.actions = actions;
    const std::size_t n = actions.size();
    for (int cid : class_ids) {
        ClassQ cq;
        cq.q.assign(n * n, 0.0);
        cq.state = 0;  // initial state: lowest resolution
        q.per_class.emplace(cid, std::move(cq));
    }
    return q;
}

double& QTable::at(int class_id, std::size_t state, std::size_t action) {
    return per_class.at(class_id).q[state * actions.size() + action];
}

double QTable::value(int class_id, std::size_t state, std::size_t action) const {
    return per_class.at(class_id).q[state * actions.size() + action];
}

std::size_t QTable::greedy_index(int class_id) const {
    const ClassQ& cq = per_class.at(class_id);
    const std::size_t n = actions.size();
    const double* row = cq.q.data() + cq.state * n;
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (row[i] > row[best]) best = i;
    }
    return best;
}

double reward(const EncoderParams& teacher, const Tensor& syn_batch, const Tensor& real_batch) {
    if (syn_batch.shape.empty() || syn_batch.shape[0] == 0 || real_batch.shape.empty() ||
        real_batch.shape[0] == 0) {
        throw ContractError("reward: empty batch");
    }
    for (const Tensor* blk : teacher.blocks()) {
        if (!all_finite(*blk)) throw ContractError("reward: teacher has non-finite weights");
    }
    const std::size_t F = teacher.config.feat_dim();
    ForwardResult syn_fwd = forward(teacher, syn_batch);
    ForwardResult real_fwd = forward(teacher, real_batch);
    double dist2 = 0.0;
    for (std::size_t f = 0; f < F; ++f) {
        double ms = 0.0, mr = 0.0;
        for (std::size_t i = 0; i < syn_batch.shape[0]; ++i) {
            ms += syn_fwd.features.data[i * F + f];
        }
        for (std::size_t i = 0; i < real_batch.shape[0]; ++i) {
            mr += real_fwd.features.data[i * F + f];
        }
        const double d = ms / static_cast<double>(syn_batch.shape[0]) -
                         mr / static_cast<double>(real_batch.shape[0]);
        dist2 += d * d;
    }
    return 1.0 / (1.0 + std::sqrt(dist2));
}

std::size_t take_action(const QTable& q, int class_id, double p, RngStream& rng) {
    const double x = rng.next_double();
    if (x < p) return q.greedy_index(class_id);
    return static_cast<std::size_t>(rng.next_index(q.actions.size()));
}

void q_update(QTable& q, int class_id, std::size_t action_index, double r,
              const RlConfig& config) {
    const std::size_t n = q.actions.size();
    if (action_index >= n) throw ContractError("q_update: action index out of range");
    QTable::ClassQ& cq = q.per_class.at(class_id);
    const std::size_t s = cq.state;
    const std::size_t s_next = action_index;
    const double* next_row = cq.q.data() + s_next * n;
    const double max_next = *std::max_element(next_row, next_row + n);
    double& qa = cq.q[s * n + action_index];
    qa += config.alpha * (r + config.gamma * max_next - qa);
    cq.state = s_next;
}

TrialLog run_policy_learning(QTable& q, const std::vector<int>& class_ids, const RlConfig& config,
                             const RewardFn& probe, RngStream rng) {
    validate(config);
    TrialLog log;
    for (int cid : class_ids) {
        RngStream action_rng = rng.fork("take_action", static_cast<std::uint64_t>(cid));
        for (int t = 0; t < config.T; ++t) {
            const std::size_t ai = take_action(q, cid, config.p, action_rng);
            const std::size_t a = q.actions.resolutions[ai];
            const double r = probe(cid, a, t);
            if (!std::isfinite(r)) {
                throw DivergenceError("policy learning: non-finite reward for class " +
                                      std::to_string(cid));
            }
            q_update(q, cid, ai, r, config);
            TrialRecord rec;
            rec.t = t;
            rec.class_id = cid;
            rec.action = a;
            rec.reward = r;
            const auto& cq = q.per_class.at(cid);
            const std::size_t n = q.actions.size();
            rec.q_row.assign(cq.q.begin() + cq.state * n, cq.q.begin() + (cq.state + 1) * n);
            log.push_back(std::move(rec));
        }
    }
    return log;
}

PolicyLearningResult temporal_policy_learning(const LabeledVideoSet& train,
                                              const LabeledVideoSet& reward_split,
                                              const EncoderParams& teacher,
                                              const ActionSpace& actions, const RlConfig& rl,
                                              const DistillConfig& dd, const VideoDims& dims,
                                              RngStream rng) {
    validate(rl);
    validate(dd);
    actions.check(dims.L);
    std::set<int> cls(train.labels.begin(), train.labels.end());
    std::vector<int> class_ids(cls.begin(), cls.end());

    // reward-split videos per class, capped at 32
    std::map<int, Tensor> reward_batches;
    {
        std::map<int, std::vector<std::size_t>> by_class;
        for (std::size_t i = 0; i < reward_split.labels.size(); ++i) {
            by_class[reward_split.labels[i]].push_back(i);
        }
        for (int cid : class_ids) {
            auto it = by_class.find(cid);
            if (it == by_class.end()) {
                throw ContractError("policy learning: reward split has no class " +
                                    std::to_string(cid));
            }
            const std::size_t n = std::min<std::size_t>(32, it->second.size());
            const std::size_t vs = dims.L * dims.H * dims.W * dims.C;
            Tensor batch({n, dims.L, dims.H, dims.W, dims.C});
            for (std::size_t i = 0; i < n; ++i) {
                const Tensor& v = reward_split.videos[it->second[i]];
                std::copy(v.data.begin(), v.data.end(), batch.data.begin() + i * vs);
            }
            reward_batches.emplace(cid, std::move(batch));
        }
    }

    const int n_early = early_iters(dd);
    PolicyLearningResult result;
    result.q = QTable::zeros(actions, class_ids);

    RewardFn probe = [&](int cid, std::size_t a, int t) {
        // fresh noise per trial so rewards across actions are comparable
        RngStream trial = rng.fork("trial", static_cast<std::uint64_t>(cid),
                                   static_cast<std::uint64_t>(t));
        SyntheticSet syn = init_synthetic({{cid, a}}, dims, dd, trial.fork("init"));
        DdResult ddr = dd_update(syn, train, n_early, dd, trial.fork("dd"));
        LabeledVideoSet expanded = expand_all(ddr.syn);
        const std::size_t vs = dims.L * dims.H * dims.W * dims.C;
        Tensor syn_batch({expanded.videos.size(), dims.L, dims.H, dims.W, dims.C});
        for (std::size_t i = 0; i < expanded.videos.size(); ++i) {
            std::copy(expanded.videos[i].data.begin(), expanded.videos[i].data.end(),
                      syn_batch.data.begin() + i * vs);
        }
        return reward(teacher, syn_batch, reward_batches.at(cid));
    };

    result.log = run_policy_learning(result.q, class_ids, rl, probe, rng.fork("policy"));
    return result;
}

SynthesisResult synthesize(const LabeledVideoSet& train, const QTable& q,
                           const DistillConfig& dd, const VideoDims& dims, RngStream rng) {
    validate(dd);
    if (q.per_class.empty()) throw ContractError("synthesize: empty Q table");
    SynthesisResult result;
    std::map<int, std::size_t> actions;
    for (const auto& [cid, cq] : q.per_class) {
        (void)cq;
        const std::size_t a = q.actions.resolutions[q.greedy_index(cid)];
        actions[cid] = a;
        result.policy[cid] = a;
    }
    SyntheticSet syn = init_synthetic(actions, dims, dd, rng.fork("init"));
    DdResult ddr = dd_update(syn, train, dd.N, dd, rng.fork("dd"));
    result.syn = std::move(ddr.syn);
    result.loss_trace = std::move(ddr.loss_trace);
    return result;
}

void save_policy(const TemporalPolicy& policy, const std::string& path) {
    nlohmann::json j;
    for (const auto& [cid, a] : policy) j[std::to_string(cid)] = a;
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for write: " + path);
    os << j.dump(2) << "\n";
}

TemporalPolicy load_policy(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open for read: " + path);
    nlohmann::json j;
    is >> j;
    TemporalPolicy policy;
    for (const auto& [key, value] : j.items()) {
        policy[std::stoi(key)] = value.get<std::size_t>();
    }
    return policy;
}

void save_trial_log(const TrialLog& log, const std::string& path) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& rec : log) {
        j.push_back({{"t", rec.t},
                     {"class_id", rec.class_id},
                     {"action", rec.action},
                     {"reward", rec.reward},
                     {"q_row", rec.q_row}});
    }
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for write: " + path);
    os << j.dump(2) << "\n";
}

}  // namespace vdistill
