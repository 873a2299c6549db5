#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "vdistill/distill.hpp"
#include "vdistill/encoder.hpp"

namespace vdistill {

// Ordered set of admissible temporal resolutions.
struct ActionSpace {
    std::vector<std::size_t> resolutions;  // strictly increasing

    static ActionSpace default_for(std::size_t L);
    void check(std::size_t L) const;
    std::size_t size() const { return resolutions.size(); }
    std::size_t index_of(std::size_t a) const;
};

struct RlConfig {
    int T = 40;          // RL trials
    double alpha = 0.1;  // Q learning rate
    double gamma = 0.5;  // discount
    double p = 0.8;      // exploit probability
};

void validate(const RlConfig& config);

// Per-class Q over (state, action); state space equals the action space.
struct QTable {
    struct ClassQ {
        std::vector<double> q;  // n*n row-major, q[state * n + action]
        std::size_t state = 0;  // index into the action space
    };
    ActionSpace actions;
    std::map<int, ClassQ> per_class;

    static QTable zeros(const ActionSpace& actions, const std::vector<int>& class_ids);
    double& at(int class_id, std::size_t state, std::size_t action);
    double value(int class_id, std::size_t state, std::size_t action) const;
    // argmax over the class's current-state row, ties to the lowest index
    std::size_t greedy_index(int class_id) const;
};

using TemporalPolicy = std::map<int, std::size_t>;  // class -> resolution a

// R = 1 / (1 + || mean feat(syn) - mean feat(real) ||_2), teacher features.
double reward(const EncoderParams& teacher, const Tensor& syn_batch, const Tensor& real_batch);

// Exploit the argmax with probability p, otherwise explore uniformly.
// Returns an index into the action space.
std::size_t take_action(const QTable& q, int class_id, double p, RngStream& rng);

// Q[S,A] += alpha * (R + gamma * max_a Q[S',a] - Q[S,A]) with S' := A,
// then advance the state to A.
void q_update(QTable& q, int class_id, std::size_t action_index, double r,
              const RlConfig& config);

struct TrialRecord {
    int t = 0;
    int class_id = 0;
    std::size_t action = 0;  // resolution value
    double reward = 0.0;
    std::vector<double> q_row;  // current-state row after the update
};

using TrialLog = std::vector<TrialRecord>;

// Reward probe for one (class, action, trial); injected so the trial loop is
// testable against stub environments.
using RewardFn = std::function<double(int class_id, std::size_t a, int trial)>;

TrialLog run_policy_learning(QTable& q, const std::vector<int>& class_ids, const RlConfig& config,
                             const RewardFn& probe, RngStream rng);

struct PolicyLearningResult {
    QTable q;
    TrialLog log;
};

// Per class and trial: pick an action, distill fresh noise for the early-stage
// budget, score against the reward split with the teacher, update Q.
PolicyLearningResult temporal_policy_learning(const LabeledVideoSet& train,
                                              const LabeledVideoSet& reward_split,
                                              const EncoderParams& teacher,
                                              const ActionSpace& actions, const RlConfig& rl,
                                              const DistillConfig& dd, const VideoDims& dims,
                                              RngStream rng);

struct SynthesisResult {
    SyntheticSet syn;
    TemporalPolicy policy;
    std::vector<double> loss_trace;
};

// Greedy per-class resolutions from the final Q state, then a full-budget
// distillation run.
SynthesisResult synthesize(const LabeledVideoSet& train, const QTable& q,
                           const DistillConfig& dd, const VideoDims& dims, RngStream rng);

// JSON persistence for policies and trial logs.
void save_policy(const TemporalPolicy& policy, const std::string& path);
TemporalPolicy load_policy(const std::string& path);
void save_trial_log(const TrialLog& log, const std::string& path);

}  // namespace vdistill
