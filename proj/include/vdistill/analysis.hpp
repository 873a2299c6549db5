#pragma once

#include <map>
#include <string>
#include <vector>

#include "vdistill/distill.hpp"
#include "vdistill/policy.hpp"

namespace vdistill {

// Per-class accuracy gap between training on full videos and on their
// single-retained-frame static version.
struct DeltaReport {
    std::map<int, double> delta;        // class -> acc_full - acc_static
    std::vector<int> ranking;           // class ids, delta descending
    std::vector<int> top_k;             // most dynamic classes
    std::map<int, double> acc_full;     // per-class, full training
    std::map<int, double> acc_static;   // per-class, static training
};

DeltaReport delta_split(const LabeledVideoSet& train, const LabeledVideoSet& test,
                        const EncoderConfig& enc, const TrainConfig& tc, std::size_t k,
                        RngStream rng);

// Quantile bucketing by delta: group 0 = most static, n_groups-1 = most dynamic.
std::map<int, int> delta_groups(const DeltaReport& report, int n_groups = 4);

struct RunReport {
    std::string method;
    std::map<int, double> per_class;
    std::map<int, std::size_t> counts;
    double mean = 0.0;
    std::map<int, double> group_acc;      // group id -> accuracy
    std::map<int, int> group_of_class;
    long long dd_iters = 0;               // DD iterations consumed
    std::uint64_t seed = 0;
};

RunReport make_run_report(const std::string& method, const EvalReport& eval,
                          const std::map<int, int>& groups, long long dd_iters,
                          std::uint64_t seed);

// Coreset baselines: selections of real data shaped like a SyntheticSet.
SyntheticSet baseline_random(const LabeledVideoSet& real, int ipc, RngStream rng);
SyntheticSet baseline_keyframe(const LabeledVideoSet& real, int ipc, RngStream rng);

struct AblationConfig {
    EncoderConfig enc;
    TrainConfig student;   // student training on the synthetic set
    RlConfig rl;
    DistillConfig dd;
};

struct AblationResult {
    RunReport case_a;      // fixed a = L, no policy search
    RunReport case_b;      // one universal resolution for all classes
    RunReport full;        // per-class adaptive resolutions
    TemporalPolicy policy_b;
    TemporalPolicy policy_full;
};

// Case B's search: one Q table shared by every class, rewards averaged over
// classes per trial. Returns the chosen universal resolution.
std::size_t search_universal_resolution(const LabeledVideoSet& train,
                                        const LabeledVideoSet& reward_split,
                                        const EncoderParams& teacher, const ActionSpace& actions,
                                        const RlConfig& rl, const DistillConfig& dd,
                                        const VideoDims& dims, RngStream rng);

// All three arms receive the same total DD budget per class:
// rl.T * early_iters(dd) + dd.N.
AblationResult ablation_cases(const LabeledVideoSet& train, const LabeledVideoSet& test,
                              const LabeledVideoSet& reward_split, const EncoderParams& teacher,
                              const AblationConfig& cfg, const std::map<int, int>& groups,
                              std::uint64_t seed);

// Train a student encoder on the expanded synthetic set and evaluate it on the
// test split, partitioning test videos per the resolution map.
EvalReport evaluate_synthetic(const SyntheticSet& syn, const LabeledVideoSet& test,
                              const EncoderConfig& enc, const TrainConfig& student,
                              RngStream rng);

struct CostTable {
    long long grid = 0;      // |A| * M * N
    long long naive_rl = 0;  // T * M * N
    long long early_rl = 0;  // T * M * N_early + M * N
    double grid_over_early = 0.0;
    double naive_over_early = 0.0;
};

CostTable search_cost_comparison(const RlConfig& rl, const DistillConfig& dd,
                                 std::size_t n_actions, std::size_t n_classes);

struct FeatureDumpEntry {
    int class_id = 0;
    std::string side;  // "real" | "syn"
    std::vector<double> vec;
};

std::vector<FeatureDumpEntry> feature_dump(const EncoderParams& teacher,
                                           const LabeledVideoSet& real,
                                           const SyntheticSet& syn);

struct ReportBundle {
    std::string version = "report-v1";
    std::string config_echo;  // JSON text of the effective config
    std::uint64_t seed = 0;
    std::vector<RunReport> runs;
    std::map<int, double> delta;  // empty when no delta run
    CostTable costs;
    bool has_costs = false;
    std::vector<FeatureDumpEntry> features;
};

// Writes <prefix>.json, <prefix>.csv and <prefix>_features.json.
void emit_report(const ReportBundle& bundle, const std::string& prefix);
ReportBundle load_report(const std::string& json_path);

}  // namespace vdistill
