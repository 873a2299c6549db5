// Python bindings for the core pipeline: corpus generation, partitioning,
// encoder training, distillation, policy search and evaluation.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vdistill/analysis.hpp"

namespace py = pybind11;
using namespace vdistill;

namespace {

Tensor tensor_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    Tensor t;
    t.shape.assign(a.shape(), a.shape() + a.ndim());
    t.data.assign(a.data(), a.data() + a.size());
    return t;
}

py::array_t<double> array_from_tensor(const Tensor& t) {
    py::array_t<double> a(t.shape);
    std::copy(t.data.begin(), t.data.end(), a.mutable_data());
    return a;
}

py::list videos_as_arrays(const LabeledVideoSet& set) {
    py::list out;
    for (const auto& v : set.videos) out.append(array_from_tensor(v));
    return out;
}

}  // namespace

PYBIND11_MODULE(_vdistill, m) {
    m.doc() = "temporal-resolution-aware video dataset distillation";

    py::register_exception<ContractError>(m, "ContractError");
    py::register_exception<ConfigError>(m, "ConfigurationError");
    py::register_exception<IoError>(m, "IoError");
    py::register_exception<DivergenceError>(m, "DivergenceError");

    py::class_<RngStream>(m, "RngStream")
        .def(py::init<std::uint64_t, std::uint64_t>(), py::arg("seed"), py::arg("key") = 0)
        .def("next_double", &RngStream::next_double)
        .def("fork", [](RngStream& s, const std::string& purpose, std::uint64_t a,
                        std::uint64_t b) { return s.fork(purpose, a, b); },
             py::arg("purpose"), py::arg("class_id") = 0, py::arg("iteration") = 0);

    py::class_<CorpusConfig>(m, "CorpusConfig")
        .def(py::init(&default_corpus_config))
        .def_readwrite("per_class_train", &CorpusConfig::per_class_train)
        .def_readwrite("per_class_test", &CorpusConfig::per_class_test)
        .def_readwrite("per_class_reward", &CorpusConfig::per_class_reward)
        .def_readwrite("noise_std", &CorpusConfig::noise_std)
        .def_readwrite("seed", &CorpusConfig::seed);

    py::class_<LabeledVideoSet>(m, "LabeledVideoSet")
        .def_property_readonly("labels", [](const LabeledVideoSet& s) { return s.labels; })
        .def_property_readonly("videos", &videos_as_arrays)
        .def("__len__", &LabeledVideoSet::size);

    py::class_<Corpus>(m, "Corpus")
        .def_readonly("train", &Corpus::train)
        .def_readonly("test", &Corpus::test)
        .def_readonly("reward", &Corpus::reward);

    m.def("generate_corpus", &generate, py::arg("config"));
    m.def("save_corpus", &save, py::arg("split"), py::arg("path"));
    m.def("load_corpus", &load, py::arg("path"));
    m.def("staticize",
          [](const LabeledVideoSet& s, std::uint64_t seed) {
              return staticize(s, RngStream(seed));
          },
          py::arg("split"), py::arg("seed"));

    m.def("segment_bounds", &segment_bounds, py::arg("length"), py::arg("a"));
    m.def("partition",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& video,
             std::size_t a) { return array_from_tensor(partition(tensor_from_array(video), a)); },
          py::arg("video"), py::arg("a"));
    m.def("crop",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& video,
             std::size_t a) { return array_from_tensor(crop(tensor_from_array(video), a)); },
          py::arg("video"), py::arg("a"));
    m.def("expand",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& frames,
             std::size_t length) {
              return array_from_tensor(expand(CompactVideo{tensor_from_array(frames), length}));
          },
          py::arg("frames"), py::arg("length"));

    py::class_<EncoderConfig>(m, "EncoderConfig")
        .def(py::init<>())
        .def_readwrite("num_classes", &EncoderConfig::num_classes);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("iters", &TrainConfig::iters)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("lr", &TrainConfig::lr)
        .def_readwrite("momentum", &TrainConfig::momentum);

    py::class_<EncoderParams>(m, "EncoderParams");

    m.def("train_teacher",
          [](const LabeledVideoSet& train, const EncoderConfig& cfg, const TrainConfig& tc,
             std::uint64_t seed) {
              TrainResult res = train_teacher(train, cfg, tc, RngStream(seed));
              return py::make_tuple(res.params, res.loss_trace, res.acc_trace);
          },
          py::arg("train"), py::arg("config"), py::arg("train_config"), py::arg("seed"));
    m.def("evaluate",
          [](const EncoderParams& params, const LabeledVideoSet& test,
             const std::optional<std::map<int, std::size_t>>& resolution_map) {
              EvalReport r = evaluate(params, test, resolution_map);
              return py::make_tuple(r.overall, r.per_class);
          },
          py::arg("params"), py::arg("test"), py::arg("resolution_map") = py::none());
    m.def("save_params", &save_params, py::arg("params"), py::arg("path"));
    m.def("load_params", &load_params, py::arg("path"));

    py::class_<DistillConfig>(m, "DistillConfig")
        .def(py::init<>())
        .def_readwrite("N", &DistillConfig::N)
        .def_readwrite("beta", &DistillConfig::beta)
        .def_readwrite("lr_syn", &DistillConfig::lr_syn)
        .def_readwrite("momentum_syn", &DistillConfig::momentum_syn)
        .def_readwrite("real_batch_per_class", &DistillConfig::real_batch_per_class)
        .def_readwrite("ipc", &DistillConfig::ipc);

    py::class_<SyntheticSet>(m, "SyntheticSet")
        .def_property_readonly("stored_frames", &SyntheticSet::stored_frames)
        .def_property_readonly("policy", [](const SyntheticSet& s) {
            std::map<int, std::size_t> p;
            for (const auto& e : s.classes) p[e.class_id] = e.resolution;
            return p;
        });

    m.def("early_iters", &early_iters, py::arg("config"));
    m.def("init_synthetic",
          [](const std::map<int, std::size_t>& actions, const DistillConfig& dd,
             std::uint64_t seed) {
              return init_synthetic(actions, VideoDims{}, dd, RngStream(seed));
          },
          py::arg("actions"), py::arg("config"), py::arg("seed"));
    m.def("distill",
          [](const SyntheticSet& syn, const LabeledVideoSet& real, int iters,
             const DistillConfig& dd, std::uint64_t seed) {
              DdResult r = dd_update(syn, real, iters, dd, RngStream(seed));
              return py::make_tuple(r.syn, r.loss_trace);
          },
          py::arg("synthetic"), py::arg("real"), py::arg("iters"), py::arg("config"),
          py::arg("seed"));
    m.def("save_synthetic", &save_synthetic, py::arg("synthetic"), py::arg("path"));
    m.def("load_synthetic", &load_synthetic, py::arg("path"));

    py::class_<RlConfig>(m, "RlConfig")
        .def(py::init<>())
        .def_readwrite("T", &RlConfig::T)
        .def_readwrite("alpha", &RlConfig::alpha)
        .def_readwrite("gamma", &RlConfig::gamma)
        .def_readwrite("p", &RlConfig::p);

    m.def("learn_policy",
          [](const LabeledVideoSet& train, const LabeledVideoSet& reward_split,
             const EncoderParams& teacher, const RlConfig& rl, const DistillConfig& dd,
             std::uint64_t seed) {
              PolicyLearningResult res =
                  temporal_policy_learning(train, reward_split, teacher,
                                           ActionSpace::default_for(8), rl, dd, VideoDims{},
                                           RngStream(seed));
              std::map<int, std::size_t> greedy;
              for (const auto& [cid, cq] : res.q.per_class) {
                  (void)cq;
                  greedy[cid] = res.q.actions.resolutions[res.q.greedy_index(cid)];
              }
              return greedy;
          },
          py::arg("train"), py::arg("reward_split"), py::arg("teacher"), py::arg("rl"),
          py::arg("dd"), py::arg("seed"));
    m.def("reward",
          [](const EncoderParams& teacher,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& syn,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& real) {
              return reward(teacher, tensor_from_array(syn), tensor_from_array(real));
          },
          py::arg("teacher"), py::arg("syn_batch"), py::arg("real_batch"));

    m.def("delta_split",
          [](const LabeledVideoSet& train, const LabeledVideoSet& test, const EncoderConfig& enc,
             const TrainConfig& tc, std::size_t k, std::uint64_t seed) {
              DeltaReport r = delta_split(train, test, enc, tc, k, RngStream(seed));
              return py::make_tuple(r.delta, r.ranking, r.top_k);
          },
          py::arg("train"), py::arg("test"), py::arg("encoder"), py::arg("train_config"),
          py::arg("k"), py::arg("seed"));
    m.def("search_costs", [](const RlConfig& rl, const DistillConfig& dd, std::size_t n_actions,
                             std::size_t n_classes) {
        CostTable t = search_cost_comparison(rl, dd, n_actions, n_classes);
        py::dict d;
        d["grid"] = t.grid;
        d["naive_rl"] = t.naive_rl;
        d["early_rl"] = t.early_rl;
        d["grid_over_early"] = t.grid_over_early;
        d["naive_over_early"] = t.naive_over_early;
        return d;
    });
}
