#include "vdistill/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <tuple>

#include <nlohmann/json.hpp>

#include "vdistill/io.hpp"

namespace vdistill {

namespace {

constexpr char kMagic[4] = {'D', 'V', 'D', 'C'};
constexpr std::uint16_t kVersion = 1;
constexpr const char* kGeneratorVersion = "toy-corpus-1";

constexpr double kTwoPi = 6.283185307179586476925286766559;

int wrap(int v, int n) {
    int r = v % n;
    return r < 0 ? r + n : r;
}

// Motion displacement at frame t, in pixels; zero at t = 0 for every motion.
std::pair<int, int> displacement(const ClassSpec& spec, std::size_t t, RngStream& jitter_rng) {
    const double s = spec.speed;
    const double td = static_cast<double>(t);
    switch (spec.motion) {
        case Motion::none:
            return {0, 0};
        case Motion::jitter: {
            if (t == 0) return {0, 0};
            int dx = static_cast<int>(std::lround((2.0 * jitter_rng.next_double() - 1.0) * s));
            int dy = static_cast<int>(std::lround((2.0 * jitter_rng.next_double() - 1.0) * s));
            return {dx, dy};
        }
        case Motion::left:
            return {-static_cast<int>(std::lround(s * td)), 0};
        case Motion::right:
            return {static_cast<int>(std::lround(s * td)), 0};
        case Motion::up:
            return {0, -static_cast<int>(std::lround(s * td))};
        case Motion::down:
            return {0, static_cast<int>(std::lround(s * td))};
        case Motion::oscillate_slow:
            return {static_cast<int>(std::lround(2.0 * s * std::sin(kTwoPi * td / 16.0))), 0};
        case Motion::oscillate_fast:
            return {static_cast<int>(std::lround(2.0 * s * std::sin(kTwoPi * td / 8.0))), 0};
    }
    return {0, 0};
}

void paint_block(Tensor& video, std::size_t t, int cx, int cy, int half, std::size_t H,
                 std::size_t W, std::size_t C) {
    for (int dy = -half; dy <= half; ++dy) {
        for (int dx = -half; dx <= half; ++dx) {
            int y = wrap(cy + dy, static_cast<int>(H));
            int x = wrap(cx + dx, static_cast<int>(W));
            for (std::size_t c = 0; c < C; ++c) {
                video.data[((t * H + y) * W + x) * C + c] = 1.0;
            }
        }
    }
}

void paint_frame(Tensor& video, std::size_t t, const ClassSpec& spec, int cx, int cy, int offset,
                 std::size_t H, std::size_t W, std::size_t C) {
    auto px = [&](std::size_t y, std::size_t x, double v) {
        for (std::size_t c = 0; c < C; ++c) video.data[((t * H + y) * W + x) * C + c] = v;
    };
    switch (spec.appearance) {
        case Appearance::circle: {
            const double r2 = 4.0 * 4.0;
            for (std::size_t y = 0; y < H; ++y) {
                for (std::size_t x = 0; x < W; ++x) {
                    // toroidal distance keeps the disk whole under any anchor
                    int ddx = std::abs(static_cast<int>(x) - wrap(cx, static_cast<int>(W)));
                    int ddy = std::abs(static_cast<int>(y) - wrap(cy, static_cast<int>(H)));
                    ddx = std::min(ddx, static_cast<int>(W) - ddx);
                    ddy = std::min(ddy, static_cast<int>(H) - ddy);
                    if (ddx * ddx + ddy * ddy <= r2) px(y, x, 1.0);
                }
            }
            break;
        }
        case Appearance::square:
            paint_block(video, t, cx, cy, 3, H, W, C);
            break;
        case Appearance::stripes:
            for (std::size_t y = 0; y < H; ++y) {
                if (((y + offset) / 2) % 2 == 0) {
                    for (std::size_t x = 0; x < W; ++x) px(y, x, 1.0);
                }
            }
            break;
        case Appearance::checker:
            for (std::size_t y = 0; y < H; ++y) {
                for (std::size_t x = 0; x < W; ++x) {
                    if ((y / 2 + x / 2 + offset) % 2 == 0) px(y, x, 1.0);
                }
            }
            break;
        case Appearance::dot:
            paint_block(video, t, cx, cy, 1, H, W, C);
            break;
    }
}

double quantize_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

const char* to_string(Appearance a) {
    switch (a) {
        case Appearance::circle: return "circle";
        case Appearance::square: return "square";
        case Appearance::stripes: return "stripes";
        case Appearance::checker: return "checker";
        case Appearance::dot: return "dot";
    }
    return "?";
}

const char* to_string(Motion m) {
    switch (m) {
        case Motion::none: return "none";
        case Motion::jitter: return "jitter";
        case Motion::left: return "left";
        case Motion::right: return "right";
        case Motion::up: return "up";
        case Motion::down: return "down";
        case Motion::oscillate_slow: return "oscillate_slow";
        case Motion::oscillate_fast: return "oscillate_fast";
    }
    return "?";
}

const char* to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::test: return "test";
        case Split::reward: return "reward";
    }
    return "?";
}

Appearance appearance_from_string(const std::string& s) {
    for (Appearance a : {Appearance::circle, Appearance::square, Appearance::stripes,
                         Appearance::checker, Appearance::dot}) {
        if (s == to_string(a)) return a;
    }
    throw ConfigError("unknown appearance: " + s);
}

Motion motion_from_string(const std::string& s) {
    for (Motion m : {Motion::none, Motion::jitter, Motion::left, Motion::right, Motion::up,
                     Motion::down, Motion::oscillate_slow, Motion::oscillate_fast}) {
        if (s == to_string(m)) return m;
    }
    throw ConfigError("unknown motion: " + s);
}

CorpusConfig default_corpus_config() {
    CorpusConfig cfg;
    cfg.classes = {
        {0, Appearance::circle, Motion::none, 0.0},
        {1, Appearance::square, Motion::none, 0.0},
        {2, Appearance::stripes, Motion::none, 0.0},
        {3, Appearance::checker, Motion::none, 0.0},
        {4, Appearance::dot, Motion::left, 2.0},
        {5, Appearance::dot, Motion::right, 2.0},
        {6, Appearance::dot, Motion::oscillate_slow, 2.0},
        {7, Appearance::dot, Motion::oscillate_fast, 2.0},
    };
    return cfg;
}

void validate(const CorpusConfig& config) {
    if (config.classes.empty()) throw ConfigError("corpus: no classes");
    if (config.T < 1 || config.H < 1 || config.W < 1) throw ConfigError("corpus: bad dims");
    if (config.C != 1 && config.C != 3) throw ConfigError("corpus: C must be 1 or 3");
    if (config.per_class_train < 1 || config.per_class_test < 1 || config.per_class_reward < 1) {
        throw ConfigError("corpus: counts must be >= 1");
    }
    if (config.noise_std < 0.0) throw ConfigError("corpus: negative noise_std");
    std::set<int> ids;
    std::set<std::tuple<int, int, double>> sigs;
    for (const auto& c : config.classes) {
        if (c.motion == Motion::none && c.speed != 0.0) {
            throw ConfigError("corpus: motion none requires speed 0");
        }
        if (c.speed < 0.0) throw ConfigError("corpus: negative speed");
        if (!ids.insert(c.class_id).second) {
            throw ConfigError("corpus: duplicate class id " + std::to_string(c.class_id));
        }
        auto sig = std::make_tuple(static_cast<int>(c.appearance), static_cast<int>(c.motion),
                                   c.speed);
        if (!sigs.insert(sig).second) {
            throw ConfigError("corpus: overlapping class specs (identical appearance/motion/speed)");
        }
    }
}

Tensor render_video(const ClassSpec& spec, std::size_t T, std::size_t H, std::size_t W,
                    std::size_t C, const InstancePhase& phase, RngStream jitter_rng) {
    Tensor video({T, H, W, C});
    for (std::size_t t = 0; t < T; ++t) {
        auto [dx, dy] = displacement(spec, t, jitter_rng);
        paint_frame(video, t, spec, phase.cx + dx, phase.cy + dy, phase.offset, H, W, C);
    }
    return video;
}

namespace {

LabeledVideoSet generate_split(const CorpusConfig& config, Split split, int per_class) {
    LabeledVideoSet set;
    set.split = split;
    set.corpus_seed = config.seed;
    set.generator_version = kGeneratorVersion;
    RngStream root(config.seed, RngStream::hash_tag(to_string(split)));
    for (const auto& spec : config.classes) {
        for (int i = 0; i < per_class; ++i) {
            auto inst = root.fork("instance", static_cast<std::uint64_t>(spec.class_id),
                                  static_cast<std::uint64_t>(i));
            InstancePhase phase;
            phase.cx = static_cast<int>(inst.next_index(config.W));
            phase.cy = static_cast<int>(inst.next_index(config.H));
            phase.offset = static_cast<int>(inst.next_index(4));
            auto jitter = root.fork("jitter", static_cast<std::uint64_t>(spec.class_id),
                                    static_cast<std::uint64_t>(i));
            Tensor video =
                render_video(spec, config.T, config.H, config.W, config.C, phase, jitter);
            if (config.noise_std > 0.0) {
                auto noise = root.fork("noise", static_cast<std::uint64_t>(spec.class_id),
                                       static_cast<std::uint64_t>(i));
                for (double& v : video.data) {
                    v = std::clamp(v + config.noise_std * noise.next_normal(), 0.0, 1.0);
                }
            }
            for (double& v : video.data) v = quantize_f32(v);
            set.videos.push_back(std::move(video));
            set.labels.push_back(spec.class_id);
        }
    }
    return set;
}

}  // namespace

Corpus generate(const CorpusConfig& config) {
    validate(config);
    Corpus c;
    c.train = generate_split(config, Split::train, config.per_class_train);
    c.test = generate_split(config, Split::test, config.per_class_test);
    c.reward = generate_split(config, Split::reward, config.per_class_reward);
    return c;
}

LabeledVideoSet staticize(const LabeledVideoSet& set, RngStream rng) {
    if (set.videos.empty()) throw ContractError("staticize: empty set");
    LabeledVideoSet out = set;
    for (auto& video : out.videos) {
        const std::size_t T = video.shape[0];
        const std::size_t fs = video.numel() / T;
        const std::size_t pick = rng.next_index(T);
        std::vector<double> frame(video.data.begin() + pick * fs,
                                  video.data.begin() + (pick + 1) * fs);
        for (std::size_t t = 0; t < T; ++t) {
            std::copy(frame.begin(), frame.end(), video.data.begin() + t * fs);
        }
    }
    return out;
}

void save(const LabeledVideoSet& set, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for write: " + path);
    io::write_magic(os, kMagic);
    io::write_le<std::uint16_t>(os, kVersion);
    io::write_le<std::uint8_t>(os, static_cast<std::uint8_t>(set.split));
    io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(set.size()));
    std::uint32_t T = 0, H = 0, W = 0, C = 0;
    if (!set.videos.empty()) {
        const auto& s = set.videos[0].shape;
        T = static_cast<std::uint32_t>(s[0]);
        H = static_cast<std::uint32_t>(s[1]);
        W = static_cast<std::uint32_t>(s[2]);
        C = static_cast<std::uint32_t>(s[3]);
    }
    io::write_le<std::uint32_t>(os, T);
    io::write_le<std::uint32_t>(os, H);
    io::write_le<std::uint32_t>(os, W);
    io::write_le<std::uint32_t>(os, C);
    io::write_le<std::uint64_t>(os, set.corpus_seed);
    io::write_string(os, set.generator_version);
    for (int label : set.labels) io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(label));
    for (const auto& video : set.videos) {
        if (video.shape != std::vector<std::size_t>{T, H, W, C}) {
            throw ContractError("save: inconsistent video shapes");
        }
        for (double v : video.data) io::write_f32(os, static_cast<float>(v));
    }
}

LabeledVideoSet load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for read: " + path);
    io::check_magic(is, kMagic);
    io::check_version(io::read_le<std::uint16_t>(is, "version"), kVersion, "DVDC");
    LabeledVideoSet set;
    set.split = static_cast<Split>(io::read_le<std::uint8_t>(is, "split"));
    const std::uint32_t count = io::read_le<std::uint32_t>(is, "count");
    const std::size_t T = io::read_le<std::uint32_t>(is, "T");
    const std::size_t H = io::read_le<std::uint32_t>(is, "H");
    const std::size_t W = io::read_le<std::uint32_t>(is, "W");
    const std::size_t C = io::read_le<std::uint32_t>(is, "C");
    set.corpus_seed = io::read_le<std::uint64_t>(is, "seed");
    set.generator_version = io::read_string(is, "generator version");
    set.labels.resize(count);
    for (auto& label : set.labels) {
        label = static_cast<int>(io::read_le<std::uint32_t>(is, "labels"));
    }
    set.videos.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        Tensor video({T, H, W, C});
        for (double& v : video.data) v = static_cast<double>(io::read_f32(is, "pixels"));
        set.videos.push_back(std::move(video));
    }
    return set;
}

void write_manifest(const CorpusConfig& config, const std::string& path) {
    nlohmann::json j;
    j["generator_version"] = kGeneratorVersion;
    j["seed"] = config.seed;
    j["noise_std"] = config.noise_std;
    j["dims"] = {{"T", config.T}, {"H", config.H}, {"W", config.W}, {"C", config.C}};
    j["per_class"] = {{"train", config.per_class_train},
                      {"test", config.per_class_test},
                      {"reward", config.per_class_reward}};
    j["classes"] = nlohmann::json::array();
    for (const auto& c : config.classes) {
        j["classes"].push_back({{"class_id", c.class_id},
                                {"appearance", to_string(c.appearance)},
                                {"motion", to_string(c.motion)},
                                {"speed", c.speed}});
    }
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for write: " + path);
    os << j.dump(2) << "\n";
}

CorpusConfig read_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open for read: " + path);
    nlohmann::json j;
    is >> j;
    CorpusConfig cfg;
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.noise_std = j.at("noise_std").get<double>();
    cfg.T = j.at("dims").at("T").get<std::size_t>();
    cfg.H = j.at("dims").at("H").get<std::size_t>();
    cfg.W = j.at("dims").at("W").get<std::size_t>();
    cfg.C = j.at("dims").at("C").get<std::size_t>();
    cfg.per_class_train = j.at("per_class").at("train").get<int>();
    cfg.per_class_test = j.at("per_class").at("test").get<int>();
    cfg.per_class_reward = j.at("per_class").at("reward").get<int>();
    for (const auto& jc : j.at("classes")) {
        ClassSpec c;
        c.class_id = jc.at("class_id").get<int>();
        c.appearance = appearance_from_string(jc.at("appearance").get<std::string>());
        c.motion = motion_from_string(jc.at("motion").get<std::string>());
        c.speed = jc.at("speed").get<double>();
        cfg.classes.push_back(c);
    }
    validate(cfg);
    return cfg;
}

}  // namespace vdistill
