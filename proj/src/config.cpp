#include "motedit/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace motedit {

using json = nlohmann::ordered_json;

std::string RunConfig::to_json() const {
    json j;
    j["seed"] = seed;
    j["model"] = {{"dim", model_dim},
                  {"heads", heads},
                  {"pmm_layers", pmm_layers},
                  {"denoiser_layers", denoiser_layers},
                  {"ff_mult", ff_mult}};
    j["similarity"] = {{"beta", beta}, {"epsilon", epsilon}, {"lambda_smooth", lambda_smooth}};
    j["schedule"] = {{"train_steps", train_steps}, {"sample_steps", sample_steps}};
    j["optimizer"] = {{"lr", lr},
                      {"weight_decay", weight_decay},
                      {"adam_beta1", adam_beta1},
                      {"adam_beta2", adam_beta2},
                      {"adam_eps", adam_eps},
                      {"batch_size", batch_size},
                      {"optim_steps", optim_steps},
                      {"epochs", epochs}};
    j["data"] = {{"train_triplets", train_triplets},
                 {"holdout_triplets", holdout_triplets},
                 {"t_min", t_min},
                 {"t_max", t_max},
                 {"fps", fps}};
    j["modules"] = {{"bmi", use_bmi}, {"pmm", use_pmm}, {"psm", use_psm}};
    j["threads"] = threads;
    j["log_every"] = log_every;
    j["skeleton_path"] = skeleton_path;
    j["vocab_path"] = vocab_path;
    return j.dump(2);
}

RunConfig RunConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("config: invalid JSON: ") + e.what());
    }
    RunConfig c;
    auto get = [](const json& obj, const char* key, auto fallback) {
        using T = decltype(fallback);
        if (obj.contains(key)) return obj.at(key).get<T>();
        return fallback;
    };
    // misplaced keys (e.g. a top-level "optim_steps") would otherwise be
    // silently ignored and the defaults used instead
    auto reject_unknown = [](const json& obj, const char* where,
                             std::initializer_list<const char*> allowed) {
        for (const auto& [key, _] : obj.items()) {
            bool known = false;
            for (const char* a : allowed)
                if (key == a) known = true;
            if (!known)
                throw std::runtime_error(std::string("config: unknown key \"") + key + "\" in " +
                                         where);
        }
    };
    reject_unknown(j, "top level",
                   {"seed", "model", "similarity", "schedule", "optimizer", "data", "modules",
                    "threads", "log_every", "skeleton_path", "vocab_path"});
    c.seed = get(j, "seed", c.seed);
    if (j.contains("model")) {
        const auto& m = j.at("model");
        reject_unknown(m, "model", {"dim", "heads", "pmm_layers", "denoiser_layers", "ff_mult"});
        c.model_dim = get(m, "dim", c.model_dim);
        c.heads = get(m, "heads", c.heads);
        c.pmm_layers = get(m, "pmm_layers", c.pmm_layers);
        c.denoiser_layers = get(m, "denoiser_layers", c.denoiser_layers);
        c.ff_mult = get(m, "ff_mult", c.ff_mult);
    }
    if (j.contains("similarity")) {
        const auto& s = j.at("similarity");
        reject_unknown(s, "similarity", {"beta", "epsilon", "lambda_smooth"});
        c.beta = get(s, "beta", c.beta);
        c.epsilon = get(s, "epsilon", c.epsilon);
        c.lambda_smooth = get(s, "lambda_smooth", c.lambda_smooth);
    }
    if (j.contains("schedule")) {
        const auto& s = j.at("schedule");
        reject_unknown(s, "schedule", {"train_steps", "sample_steps"});
        c.train_steps = get(s, "train_steps", c.train_steps);
        c.sample_steps = get(s, "sample_steps", c.sample_steps);
    }
    if (j.contains("optimizer")) {
        const auto& o = j.at("optimizer");
        reject_unknown(o, "optimizer",
                       {"lr", "weight_decay", "adam_beta1", "adam_beta2", "adam_eps", "batch_size",
                        "optim_steps", "epochs"});
        c.lr = get(o, "lr", c.lr);
        c.weight_decay = get(o, "weight_decay", c.weight_decay);
        c.adam_beta1 = get(o, "adam_beta1", c.adam_beta1);
        c.adam_beta2 = get(o, "adam_beta2", c.adam_beta2);
        c.adam_eps = get(o, "adam_eps", c.adam_eps);
        c.batch_size = get(o, "batch_size", c.batch_size);
        c.optim_steps = get(o, "optim_steps", c.optim_steps);
        c.epochs = get(o, "epochs", c.epochs);
    }
    if (j.contains("data")) {
        const auto& d = j.at("data");
        reject_unknown(d, "data", {"train_triplets", "holdout_triplets", "t_min", "t_max", "fps"});
        c.train_triplets = get(d, "train_triplets", c.train_triplets);
        c.holdout_triplets = get(d, "holdout_triplets", c.holdout_triplets);
        c.t_min = get(d, "t_min", c.t_min);
        c.t_max = get(d, "t_max", c.t_max);
        c.fps = get(d, "fps", c.fps);
    }
    if (j.contains("modules")) {
        const auto& m = j.at("modules");
        reject_unknown(m, "modules", {"bmi", "pmm", "psm"});
        c.use_bmi = get(m, "bmi", c.use_bmi);
        c.use_pmm = get(m, "pmm", c.use_pmm);
        c.use_psm = get(m, "psm", c.use_psm);
    }
    c.threads = get(j, "threads", c.threads);
    c.log_every = get(j, "log_every", c.log_every);
    c.skeleton_path = get(j, "skeleton_path", c.skeleton_path);
    c.vocab_path = get(j, "vocab_path", c.vocab_path);

    if (c.lambda_smooth < 0) throw std::runtime_error("config: lambda_smooth must be >= 0");
    if (c.beta < 0.0 || c.beta > 1.0) throw std::runtime_error("config: beta must be in [0,1]");
    if (c.model_dim % c.heads != 0) throw std::runtime_error("config: model dim must be divisible by heads");
    if (c.epsilon <= 0) throw std::runtime_error("config: epsilon must be > 0");
    if (c.t_min < 2 || c.t_max < c.t_min) throw std::runtime_error("config: invalid frame-count range");
    return c;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

void RunConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("config: cannot write " + path);
    out << to_json() << "\n";
}

uint64_t fnv1a(const std::string& text) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

uint64_t RunConfig::hash() const { return fnv1a(to_json()); }

std::string RunConfig::hash_hex() const {
    char buf[17];
    snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash()));
    return std::string(buf);
}

int RunConfig::resolved_steps() const {
    if (epochs > 0) {
        int per_epoch = (train_triplets + batch_size - 1) / batch_size;
        return epochs * per_epoch;
    }
    return optim_steps;
}

} // namespace motedit
