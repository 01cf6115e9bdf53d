#include "motedit/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI/CLI11.hpp>
#include <nlohmann/json.hpp>

#include "motedit/checks.hpp"
#include "motedit/format.hpp"
#include "motedit/model.hpp"
#include "motedit/retrieval.hpp"

namespace motedit {

namespace {

struct Common {
    std::string config_path;
    uint64_t seed = 0;
    std::string out_dir = "out";
    CLI::Option* seed_opt = nullptr;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config_path, "run configuration JSON");
    c.seed_opt = sub->add_option("--seed", c.seed, "override the configured seed");
    sub->add_option("--out", c.out_dir, "output directory")->capture_default_str();
}

RunConfig resolve_config(const Common& c) {
    RunConfig cfg = c.config_path.empty() ? RunConfig{} : RunConfig::load(c.config_path);
    if (c.seed_opt != nullptr && c.seed_opt->count() > 0) cfg.seed = c.seed;
    return cfg;
}

void write_text(const std::string& path, const std::string& content) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string config_line(const RunConfig& cfg) { return "# config=" + cfg.hash_hex() + "\n"; }

std::string dataset_meta(const RunConfig& cfg, size_t count, const char* split) {
    nlohmann::ordered_json j;
    j["config"] = cfg.hash_hex();
    j["split"] = split;
    j["count"] = count;
    return j.dump() + "\n";
}

// generated edits for the first `limit` triplets (0 = all)
std::vector<MotionSequence> generate_edits(EditPipeline& pipe,
                                           const std::vector<EditTriplet>& data, int limit,
                                           int sample_steps, bool verbose) {
    size_t n = data.size();
    if (limit > 0 && static_cast<size_t>(limit) < n) n = static_cast<size_t>(limit);
    std::vector<MotionSequence> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        out.push_back(
            pipe.edit(data[i].source, data[i].instruction, static_cast<uint64_t>(i), sample_steps)
                .motion);
        if (verbose && (i + 1) % 16 == 0)
            std::cout << "  sampled " << (i + 1) << "/" << n << "\n" << std::flush;
    }
    return out;
}

struct EvalOutputs {
    std::vector<RetrievalRow> rows;
    double target_preferred = 0; // fraction of edits closer to target than source
    size_t pairs = 0;
};

// AUC for "which parts did the instruction edit". The per-part weights are
// trained toward the normalized similarity curves, where untouched parts sit
// at the top of the scale, so a LOW per-part mean marks an edited part.
struct PartIdResult {
    double auc = 0;
    size_t instances = 0;
};

PartIdResult part_identification(EditPipeline& pipe, const std::vector<EditTriplet>& data) {
    std::vector<double> scores;
    std::vector<int> labels;
    for (const EditTriplet& t : data) {
        EditPipeline::Conditioning cond = pipe.condition(t.source, t.instruction);
        const Tensor& r = cond.editability; // [T x parts]
        if (r.empty()) throw std::runtime_error("part identification needs the modulation module");
        for (int p = 0; p < r.cols(); ++p) {
            double mean = 0;
            for (int f = 0; f < r.rows(); ++f) mean += r.at(f, p);
            scores.push_back(-mean / r.rows());
            labels.push_back(std::find(t.edited_parts.begin(), t.edited_parts.end(), p) !=
                             t.edited_parts.end());
        }
    }
    return {roc_auc(scores, labels), scores.size()};
}

EvalOutputs evaluate_edits(const EditPipeline& pipe, const std::vector<EditTriplet>& data,
                           const std::vector<MotionSequence>& generated, int runs,
                           uint64_t seed) {
    const FrozenMotionCodec& codec = pipe.codec();
    const size_t n = generated.size();
    RetrievalInput g2t, g2s;
    g2t.queries = Tensor(static_cast<int>(n), codec.model_dim());
    g2t.gallery = Tensor(static_cast<int>(n), codec.model_dim());
    g2s.gallery = Tensor(static_cast<int>(n), codec.model_dim());
    EvalOutputs out;
    out.pairs = n;
    Tensor q(1, codec.model_dim()), gt(1, codec.model_dim()), gs(1, codec.model_dim());
    for (size_t i = 0; i < n; ++i) {
        q = pooled_embedding(codec, generated[i]);
        gt = pooled_embedding(codec, data[i].target);
        gs = pooled_embedding(codec, data[i].source);
        for (int d = 0; d < codec.model_dim(); ++d) {
            g2t.queries.at(static_cast<int>(i), d) = q.at(0, d);
            g2t.gallery.at(static_cast<int>(i), d) = gt.at(0, d);
            g2s.gallery.at(static_cast<int>(i), d) = gs.at(0, d);
        }
        if (cosine_similarity(q, gt) > cosine_similarity(q, gs)) out.target_preferred += 1.0;
    }
    out.target_preferred /= static_cast<double>(n);
    g2s.queries = g2t.queries;
    for (const char* proto : {"batch32", "full"}) {
        out.rows.push_back(evaluate_protocol(g2t, proto, "g2t", runs, mix_seed(seed, 0xe1)));
        out.rows.push_back(evaluate_protocol(g2s, proto, "g2s", runs, mix_seed(seed, 0xe2)));
    }
    return out;
}

void train_into(EditPipeline& pipe, const std::vector<EditTriplet>& data,
                const std::string& dir, bool verbose) {
    const RunConfig& cfg = pipe.config();
    pipe.fit_stats(data);
    std::ostringstream losses;
    losses << config_line(cfg) << "step,total,psm,smooth,diffusion\n";
    pipe.fit(data, [&](int step, const StepLosses& l) {
        losses << step << ',' << csv_double(l.total) << ',' << csv_double(l.psm) << ','
               << csv_double(l.smooth) << ',' << csv_double(l.diffusion) << '\n';
        if (verbose && (step % cfg.log_every == 0 || step + 1 == cfg.resolved_steps()))
            std::cout << "  step " << step << " total " << l.total << " psm " << l.psm
                      << " smooth " << l.smooth << " diffusion " << l.diffusion << "\n"
                      << std::flush;
    });
    std::filesystem::create_directories(dir);
    pipe.save(dir);
    write_text(dir + "/loss_log.csv", losses.str());
    cfg.save(dir + "/config.json");
}

struct AblationCombo {
    std::string name;
    bool use_bmi, use_pmm, use_psm;
};

AblationCombo parse_combo(const std::string& name) {
    static const std::map<std::string, AblationCombo> table = {
        {"full", {"full", true, true, true}},       {"no_psm", {"no_psm", true, true, false}},
        {"no_pmm", {"no_pmm", true, false, false}}, {"no_bmi", {"no_bmi", false, true, true}},
        {"bare", {"bare", false, false, false}},
    };
    auto it = table.find(name);
    if (it == table.end()) {
        std::string known;
        for (const auto& [k, v] : table) known += (known.empty() ? "" : ", ") + k;
        throw std::runtime_error("unknown ablation combination '" + name + "' (known: " + known +
                                 ")");
    }
    return it->second;
}

int cmd_gen_data(const Common& c, int count, int holdout) {
    RunConfig cfg = resolve_config(c);
    if (count <= 0) count = cfg.train_triplets;
    if (holdout < 0) holdout = cfg.holdout_triplets;
    FrozenTextEncoder text = cfg.vocab_path.empty()
                                 ? FrozenTextEncoder::standard(cfg.model_dim)
                                 : FrozenTextEncoder(load_vocabulary(cfg.vocab_path),
                                                     cfg.model_dim, kFrozenTextSeed);
    std::vector<EditTriplet> train = generate_dataset(count, cfg.seed, cfg, text);
    write_text(c.out_dir + "/train.jsonl",
               dataset_meta(cfg, train.size(), "train") + dataset_to_jsonl(train));
    std::cout << "wrote " << train.size() << " training triplets to " << c.out_dir
              << "/train.jsonl\n";
    if (holdout > 0) {
        std::vector<EditTriplet> held =
            generate_dataset(holdout, mix_seed(cfg.seed, 0x401dull), cfg, text);
        write_text(c.out_dir + "/holdout.jsonl",
                   dataset_meta(cfg, held.size(), "holdout") + dataset_to_jsonl(held));
        std::cout << "wrote " << held.size() << " held-out triplets to " << c.out_dir
                  << "/holdout.jsonl\n";
    }
    return 0;
}

int cmd_curves(const Common& c, const std::string& data_path, int index,
               const std::string& stats_path) {
    RunConfig cfg = resolve_config(c);
    EditPipeline pipe(cfg);
    std::vector<EditTriplet> data = load_dataset(data_path, pipe.text_encoder());
    if (index < 0 || static_cast<size_t>(index) >= data.size())
        throw std::runtime_error("curves: index " + std::to_string(index) +
                                 " outside dataset of " + std::to_string(data.size()));
    if (stats_path.empty()) {
        pipe.fit_stats(data);
    } else {
        pipe.set_stats(load_stats(stats_path));
    }
    SimilarityCurveSet curves =
        supervision_curves(data[index].source, data[index].target, default_skeleton(),
                           default_parts(), pipe.stats(), cfg.beta, cfg.epsilon);
    write_text(c.out_dir + "/curves.csv", config_line(cfg) + curves_to_csv(curves));
    std::cout << "wrote " << c.out_dir << "/curves.csv\n";
    return 0;
}

int cmd_train(const Common& c, const std::string& data_path) {
    RunConfig cfg = resolve_config(c);
    EditPipeline pipe(cfg);
    std::vector<EditTriplet> data = load_dataset(data_path, pipe.text_encoder());
    std::cout << "training on " << data.size() << " triplets for " << cfg.resolved_steps()
              << " steps\n";
    train_into(pipe, data, c.out_dir, true);
    std::cout << "wrote " << c.out_dir << "/checkpoint.bin\n";
    return 0;
}

int cmd_edit(const Common& c, const std::string& ckpt_dir, const std::string& motion_path,
             const std::string& instruction, uint64_t sample_seed, int sample_steps) {
    RunConfig cfg = resolve_config(c);
    EditPipeline pipe(cfg);
    pipe.load(ckpt_dir);
    MotionSequence source = load_motion(motion_path);
    EditPipeline::EditResult res = pipe.edit(source, instruction, sample_seed, sample_steps);
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(motion_to_json(res.motion));
    j["config"] = cfg.hash_hex();
    write_text(c.out_dir + "/edited.json", j.dump() + "\n");
    write_text(c.out_dir + "/editability.csv",
               config_line(cfg) + part_frame_csv(res.editability, "editability"));
    std::cout << "wrote " << c.out_dir << "/edited.json and editability.csv\n";
    return 0;
}

int cmd_eval(const Common& c, const std::string& ckpt_dir, const std::string& data_path,
             int limit, int sample_steps, int runs) {
    RunConfig cfg = resolve_config(c);
    EditPipeline pipe(cfg);
    pipe.load(ckpt_dir);
    std::vector<EditTriplet> data = load_dataset(data_path, pipe.text_encoder());
    PartIdResult pid;
    if (cfg.use_pmm) pid = part_identification(pipe, data); // whole set; no sampling involved
    std::cout << "sampling edits for " << (limit > 0 ? std::min<size_t>(limit, data.size())
                                                     : data.size())
              << " held-out triplets\n";
    std::vector<MotionSequence> generated =
        generate_edits(pipe, data, limit, sample_steps, true);
    data.erase(data.begin() + static_cast<long>(generated.size()), data.end());
    EvalOutputs ev = evaluate_edits(pipe, data, generated, runs, cfg.seed);
    write_text(c.out_dir + "/report.csv", config_line(cfg) + retrieval_report_csv(ev.rows));
    std::ostringstream eff;
    eff << config_line(cfg) << "metric,value\n"
        << "pairs," << ev.pairs << "\n"
        << "target_preferred_fraction," << csv_double(ev.target_preferred) << "\n";
    if (cfg.use_pmm) {
        eff << "part_identification_auc," << csv_double(pid.auc) << "\n"
            << "part_instances," << pid.instances << "\n";
    }
    write_text(c.out_dir + "/effectiveness.csv", eff.str());
    for (const auto& r : ev.rows)
        std::cout << r.protocol << " " << r.direction << ": R@1 " << r.mean.r1 << "% R@3 "
                  << r.mean.r3 << "% AvgR " << r.mean.avg_rank << " +/- " << r.ci95 << "\n";
    std::cout << "target preferred for " << (ev.target_preferred * 100) << "% of edits\n";
    if (cfg.use_pmm)
        std::cout << "part identification AUC " << pid.auc << " over " << pid.instances
                  << " part instances\n";
    return 0;
}

int cmd_ablate(const Common& c, const std::string& data_path, const std::string& holdout_path,
               const std::string& combos_arg, const std::string& seeds_arg, int limit,
               int sample_steps, int runs, bool eval_only) {
    RunConfig base = resolve_config(c);
    std::vector<AblationCombo> combos;
    {
        std::istringstream ss(combos_arg);
        std::string item;
        while (std::getline(ss, item, ',')) combos.push_back(parse_combo(item));
    }
    std::vector<uint64_t> seeds;
    if (seeds_arg.empty()) {
        seeds = {base.seed, base.seed + 1, base.seed + 2};
    } else {
        std::istringstream ss(seeds_arg);
        std::string item;
        while (std::getline(ss, item, ',')) seeds.push_back(std::stoull(item));
    }

    FrozenTextEncoder text = FrozenTextEncoder::standard(base.model_dim);
    std::vector<EditTriplet> train = load_dataset(data_path, text);
    std::vector<EditTriplet> holdout = load_dataset(holdout_path, text);

    std::ostringstream rows, summary;
    rows << config_line(base) << "combo,seed,use_bmi,use_pmm,use_psm,R1,R2,R3,AvgR\n";
    summary << config_line(base) << "combo,use_bmi,use_pmm,use_psm,R1,R2,R3,AvgR\n";
    for (const AblationCombo& combo : combos) {
        RetrievalMetrics mean;
        for (uint64_t seed : seeds) {
            RunConfig cfg = base;
            cfg.seed = seed;
            cfg.use_bmi = combo.use_bmi;
            cfg.use_pmm = combo.use_pmm;
            cfg.use_psm = combo.use_psm;
            std::string dir = c.out_dir + "/" + combo.name + "/seed" + std::to_string(seed);
            EditPipeline pipe(cfg);
            if (eval_only) {
                if (!std::filesystem::exists(dir + "/checkpoint.bin"))
                    throw std::runtime_error("ablation: missing checkpoint for " + combo.name +
                                             " (seed " + std::to_string(seed) + "): " + dir +
                                             "/checkpoint.bin");
                pipe.load(dir);
            } else {
                std::cout << "training " << combo.name << " seed " << seed << "\n" << std::flush;
                train_into(pipe, train, dir, false);
            }
            std::vector<EditTriplet> held = holdout;
            std::vector<MotionSequence> generated =
                generate_edits(pipe, held, limit, sample_steps, false);
            held.erase(held.begin() + static_cast<long>(generated.size()), held.end());
            EvalOutputs ev = evaluate_edits(pipe, held, generated, runs, seed);
            const RetrievalMetrics& m = ev.rows.front().mean; // batch32 g2t
            rows << combo.name << ',' << seed << ',' << combo.use_bmi << ',' << combo.use_pmm
                 << ',' << combo.use_psm << ',' << csv_double(m.r1) << ',' << csv_double(m.r2)
                 << ',' << csv_double(m.r3) << ',' << csv_double(m.avg_rank) << '\n';
            mean.r1 += m.r1 / seeds.size();
            mean.r2 += m.r2 / seeds.size();
            mean.r3 += m.r3 / seeds.size();
            mean.avg_rank += m.avg_rank / seeds.size();
            std::cout << combo.name << " seed " << seed << ": AvgR " << m.avg_rank << "\n"
                      << std::flush;
        }
        summary << combo.name << ',' << combo.use_bmi << ',' << combo.use_pmm << ','
                << combo.use_psm << ',' << csv_double(mean.r1) << ',' << csv_double(mean.r2)
                << ',' << csv_double(mean.r3) << ',' << csv_double(mean.avg_rank) << '\n';
    }
    write_text(c.out_dir + "/ablation.csv", rows.str());
    write_text(c.out_dir + "/ablation_summary.csv", summary.str());
    std::cout << "wrote " << c.out_dir << "/ablation.csv and ablation_summary.csv\n";
    return 0;
}

int cmd_gradcheck(const Common& c, double tol, double step, int seed_count) {
    RunConfig cfg = resolve_config(c);
    bool all_pass = true;
    for (int i = 0; i < seed_count; ++i) {
        uint64_t seed = cfg.seed + static_cast<uint64_t>(i);
        GradCheckReport rep = gradcheck_battery(seed, tol, step);
        double worst = 0;
        for (const auto& e : rep.entries) worst = std::max(worst, e.max_rel_err);
        std::cout << "seed " << seed << ": " << (rep.pass ? "PASS" : "FAIL") << " ("
                  << rep.entries.size() << " tensors, worst rel err " << worst << ")\n";
        if (!rep.pass) {
            std::cout << rep.to_string();
            all_pass = false;
        }
    }
    return all_pass ? 0 : 1;
}

int cmd_verify(const Common& c) {
    RunConfig cfg = resolve_config(c);
    std::vector<CheckResult> results = verify_battery(cfg);
    int failed = 0;
    for (const auto& r : results) {
        if (r.pass) {
            std::cout << "ok " << r.name << "\n";
        } else {
            std::cout << "FAIL " << r.name << ": " << r.detail << "\n";
            ++failed;
        }
    }
    std::cout << "verify: " << (results.size() - failed) << " passed, " << failed << " failed\n";
    return failed == 0 ? 0 : 1;
}

} // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"part-aware text-driven motion editing"};
    app.require_subcommand(1);
    int exit_code = 0;

    Common c_gen, c_curves, c_train, c_edit, c_eval, c_ablate, c_grad, c_verify;

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic edit-triplet dataset");
    add_common(gen, c_gen);
    int gen_count = 0, gen_holdout = -1;
    gen->add_option("--count", gen_count, "training triplets (default from config)");
    gen->add_option("--holdout", gen_holdout, "held-out triplets (default from config)");
    gen->callback([&] { exit_code = cmd_gen_data(c_gen, gen_count, gen_holdout); });

    auto* curves = app.add_subcommand("curves", "export supervision curves for one pair");
    add_common(curves, c_curves);
    std::string curves_data, curves_stats;
    int curves_index = 0;
    curves->add_option("--data", curves_data, "triplet dataset (JSONL)")->required();
    curves->add_option("--index", curves_index, "triplet index")->capture_default_str();
    curves->add_option("--stats", curves_stats,
                       "similarity stats JSON (default: fit on the dataset)");
    curves->callback(
        [&] { exit_code = cmd_curves(c_curves, curves_data, curves_index, curves_stats); });

    auto* train = app.add_subcommand("train", "train the editor on a triplet dataset");
    add_common(train, c_train);
    std::string train_data;
    train->add_option("--data", train_data, "training dataset (JSONL)")->required();
    train->callback([&] { exit_code = cmd_train(c_train, train_data); });

    auto* edit = app.add_subcommand("edit", "apply a text edit to a motion");
    add_common(edit, c_edit);
    std::string edit_ckpt, edit_motion, edit_text;
    uint64_t edit_sample_seed = 0;
    int edit_steps = 0;
    edit->add_option("--checkpoint", edit_ckpt, "directory holding checkpoint.bin + stats.json")
        ->required();
    edit->add_option("--motion", edit_motion, "source motion JSON")->required();
    edit->add_option("--text", edit_text, "edit instruction")->required();
    edit->add_option("--sample-seed", edit_sample_seed, "sampling stream id")
        ->capture_default_str();
    edit->add_option("--sample-steps", edit_steps, "override sampling step count (0 = config)");
    edit->callback([&] {
        exit_code = cmd_edit(c_edit, edit_ckpt, edit_motion, edit_text, edit_sample_seed,
                             edit_steps);
    });

    auto* eval = app.add_subcommand("eval", "retrieval metrics on held-out triplets");
    add_common(eval, c_eval);
    std::string eval_ckpt, eval_data;
    int eval_limit = 0, eval_steps = 0, eval_runs = 20;
    eval->add_option("--checkpoint", eval_ckpt, "trained checkpoint directory")->required();
    eval->add_option("--data", eval_data, "held-out dataset (JSONL)")->required();
    eval->add_option("--limit", eval_limit, "evaluate only the first N triplets (0 = all)");
    eval->add_option("--sample-steps", eval_steps, "override sampling step count (0 = config)");
    eval->add_option("--runs", eval_runs, "shuffled repetitions per protocol")
        ->capture_default_str();
    eval->callback([&] {
        exit_code = cmd_eval(c_eval, eval_ckpt, eval_data, eval_limit, eval_steps, eval_runs);
    });

    auto* ablate = app.add_subcommand("ablate", "train and score module on/off combinations");
    add_common(ablate, c_ablate);
    std::string ab_data, ab_holdout, ab_combos = "full,no_psm,no_pmm,no_bmi", ab_seeds;
    int ab_limit = 0, ab_steps = 0, ab_runs = 20;
    bool ab_eval_only = false;
    ablate->add_option("--data", ab_data, "training dataset (JSONL)")->required();
    ablate->add_option("--holdout", ab_holdout, "held-out dataset (JSONL)")->required();
    ablate->add_option("--combos", ab_combos, "comma list of combinations")
        ->capture_default_str();
    ablate->add_option("--seeds", ab_seeds, "comma list of seeds (default: seed,seed+1,seed+2)");
    ablate->add_option("--limit", ab_limit, "cap held-out triplets (0 = all)");
    ablate->add_option("--sample-steps", ab_steps, "override sampling step count (0 = config)");
    ablate->add_option("--runs", ab_runs, "shuffled repetitions")->capture_default_str();
    ablate->add_flag("--eval-only", ab_eval_only, "reuse existing checkpoints, never train");
    ablate->callback([&] {
        exit_code = cmd_ablate(c_ablate, ab_data, ab_holdout, ab_combos, ab_seeds, ab_limit,
                               ab_steps, ab_runs, ab_eval_only);
    });

    auto* grad = app.add_subcommand("gradcheck", "finite-difference checks for every block");
    add_common(grad, c_grad);
    double gc_tol = 1e-5, gc_step = 1e-5;
    int gc_seeds = 3;
    grad->add_option("--tol", gc_tol, "relative tolerance")->capture_default_str();
    grad->add_option("--step", gc_step, "finite-difference step")->capture_default_str();
    grad->add_option("--seeds", gc_seeds, "number of seeds")->capture_default_str();
    grad->callback([&] { exit_code = cmd_gradcheck(c_grad, gc_tol, gc_step, gc_seeds); });

    auto* verify = app.add_subcommand("verify", "run the oracle and invariant battery");
    add_common(verify, c_verify);
    verify->callback([&] { exit_code = cmd_verify(c_verify); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return exit_code;
}

} // namespace motedit
