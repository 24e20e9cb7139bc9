// docfsl: few-shot verification of document images (genuine vs forged).
// Subcommands: ingest, train, eval, report, patch-dump, synth.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "docfsl/common.hpp"
#include "docfsl/config.hpp"
#include "docfsl/dataset.hpp"
#include "docfsl/metrics.hpp"
#include "docfsl/patching.hpp"
#include "docfsl/report.hpp"
#include "docfsl/synthetic.hpp"
#include "docfsl/training.hpp"

namespace fs = std::filesystem;
using namespace docfsl;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::string cache_dir_from_env() {
    const char* dir = std::getenv("DOCFSL_CACHE_DIR");
    return dir ? dir : "";
}

std::shared_ptr<FeatureExtractor> make_extractor(const TrainConfig& config) {
    if (config.backbone == BackboneKind::mock) {
        return mock_extractor(config.mock_feature_dim, config.seed);
    }
    if (config.backbone_file.empty()) {
        throw UsageError("--backbone-file is required for backbone '" +
                         to_string(config.backbone) + "'");
    }
    auto ex = load_backbone(config.backbone_file, config.backbone);
    ex->set_frozen(config.backbone_frozen);
    return ex;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
}

struct TrainArgs {
    std::string config_path, manifest_path, out_dir = "run";
    int repetitions = 1;
    int n_train = -1;  // default: 60% of meta-classes
    int parallel = 1;
    // flag overrides; -1 / empty = not set
    std::string mode, backbone, backbone_file, ru_kind;
    int episodes = -1, k = -1, q = -1, eval_every = -1, eval_episodes = -1;
    int hidden_dim = -1, mock_dim = -1, patch_size = -1;
    double lr = -1;
    int64_t seed = -1;
    bool no_rescale = false;
};

TrainConfig effective_config(const TrainArgs& a) {
    TrainConfig c;
    if (!a.config_path.empty()) c = train_config_from_file(ConfigFile::parse_file(a.config_path));
    if (!a.mode.empty()) c.mode = fsl_mode_from_string(a.mode);
    if (!a.backbone.empty()) c.backbone = backbone_kind_from_string(a.backbone);
    if (!a.backbone_file.empty()) c.backbone_file = a.backbone_file;
    if (!a.ru_kind.empty()) c.ru_kind = ru_kind_from_string(a.ru_kind);
    if (a.episodes >= 0) c.episodes = a.episodes;
    if (a.k >= 0) c.k = a.k;
    if (a.q >= 0) c.q = a.q;
    if (a.eval_every >= 0) c.eval_every = a.eval_every;
    if (a.eval_episodes >= 0) c.eval_episodes = a.eval_episodes;
    if (a.hidden_dim >= 0) c.hidden_dim = a.hidden_dim;
    if (a.mock_dim >= 0) c.mock_feature_dim = a.mock_dim;
    if (a.patch_size >= 0) c.patch_size = a.patch_size;
    if (a.lr >= 0) c.learning_rate = a.lr;
    if (a.seed >= 0) c.seed = static_cast<uint64_t>(a.seed);
    if (a.no_rescale) c.rescale = false;
    return c;
}

int run_train(const TrainArgs& args) {
    TrainConfig config = effective_config(args);
    auto errors = config.validate();
    if (args.manifest_path.empty()) errors.push_back("--manifest is required");
    if (args.repetitions < 1) errors.push_back("--repetitions must be >= 1");
    if (!errors.empty()) {
        std::cerr << "configuration errors:\n";
        for (const auto& e : errors) std::cerr << "  - " << e << '\n';
        return kExitUsage;
    }

    DatasetIndex index = load_manifest(args.manifest_path);
    int n_meta = static_cast<int>(index.meta_classes.size());
    if (n_meta < 2) {
        std::cerr << "training needs >= 2 meta-classes for a train/test split, got " << n_meta
                  << '\n';
        return kExitData;
    }
    int n_train = args.n_train > 0 ? args.n_train : std::max(1, 3 * n_meta / 5);

    fs::create_directories(args.out_dir);
    auto plan = repetition_plan(index, args.repetitions, n_train, config.seed);

    // RunManifest: everything needed to re-execute this run.
    {
        nlohmann::json manifest;
        manifest["tool_version"] = kToolVersion;
        manifest["config"] = nlohmann::json::parse(train_config_to_json(config));
        manifest["manifest_path"] = fs::absolute(args.manifest_path).string();
        manifest["out_dir"] = fs::absolute(args.out_dir).string();
        manifest["master_seed"] = config.seed;
        manifest["repetitions"] = args.repetitions;
        manifest["n_train"] = n_train;
        nlohmann::json splits = nlohmann::json::array();
        for (const auto& s : plan) splits.push_back(nlohmann::json::parse(split_to_json(s)));
        manifest["split_plan"] = splits;
        write_text((fs::path(args.out_dir) / "run_manifest.json").string(), manifest.dump(2));
    }

    auto extractor = make_extractor(config);
    PipelineFeatureSource features(index, extractor, config.rescale, config.ref_height,
                                   config.ref_width, config.patch_size, cache_dir_from_env());

    std::vector<EvalReport> reports(args.repetitions);
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto run_one = [&](int rep) {
        try {
            const MetaSplit& split = plan[rep];
            fs::path rep_dir = fs::path(args.out_dir) /
                               ("rep_" + std::string(rep < 10 ? "00" : rep < 100 ? "0" : "") +
                                std::to_string(rep));
            fs::create_directories(rep_dir);
            write_text((rep_dir / "split.json").string(), split_to_json(split));

            auto hook = [&](int episode, const TrainedModel& model, const EvalReport&) {
                save_checkpoint((rep_dir / ("checkpoint_" + std::to_string(episode) + ".ckpt"))
                                    .string(),
                                model.ru);
            };
            auto [model, history] = train_run(config, index, split, features, hook);
            save_checkpoint((rep_dir / "final.ckpt").string(), model.ru);
            write_text((rep_dir / "history.json").string(), history_to_json(history));

            EvalReport report =
                evaluate_run(model, index, split.test_meta_classes, config, features);
            write_text((rep_dir / "report.json").string(), eval_report_to_json(report));
            reports[rep] = report;
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };

    if (args.parallel > 1) {
        std::vector<std::thread> workers;
        std::atomic<int> next{0};
        int n_workers = std::min(args.parallel, args.repetitions);
        for (int w = 0; w < n_workers; ++w) {
            workers.emplace_back([&] {
                for (int rep; (rep = next.fetch_add(1)) < args.repetitions;) run_one(rep);
            });
        }
        for (auto& t : workers) t.join();
    } else {
        for (int rep = 0; rep < args.repetitions; ++rep) run_one(rep);
    }
    if (failure) std::rethrow_exception(failure);

    RunReport summary = aggregate_repetitions(reports);
    write_text((fs::path(args.out_dir) / "summary.json").string(),
               run_report_to_json(summary, config));
    std::cout << "accuracy " << summary.mean_accuracy << " ± " << summary.std_accuracy
              << ", auc " << summary.mean_auc << " ± " << summary.std_auc << " over "
              << args.repetitions << " repetition(s)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"few-shot document forgery verification"};
    app.require_subcommand(1);

    // ---- ingest ----
    auto* ingest = app.add_subcommand("ingest", "validate a manifest and print dataset stats");
    std::string ingest_manifest, ingest_split_out;
    int ingest_n_train = -1, ingest_reps = 1;
    int64_t ingest_seed = 0;
    ingest->add_option("--manifest", ingest_manifest, "manifest CSV")->required();
    ingest->add_option("--split-out", ingest_split_out, "directory for split JSONs");
    ingest->add_option("--n-train", ingest_n_train, "meta-classes in meta-train");
    ingest->add_option("--repetitions", ingest_reps, "splits to emit");
    ingest->add_option("--seed", ingest_seed, "split seed");

    // ---- train ----
    auto* train = app.add_subcommand("train", "episodic training with repetitions");
    TrainArgs ta;
    train->add_option("--config", ta.config_path, "TOML config file");
    train->add_option("--manifest", ta.manifest_path, "manifest CSV");
    train->add_option("--out", ta.out_dir, "run output directory");
    train->add_option("--repetitions", ta.repetitions, "independent repetitions");
    train->add_option("--n-train", ta.n_train, "meta-classes in meta-train");
    train->add_option("--parallel-repetitions", ta.parallel, "concurrent repetitions");
    train->add_option("--mode", ta.mode, "c-fsl or u-fsl");
    train->add_option("--episodes", ta.episodes, "training episodes");
    train->add_option("--k", ta.k, "support shots per class");
    train->add_option("--q", ta.q, "query shots per class");
    train->add_option("--eval-every", ta.eval_every, "evaluation interval N1");
    train->add_option("--eval-episodes", ta.eval_episodes, "evaluation episodes M");
    train->add_option("--lr", ta.lr, "Adam learning rate");
    train->add_option("--seed", ta.seed, "master seed");
    train->add_option("--backbone", ta.backbone,
                      "efficientnet_b3|resnet50|vit_s16|transfg|mock");
    train->add_option("--backbone-file", ta.backbone_file, "exchange-format model file");
    train->add_option("--mock-dim", ta.mock_dim, "mock backbone feature dim");
    train->add_option("--ru", ta.ru_kind, "rnn|lstm|gru");
    train->add_option("--hidden-dim", ta.hidden_dim, "recurrent hidden size m");
    train->add_option("--patch-size", ta.patch_size, "patch side W");
    train->add_flag("--no-rescale", ta.no_rescale, "keep native image resolution");

    // ---- eval ----
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a manifest");
    std::string ev_checkpoint, ev_manifest, ev_config, ev_mode, ev_backbone, ev_backbone_file;
    std::string ev_out = "report.json";
    int ev_episodes = -1, ev_k = -1, ev_q = -1, ev_mock_dim = -1, ev_patch = -1;
    int64_t ev_seed = -1;
    bool ev_no_rescale = false;
    eval->add_option("--checkpoint", ev_checkpoint, "recurrent-unit checkpoint")->required();
    eval->add_option("--manifest", ev_manifest, "manifest CSV")->required();
    eval->add_option("--config", ev_config, "TOML config file");
    eval->add_option("--mode", ev_mode, "c-fsl or u-fsl");
    eval->add_option("--episodes", ev_episodes, "evaluation episodes M");
    eval->add_option("--k", ev_k, "support shots per class");
    eval->add_option("--q", ev_q, "query shots per class");
    eval->add_option("--seed", ev_seed, "episode seed");
    eval->add_option("--backbone", ev_backbone, "backbone kind");
    eval->add_option("--backbone-file", ev_backbone_file, "exchange-format model file");
    eval->add_option("--mock-dim", ev_mock_dim, "mock backbone feature dim");
    eval->add_option("--patch-size", ev_patch, "patch side W");
    eval->add_option("--out", ev_out, "report JSON path");
    eval->add_flag("--no-rescale", ev_no_rescale, "keep native image resolution");

    // ---- report ----
    auto* report = app.add_subcommand("report", "summary table and plots from run reports");
    std::vector<std::string> rep_paths;
    std::string rep_out_dir = ".";
    report->add_option("reports", rep_paths, "summary.json files")->required();
    report->add_option("--out-dir", rep_out_dir, "output directory");

    // ---- patch-dump ----
    auto* pdump = app.add_subcommand("patch-dump", "write a document's patches for auditing");
    std::string pd_manifest, pd_id, pd_image, pd_out = "patches";
    int pd_patch = 299, pd_ref_h = 1047, pd_ref_w = 1564;
    bool pd_rescale = false;
    pdump->add_option("--manifest", pd_manifest, "manifest CSV");
    pdump->add_option("--id", pd_id, "sample id (with --manifest) or output name");
    pdump->add_option("--image", pd_image, "image file (instead of --manifest)");
    pdump->add_option("--patch-size", pd_patch, "patch side W");
    pdump->add_flag("--rescale", pd_rescale, "resize to reference first");
    pdump->add_option("--ref-height", pd_ref_h, "reference height");
    pdump->add_option("--ref-width", pd_ref_w, "reference width");
    pdump->add_option("--out-dir", pd_out, "output directory");

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "generate a synthetic demo dataset");
    SyntheticSpec sspec;
    std::string synth_out = "synthetic";
    int64_t synth_seed = 0;
    synth->add_option("--out", synth_out, "output directory");
    synth->add_option("--meta-classes", sspec.meta_classes, "number of meta-classes");
    synth->add_option("--per-label", sspec.per_label_per_meta, "samples per label per meta-class");
    synth->add_option("--noise", sspec.noise_sigma, "per-cell noise sigma");
    synth->add_option("--separation", sspec.separation, "class separation in sigmas");
    synth->add_option("--seed", synth_seed, "generator seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitUsage;
    }

    try {
        if (*ingest) {
            DatasetIndex index = load_manifest(ingest_manifest);
            std::cout << "samples: " << index.samples.size() << '\n'
                      << "meta-classes: " << index.meta_classes.size() << '\n';
            for (const auto& mc : index.meta_classes) {
                auto g = index.counts.find({mc, Label::genuine});
                auto f = index.counts.find({mc, Label::fake});
                std::cout << "  " << mc << ": genuine "
                          << (g == index.counts.end() ? 0 : g->second) << ", fake "
                          << (f == index.counts.end() ? 0 : f->second) << '\n';
            }
            if (!ingest_split_out.empty()) {
                int n_meta = static_cast<int>(index.meta_classes.size());
                int n_train =
                    ingest_n_train > 0 ? ingest_n_train : std::max(1, 3 * n_meta / 5);
                fs::create_directories(ingest_split_out);
                auto plan = repetition_plan(index, ingest_reps, n_train,
                                            static_cast<uint64_t>(ingest_seed));
                for (const auto& s : plan) {
                    write_text((fs::path(ingest_split_out) /
                                ("split_" + std::to_string(s.repetition_index) + ".json"))
                                   .string(),
                               split_to_json(s));
                }
            }
            return 0;
        }

        if (*train) return run_train(ta);

        if (*eval) {
            TrainConfig config;
            if (!ev_config.empty()) config = train_config_from_file(ConfigFile::parse_file(ev_config));
            if (!ev_mode.empty()) config.mode = fsl_mode_from_string(ev_mode);
            if (!ev_backbone.empty()) config.backbone = backbone_kind_from_string(ev_backbone);
            if (!ev_backbone_file.empty()) config.backbone_file = ev_backbone_file;
            if (ev_mock_dim >= 0) config.mock_feature_dim = ev_mock_dim;
            if (ev_episodes >= 0) config.eval_episodes = ev_episodes;
            if (ev_k >= 0) config.k = ev_k;
            if (ev_q >= 0) config.q = ev_q;
            if (ev_seed >= 0) config.seed = static_cast<uint64_t>(ev_seed);
            if (ev_patch >= 0) config.patch_size = ev_patch;
            if (ev_no_rescale) config.rescale = false;

            DatasetIndex index = load_manifest(ev_manifest);
            TrainedModel model;
            model.ru = load_checkpoint(ev_checkpoint);
            model.config = config;
            config.ru_kind = model.ru.kind;
            config.hidden_dim = model.ru.hidden_dim;

            auto extractor = make_extractor(config);
            if (extractor->feature_dim() != model.ru.input_dim) {
                throw DataError("checkpoint expects input_dim " +
                                std::to_string(model.ru.input_dim) + " but backbone '" +
                                to_string(config.backbone) + "' produces " +
                                std::to_string(extractor->feature_dim()));
            }
            if (index.meta_classes.size() == 1 && config.mode == FslMode::conditional) {
                std::cerr << "warning: single meta-class manifest, C-FSL and U-FSL coincide\n";
            }
            PipelineFeatureSource features(index, extractor, config.rescale, config.ref_height,
                                           config.ref_width, config.patch_size,
                                           cache_dir_from_env());
            model.config = config;
            EvalReport rep = evaluate_run(model, index, index.meta_classes, config, features);
            write_text(ev_out, eval_report_to_json(rep));
            std::cout << "accuracy " << rep.accuracy << ", auc " << rep.auc << " over "
                      << rep.n_queries << " queries\n";
            return 0;
        }

        if (*report) {
            auto rows = load_report_rows(rep_paths);
            fs::create_directories(rep_out_dir);
            std::string table = render_table_text(rows);
            std::cout << table;
            write_text((fs::path(rep_out_dir) / "table.txt").string(), table);
            write_text((fs::path(rep_out_dir) / "table.csv").string(), render_table_csv(rows));
            render_metric_plot((fs::path(rep_out_dir) / "accuracy.png").string(), rows,
                               "accuracy");
            render_metric_plot((fs::path(rep_out_dir) / "auc.png").string(), rows, "auc");
            return 0;
        }

        if (*pdump) {
            ImageBuffer img;
            std::string id = pd_id;
            if (!pd_manifest.empty()) {
                if (pd_id.empty()) throw UsageError("--id required with --manifest");
                DatasetIndex index = load_manifest(pd_manifest);
                auto it = std::find_if(index.samples.begin(), index.samples.end(),
                                       [&](const DocumentSample& s) { return s.id == pd_id; });
                if (it == index.samples.end()) {
                    throw DataError("sample id '" + pd_id + "' not in manifest");
                }
                img = load_image(index, *it);
            } else if (!pd_image.empty()) {
                if (id.empty()) id = fs::path(pd_image).stem().string();
                img = load_image_file(pd_image, id);
            } else {
                throw UsageError("patch-dump needs --manifest + --id or --image");
            }
            if (pd_rescale) img = resize_to_reference(img, pd_ref_h, pd_ref_w);
            GridPlan plan = plan_grid(img.height, img.width, pd_patch);
            PatchSequence seq = extract_patches(img, plan, id);
            fs::create_directories(pd_out);
            for (size_t i = 0; i < seq.patches.size(); ++i) {
                auto [r, c] = seq.positions[i];
                save_png((fs::path(pd_out) / (id + "_" + std::to_string(r) + "_" +
                                              std::to_string(c) + ".png"))
                             .string(),
                         seq.patches[i]);
            }
            write_text((fs::path(pd_out) / (id + "_grid.json")).string(),
                       grid_plan_to_json(plan));
            std::cout << "wrote " << seq.patches.size() << " patches to " << pd_out << '\n';
            return 0;
        }

        if (*synth) {
            sspec.seed = static_cast<uint64_t>(synth_seed);
            std::string manifest = make_synthetic_dataset(synth_out, sspec);
            std::cout << "wrote " << manifest << '\n';
            return 0;
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NumericError& e) {
        std::cerr << "numeric abort: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return 0;
}
