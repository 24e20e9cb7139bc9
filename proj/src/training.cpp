#include "docfsl/training.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "docfsl/common.hpp"
#include "docfsl/metrics.hpp"
#include "docfsl/patching.hpp"

namespace fs = std::filesystem;

namespace docfsl {

namespace {

// RNG stream tags; evaluation keying deliberately excludes the FSL mode so
// that C-FSL and U-FSL evaluations share episode draws on degenerate data.
constexpr uint64_t kTrainStream = 0x74726e;  // "trn"
constexpr uint64_t kEvalStream = 0x65766c;   // "evl"

}  // namespace

std::vector<std::string> TrainConfig::validate() const {
    std::vector<std::string> errors;
    if (k < 1) errors.push_back("k must be >= 1");
    if (q < 1) errors.push_back("q must be >= 1");
    if (eval_every < 1) errors.push_back("eval_every must be >= 1");
    if (episodes < eval_every) errors.push_back("episodes must be >= eval_every");
    if (eval_episodes < 1) errors.push_back("eval_episodes must be >= 1");
    if (learning_rate <= 0) errors.push_back("learning_rate must be > 0");
    if (hidden_dim < 1) errors.push_back("hidden_dim must be >= 1");
    if (patch_size < 1) errors.push_back("patch_size must be >= 1");
    if (ref_height < 1 || ref_width < 1) errors.push_back("reference size must be >= 1");
    if (backbone == BackboneKind::mock) {
        if (mock_feature_dim < 1) errors.push_back("mock feature dim must be >= 1");
    } else if (backbone_file.empty()) {
        errors.push_back("backbone_file required for backbone '" + to_string(backbone) + "'");
    }
    return errors;
}

PipelineFeatureSource::PipelineFeatureSource(const DatasetIndex& index,
                                             std::shared_ptr<FeatureExtractor> extractor,
                                             bool rescale, int ref_height, int ref_width,
                                             int patch_size, std::string cache_dir)
    : index_(index),
      extractor_(std::move(extractor)),
      rescale_(rescale),
      ref_height_(ref_height),
      ref_width_(ref_width),
      patch_size_(patch_size),
      cache_dir_(std::move(cache_dir)) {}

std::string PipelineFeatureSource::disk_cache_path(const DocumentSample& sample) const {
    return (fs::path(cache_dir_) /
            (to_string(extractor_->kind()) + "_" + std::to_string(extractor_->feature_dim()) +
             "_" + (rescale_ ? "r" : "n") + std::to_string(patch_size_) + "_" + sample.id +
             ".feat"))
        .string();
}

FeatureSequence PipelineFeatureSource::compute(const DocumentSample& sample) const {
    ImageBuffer img = load_image(index_, sample);
    if (rescale_) img = resize_to_reference(img, ref_height_, ref_width_);
    GridPlan plan = plan_grid(img.height, img.width, patch_size_);
    PatchSequence patches = extract_patches(img, plan, sample.id);
    return extract_features(*extractor_, patches);
}

FeatureSequence PipelineFeatureSource::get(const DocumentSample& sample) const {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(sample.id);
        if (it != cache_.end()) return it->second;
    }
    if (!cache_dir_.empty()) {
        std::ifstream in(disk_cache_path(sample), std::ios::binary);
        if (in) {
            int32_t rows = 0, cols = 0;
            in.read(reinterpret_cast<char*>(&rows), 4);
            in.read(reinterpret_cast<char*>(&cols), 4);
            if (in && rows > 0 && cols == extractor_->feature_dim()) {
                FeatureSequence seq;
                seq.source_id = sample.id;
                seq.features.resize(rows, cols);
                in.read(reinterpret_cast<char*>(seq.features.data()),
                        static_cast<std::streamsize>(sizeof(double)) * rows * cols);
                if (in) {
                    std::lock_guard<std::mutex> lock(mutex_);
                    cache_[sample.id] = seq;
                    return seq;
                }
            }
        }
    }
    FeatureSequence seq = compute(sample);
    if (!cache_dir_.empty()) {
        std::error_code ec;
        fs::create_directories(cache_dir_, ec);
        std::ofstream out(disk_cache_path(sample), std::ios::binary);
        if (out) {
            int32_t rows = static_cast<int32_t>(seq.features.rows());
            int32_t cols = static_cast<int32_t>(seq.features.cols());
            out.write(reinterpret_cast<const char*>(&rows), 4);
            out.write(reinterpret_cast<const char*>(&cols), 4);
            out.write(reinterpret_cast<const char*>(seq.features.data()),
                      static_cast<std::streamsize>(sizeof(double)) * rows * cols);
        }
    }
    std::lock_guard<std::mutex> lock(mutex_);
    cache_[sample.id] = seq;
    return seq;
}

namespace {

struct Adam {
    double lr, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    Eigen::VectorXd m, v;
    int t = 0;

    explicit Adam(double lr_, int n) : lr(lr_), m(Eigen::VectorXd::Zero(n)),
                                       v(Eigen::VectorXd::Zero(n)) {}

    void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
        ++t;
        m = beta1 * m + (1 - beta1) * grad;
        v = beta2 * v + (1 - beta2) * grad.cwiseProduct(grad);
        double bc1 = 1 - std::pow(beta1, t);
        double bc2 = 1 - std::pow(beta2, t);
        for (int i = 0; i < params.size(); ++i) {
            params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
        }
    }
};

std::vector<std::pair<Eigen::VectorXd, Label>> embed(
    const RecurrentUnit& ru, const FeatureSource& features,
    const std::vector<std::pair<DocumentSample, Label>>& docs,
    std::vector<Eigen::MatrixXd>* feats_out, std::vector<RuTrace>* traces_out) {
    std::vector<std::pair<Eigen::VectorXd, Label>> out;
    for (const auto& [sample, label] : docs) {
        FeatureSequence seq = features.get(sample);
        if (traces_out) {
            RuTrace trace;
            Eigen::VectorXd h = aggregate_traced(ru, seq.features, trace);
            traces_out->push_back(std::move(trace));
            if (feats_out) feats_out->push_back(seq.features);
            out.emplace_back(h, label);
        } else {
            out.emplace_back(aggregate(ru, seq).vector, label);
        }
    }
    return out;
}

}  // namespace

EvalReport evaluate_run(const TrainedModel& model, const DatasetIndex& index,
                        const std::set<std::string>& split_side, const TrainConfig& config,
                        const FeatureSource& features) {
    EvalReport report;
    std::vector<Label> all_preds, all_truths;
    std::vector<double> all_scores;
    double episode_acc_sum = 0.0;

    for (int e = 0; e < config.eval_episodes; ++e) {
        Rng rng = Rng::keyed({config.seed, kEvalStream, static_cast<uint64_t>(e)});
        Episode ep = sample_episode(index, split_side, config.mode, config.k, config.q, rng);

        auto support = embed(model.ru, features, ep.support, nullptr, nullptr);
        auto query = embed(model.ru, features, ep.query, nullptr, nullptr);

        std::vector<Eigen::VectorXd> query_vecs;
        std::vector<Label> truths;
        for (const auto& [v, label] : query) {
            query_vecs.push_back(v);
            truths.push_back(label);
        }

        EpisodeResult result;
        if (config.head == HeadKind::nearest_support) {
            result = classify_queries_nearest(support, query_vecs);
        } else {
            PrototypePair protos = compute_prototypes(support);
            result = classify_queries(protos, query_vecs, config.mode);
        }
        double loss = episode_loss(result, truths);
        double ep_acc = accuracy(result.predictions, truths);
        report.per_episode.emplace_back(ep_acc, loss);
        episode_acc_sum += ep_acc;

        for (size_t i = 0; i < truths.size(); ++i) {
            all_preds.push_back(result.predictions[i]);
            all_truths.push_back(truths[i]);
            all_scores.push_back(result.probabilities[i].second);  // p_fake
        }
    }

    report.n_queries = static_cast<int>(all_truths.size());
    report.accuracy = accuracy(all_preds, all_truths);
    report.auc = auc(all_scores, all_truths);
    report.mean_episode_accuracy = episode_acc_sum / config.eval_episodes;
    return report;
}

std::pair<TrainedModel, TrainHistory> train_run(const TrainConfig& config,
                                               const DatasetIndex& index, const MetaSplit& split,
                                               const FeatureSource& features,
                                               const EvalHook& hook) {
    auto errors = config.validate();
    if (!errors.empty()) {
        std::string msg = "invalid config:";
        for (const auto& e : errors) msg += "\n  - " + e;
        throw UsageError(msg);
    }
    if (!config.backbone_frozen) {
        throw UsageError(
            "backbone fine-tuning is not supported for exchange-format backbones; "
            "set backbone_frozen=true");
    }

    TrainedModel model;
    model.config = config;
    model.ru = init_ru(config.ru_kind, features.feature_dim(), config.hidden_dim,
                       Rng::keyed({config.seed, static_cast<uint64_t>(split.repetition_index)})
                           .next_u64());

    Eigen::VectorXd params = flatten_params(model.ru.params);
    Adam adam(config.learning_rate, static_cast<int>(params.size()));
    TrainHistory history;

    for (int episode = 0; episode < config.episodes; ++episode) {
        Rng rng = Rng::keyed({config.seed, kTrainStream,
                              static_cast<uint64_t>(split.repetition_index),
                              static_cast<uint64_t>(episode)});
        Episode ep = sample_episode(index, split.train_meta_classes, config.mode, config.k,
                                    config.q, rng);

        std::vector<Eigen::MatrixXd> feats;
        std::vector<RuTrace> traces;
        auto support = embed(model.ru, features, ep.support, &feats, &traces);
        auto query = embed(model.ru, features, ep.query, &feats, &traces);

        std::vector<Eigen::VectorXd> grad_support, grad_query;
        double loss = prototype_loss_and_grads(support, query, grad_support, grad_query);
        if (!std::isfinite(loss)) {
            throw NumericError("non-finite loss at training episode " + std::to_string(episode));
        }
        history.episode_losses.push_back(loss);

        RuParams grad = zero_like(model.ru.params);
        for (size_t i = 0; i < support.size(); ++i) {
            add_scaled(grad, backward(model.ru, feats[i], traces[i], grad_support[i]), 1.0);
        }
        for (size_t i = 0; i < query.size(); ++i) {
            add_scaled(grad,
                       backward(model.ru, feats[support.size() + i], traces[support.size() + i],
                                grad_query[i]),
                       1.0);
        }

        adam.step(params, flatten_params(grad));
        if (!params.allFinite()) {
            throw NumericError("non-finite parameters after episode " + std::to_string(episode));
        }
        unflatten_params(params, model.ru.params);

        if ((episode + 1) % config.eval_every == 0) {
            EvalReport report =
                evaluate_run(model, index, split.test_meta_classes, config, features);
            history.periodic_evals.emplace_back(episode + 1, report);
            if (hook) hook(episode + 1, model, report);
        }
    }
    return {std::move(model), std::move(history)};
}

RunReport aggregate_repetitions(const std::vector<EvalReport>& reports) {
    if (reports.empty()) throw DataError("aggregate_repetitions: empty report list");
    RunReport run;
    run.per_repetition = reports;
    double n = static_cast<double>(reports.size());
    for (const auto& r : reports) {
        run.mean_accuracy += r.accuracy;
        run.mean_auc += r.auc;
    }
    run.mean_accuracy /= n;
    run.mean_auc /= n;
    for (const auto& r : reports) {
        run.std_accuracy += (r.accuracy - run.mean_accuracy) * (r.accuracy - run.mean_accuracy);
        run.std_auc += (r.auc - run.mean_auc) * (r.auc - run.mean_auc);
    }
    // population standard deviation
    run.std_accuracy = std::sqrt(run.std_accuracy / n);
    run.std_auc = std::sqrt(run.std_auc / n);
    return run;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

static constexpr int kSchemaVersion = 1;

static nlohmann::json eval_report_json(const EvalReport& r) {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["accuracy"] = r.accuracy;
    j["auc"] = r.auc;
    j["n_queries"] = r.n_queries;
    j["mean_episode_accuracy"] = r.mean_episode_accuracy;
    nlohmann::json per = nlohmann::json::array();
    for (const auto& [acc, loss] : r.per_episode) per.push_back({acc, loss});
    j["per_episode"] = per;
    return j;
}

std::string eval_report_to_json(const EvalReport& report) {
    return eval_report_json(report).dump(2);
}

EvalReport eval_report_from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("invalid report JSON: ") + e.what());
    }
    if (j.value("schema_version", -1) != kSchemaVersion) {
        throw DataError("report schema_version mismatch (expected " +
                        std::to_string(kSchemaVersion) + ")");
    }
    EvalReport r;
    r.accuracy = j.at("accuracy").get<double>();
    r.auc = j.at("auc").get<double>();
    r.n_queries = j.at("n_queries").get<int>();
    r.mean_episode_accuracy = j.value("mean_episode_accuracy", 0.0);
    for (const auto& e : j.value("per_episode", nlohmann::json::array())) {
        r.per_episode.emplace_back(e.at(0).get<double>(), e.at(1).get<double>());
    }
    return r;
}

std::string train_config_to_json(const TrainConfig& c) {
    nlohmann::json j;
    j["mode"] = to_string(c.mode);
    j["k"] = c.k;
    j["q"] = c.q;
    j["episodes"] = c.episodes;
    j["eval_every"] = c.eval_every;
    j["eval_episodes"] = c.eval_episodes;
    j["learning_rate"] = c.learning_rate;
    j["seed"] = c.seed;
    j["backbone"] = to_string(c.backbone);
    j["backbone_file"] = c.backbone_file;
    j["mock_feature_dim"] = c.mock_feature_dim;
    j["backbone_frozen"] = c.backbone_frozen;
    j["ru_kind"] = to_string(c.ru_kind);
    j["hidden_dim"] = c.hidden_dim;
    j["rescale"] = c.rescale;
    j["ref_height"] = c.ref_height;
    j["ref_width"] = c.ref_width;
    j["patch_size"] = c.patch_size;
    j["head"] = c.head == HeadKind::prototype ? "prototype" : "nearest_support";
    return j.dump(2);
}

std::string run_report_to_json(const RunReport& report, const TrainConfig& config) {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["config"] = nlohmann::json::parse(train_config_to_json(config));
    j["mean_accuracy"] = report.mean_accuracy;
    j["std_accuracy"] = report.std_accuracy;
    j["mean_auc"] = report.mean_auc;
    j["std_auc"] = report.std_auc;
    nlohmann::json per = nlohmann::json::array();
    for (const auto& r : report.per_repetition) per.push_back(eval_report_json(r));
    j["per_repetition"] = per;
    return j.dump(2);
}

std::string history_to_json(const TrainHistory& history) {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["episode_losses"] = history.episode_losses;
    nlohmann::json evals = nlohmann::json::array();
    for (const auto& [episode, report] : history.periodic_evals) {
        evals.push_back({{"episode", episode}, {"report", eval_report_json(report)}});
    }
    j["periodic_evals"] = evals;
    return j.dump(2);
}

}  // namespace docfsl
