#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "docfsl/backbone.hpp"
#include "docfsl/dataset.hpp"
#include "docfsl/fsl.hpp"
#include "docfsl/recurrent.hpp"

namespace docfsl {

struct TrainConfig {
    FslMode mode = FslMode::unconditional;
    int k = 10;
    int q = 10;
    int episodes = 5000;
    int eval_every = 250;    // N1: evaluation interval
    int eval_episodes = 100; // M: episodes per evaluation
    double learning_rate = 1e-3;
    uint64_t seed = 0;

    BackboneKind backbone = BackboneKind::mock;
    std::string backbone_file;
    int mock_feature_dim = 16;
    bool backbone_frozen = true;

    RuKind ru_kind = RuKind::lstm;
    int hidden_dim = 256;

    bool rescale = true;
    int ref_height = 1047;
    int ref_width = 1564;
    int patch_size = 299;
    HeadKind head = HeadKind::prototype;

    // Collects every validation failure instead of stopping at the first.
    std::vector<std::string> validate() const;
};

// Produces per-document feature sequences; implementations must be pure in
// the sample (identity by id) and safe for concurrent readers.
class FeatureSource {
  public:
    virtual ~FeatureSource() = default;
    virtual FeatureSequence get(const DocumentSample& sample) const = 0;
    virtual int feature_dim() const = 0;
};

// load -> optional rescale -> grid plan -> patches -> backbone. Features of a
// frozen backbone are cached in memory and, when cache_dir is set, on disk.
class PipelineFeatureSource : public FeatureSource {
  public:
    PipelineFeatureSource(const DatasetIndex& index, std::shared_ptr<FeatureExtractor> extractor,
                          bool rescale, int ref_height, int ref_width, int patch_size,
                          std::string cache_dir = "");

    FeatureSequence get(const DocumentSample& sample) const override;
    int feature_dim() const override { return extractor_->feature_dim(); }

  private:
    FeatureSequence compute(const DocumentSample& sample) const;
    std::string disk_cache_path(const DocumentSample& sample) const;

    const DatasetIndex& index_;
    std::shared_ptr<FeatureExtractor> extractor_;
    bool rescale_;
    int ref_height_, ref_width_, patch_size_;
    std::string cache_dir_;
    mutable std::mutex mutex_;
    mutable std::map<std::string, FeatureSequence> cache_;
};

struct EvalReport {
    double accuracy = 0.0;  // pooled over all queries of all episodes
    double auc = 0.0;       // pooled score set
    int n_queries = 0;
    double mean_episode_accuracy = 0.0;
    std::vector<std::pair<double, double>> per_episode;  // (accuracy, mean loss)
};

struct RunReport {
    std::vector<EvalReport> per_repetition;
    double mean_accuracy = 0.0, std_accuracy = 0.0;
    double mean_auc = 0.0, std_auc = 0.0;
};

struct TrainHistory {
    std::vector<double> episode_losses;
    std::vector<std::pair<int, EvalReport>> periodic_evals;  // (episode index, report)
};

struct TrainedModel {
    RecurrentUnit ru;
    TrainConfig config;
};

// Invoked after each periodic evaluation; used by the CLI to write interval
// checkpoints.
using EvalHook = std::function<void(int episode, const TrainedModel&, const EvalReport&)>;

// Episodic training on the split's meta-train side with periodic evaluation
// on the meta-test side. Fully determined by config.seed and the split.
std::pair<TrainedModel, TrainHistory> train_run(const TrainConfig& config,
                                                const DatasetIndex& index, const MetaSplit& split,
                                                const FeatureSource& features,
                                                const EvalHook& hook = nullptr);

// M evaluation episodes; per-query score is p_fake; never mutates the model.
EvalReport evaluate_run(const TrainedModel& model, const DatasetIndex& index,
                        const std::set<std::string>& split_side, const TrainConfig& config,
                        const FeatureSource& features);

RunReport aggregate_repetitions(const std::vector<EvalReport>& reports);

// JSON with a schema_version field.
std::string eval_report_to_json(const EvalReport& report);
EvalReport eval_report_from_json(const std::string& json_text);
std::string run_report_to_json(const RunReport& report, const TrainConfig& config);
std::string history_to_json(const TrainHistory& history);
std::string train_config_to_json(const TrainConfig& config);

}  // namespace docfsl
