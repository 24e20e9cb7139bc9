#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "docfsl/dataset.hpp"
#include "docfsl/rng.hpp"

namespace docfsl {

enum class FslMode { conditional, unconditional };
enum class HeadKind { prototype, nearest_support };

std::string to_string(FslMode m);
FslMode fsl_mode_from_string(const std::string& s);
HeadKind head_kind_from_string(const std::string& s);

struct Episode {
    FslMode mode = FslMode::unconditional;
    std::optional<std::string> meta_class;  // set iff conditional
    int k = 0;
    int q = 0;
    std::vector<std::pair<DocumentSample, Label>> support;  // size 2k
    std::vector<std::pair<DocumentSample, Label>> query;    // size 2q
};

struct PrototypePair {
    Eigen::VectorXd genuine_prototype;
    Eigen::VectorXd fake_prototype;
};

struct EpisodeResult {
    std::vector<std::pair<double, double>> distances;      // (d_genuine, d_fake), squared L2
    std::vector<std::pair<double, double>> probabilities;  // softmax over (-d_g, -d_f)
    std::vector<Label> predictions;                        // argmin distance, ties -> genuine
};

// Draws a class-balanced 2-way episode without replacement. Conditional mode
// first picks a meta-class with at least k+q samples of each label; the
// support/query class blocks and their internal order are shuffled.
Episode sample_episode(const DatasetIndex& index, const std::set<std::string>& split_side,
                       FslMode mode, int k, int q, Rng& rng);

PrototypePair compute_prototypes(
    const std::vector<std::pair<Eigen::VectorXd, Label>>& support_embeddings);

// Conditional lookups go through per_meta_prototypes using query_meta_classes;
// otherwise the single pair is used for every query.
EpisodeResult classify_queries(
    const PrototypePair& prototypes, const std::vector<Eigen::VectorXd>& queries, FslMode mode,
    const std::map<std::string, PrototypePair>* per_meta_prototypes = nullptr,
    const std::vector<std::string>* query_meta_classes = nullptr);

// Literal nearest-support-vector reading: class distance = min over that
// class's support vectors.
EpisodeResult classify_queries_nearest(
    const std::vector<std::pair<Eigen::VectorXd, Label>>& support_embeddings,
    const std::vector<Eigen::VectorXd>& queries);

// Mean cross-entropy over queries; probabilities clamped to [1e-12, 1-1e-12].
double episode_loss(const EpisodeResult& result, const std::vector<Label>& true_labels);

// Loss and its gradient w.r.t. every support and query embedding, for the
// prototype head. Support gradients flow through the class means.
double prototype_loss_and_grads(
    const std::vector<std::pair<Eigen::VectorXd, Label>>& support_embeddings,
    const std::vector<std::pair<Eigen::VectorXd, Label>>& query_embeddings,
    std::vector<Eigen::VectorXd>& grad_support, std::vector<Eigen::VectorXd>& grad_query);

std::string episode_to_json(const Episode& episode, const std::string& rng_tag);

}  // namespace docfsl
