#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "docfsl/image.hpp"
#include "docfsl/patching.hpp"

namespace docfsl {

enum class BackboneKind { efficientnet_b3, resnet50, vit_s16, transfg, mock };

std::string to_string(BackboneKind k);
BackboneKind backbone_kind_from_string(const std::string& s);

// Per-patch features for one document, one row per patch.
struct FeatureSequence {
    Eigen::MatrixXd features;  // T x n
    std::string source_id;

    int length() const { return static_cast<int>(features.rows()); }
};

// Read-only after construction; safe to share across threads.
class FeatureExtractor {
  public:
    virtual ~FeatureExtractor() = default;

    BackboneKind kind() const { return kind_; }
    int feature_dim() const { return feature_dim_; }
    // Expected square input side; 0 means any size is accepted as-is.
    int input_side() const { return input_side_; }
    bool frozen() const { return frozen_; }
    void set_frozen(bool f) { frozen_ = f; }

    virtual Eigen::VectorXd extract(const ImageBuffer& patch) const = 0;

  protected:
    FeatureExtractor(BackboneKind kind, int feature_dim, int input_side)
        : kind_(kind), feature_dim_(feature_dim), input_side_(input_side) {}

    BackboneKind kind_;
    int feature_dim_;
    int input_side_;
    bool frozen_ = true;
};

// Loads an exchange-format (ONNX) model with signature
// input (batch, 3, S, S) float -> output (batch, n) float. Patches are scaled
// to [0,1], normalized with ImageNet per-channel mean/std, and resized to S
// when needed.
std::shared_ptr<FeatureExtractor> load_backbone(const std::string& model_file, BackboneKind kind);

// Deterministic test double: 8x8 grayscale downsample of the patch, flattened
// to 64 values in [0,1], times a fixed seeded 64 x feature_dim projection.
std::shared_ptr<FeatureExtractor> mock_extractor(int feature_dim, uint64_t seed);

// Runs the extractor over every patch in sequence order. Throws NumericError
// if any output is non-finite.
FeatureSequence extract_features(const FeatureExtractor& extractor, const PatchSequence& patches);

// The mock's downsample step, exposed so audits can recompute features.
Eigen::VectorXd downsample_8x8_gray(const ImageBuffer& patch);

}  // namespace docfsl
