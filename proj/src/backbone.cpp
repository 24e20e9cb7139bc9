#include "docfsl/backbone.hpp"

#include <cmath>

#include "docfsl/common.hpp"
#include "docfsl/onnx.hpp"
#include "docfsl/rng.hpp"

namespace docfsl {

std::string to_string(BackboneKind k) {
    switch (k) {
        case BackboneKind::efficientnet_b3: return "efficientnet_b3";
        case BackboneKind::resnet50: return "resnet50";
        case BackboneKind::vit_s16: return "vit_s16";
        case BackboneKind::transfg: return "transfg";
        case BackboneKind::mock: return "mock";
    }
    return "?";
}

BackboneKind backbone_kind_from_string(const std::string& s) {
    if (s == "efficientnet_b3") return BackboneKind::efficientnet_b3;
    if (s == "resnet50") return BackboneKind::resnet50;
    if (s == "vit_s16") return BackboneKind::vit_s16;
    if (s == "transfg") return BackboneKind::transfg;
    if (s == "mock") return BackboneKind::mock;
    throw UsageError("unknown backbone kind '" + s + "'");
}

Eigen::VectorXd downsample_8x8_gray(const ImageBuffer& patch) {
    Eigen::VectorXd out(64);
    int H = patch.height, W = patch.width;
    for (int i = 0; i < 8; ++i) {
        int r0 = i * H / 8, r1 = std::max((i + 1) * H / 8, r0 + 1);
        r1 = std::min(r1, H);
        r0 = std::min(r0, H - 1);
        for (int j = 0; j < 8; ++j) {
            int c0 = j * W / 8, c1 = std::max((j + 1) * W / 8, c0 + 1);
            c1 = std::min(c1, W);
            c0 = std::min(c0, W - 1);
            double sum = 0.0;
            for (int r = r0; r < r1; ++r)
                for (int c = c0; c < c1; ++c) {
                    sum += (patch.at(r, c, 0) + patch.at(r, c, 1) + patch.at(r, c, 2)) / 3.0;
                }
            out[i * 8 + j] = sum / (255.0 * (r1 - r0) * (c1 - c0));
        }
    }
    return out;
}

namespace {

class MockExtractor : public FeatureExtractor {
  public:
    MockExtractor(int feature_dim, uint64_t seed)
        : FeatureExtractor(BackboneKind::mock, feature_dim, 0), projection_(64, feature_dim) {
        Rng rng = Rng::keyed({seed, 0x6d6f636bull});  // "mock"
        for (int i = 0; i < 64; ++i)
            for (int j = 0; j < feature_dim; ++j) projection_(i, j) = rng.uniform(-1.0, 1.0);
    }

    Eigen::VectorXd extract(const ImageBuffer& patch) const override {
        return projection_.transpose() * downsample_8x8_gray(patch);
    }

  private:
    Eigen::MatrixXd projection_;  // 64 x feature_dim, row-major fill order
};

// ImageNet channel statistics, RGB.
constexpr double kMean[3] = {0.485, 0.456, 0.406};
constexpr double kStd[3] = {0.229, 0.224, 0.225};

class OnnxExtractor : public FeatureExtractor {
  public:
    OnnxExtractor(BackboneKind kind, onnx::Model model, int feature_dim, int input_side)
        : FeatureExtractor(kind, feature_dim, input_side), model_(std::move(model)) {}

    Eigen::VectorXd extract(const ImageBuffer& patch) const override {
        ImageBuffer p = patch;
        if (input_side_ > 0 && (p.height != input_side_ || p.width != input_side_)) {
            p = resize_to_reference(p, input_side_, input_side_);
        }
        onnx::Tensor in;
        in.shape = {1, 3, p.height, p.width};
        in.data.resize(in.numel());
        size_t hw = static_cast<size_t>(p.height) * p.width;
        for (int ch = 0; ch < 3; ++ch)
            for (int r = 0; r < p.height; ++r)
                for (int c = 0; c < p.width; ++c) {
                    double v = p.at(r, c, ch) / 255.0;
                    in.data[ch * hw + r * p.width + c] =
                        static_cast<float>((v - kMean[ch]) / kStd[ch]);
                }
        onnx::Tensor out = onnx::run(model_, in);
        if (out.shape.size() != 2 || out.shape[0] != 1 ||
            out.shape[1] != static_cast<int64_t>(feature_dim_)) {
            throw DataError("backbone produced unexpected output shape");
        }
        Eigen::VectorXd v(feature_dim_);
        for (int i = 0; i < feature_dim_; ++i) v[i] = out.data[i];
        return v;
    }

  private:
    onnx::Model model_;
};

}  // namespace

std::shared_ptr<FeatureExtractor> mock_extractor(int feature_dim, uint64_t seed) {
    if (feature_dim < 1) throw UsageError("mock extractor feature_dim must be >= 1");
    return std::make_shared<MockExtractor>(feature_dim, seed);
}

std::shared_ptr<FeatureExtractor> load_backbone(const std::string& model_file, BackboneKind kind) {
    if (kind == BackboneKind::mock) {
        throw UsageError("mock backbone takes no model file; use mock_extractor()");
    }
    onnx::Model model = onnx::parse_model_file(model_file);
    if (model.inputs.size() != 1) {
        throw DataError("backbone model must have exactly one input: " + model_file);
    }
    if (model.outputs.size() != 1) {
        throw DataError("backbone model must have exactly one output: " + model_file);
    }
    const auto& in_shape = model.inputs[0].shape;
    if (in_shape.size() != 4 || in_shape[1] != 3) {
        throw DataError("backbone input must be (batch, 3, S, S): " + model_file);
    }
    if (in_shape[2] < 1 || in_shape[2] != in_shape[3]) {
        throw DataError("backbone input side S must be static and square: " + model_file);
    }
    const auto& out_shape = model.outputs[0].shape;
    if (out_shape.size() != 2) {
        throw DataError("backbone output must be a flat (batch, n) vector, got rank " +
                        std::to_string(out_shape.size()) + ": " + model_file);
    }
    if (out_shape[1] < 1) {
        throw DataError("backbone output width n must be static: " + model_file);
    }
    int side = static_cast<int>(in_shape[2]);
    int dim = static_cast<int>(out_shape[1]);
    return std::make_shared<OnnxExtractor>(kind, std::move(model), dim, side);
}

FeatureSequence extract_features(const FeatureExtractor& extractor, const PatchSequence& patches) {
    if (patches.patches.empty()) throw DataError("extract_features: empty patch sequence");
    FeatureSequence seq;
    seq.source_id = patches.source_id;
    seq.features.resize(static_cast<int>(patches.patches.size()), extractor.feature_dim());
    for (size_t t = 0; t < patches.patches.size(); ++t) {
        Eigen::VectorXd row = extractor.extract(patches.patches[t]);
        if (!row.allFinite()) {
            throw NumericError("non-finite backbone output at patch " + std::to_string(t) +
                               " of '" + patches.source_id + "'");
        }
        seq.features.row(static_cast<int>(t)) = row.transpose();
    }
    return seq;
}

}  // namespace docfsl
