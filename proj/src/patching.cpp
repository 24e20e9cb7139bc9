#include "docfsl/patching.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "docfsl/common.hpp"

namespace docfsl {

int reflect_index(int i, int dim) {
    if (dim == 1) return 0;
    // Symmetric reflection with period 2*dim: ...2 1 0 | 0 1 2 | 2 1 0...
    int period = 2 * dim;
    int m = ((i % period) + period) % period;
    return m < dim ? m : period - 1 - m;
}

static int round_half_away(double x) {
    return static_cast<int>(x >= 0 ? std::floor(x + 0.5) : std::ceil(x - 0.5));
}

static std::vector<int> axis_starts(int padded_dim, int orig_dim, int patch_size) {
    int count = std::max(1, round_half_away(2.0 * orig_dim / patch_size));
    count = std::min(count, padded_dim - patch_size + 1);
    count = std::max(count, 1);
    std::vector<int> starts(count);
    if (count == 1) {
        starts[0] = 0;
    } else {
        int span = padded_dim - patch_size;
        for (int i = 0; i < count; ++i) {
            starts[i] = round_half_away(static_cast<double>(i) * span / (count - 1));
        }
    }
    return starts;
}

GridPlan plan_grid(int height, int width, int patch_size) {
    if (patch_size < 1) throw DataError("patch_size must be >= 1");
    if (height < 1 || width < 1) throw DataError("plan_grid: image dims must be >= 1");

    GridPlan plan;
    plan.patch_size = patch_size;
    plan.image_height = height;
    plan.image_width = width;
    if (height < patch_size) {
        plan.pad_top = (patch_size - height) / 2;
        plan.pad_bottom = patch_size - height - plan.pad_top;
    }
    if (width < patch_size) {
        plan.pad_left = (patch_size - width) / 2;
        plan.pad_right = patch_size - width - plan.pad_left;
    }
    plan.row_starts = axis_starts(plan.padded_height(), height, patch_size);
    plan.col_starts = axis_starts(plan.padded_width(), width, patch_size);
    return plan;
}

PatchSequence extract_patches(const ImageBuffer& image, const GridPlan& plan,
                              const std::string& source_id) {
    if (image.height != plan.image_height || image.width != plan.image_width) {
        throw DataError("extract_patches: plan is for " + std::to_string(plan.image_height) + "x" +
                        std::to_string(plan.image_width) + " but image is " +
                        std::to_string(image.height) + "x" + std::to_string(image.width));
    }
    const int W = plan.patch_size;
    PatchSequence seq;
    seq.source_id = source_id;
    seq.patches.reserve(plan.patch_count());
    seq.positions.reserve(plan.patch_count());
    for (int rs : plan.row_starts) {
        for (int cs : plan.col_starts) {
            ImageBuffer patch(W, W);
            for (int r = 0; r < W; ++r) {
                int sr = reflect_index(rs + r - plan.pad_top, image.height);
                for (int c = 0; c < W; ++c) {
                    int sc = reflect_index(cs + c - plan.pad_left, image.width);
                    for (int ch = 0; ch < 3; ++ch) {
                        patch.at(r, c, ch) = image.at(sr, sc, ch);
                    }
                }
            }
            seq.patches.push_back(std::move(patch));
            seq.positions.emplace_back(rs, cs);
        }
    }
    return seq;
}

std::string grid_plan_to_json(const GridPlan& plan) {
    nlohmann::json j;
    j["patch_size"] = plan.patch_size;
    j["image_height"] = plan.image_height;
    j["image_width"] = plan.image_width;
    j["row_starts"] = plan.row_starts;
    j["col_starts"] = plan.col_starts;
    j["pad"] = {{"top", plan.pad_top},
                {"left", plan.pad_left},
                {"bottom", plan.pad_bottom},
                {"right", plan.pad_right}};
    return j.dump(2);
}

}  // namespace docfsl
