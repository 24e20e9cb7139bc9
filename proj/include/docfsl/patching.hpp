#pragma once

#include <string>
#include <vector>

#include "docfsl/image.hpp"

namespace docfsl {

// Overlapping square patch grid. Per axis the patch count is
// max(1, round(2*dim/W)) (nominal 50% overlap) and starts are spread evenly
// from 0 to padded_dim - W. Images smaller than W are reflect-padded.
struct GridPlan {
    int patch_size = 0;
    std::vector<int> row_starts;
    std::vector<int> col_starts;
    int image_height = 0;
    int image_width = 0;
    int pad_top = 0, pad_left = 0, pad_bottom = 0, pad_right = 0;

    int padded_height() const { return image_height + pad_top + pad_bottom; }
    int padded_width() const { return image_width + pad_left + pad_right; }
    size_t patch_count() const { return row_starts.size() * col_starts.size(); }
};

struct PatchSequence {
    std::vector<ImageBuffer> patches;            // W x W x 3 each
    std::vector<std::pair<int, int>> positions;  // (row_start, col_start), raster order
    std::string source_id;
};

GridPlan plan_grid(int height, int width, int patch_size);

// Patches are windows of the reflect-padded image, emitted in row-major
// raster order over (row_start, col_start).
PatchSequence extract_patches(const ImageBuffer& image, const GridPlan& plan,
                              const std::string& source_id = "");

// Symmetric-reflect index mapping into [0, dim); used for padding.
int reflect_index(int i, int dim);

std::string grid_plan_to_json(const GridPlan& plan);

}  // namespace docfsl
