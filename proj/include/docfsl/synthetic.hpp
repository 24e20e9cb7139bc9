#pragma once

#include <cstdint>
#include <string>

namespace docfsl {

// Synthetic document images for smoke runs and end-to-end tests. Each
// meta-class gets its own 8x8 base pattern; fakes add a fixed tamper pattern
// whose magnitude is `separation` times the per-cell noise sigma, so genuine
// and fake feature means sit `separation` sigmas apart.
struct SyntheticSpec {
    int meta_classes = 6;
    int per_label_per_meta = 30;
    int image_height = 64;  // multiples of 8
    int image_width = 64;
    bool vary_size = true;  // draw per-sample sizes from a small set
    double noise_sigma = 0.02;
    double separation = 5.0;
    uint64_t seed = 0;
};

// Writes PNGs plus manifest.csv into `dir`; returns the manifest path.
std::string make_synthetic_dataset(const std::string& dir, const SyntheticSpec& spec);

}  // namespace docfsl
