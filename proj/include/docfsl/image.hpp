#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace docfsl {

// 8-bit RGB image, row-major, always 3 channels.
struct ImageBuffer {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> pixels;  // height * width * 3

    ImageBuffer() = default;
    ImageBuffer(int h, int w) : height(h), width(w), pixels(static_cast<size_t>(h) * w * 3, 0) {}

    uint8_t& at(int r, int c, int ch) {
        return pixels[(static_cast<size_t>(r) * width + c) * 3 + ch];
    }
    uint8_t at(int r, int c, int ch) const {
        return pixels[(static_cast<size_t>(r) * width + c) * 3 + ch];
    }
    bool empty() const { return pixels.empty(); }
};

// Decodes any OpenCV-readable file; grayscale sources are replicated to 3
// channels, alpha is dropped. Throws DataError naming `id` on failure.
ImageBuffer load_image_file(const std::string& path, const std::string& id);

void save_png(const std::string& path, const ImageBuffer& img);

// Bilinear resize with half-pixel centers: src = (dst + 0.5) * scale - 0.5,
// clamped. Identical dimensions return a pixel-identical copy.
ImageBuffer resize_to_reference(const ImageBuffer& img, int ref_height, int ref_width);

}  // namespace docfsl
