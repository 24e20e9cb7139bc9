#include "docfsl/image.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "docfsl/common.hpp"

namespace docfsl {

ImageBuffer load_image_file(const std::string& path, const std::string& id) {
    cv::Mat mat = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (mat.empty()) {
        throw DataError("cannot decode image for sample '" + id + "': " + path);
    }
    cv::Mat bgr;
    switch (mat.channels()) {
        case 1: cv::cvtColor(mat, bgr, cv::COLOR_GRAY2BGR); break;
        case 3: bgr = mat; break;
        case 4: cv::cvtColor(mat, bgr, cv::COLOR_BGRA2BGR); break;
        default:
            throw DataError("unsupported channel count " + std::to_string(mat.channels()) +
                            " for sample '" + id + "'");
    }
    if (bgr.depth() != CV_8U) bgr.convertTo(bgr, CV_8U);

    ImageBuffer img(bgr.rows, bgr.cols);
    for (int r = 0; r < bgr.rows; ++r) {
        const cv::Vec3b* row = bgr.ptr<cv::Vec3b>(r);
        for (int c = 0; c < bgr.cols; ++c) {
            img.at(r, c, 0) = row[c][2];  // BGR -> RGB
            img.at(r, c, 1) = row[c][1];
            img.at(r, c, 2) = row[c][0];
        }
    }
    return img;
}

void save_png(const std::string& path, const ImageBuffer& img) {
    cv::Mat bgr(img.height, img.width, CV_8UC3);
    for (int r = 0; r < img.height; ++r) {
        cv::Vec3b* row = bgr.ptr<cv::Vec3b>(r);
        for (int c = 0; c < img.width; ++c) {
            row[c][0] = img.at(r, c, 2);
            row[c][1] = img.at(r, c, 1);
            row[c][2] = img.at(r, c, 0);
        }
    }
    if (!cv::imwrite(path, bgr)) {
        throw DataError("cannot write image: " + path);
    }
}

ImageBuffer resize_to_reference(const ImageBuffer& img, int ref_height, int ref_width) {
    if (img.empty()) throw DataError("resize_to_reference: empty image");
    if (ref_height < 1 || ref_width < 1) {
        throw DataError("resize_to_reference: reference dims must be >= 1");
    }
    if (img.height == ref_height && img.width == ref_width) return img;

    ImageBuffer out(ref_height, ref_width);
    const double sy = static_cast<double>(img.height) / ref_height;
    const double sx = static_cast<double>(img.width) / ref_width;
    for (int r = 0; r < ref_height; ++r) {
        double fy = (r + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
        int y0 = static_cast<int>(std::floor(fy));
        int y1 = std::min(y0 + 1, img.height - 1);
        double wy = fy - y0;
        for (int c = 0; c < ref_width; ++c) {
            double fx = (c + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
            int x0 = static_cast<int>(std::floor(fx));
            int x1 = std::min(x0 + 1, img.width - 1);
            double wx = fx - x0;
            for (int ch = 0; ch < 3; ++ch) {
                double top = (1 - wx) * img.at(y0, x0, ch) + wx * img.at(y0, x1, ch);
                double bot = (1 - wx) * img.at(y1, x0, ch) + wx * img.at(y1, x1, ch);
                double v = (1 - wy) * top + wy * bot;
                out.at(r, c, ch) = static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
            }
        }
    }
    return out;
}

}  // namespace docfsl
