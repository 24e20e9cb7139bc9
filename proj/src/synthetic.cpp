#include "docfsl/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "docfsl/common.hpp"
#include "docfsl/image.hpp"
#include "docfsl/rng.hpp"

namespace fs = std::filesystem;

namespace docfsl {

std::string make_synthetic_dataset(const std::string& dir, const SyntheticSpec& spec) {
    if (spec.meta_classes < 1 || spec.per_label_per_meta < 1) {
        throw UsageError("synthetic spec: counts must be >= 1");
    }
    if (spec.image_height % 8 || spec.image_width % 8) {
        throw UsageError("synthetic spec: image dims must be multiples of 8");
    }
    fs::create_directories(dir);

    // Tamper pattern: a fixed half of the 8x8 cells shifted by sep * sigma.
    Rng pattern_rng = Rng::keyed({spec.seed, 0x74616d70ull});  // "tamp"
    bool tampered[64];
    for (int i = 0; i < 64; ++i) tampered[i] = pattern_rng.bounded(2) == 1;
    const double delta = spec.separation * spec.noise_sigma;

    std::string manifest_path = (fs::path(dir) / "manifest.csv").string();
    std::ofstream manifest(manifest_path);
    if (!manifest) throw DataError("cannot write " + manifest_path);
    manifest << "id,image_path,label,meta_class,dataset_id\n";

    const int size_choices[4] = {0, 8, 16, 24};  // added to the base dims
    for (int mc = 0; mc < spec.meta_classes; ++mc) {
        char mc_name[16];
        std::snprintf(mc_name, sizeof(mc_name), "m%02d", mc);
        Rng base_rng = Rng::keyed({spec.seed, 0x62617365ull, static_cast<uint64_t>(mc)});
        double base[64];
        for (int i = 0; i < 64; ++i) base[i] = base_rng.uniform(0.35, 0.65);

        for (int label = 0; label < 2; ++label) {
            bool fake = label == 1;
            for (int s = 0; s < spec.per_label_per_meta; ++s) {
                Rng rng = Rng::keyed({spec.seed, 0x73616d70ull, static_cast<uint64_t>(mc),
                                      static_cast<uint64_t>(label), static_cast<uint64_t>(s)});
                int h = spec.image_height, w = spec.image_width;
                if (spec.vary_size) {
                    h += size_choices[rng.bounded(4)];
                    w += size_choices[rng.bounded(4)];
                }
                ImageBuffer img(h, w);
                for (int ci = 0; ci < 8; ++ci) {
                    for (int cj = 0; cj < 8; ++cj) {
                        double v = base[ci * 8 + cj] + rng.normal() * spec.noise_sigma;
                        if (fake && tampered[ci * 8 + cj]) v += delta;
                        uint8_t pix = static_cast<uint8_t>(
                            std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
                        int r0 = ci * h / 8, r1 = (ci + 1) * h / 8;
                        int c0 = cj * w / 8, c1 = (cj + 1) * w / 8;
                        for (int r = r0; r < r1; ++r)
                            for (int c = c0; c < c1; ++c)
                                for (int ch = 0; ch < 3; ++ch) img.at(r, c, ch) = pix;
                    }
                }
                std::string id = std::string(mc_name) + "_" + (fake ? "f" : "g") +
                                 std::to_string(s);
                std::string file = id + ".png";
                save_png((fs::path(dir) / file).string(), img);
                manifest << id << ',' << file << ',' << (fake ? "fake" : "genuine") << ','
                         << mc_name << ",synthetic\n";
            }
        }
    }
    return manifest_path;
}

}  // namespace docfsl
