#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "docfsl/image.hpp"

namespace docfsl {

enum class Label { genuine, fake };

std::string to_string(Label l);
Label label_from_string(const std::string& s);

struct DocumentSample {
    std::string id;
    std::string image_path;  // relative to the manifest directory
    Label label = Label::genuine;
    std::string meta_class;  // country / issuer code
    std::string dataset_id;

    bool operator==(const DocumentSample&) const = default;
};

struct DatasetIndex {
    std::vector<DocumentSample> samples;
    std::set<std::string> meta_classes;
    std::map<std::pair<std::string, Label>, int> counts;
    std::string base_dir;  // directory the manifest was loaded from

    bool operator==(const DatasetIndex& o) const {
        return samples == o.samples && meta_classes == o.meta_classes && counts == o.counts;
    }
};

struct MetaSplit {
    std::set<std::string> train_meta_classes;
    std::set<std::string> test_meta_classes;
    int repetition_index = 0;
    uint64_t seed = 0;

    bool operator==(const MetaSplit&) const = default;
};

// Manifest CSV: header `id,image_path,label,meta_class,dataset_id`, UTF-8,
// label in {genuine,fake}. "altered" is accepted as an alias of "fake" for
// receipt-style manifests.
DatasetIndex load_manifest(const std::string& path);
void write_manifest(const std::string& path, const DatasetIndex& index);

// Shuffles the sorted meta-class list with a stream keyed by
// (seed, repetition_index) and takes the first n_train as meta-train.
MetaSplit split_meta_classes(const DatasetIndex& index, int n_train, uint64_t seed,
                             int repetition_index);

// One split per repetition; re-draws to avoid duplicate partitions when the
// meta-class combinatorics allow it.
std::vector<MetaSplit> repetition_plan(const DatasetIndex& index, int repetitions, int n_train,
                                       uint64_t seed);

// Resolves the sample path against the index's base directory and decodes.
ImageBuffer load_image(const DatasetIndex& index, const DocumentSample& sample);

std::string resolve_image_path(const DatasetIndex& index, const DocumentSample& sample);

std::string split_to_json(const MetaSplit& split);

}  // namespace docfsl
