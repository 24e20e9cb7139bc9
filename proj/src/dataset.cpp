#include "docfsl/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "docfsl/common.hpp"
#include "docfsl/rng.hpp"

namespace fs = std::filesystem;

namespace docfsl {

std::string to_string(Label l) { return l == Label::genuine ? "genuine" : "fake"; }

Label label_from_string(const std::string& s) {
    if (s == "genuine") return Label::genuine;
    if (s == "fake" || s == "altered") return Label::fake;
    throw DataError("unknown label token '" + s + "'");
}

static std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

DatasetIndex load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("manifest not found: " + path);

    DatasetIndex index;
    index.base_dir = fs::path(path).parent_path().string();
    if (index.base_dir.empty()) index.base_dir = ".";

    std::string line;
    if (!std::getline(in, line)) throw DataError("manifest is empty (no header): " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "id,image_path,label,meta_class,dataset_id") {
        throw DataError("manifest header mismatch in " + path + ": got '" + line + "'");
    }

    std::set<std::string> seen_ids;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv_row(line);
        if (fields.size() != 5) {
            throw DataError("malformed manifest row " + std::to_string(row) + " in " + path +
                            ": expected 5 fields, got " + std::to_string(fields.size()));
        }
        DocumentSample s;
        s.id = fields[0];
        s.image_path = fields[1];
        try {
            s.label = label_from_string(fields[2]);
        } catch (const DataError& e) {
            throw DataError(std::string(e.what()) + " at manifest row " + std::to_string(row));
        }
        s.meta_class = fields[3];
        s.dataset_id = fields[4];
        if (s.id.empty()) throw DataError("empty id at manifest row " + std::to_string(row));
        if (s.meta_class.empty()) {
            throw DataError("empty meta_class at manifest row " + std::to_string(row));
        }
        if (!seen_ids.insert(s.id).second) {
            throw DataError("duplicate id '" + s.id + "' at manifest row " + std::to_string(row));
        }
        index.meta_classes.insert(s.meta_class);
        index.counts[{s.meta_class, s.label}]++;
        index.samples.push_back(std::move(s));
    }
    return index;
}

void write_manifest(const std::string& path, const DatasetIndex& index) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest: " + path);
    out << "id,image_path,label,meta_class,dataset_id\n";
    for (const auto& s : index.samples) {
        out << s.id << ',' << s.image_path << ',' << to_string(s.label) << ',' << s.meta_class
            << ',' << s.dataset_id << '\n';
    }
}

static MetaSplit split_with_attempt(const DatasetIndex& index, int n_train, uint64_t seed,
                                    int repetition_index, uint64_t attempt) {
    int total = static_cast<int>(index.meta_classes.size());
    if (n_train < 1 || n_train >= total) {
        throw DataError("n_train=" + std::to_string(n_train) + " out of range for " +
                        std::to_string(total) + " meta-classes");
    }
    std::vector<std::string> names(index.meta_classes.begin(), index.meta_classes.end());
    std::sort(names.begin(), names.end());
    Rng rng = Rng::keyed({seed, static_cast<uint64_t>(repetition_index), attempt});
    rng.shuffle(names);

    MetaSplit split;
    split.seed = seed;
    split.repetition_index = repetition_index;
    for (int i = 0; i < total; ++i) {
        if (i < n_train) split.train_meta_classes.insert(names[i]);
        else split.test_meta_classes.insert(names[i]);
    }
    return split;
}

MetaSplit split_meta_classes(const DatasetIndex& index, int n_train, uint64_t seed,
                             int repetition_index) {
    return split_with_attempt(index, n_train, seed, repetition_index, 0);
}

// Number of distinct train-set choices, capped to avoid overflow.
static uint64_t partition_count(int total, int n_train, uint64_t cap) {
    uint64_t c = 1;
    for (int i = 0; i < n_train; ++i) {
        c = c * static_cast<uint64_t>(total - i) / static_cast<uint64_t>(i + 1);
        if (c >= cap) return cap;
    }
    return c;
}

std::vector<MetaSplit> repetition_plan(const DatasetIndex& index, int repetitions, int n_train,
                                       uint64_t seed) {
    if (repetitions < 1) throw DataError("repetitions must be >= 1");
    int total = static_cast<int>(index.meta_classes.size());
    uint64_t distinct = partition_count(total, n_train, 1u << 20);

    std::vector<MetaSplit> plan;
    std::set<std::set<std::string>> seen;
    for (int rep = 0; rep < repetitions; ++rep) {
        MetaSplit split = split_with_attempt(index, n_train, seed, rep, 0);
        // Re-draw duplicates while unseen partitions remain.
        for (uint64_t attempt = 1; seen.count(split.train_meta_classes) && seen.size() < distinct;
             ++attempt) {
            split = split_with_attempt(index, n_train, seed, rep, attempt);
        }
        seen.insert(split.train_meta_classes);
        plan.push_back(std::move(split));
    }
    return plan;
}

std::string resolve_image_path(const DatasetIndex& index, const DocumentSample& sample) {
    fs::path p(sample.image_path);
    if (p.is_absolute() || index.base_dir.empty()) return p.string();
    return (fs::path(index.base_dir) / p).string();
}

ImageBuffer load_image(const DatasetIndex& index, const DocumentSample& sample) {
    return load_image_file(resolve_image_path(index, sample), sample.id);
}

std::string split_to_json(const MetaSplit& split) {
    nlohmann::json j;
    j["seed"] = split.seed;
    j["repetition_index"] = split.repetition_index;
    j["train"] = std::vector<std::string>(split.train_meta_classes.begin(),
                                          split.train_meta_classes.end());
    j["test"] = std::vector<std::string>(split.test_meta_classes.begin(),
                                         split.test_meta_classes.end());
    return j.dump(2);
}

}  // namespace docfsl
