#include <doctest.h>

#include <set>

#include "docfsl/common.hpp"
#include "docfsl/dataset.hpp"
#include "docfsl/image.hpp"
#include "test_helpers.hpp"

using namespace docfsl;
using docfsl::test::TempDir;
using docfsl::test::write_file;

namespace {

const char* kSmallManifest =
    "id,image_path,label,meta_class,dataset_id\n"
    "esp_001,esp/001.png,genuine,esp,sidtd\n"
    "esp_002,esp/002.png,fake,esp,sidtd\n"
    "fra_001,fra/001.png,genuine,fra,sidtd\n"
    "fra_002,fra/002.png,fake,fra,sidtd\n";

}  // namespace

TEST_CASE("load_manifest counts samples and meta-classes") {
    TempDir dir("manifest");
    write_file(dir.file("m.csv"), kSmallManifest);
    DatasetIndex index = load_manifest(dir.file("m.csv"));
    CHECK(index.samples.size() == 4);
    CHECK(index.meta_classes.size() == 2);
    CHECK(index.counts.at({"esp", Label::genuine}) == 1);
    CHECK(index.counts.at({"fra", Label::fake}) == 1);
    // row order preserved
    CHECK(index.samples[0].id == "esp_001");
    CHECK(index.samples[3].id == "fra_002");
}

TEST_CASE("load_manifest rejects duplicate ids naming the offender") {
    TempDir dir("manifest_dup");
    write_file(dir.file("m.csv"),
               "id,image_path,label,meta_class,dataset_id\n"
               "esp_001,a.png,genuine,esp,sidtd\n"
               "esp_001,b.png,fake,esp,sidtd\n");
    CHECK_THROWS_WITH_AS(load_manifest(dir.file("m.csv")),
                         doctest::Contains("esp_001"), DataError);
}

TEST_CASE("load_manifest empty body gives empty index") {
    TempDir dir("manifest_empty");
    write_file(dir.file("m.csv"), "id,image_path,label,meta_class,dataset_id\n");
    DatasetIndex index = load_manifest(dir.file("m.csv"));
    CHECK(index.samples.empty());
    CHECK(index.meta_classes.empty());
}

TEST_CASE("load_manifest error paths") {
    TempDir dir("manifest_err");
    CHECK_THROWS_AS(load_manifest(dir.file("missing.csv")), DataError);

    write_file(dir.file("label.csv"),
               "id,image_path,label,meta_class,dataset_id\n"
               "a,a.png,legit,esp,sidtd\n");
    CHECK_THROWS_WITH_AS(load_manifest(dir.file("label.csv")), doctest::Contains("row 2"),
                         DataError);

    write_file(dir.file("short.csv"),
               "id,image_path,label,meta_class,dataset_id\n"
               "a,a.png,genuine,esp\n");
    CHECK_THROWS_WITH_AS(load_manifest(dir.file("short.csv")), doctest::Contains("row 2"),
                         DataError);
}

TEST_CASE("altered maps to fake for receipt-style manifests") {
    TempDir dir("manifest_alt");
    write_file(dir.file("m.csv"),
               "id,image_path,label,meta_class,dataset_id\n"
               "r1,r1.png,altered,receipt,findit\n");
    DatasetIndex index = load_manifest(dir.file("m.csv"));
    CHECK(index.samples[0].label == Label::fake);
}

TEST_CASE("manifest round-trips through write_manifest") {
    TempDir dir("manifest_rt");
    write_file(dir.file("m.csv"), kSmallManifest);
    DatasetIndex index = load_manifest(dir.file("m.csv"));
    write_manifest(dir.file("copy.csv"), index);
    DatasetIndex copy = load_manifest(dir.file("copy.csv"));
    CHECK(index == copy);
}

TEST_CASE("split_meta_classes sizes and determinism") {
    DatasetIndex index = docfsl::test::synthetic_index(10, 3);
    MetaSplit split = split_meta_classes(index, 6, 42, 0);
    CHECK(split.train_meta_classes.size() == 6);
    CHECK(split.test_meta_classes.size() == 4);

    MetaSplit again = split_meta_classes(index, 6, 42, 0);
    CHECK(split == again);

    DatasetIndex two = docfsl::test::synthetic_index(2, 3);
    MetaSplit half = split_meta_classes(two, 1, 7, 0);
    CHECK(half.train_meta_classes.size() == 1);
    CHECK(half.test_meta_classes.size() == 1);

    CHECK_THROWS_AS(split_meta_classes(index, 0, 1, 0), DataError);
    CHECK_THROWS_AS(split_meta_classes(index, 10, 1, 0), DataError);
}

TEST_CASE("split disjointness holds over many seeds") {
    DatasetIndex index = docfsl::test::synthetic_index(7, 2);
    for (uint64_t seed = 0; seed < 1000; ++seed) {
        MetaSplit split = split_meta_classes(index, 3, seed, static_cast<int>(seed % 5));
        CHECK(split.train_meta_classes.size() == 3);
        CHECK(split.test_meta_classes.size() == 4);
        for (const auto& mc : split.train_meta_classes) {
            CHECK(!split.test_meta_classes.count(mc));
        }
        std::set<std::string> all = split.train_meta_classes;
        all.insert(split.test_meta_classes.begin(), split.test_meta_classes.end());
        CHECK(all == index.meta_classes);
    }
}

TEST_CASE("repetition_plan emits one split per repetition") {
    DatasetIndex index = docfsl::test::synthetic_index(10, 3);
    auto plan = repetition_plan(index, 10, 6, 99);
    REQUIRE(plan.size() == 10);
    std::set<std::set<std::string>> distinct;
    for (int i = 0; i < 10; ++i) {
        CHECK(plan[i].repetition_index == i);
        CHECK(plan[i].train_meta_classes.size() == 6);
        distinct.insert(plan[i].train_meta_classes);
    }
    CHECK(distinct.size() == 10);  // enough partitions exist, so no repeats

    auto single = repetition_plan(index, 1, 6, 99);
    CHECK(single[0] == split_meta_classes(index, 6, 99, 0));
}

TEST_CASE("repetition_plan with only 3 possible partitions") {
    DatasetIndex index = docfsl::test::synthetic_index(3, 2);
    auto plan = repetition_plan(index, 5, 2, 5);
    REQUIRE(plan.size() == 5);
    // every emitted split is one of the C(3,2)=3 valid partitions
    for (const auto& s : plan) {
        CHECK(s.train_meta_classes.size() == 2);
        CHECK(s.test_meta_classes.size() == 1);
    }
}

TEST_CASE("load_image decodes, replicates grayscale, reports corrupt files") {
    TempDir dir("images");
    ImageBuffer img(20, 30);
    for (int r = 0; r < 20; ++r)
        for (int c = 0; c < 30; ++c) {
            img.at(r, c, 0) = static_cast<uint8_t>(r * 8);
            img.at(r, c, 1) = static_cast<uint8_t>(c * 8);
            img.at(r, c, 2) = 7;
        }
    save_png(dir.file("ok.png"), img);
    write_file(dir.file("m.csv"),
               "id,image_path,label,meta_class,dataset_id\n"
               "ok,ok.png,genuine,esp,t\n"
               "bad,bad.png,fake,esp,t\n");
    DatasetIndex index = load_manifest(dir.file("m.csv"));

    ImageBuffer loaded = load_image(index, index.samples[0]);
    CHECK(loaded.height == 20);
    CHECK(loaded.width == 30);
    CHECK(loaded.at(3, 5, 0) == 24);
    CHECK(loaded.at(3, 5, 1) == 40);
    CHECK(loaded.at(3, 5, 2) == 7);

    write_file(dir.file("bad.png"), "\x89PNG\r\n truncated nonsense");
    CHECK_THROWS_WITH_AS(load_image(index, index.samples[1]), doctest::Contains("bad"),
                         DataError);
}

TEST_CASE("split JSON carries seed, repetition and both sides") {
    DatasetIndex index = docfsl::test::synthetic_index(4, 1);
    MetaSplit split = split_meta_classes(index, 2, 11, 3);
    std::string j = split_to_json(split);
    CHECK(j.find("\"seed\": 11") != std::string::npos);
    CHECK(j.find("\"repetition_index\": 3") != std::string::npos);
    CHECK(j.find("train") != std::string::npos);
    CHECK(j.find("test") != std::string::npos);
}
