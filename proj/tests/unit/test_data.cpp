#include <filesystem>
#include <fstream>
#include <set>

#include "attnkd/data/batcher.hpp"
#include "attnkd/data/png_io.hpp"
#include "attnkd/data/synthetic.hpp"
#include "doctest.h"

using namespace attnkd;
using namespace attnkd::data;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("attnkd_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

SyntheticSpec small_spec(int n, uint64_t seed, std::vector<AttributeSpec> attrs = SyntheticSpec::teacher_set()) {
    SyntheticSpec s;
    s.n_images = n;
    s.image_size = 32;
    s.attributes = std::move(attrs);
    s.seed = seed;
    return s;
}

}  // namespace

TEST_CASE("synthetic generation is deterministic on disk") {
    const fs::path a = scratch("synth_a"), b = scratch("synth_b");
    generate_synthetic(small_spec(16, 0), a);
    generate_synthetic(small_spec(16, 0), b);
    int files = 0;
    for (const auto& e : fs::directory_iterator(a / "images")) {
        ++files;
        CHECK(slurp(e.path()) == slurp(b / "images" / e.path().filename()));
    }
    CHECK(files == 16);
    const std::string csv = slurp(a / "labels.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 17);
    CHECK(csv == slurp(b / "labels.csv"));
    CHECK(fs::exists(a / "masks" / "000003.eyeglasses.mask.png"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("eye band area fraction") {
    const Dataset d = make_synthetic(small_spec(64, 1));
    const int k = d.attribute_index("eyeglasses");
    int positives = 0;
    for (const auto& s : d.samples) {
        if (s.labels[k] == 0.0f) continue;
        ++positives;
        double area = 0.0;
        for (int64_t p = 0; p < 32 * 32; ++p) area += s.masks[k * 32 * 32 + p];
        area /= 32 * 32;
        CHECK(area >= 0.02);
        CHECK(area <= 0.20);
    }
    CHECK(positives > 10);
}

TEST_CASE("zero probability yields no positives") {
    auto attrs = SyntheticSpec::teacher_set();
    attrs[2].probability = 0.0;
    const Dataset d = make_synthetic(small_spec(50, 2, attrs));
    for (const auto& s : d.samples) CHECK(s.labels[2] == 0.0f);
}

TEST_CASE("labels agree with the rendered pixels") {
    for (const auto& set : {SyntheticSpec::teacher_set(), SyntheticSpec::pseudo_set()}) {
        const Dataset d = make_synthetic(small_spec(300, 3, set));
        for (const auto& s : d.samples)
            for (int k = 0; k < d.n_domains(); ++k) {
                INFO(d.attributes[static_cast<size_t>(k)], " ", s.filename);
                REQUIRE(detect_attribute(s, d.attributes, k) == (s.labels[k] == 1.0f));
            }
        for (const auto& s : d.samples)
            for (int k = 0; k < d.n_domains(); ++k) {
                double area = 0.0;
                for (int64_t p = 0; p < 32 * 32; ++p) area += s.masks[k * 32 * 32 + p];
                CHECK(area > 0.0);
            }
    }
}

TEST_CASE("synthetic spec validation") {
    CHECK_THROWS(make_synthetic(small_spec(2, 0, {{"pale_skin", 0.5}, {"tanned_skin", 0.5}})));
    CHECK_THROWS(make_synthetic(small_spec(2, 0, {{"unicorn", 0.5}, {"hat", 0.5}})));
    CHECK_THROWS(make_synthetic(small_spec(2, 0, {{"hat", 1.5}, {"freckles", 0.5}})));
    CHECK_NOTHROW(make_synthetic(small_spec(2, 0, {{"hat", 0.5}, {"black_hair", 0.5}})));
}

TEST_CASE("load_folder round trip matches in-memory data") {
    const fs::path dir = scratch("roundtrip");
    const Dataset d = make_synthetic(small_spec(6, 4));
    write_dataset(dir, d);
    const Dataset back = load_folder(dir, dir / "labels.csv", 32);
    REQUIRE(back.size() == 6);
    CHECK(back.attributes == d.attributes);
    for (size_t i = 0; i < 6; ++i) {
        CHECK(back.samples[i].labels == d.samples[i].labels);
        CHECK(back.samples[i].masks == d.samples[i].masks);
        for (int64_t p = 0; p < d.samples[i].image.numel(); ++p)
            REQUIRE(std::abs(back.samples[i].image[p] - d.samples[i].image[p]) <= 1.0f / 127.5f);
    }
    fs::remove_all(dir);
}

TEST_CASE("load_folder label mapping, resizing and errors") {
    const fs::path dir = scratch("loader");
    // 40x24 image: center crop to 24x24, then resize to 32
    Image8 img{40, 24, 3, std::vector<uint8_t>(40 * 24 * 3)};
    for (size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<uint8_t>(i % 251);
    for (const char* n : {"a.png", "b.png", "c.png"}) write_png(dir / n, img);
    {
        std::ofstream csv(dir / "labels.csv");
        csv << "filename,smiling,bald\na.png,1,-1\nb.png,-1,1\nc.png,0,0\n";
    }
    const Dataset d = load_folder(dir, dir / "labels.csv", 32);
    REQUIRE(d.size() == 3);
    CHECK(d.samples[0].labels == Tensor({2}, {1, 0}));
    CHECK(d.samples[1].labels == Tensor({2}, {0, 1}));
    CHECK(d.samples[2].labels == Tensor({2}, {0, 0}));
    CHECK(d.samples[0].image.shape() == Shape{3, 32, 32});
    CHECK(d.samples[0].image.min_value() >= -1.0f);
    CHECK(d.samples[0].image.max_value() <= 1.0f);
    CHECK_FALSE(d.has_masks());

    {
        std::ofstream csv(dir / "bad.csv");
        csv << "filename,smiling\na.png,1\nmissing.png,0\n";
    }
    CHECK_THROWS_WITH(load_folder(dir, dir / "bad.csv", 32), doctest::Contains("row 2"));
    {
        std::ofstream csv(dir / "bad2.csv");
        csv << "filename,smiling\na.png,2\n";
    }
    CHECK_THROWS_WITH(load_folder(dir, dir / "bad2.csv", 32), doctest::Contains("row 1"));
    fs::remove_all(dir);
}

TEST_CASE("image rescale formula") {
    std::vector<uint8_t> rgb(4 * 4 * 3);
    for (size_t i = 0; i < rgb.size(); ++i) rgb[i] = static_cast<uint8_t>(i * 5);
    const Tensor t = image_to_tensor(rgb, 4, 4, 4);
    for (int c = 0; c < 3; ++c)
        for (int p = 0; p < 16; ++p) CHECK(t[c * 16 + p] == doctest::Approx(rgb[p * 3 + c] / 127.5f - 1.0f));
    CHECK(tensor_to_rgb8(t) == rgb);
}

TEST_CASE("png helpers") {
    const fs::path dir = scratch("png");
    std::vector<uint16_t> v{0, 1, 65535, 300, 4000, 12};
    write_png_gray16(dir / "m.png", 3, 2, v);
    int w = 0, h = 0;
    CHECK(read_png_gray16(dir / "m.png", w, h) == v);
    CHECK(w == 3);
    write_png_mask(dir / "k.png", 3, 2, {1, 0, 0, 1, 1, 0});
    const Image8 m = read_png(dir / "k.png", 1);
    CHECK(m.pixels == std::vector<uint8_t>{255, 0, 0, 255, 255, 0});
    CHECK_THROWS(read_png(dir / "nope.png"));
    fs::remove_all(dir);
}

TEST_CASE("batcher ordering") {
    const Dataset d = make_synthetic(small_spec(10, 5));
    Batcher a(d, 4, 7), b(d, 4, 7), c(d, 4, 8);
    CHECK(a.batches_per_epoch() == 2);
    std::vector<size_t> seen;
    for (int i = 0; i < 2; ++i) {
        const Batch x = a.next();
        CHECK(x.images.shape() == Shape{4, 3, 32, 32});
        CHECK(x.labels.shape() == Shape{4, 4});
        CHECK(x.indices == b.next().indices);
        seen.insert(seen.end(), x.indices.begin(), x.indices.end());
    }
    CHECK(std::set<size_t>(seen.begin(), seen.end()).size() == 8);
    CHECK(a.epoch() == 0);
    a.next();
    CHECK(a.epoch() == 1);

    Batcher d1(d, 4, 7);
    bool differs = false;
    for (int i = 0; i < 2; ++i) differs = differs || d1.next().indices != c.next().indices;
    CHECK(differs);
    CHECK_THROWS(Batcher(d, 11, 0));
}

TEST_CASE("batcher state round trip") {
    const Dataset d = make_synthetic(small_spec(10, 5));
    Batcher a(d, 3, 9, true);
    a.next();
    a.next();
    Batcher b(d, 3, 0, true);
    b.restore(a.serialize());
    for (int i = 0; i < 5; ++i) {
        const Batch x = a.next(), y = b.next();
        CHECK(x.indices == y.indices);
        CHECK(x.images == y.images);
    }
}
