#include <filesystem>
#include <fstream>
#include <sstream>

#include "attnkd/cli/commands.hpp"
#include "attnkd/cli/render.hpp"
#include "attnkd/cli/run_config.hpp"
#include "attnkd/data/png_io.hpp"
#include "attnkd/losses/report.hpp"
#include "attnkd/models/generator.hpp"
#include "doctest.h"

using namespace attnkd;
using namespace attnkd::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

const fs::path& root() {
    static const fs::path r = [] {
        const fs::path p = fs::temp_directory_path() / "attnkd_cli_tests";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return r;
}

json minimal_config(const std::string& out, int steps = 2) {
    return {{"data", {{"dir", (root() / "data").string()}, {"test_images", 4}}},
            {"model", {{"preset", "teacher"}, {"base_channels", 8}, {"n_resblocks", 2}, {"discriminator", {{"base_channels", 8}}}}},
            {"train", {{"batch_size", 2}, {"total_steps", steps}, {"n_critic", 1}, {"seed", 3}}},
            {"output", (root() / out).string()}};
}

fs::path write_config(const std::string& name, const json& j) {
    const fs::path p = root() / (name + ".json");
    std::ofstream(p) << j.dump(2);
    return p;
}

void ensure_data() {
    static const bool done = [] {
        REQUIRE(run({"generate-data", "--out", (root() / "data").string(), "--n", "16", "--seed", "4"}).code == 0);
        return true;
    }();
    (void)done;
}

// A two-step teacher run shared by the tests below.
const fs::path& teacher_run() {
    static const fs::path p = [] {
        ensure_data();
        const Result r = run({"train-teacher", write_config("teacher", minimal_config("teacher")).string()});
        REQUIRE_MESSAGE(r.code == 0, r.err);
        return root() / "teacher";
    }();
    return p;
}

std::vector<losses::LossReport> read_losses(const fs::path& run) {
    std::ifstream in(run / "losses.csv");
    return losses::read_csv(in);
}

}  // namespace

TEST_CASE("train-teacher smoke run writes checkpoints, losses and manifest") {
    const fs::path& run = teacher_run();
    CHECK(fs::exists(run / "generator" / "manifest.json"));
    CHECK(fs::exists(run / "discriminator" / "params.bin"));
    CHECK(fs::exists(run / "checkpoint" / "state.json"));
    CHECK(fs::exists(run / "run.json"));
    CHECK(read_losses(run).size() == 2);
    std::ifstream in(run / "attributes.json");
    CHECK(json::parse(in).size() == 4);
}

TEST_CASE("config errors exit with code 2 and name the key") {
    ensure_data();
    json bad = minimal_config("bad");
    bad["train"]["n_critc"] = 3;
    Result r = run({"train-teacher", write_config("bad", bad).string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("train.n_critc") != std::string::npos);

    bad = minimal_config("bad");
    bad["model"]["preset"] = "huge";
    CHECK(run({"train-teacher", write_config("bad2", bad).string()}).code == 2);
    CHECK(run({"train-teacher", (root() / "missing.json").string()}).code == 2);
    CHECK(run({"no-such-command"}).code == 2);
    CHECK(run({}).code == 2);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("unwritable output directory exits with code 3") {
    ensure_data();
    const fs::path blocker = root() / "blocker";
    std::ofstream(blocker) << "file";
    json j = minimal_config("x");
    j["output"] = (blocker / "run").string();
    CHECK(run({"train-teacher", write_config("unwritable", j).string()}).code == 3);
}

TEST_CASE("numerical blow-up exits with code 4") {
    ensure_data();
    json j = minimal_config("blowup", 4);
    j["train"]["d_optimizer"] = {{"lr", 1e38}};
    j["train"]["lr_decay"] = false;
    const Result r = run({"train-teacher", write_config("blowup", j).string()});
    CHECK(r.code == 4);
    CHECK(r.err.find("non-finite") != std::string::npos);
}

TEST_CASE("train-teacher resumes from its checkpoint") {
    ensure_data();
    json j = minimal_config("resumed", 2);
    REQUIRE(run({"train-teacher", write_config("resume_a", j).string()}).code == 0);
    j["train"]["total_steps"] = 4;
    const Result r = run({"train-teacher", write_config("resume_b", j).string(), "--resume"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("resuming at step 2") != std::string::npos);

    json full = minimal_config("uninterrupted", 4);
    REQUIRE(run({"train-teacher", write_config("resume_c", full).string()}).code == 0);
    const auto a = read_losses(root() / "resumed"), b = read_losses(root() / "uninterrupted");
    REQUIRE(a.size() == 4);
    REQUIRE(b.size() == 4);
    // the step count is part of the schedule, so only the first half can be compared
    std::ostringstream sa, sb;
    losses::write_csv(sa, {a[0], a[1]});
    losses::write_csv(sb, {b[0], b[1]});
    CHECK(sa.str() == sb.str());
}

TEST_CASE("train-student modes") {
    const fs::path& teacher = teacher_run();
    json j = minimal_config("student_pseudo");
    j["model"]["preset"] = "student";
    CHECK(run({"train-student", write_config("sp", j).string(), "--teacher", teacher.string(), "--mode", "pseudo"}).code == 2);

    j["output"] = (root() / "student_none").string();
    REQUIRE(run({"train-student", write_config("sn", j).string(), "--mode", "none"}).code == 0);
    for (const auto& r : read_losses(root() / "student_none")) CHECK(r.att == 0.0);

    j["output"] = (root() / "student_att").string();
    const Result ra = run({"train-student", write_config("sa", j).string(), "--teacher", teacher.string(), "--mode", "attention"});
    REQUIRE_MESSAGE(ra.code == 0, ra.err);
    bool nonzero = false;
    for (const auto& r : read_losses(root() / "student_att")) nonzero |= r.att != 0.0;
    CHECK(nonzero);

    j["output"] = (root() / "student_pseudo").string();
    const Result rp = run({"train-student", write_config("sp2", j).string(), "--teacher", teacher.string(), "--mode",
                           "pseudo", "--mapping", R"({"black_hair": "eyeglasses", "eyeglasses": "black_hair", "rosy_cheeks": 2, "pale_skin": "pale_skin"})"});
    REQUIRE_MESSAGE(rp.code == 0, rp.err);
    std::ifstream in(root() / "student_pseudo" / "run.json");
    CHECK(json::parse(in).at("config").at("domain_mapping") == json({1, 0, 2, 3}));

    const Result bad = run({"train-student", write_config("sp3", j).string(), "--teacher", teacher.string(), "--mode",
                            "pseudo", "--mapping", R"({"black_hair": "wings"})"});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("wings") != std::string::npos);
}

TEST_CASE("extract-attention writes one overlay per layer and image") {
    const fs::path& teacher = teacher_run();
    const fs::path out = root() / "attention";
    const Result r = run({"extract-attention", "--model", teacher.string(), "--discriminator", teacher.string(), "--images",
                          (root() / "data").string(), "--domain", "eyeglasses", "--layers", "all", "--out", out.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const models::Generator g(models::GeneratorSpec::teacher(4, 32, 8), RandomSeed{0});
    int overlays = 0, raws = 0;
    for (const auto& e : fs::directory_iterator(out)) {
        const std::string n = e.path().filename().string();
        if (n.ends_with(".overlay.png")) {
            ++overlays;
            const data::Image8 img = data::read_png(e.path());
            CHECK(img.width == 32);
            CHECK(img.height == 32);
        }
        if (n.ends_with(".raw.png")) {
            ++raws;
            int w = 0, h = 0;
            const auto v = data::read_png_gray16(e.path(), w, h);
            CHECK(*std::min_element(v.begin(), v.end()) == 0);
        }
    }
    const int layers = static_cast<int>(models::Generator(models::GeneratorSpec{8, 2, 4, 32}, RandomSeed{0}).layer_names().size());
    CHECK(overlays == 16 * layers);
    CHECK(raws == overlays);

    const Result bad = run({"extract-attention", "--model", teacher.string(), "--discriminator", teacher.string(),
                            "--images", (root() / "data").string(), "--domain", "wings", "--out", out.string()});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("black_hair") != std::string::npos);
    CHECK(run({"extract-attention", "--model", teacher.string(), "--discriminator", teacher.string(), "--images",
               (root() / "data").string(), "--domain", "1", "--layers", "res9", "--out", out.string()})
              .code == 2);
}

TEST_CASE("evaluate writes a deterministic report") {
    const fs::path& teacher = teacher_run();
    const fs::path clf = root() / "classifier";
    REQUIRE(run({"train-classifier", "--data", (root() / "data").string(), "--out", clf.string(), "--steps", "3",
                 "--batch-size", "4", "--holdout", "0.25"})
                .code == 0);
    const fs::path a = root() / "eval_a", b = root() / "eval_b";
    const std::vector<std::string> common{"evaluate", "--model", teacher.string(), "--classifier", clf.string(), "--data",
                                          (root() / "data").string(), "--discriminator", teacher.string()};
    auto with_out = [&](const fs::path& p) {
        auto v = common;
        v.insert(v.end(), {"--out", p.string()});
        return v;
    };
    const Result r = run(with_out(a));
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(run(with_out(b)).code == 0);
    std::ifstream ia(a / "report.json"), ib(b / "report.json");
    const json ja = json::parse(ia), jb = json::parse(ib);
    CHECK(ja == jb);
    CHECK(ja.at("accuracy").size() == 4);
    CHECK(ja.contains("frechet"));
    CHECK(r.out.find("Mean") != std::string::npos);
    CHECK(r.out.find("FID") != std::string::npos);

    CHECK(run({"evaluate", "--model", teacher.string(), "--classifier", (root() / "nope").string(), "--data",
               (root() / "data").string(), "--out", a.string()})
              .code == 2);
    fs::create_directories(root() / "empty");
    CHECK(run({"evaluate", "--model", teacher.string(), "--classifier", clf.string(), "--data",
               (root() / "empty").string(), "--out", a.string()})
              .code == 2);
}

TEST_CASE("render-grid layout") {
    const fs::path& teacher = teacher_run();
    const fs::path imgs = root() / "three";
    fs::create_directories(imgs);
    for (const char* n : {"000000.png", "000001.png", "000002.png"})
        fs::copy_file(root() / "data" / "images" / n, imgs / n, fs::copy_options::overwrite_existing);
    const fs::path grid = root() / "grid.png";
    const std::string models = teacher.string() + "," + (root() / "resumed").string();
    Result r = run({"render-grid", "--models", models, "--images", imgs.string(), "--domains", "black_hair,pale_skin",
                    "--out", grid.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    data::Image8 g = data::read_png(grid);
    CHECK(g.width == 5 * 32);
    CHECK(g.height == 3 * 32);

    fs::remove(imgs / "000001.png");
    fs::remove(imgs / "000002.png");
    r = run({"render-grid", "--models", teacher.string(), "--images", imgs.string(), "--domains", "0", "--out",
             grid.string()});
    REQUIRE(r.code == 0);
    g = data::read_png(grid);
    CHECK(g.width == 2 * 32);
    CHECK(g.height == 32);
    CHECK(run({"render-grid", "--models", teacher.string(), "--images", (root() / "none").string(), "--domains", "0",
               "--out", grid.string()})
              .code == 2);
}

TEST_CASE("reference config parses back to the defaults") {
    const fs::path p = root() / "reference.json";
    REQUIRE(run({"config-reference", "--out", p.string()}).code == 0);
    std::ifstream in(p);
    json j = json::parse(in);
    j.erase("_comment");
    const RunConfig c = parse_run_config(j);
    CHECK(run_config_json(c) == j);
}

TEST_CASE("mapping resolution") {
    const std::vector<std::string> s{"a", "b"}, t{"x", "y", "z"};
    CHECK(resolve_mapping({{"a", "z"}, {"b", "0"}}, s, t) == std::vector<int>{2, 0});
    CHECK_THROWS_AS(resolve_mapping({{"a", "z"}}, s, t), ConfigError);
    CHECK_THROWS_AS(resolve_mapping({{"a", "x"}, {"b", "x"}}, s, t), ConfigError);
    CHECK_THROWS_AS(resolve_mapping({{"a", "x"}, {"a", "y"}}, s, t), ConfigError);
}

TEST_CASE("colormap, overlay and grid rendering") {
    CHECK(colormap(0.0f).b == 255);
    CHECK(colormap(0.0f).r == 0);
    CHECK(colormap(1.0f).r == 255);
    CHECK(colormap(1.0f).b == 0);
    CHECK(colormap(0.5f).r == 128);

    data::Image8 img{4, 2, 3, std::vector<uint8_t>(24, 100)};
    const data::Image8 o = overlay(img, Tensor({2, 2}, 1.0f));
    CHECK(o.width == 4);
    CHECK(o.pixels[0] == 100);  // outside the centered crop
    CHECK(o.pixels[3] == 178);  // 0.5*100 + 0.5*255, rounded
    CHECK(o.pixels[5] == 50);

    Tensor m({2, 2});
    m[0] = 1.0f;
    m[1] = 3.0f;
    m[2] = 1.0f;
    m[3] = 2.0f;
    const Tensor u = unit_range(m);
    CHECK(u[0] == 0.0f);
    CHECK(u[1] == 1.0f);
    CHECK(u[3] == doctest::Approx(0.5));
    CHECK(to_gray16(u)[1] == 65535);
    const Tensor big = resize_bilinear(u, 4, 4);
    CHECK(big[0] == 0.0f);
    CHECK(big[3] == 1.0f);
    const data::Image8 grid = compose_grid({{Tensor({3, 8, 8}, -1.0f), Tensor({3, 8, 8}, 1.0f)}});
    CHECK(grid.width == 16);
    CHECK(grid.pixels[0] == 0);
    CHECK(grid.pixels[8 * 3] == 255);
}
