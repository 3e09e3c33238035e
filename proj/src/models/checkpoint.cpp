#include "attnkd/models/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace attnkd::models {

namespace fs = std::filesystem;

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kBlob = "params.bin";
constexpr int kFormatVersion = 1;

uint32_t to_le(uint32_t v) {
    if constexpr (std::endian::native == std::endian::little) return v;
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed " + path.string() + ": " + e.what());
    }
}

}  // namespace

void save_parameters(const fs::path& dir, const CheckpointInfo& info, const ParameterList& params) {
    fs::create_directories(dir);
    nlohmann::json tensors = nlohmann::json::array();
    std::vector<uint32_t> blob;
    for (const auto& p : params.items()) {
        tensors.push_back({{"name", p.name}, {"offset", blob.size() * sizeof(float)}, {"shape", p.var.shape()}});
        for (float v : p.var.value().values()) blob.push_back(to_le(std::bit_cast<uint32_t>(v)));
    }
    const nlohmann::json manifest = {{"format", "attnkd-params"},
                                     {"version", kFormatVersion},
                                     {"kind", info.kind},
                                     {"spec", info.spec},
                                     {"seed", info.seed},
                                     {"step", info.step},
                                     {"dtype", "float32"},
                                     {"byte_order", "little"},
                                     {"blob", kBlob},
                                     {"blob_bytes", blob.size() * sizeof(float)},
                                     {"tensors", tensors}};
    {
        std::ofstream out(dir / kBlob, std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size() * 4));
        if (!out) throw std::runtime_error("failed writing " + (dir / kBlob).string());
    }
    std::ofstream out(dir / kManifest, std::ios::trunc);
    out << manifest.dump(2) << "\n";
    if (!out) throw std::runtime_error("failed writing " + (dir / kManifest).string());
}

CheckpointInfo read_checkpoint_info(const fs::path& dir) {
    const nlohmann::json m = read_json(dir / kManifest);
    try {
        if (m.at("format") != "attnkd-params" || m.at("version").get<int>() != kFormatVersion)
            throw std::runtime_error("unsupported checkpoint format in " + dir.string());
        CheckpointInfo info;
        info.kind = m.at("kind").get<std::string>();
        info.spec = m.at("spec");
        info.seed = m.at("seed").get<uint64_t>();
        info.step = m.at("step").get<int64_t>();
        return info;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed checkpoint manifest in " + dir.string() + ": " + e.what());
    }
}

CheckpointInfo load_parameters(const fs::path& dir, ParameterList& params) {
    const CheckpointInfo info = read_checkpoint_info(dir);
    const nlohmann::json m = read_json(dir / kManifest);
    const auto& tensors = m.at("tensors");
    if (tensors.size() != params.items().size())
        throw std::runtime_error("checkpoint has " + std::to_string(tensors.size()) + " tensors, model expects " +
                                 std::to_string(params.items().size()));

    std::ifstream in(dir / kBlob, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + (dir / kBlob).string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() != m.at("blob_bytes").get<size_t>())
        throw std::runtime_error("params.bin size " + std::to_string(bytes.size()) + " does not match manifest");

    std::vector<Tensor> staged;
    for (size_t i = 0; i < tensors.size(); ++i) {
        const auto& p = params.items()[i];
        const auto& t = tensors[i];
        const auto name = t.at("name").get<std::string>();
        const auto shape = t.at("shape").get<Shape>();
        const auto offset = t.at("offset").get<size_t>();
        if (name != p.name || shape != p.var.shape())
            throw std::runtime_error("checkpoint tensor " + name + " " + shape_str(shape) + " does not match " +
                                     p.name + " " + shape_str(p.var.shape()));
        const size_t n = static_cast<size_t>(shape_numel(shape));
        if (offset % 4 != 0 || offset + n * 4 > bytes.size())
            throw std::runtime_error("checkpoint tensor " + name + " lies outside params.bin");
        Tensor value(shape);
        for (size_t k = 0; k < n; ++k) {
            uint32_t raw;
            std::memcpy(&raw, bytes.data() + offset + k * 4, 4);
            value[static_cast<int64_t>(k)] = std::bit_cast<float>(to_le(raw));
        }
        staged.push_back(std::move(value));
    }
    for (size_t i = 0; i < staged.size(); ++i) {
        ad::Var v = params.items()[i].var;
        v.mutable_value() = std::move(staged[i]);
    }
    return info;
}

void save_generator(const fs::path& dir, const Generator& g, int64_t step) {
    save_parameters(dir, {"generator", g.spec(), g.seed().value, step}, g.parameters());
}

void save_discriminator(const fs::path& dir, const Discriminator& d, int64_t step) {
    save_parameters(dir, {"discriminator", d.spec(), d.seed().value, step}, d.parameters());
}

Generator load_generator(const fs::path& dir) {
    const CheckpointInfo info = read_checkpoint_info(dir);
    if (info.kind != "generator") throw std::runtime_error(dir.string() + " holds a " + info.kind + ", not a generator");
    Generator g(info.spec.get<GeneratorSpec>(), RandomSeed{info.seed});
    load_parameters(dir, g.parameters());
    return g;
}

Discriminator load_discriminator(const fs::path& dir) {
    const CheckpointInfo info = read_checkpoint_info(dir);
    if (info.kind != "discriminator")
        throw std::runtime_error(dir.string() + " holds a " + info.kind + ", not a discriminator");
    Discriminator d(info.spec.get<DiscriminatorSpec>(), RandomSeed{info.seed});
    load_parameters(dir, d.parameters());
    return d;
}

}  // namespace attnkd::models
