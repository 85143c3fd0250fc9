#include "vqcpc/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "vqcpc/errors.hpp"

namespace vqcpc {

namespace {

constexpr char kMagic[8] = {'V', 'Q', 'C', 'P', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

std::string dtype_tag(torch::Dtype d) {
    if (d == torch::kFloat32) return "f32";
    if (d == torch::kFloat64) return "f64";
    if (d == torch::kInt64) return "i64";
    if (d == torch::kInt32) return "i32";
    throw Error("checkpoint: unsupported dtype");
}

torch::Dtype dtype_from_tag(const std::string& tag) {
    if (tag == "f32") return torch::kFloat32;
    if (tag == "f64") return torch::kFloat64;
    if (tag == "i64") return torch::kInt64;
    if (tag == "i32") return torch::kInt32;
    throw SchemaVersion("checkpoint: unknown dtype tag '" + tag + "'");
}

}  // namespace

const torch::Tensor& Checkpoint::at(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw MissingInput("checkpoint: missing tensor '" + name + "'");
    return it->second;
}

void save_checkpoint(const std::filesystem::path& file, const nlohmann::json& meta,
                     const std::vector<std::pair<std::string, torch::Tensor>>& tensors) {
    nlohmann::json header;
    header["meta"] = meta;
    header["tensors"] = nlohmann::json::array();

    std::vector<torch::Tensor> payloads;
    uint64_t offset = 0;
    for (const auto& [name, t] : tensors) {
        auto c = t.detach().to(torch::kCPU).contiguous();
        const auto nbytes = static_cast<uint64_t>(c.numel() * c.element_size());
        header["tensors"].push_back({{"name", name},
                                     {"dtype", dtype_tag(c.scalar_type())},
                                     {"shape", c.sizes().vec()},
                                     {"offset", offset},
                                     {"nbytes", nbytes}});
        payloads.push_back(c);
        offset += nbytes;
    }
    const std::string header_str = header.dump();

    std::ofstream out(file, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint " + file.string());
    out.write(kMagic, sizeof(kMagic));
    const uint32_t version = kVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const uint64_t hlen = header_str.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    for (const auto& p : payloads)
        out.write(static_cast<const char*>(p.const_data_ptr()),
                  static_cast<std::streamsize>(p.numel() * p.element_size()));
    if (!out) throw Error("short write on checkpoint " + file.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw MissingInput("cannot open checkpoint " + file.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw SchemaVersion("not a checkpoint container: " + file.string());
    uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (version != kVersion)
        throw SchemaVersion("checkpoint format version " + std::to_string(version) +
                            " unsupported (expected " + std::to_string(kVersion) + ")");
    uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    std::string header_str(hlen, '\0');
    in.read(header_str.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw SchemaVersion("truncated checkpoint header: " + file.string());
    const auto header = nlohmann::json::parse(header_str);

    Checkpoint ckpt;
    ckpt.meta = header.at("meta");
    const std::streampos payload_start = in.tellg();
    for (const auto& e : header.at("tensors")) {
        const auto shape = e.at("shape").get<std::vector<int64_t>>();
        const auto dtype = dtype_from_tag(e.at("dtype").get<std::string>());
        const auto nbytes = e.at("nbytes").get<uint64_t>();
        auto t = torch::empty(shape, torch::TensorOptions().dtype(dtype));
        in.seekg(payload_start + static_cast<std::streamoff>(e.at("offset").get<uint64_t>()));
        in.read(static_cast<char*>(t.data_ptr()), static_cast<std::streamsize>(nbytes));
        if (!in) throw SchemaVersion("truncated checkpoint payload: " + file.string());
        ckpt.tensors.emplace(e.at("name").get<std::string>(), std::move(t));
    }
    return ckpt;
}

}  // namespace vqcpc
