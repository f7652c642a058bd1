#pragma once

#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "veil/nn/layers.hpp"

namespace veil::nn {

inline constexpr int kCheckpointFormatVersion = 1;
inline constexpr char kCheckpointMagic[9] = "VEILCKP1";

// Versioned container of named float32 tensors plus a JSON manifest
// (kind, architecture, seed, provenance). Round trips are bitwise.
inline void save_checkpoint(const std::string& path, const std::string& kind,
                            const nlohmann::json& arch, uint64_t seed,
                            const nlohmann::json& provenance,
                            const ParamRefs<float>& params) {
    nlohmann::json header;
    header["format_version"] = kCheckpointFormatVersion;
    header["kind"] = kind;
    header["arch"] = arch;
    header["seed"] = seed;
    header["provenance"] = provenance;
    auto& tensors = header["tensors"] = nlohmann::json::array();
    uint64_t offset = 0;
    for (auto* p : params) {
        tensors.push_back({{"name", p->name},
                           {"shape", {p->w.n, p->w.c, p->w.h, p->w.w}},
                           {"dtype", "f32"},
                           {"offset", offset}});
        offset += p->w.size() * sizeof(float);
    }
    const std::string htext = header.dump();

    std::ofstream out(path, std::ios::binary);
    require(out.good(), "save_checkpoint: cannot open '", path, "'");
    out.write(kCheckpointMagic, 8);
    const uint64_t hlen = htext.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(htext.data(), long(htext.size()));
    for (auto* p : params)
        out.write(reinterpret_cast<const char*>(p->w.data()), long(p->w.size() * sizeof(float)));
    require(out.good(), "save_checkpoint: write failure for '", path, "'");
}

struct CheckpointHeader {
    std::string kind;
    nlohmann::json arch;
    uint64_t seed = 0;
    nlohmann::json provenance;
    nlohmann::json tensors;
};

inline CheckpointHeader read_checkpoint_header(std::ifstream& in, const std::string& path) {
    char magic[8];
    in.read(magic, 8);
    require(in.good() && std::memcmp(magic, kCheckpointMagic, 8) == 0,
            "load_checkpoint: '", path, "' is not a checkpoint container");
    uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    require(in.good() && hlen < (uint64_t(1) << 24), "load_checkpoint: bad header length");
    std::string htext(hlen, '\0');
    in.read(htext.data(), long(hlen));
    require(in.good(), "load_checkpoint: truncated header in '", path, "'");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(htext);
    } catch (const std::exception& e) {
        fail("load_checkpoint: malformed header JSON in '", path, "': ", e.what());
    }
    const int version = header.value("format_version", -1);
    require(version == kCheckpointFormatVersion, "load_checkpoint: format version ", version,
            " unsupported (expected ", kCheckpointFormatVersion, ")");
    CheckpointHeader h;
    h.kind = header.value("kind", "");
    h.arch = header.value("arch", nlohmann::json::object());
    h.seed = header.value("seed", uint64_t(0));
    h.provenance = header.value("provenance", nlohmann::json::object());
    h.tensors = header.value("tensors", nlohmann::json::array());
    return h;
}

inline CheckpointHeader peek_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "load_checkpoint: cannot open '", path, "'");
    return read_checkpoint_header(in, path);
}

// Loads tensor data into an existing parameter set. The tensor name sets must
// match exactly; shapes must agree.
inline CheckpointHeader load_checkpoint(const std::string& path, const std::string& expect_kind,
                                        const ParamRefs<float>& params) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "load_checkpoint: cannot open '", path, "'");
    CheckpointHeader h = read_checkpoint_header(in, path);
    require(expect_kind.empty() || h.kind == expect_kind, "load_checkpoint: '", path,
            "' holds kind '", h.kind, "', expected '", expect_kind, "'");

    std::map<std::string, Param<float>*> by_name;
    for (auto* p : params) by_name[p->name] = p;
    require(by_name.size() == params.size(), "load_checkpoint: duplicate parameter names");
    require(h.tensors.size() == params.size(), "load_checkpoint: '", path, "' holds ",
            h.tensors.size(), " tensors, model has ", params.size());

    const std::streampos data_start = in.tellg();
    for (const auto& jt : h.tensors) {
        const std::string name = jt.value("name", "");
        auto it = by_name.find(name);
        require(it != by_name.end(), "load_checkpoint: tensor '", name,
                "' not present in model");
        Param<float>* p = it->second;
        const auto& shape = jt["shape"];
        require(shape.size() == 4 && shape[0].get<int>() == p->w.n &&
                    shape[1].get<int>() == p->w.c && shape[2].get<int>() == p->w.h &&
                    shape[3].get<int>() == p->w.w,
                "load_checkpoint: tensor '", name, "' shape mismatch");
        require(jt.value("dtype", "") == "f32", "load_checkpoint: tensor '", name,
                "' has unsupported dtype");
        in.seekg(data_start + std::streamoff(jt.value("offset", uint64_t(0))));
        in.read(reinterpret_cast<char*>(p->w.data()), long(p->w.size() * sizeof(float)));
        require(in.good(), "load_checkpoint: truncated tensor '", name, "' in '", path, "'");
        by_name.erase(it);
    }
    require(by_name.empty(), "load_checkpoint: missing tensor '",
            by_name.empty() ? "" : by_name.begin()->first, "' in '", path, "'");
    return h;
}

} // namespace veil::nn
