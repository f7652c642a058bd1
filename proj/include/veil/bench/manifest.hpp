#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "veil/core/common.hpp"
#include "veil/core/hash.hpp"

namespace veil {

inline constexpr int kManifestFormatVersion = 1;

// Everything needed to reproduce a run bit-for-bit with the same build:
// config snapshot, seeds, input hashes, model hashes, report paths.
struct RunManifest {
    std::string run_id;
    std::string command;
    nlohmann::json config = nlohmann::json::object();
    nlohmann::json dataset_hashes = nlohmann::json::object();
    nlohmann::json model_hashes = nlohmann::json::object();
    std::vector<std::string> report_paths;
    double wall_clock_sec = 0;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["format_version"] = kManifestFormatVersion;
        j["run_id"] = run_id;
        j["command"] = command;
        j["config"] = config;
        j["dataset_hashes"] = dataset_hashes;
        j["model_hashes"] = model_hashes;
        j["report_paths"] = report_paths;
        j["wall_clock_sec"] = wall_clock_sec;
        return j;
    }

    static RunManifest from_json(const nlohmann::json& j) {
        const int v = j.value("format_version", -1);
        require(v == kManifestFormatVersion, "manifest: format version ", v,
                " unsupported (expected ", kManifestFormatVersion, ")");
        RunManifest m;
        m.run_id = j.value("run_id", "");
        m.command = j.value("command", "");
        m.config = j.value("config", nlohmann::json::object());
        m.dataset_hashes = j.value("dataset_hashes", nlohmann::json::object());
        m.model_hashes = j.value("model_hashes", nlohmann::json::object());
        m.report_paths = j.value("report_paths", std::vector<std::string>{});
        m.wall_clock_sec = j.value("wall_clock_sec", 0.0);
        return m;
    }
};

inline void write_manifest(const RunManifest& m, const std::string& path) {
    std::filesystem::create_directories(std::filesystem::path(path).parent_path());
    std::ofstream out(path);
    require(out.good(), "manifest: cannot write '", path, "'");
    out << m.to_json().dump(2) << "\n";
    require(out.good(), "manifest: write failure for '", path, "'");
}

inline RunManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "manifest: cannot open '", path, "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        fail("manifest: malformed JSON in '", path, "': ", e.what());
    }
    return RunManifest::from_json(j);
}

inline std::string make_run_id(const std::string& command, const std::string& cfg_hash) {
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    const auto sec = std::chrono::duration_cast<std::chrono::seconds>(now).count();
    return cat(command, "-", cfg_hash.substr(0, 8), "-", sec);
}

} // namespace veil
