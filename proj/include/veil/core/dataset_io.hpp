#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "veil/core/dataset_hash.hpp"
#include "veil/core/png_io.hpp"
#include "veil/core/types.hpp"

namespace veil {

inline constexpr int kDatasetSchemaVersion = 1;

// Directory layout: images/<frame_id>.png + annotations.json
// {"version":1, "n_identities":int|null, "frames":[{"id","file","boxes":[{"cls","xyxy"}],
//  "keypoints":[{"joints":[[x,y,v],...],"area"}], "identity":int|null}]}
// A "split" key is written as well; loaders treat it as optional.

inline void save_dataset(const Dataset& ds, const std::string& path) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(fs::path(path) / "images", ec);
    require(!ec, "save_dataset: cannot create '", path, "': ", ec.message());

    nlohmann::json root;
    root["version"] = kDatasetSchemaVersion;
    root["n_identities"] = ds.n_identities >= 0 ? nlohmann::json(ds.n_identities)
                                                : nlohmann::json(nullptr);
    root["split"] = ds.split;
    auto& frames = root["frames"] = nlohmann::json::array();
    for (const auto& f : ds.frames) {
        const Annotation& a = ds.ann(f.id);
        nlohmann::json jf;
        jf["id"] = f.id;
        jf["file"] = "images/" + f.id + ".png";
        auto& boxes = jf["boxes"] = nlohmann::json::array();
        for (const auto& b : a.boxes)
            boxes.push_back({{"cls", b.cls}, {"xyxy", {b.x0, b.y0, b.x1, b.y1}}});
        auto& kps = jf["keypoints"] = nlohmann::json::array();
        for (const auto& k : a.keypoints) {
            nlohmann::json jk;
            auto& joints = jk["joints"] = nlohmann::json::array();
            for (const auto& j : k.joints) joints.push_back({j.x, j.y, j.v});
            jk["area"] = k.area;
            kps.push_back(std::move(jk));
        }
        jf["identity"] = a.has_identity() ? nlohmann::json(a.identity) : nlohmann::json(nullptr);
        frames.push_back(std::move(jf));

        write_png_rgb8((fs::path(path) / "images" / (f.id + ".png")).string(),
                       f.width, f.height, frame_to_u8(f));
    }

    std::ofstream out(fs::path(path) / "annotations.json");
    require(out.good(), "save_dataset: cannot write annotations.json under '", path, "'");
    out << root.dump(2) << "\n";
    require(out.good(), "save_dataset: write failure under '", path, "'");
}

inline Dataset load_dataset(const std::string& path) {
    namespace fs = std::filesystem;
    const fs::path ann_path = fs::path(path) / "annotations.json";
    require(fs::exists(ann_path), "load_dataset: missing ", ann_path.string());
    std::ifstream in(ann_path);
    nlohmann::json root;
    try {
        in >> root;
    } catch (const std::exception& e) {
        fail("load_dataset: malformed JSON in ", ann_path.string(), ": ", e.what());
    }

    require(root.contains("version") && root["version"].is_number_integer(),
            "load_dataset: missing integer 'version' in ", ann_path.string());
    const int version = root["version"].get<int>();
    require(version == kDatasetSchemaVersion, "load_dataset: schema version ", version,
            " unsupported (expected ", kDatasetSchemaVersion, ")");

    Dataset ds;
    if (root.contains("split") && root["split"].is_string()) ds.split = root["split"].get<std::string>();
    if (root.contains("n_identities") && !root["n_identities"].is_null())
        ds.n_identities = root["n_identities"].get<int>();

    require(root.contains("frames") && root["frames"].is_array(),
            "load_dataset: missing 'frames' array in ", ann_path.string());
    std::set<std::string> seen;
    for (const auto& jf : root["frames"]) {
        require(jf.contains("id") && jf["id"].is_string(), "load_dataset: frame without id");
        const std::string id = jf["id"].get<std::string>();
        require(seen.insert(id).second, "load_dataset: duplicate frame id '", id, "'");

        const std::string file = jf.value("file", "images/" + id + ".png");
        RawImage img;
        try {
            img = read_png_rgb8((fs::path(path) / file).string());
        } catch (const Error& e) {
            fail("load_dataset: frame '", id, "': ", e.what());
        }
        Frame f = frame_from_u8(id, img.height, img.width, img.rgb);

        Annotation a;
        a.frame_id = id;
        if (jf.contains("boxes")) {
            for (const auto& jb : jf["boxes"]) {
                require(jb.contains("xyxy") && jb["xyxy"].is_array() && jb["xyxy"].size() == 4,
                        "load_dataset: frame '", id, "': box without xyxy[4]");
                BBox b;
                b.x0 = jb["xyxy"][0].get<double>();
                b.y0 = jb["xyxy"][1].get<double>();
                b.x1 = jb["xyxy"][2].get<double>();
                b.y1 = jb["xyxy"][3].get<double>();
                b.cls = jb.value("cls", 0);
                b.x0 = std::min(std::max(b.x0, 0.0), double(f.width));
                b.x1 = std::min(std::max(b.x1, 0.0), double(f.width));
                b.y0 = std::min(std::max(b.y0, 0.0), double(f.height));
                b.y1 = std::min(std::max(b.y1, 0.0), double(f.height));
                require(b.x0 < b.x1 && b.y0 < b.y1,
                        "load_dataset: frame '", id, "': degenerate box after clipping");
                a.boxes.push_back(b);
            }
        }
        if (jf.contains("keypoints")) {
            for (const auto& jk : jf["keypoints"]) {
                KeypointSet k;
                require(jk.contains("joints") && jk["joints"].is_array(),
                        "load_dataset: frame '", id, "': keypoints without joints");
                for (const auto& jj : jk["joints"]) {
                    require(jj.is_array() && jj.size() == 3,
                            "load_dataset: frame '", id, "': joint must be [x,y,v]");
                    k.joints.push_back({jj[0].get<double>(), jj[1].get<double>(), jj[2].get<int>()});
                }
                require(jk.contains("area"), "load_dataset: frame '", id, "': keypoints without area");
                k.area = jk["area"].get<double>();
                require(k.area > 0, "load_dataset: frame '", id, "': non-positive keypoint area");
                a.keypoints.push_back(std::move(k));
            }
        }
        if (jf.contains("identity") && !jf["identity"].is_null())
            a.identity = jf["identity"].get<int>();

        ds.frames.push_back(std::move(f));
        ds.annotations[id] = std::move(a);
    }
    validate_dataset(ds);
    return ds;
}

} // namespace veil
