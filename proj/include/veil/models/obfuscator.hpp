#pragma once

#include <string>

#include <json.hpp>

#include "veil/core/image.hpp"
#include "veil/models/unet.hpp"
#include "veil/nn/checkpoint.hpp"

namespace veil {

inline constexpr size_t kObfuscatorParamBudget = 2'000'000;

// The learned full-frame transform O. Lightweight by contract: construction
// fails if the parameter budget is exceeded.
template <class T = float>
class ObfuscatorModel {
public:
    ObfuscatorModel() = default;

    ObfuscatorModel(const UNetConfig& cfg, uint64_t seed)
        : net_(cfg, seed), seed_(seed) {
        require(net_.param_count() < kObfuscatorParamBudget, "obfuscator: ",
                net_.param_count(), " parameters exceed budget ", kObfuscatorParamBudget);
    }

    const UNetConfig& config() const { return net_.config(); }
    uint64_t seed() const { return seed_; }
    size_t param_count() { return net_.param_count(); }
    nn::ParamRefs<T> params() { return net_.params(); }
    std::string hash() { return nn::param_hash(net_.params()); }

    // Batch path used in training; sizes must already be divisible.
    Tensor<T> forward(const Tensor<T>& x, bool train) { return net_.forward(x, train); }
    Tensor<T> backward(const Tensor<T>& dy) { return net_.backward(dy); }

    // Frame path: reflect-pad to the stride multiple, run, crop back.
    Frame obfuscate(const Frame& f) {
        Tensor<T> x(1, 3, f.height, f.width);
        frame_into_tensor(f, x, 0);
        Tensor<T> padded = pad_to_multiple(x, net_.stride_multiple());
        Tensor<T> y = net_.forward(padded, /*train=*/false);
        Tensor<T> out = crop_back(y, f.height, f.width);
        return tensor_to_frame(out, 0, f.id);
    }

    nlohmann::json& provenance() { return provenance_; }
    const nlohmann::json& provenance() const { return provenance_; }

private:
    UNet<T> net_;
    uint64_t seed_ = 0;
    nlohmann::json provenance_ = nlohmann::json::object();
};

inline ObfuscatorModel<float> init_obfuscator(const UNetConfig& cfg, uint64_t seed) {
    return ObfuscatorModel<float>(cfg, seed);
}

inline void export_model(ObfuscatorModel<float>& m, const std::string& path) {
    nlohmann::json arch = {{"c0", m.config().c0}, {"depth", m.config().depth}};
    nn::save_checkpoint(path, "obfuscator", arch, m.seed(), m.provenance(), m.params());
}

inline ObfuscatorModel<float> import_model(const std::string& path) {
    auto header = nn::peek_checkpoint(path);
    require(header.kind == "obfuscator", "import_model: '", path, "' holds kind '",
            header.kind, "', expected 'obfuscator'");
    UNetConfig cfg;
    cfg.c0 = header.arch.value("c0", 16);
    cfg.depth = header.arch.value("depth", 2);
    ObfuscatorModel<float> m(cfg, header.seed);
    auto h = nn::load_checkpoint(path, "obfuscator", m.params());
    m.provenance() = h.provenance;
    return m;
}

} // namespace veil
