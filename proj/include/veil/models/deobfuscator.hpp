#pragma once

#include <string>

#include <json.hpp>

#include "veil/core/image.hpp"
#include "veil/models/unet.hpp"
#include "veil/nn/checkpoint.hpp"

namespace veil {

// The reconstruction adversary D. Same topology family as the obfuscator
// with independent (by default wider) channels.
template <class T = float>
class DeobfuscatorModel {
public:
    DeobfuscatorModel() = default;

    DeobfuscatorModel(const UNetConfig& cfg, uint64_t seed) : net_(cfg, seed), seed_(seed) {}

    const UNetConfig& config() const { return net_.config(); }
    uint64_t seed() const { return seed_; }
    nn::ParamRefs<T> params() { return net_.params(); }
    std::string hash() { return nn::param_hash(net_.params()); }

    Tensor<T> forward(const Tensor<T>& xprime, bool train) { return net_.forward(xprime, train); }
    Tensor<T> backward(const Tensor<T>& dy) { return net_.backward(dy); }

    Frame reconstruct(const Frame& xprime) {
        Tensor<T> x(1, 3, xprime.height, xprime.width);
        frame_into_tensor(xprime, x, 0);
        Tensor<T> padded = pad_to_multiple(x, net_.stride_multiple());
        Tensor<T> y = net_.forward(padded, /*train=*/false);
        return tensor_to_frame(crop_back(y, xprime.height, xprime.width), 0, xprime.id);
    }

private:
    UNet<T> net_;
    uint64_t seed_ = 0;
};

// Mean squared error over all pixels and channels.
template <class T>
double recon_loss(const Tensor<T>& xhat, const Tensor<T>& x) {
    require(xhat.same_shape(x), "recon_loss: shape mismatch");
    require(!x.empty(), "recon_loss: empty tensors");
    double acc = 0;
    for (size_t i = 0; i < x.size(); ++i) acc += sqr(double(xhat.v[i]) - double(x.v[i]));
    return acc / double(x.size());
}

inline double recon_loss(const Frame& xhat, const Frame& x) {
    require(xhat.height == x.height && xhat.width == x.width, "recon_loss: shape mismatch");
    double acc = 0;
    for (size_t i = 0; i < x.px.size(); ++i) acc += sqr(double(xhat.px[i]) - double(x.px[i]));
    return acc / double(x.px.size());
}

// d recon_loss / d xhat
template <class T>
Tensor<T> recon_loss_grad(const Tensor<T>& xhat, const Tensor<T>& x) {
    require(xhat.same_shape(x), "recon_loss_grad: shape mismatch");
    Tensor<T> g = zeros_like(xhat);
    const T scale = T(2.0 / double(x.size()));
    for (size_t i = 0; i < x.size(); ++i) g.v[i] = scale * (xhat.v[i] - x.v[i]);
    return g;
}

inline void export_deobfuscator(DeobfuscatorModel<float>& m, const std::string& path,
                                const nlohmann::json& provenance = nlohmann::json::object()) {
    nlohmann::json arch = {{"c0", m.config().c0}, {"depth", m.config().depth}};
    nn::save_checkpoint(path, "deobfuscator", arch, m.seed(), provenance, m.params());
}

inline DeobfuscatorModel<float> import_deobfuscator(const std::string& path) {
    auto header = nn::peek_checkpoint(path);
    require(header.kind == "deobfuscator", "import_deobfuscator: '", path, "' holds kind '",
            header.kind, "'");
    UNetConfig cfg;
    cfg.c0 = header.arch.value("c0", 32);
    cfg.depth = header.arch.value("depth", 2);
    DeobfuscatorModel<float> m(cfg, header.seed);
    nn::load_checkpoint(path, "deobfuscator", m.params());
    return m;
}

} // namespace veil
