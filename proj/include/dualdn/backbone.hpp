#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dualdn/autodiff.hpp"
#include "dualdn/rng.hpp"
#include "dualdn/tokenizer.hpp"

namespace dualdn {

struct ModelConfig {
    int dim = 384;
    int enc_blocks = 12;
    int dec_blocks = 4;
    int heads = 6;
    int mlp_ratio = 4;
    int k_types = 2;        // feature types: 0 = image, 1 = text
    int teacher_dim = 512;
    int groups = 64;        // G tokens per cloud
    int group_size = 32;    // K points per token
    int merged_steps = 5;   // conditioning positions = ceil(T / delta)

    void validate() const;  // throws ConfigError
};

namespace detail {

struct Linear {
    nn::Var w, b;
    nn::Var operator()(const nn::Var& x) const { return nn::add_rowvec(nn::matmul(x, w), b); }
};

struct Attention {
    Linear q, k, v, proj;
    int heads = 1;
    // queries: Nq x dim, context: Nk x dim (same tensor for self-attention)
    nn::Var operator()(const nn::Var& queries, const nn::Var& context) const;
};

struct Mlp {
    Linear fc1, fc2;
    nn::Var operator()(const nn::Var& x) const { return fc2(nn::gelu(fc1(x))); }
};

// Transformer block with AdaLN-Zero on both the attention and feedforward
// sub-blocks: (shift, scale, gate) x 2 regressed from the conditioning
// vector by a zero-initialized projection, so the block starts as identity.
struct DitBlock {
    Attention attn;
    Mlp mlp;
    Linear ada;  // dim -> 6*dim, zero-initialized
    nn::Var operator()(const nn::Var& x, const nn::Var& cond) const;
};

// Feature branch block: cross-attention (feature tokens are Q, point tokens
// are K/V), then a feedforward sub-block under AdaLN-Zero driven by the
// per-row category embedding.
struct FeatureBlock {
    Attention cross;
    Mlp mlp;
    Linear ada;  // dim -> 3*dim, zero-initialized
    nn::Var operator()(const nn::Var& f, const nn::Var& context, const nn::Var& cond_rows) const;
};

}  // namespace detail

// Dual-branch network: point denoising autoencoder (encoder + decoder,
// timestep-conditioned) and the feature denoising branch reading every
// encoder layer through cross-attention.
class DualModel {
public:
    DualModel(const ModelConfig& cfg, std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }

    // All intermediate encoder layer outputs, one per block (each G x dim).
    std::vector<nn::Var> encode_points(const TokenPairBatch& batch) const;
    std::vector<nn::Var> encode_tokens(const nn::Var& noisy_tokens, const nn::Var& noisy_centers,
                                       int t_merged) const;

    // Final encoder features -> predicted clean offsets, (G*K) x 3.
    nn::Var decode_points(const nn::Var& encoded_final, const nn::Var& noisy_centers, int t_merged) const;

    // One unit-norm teacher-space row per entry of type_ids. eps2 holds one
    // gaussian row (teacher_dim wide) per requested type. With stop_gradient
    // the point branch context is cut out of the backward graph.
    nn::Var denoise_features(const std::vector<nn::Var>& layer_context, const std::vector<int>& type_ids,
                             const nn::Mat& eps2, bool stop_gradient = true) const;

    std::vector<std::pair<std::string, nn::Var>>& params() { return params_; }
    const std::vector<std::pair<std::string, nn::Var>>& params() const { return params_; }
    nn::Var param_by_name(const std::string& name) const;

    void zero_grad();
    void set_frozen(bool frozen);  // drops param gradients from the tape while frozen
    std::uint64_t param_checksum() const;  // over exact value bytes

private:
    nn::Var make_param(const std::string& name, Eigen::Index rows, Eigen::Index cols, double stddev,
                       Rng& rng);
    detail::Linear make_linear(const std::string& name, Eigen::Index in, Eigen::Index out, Rng& rng,
                               bool zero_init = false);
    nn::Var time_conditioning(int t_merged) const;

    ModelConfig cfg_;
    std::vector<std::pair<std::string, nn::Var>> params_;

    detail::Linear patch_pp1_, patch_pp2_, patch_pp3_, patch_pp4_;
    detail::Linear pos_fc1_, pos_fc2_;
    detail::Linear dec_pos_fc1_, dec_pos_fc2_;
    detail::Linear time_fc1_, time_fc2_;
    std::vector<detail::DitBlock> enc_;
    std::vector<detail::DitBlock> dec_;
    detail::Linear recon_head_;
    nn::Var cat_emb_;  // k_types x dim
    detail::Linear feat_in_proj_;
    std::vector<detail::FeatureBlock> feat_;
    detail::Linear feat_head_;
};

// Computes only the feature loss on a tiny random batch and verifies every
// point-branch parameter receives exactly zero gradient. `disable_stop_gradient`
// is the negative-control fixture.
bool stop_gradient_check(DualModel& model, std::uint64_t seed = 7, bool disable_stop_gradient = false);

// Sinusoidal position embedding row (1 x dim), base period 10000.
nn::Mat sinusoidal_embedding(double position, int dim);

}  // namespace dualdn
