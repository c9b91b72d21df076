#include "dualdn/backbone.hpp"

#include <cmath>
#include <cstring>

#include "dualdn/error.hpp"

namespace dualdn {

using nn::Var;

void ModelConfig::validate() const {
    if (dim < 2 || dim % 2 != 0) throw ConfigError("ModelConfig: dim must be a positive even number");
    if (heads < 1 || dim % heads != 0) throw ConfigError("ModelConfig: dim must be divisible by heads");
    if (enc_blocks < 1 || dec_blocks < 1) throw ConfigError("ModelConfig: block counts must be >= 1");
    if (k_types < 1) throw ConfigError("ModelConfig: k_types must be >= 1");
    if (teacher_dim < 1) throw ConfigError("ModelConfig: teacher_dim must be >= 1");
    if (groups < 1 || group_size < 1) throw ConfigError("ModelConfig: groups/group_size must be >= 1");
    if (merged_steps < 1) throw ConfigError("ModelConfig: merged_steps must be >= 1");
    if (mlp_ratio < 1) throw ConfigError("ModelConfig: mlp_ratio must be >= 1");
}

nn::Mat sinusoidal_embedding(double position, int dim) {
    nn::Mat emb(1, dim);
    const int half = dim / 2;
    for (int i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
        emb(0, i) = std::cos(position * freq);
        emb(0, half + i) = std::sin(position * freq);
    }
    return emb;
}

namespace detail {

Var Attention::operator()(const Var& queries, const Var& context) const {
    const Eigen::Index dim = q.w.cols();
    const Eigen::Index head_dim = dim / heads;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(head_dim));

    Var Q = q(queries);
    Var K = k(context);
    Var V = v(context);

    std::vector<Var> head_out;
    head_out.reserve(heads);
    for (int h = 0; h < heads; ++h) {
        Var qh = nn::slice_cols(Q, h * head_dim, head_dim);
        Var kh = nn::slice_cols(K, h * head_dim, head_dim);
        Var vh = nn::slice_cols(V, h * head_dim, head_dim);
        Var scores = nn::scale(nn::matmul(qh, nn::transpose(kh)), inv_sqrt_d);
        head_out.push_back(nn::matmul(nn::softmax_rows(scores), vh));
    }
    return proj(nn::concat_cols(head_out));
}

Var DitBlock::operator()(const Var& x, const Var& cond) const {
    const Eigen::Index d = x.cols();
    Var m = ada(nn::silu(cond));  // 1 x 6d
    Var shift_a = nn::slice_cols(m, 0, d);
    Var scale_a = nn::slice_cols(m, d, d);
    Var gate_a = nn::slice_cols(m, 2 * d, d);
    Var shift_f = nn::slice_cols(m, 3 * d, d);
    Var scale_f = nn::slice_cols(m, 4 * d, d);
    Var gate_f = nn::slice_cols(m, 5 * d, d);

    Var modded = nn::modulate(nn::layernorm(x), shift_a, scale_a);
    Var h = nn::add(x, nn::rowwise_mul(attn(modded, modded), gate_a));
    Var h2 = nn::modulate(nn::layernorm(h), shift_f, scale_f);
    return nn::add(h, nn::rowwise_mul(mlp(h2), gate_f));
}

Var FeatureBlock::operator()(const Var& f, const Var& context, const Var& cond_rows) const {
    const Eigen::Index d = f.cols();
    Var m = ada(nn::silu(cond_rows));  // k x 3d, one modulation row per feature token
    Var shift = nn::slice_cols(m, 0, d);
    Var scale_v = nn::slice_cols(m, d, d);
    Var gate = nn::slice_cols(m, 2 * d, d);

    Var h = nn::add(f, cross(nn::layernorm(f), context));
    Var h2 = nn::modulate(nn::layernorm(h), shift, scale_v);
    return nn::add(h, nn::rowwise_mul(mlp(h2), gate));
}

}  // namespace detail

Var DualModel::make_param(const std::string& name, Eigen::Index rows, Eigen::Index cols, double stddev,
                          Rng& rng) {
    nn::Mat m(rows, cols);
    if (stddev == 0.0) {
        m.setZero();
    } else {
        rng.fill_normal(m);
        m *= stddev;
    }
    Var v = Var::leaf(std::move(m), true);
    params_.emplace_back(name, v);
    return v;
}

detail::Linear DualModel::make_linear(const std::string& name, Eigen::Index in, Eigen::Index out,
                                      Rng& rng, bool zero_init) {
    detail::Linear l;
    const double stddev = zero_init ? 0.0 : std::sqrt(2.0 / static_cast<double>(in + out));
    l.w = make_param(name + ".w", in, out, stddev, rng);
    l.b = make_param(name + ".b", 1, out, 0.0, rng);
    return l;
}

DualModel::DualModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(hash_combine(seed, 0x6d6f64656cULL));
    const int d = cfg_.dim;

    patch_pp1_ = make_linear("patch.pp1", 3, d, rng);
    patch_pp2_ = make_linear("patch.pp2", d, d, rng);
    patch_pp3_ = make_linear("patch.pp3", 2 * d, d, rng);
    patch_pp4_ = make_linear("patch.pp4", d, d, rng);
    pos_fc1_ = make_linear("pos.fc1", 3, d, rng);
    pos_fc2_ = make_linear("pos.fc2", d, d, rng);
    dec_pos_fc1_ = make_linear("dec_pos.fc1", 3, d, rng);
    dec_pos_fc2_ = make_linear("dec_pos.fc2", d, d, rng);
    time_fc1_ = make_linear("time.fc1", d, d, rng);
    time_fc2_ = make_linear("time.fc2", d, d, rng);

    auto make_dit = [&](const std::string& prefix) {
        detail::DitBlock blk;
        blk.attn.heads = cfg_.heads;
        blk.attn.q = make_linear(prefix + ".attn.q", d, d, rng);
        blk.attn.k = make_linear(prefix + ".attn.k", d, d, rng);
        blk.attn.v = make_linear(prefix + ".attn.v", d, d, rng);
        blk.attn.proj = make_linear(prefix + ".attn.proj", d, d, rng);
        blk.mlp.fc1 = make_linear(prefix + ".mlp.fc1", d, cfg_.mlp_ratio * d, rng);
        blk.mlp.fc2 = make_linear(prefix + ".mlp.fc2", cfg_.mlp_ratio * d, d, rng);
        blk.ada = make_linear(prefix + ".ada", d, 6 * d, rng, /*zero_init=*/true);
        return blk;
    };

    enc_.reserve(cfg_.enc_blocks);
    for (int i = 0; i < cfg_.enc_blocks; ++i) enc_.push_back(make_dit("enc." + std::to_string(i)));
    dec_.reserve(cfg_.dec_blocks);
    for (int i = 0; i < cfg_.dec_blocks; ++i) dec_.push_back(make_dit("dec." + std::to_string(i)));

    recon_head_ = make_linear("head.recon", d, cfg_.group_size * 3, rng);

    cat_emb_ = make_param("feat.cat_emb", cfg_.k_types, d, 0.02, rng);
    feat_in_proj_ = make_linear("feat.in_proj", cfg_.teacher_dim, d, rng);
    feat_.reserve(cfg_.enc_blocks);  // one cross-attention hookup per encoder layer
    for (int i = 0; i < cfg_.enc_blocks; ++i) {
        const std::string prefix = "feat." + std::to_string(i);
        detail::FeatureBlock blk;
        blk.cross.heads = cfg_.heads;
        blk.cross.q = make_linear(prefix + ".cross.q", d, d, rng);
        blk.cross.k = make_linear(prefix + ".cross.k", d, d, rng);
        blk.cross.v = make_linear(prefix + ".cross.v", d, d, rng);
        blk.cross.proj = make_linear(prefix + ".cross.proj", d, d, rng);
        blk.mlp.fc1 = make_linear(prefix + ".mlp.fc1", d, cfg_.mlp_ratio * d, rng);
        blk.mlp.fc2 = make_linear(prefix + ".mlp.fc2", cfg_.mlp_ratio * d, d, rng);
        blk.ada = make_linear(prefix + ".ada", d, 3 * d, rng, /*zero_init=*/true);
        feat_.push_back(std::move(blk));
    }
    feat_head_ = make_linear("feat.head", d, cfg_.teacher_dim, rng);
}

Var DualModel::param_by_name(const std::string& name) const {
    for (const auto& [n, v] : params_)
        if (n == name) return v;
    throw InvalidInput("param_by_name: unknown parameter " + name);
}

void DualModel::zero_grad() {
    for (auto& [n, v] : params_) v.zero_grad();
}

void DualModel::set_frozen(bool frozen) {
    for (auto& [n, v] : params_) v.set_requires_grad(!frozen);
}

std::uint64_t DualModel::param_checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [n, v] : params_) {
        h = fnv1a(n, h);
        const nn::Mat& m = v.val();
        h = fnv1a(std::string_view(reinterpret_cast<const char*>(m.data()),
                                   static_cast<std::size_t>(m.size()) * sizeof(double)),
                  h);
    }
    return h;
}

Var DualModel::time_conditioning(int t_merged) const {
    if (t_merged < 0 || t_merged >= cfg_.merged_steps)
        throw InvalidInput("time_conditioning: merged step out of range");
    Var sin_emb = Var::constant(sinusoidal_embedding(static_cast<double>(t_merged), cfg_.dim));
    return time_fc2_(nn::silu(time_fc1_(sin_emb)));
}

std::vector<Var> DualModel::encode_tokens(const Var& noisy_tokens, const Var& noisy_centers,
                                          int t_merged) const {
    if (noisy_tokens.cols() != 3 || noisy_centers.cols() != 3)
        throw ConfigError("encode_tokens: expected x,y,z columns");
    if (noisy_tokens.rows() != noisy_centers.rows() * cfg_.group_size)
        throw ConfigError("encode_tokens: token rows must be G * K");

    const Eigen::Index K = cfg_.group_size;
    Var h = patch_pp2_(nn::gelu(patch_pp1_(noisy_tokens)));          // (G*K) x d
    Var pooled = nn::segment_max(h, K);                              // G x d
    Var cat = nn::concat_cols({h, nn::repeat_rows(pooled, K)});      // (G*K) x 2d
    Var h2 = patch_pp4_(nn::gelu(patch_pp3_(cat)));
    Var tokens = nn::segment_max(h2, K);                             // G x d

    Var pos = pos_fc2_(nn::gelu(pos_fc1_(noisy_centers)));
    Var x = nn::add(tokens, pos);

    Var cond = time_conditioning(t_merged);
    std::vector<Var> layers;
    layers.reserve(enc_.size());
    for (const auto& blk : enc_) {
        x = blk(x, cond);
        layers.push_back(x);
    }
    return layers;
}

std::vector<Var> DualModel::encode_points(const TokenPairBatch& batch) const {
    if (batch.group_size != cfg_.group_size || batch.groups != cfg_.groups)
        throw ConfigError("encode_points: batch G/K differ from model config");
    return encode_tokens(Var::constant(batch.noisy_tokens),
                         Var::constant(nn::Mat(batch.noisy_centers)), batch.t_merged);
}

Var DualModel::decode_points(const Var& encoded_final, const Var& noisy_centers, int t_merged) const {
    Var pos = dec_pos_fc2_(nn::gelu(dec_pos_fc1_(noisy_centers)));
    Var x = nn::add(encoded_final, pos);
    Var cond = time_conditioning(t_merged);
    for (const auto& blk : dec_) x = blk(x, cond);
    Var flat = recon_head_(nn::layernorm(x));  // G x (K*3)
    return nn::reshape_rowmajor(flat, x.rows() * cfg_.group_size, 3);
}

Var DualModel::denoise_features(const std::vector<Var>& layer_context, const std::vector<int>& type_ids,
                                const nn::Mat& eps2, bool stop_gradient) const {
    if (layer_context.size() != feat_.size())
        throw InvalidInput("denoise_features: context must hold one entry per encoder layer");
    if (eps2.rows() != static_cast<Eigen::Index>(type_ids.size()) || eps2.cols() != cfg_.teacher_dim)
        throw InvalidInput("denoise_features: eps2 must be (types x teacher_dim)");
    IndexSet ids;
    ids.reserve(type_ids.size());
    for (int id : type_ids) {
        if (id < 0 || id >= cfg_.k_types) throw InvalidInput("denoise_features: unknown feature type");
        ids.push_back(id);
    }

    Var f = feat_in_proj_(Var::constant(eps2));          // k x d
    Var cond_rows = nn::gather_rows(cat_emb_, ids);      // k x d
    for (std::size_t i = 0; i < feat_.size(); ++i) {
        Var ctx = stop_gradient ? nn::detach(layer_context[i]) : layer_context[i];
        f = feat_[i](f, ctx, cond_rows);
    }
    return nn::l2normalize_rows(feat_head_(nn::layernorm(f)));
}

bool stop_gradient_check(DualModel& model, std::uint64_t seed, bool disable_stop_gradient) {
    const ModelConfig& cfg = model.config();
    Rng rng(seed);

    // tiny random cloud, G*K points so every group is full
    const Eigen::Index n = std::max<Eigen::Index>(cfg.groups * 2, cfg.group_size * 2);
    PointCloud cloud(n, 3);
    rng.fill_uniform(cloud, -1.0, 1.0);
    NoiseSchedule sched;
    sched.merge_interval = (sched.total_steps + cfg.merged_steps - 1) / cfg.merged_steps;
    TokenPairBatch batch = tokenize_pair(cloud, sched, sched.total_steps / 2, cfg.groups,
                                         cfg.group_size, rng);

    model.zero_grad();
    auto layers = model.encode_points(batch);
    std::vector<int> type_ids(cfg.k_types);
    for (int i = 0; i < cfg.k_types; ++i) type_ids[i] = i;
    nn::Mat eps2(cfg.k_types, cfg.teacher_dim);
    rng.fill_normal(eps2);
    Var features = model.denoise_features(layers, type_ids, eps2, /*stop_gradient=*/!disable_stop_gradient);

    // arbitrary unit teacher rows; only the gradient routing matters here
    nn::Mat teacher(cfg.k_types, cfg.teacher_dim);
    rng.fill_normal(teacher);
    for (Eigen::Index r = 0; r < teacher.rows(); ++r) teacher.row(r).normalize();
    Var loss = nn::smooth_l1(features, teacher, 1.0);
    nn::backward(loss);

    bool isolated = true;
    for (const auto& [name, v] : model.params()) {
        if (name.rfind("feat.", 0) == 0) continue;  // feature branch is supposed to learn
        if (v.has_grad() && v.grad().cwiseAbs().maxCoeff() != 0.0) {
            isolated = false;
            break;
        }
    }
    model.zero_grad();
    return isolated;
}

}  // namespace dualdn
