#include "dualdn/trainer.hpp"

#include <cmath>
#include <sstream>

#include "dualdn/error.hpp"

namespace dualdn {

void TrainConfig::validate() const {
    if (epochs < 1 && max_steps < 1) throw ConfigError("TrainConfig: need epochs >= 1 or max_steps >= 1");
    if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
    if (lr <= 0.0) throw ConfigError("TrainConfig: lr must be positive");
    if (weight_decay < 0.0) throw ConfigError("TrainConfig: weight_decay must be >= 0");
    if (warmup_frac < 0.0 || warmup_frac > 1.0) throw ConfigError("TrainConfig: warmup_frac out of [0, 1]");
    if (alpha < 0.0) throw ConfigError("TrainConfig: alpha must be >= 0");
    if (huber_beta <= 0.0) throw ConfigError("TrainConfig: huber_beta must be positive");
}

AdamW::AdamW(std::vector<std::pair<std::string, nn::Var>>& params, double weight_decay, double beta1,
             double beta2, double eps)
    : params_(&params), weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    decay_.reserve(params.size());
    for (const auto& [name, var] : params) {
        m_.push_back(nn::Mat::Zero(var.rows(), var.cols()));
        v_.push_back(nn::Mat::Zero(var.rows(), var.cols()));
        const bool is_bias = name.size() >= 2 && name.compare(name.size() - 2, 2, ".b") == 0;
        const bool is_emb = name.find("emb") != std::string::npos;
        decay_.push_back(!is_bias && !is_emb);
    }
}

void AdamW::step(double lr) {
    ++step_count_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
    for (std::size_t i = 0; i < params_->size(); ++i) {
        auto& var = (*params_)[i].second;
        if (!var.has_grad()) continue;
        const nn::Mat& g = var.grad();
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
        nn::Mat update = (m_[i] / bc1).array() / ((v_[i] / bc2).array().sqrt() + eps_);
        if (decay_[i]) update.array() += weight_decay_ * var.val().array();
        var.mut_value() -= lr * update;
    }
}

void AdamW::append_state(Checkpoint& ck) {
    ck.meta.emplace_back("opt.step", std::to_string(step_count_));
    for (std::size_t i = 0; i < params_->size(); ++i) {
        const std::string& name = (*params_)[i].first;
        Checkpoint::Tensor tm = tensor_from_mat("opt.m." + name, m_[i]);
        m_[i] = mat_from_tensor(tm);
        ck.tensors.push_back(std::move(tm));
        Checkpoint::Tensor tv = tensor_from_mat("opt.v." + name, v_[i]);
        v_[i] = mat_from_tensor(tv);
        ck.tensors.push_back(std::move(tv));
    }
}

void AdamW::restore_state(const Checkpoint& ck) {
    const std::string* s = ck.find_meta("opt.step");
    if (!s) throw DataError("checkpoint: missing opt.step");
    step_count_ = std::stol(*s);
    for (std::size_t i = 0; i < params_->size(); ++i) {
        const std::string& name = (*params_)[i].first;
        const Checkpoint::Tensor* tm = ck.find_tensor("opt.m." + name);
        const Checkpoint::Tensor* tv = ck.find_tensor("opt.v." + name);
        if (!tm || !tv) throw DataError("checkpoint: missing optimizer state for " + name);
        m_[i] = mat_from_tensor(*tm);
        v_[i] = mat_from_tensor(*tv);
    }
}

Trainer::Trainer(DualModel& model, const NoiseSchedule& sched, const LabeledCloudSet& data,
                 const MockTeacher& teachers, const TrainConfig& cfg)
    : Trainer(model, sched, data, teachers.image, teachers.text, cfg) {}

Trainer::Trainer(DualModel& model, const NoiseSchedule& sched, const LabeledCloudSet& data,
                 const EmbeddingTable& image_teacher, const EmbeddingTable& text_teacher,
                 const TrainConfig& cfg)
    : model_(model),
      sched_(sched),
      data_(data),
      image_teacher_(image_teacher),
      text_teacher_(text_teacher),
      cfg_(cfg),
      opt_(model.params(), cfg.weight_decay),
      rng_(hash_combine(cfg.seed, 0x747261696eULL)) {
    cfg_.validate();
    if (data_.samples.empty()) throw InvalidInput("Trainer: empty dataset");
    if (image_teacher_.dim() != model_.config().teacher_dim ||
        text_teacher_.dim() != model_.config().teacher_dim)
        throw ConfigError("Trainer: teacher width differs from model teacher_dim");

    const long steps_per_epoch =
        (static_cast<long>(data_.samples.size()) + cfg_.batch_size - 1) / cfg_.batch_size;
    total_steps_ = cfg_.max_steps > 0 ? cfg_.max_steps : steps_per_epoch * cfg_.epochs;
    reshuffle();
}

void Trainer::reshuffle() {
    order_.resize(data_.samples.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    Rng shuffle_rng(hash_combine(hash_combine(cfg_.seed, 0x73687566ULL), static_cast<std::uint64_t>(epoch_)));
    for (std::size_t i = 0; i + 1 < order_.size(); ++i) {
        const std::size_t j = i + shuffle_rng.uniform_int(order_.size() - i);
        std::swap(order_[i], order_[j]);
    }
    cursor_ = 0;
}

const LabeledSample& Trainer::next_sample() {
    if (cursor_ >= order_.size()) {
        ++epoch_;
        reshuffle();
    }
    return data_.samples[order_[cursor_++]];
}

Eigen::RowVectorXd Trainer::teacher_row(const EmbeddingTable& table, const LabeledSample& s) const {
    // per-sample entry if the table has one, class entry otherwise
    if (table.contains(s.id)) return table.get(s.id);
    return table.get(s.label);
}

double Trainer::current_lr() const {
    const long warmup = std::max<long>(1, static_cast<long>(cfg_.warmup_frac * static_cast<double>(total_steps_)));
    const long s = step_ + 1;
    if (s <= warmup) return cfg_.lr * static_cast<double>(s) / static_cast<double>(warmup);
    const double progress =
        static_cast<double>(s - warmup) / std::max<double>(1.0, static_cast<double>(total_steps_ - warmup));
    return cfg_.lr * 0.5 * (1.0 + std::cos(M_PI * std::min(1.0, progress)));
}

LossReport Trainer::train_step() {
    const ModelConfig& mc = model_.config();
    model_.zero_grad();

    const double inv_b = 1.0 / static_cast<double>(cfg_.batch_size);
    double sum_lambda = 0.0, sum_weighted_lp = 0.0, sum_lf = 0.0, sum_total = 0.0;

    std::vector<int> type_ids(mc.k_types);
    for (int i = 0; i < mc.k_types; ++i) type_ids[i] = i;

    for (int b = 0; b < cfg_.batch_size; ++b) {
        const LabeledSample& sample = next_sample();
        const int t = static_cast<int>(rng_.uniform_int(static_cast<std::uint64_t>(sched_.total_steps)));

        TokenPairBatch tok = tokenize_pair(sample.cloud, sched_, t, mc.groups, mc.group_size, rng_);
        auto layers = model_.encode_points(tok);
        nn::Var pred = model_.decode_points(layers.back(), nn::Var::constant(nn::Mat(tok.noisy_centers)),
                                            tok.t_merged);

        nn::Mat eps2(mc.k_types, mc.teacher_dim);
        rng_.fill_normal(eps2);
        nn::Var feats = model_.denoise_features(layers, type_ids, eps2, /*stop_gradient=*/true);

        nn::Mat teacher(mc.k_types, mc.teacher_dim);
        teacher.row(0) = teacher_row(image_teacher_, sample);
        if (mc.k_types > 1) teacher.row(1) = teacher_row(text_teacher_, sample);
        for (int k = 2; k < mc.k_types; ++k) teacher.row(k) = teacher.row(1);

        nn::Var l_p = reconstruction_loss(pred, tok.clean_tokens, mc.groups, mc.group_size);
        nn::Var l_f = distillation_loss(feats, teacher, cfg_.huber_beta);
        const double lambda = loss_weight(sched_, t);
        nn::Var sample_total = nn::add(nn::scale(l_p, lambda), nn::scale(l_f, cfg_.alpha));

        const double total_v = sample_total.item();
        if (!std::isfinite(total_v))
            throw NumericError("train_step: non-finite loss at step " + std::to_string(step_) +
                               " (sample " + sample.id + ", t=" + std::to_string(t) + ")");

        nn::backward(nn::scale(sample_total, inv_b));

        sum_lambda += lambda;
        sum_weighted_lp += lambda * l_p.item();
        sum_lf += l_f.item();
        sum_total += total_v;
    }

    opt_.step(current_lr());
    ++step_;

    // Batch report keeps total = lambda_t * l_p + alpha * l_f exact:
    // l_p is the lambda-weighted mean of per-sample reconstruction losses.
    LossReport rep;
    rep.lambda_t = sum_lambda * inv_b;
    rep.l_p = rep.lambda_t > 0.0 ? (sum_weighted_lp * inv_b) / rep.lambda_t : 0.0;
    rep.l_f = sum_lf * inv_b;
    rep.alpha = cfg_.alpha;
    rep.total = sum_total * inv_b;
    return rep;
}

void Trainer::save(const std::string& path,
                   const std::vector<std::pair<std::string, std::string>>& extra_meta) {
    Checkpoint ck;
    for (const auto& kv : extra_meta) ck.meta.push_back(kv);
    ck.meta.emplace_back("sched.total_steps", std::to_string(sched_.total_steps));
    ck.meta.emplace_back("sched.scale", std::to_string(sched_.scale));
    ck.meta.emplace_back("sched.merge_interval", std::to_string(sched_.merge_interval));
    ck.meta.emplace_back("train.step", std::to_string(step_));
    ck.meta.emplace_back("train.epoch", std::to_string(epoch_));
    ck.meta.emplace_back("train.cursor", std::to_string(cursor_));
    ck.meta.emplace_back("train.rng", rng_.state());
    append_model(ck, model_);
    opt_.append_state(ck);
    save_checkpoint(ck, path);
}

void Trainer::restore(const std::string& path) {
    Checkpoint ck = load_checkpoint(path);
    load_model_params(ck, model_);
    opt_.restore_state(ck);
    auto need = [&](const char* k) {
        const std::string* v = ck.find_meta(k);
        if (!v) throw DataError(std::string("checkpoint: missing meta key ") + k);
        return *v;
    };
    step_ = std::stol(need("train.step"));
    epoch_ = std::stol(need("train.epoch"));
    const std::size_t cursor = std::stoul(need("train.cursor"));
    rng_.set_state(need("train.rng"));
    reshuffle();  // rebuild this epoch's permutation, then reposition
    cursor_ = cursor;
}

std::string format_loss_report(const LossReport& r, long step, double lr) {
    std::ostringstream os;
    os.precision(10);
    os << "step=" << step << " total=" << r.total << " l_p=" << r.l_p << " l_f=" << r.l_f
       << " lambda_t=" << r.lambda_t << " alpha=" << r.alpha << " lr=" << lr;
    return os.str();
}

}  // namespace dualdn
