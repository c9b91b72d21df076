#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dualdn/backbone.hpp"
#include "dualdn/checkpoint.hpp"
#include "dualdn/datasets.hpp"
#include "dualdn/losses.hpp"
#include "dualdn/schedule.hpp"
#include "dualdn/teacher.hpp"

namespace dualdn {

struct TrainConfig {
    int epochs = 50;
    int max_steps = 0;  // > 0 overrides the epoch-derived step count
    int batch_size = 16;
    double lr = 1e-3;
    double weight_decay = 0.05;
    double warmup_frac = 0.05;  // fraction of total steps spent in linear warmup
    double alpha = 1.0;         // feature loss weight
    double huber_beta = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

// Decoupled weight decay; biases and embeddings are not decayed.
class AdamW {
public:
    AdamW(std::vector<std::pair<std::string, nn::Var>>& params, double weight_decay,
          double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    void step(double lr);
    long step_count() const { return step_count_; }

    void append_state(Checkpoint& ck);  // quantizes live moments to float32
    void restore_state(const Checkpoint& ck);

private:
    std::vector<std::pair<std::string, nn::Var>>* params_;
    std::vector<nn::Mat> m_, v_;
    std::vector<bool> decay_;
    double weight_decay_, beta1_, beta2_, eps_;
    long step_count_ = 0;
};

// Pretraining loop: sample batch -> per-sample timestep -> diffuse/tokenize ->
// dual forward -> weighted loss -> AdamW update.
class Trainer {
public:
    Trainer(DualModel& model, const NoiseSchedule& sched, const LabeledCloudSet& data,
            const MockTeacher& teachers, const TrainConfig& cfg);
    Trainer(DualModel& model, const NoiseSchedule& sched, const LabeledCloudSet& data,
            const EmbeddingTable& image_teacher, const EmbeddingTable& text_teacher,
            const TrainConfig& cfg);

    LossReport train_step();  // one optimizer update
    long step() const { return step_; }
    long total_steps() const { return total_steps_; }
    double current_lr() const;

    void save(const std::string& path, const std::vector<std::pair<std::string, std::string>>& extra_meta = {});
    void restore(const std::string& path);  // model params + optimizer + data cursor + rng

private:
    const LabeledSample& next_sample();
    Eigen::RowVectorXd teacher_row(const EmbeddingTable& table, const LabeledSample& s) const;

    DualModel& model_;
    NoiseSchedule sched_;
    const LabeledCloudSet& data_;
    const EmbeddingTable& image_teacher_;
    const EmbeddingTable& text_teacher_;
    TrainConfig cfg_;
    AdamW opt_;
    Rng rng_;
    long step_ = 0;
    long total_steps_ = 0;
    long epoch_ = 0;
    std::size_t cursor_ = 0;
    std::vector<std::size_t> order_;

    void reshuffle();
};

std::string format_loss_report(const LossReport& r, long step, double lr);

}  // namespace dualdn
