#pragma once

#include "dualdn/autodiff.hpp"
#include "dualdn/schedule.hpp"

namespace dualdn {

struct LossReport {
    double l_p = 0.0;       // token reconstruction loss
    double l_f = 0.0;       // feature distillation loss (mean over types)
    double lambda_t = 1.0;  // noise-level weight applied to l_p
    double alpha = 1.0;     // feature loss weight
    double total = 0.0;     // lambda_t * l_p + alpha * l_f
};

// Mean over G tokens of chamfer_l2 between predicted and target K-point sets.
// pred/target are (G*K) x 3 offset stacks.
nn::Var reconstruction_loss(const nn::Var& pred, const nn::Mat& target, Eigen::Index groups,
                            Eigen::Index group_size);
double reconstruction_loss_value(const nn::Mat& pred, const nn::Mat& target, Eigen::Index groups,
                                 Eigen::Index group_size);

// Positive-only smooth-L1 between unit-norm rows, averaged over coordinates
// (and rows when several types are stacked).
nn::Var distillation_loss(const nn::Var& student, const nn::Mat& teacher, double huber_beta = 1.0);
double distillation_loss_value(const nn::Mat& student, const nn::Mat& teacher, double huber_beta = 1.0);

// total = lambda_t * l_p + alpha * l_f, lambda_t = loss_weight(sched, t)
struct CombinedLoss {
    nn::Var total;
    LossReport report;
};
CombinedLoss combined_loss(const nn::Var& pred_tokens, const nn::Mat& target_tokens,
                           Eigen::Index groups, Eigen::Index group_size, const nn::Var& student_features,
                           const nn::Mat& teacher_features, const NoiseSchedule& sched, int t,
                           double alpha, double huber_beta = 1.0);

}  // namespace dualdn
