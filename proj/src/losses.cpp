#include "dualdn/losses.hpp"

#include <cmath>

#include "dualdn/error.hpp"

namespace dualdn {

nn::Var reconstruction_loss(const nn::Var& pred, const nn::Mat& target, Eigen::Index groups,
                            Eigen::Index group_size) {
    return nn::chamfer_tokens(pred, target, groups, group_size);
}

double reconstruction_loss_value(const nn::Mat& pred, const nn::Mat& target, Eigen::Index groups,
                                 Eigen::Index group_size) {
    nn::NoGradGuard guard;
    return nn::chamfer_tokens(nn::Var::constant(pred), target, groups, group_size).item();
}

nn::Var distillation_loss(const nn::Var& student, const nn::Mat& teacher, double huber_beta) {
    if (student.rows() != teacher.rows() || student.cols() != teacher.cols())
        throw InvalidInput("distillation_loss: width mismatch");
    return nn::smooth_l1(student, teacher, huber_beta);
}

double distillation_loss_value(const nn::Mat& student, const nn::Mat& teacher, double huber_beta) {
    nn::NoGradGuard guard;
    return distillation_loss(nn::Var::constant(student), teacher, huber_beta).item();
}

CombinedLoss combined_loss(const nn::Var& pred_tokens, const nn::Mat& target_tokens,
                           Eigen::Index groups, Eigen::Index group_size, const nn::Var& student_features,
                           const nn::Mat& teacher_features, const NoiseSchedule& sched, int t,
                           double alpha, double huber_beta) {
    if (alpha < 0.0) throw InvalidInput("combined_loss: alpha must be >= 0");

    CombinedLoss out;
    nn::Var l_p = reconstruction_loss(pred_tokens, target_tokens, groups, group_size);
    nn::Var l_f = distillation_loss(student_features, teacher_features, huber_beta);
    const double lambda = loss_weight(sched, t);
    out.total = nn::add(nn::scale(l_p, lambda), nn::scale(l_f, alpha));

    out.report.l_p = l_p.item();
    out.report.l_f = l_f.item();
    out.report.lambda_t = lambda;
    out.report.alpha = alpha;
    out.report.total = out.total.item();
    if (!std::isfinite(out.report.total))
        throw NumericError("combined_loss: non-finite loss");
    return out;
}

}  // namespace dualdn
