#include "dualdn/schedule.hpp"

#include "dualdn/error.hpp"

namespace dualdn {

namespace {

void check_step(const NoiseSchedule& sched, int t, const char* who) {
    if (sched.total_steps < 2) throw InvalidInput(std::string(who) + ": schedule needs T >= 2");
    if (sched.scale < 0.0) throw InvalidInput(std::string(who) + ": negative noise scale");
    if (t < 0 || t >= sched.total_steps) throw InvalidInput(std::string(who) + ": step out of [0, T)");
}

}  // namespace

int NoiseSchedule::merged_step_count() const {
    return (total_steps + merge_interval - 1) / merge_interval;
}

double sigma_at(const NoiseSchedule& sched, int t) {
    check_step(sched, t, "sigma_at");
    return sched.scale * static_cast<double>(t) / static_cast<double>(sched.total_steps - 1);
}

double loss_weight(const NoiseSchedule& sched, int t) {
    const double sigma = sigma_at(sched, t);
    return 1.0 / (1.0 + sigma * sigma);
}

int merge_step(const NoiseSchedule& sched, int t) {
    check_step(sched, t, "merge_step");
    if (sched.merge_interval < 1) throw InvalidInput("merge_step: interval must be >= 1");
    return t / sched.merge_interval;
}

NoisedCloud diffuse(const PointCloud& cloud, const NoiseSchedule& sched, int t, Rng& rng) {
    const double sigma = sigma_at(sched, t);
    if (!cloud.allFinite()) throw InvalidInput("diffuse: cloud contains NaN/Inf");

    NoisedCloud out;
    out.t = t;
    out.eps.resize(cloud.rows(), 3);
    rng.fill_normal(out.eps);
    if (sigma == 0.0) {
        out.z_t = cloud;  // exact copy, eps retained but unused
    } else {
        out.z_t = cloud + sigma * out.eps;
    }
    return out;
}

}  // namespace dualdn
