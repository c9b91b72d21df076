#pragma once

#include <cstdint>

#include "dualdn/geometry.hpp"
#include "dualdn/rng.hpp"

namespace dualdn {

// Linear sigma schedule: sigma_t = s * t / (T - 1), so sigma_0 = 0 and
// sigma_{T-1} = s exactly. The input itself is never rescaled.
struct NoiseSchedule {
    int total_steps = 1000;  // T
    double scale = 0.08;     // s
    int merge_interval = 200;  // delta for t -> floor(t / delta)

    int merged_step_count() const;  // ceil(T / delta)
};

struct NoisedCloud {
    PointCloud z_t;
    int t = 0;
    PointCloud eps;  // the gaussian draw, kept so z_t - z_0 = sigma_t * eps is recoverable
};

double sigma_at(const NoiseSchedule& sched, int t);

// weight 1 / (1 + sigma_t^2), in (0, 1], non-increasing in t
double loss_weight(const NoiseSchedule& sched, int t);

int merge_step(const NoiseSchedule& sched, int t);

// z_t = z_0 + sigma_t * eps, eps ~ N(0, I) per coordinate
NoisedCloud diffuse(const PointCloud& cloud, const NoiseSchedule& sched, int t, Rng& rng);

}  // namespace dualdn
