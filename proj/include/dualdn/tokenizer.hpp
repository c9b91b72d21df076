#pragma once

#include <vector>

#include "dualdn/geometry.hpp"
#include "dualdn/schedule.hpp"

namespace dualdn {

// Paired clean/noisy point tokens around shared FPS centers.
//
// Centers are sampled by FPS on the CLEAN cloud; the noisy centers are the
// same indices read out of the noised cloud. Neighborhoods are re-grouped by
// kNN inside each cloud, offsets taken from that cloud's own center position.
struct TokenPairBatch {
    IndexSet center_indices;                        // G
    Eigen::MatrixXd clean_tokens;                   // (G*K) x 3 offsets, clean-center frame
    Eigen::MatrixXd noisy_tokens;                   // (G*K) x 3 offsets, noisy-center frame
    Eigen::Matrix<double, Eigen::Dynamic, 3> clean_centers;  // G x 3 absolute
    Eigen::Matrix<double, Eigen::Dynamic, 3> noisy_centers;  // G x 3 absolute
    std::vector<IndexSet> noisy_member_indices;     // G entries of K cloud indices (for input gradients)
    Eigen::Index groups = 0;                        // G
    Eigen::Index group_size = 0;                    // K
    int t = 0;
    int t_merged = 0;
};

TokenPairBatch tokenize_pair(const PointCloud& clean, const NoiseSchedule& sched, int t,
                             Eigen::Index groups, Eigen::Index group_size, Rng& rng,
                             Eigen::Index fps_start = 0);

// Same grouping applied to an already-noised cloud (shared code path for
// inference and attacks, where the "clean" reference is the raw input).
TokenPairBatch tokenize_pair_from_noised(const PointCloud& clean, const PointCloud& noised,
                                         int t, int t_merged,
                                         Eigen::Index groups, Eigen::Index group_size,
                                         Eigen::Index fps_start = 0);

// FPS+kNN grouping, then drop floor(mask_ratio * G) groups uniformly at
// random and return the surviving groups' absolute points. Visualization only.
PointCloud mask_tokens(const PointCloud& cloud, Eigen::Index groups, Eigen::Index group_size,
                       double mask_ratio, Rng& rng, Eigen::Index fps_start = 0);

}  // namespace dualdn
