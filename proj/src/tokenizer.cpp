#include "dualdn/tokenizer.hpp"

#include <algorithm>
#include <numeric>

#include "dualdn/error.hpp"

namespace dualdn {

TokenPairBatch tokenize_pair_from_noised(const PointCloud& clean, const PointCloud& noised,
                                         int t, int t_merged,
                                         Eigen::Index groups, Eigen::Index group_size,
                                         Eigen::Index fps_start) {
    const Eigen::Index n = clean.rows();
    if (noised.rows() != n) throw InvalidInput("tokenize_pair: clean/noised size mismatch");
    if (groups < 1 || groups > n) throw InvalidInput("tokenize_pair: G out of [1, N]");
    if (group_size < 1 || group_size > n) throw InvalidInput("tokenize_pair: K out of [1, N]");

    TokenPairBatch batch;
    batch.groups = groups;
    batch.group_size = group_size;
    batch.t = t;
    batch.t_merged = t_merged;
    batch.center_indices = farthest_point_sample(clean, groups, fps_start);

    batch.clean_centers.resize(groups, 3);
    batch.noisy_centers.resize(groups, 3);
    for (Eigen::Index g = 0; g < groups; ++g) {
        batch.clean_centers.row(g) = clean.row(batch.center_indices[g]);
        batch.noisy_centers.row(g) = noised.row(batch.center_indices[g]);
    }

    const auto clean_nb = knn_group(clean, batch.clean_centers, group_size);
    const auto noisy_nb = knn_group(noised, batch.noisy_centers, group_size);

    batch.clean_tokens.resize(groups * group_size, 3);
    batch.noisy_tokens.resize(groups * group_size, 3);
    batch.noisy_member_indices.resize(groups);
    for (Eigen::Index g = 0; g < groups; ++g) {
        batch.clean_tokens.middleRows(g * group_size, group_size) = clean_nb[g].offsets;
        batch.noisy_tokens.middleRows(g * group_size, group_size) = noisy_nb[g].offsets;
        batch.noisy_member_indices[g] = noisy_nb[g].indices;
    }
    return batch;
}

TokenPairBatch tokenize_pair(const PointCloud& clean, const NoiseSchedule& sched, int t,
                             Eigen::Index groups, Eigen::Index group_size, Rng& rng,
                             Eigen::Index fps_start) {
    NoisedCloud noised = diffuse(clean, sched, t, rng);
    return tokenize_pair_from_noised(clean, noised.z_t, t, merge_step(sched, t),
                                     groups, group_size, fps_start);
}

PointCloud mask_tokens(const PointCloud& cloud, Eigen::Index groups, Eigen::Index group_size,
                       double mask_ratio, Rng& rng, Eigen::Index fps_start) {
    if (mask_ratio < 0.0 || mask_ratio > 1.0)
        throw InvalidInput("mask_tokens: mask_ratio out of [0, 1]");

    const IndexSet centers = farthest_point_sample(cloud, groups, fps_start);
    const auto neighborhoods = knn_group(cloud, centers, group_size);

    const Eigen::Index dropped = static_cast<Eigen::Index>(mask_ratio * static_cast<double>(groups));
    const Eigen::Index kept = groups - dropped;

    // Fisher-Yates prefix selects the surviving groups
    std::vector<Eigen::Index> order(groups);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    for (Eigen::Index i = 0; i < groups - 1; ++i) {
        const Eigen::Index j = i + static_cast<Eigen::Index>(rng.uniform_int(static_cast<std::uint64_t>(groups - i)));
        std::swap(order[i], order[j]);
    }

    PointCloud out(kept * group_size, 3);
    for (Eigen::Index i = 0; i < kept; ++i) {
        const Eigen::Index g = order[i];
        const Eigen::RowVector3d ctr = cloud.row(centers[g]);
        for (Eigen::Index j = 0; j < group_size; ++j)
            out.row(i * group_size + j) = neighborhoods[g].offsets.row(j) + ctr;
    }
    return out;
}

}  // namespace dualdn
