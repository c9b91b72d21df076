#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace dualdn {

// N x 3 coordinates, row per point. Expected within [-1, 1] once normalized.
using PointCloud = Eigen::Matrix<double, Eigen::Dynamic, 3>;
using IndexSet = std::vector<Eigen::Index>;

struct NormalizeResult {
    PointCloud cloud;
    bool degenerate = false;  // all input points identical; cloud is all-zeros
};

// Center at the origin and scale so the farthest point has norm 1.
// A cloud of identical points maps to all-zeros and sets `degenerate`.
NormalizeResult normalize_unit_sphere(const PointCloud& cloud);

// Iterative farthest point sampling. `start` seeds the selection; each
// following pick maximizes the minimum squared distance to everything chosen
// so far, ties resolved to the lowest index.
IndexSet farthest_point_sample(const PointCloud& cloud, Eigen::Index m, Eigen::Index start = 0);

// One kNN neighborhood: the k member indices (sorted by (distance, index))
// and their offsets from the query center.
struct Neighborhood {
    IndexSet indices;                           // k entries
    Eigen::Matrix<double, Eigen::Dynamic, 3> offsets;  // k x 3, point - center
};

std::vector<Neighborhood> knn_group(const PointCloud& cloud,
                                    const Eigen::Matrix<double, Eigen::Dynamic, 3>& centers,
                                    Eigen::Index k);
std::vector<Neighborhood> knn_group(const PointCloud& cloud, const IndexSet& centers, Eigen::Index k);

// Symmetric L2 Chamfer distance:
//   mean_a min_b |a-b|^2 + mean_b min_a |b-a|^2
double chamfer_l2(const PointCloud& a, const PointCloud& b);

// d(chamfer_l2)/da and /db at the current nearest-neighbor assignment.
struct ChamferGrad {
    Eigen::Matrix<double, Eigen::Dynamic, 3> da;
    Eigen::Matrix<double, Eigen::Dynamic, 3> db;
};
ChamferGrad chamfer_l2_grad(const PointCloud& a, const PointCloud& b);

}  // namespace dualdn
