#include "dualdn/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dualdn/error.hpp"

namespace dualdn {

namespace {

void check_finite(const PointCloud& cloud, const char* who) {
    if (!cloud.allFinite())
        throw InvalidInput(std::string(who) + ": cloud contains NaN/Inf");
}

}  // namespace

NormalizeResult normalize_unit_sphere(const PointCloud& cloud) {
    if (cloud.rows() < 1) throw InvalidInput("normalize_unit_sphere: empty cloud");
    check_finite(cloud, "normalize_unit_sphere");

    NormalizeResult out;
    const Eigen::RowVector3d centroid = cloud.colwise().mean();
    out.cloud = cloud.rowwise() - centroid;
    const double max_norm = out.cloud.rowwise().norm().maxCoeff();
    if (max_norm <= 0.0) {
        out.cloud.setZero();
        out.degenerate = true;
        return out;
    }
    out.cloud /= max_norm;
    return out;
}

IndexSet farthest_point_sample(const PointCloud& cloud, Eigen::Index m, Eigen::Index start) {
    const Eigen::Index n = cloud.rows();
    if (n < 1) throw InvalidInput("farthest_point_sample: empty cloud");
    if (m < 1 || m > n) throw InvalidInput("farthest_point_sample: m out of [1, N]");
    if (start < 0 || start >= n) throw InvalidInput("farthest_point_sample: start out of range");
    check_finite(cloud, "farthest_point_sample");

    IndexSet picked;
    picked.reserve(m);
    picked.push_back(start);

    Eigen::VectorXd min_d2 = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    Eigen::Index last = start;
    for (Eigen::Index s = 1; s < m; ++s) {
        // fold the newest pick into the running min distances
        for (Eigen::Index i = 0; i < n; ++i) {
            const double d2 = (cloud.row(i) - cloud.row(last)).squaredNorm();
            if (d2 < min_d2(i)) min_d2(i) = d2;
        }
        Eigen::Index best = 0;
        double best_d2 = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (min_d2(i) > best_d2) {  // strict: ties keep the lowest index
                best_d2 = min_d2(i);
                best = i;
            }
        }
        picked.push_back(best);
        last = best;
    }
    return picked;
}

std::vector<Neighborhood> knn_group(const PointCloud& cloud,
                                    const Eigen::Matrix<double, Eigen::Dynamic, 3>& centers,
                                    Eigen::Index k) {
    const Eigen::Index n = cloud.rows();
    if (n < 1) throw InvalidInput("knn_group: empty cloud");
    if (centers.rows() < 1) throw InvalidInput("knn_group: no centers");
    if (k < 1 || k > n) throw InvalidInput("knn_group: k out of [1, N]");
    check_finite(cloud, "knn_group");

    std::vector<Neighborhood> out(centers.rows());
    std::vector<std::pair<double, Eigen::Index>> dist(n);
    for (Eigen::Index c = 0; c < centers.rows(); ++c) {
        const Eigen::RowVector3d ctr = centers.row(c);
        for (Eigen::Index i = 0; i < n; ++i)
            dist[i] = {(cloud.row(i) - ctr).squaredNorm(), i};
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
        Neighborhood& nb = out[c];
        nb.indices.resize(k);
        nb.offsets.resize(k, 3);
        for (Eigen::Index j = 0; j < k; ++j) {
            nb.indices[j] = dist[j].second;
            nb.offsets.row(j) = cloud.row(dist[j].second) - ctr;
        }
    }
    return out;
}

std::vector<Neighborhood> knn_group(const PointCloud& cloud, const IndexSet& centers, Eigen::Index k) {
    Eigen::Matrix<double, Eigen::Dynamic, 3> pts(static_cast<Eigen::Index>(centers.size()), 3);
    for (std::size_t i = 0; i < centers.size(); ++i) {
        if (centers[i] < 0 || centers[i] >= cloud.rows())
            throw InvalidInput("knn_group: center index out of range");
        pts.row(static_cast<Eigen::Index>(i)) = cloud.row(centers[i]);
    }
    return knn_group(cloud, pts, k);
}

double chamfer_l2(const PointCloud& a, const PointCloud& b) {
    if (a.rows() < 1 || b.rows() < 1) throw InvalidInput("chamfer_l2: empty cloud");

    double forward = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < b.rows(); ++j)
            best = std::min(best, (a.row(i) - b.row(j)).squaredNorm());
        forward += best;
    }
    double backward = 0.0;
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            best = std::min(best, (b.row(j) - a.row(i)).squaredNorm());
        backward += best;
    }
    return forward / static_cast<double>(a.rows()) + backward / static_cast<double>(b.rows());
}

ChamferGrad chamfer_l2_grad(const PointCloud& a, const PointCloud& b) {
    if (a.rows() < 1 || b.rows() < 1) throw InvalidInput("chamfer_l2_grad: empty cloud");

    ChamferGrad g;
    g.da.setZero(a.rows(), 3);
    g.db.setZero(b.rows(), 3);
    const double inv_na = 1.0 / static_cast<double>(a.rows());
    const double inv_nb = 1.0 / static_cast<double>(b.rows());

    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        Eigen::Index nn = 0;
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < b.rows(); ++j) {
            const double d2 = (a.row(i) - b.row(j)).squaredNorm();
            if (d2 < best) {
                best = d2;
                nn = j;
            }
        }
        const Eigen::RowVector3d diff = a.row(i) - b.row(nn);
        g.da.row(i) += 2.0 * inv_na * diff;
        g.db.row(nn) -= 2.0 * inv_na * diff;
    }
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
        Eigen::Index nn = 0;
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            const double d2 = (b.row(j) - a.row(i)).squaredNorm();
            if (d2 < best) {
                best = d2;
                nn = i;
            }
        }
        const Eigen::RowVector3d diff = b.row(j) - a.row(nn);
        g.db.row(j) += 2.0 * inv_nb * diff;
        g.da.row(nn) -= 2.0 * inv_nb * diff;
    }
    return g;
}

}  // namespace dualdn
