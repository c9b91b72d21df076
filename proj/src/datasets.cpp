#include "dualdn/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dualdn/error.hpp"
#include "dualdn/rng.hpp"

namespace dualdn {

namespace fs = std::filesystem;

Eigen::Index LabeledCloudSet::label_index(const std::string& label) const {
    for (std::size_t i = 0; i < label_names.size(); ++i)
        if (label_names[i] == label) return static_cast<Eigen::Index>(i);
    throw InvalidInput("LabeledCloudSet: unknown label '" + label + "'");
}

PointCloud read_xyz_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("read_xyz_file: cannot open " + path);

    std::vector<Eigen::RowVector3d> rows;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (line[0] == '#') continue;
        std::istringstream ls(line);
        double x, y, z;
        if (!(ls >> x >> y >> z) || !std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z))
            throw DataError("read_xyz_file: unparsable line " + std::to_string(lineno) + " in " + path);
        rows.emplace_back(x, y, z);
    }
    if (rows.empty()) throw DataError("read_xyz_file: empty cloud in " + path);

    PointCloud cloud(static_cast<Eigen::Index>(rows.size()), 3);
    for (std::size_t i = 0; i < rows.size(); ++i) cloud.row(static_cast<Eigen::Index>(i)) = rows[i];
    return cloud;
}

void write_xyz_file(const PointCloud& cloud, const std::string& path, const std::string& header_line) {
    std::ofstream out(path);
    if (!out) throw DataError("write_xyz_file: cannot open " + path);
    if (!header_line.empty()) out << header_line << "\n";
    out.precision(9);
    for (Eigen::Index i = 0; i < cloud.rows(); ++i)
        out << cloud(i, 0) << " " << cloud(i, 1) << " " << cloud(i, 2) << "\n";
    if (!out) throw DataError("write_xyz_file: write failed for " + path);
}

namespace {

PointCloud resample(const PointCloud& cloud, Eigen::Index points, Rng& rng) {
    const Eigen::Index n = cloud.rows();
    if (n == points) return cloud;
    PointCloud out(points, 3);
    if (n > points) {
        const IndexSet idx = farthest_point_sample(cloud, points, 0);
        for (Eigen::Index i = 0; i < points; ++i) out.row(i) = cloud.row(idx[static_cast<std::size_t>(i)]);
    } else {
        for (Eigen::Index i = 0; i < points; ++i)
            out.row(i) = cloud.row(static_cast<Eigen::Index>(rng.uniform_int(static_cast<std::uint64_t>(n))));
    }
    return out;
}

const char* split_name(Split s) { return s == Split::Train ? "train" : "test"; }

}  // namespace

LabeledCloudSet load_xyz_dir(const std::string& root, const std::string& manifest_path,
                             Eigen::Index points, Split split, std::uint64_t seed) {
    std::ifstream in(manifest_path);
    if (!in) throw DataError("load_xyz_dir: cannot open manifest " + manifest_path);

    LabeledCloudSet set;
    set.split = split;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string rel, label, split_tag;
        if (!std::getline(ls, rel, '\t') || !std::getline(ls, label, '\t') || !std::getline(ls, split_tag))
            throw DataError("load_xyz_dir: malformed manifest line " + std::to_string(lineno));
        if (!split_tag.empty() && split_tag.back() == '\r') split_tag.pop_back();
        if (split_tag != "train" && split_tag != "test")
            throw DataError("load_xyz_dir: bad split '" + split_tag + "' at line " + std::to_string(lineno));
        if (split_tag != split_name(split)) continue;

        const fs::path file = fs::path(root) / rel;
        PointCloud raw = read_xyz_file(file.string());
        NormalizeResult norm = normalize_unit_sphere(raw);

        Rng rng(hash_combine(seed, fnv1a(rel)));
        LabeledSample sample;
        sample.cloud = resample(norm.cloud, points, rng);
        sample.label = label;
        sample.id = rel;
        for (const auto& s : set.samples)
            if (s.id == sample.id) throw DataError("load_xyz_dir: duplicate sample id '" + rel + "'");
        if (std::find(set.label_names.begin(), set.label_names.end(), label) == set.label_names.end())
            set.label_names.push_back(label);
        set.samples.push_back(std::move(sample));
    }
    return set;
}

namespace {

// Surface samplers in canonical pose, roughly unit extent. Per-point draws
// come from the sample's own rng stream.
Eigen::RowVector3d sample_sphere(Rng& rng) {
    Eigen::RowVector3d p(rng.normal(), rng.normal(), rng.normal());
    const double n = p.norm();
    return n > 0 ? Eigen::RowVector3d(p / n) : Eigen::RowVector3d(1, 0, 0);
}

Eigen::RowVector3d sample_cube(Rng& rng) {
    const int face = static_cast<int>(rng.uniform_int(6));
    const double u = rng.uniform(-1.0, 1.0);
    const double v = rng.uniform(-1.0, 1.0);
    switch (face) {
        case 0: return {1.0, u, v};
        case 1: return {-1.0, u, v};
        case 2: return {u, 1.0, v};
        case 3: return {u, -1.0, v};
        case 4: return {u, v, 1.0};
        default: return {u, v, -1.0};
    }
}

Eigen::RowVector3d sample_cylinder(Rng& rng) {
    const double r = 0.5, h = 1.6;
    const double side_area = 2.0 * M_PI * r * h;
    const double cap_area = M_PI * r * r;
    const double pick = rng.uniform(0.0, side_area + 2.0 * cap_area);
    if (pick < side_area) {
        const double theta = rng.uniform(0.0, 2.0 * M_PI);
        return {r * std::cos(theta), r * std::sin(theta), rng.uniform(-h / 2, h / 2)};
    }
    const double theta = rng.uniform(0.0, 2.0 * M_PI);
    const double rad = r * std::sqrt(rng.uniform());
    const double z = pick < side_area + cap_area ? h / 2 : -h / 2;
    return {rad * std::cos(theta), rad * std::sin(theta), z};
}

Eigen::RowVector3d sample_cone(Rng& rng) {
    const double r = 0.6, h = 1.2;
    const double slant = std::sqrt(r * r + h * h);
    const double side_area = M_PI * r * slant;
    const double base_area = M_PI * r * r;
    const double pick = rng.uniform(0.0, side_area + base_area);
    const double theta = rng.uniform(0.0, 2.0 * M_PI);
    if (pick < side_area) {
        const double t = std::sqrt(rng.uniform());  // uniform over the lateral surface
        return {t * r * std::cos(theta), t * r * std::sin(theta), h / 2 - t * h};
    }
    const double rad = r * std::sqrt(rng.uniform());
    return {rad * std::cos(theta), rad * std::sin(theta), -h / 2};
}

Eigen::RowVector3d sample_torus(Rng& rng) {
    const double R = 0.7, r = 0.25;
    // rejection keeps the area measure uniform in the tube angle
    double u, v;
    do {
        u = rng.uniform(0.0, 2.0 * M_PI);
        v = rng.uniform(0.0, 2.0 * M_PI);
    } while (rng.uniform() > (R + r * std::cos(v)) / (R + r));
    return {(R + r * std::cos(v)) * std::cos(u), (R + r * std::cos(v)) * std::sin(u), r * std::sin(v)};
}

Eigen::RowVector3d sample_pyramid(Rng& rng) {
    // square base side 1.6 centered at z = -0.5, apex at (0, 0, 0.7)
    const double half = 0.8, zb = -0.5, za = 0.7;
    const Eigen::RowVector3d apex(0, 0, za);
    const Eigen::RowVector3d corners[4] = {
        {half, half, zb}, {-half, half, zb}, {-half, -half, zb}, {half, -half, zb}};
    const double base_area = 4.0 * half * half;
    const double slant_h = std::sqrt((za - zb) * (za - zb) + half * half);
    const double face_area = half * slant_h;  // 0.5 * base(2*half) * slant height
    const double pick = rng.uniform(0.0, base_area + 4.0 * face_area);
    if (pick < base_area)
        return {rng.uniform(-half, half), rng.uniform(-half, half), zb};
    const int face = static_cast<int>(rng.uniform_int(4));
    double a = rng.uniform(), b = rng.uniform();
    if (a + b > 1.0) {
        a = 1.0 - a;
        b = 1.0 - b;
    }
    const Eigen::RowVector3d& c0 = corners[face];
    const Eigen::RowVector3d& c1 = corners[(face + 1) % 4];
    return c0 + a * (c1 - c0) + b * (apex - c0);
}

Eigen::RowVector3d sample_plane(Rng& rng) {
    return {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), 0.0};
}

Eigen::RowVector3d sample_helix(Rng& rng) {
    const double turns = 2.5, r = 0.6, h = 1.6, tube = 0.05;
    const double t = rng.uniform();
    const double theta = 2.0 * M_PI * turns * t;
    Eigen::RowVector3d p(r * std::cos(theta), r * std::sin(theta), h * (t - 0.5));
    p += tube * Eigen::RowVector3d(rng.normal(), rng.normal(), rng.normal());
    return p;
}

Eigen::RowVector3d sample_class(const std::string& cls, Rng& rng) {
    if (cls == "sphere") return sample_sphere(rng);
    if (cls == "cube") return sample_cube(rng);
    if (cls == "cylinder") return sample_cylinder(rng);
    if (cls == "cone") return sample_cone(rng);
    if (cls == "torus") return sample_torus(rng);
    if (cls == "pyramid") return sample_pyramid(rng);
    if (cls == "plane") return sample_plane(rng);
    if (cls == "helix") return sample_helix(rng);
    throw InvalidInput("make_synthetic: unknown class '" + cls + "'");
}

}  // namespace

LabeledCloudSet make_synthetic(const std::vector<std::string>& classes, int per_class,
                               Eigen::Index points, std::uint64_t seed, Split split) {
    if (per_class < 1) throw InvalidInput("make_synthetic: per_class must be >= 1");
    if (points < 1) throw InvalidInput("make_synthetic: points must be >= 1");

    LabeledCloudSet set;
    set.split = split;
    for (const auto& cls : classes) {
        Rng probe(0);
        sample_class(cls, probe);  // validates the name up front
        if (std::find(set.label_names.begin(), set.label_names.end(), cls) != set.label_names.end())
            throw InvalidInput("make_synthetic: duplicate class '" + cls + "'");
        set.label_names.push_back(cls);
    }

    const std::uint64_t split_salt = split == Split::Train ? 0x747261696eULL : 0x74657374ULL;
    for (const auto& cls : classes) {
        for (int i = 0; i < per_class; ++i) {
            Rng rng(hash_combine(hash_combine(seed, split_salt), fnv1a(cls + "/" + std::to_string(i))));
            const double yaw = rng.uniform(0.0, 2.0 * M_PI);
            const double cy = std::cos(yaw), sy = std::sin(yaw);

            PointCloud cloud(points, 3);
            for (Eigen::Index p = 0; p < points; ++p) {
                Eigen::RowVector3d v = sample_class(cls, rng);
                // rotate about the up (z) axis, then jitter
                Eigen::RowVector3d rot(cy * v.x() - sy * v.y(), sy * v.x() + cy * v.y(), v.z());
                rot += 0.005 * Eigen::RowVector3d(rng.normal(), rng.normal(), rng.normal());
                cloud.row(p) = rot;
            }
            LabeledSample sample;
            sample.cloud = normalize_unit_sphere(cloud).cloud;
            sample.label = cls;
            sample.id = cls + "/" + std::to_string(i) + "@" + split_name(split);
            set.samples.push_back(std::move(sample));
        }
    }
    return set;
}

}  // namespace dualdn
