#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dualdn/geometry.hpp"

namespace dualdn {

enum class Split { Train, Test };

struct LabeledSample {
    PointCloud cloud;
    std::string label;
    std::string id;
};

struct LabeledCloudSet {
    std::vector<LabeledSample> samples;
    std::vector<std::string> label_names;  // ordered, unique
    Split split = Split::Train;

    Eigen::Index label_index(const std::string& label) const;  // throws on miss
};

// Manifest: UTF-8 lines `relative/path<TAB>label<TAB>train|test`.
// Each referenced file holds whitespace-separated `x y z` lines. Clouds are
// unit-sphere normalized and resampled to `points`: random-with-replacement
// when short, FPS when long.
LabeledCloudSet load_xyz_dir(const std::string& root, const std::string& manifest_path,
                             Eigen::Index points, Split split, std::uint64_t seed = 1);

// Parses one xyz file (no normalization/resampling).
PointCloud read_xyz_file(const std::string& path);
void write_xyz_file(const PointCloud& cloud, const std::string& path,
                    const std::string& header_line = "");

inline const std::vector<std::string>& synthetic_class_names() {
    static const std::vector<std::string> names = {"sphere", "cube",    "cylinder", "cone",
                                                   "torus",  "pyramid", "plane",    "helix"};
    return names;
}

// Deterministic labeled surface samples: per-sample rotation about the up
// axis, gaussian jitter (sigma 0.005), then unit-sphere normalization.
LabeledCloudSet make_synthetic(const std::vector<std::string>& classes, int per_class,
                               Eigen::Index points, std::uint64_t seed, Split split = Split::Train);

}  // namespace dualdn
