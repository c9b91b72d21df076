#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dualdn/backbone.hpp"

namespace dualdn {

// Container layout (all multi-byte payloads little-endian):
//   line   "DDCK v1"
//   line   "meta <nbytes>"        then exactly nbytes of UTF-8 key=value lines
//   line   "tensors <count>"
//   per tensor:
//     line "<name> <rows> <cols>" then rows*cols float32, row-major
struct Checkpoint {
    std::vector<std::pair<std::string, std::string>> meta;  // ordered
    struct Tensor {
        std::string name;
        Eigen::Index rows = 0;
        Eigen::Index cols = 0;
        std::vector<float> data;  // row-major
    };
    std::vector<Tensor> tensors;

    const std::string* find_meta(const std::string& key) const;
    const Tensor* find_tensor(const std::string& name) const;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// float32 <-> double tensor bridges. Writing a parameter quantizes the live
// value to float32 as well, so the saved file and the running model agree
// exactly from the save point on.
Checkpoint::Tensor tensor_from_mat(const std::string& name, const Eigen::MatrixXd& m);
Eigen::MatrixXd mat_from_tensor(const Checkpoint::Tensor& t);

void append_model(Checkpoint& ck, DualModel& model);  // meta model.* + param tensors (quantizes live params)
ModelConfig model_config_from_meta(const Checkpoint& ck);
void load_model_params(const Checkpoint& ck, DualModel& model);

}  // namespace dualdn
