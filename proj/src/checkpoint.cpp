#include "dualdn/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "dualdn/error.hpp"

namespace dualdn {

const std::string* Checkpoint::find_meta(const std::string& key) const {
    for (const auto& [k, v] : meta)
        if (k == key) return &v;
    return nullptr;
}

const Checkpoint::Tensor* Checkpoint::find_tensor(const std::string& name) const {
    for (const auto& t : tensors)
        if (t.name == name) return &t;
    return nullptr;
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    std::ostringstream meta_block;
    for (const auto& [k, v] : ck.meta) meta_block << k << "=" << v << "\n";
    const std::string meta_str = meta_block.str();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("save_checkpoint: cannot open " + path);
    out << "DDCK v1\n";
    out << "meta " << meta_str.size() << "\n" << meta_str;
    out << "tensors " << ck.tensors.size() << "\n";
    for (const auto& t : ck.tensors) {
        if (static_cast<Eigen::Index>(t.data.size()) != t.rows * t.cols)
            throw InvalidInput("save_checkpoint: tensor '" + t.name + "' size mismatch");
        out << t.name << " " << t.rows << " " << t.cols << "\n";
        out.write(reinterpret_cast<const char*>(t.data.data()),
                  static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    }
    if (!out) throw DataError("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("load_checkpoint: cannot open " + path);

    std::string line;
    if (!std::getline(in, line) || line != "DDCK v1")
        throw DataError("load_checkpoint: bad version header in " + path);

    if (!std::getline(in, line) || line.rfind("meta ", 0) != 0)
        throw DataError("load_checkpoint: missing meta block in " + path);
    const std::size_t meta_len = std::stoul(line.substr(5));
    std::string meta_str(meta_len, '\0');
    in.read(meta_str.data(), static_cast<std::streamsize>(meta_len));
    if (!in) throw DataError("load_checkpoint: truncated meta block in " + path);

    Checkpoint ck;
    std::istringstream ms(meta_str);
    while (std::getline(ms, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw DataError("load_checkpoint: malformed meta line '" + line + "'");
        ck.meta.emplace_back(line.substr(0, eq), line.substr(eq + 1));
    }

    if (!std::getline(in, line) || line.rfind("tensors ", 0) != 0)
        throw DataError("load_checkpoint: missing tensor count in " + path);
    const long count = std::stol(line.substr(8));
    ck.tensors.reserve(static_cast<std::size_t>(count));
    for (long i = 0; i < count; ++i) {
        if (!std::getline(in, line))
            throw DataError("load_checkpoint: truncated tensor header at " + std::to_string(i));
        std::istringstream hs(line);
        Checkpoint::Tensor t;
        if (!(hs >> t.name >> t.rows >> t.cols) || t.rows < 0 || t.cols < 0)
            throw DataError("load_checkpoint: malformed tensor header '" + line + "'");
        t.data.resize(static_cast<std::size_t>(t.rows * t.cols));
        in.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(float)));
        if (!in) throw DataError("load_checkpoint: truncated payload for tensor '" + t.name + "'");
        ck.tensors.push_back(std::move(t));
    }
    return ck;
}

Checkpoint::Tensor tensor_from_mat(const std::string& name, const Eigen::MatrixXd& m) {
    Checkpoint::Tensor t;
    t.name = name;
    t.rows = m.rows();
    t.cols = m.cols();
    t.data.resize(static_cast<std::size_t>(m.size()));
    std::size_t at = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) t.data[at++] = static_cast<float>(m(r, c));
    return t;
}

Eigen::MatrixXd mat_from_tensor(const Checkpoint::Tensor& t) {
    Eigen::MatrixXd m(t.rows, t.cols);
    std::size_t at = 0;
    for (Eigen::Index r = 0; r < t.rows; ++r)
        for (Eigen::Index c = 0; c < t.cols; ++c) m(r, c) = static_cast<double>(t.data[at++]);
    return m;
}

void append_model(Checkpoint& ck, DualModel& model) {
    const ModelConfig& cfg = model.config();
    auto put = [&](const std::string& k, long v) { ck.meta.emplace_back(k, std::to_string(v)); };
    put("model.dim", cfg.dim);
    put("model.enc_blocks", cfg.enc_blocks);
    put("model.dec_blocks", cfg.dec_blocks);
    put("model.heads", cfg.heads);
    put("model.mlp_ratio", cfg.mlp_ratio);
    put("model.k_types", cfg.k_types);
    put("model.teacher_dim", cfg.teacher_dim);
    put("model.groups", cfg.groups);
    put("model.group_size", cfg.group_size);
    put("model.merged_steps", cfg.merged_steps);

    for (auto& [name, var] : model.params()) {
        Checkpoint::Tensor t = tensor_from_mat(name, var.val());
        var.mut_value() = mat_from_tensor(t);  // keep the live model on the saved values
        ck.tensors.push_back(std::move(t));
    }
}

ModelConfig model_config_from_meta(const Checkpoint& ck) {
    ModelConfig cfg;
    auto get = [&](const std::string& k) {
        const std::string* v = ck.find_meta(k);
        if (!v) throw DataError("checkpoint: missing meta key " + k);
        return std::stoi(*v);
    };
    cfg.dim = get("model.dim");
    cfg.enc_blocks = get("model.enc_blocks");
    cfg.dec_blocks = get("model.dec_blocks");
    cfg.heads = get("model.heads");
    cfg.mlp_ratio = get("model.mlp_ratio");
    cfg.k_types = get("model.k_types");
    cfg.teacher_dim = get("model.teacher_dim");
    cfg.groups = get("model.groups");
    cfg.group_size = get("model.group_size");
    cfg.merged_steps = get("model.merged_steps");
    cfg.validate();
    return cfg;
}

void load_model_params(const Checkpoint& ck, DualModel& model) {
    for (auto& [name, var] : model.params()) {
        const Checkpoint::Tensor* t = ck.find_tensor(name);
        if (!t) throw DataError("checkpoint: missing tensor '" + name + "'");
        if (t->rows != var.rows() || t->cols != var.cols())
            throw DataError("checkpoint: shape mismatch for tensor '" + name + "'");
        var.mut_value() = mat_from_tensor(*t);
    }
}

}  // namespace dualdn
