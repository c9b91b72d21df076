#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dualdn {

enum class Modality { Image, Text };

std::string modality_name(Modality m);

// Frozen named unit-norm embeddings of one modality.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    EmbeddingTable(int dim, Modality modality) : dim_(dim), modality_(modality) {}

    int dim() const { return dim_; }
    Modality modality() const { return modality_; }
    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    const Eigen::MatrixXd& vectors() const { return vectors_; }  // size x dim, unit rows

    bool contains(const std::string& name) const;
    Eigen::RowVectorXd get(const std::string& name) const;  // throws on miss
    void add(const std::string& name, const Eigen::RowVectorXd& v);  // normalizes; rejects dup/zero/non-finite

private:
    int dim_ = 0;
    Modality modality_ = Modality::Text;
    std::vector<std::string> names_;
    Eigen::MatrixXd vectors_;
};

// DDEF container: one UTF-8 manifest line
//   DDEF v1 dim=<D> count=<C> modality=<image|text>
// then C records of `name\n` followed by D little-endian float32.
EmbeddingTable load_embeddings(const std::string& path);
void save_embeddings(const EmbeddingTable& table, const std::string& path);

// Deterministic stand-in for frozen image/text teachers. Text vectors are
// normalized gaussian draws keyed by fnv1a(name, seed); image vectors are
// normalize(text + eta * gaussian), keyed separately, so the two modalities
// agree per class without being identical.
struct MockTeacher {
    EmbeddingTable image;
    EmbeddingTable text;
};
MockTeacher mock_teacher(const std::vector<std::string>& class_names, int dim, std::uint64_t seed,
                         double eta = 0.2);

}  // namespace dualdn
