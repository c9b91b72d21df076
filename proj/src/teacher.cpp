#include "dualdn/teacher.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dualdn/error.hpp"
#include "dualdn/rng.hpp"

namespace dualdn {

static_assert(std::endian::native == std::endian::little,
              "DDEF serialization assumes a little-endian host");

std::string modality_name(Modality m) { return m == Modality::Image ? "image" : "text"; }

bool EmbeddingTable::contains(const std::string& name) const {
    for (const auto& n : names_)
        if (n == name) return true;
    return false;
}

Eigen::RowVectorXd EmbeddingTable::get(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return vectors_.row(static_cast<Eigen::Index>(i));
    throw InvalidInput("EmbeddingTable: no entry named '" + name + "'");
}

void EmbeddingTable::add(const std::string& name, const Eigen::RowVectorXd& v) {
    if (v.size() != dim_) throw InvalidInput("EmbeddingTable: width mismatch for '" + name + "'");
    if (!v.allFinite()) throw DataError("EmbeddingTable: non-finite vector for '" + name + "'");
    if (contains(name)) throw DataError("EmbeddingTable: duplicate name '" + name + "'");
    const double norm = v.norm();
    if (norm <= 0.0) throw DataError("EmbeddingTable: zero-norm vector for '" + name + "'");
    names_.push_back(name);
    vectors_.conservativeResize(static_cast<Eigen::Index>(names_.size()), dim_);
    vectors_.row(static_cast<Eigen::Index>(names_.size()) - 1) = v / norm;
}

EmbeddingTable load_embeddings(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("load_embeddings: cannot open " + path);

    std::string header;
    if (!std::getline(in, header)) throw DataError("load_embeddings: missing header in " + path);
    std::istringstream hs(header);
    std::string magic, version, dim_kv, count_kv, modality_kv;
    hs >> magic >> version >> dim_kv >> count_kv >> modality_kv;
    if (magic != "DDEF" || version != "v1" || dim_kv.rfind("dim=", 0) != 0 ||
        count_kv.rfind("count=", 0) != 0 || modality_kv.rfind("modality=", 0) != 0)
        throw DataError("load_embeddings: malformed header '" + header + "'");

    const int dim = std::stoi(dim_kv.substr(4));
    const long count = std::stol(count_kv.substr(6));
    const std::string mod = modality_kv.substr(9);
    if (dim < 1 || count < 0) throw DataError("load_embeddings: bad dim/count in header");
    Modality modality;
    if (mod == "image")
        modality = Modality::Image;
    else if (mod == "text")
        modality = Modality::Text;
    else
        throw DataError("load_embeddings: unknown modality '" + mod + "'");

    EmbeddingTable table(dim, modality);
    std::vector<float> buf(static_cast<std::size_t>(dim));
    for (long i = 0; i < count; ++i) {
        std::string name;
        if (!std::getline(in, name))
            throw DataError("load_embeddings: truncated at record " + std::to_string(i));
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (!in) throw DataError("load_embeddings: truncated payload for '" + name + "'");
        Eigen::RowVectorXd v(dim);
        for (int d = 0; d < dim; ++d) v(d) = static_cast<double>(buf[static_cast<std::size_t>(d)]);
        try {
            table.add(name, v);
        } catch (const DataError& e) {
            throw DataError(std::string(e.what()) + " (record " + std::to_string(i) + " in " + path + ")");
        }
    }
    return table;
}

void save_embeddings(const EmbeddingTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("save_embeddings: cannot open " + path);
    out << "DDEF v1 dim=" << table.dim() << " count=" << table.size()
        << " modality=" << modality_name(table.modality()) << "\n";
    std::vector<float> buf(static_cast<std::size_t>(table.dim()));
    for (std::size_t i = 0; i < table.size(); ++i) {
        out << table.names()[i] << "\n";
        for (int d = 0; d < table.dim(); ++d)
            buf[static_cast<std::size_t>(d)] = static_cast<float>(table.vectors()(static_cast<Eigen::Index>(i), d));
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    if (!out) throw DataError("save_embeddings: write failed for " + path);
}

MockTeacher mock_teacher(const std::vector<std::string>& class_names, int dim, std::uint64_t seed,
                         double eta) {
    if (class_names.empty()) throw InvalidInput("mock_teacher: no class names");
    if (dim < 1) throw InvalidInput("mock_teacher: dim must be >= 1");

    MockTeacher out;
    out.text = EmbeddingTable(dim, Modality::Text);
    out.image = EmbeddingTable(dim, Modality::Image);
    for (const auto& name : class_names) {
        Rng text_rng(fnv1a(name, hash_combine(seed, 0x74657874ULL)));
        Eigen::RowVectorXd t(dim);
        for (int d = 0; d < dim; ++d) t(d) = text_rng.normal();
        t.normalize();
        out.text.add(name, t);

        Rng img_rng(fnv1a(name, hash_combine(seed, 0x696d616765ULL)));
        Eigen::RowVectorXd g(dim);
        for (int d = 0; d < dim; ++d) g(d) = img_rng.normal();
        Eigen::RowVectorXd img = t + eta * g;
        out.image.add(name, img);  // add() renormalizes
    }
    return out;
}

}  // namespace dualdn
