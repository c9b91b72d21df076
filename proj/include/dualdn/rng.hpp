#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace dualdn {

// FNV-1a 64-bit. Used to derive stable per-name / per-sample seeds so that
// generated data is identical across processes and platforms.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);

// Deterministic random source. mt19937_64 is fully specified by the standard;
// the uniform/normal transforms below are written out explicitly because the
// std distributions are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // uniform in [0, 1)
    double uniform();
    // uniform in [lo, hi)
    double uniform(double lo, double hi);
    // uniform integer in [0, n)
    std::uint64_t uniform_int(std::uint64_t n);
    // standard normal via Box-Muller
    double normal();

    void fill_normal(Eigen::Ref<Eigen::MatrixXd> m);
    void fill_uniform(Eigen::Ref<Eigen::MatrixXd> m, double lo, double hi);

    // Deterministic child source, decorrelated from this one.
    Rng child(std::uint64_t stream) const;

    // Engine state as text, for checkpointing. Round-trips exactly.
    std::string state() const;
    void set_state(const std::string& s);

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace dualdn
