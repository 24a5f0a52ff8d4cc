#pragma once

#include <cstdint>
#include <span>

#include "capest/empirical.hpp"

namespace capest {

// Counter-based generator: draw i of stream s is a pure function of
// (seed, s, i), so disjoint streams can be consumed in parallel in any order
// with bitwise-reproducible results.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next_u64();
    double uniform01();       // [0, 1)
    double uniform_open01();  // (0, 1]
    double normal();          // standard Gaussian (Box-Muller)

private:
    std::uint64_t state_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

// Stable seed derivation for independent sampling phases.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt);

struct SamplerConfig {
    int dim = 2;
    std::uint64_t seed = 0;
    std::size_t count = 2;
};

// count rows uniform on the unit sphere in R^dim (normalized isotropic
// Gaussians); bitwise deterministic per config.
EmbeddingSet sample_uniform_sphere(const SamplerConfig& config);

struct McResult {
    double fraction;
    double std_error;  // sqrt(f(1-f)/samples)
};

// Fraction of uniform directions x with <x, e1> >= cos(omega), estimated from
// `samples` independent draws. omega must lie in [0, pi/2]. Deterministic for
// any thread count.
McResult mc_cap_fraction(int n, double omega, std::size_t samples, std::uint64_t seed,
                         unsigned threads = 0);

// von Mises-Fisher draws with mean direction mu and concentration kappa,
// by the standard rejection construction for the tangent component.
// kappa = 0 reduces to the uniform distribution.
EmbeddingSet sample_vmf(int n, std::span<const double> mu, double kappa, std::size_t count,
                        std::uint64_t seed);

struct SynthDataset {
    EmbeddingSet embeddings;
    LabelTable labels;
};

// identities x per_identity clustered rows: identity means sampled uniformly,
// members drawn vMF around their mean. Labels carry the identity per row.
SynthDataset synth_identities(int dim, std::size_t identities, std::size_t per_identity,
                              double kappa, std::uint64_t seed);

}  // namespace capest
