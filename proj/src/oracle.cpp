#include "capest/oracle.hpp"

#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>
#include <vector>

#include "capest/errors.hpp"

namespace capest {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// SplitMix64 finalizer (Stafford mix13); bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

void fill_gaussian(CounterRng& rng, double* out, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) out[k] = rng.normal();
}

double norm_of(const double* v, std::size_t n) {
    double sq = 0.0;
    for (std::size_t k = 0; k < n; ++k) sq += v[k] * v[k];
    return std::sqrt(sq);
}

// Unit direction uniform on the sphere in R^n, written into out.
void uniform_direction(CounterRng& rng, double* out, std::size_t n) {
    for (;;) {
        fill_gaussian(rng, out, n);
        const double norm = norm_of(out, n);
        if (norm > 1e-154) {  // sqrt of smallest normal; astronomically likely first try
            for (std::size_t k = 0; k < n; ++k) out[k] /= norm;
            return;
        }
    }
}

// One vMF draw about the first axis: (w, sqrt(1-w^2) v) with v uniform on the
// sphere in R^(n-1) and w from Wood's rejection scheme.
void vmf_row_about_e1(CounterRng& rng, double kappa, double b, double x0, double c,
                      double* out, std::size_t n) {
    double w;
    for (;;) {
        // Beta((n-1)/2, (n-1)/2) as (1+t)/2 with t the first coordinate of a
        // uniform direction in R^n.
        std::vector<double> g(n);
        uniform_direction(rng, g.data(), n);
        const double z = 0.5 * (1.0 + g[0]);
        const double u = rng.uniform_open01();
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        if (kappa * w + (n - 1.0) * std::log1p(-x0 * w) - c >= std::log(u)) break;
    }
    std::vector<double> v(n - 1);
    uniform_direction(rng, v.data(), n - 1);
    const double tangential = std::sqrt(std::max(0.0, 1.0 - w * w));
    out[0] = w;
    for (std::size_t k = 1; k < n; ++k) out[k] = tangential * v[k - 1];
}

struct WoodParams {
    double b, x0, c;
};

WoodParams wood_params(int n, double kappa) {
    const double m = n - 1.0;
    const double b = m / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + m * m));
    const double x0 = (1.0 - b) / (1.0 + b);
    const double c = kappa * x0 + m * std::log1p(-x0 * x0);
    return {b, x0, c};
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : state_(mix64(seed + kGolden * (stream + 1))) {}

std::uint64_t CounterRng::next_u64() {
    state_ += kGolden;
    return mix64(state_);
}

double CounterRng::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::uniform_open01() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double CounterRng::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_normal_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_open01()));
    const double phase = 2.0 * std::numbers::pi * uniform01();
    cached_normal_ = r * std::sin(phase);
    has_cached_ = true;
    return r * std::cos(phase);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
    return mix64(mix64(seed) ^ (salt * kGolden + 1));
}

EmbeddingSet sample_uniform_sphere(const SamplerConfig& config) {
    if (config.dim < 2) throw DomainError("sampler dimension must be >= 2");
    if (config.count < 2) throw DomainError("sampler count must be >= 2");

    const auto dim = static_cast<std::size_t>(config.dim);
    std::vector<double> data(config.count * dim);
    for (std::size_t i = 0; i < config.count; ++i) {
        CounterRng rng(config.seed, i);
        uniform_direction(rng, data.data() + i * dim, dim);
    }
    return EmbeddingSet(std::move(data), config.count, dim, true);
}

McResult mc_cap_fraction(int n, double omega, std::size_t samples, std::uint64_t seed,
                         unsigned threads) {
    if (n < 2) throw DomainError("dimension must be >= 2");
    if (!(omega >= 0.0 && omega <= std::numbers::pi / 2.0)) {
        throw DomainError("cap half-angle must lie in [0, pi/2], got " + std::to_string(omega));
    }
    if (samples == 0) throw DomainError("sample count must be positive");

    const double threshold = std::cos(omega);
    const auto dim = static_cast<std::size_t>(n);

    std::size_t worker_count = threads ? threads : std::thread::hardware_concurrency();
    if (worker_count == 0) worker_count = 1;
    worker_count = std::min<std::size_t>(worker_count, samples);

    std::vector<std::uint64_t> hits(worker_count, 0);
    auto work = [&](std::size_t w) {
        // Shard by contiguous stream ranges; each sample owns stream index i.
        const std::size_t lo = samples * w / worker_count;
        const std::size_t hi = samples * (w + 1) / worker_count;
        std::vector<double> x(dim);
        std::uint64_t local = 0;
        for (std::size_t i = lo; i < hi; ++i) {
            CounterRng rng(seed, i);
            uniform_direction(rng, x.data(), dim);
            if (x[0] >= threshold) ++local;
        }
        hits[w] = local;
    };

    std::vector<std::thread> pool;
    pool.reserve(worker_count - 1);
    for (std::size_t w = 1; w < worker_count; ++w) pool.emplace_back(work, w);
    work(0);
    for (auto& th : pool) th.join();

    std::uint64_t total_hits = 0;
    for (std::uint64_t h : hits) total_hits += h;

    const double fraction = static_cast<double>(total_hits) / static_cast<double>(samples);
    const double std_error =
        std::sqrt(fraction * (1.0 - fraction) / static_cast<double>(samples));
    return McResult{fraction, std_error};
}

EmbeddingSet sample_vmf(int n, std::span<const double> mu, double kappa, std::size_t count,
                        std::uint64_t seed) {
    if (n < 2) throw DomainError("dimension must be >= 2");
    if (mu.size() != static_cast<std::size_t>(n)) {
        throw DomainError("mean direction has " + std::to_string(mu.size()) +
                          " components, expected " + std::to_string(n));
    }
    if (std::fabs(norm_of(mu.data(), mu.size()) - 1.0) > 1e-6) {
        throw DomainError("mean direction must be unit norm");
    }
    if (kappa < 0.0) throw DomainError("concentration must be >= 0");
    if (count < 2) throw DomainError("sample count must be >= 2");

    const auto dim = static_cast<std::size_t>(n);
    const WoodParams wp = wood_params(n, kappa);

    // Householder reflection mapping e1 to mu.
    std::vector<double> reflector(dim, 0.0);
    reflector[0] = 1.0;
    for (std::size_t k = 0; k < dim; ++k) reflector[k] -= mu[k];
    const double rnorm = norm_of(reflector.data(), dim);
    const bool reflect = rnorm > 1e-12;
    if (reflect) {
        for (std::size_t k = 0; k < dim; ++k) reflector[k] /= rnorm;
    }

    std::vector<double> data(count * dim);
    for (std::size_t i = 0; i < count; ++i) {
        CounterRng rng(seed, i);
        double* row = data.data() + i * dim;
        vmf_row_about_e1(rng, kappa, wp.b, wp.x0, wp.c, row, dim);
        if (reflect) {
            double proj = 0.0;
            for (std::size_t k = 0; k < dim; ++k) proj += reflector[k] * row[k];
            for (std::size_t k = 0; k < dim; ++k) row[k] -= 2.0 * proj * reflector[k];
        }
        const double norm = norm_of(row, dim);
        for (std::size_t k = 0; k < dim; ++k) row[k] /= norm;
    }
    return EmbeddingSet(std::move(data), count, dim, true);
}

SynthDataset synth_identities(int dim, std::size_t identities, std::size_t per_identity,
                              double kappa, std::uint64_t seed) {
    if (dim < 2) throw DomainError("dimension must be >= 2");
    if (identities == 0 || per_identity == 0) {
        throw DomainError("identities and per-identity counts must be positive");
    }
    if (identities * per_identity < 2) {
        throw DomainError("dataset needs at least 2 rows");
    }
    if (kappa < 0.0) throw DomainError("concentration must be >= 0");

    const auto d = static_cast<std::size_t>(dim);
    const std::uint64_t mean_seed = derive_seed(seed, 0);
    const std::uint64_t member_seed = derive_seed(seed, 1);
    const WoodParams wp = wood_params(dim, kappa);

    std::vector<double> data(identities * per_identity * d);
    LabelTable labels;
    std::vector<double> mean(d);
    for (std::size_t id = 0; id < identities; ++id) {
        CounterRng mean_rng(mean_seed, id);
        uniform_direction(mean_rng, mean.data(), d);

        std::vector<double> reflector(d, 0.0);
        reflector[0] = 1.0;
        for (std::size_t k = 0; k < d; ++k) reflector[k] -= mean[k];
        const double rnorm = norm_of(reflector.data(), d);
        const bool reflect = rnorm > 1e-12;
        if (reflect) {
            for (std::size_t k = 0; k < d; ++k) reflector[k] /= rnorm;
        }

        char name[32];
        std::snprintf(name, sizeof name, "id%05zu", id);
        for (std::size_t j = 0; j < per_identity; ++j) {
            const std::size_t row_index = id * per_identity + j;
            CounterRng rng(member_seed, row_index);
            double* row = data.data() + row_index * d;
            vmf_row_about_e1(rng, kappa, wp.b, wp.x0, wp.c, row, d);
            if (reflect) {
                double proj = 0.0;
                for (std::size_t k = 0; k < d; ++k) proj += reflector[k] * row[k];
                for (std::size_t k = 0; k < d; ++k) row[k] -= 2.0 * proj * reflector[k];
            }
            const double norm = norm_of(row, d);
            for (std::size_t k = 0; k < d; ++k) row[k] /= norm;
            labels.insert(row_index, LabelTable::Record{name, {}});
        }
    }
    return SynthDataset{EmbeddingSet(std::move(data), identities * per_identity, d, true),
                        std::move(labels)};
}

}  // namespace capest
