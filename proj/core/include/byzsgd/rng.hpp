#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace byzsgd {

/// Mixes a base seed with a stream id so that each node or purpose gets an
/// independent, reproducible generator.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept;

/// Seeded generator with platform-independent transforms.
///
/// The standard distributions are implementation-defined, which would make
/// traces differ between standard libraries. The engine is std::mt19937_64;
/// the uniform/normal/index transforms are defined here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, 1).
    double uniform();
    /// Standard normal (Box-Muller, cached pair).
    double normal();
    /// Uniform integer in [0, bound), bound > 0, unbiased.
    std::size_t below(std::size_t bound);

private:
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

} // namespace byzsgd
