#pragma once

#include <cstdint>
#include <random>

namespace gdcert {

// Seedable generator with a fixed, documented algorithm so that traces are
// bit-reproducible on a given platform:
//   * engine: std::mt19937_64 (fully specified by the standard)
//   * uniform: top 53 bits of one engine draw, mapped to (0, 1)
//   * normal: Marsaglia polar method, caching the second variate
// std::normal_distribution is deliberately not used; its algorithm is
// implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on the open interval (0, 1).
    double uniform() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal();

    // +1 or -1 with equal probability.
    double sign() { return (engine_() >> 63) != 0 ? 1.0 : -1.0; }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Child seed for work item (a, b) under a master seed. Independent of
// scheduling order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

}  // namespace gdcert
