#include "chord/rng.hpp"

#include <cmath>
#include <numbers>

namespace chord {

namespace {

constexpr uint32_t kMul0 = 0xD2511F53u;
constexpr uint32_t kMul1 = 0xCD9E8D57u;
constexpr uint32_t kWeyl0 = 0x9E3779B9u;
constexpr uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
    const uint64_t p = uint64_t(a) * uint64_t(b);
    hi = uint32_t(p >> 32);
    lo = uint32_t(p);
}

std::array<uint32_t, 4> block(uint64_t seed, uint64_t stream, uint64_t sample, uint64_t coord) {
    // sample and coord are folded into 32 bits each; stream takes the upper pair.
    std::array<uint32_t, 4> ctr{uint32_t(sample), uint32_t(coord), uint32_t(stream),
                                uint32_t(stream >> 32) ^ uint32_t(sample >> 32) ^ (uint32_t(coord >> 32) << 16)};
    return philox4x32(ctr, {uint32_t(seed), uint32_t(seed >> 32)});
}

inline double to_unit(uint32_t hi, uint32_t lo) {
    const uint64_t bits = ((uint64_t(hi) << 32) | lo) >> 11;
    return (double(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> c, std::array<uint32_t, 2> k) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            k[0] += kWeyl0;
            k[1] += kWeyl1;
        }
        uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, c[0], hi0, lo0);
        mulhilo(kMul1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
    return c;
}

double uniform01(uint64_t seed, uint64_t stream, uint64_t sample, uint64_t coord) {
    const auto w = block(seed, stream, sample, coord);
    return to_unit(w[0], w[1]);
}

double standard_normal(uint64_t seed, uint64_t stream, uint64_t sample, uint64_t coord) {
    const auto w = block(seed, stream, sample, coord);
    const double u1 = to_unit(w[0], w[1]);
    const double u2 = to_unit(w[2], w[3]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vec normal_vector(uint64_t seed, uint64_t stream, uint64_t sample, int dim) {
    Vec v(dim);
    for (int j = 0; j < dim; ++j) v[j] = standard_normal(seed, stream, sample, uint64_t(j));
    return v;
}

uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b) {
    const auto w = philox4x32({uint32_t(a), uint32_t(a >> 32), uint32_t(b), uint32_t(b >> 32)},
                              {uint32_t(seed), uint32_t(seed >> 32)});
    return (uint64_t(w[0]) << 32) | w[1];
}

}  // namespace chord
