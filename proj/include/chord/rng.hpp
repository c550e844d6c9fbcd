#pragma once

#include <array>
#include <cstdint>

#include "chord/types.hpp"

namespace chord {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> counter, std::array<uint32_t, 2> key);

// Named sub-streams of one seed. Every draw is addressed by
// (seed, stream, sample, coord) so results never depend on call order.
namespace stream {
constexpr uint64_t transport = 0;
constexpr uint64_t prox = 1;
constexpr uint64_t decoupled_time = 2;
constexpr uint64_t independent_condition = 3;
constexpr uint64_t particles = 16;
constexpr uint64_t risk_noise = 17;
constexpr uint64_t synthetic = 18;
}  // namespace stream

double uniform01(uint64_t seed, uint64_t stream, uint64_t sample, uint64_t coord);
double standard_normal(uint64_t seed, uint64_t stream, uint64_t sample, uint64_t coord);
Vec normal_vector(uint64_t seed, uint64_t stream, uint64_t sample, int dim);

// Child seed for sweep cells / particles.
uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b = 0);

}  // namespace chord
