#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "chord/config.hpp"
#include "chord/diagnostics.hpp"

namespace chord {

namespace exit_code {
constexpr int ok = 0;
constexpr int invariant_failure = 1;
constexpr int usage = 2;
constexpr int divergence = 3;
}  // namespace exit_code

// Runs fn(0..n-1) on a thread pool; fn must only write its own slot.
void parallel_for(size_t n, const std::function<void(size_t)>& fn);

struct MethodStats {
    double mean_distance = 0.0;
    double std_distance = 0.0;
    double energy = 0.0;  // mean per-particle bb_energy
    int diverged = 0;
    std::vector<Vec> points;  // transported particles (last valid state if diverged)
    std::vector<bool> ok;
};

struct ToyResult {
    ParticleSet before;
    MethodStats naive;
    MethodStats chord;
};

// Transport-only (pre-prox) particle experiment under both fields.
ToyResult toy_transport(const BackboneModel& model, const ChordParams& params, const ParticleSet& particles, int S,
                        uint64_t seed);

struct SweepRow {
    int S;
    FieldKind method;
    double energy;
    double endpoint_error;
    int diverged;
};

// Endpoint error is measured against a fine RK4 solve of the same field over
// the step horizon [0, lambda].
std::vector<SweepRow> step_sweep(const BackboneModel& model, const ChordParams& params, const std::vector<int>& S_list,
                                 const ParticleSet& particles, uint64_t seed, int reference_steps = 200);

struct AblationRow {
    int n;
    uint64_t seed;
    FieldKind method;
    double endpoint_error;  // distance of x_out to the nearest target mode
    double energy;
};

// Full chordedit per (n, seed); naive is the delta = 0 degenerate window.
std::vector<AblationRow> noise_ablation(const BackboneModel& model, const ChordParams& params,
                                        const std::vector<int>& n_list, const std::vector<uint64_t>& seeds,
                                        const Vec& x_src, const std::vector<FieldKind>& methods);

struct Dispersion {
    double mean;
    double std;
    double cov;
    size_t count;
};
Dispersion dispersion(const std::vector<AblationRow>& rows, int n, FieldKind method);

struct LteSample {
    Vec x;
    double t;
    LteResult coarse;  // step h
    LteResult fine;    // step h / 2
};

std::vector<LteSample> lte_suite(const BackboneModel& model, const ChordParams& params, FieldKind kind, int states,
                                 double h, uint64_t seed);

struct GlobalErrorPair {
    GlobalErrorResult naive;
    GlobalErrorResult chord;
    double ratio;  // chord / naive error at the smallest h
};

// Time-marching Euler over [delta, t] from x0 under both fields.
GlobalErrorPair global_error_pair(const BackboneModel& model, const ChordParams& params, const Vec& x0,
                                  const std::vector<int>& step_counts, uint64_t seed, int reference_steps = 4000);

// Spatial box around all source/target modes, padded by `pad`.
Domain preset_domain(const BackboneModel& model, double t_lo, double t_hi, double pad = 1.0);

struct FieldRegularity {
    ConsistencyParts naive;
    ConsistencyParts chord;
};

// Chord on [t_lo, t_hi]; naive on the window-extended [t_lo - delta, t_hi]
// with the same time step so every chord grid value is a combination of
// naive grid values.
FieldRegularity field_regularity(const BackboneModel& model, const ChordParams& params, double t_lo, double t_hi,
                                 int grid, uint64_t seed);

struct RunContext {
    Json config;
    uint64_t seed = 0;
    std::string out_dir = ".";
    std::string base_dir = ".";
    std::ostream* log = nullptr;
};

int run_experiment(const std::string& name, const RunContext& ctx);
int run_coeffs(const RunContext& ctx);
int run_toy(const RunContext& ctx);
int run_step_sweep(const RunContext& ctx);
int run_noise_ablation(const RunContext& ctx);
int run_risk(const RunContext& ctx);
int run_error_order(const RunContext& ctx);
int run_diagnostics(const RunContext& ctx);

std::vector<std::string> experiment_names();

}  // namespace chord
