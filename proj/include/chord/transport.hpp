#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "chord/chord_field.hpp"

namespace chord {

constexpr double kDivergenceNorm = 1e6;

struct TransportResult {
    Vec x_pred;
    Vec x_out;
    Vec u_hat;
    std::vector<TimedVec> fields_queried;
    double energy = 0.0;
};

enum class FieldKind { naive, chord };
const char* to_string(FieldKind k);

// The editing field x -> u(x, t) with a frozen noise batch, so it is a
// deterministic function of (x, t). The anchor of each query is x itself.
class EditField {
public:
    EditField(const BackboneModel& model, const ChordParams& params, FieldKind kind, uint64_t seed);
    EditField(const BackboneModel& model, const ChordParams& params, FieldKind kind, SharedNoiseBatch batch,
              SharedNoiseBatch prev_batch);

    Vec operator()(const Vec& x, double t) const;
    // Same field, also returning the proxy values it consumed.
    Vec evaluate(const Vec& x, double t, std::vector<TimedVec>* queried) const;

    FieldKind kind() const { return kind_; }
    const ChordParams& params() const { return params_; }

private:
    const BackboneModel* model_;
    ChordParams params_;
    FieldKind kind_;
    SharedNoiseBatch batch_;
    SharedNoiseBatch prev_batch_;
};

using FieldFn = std::function<Vec(const Vec&, double)>;

TransportResult chordedit(const BackboneModel& model, const Vec& x_src, const ChordParams& params, uint64_t seed);
TransportResult chordedit_multi_noise(const BackboneModel& model, const Vec& x_src, const ChordParams& params,
                                      uint64_t seed);

// Explicit-noise forms: `batch` serves time t, `prev_batch` time t - delta.
TransportResult chordedit(const BackboneModel& model, const Vec& x_src, const ChordParams& params,
                          const SharedNoiseBatch& batch, const SharedNoiseBatch& prev_batch, const Vec& prox_eps);
TransportResult chordedit_multi_noise(const BackboneModel& model, const Vec& x_src, const ChordParams& params,
                                      const SharedNoiseBatch& batch, const SharedNoiseBatch& prev_batch,
                                      const Vec& prox_eps);

// Prox draw for a transport seed (separate sub-stream).
Vec prox_noise(const ChordParams& params, uint64_t seed, int dim);
Vec proximal_refine(const BackboneModel& model, const Vec& x_pred, double t_c, const Vec& eps_fixed);
Vec proximal_refine(const BackboneModel& model, const Vec& x_pred, double t_c, uint64_t seed);

struct MultiStepOptions {
    // March query time across [t - delta, t] instead of holding it at t.
    bool time_marching = false;
};

struct MultiStepResult {
    std::vector<Vec> trajectory;  // S + 1 states
    std::vector<Vec> fields;      // S applied fields
};

MultiStepResult multi_step_transport(const BackboneModel& model, const Vec& x_src, const ChordParams& params, int S,
                                     FieldKind kind, uint64_t seed, const MultiStepOptions& opts = {});

Vec rk4_solve(const FieldFn& f, const Vec& x0, double t_from, double t_to, int steps);
Vec euler_solve(const FieldFn& f, const Vec& x0, double t_from, double t_to, int steps);

Vec reference_solve(const BackboneModel& model, const Vec& x0, Condition c, double t_from, double t_to, int steps);

struct ParticleSet {
    std::vector<Vec> points;
    uint64_t seed = 0;
    std::string sampler;
};

ParticleSet sample_particles(const GaussianMixture& m, int count, uint64_t seed);

// Distance from x to the closest component mean.
double distance_to_nearest_mode(const GaussianMixture& m, const Vec& x);

void check_bounded(const Vec& x, const Vec& last_valid, const std::string& where);

}  // namespace chord
