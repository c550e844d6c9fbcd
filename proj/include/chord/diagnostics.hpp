#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chord/transport.hpp"

namespace chord {

double bb_energy(const std::vector<Vec>& fields, int dim);

// Axis-aligned box in space times a time interval.
struct Domain {
    Vec lo;
    Vec hi;
    double t_lo;
    double t_hi;
};

struct ConsistencyParts {
    double value;     // dt_sup + grad_sup * field_sup
    double dt_sup;    // sup |d/dt u|
    double grad_sup;  // sup of the spectral norm of d/dx u
    double field_sup;
};

// Central differences of u sampled on a grid with `grid` points per axis.
// time_grid overrides the number of time samples (0 keeps `grid`).
ConsistencyParts consistency_proxy(const FieldFn& u, const Domain& domain, int grid, int time_grid = 0);
double stability_margin(const FieldFn& u, const Domain& domain, int grid);

// Same quantities for a field already sampled on a space-time grid with one
// spatial axis: values[j][k] is u(x_k, t_j).
struct GridSeries {
    std::vector<double> x;
    std::vector<double> t;
    std::vector<std::vector<Vec>> values;
};

struct GridMetrics {
    double l2_energy;   // sum_j sum_k |u|^2 dt dx
    double linf;        // max |u|
    double linf_dt;     // max |central time difference|
    double lipschitz;   // max |central space difference|
    ConsistencyParts consistency;
};

GridMetrics grid_metrics(const GridSeries& g);
GridSeries smooth_in_time(const GridSeries& g, const SmoothingKernel& kernel);

struct LteResult {
    double observed;
    double bound;
    double m_f;
};

struct LteOptions {
    int reference_steps = 200;
    int trajectory_samples = 17;
    double fd_eps = 1e-5;
    double box_pad = 0.05;  // relative padding of the sampled box around the trajectory
};

LteResult lte_check(const FieldFn& u, const Vec& x, double t, double h, const LteOptions& opts = {});

struct GlobalErrorResult {
    std::vector<double> h;
    std::vector<double> errors;
    std::vector<bool> diverged;
    double slope = 0.0;
    bool exact = false;  // every error is zero; slope undefined
    std::string notes;
};

GlobalErrorResult global_error_sweep(const FieldFn& u, const Vec& x0, double t_from, double t_to,
                                     const std::vector<double>& h_values, int reference_steps = 4000);

struct RiskResult {
    double mse_naive;
    double mse_chord;
    double se_naive;  // standard error over trials
    double se_chord;
    double se_gap;    // standard error of mse_naive - mse_chord
};

// u_star sampled on a uniform grid; noise is i.i.d. N(0, noise_sigma^2) per coordinate.
RiskResult risk_experiment(const std::vector<TimedVec>& u_star, double noise_sigma, const SmoothingKernel& kernel,
                           int trials, uint64_t seed);

struct ProjectionGap {
    double energy_orig;
    double energy_proj;
    double residual_energy;
};

// Least-squares projection onto controls that are constant on each segment of
// the grid_delta partition (straight-chord paths); uniform discrete L2 weight.
ProjectionGap projection_energy_gap(const std::vector<TimedVec>& u_star, double grid_delta);

struct DiagnosticsReport {
    std::string preset;
    double bb_energy_naive = 0.0;
    double bb_energy_chord = 0.0;
    double consistency_naive = 0.0;
    double consistency_chord = 0.0;
    double lipschitz_naive = 0.0;
    double lipschitz_bound = 0.0;  // chord
    double lte_observed = 0.0;
    double lte_bound = 0.0;
    double global_error_slope = 0.0;
    double global_error_ratio = 0.0;
    double risk_naive = 0.0;
    double risk_chord = 0.0;
    std::string notes;
};

}  // namespace chord
