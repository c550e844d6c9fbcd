#pragma once

#include <vector>

#include "chord/proxy.hpp"

namespace chord {

struct ChordParams {
    double t = 0.90;
    double delta = 0.15;
    double lambda = 1.00;
    double t_c = 0.30;
    int n = 1;
    bool use_prox = true;
    // Draw the t - delta query from its own noise stream (ablation).
    bool decouple_times = false;
    // Reuse the transport's first draw for the prox instead of a separate stream.
    bool prox_shares_noise = false;

    void validate() const;
};

Vec chord_field(const Vec& r_prev, const Vec& r_curr, double t, double delta);

// Trapezoid integral of the samples and the total quadrature weight.
struct WindowIntegral {
    Vec integral;
    double weight;
};
WindowIntegral window_integral(const std::vector<TimedVec>& window);

double surrogate_objective(const Vec& u, const Vec& u_prev, const std::vector<TimedVec>& window, double t,
                           double delta);
Vec window_minimizer(const Vec& u_prev, const std::vector<TimedVec>& window, double t, double delta);

// Causal kernel on lags {0, ds, ..., (m-1) ds}. Stored as per-tap masses
// (density times ds) summing to one.
class SmoothingKernel {
public:
    SmoothingKernel(std::vector<double> masses, double grid_step);

    static SmoothingKernel dirac(double grid_step);
    static SmoothingKernel two_tap(double t, double delta, double grid_step);
    static SmoothingKernel box(double width, double grid_step);
    static SmoothingKernel triangular(double width, double grid_step);
    static SmoothingKernel exponential(double width, double decay, double grid_step);

    const std::vector<double>& masses() const { return masses_; }
    std::vector<double> weights() const;
    double grid_step() const { return step_; }
    size_t support() const { return masses_.size(); }
    bool is_dirac() const { return masses_.size() == 1; }

private:
    std::vector<double> masses_;
    double step_;
};

// Every shipped causal kernel at the given bandwidth.
std::vector<std::pair<std::string, SmoothingKernel>> causal_kernels(double width, double grid_step);

std::vector<TimedVec> kernel_smooth(const std::vector<TimedVec>& series, const SmoothingKernel& kernel);

// Fully recursive window estimator u_t = (t u_{t-ds} + ds R_t)/(t + ds) on a
// uniform series, seeded with u = R at the first sample. Diagnostics only.
std::vector<TimedVec> recursive_chord_series(const std::vector<TimedVec>& series);

}  // namespace chord
