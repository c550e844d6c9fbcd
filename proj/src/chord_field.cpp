#include "chord/chord_field.hpp"

#include <cmath>

namespace chord {

void ChordParams::validate() const {
    for (double v : {t, delta, lambda, t_c})
        if (!std::isfinite(v)) throw ConfigError("chord parameters must be finite");
    if (!(t > 0.0 && t <= 1.0)) throw ConfigError("chord t must be in (0, 1]");
    if (!(delta >= 0.0) || t - delta < 0.0) throw ConfigError("chord delta must satisfy 0 <= delta <= t");
    if (!(lambda >= 0.0)) throw ConfigError("chord lambda must be >= 0");
    if (!(t_c > 0.0 && t_c < 1.0)) throw ConfigError("chord t_c must be in (0, 1)");
    if (n < 1) throw ConfigError("chord n must be >= 1");
}

Vec chord_field(const Vec& r_prev, const Vec& r_curr, double t, double delta) {
    if (r_prev.size() != r_curr.size()) throw DomainError("chord_field: dimension mismatch");
    if (!(t + delta > 0.0)) throw DomainError("chord_field: t + delta must be positive");
    if (delta == 0.0) return r_prev;
    const double wp = t / (t + delta);
    const double wc = delta / (t + delta);
    return wp * r_prev + wc * r_curr;
}

WindowIntegral window_integral(const std::vector<TimedVec>& window) {
    WindowIntegral out{Vec::Zero(window.empty() ? 0 : window.front().value.size()), 0.0};
    for (size_t j = 1; j < window.size(); ++j) {
        const double h = window[j].time - window[j - 1].time;
        out.integral += 0.5 * h * (window[j].value + window[j - 1].value);
        out.weight += h;
    }
    return out;
}

namespace {

void check_window(const std::vector<TimedVec>& window, double t, double delta) {
    if (delta == 0.0) return;
    if (window.size() < 2) throw DomainError("window needs >= 2 samples when delta > 0");
    const double tol = 1e-12 * std::max(1.0, t);
    for (size_t j = 0; j < window.size(); ++j) {
        if (window[j].time < t - delta - tol || window[j].time > t + tol)
            throw DomainError("window sample time outside [t - delta, t]");
        if (j > 0 && !(window[j].time > window[j - 1].time)) throw DomainError("window times must ascend");
    }
}

}  // namespace

double surrogate_objective(const Vec& u, const Vec& u_prev, const std::vector<TimedVec>& window, double t,
                           double delta) {
    check_window(window, t, delta);
    double phi = t * (u - u_prev).squaredNorm();
    if (delta == 0.0) return phi;
    for (size_t j = 1; j < window.size(); ++j) {
        const double h = window[j].time - window[j - 1].time;
        phi += 0.5 * h * ((u - window[j].value).squaredNorm() + (u - window[j - 1].value).squaredNorm());
    }
    return phi;
}

Vec window_minimizer(const Vec& u_prev, const std::vector<TimedVec>& window, double t, double delta) {
    check_window(window, t, delta);
    if (delta == 0.0) return u_prev;
    const WindowIntegral w = window_integral(window);
    return (t * u_prev + w.integral) / (t + w.weight);
}

SmoothingKernel::SmoothingKernel(std::vector<double> masses, double grid_step)
    : masses_(std::move(masses)), step_(grid_step) {
    if (!(step_ > 0.0)) throw DomainError("kernel grid_step must be positive");
    if (masses_.empty()) throw DomainError("kernel needs at least one tap");
    double total = 0.0;
    for (double m : masses_) {
        if (!(m >= 0.0)) throw DomainError("kernel weights must be non-negative");
        total += m;
    }
    if (std::abs(total - 1.0) > 1e-12) throw DomainError("kernel must have unit mass");
}

namespace {

size_t lag_count(double width, double step) {
    const double m = width / step;
    const double r = std::round(m);
    if (std::abs(m - r) > 1e-9 * std::max(1.0, m)) throw DomainError("kernel width must be a multiple of grid_step");
    return size_t(r);
}

SmoothingKernel normalized(std::vector<double> raw, double step) {
    double total = 0.0;
    for (double v : raw) total += v;
    for (double& v : raw) v /= total;
    return SmoothingKernel(std::move(raw), step);
}

}  // namespace

SmoothingKernel SmoothingKernel::dirac(double grid_step) { return SmoothingKernel({1.0}, grid_step); }

SmoothingKernel SmoothingKernel::two_tap(double t, double delta, double grid_step) {
    const size_t m = lag_count(delta, grid_step);
    if (m == 0) return dirac(grid_step);
    std::vector<double> w(m + 1, 0.0);
    w[0] = delta / (t + delta);
    w[m] = t / (t + delta);
    return SmoothingKernel(std::move(w), grid_step);
}

SmoothingKernel SmoothingKernel::box(double width, double grid_step) {
    return normalized(std::vector<double>(lag_count(width, grid_step) + 1, 1.0), grid_step);
}

SmoothingKernel SmoothingKernel::triangular(double width, double grid_step) {
    const size_t m = lag_count(width, grid_step);
    std::vector<double> w(m + 1);
    for (size_t i = 0; i <= m; ++i) w[i] = double(m + 1 - i);
    return normalized(std::move(w), grid_step);
}

SmoothingKernel SmoothingKernel::exponential(double width, double decay, double grid_step) {
    const size_t m = lag_count(width, grid_step);
    std::vector<double> w(m + 1);
    for (size_t i = 0; i <= m; ++i) w[i] = std::exp(-decay * double(i) / double(std::max<size_t>(m, 1)));
    return normalized(std::move(w), grid_step);
}

std::vector<double> SmoothingKernel::weights() const {
    std::vector<double> w(masses_);
    for (double& v : w) v /= step_;
    return w;
}

std::vector<std::pair<std::string, SmoothingKernel>> causal_kernels(double width, double grid_step) {
    return {{"two_tap", SmoothingKernel::two_tap(0.9, width, grid_step)},
            {"box", SmoothingKernel::box(width, grid_step)},
            {"triangular", SmoothingKernel::triangular(width, grid_step)},
            {"exponential", SmoothingKernel::exponential(width, 3.0, grid_step)}};
}

std::vector<TimedVec> kernel_smooth(const std::vector<TimedVec>& series, const SmoothingKernel& kernel) {
    const size_t m = kernel.support();
    if (series.size() < m) throw DomainError("series shorter than kernel support");
    const double ds = kernel.grid_step();
    for (size_t j = 1; j < series.size(); ++j) {
        const double h = series[j].time - series[j - 1].time;
        if (std::abs(h - ds) > 1e-9 * ds) throw DomainError("series grid step does not match kernel grid_step");
    }
    const auto& w = kernel.masses();
    std::vector<TimedVec> out;
    out.reserve(series.size() - m + 1);
    for (size_t j = m - 1; j < series.size(); ++j) {
        Vec acc = w[0] * series[j].value;
        for (size_t i = 1; i < m; ++i)
            if (w[i] != 0.0) acc += w[i] * series[j - i].value;
        out.push_back({series[j].time, std::move(acc)});
    }
    return out;
}

std::vector<TimedVec> recursive_chord_series(const std::vector<TimedVec>& series) {
    std::vector<TimedVec> out;
    if (series.empty()) return out;
    out.push_back(series.front());
    for (size_t j = 1; j < series.size(); ++j) {
        const double t = series[j].time;
        const double ds = t - series[j - 1].time;
        out.push_back({t, (t * out.back().value + ds * series[j].value) / (t + ds)});
    }
    return out;
}

}  // namespace chord
