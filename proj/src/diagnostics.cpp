#include "chord/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "chord/rng.hpp"

namespace chord {

double bb_energy(const std::vector<Vec>& fields, int dim) {
    if (fields.empty()) throw DomainError("bb_energy needs at least one field");
    if (dim < 1) throw DomainError("bb_energy needs dim >= 1");
    double total = 0.0;
    for (const auto& u : fields) total += u.squaredNorm();
    return total / (double(fields.size()) * double(dim));
}

namespace {

double spectral_norm(const Eigen::MatrixXd& J) {
    if (J.cols() == 1 || J.rows() == 1) return J.norm();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
    return svd.singularValues()(0);
}

}  // namespace

ConsistencyParts consistency_proxy(const FieldFn& u, const Domain& dom, int grid, int time_grid) {
    if (time_grid == 0) time_grid = grid;
    if (grid < 8 || time_grid < 8) throw DomainError("consistency grid needs >= 8 points per axis");
    const int d = int(dom.lo.size());
    if (dom.hi.size() != d || d < 1) throw DomainError("domain box dimension mismatch");
    for (int i = 0; i < d; ++i)
        if (!(dom.hi[i] > dom.lo[i])) throw DomainError("domain box must have positive extent");
    if (!(dom.t_hi > dom.t_lo)) throw DomainError("domain time interval must have positive length");

    // Axis 0 is time, axes 1..d are space; flat index is mixed-radix.
    const int axes = d + 1;
    std::vector<int> count(static_cast<size_t>(axes), grid);
    count[0] = time_grid;
    std::vector<double> step(static_cast<size_t>(axes));
    step[0] = (dom.t_hi - dom.t_lo) / double(time_grid - 1);
    for (int i = 0; i < d; ++i) step[size_t(i) + 1] = (dom.hi[i] - dom.lo[i]) / double(grid - 1);
    size_t total = 1;
    std::vector<size_t> stride(static_cast<size_t>(axes));
    for (int a = 0; a < axes; ++a) {
        stride[size_t(a)] = total;
        total *= size_t(count[size_t(a)]);
    }

    std::vector<Vec> vals(total);
    std::vector<int> idx(static_cast<size_t>(axes));
    for (size_t f = 0; f < total; ++f) {
        size_t rem = f;
        for (int a = 0; a < axes; ++a) {
            idx[size_t(a)] = int(rem % size_t(count[size_t(a)]));
            rem /= size_t(count[size_t(a)]);
        }
        const double t = dom.t_lo + idx[0] * step[0];
        Vec x(d);
        for (int i = 0; i < d; ++i) x[i] = dom.lo[i] + idx[size_t(i) + 1] * step[size_t(i) + 1];
        vals[f] = u(x, t);
    }

    ConsistencyParts p{0.0, 0.0, 0.0, 0.0};
    const int m = int(vals.front().size());
    Eigen::MatrixXd J(m, d);
    for (size_t f = 0; f < total; ++f) {
        p.field_sup = std::max(p.field_sup, vals[f].norm());
        size_t rem = f;
        bool interior = true;
        for (int a = 0; a < axes; ++a) {
            idx[size_t(a)] = int(rem % size_t(count[size_t(a)]));
            rem /= size_t(count[size_t(a)]);
            if (idx[size_t(a)] == 0 || idx[size_t(a)] == count[size_t(a)] - 1) interior = false;
        }
        if (!interior) continue;
        const Vec dt = (vals[f + stride[0]] - vals[f - stride[0]]) / (2.0 * step[0]);
        p.dt_sup = std::max(p.dt_sup, dt.norm());
        for (int i = 0; i < d; ++i) {
            const size_t s = stride[size_t(i) + 1];
            J.col(i) = (vals[f + s] - vals[f - s]) / (2.0 * step[size_t(i) + 1]);
        }
        p.grad_sup = std::max(p.grad_sup, spectral_norm(J));
    }
    p.value = p.dt_sup + p.grad_sup * p.field_sup;
    return p;
}

double stability_margin(const FieldFn& u, const Domain& domain, int grid) {
    return consistency_proxy(u, domain, grid).grad_sup;
}

GridMetrics grid_metrics(const GridSeries& g) {
    const size_t T = g.t.size(), X = g.x.size();
    if (T < 3 || X < 3 || g.values.size() != T) throw DomainError("grid series needs >= 3 points per axis");
    const double dt = g.t[1] - g.t[0];
    const double dx = g.x[1] - g.x[0];
    GridMetrics m{0.0, 0.0, 0.0, 0.0, {}};
    for (size_t j = 0; j < T; ++j) {
        if (g.values[j].size() != X) throw DomainError("grid series row size mismatch");
        for (size_t k = 0; k < X; ++k) {
            const Vec& v = g.values[j][k];
            m.l2_energy += v.squaredNorm() * dt * dx;
            m.linf = std::max(m.linf, v.norm());
            if (j > 0 && j + 1 < T)
                m.linf_dt = std::max(m.linf_dt, ((g.values[j + 1][k] - g.values[j - 1][k]) / (2.0 * dt)).norm());
            if (k > 0 && k + 1 < X)
                m.lipschitz = std::max(m.lipschitz, ((g.values[j][k + 1] - g.values[j][k - 1]) / (2.0 * dx)).norm());
        }
    }
    m.consistency = {m.linf_dt + m.lipschitz * m.linf, m.linf_dt, m.lipschitz, m.linf};
    return m;
}

GridSeries smooth_in_time(const GridSeries& g, const SmoothingKernel& kernel) {
    GridSeries out;
    out.x = g.x;
    const size_t X = g.x.size();
    std::vector<std::vector<TimedVec>> cols(X);
    for (size_t k = 0; k < X; ++k) {
        std::vector<TimedVec> series;
        series.reserve(g.t.size());
        for (size_t j = 0; j < g.t.size(); ++j) series.push_back({g.t[j], g.values[j][k]});
        cols[k] = kernel_smooth(series, kernel);
    }
    const size_t T = cols.front().size();
    out.values.assign(T, std::vector<Vec>(X));
    for (size_t j = 0; j < T; ++j) {
        out.t.push_back(cols.front()[j].time);
        for (size_t k = 0; k < X; ++k) out.values[j][k] = cols[k][j].value;
    }
    return out;
}

namespace {

// |d/dt u + (d/dx u) u| at (y, s) by central differences.
double material_derivative(const FieldFn& u, const Vec& y, double s, double eps) {
    const Vec v = u(y, s);
    const double tp = std::min(s + eps, 1.0), tm = std::max(s - eps, 0.0);
    Vec acc = (u(y, tp) - u(y, tm)) / (tp - tm);
    const double speed = v.norm();
    if (speed > 0.0) {
        const double hx = eps * std::max(1.0, y.norm());
        const Vec dir = v / speed;
        acc += speed * (u(y + hx * dir, s) - u(y - hx * dir, s)) / (2.0 * hx);
    }
    return acc.norm();
}

}  // namespace

LteResult lte_check(const FieldFn& u, const Vec& x, double t, double h, const LteOptions& opts) {
    if (!(h > 0.0)) throw DomainError("lte_check needs h > 0");
    const int K = std::max(opts.trajectory_samples, 2);
    const int per = std::max(1, (opts.reference_steps + K - 2) / (K - 1));
    const double dh = h / double(K - 1);

    std::vector<Vec> path{x};
    for (int i = 1; i < K; ++i)
        path.push_back(rk4_solve(u, path.back(), t + (i - 1) * dh, t + i * dh, per));

    LteResult r{};
    r.observed = (path.back() - (x + h * u(x, t))).norm();

    double mf = 0.0;
    for (int i = 0; i < K; ++i) mf = std::max(mf, material_derivative(u, path[size_t(i)], t + i * dh, opts.fd_eps));

    // Padded bounding box of the exact trajectory, 3 points per axis.
    const int d = int(x.size());
    Vec lo = path.front(), hi = path.front();
    for (const auto& p : path) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const Vec pad = (opts.box_pad * (hi - lo)).cwiseMax(1e-6);
    lo -= pad;
    hi += pad;
    size_t total = 1;
    for (int a = 0; a <= d; ++a) total *= 3;
    for (size_t f = 0; f < total; ++f) {
        size_t rem = f;
        const double s = t + 0.5 * h * double(rem % 3);
        rem /= 3;
        Vec y(d);
        for (int i = 0; i < d; ++i) {
            y[i] = lo[i] + 0.5 * (hi[i] - lo[i]) * double(rem % 3);
            rem /= 3;
        }
        mf = std::max(mf, material_derivative(u, y, s, opts.fd_eps));
    }
    r.m_f = mf;
    r.bound = 0.5 * h * h * mf;
    return r;
}

GlobalErrorResult global_error_sweep(const FieldFn& u, const Vec& x0, double t_from, double t_to,
                                     const std::vector<double>& h_values, int reference_steps) {
    std::vector<double> hs(h_values);
    std::sort(hs.begin(), hs.end());
    hs.erase(std::unique(hs.begin(), hs.end()), hs.end());
    if (hs.size() < 4 || hs.back() / hs.front() < 8.0 - 1e-12)
        throw DomainError("global_error_sweep needs >= 4 distinct h spanning >= 8x");
    const double span = t_to - t_from;

    GlobalErrorResult res;
    const Vec ref = rk4_solve(u, x0, t_from, t_to, reference_steps);
    for (double h : hs) {
        const double n = span / h;
        const int steps = int(std::lround(n));
        if (steps < 1 || std::abs(n - steps) > 1e-9 * std::max(1.0, n))
            throw DomainError("h must divide the integration interval");
        res.h.push_back(h);
        try {
            res.errors.push_back((euler_solve(u, x0, t_from, t_to, steps) - ref).norm());
            res.diverged.push_back(false);
        } catch (const DivergenceError&) {
            res.errors.push_back(std::numeric_limits<double>::infinity());
            res.diverged.push_back(true);
            res.notes += "diverged at h=" + std::to_string(h) + "; ";
        }
    }

    // Below this the Euler and reference endpoints agree to rounding.
    const double floor = 1e-12 * std::max(1.0, ref.norm() + x0.norm());
    std::vector<double> lx, ly;
    bool all_zero = true;
    for (size_t i = 0; i < res.h.size(); ++i) {
        if (res.diverged[i]) continue;
        if (res.errors[i] > floor) {
            all_zero = false;
            lx.push_back(std::log(res.h[i]));
            ly.push_back(std::log(res.errors[i]));
        }
    }
    res.exact = all_zero;
    if (lx.size() >= 2) {
        double mx = 0, my = 0;
        for (size_t i = 0; i < lx.size(); ++i) {
            mx += lx[i];
            my += ly[i];
        }
        mx /= double(lx.size());
        my /= double(ly.size());
        double sxy = 0, sxx = 0;
        for (size_t i = 0; i < lx.size(); ++i) {
            sxy += (lx[i] - mx) * (ly[i] - my);
            sxx += (lx[i] - mx) * (lx[i] - mx);
        }
        res.slope = sxy / sxx;
    } else if (!all_zero) {
        res.notes += "fewer than 2 usable points for slope fit; ";
    }
    return res;
}

namespace {

double series_error(const std::vector<TimedVec>& est, size_t offset, const std::vector<TimedVec>& truth) {
    double total = 0.0;
    for (size_t j = 0; j < est.size(); ++j) total += (est[j].value - truth[j + offset].value).squaredNorm();
    return total / double(est.size());
}

struct MeanSe {
    double mean;
    double se;
};

MeanSe mean_se(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= double(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return {m, std::sqrt(ss / double(v.size() - 1) / double(v.size()))};
}

}  // namespace

RiskResult risk_experiment(const std::vector<TimedVec>& u_star, double noise_sigma, const SmoothingKernel& kernel,
                           int trials, uint64_t seed) {
    if (trials < 100) throw DomainError("risk_experiment needs trials >= 100");
    if (!(noise_sigma >= 0.0)) throw DomainError("noise_sigma must be >= 0");
    const size_t m = kernel.support();
    if (u_star.size() < m) throw DomainError("series too short for kernel support");
    const int d = int(u_star.front().value.size());
    const size_t offset = m - 1;

    // Both estimators are scored on the points where the kernel has full support.
    std::vector<TimedVec> interior(u_star.begin() + long(offset), u_star.end());
    const size_t nt = static_cast<size_t>(trials);
    std::vector<double> naive(nt), smooth(nt), gap(nt);
    for (int k = 0; k < trials; ++k) {
        std::vector<TimedVec> noisy(u_star);
        for (size_t j = 0; j < noisy.size(); ++j)
            for (int c = 0; c < d; ++c)
                noisy[j].value[c] += noise_sigma * standard_normal(seed, stream::risk_noise, uint64_t(k), j * d + c);
        const std::vector<TimedVec> raw(noisy.begin() + long(offset), noisy.end());
        naive[size_t(k)] = series_error(raw, offset, u_star);
        smooth[size_t(k)] = series_error(kernel_smooth(noisy, kernel), offset, u_star);
        gap[size_t(k)] = naive[size_t(k)] - smooth[size_t(k)];
    }
    const MeanSe a = mean_se(naive), b = mean_se(smooth), g = mean_se(gap);
    return {a.mean, b.mean, a.se, b.se, g.se};
}

ProjectionGap projection_energy_gap(const std::vector<TimedVec>& u, double grid_delta) {
    if (u.size() < 2) throw DomainError("projection needs >= 2 samples");
    if (!(grid_delta > 0.0)) throw DomainError("grid_delta must be positive");
    const double dt = u[1].time - u[0].time;
    const double span = u.back().time - u.front().time;
    const double segs = span / grid_delta;
    const size_t S = size_t(std::lround(segs));
    if (S < 1 || std::abs(segs - double(S)) > 1e-9 * std::max(1.0, segs))
        throw DomainError("grid_delta must divide the series span");

    // Segment s covers [t0 + s delta, t0 + (s+1) delta); the last one is closed.
    std::vector<size_t> seg(u.size());
    std::vector<size_t> count(S, 0);
    for (size_t j = 0; j < u.size(); ++j) {
        size_t s = size_t(std::floor(double(j) * dt / grid_delta + 1e-9));
        seg[j] = std::min(s, S - 1);
        ++count[seg[j]];
    }
    for (size_t c : count)
        if (c < 2) throw DomainError("each projection segment needs >= 2 samples");

    const int d = int(u.front().value.size());
    std::vector<Vec> mean(S, Vec::Zero(d));
    for (size_t j = 0; j < u.size(); ++j) mean[seg[j]] += u[j].value;
    for (size_t s = 0; s < S; ++s) mean[s] /= double(count[s]);

    ProjectionGap g{0.0, 0.0, 0.0};
    for (size_t j = 0; j < u.size(); ++j) {
        g.energy_orig += u[j].value.squaredNorm() * dt;
        g.energy_proj += mean[seg[j]].squaredNorm() * dt;
        g.residual_energy += (u[j].value - mean[seg[j]]).squaredNorm() * dt;
    }
    return g;
}

}  // namespace chord
