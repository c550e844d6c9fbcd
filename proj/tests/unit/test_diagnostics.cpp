#include <doctest.h>

#include <cmath>

#include "chord/diagnostics.hpp"
#include "chord/experiments.hpp"
#include "chord/rng.hpp"

using namespace chord;
using doctest::Approx;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

Domain unit_box() { return {v2(-1, -1), v2(1, 1), 0.2, 0.8}; }

std::vector<TimedVec> series(int points, const std::function<Vec(double)>& f) {
    std::vector<TimedVec> s;
    for (int j = 0; j < points; ++j) {
        const double t = j / double(points - 1);
        s.push_back({t, f(t)});
    }
    return s;
}

}  // namespace

TEST_CASE("kinetic energy examples") {
    CHECK(bb_energy({Vec::Zero(2), Vec::Zero(2)}, 2) == 0.0);
    CHECK(bb_energy({v2(1, -1), v2(-1, -1), v2(1, 1)}, 2) == 1.0);
    CHECK_THROWS_AS(bb_energy({}, 2), DomainError);
    for (const auto& name : preset_names()) {
        const BackboneModel model = load_preset(name);
        const ChordParams p;
        const ParticleSet ps = sample_particles(model.source, 20, 8);
        for (size_t i = 0; i < ps.points.size(); ++i) {
            const double en =
                bb_energy(multi_step_transport(model, ps.points[i], p, 1, FieldKind::naive, i).fields, model.dim());
            const double ec =
                bb_energy(multi_step_transport(model, ps.points[i], p, 1, FieldKind::chord, i).fields, model.dim());
            CHECK(ec <= en);
        }
    }
}

TEST_CASE("consistency proxy examples") {
    const FieldFn constant = [](const Vec&, double) { return v2(3, -4); };
    const ConsistencyParts c = consistency_proxy(constant, unit_box(), 9);
    CHECK(c.value == 0.0);
    CHECK(c.field_sup == Approx(5.0));

    const Vec a = v2(0.6, -0.8);
    const FieldFn ramp = [&](const Vec&, double t) { return Vec(a * t); };
    const ConsistencyParts r = consistency_proxy(ramp, unit_box(), 9);
    CHECK(r.value == Approx(a.norm()).epsilon(1e-9));
    CHECK(r.grad_sup == Approx(0.0).scale(1.0));
}

TEST_CASE("stability margin examples") {
    const FieldFn constant = [](const Vec&, double) { return v2(1, 2); };
    CHECK(stability_margin(constant, unit_box(), 9) == 0.0);

    Eigen::Matrix2d J;
    J << 0.3, -1.2, 0.7, 0.1;
    const FieldFn affine = [&](const Vec& x, double t) { return Vec(J * x + v2(t, 1)); };
    const double want = Eigen::JacobiSVD<Eigen::Matrix2d>(J).singularValues()[0];
    CHECK(stability_margin(affine, unit_box(), 9) == Approx(want).epsilon(1e-6));
}

TEST_CASE("chord field is no less stable than the naive field it averages") {
    const ChordParams p;
    for (const auto& name : preset_names()) {
        const FieldRegularity r = field_regularity(load_preset(name), p, p.delta + 0.05, p.t, 8, 3);
        CHECK(r.chord.grad_sup <= r.naive.grad_sup * (1.0 + 1e-3));
        CHECK(r.chord.value <= r.naive.value * (1.0 + 1e-9));
    }
}

TEST_CASE("temporal smoothing does not raise the consistency constant") {
    for (int i = 0; i < 20; ++i) {
        GridSeries g;
        for (int k = 0; k < 17; ++k) g.x.push_back(-1.0 + k / 8.0);
        for (int j = 0; j < 101; ++j) g.t.push_back(j / 100.0);
        const double w = 2.0 + 10.0 * uniform01(6, 0, uint64_t(i), 0);
        const double kx = 3.0 * uniform01(6, 0, uint64_t(i), 1);
        g.values.assign(g.t.size(), std::vector<Vec>(g.x.size()));
        for (size_t j = 0; j < g.t.size(); ++j)
            for (size_t k = 0; k < g.x.size(); ++k)
                g.values[j][k] = v2(std::sin(w * g.t[j] + kx * g.x[k]), std::cos(0.5 * w * g.t[j]) * g.x[k]);
        const GridMetrics raw = grid_metrics(g);
        for (const auto& [name, kernel] : causal_kernels(0.1, 0.01)) {
            const GridMetrics s = grid_metrics(smooth_in_time(g, kernel));
            CHECK(s.consistency.value <= raw.consistency.value);
            CHECK(s.l2_energy < raw.l2_energy);
            CHECK(s.lipschitz <= raw.lipschitz);
        }
    }
}

TEST_CASE("local truncation error") {
    const FieldFn constant = [](const Vec&, double) { return v2(-2, 0.5); };
    const LteResult c = lte_check(constant, v2(0.3, 0.1), 0.4, 0.05);
    CHECK(c.observed <= 1e-15);

    // Symmetric Jacobian, so the flow map is assembled from its eigenbasis.
    Eigen::Matrix2d J;
    J << -1.0, 0.4, 0.4, 0.5;
    const Vec b = v2(0.2, -0.3);
    const FieldFn affine = [&](const Vec& x, double) { return Vec(J * x + b); };
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(J);
    for (double h : {0.1, 0.05, 0.02}) {
        const Vec x = v2(0.7, -0.4);
        const Eigen::Vector2d lam = eig.eigenvalues();
        const Eigen::Matrix2d E = eig.eigenvectors() * (lam * h).array().exp().matrix().asDiagonal() *
                                  eig.eigenvectors().transpose();
        const Eigen::Matrix2d phi = eig.eigenvectors() *
                                    ((lam * h).array().exp() - 1.0).cwiseQuotient(lam.array()).matrix().asDiagonal() *
                                    eig.eigenvectors().transpose();
        const Vec exact = E * x + phi * b;
        const double remainder = (exact - (x + h * affine(x, 0.0))).norm();
        const LteResult r = lte_check(affine, x, 0.3, h);
        CHECK(r.observed == Approx(remainder).epsilon(1e-8).scale(1e-8));
        CHECK(r.observed <= 1.05 * r.bound);
    }

    const BackboneModel model = load_preset("two_blob_2d");
    const EditField field(model, ChordParams{}, FieldKind::naive, 2);
    const Vec x = v2(-1.0, 1.0);
    const LteResult coarse = lte_check(field, x, 0.6, 0.02), fine = lte_check(field, x, 0.6, 0.01);
    CHECK(coarse.observed <= 1.05 * coarse.bound);
    CHECK(coarse.observed / fine.observed == Approx(4.0).epsilon(0.15));
}

TEST_CASE("global error sweep") {
    const FieldFn constant = [](const Vec&, double) { return v2(1, 1); };
    const GlobalErrorResult c = global_error_sweep(constant, v2(0, 0), 0.0, 1.0, {0.125, 0.0625, 0.03125, 0.015625});
    CHECK(c.exact);
    for (double e : c.errors) CHECK(e <= 1e-12);

    const FieldFn decay = [](const Vec& x, double t) { return Vec(-x * (1.0 + t)); };
    const GlobalErrorResult g = global_error_sweep(decay, v2(1, -2), 0.0, 1.0, {0.1, 0.05, 0.025, 0.0125});
    CHECK_FALSE(g.exact);
    CHECK(g.slope == Approx(1.0).epsilon(0.1));
    for (size_t i = 1; i < g.errors.size(); ++i) {
        CHECK(g.h[i] > g.h[i - 1]);
        CHECK(g.errors[i] > g.errors[i - 1]);
    }

    CHECK_THROWS_AS(global_error_sweep(decay, v2(1, 1), 0.0, 1.0, {0.1, 0.05}), DomainError);
    CHECK_THROWS_AS(global_error_sweep(decay, v2(1, 1), 0.0, 1.0, {0.3, 0.15, 0.075, 0.0375}), DomainError);
}

TEST_CASE("risk examples") {
    const auto wave = series(201, [](double t) { return v2(std::sin(6 * t), t * t); });
    const SmoothingKernel box = SmoothingKernel::box(0.1, 0.005);
    const RiskResult clean = risk_experiment(wave, 0.0, box, 100, 1);
    CHECK(clean.mse_naive == 0.0);
    // Bias only: smooth the clean series directly.
    const auto smoothed = kernel_smooth(wave, box);
    double bias = 0.0;
    for (size_t j = 0; j < smoothed.size(); ++j)
        bias += (smoothed[j].value - wave[j + box.support() - 1].value).squaredNorm();
    CHECK(clean.mse_chord == Approx(bias / double(smoothed.size())).epsilon(1e-12));

    const auto flat = series(201, [](double) { return v2(0.5, -1.0); });
    const double sigma = 0.3;
    for (const auto& [name, k] : causal_kernels(0.1, 0.005)) {
        const RiskResult r = risk_experiment(flat, sigma, k, 200, 4);
        CHECK(r.mse_naive - r.mse_chord > 3.0 * r.se_gap);
        CHECK(std::abs(r.mse_naive - 2 * sigma * sigma) <= 3.0 * r.se_naive);
    }
    const RiskResult d = risk_experiment(flat, sigma, SmoothingKernel::dirac(0.005), 100, 4);
    CHECK(d.mse_chord == d.mse_naive);
    CHECK_THROWS_AS(risk_experiment(flat, sigma, box, 10, 4), DomainError);
}

TEST_CASE("projection gap examples") {
    const auto flat = series(65, [](double) { return Vec::Constant(2, 1.5); });
    const ProjectionGap c = projection_energy_gap(flat, 0.25);
    CHECK(c.residual_energy == 0.0);
    CHECK(c.energy_proj == Approx(c.energy_orig).epsilon(1e-15));

    // Constant on each quarter of the grid: already a chord control.
    const auto steps = series(65, [](double t) {
        const int s = std::min(3, int(std::floor(t * 4.0 + 1e-9)));
        return Vec::Constant(1, double(s * s) - 1.0);
    });
    CHECK(projection_energy_gap(steps, 0.25).residual_energy <= 1e-28);

    for (int i = 0; i < 50; ++i) {
        std::vector<TimedVec> r;
        for (int j = 0; j < 129; ++j) r.push_back({j / 128.0, normal_vector(9, 1, uint64_t(i * 200 + j), 2)});
        const ProjectionGap g = projection_energy_gap(r, 0.125);
        REQUIRE(g.energy_proj <= g.energy_orig);
        REQUIRE(std::abs(g.energy_orig - g.energy_proj - g.residual_energy) <= 1e-10);
    }

    const auto sine = series(2049, [](double t) { return Vec::Constant(1, std::sin(2 * M_PI * t)); });
    const double r1 = projection_energy_gap(sine, 1.0 / 16).residual_energy;
    const double r2 = projection_energy_gap(sine, 1.0 / 32).residual_energy;
    CHECK(r1 / r2 == Approx(4.0).epsilon(0.1));

    CHECK_THROWS_AS(projection_energy_gap(series(9, [](double) { return Vec::Zero(1); }), 0.125), DomainError);
    CHECK_THROWS_AS(projection_energy_gap(flat, 0.3), DomainError);
}
