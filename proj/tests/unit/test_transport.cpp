#include <doctest.h>

#include <cmath>

#include "chord/config.hpp"
#include "chord/diagnostics.hpp"
#include "chord/experiments.hpp"
#include "chord/rng.hpp"
#include "chord/transport.hpp"

using namespace chord;
using doctest::Approx;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

bool same_bits(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) return false;
    for (long i = 0; i < a.size(); ++i)
        if (!(a[i] == b[i])) return false;
    return true;
}

BackboneModel null_edit(const std::string& preset) {
    BackboneModel m = load_preset(preset);
    m.target = m.source;
    return m;
}

struct Stats {
    double mean = 0.0, sd = 0.0;
};

Stats stats(const std::vector<double>& xs) {
    Stats s;
    for (double x : xs) s.mean += x;
    s.mean /= double(xs.size());
    for (double x : xs) s.sd += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(s.sd / double(xs.size() - 1));
    return s;
}

}  // namespace

TEST_CASE("null edit leaves the source in place") {
    for (const auto& name : preset_names()) {
        const BackboneModel model = null_edit(name);
        for (uint64_t seed = 0; seed < 5; ++seed) {
            ChordParams p;
            p.use_prox = false;
            p.lambda = 0.5 + 0.5 * double(seed);
            p.t = 0.5 + 0.1 * double(seed % 4);
            p.delta = 0.05 * double(seed % 3);
            const Vec x = sample_particles(model.source, 1, seed).points[0];
            const TransportResult r = chordedit(model, x, p, seed);
            CHECK(r.u_hat.norm() == 0.0);
            CHECK(r.x_pred == x);
            CHECK(r.x_out == x);
            const MultiStepResult ms = multi_step_transport(model, x, p, 4, FieldKind::chord, seed);
            for (const auto& s : ms.trajectory) CHECK(s == x);
        }
    }
}

TEST_CASE("zero step is the identity") {
    const BackboneModel model = load_preset("two_blob_2d");
    ChordParams p;
    p.lambda = 0.0;
    p.use_prox = false;
    const Vec x = sample_particles(model.source, 1, 3).points[0];
    CHECK(chordedit(model, x, p, 3).x_out == x);
}

TEST_CASE("default edit lands on the 1D target") {
    const BackboneModel model = load_preset("two_blob_1d");
    const ChordParams chord;
    ChordParams naive = chord;
    naive.delta = 0.0;
    const Vec x = model.source.means[0];
    // Where the exact target flow carries the noised source: a fine RK4 solve.
    const Vec flowed = reference_solve(model, v1(0.0), Condition::target, 0.0, 1.0 - 1e-9, 1000);
    CHECK(std::abs(flowed[0] - 2.0) < 3.0 * 0.1);
    for (uint64_t seed = 0; seed < 10; ++seed) {
        const double ec = std::abs(chordedit(model, x, chord, seed).x_out[0] - 2.0);
        const double en = std::abs(chordedit(model, x, naive, seed).x_out[0] - 2.0);
        CHECK(ec < 3.0 * 0.1);
        CHECK(ec < en);
    }
}

TEST_CASE("ill-conditioned queries report their time") {
    BackboneModel model = load_preset("two_blob_2d");
    model.output_kind = ParamKind::noise_eps;
    ChordParams p;
    p.t = 1.0;
    try {
        chordedit(model, model.source.means[0], p, 1);
        FAIL("expected guard");
    } catch (const IllConditionedError& e) {
        CHECK(e.time == 1.0);
    }
}

TEST_CASE("multi-noise path") {
    for (const auto& name : preset_names()) {
        const BackboneModel model = load_preset(name);
        const Vec x = sample_particles(model.source, 1, 11).points[0];
        const ChordParams p;
        for (uint64_t seed = 0; seed < 5; ++seed) {
            const TransportResult a = chordedit(model, x, p, seed);
            const TransportResult b = chordedit_multi_noise(model, x, p, seed);
            CHECK(same_bits(a.u_hat, b.u_hat));
            CHECK(same_bits(a.x_out, b.x_out));
        }
        ChordParams p4 = p;
        p4.n = 4;
        const int d = model.dim();
        const SharedNoiseBatch zeros4(Eigen::MatrixXd::Zero(d, 4)), zero1(Eigen::MatrixXd::Zero(d, 1));
        const Vec eps = Vec::Zero(d);
        const TransportResult multi = chordedit_multi_noise(model, x, p4, zeros4, zeros4, eps);
        const TransportResult single = chordedit(model, x, p, zero1, zero1, eps);
        CHECK((multi.x_out - single.x_out).norm() <= 1e-14 * (1.0 + single.x_out.norm()));
    }
}

TEST_CASE("more noise samples shift the endpoint error only within its spread") {
    const BackboneModel model = load_preset("two_blob_2d");
    const Vec x = model.source.means[0];
    ChordParams p1, p4;
    p4.n = 4;
    std::vector<double> e1, e4;
    for (uint64_t seed = 0; seed < 20; ++seed) {
        e1.push_back(distance_to_nearest_mode(model.target, chordedit_multi_noise(model, x, p1, seed).x_out));
        e4.push_back(distance_to_nearest_mode(model.target, chordedit_multi_noise(model, x, p4, seed).x_out));
    }
    const Stats a = stats(e1), b = stats(e4);
    const double pooled = std::sqrt(0.5 * (a.sd * a.sd + b.sd * b.sd));
    CHECK(std::abs(a.mean - b.mean) <= pooled);
}

TEST_CASE("proximal refinement") {
    BackboneModel model = load_preset("two_blob_1d");
    CHECK(proximal_refine(model, v1(2.0), 0.3, Vec::Zero(1))[0] == Approx(2.0).epsilon(1e-14));

    BackboneModel clean = model;
    clean.schedule = Schedule::linear_interp();
    for (double t_c : {1e-6, 1e-9}) {
        const Vec x = v1(0.37);
        CHECK(std::abs(proximal_refine(clean, x, t_c, v1(0.8))[0] - 0.37) < 1e3 * t_c);
    }

    // Bimodal target at -1 and +2 with x_pred nearer -1, refined at a light noise level.
    model = clean;
    model.target = {{0.5, 0.5}, {v1(-1.0), v1(2.0)}, {0.2, 0.2}};
    const double t_c = 0.3, x_pred = 0.3;
    const Vec out = proximal_refine(model, v1(x_pred), t_c, Vec::Zero(1));
    // Direct posterior mean at z = alpha x_pred.
    const PathPoint pp = evaluate(model.schedule, t_c);
    const double z = pp.alpha * x_pred;
    double num = 0.0, den = 0.0;
    for (double mu : {-1.0, 2.0}) {
        const double var = pp.alpha * pp.alpha * 0.04 + pp.sigma * pp.sigma;
        const double w = std::exp(-0.5 * (z - pp.alpha * mu) * (z - pp.alpha * mu) / var);
        const double post = mu + pp.alpha * 0.04 / var * (z - pp.alpha * mu);
        num += w * post;
        den += w;
    }
    CHECK(out[0] == Approx(num / den).epsilon(1e-12));
    CHECK(std::abs(out[0] + 1.0) < std::abs(x_pred + 1.0));
    CHECK_THROWS_AS(proximal_refine(model, v1(0.0), 1.0, Vec::Zero(1)), DomainError);
}

TEST_CASE("multi-step transport") {
    for (const auto& name : preset_names()) {
        const BackboneModel model = load_preset(name);
        const ChordParams p;
        const Vec x = sample_particles(model.source, 1, 5).points[0];
        const MultiStepResult one = multi_step_transport(model, x, p, 1, FieldKind::chord, 5);
        CHECK(same_bits(one.trajectory.back(), chordedit(model, x, p, 5).x_pred));

        const MultiStepResult many = multi_step_transport(model, x, p, 8, FieldKind::naive, 5);
        const double h = p.lambda / 8;
        for (size_t s = 0; s < many.fields.size(); ++s)
            CHECK(many.trajectory[s + 1].norm() <=
                  many.trajectory[s].norm() + h * many.fields[s].norm() + 1e-12);
    }

    const BackboneModel model = load_preset("two_blob_2d");
    const ChordParams p;
    const Vec x = model.source.means[0];
    const EditField field(model, p, FieldKind::chord, 9);
    const MultiStepResult marched = multi_step_transport(model, x, p, 4, FieldKind::chord, 9, {true});
    for (int s = 0; s < 4; ++s) {
        const double tq = p.t - p.delta + p.delta * (s + 1) / 4.0;
        CHECK(same_bits(marched.fields[size_t(s)], field(marched.trajectory[size_t(s)], tq)));
    }
    CHECK_THROWS_AS(multi_step_transport(model, x, p, 0, FieldKind::chord, 9), DomainError);
}

TEST_CASE("step count sweep energies on the 2D preset") {
    const BackboneModel model = load_preset("two_blob_2d");
    const ChordParams p;
    const Vec x = model.source.means[0];
    double naive[2], lo = 1e300, hi = 0.0;
    for (int S : {1, 2, 4, 8, 16}) {
        const double en = bb_energy(multi_step_transport(model, x, p, S, FieldKind::naive, 1).fields, 2);
        const double ec = bb_energy(multi_step_transport(model, x, p, S, FieldKind::chord, 1).fields, 2);
        if (S == 1) naive[0] = en;
        if (S == 16) naive[1] = en;
        lo = std::min(lo, ec);
        hi = std::max(hi, ec);
    }
    CHECK(naive[0] > naive[1]);
    CHECK(hi / lo < 2.0);
}

TEST_CASE("reference solver") {
    BackboneModel sym;
    sym.schedule = Schedule::linear_interp();
    sym.source = {{0.5, 0.5}, {v1(-2.0), v1(2.0)}, {0.1, 0.1}};
    sym.target = sym.source;
    CHECK(std::abs(reference_solve(sym, v1(0.0), Condition::source, 0.1, 0.9, 200)[0]) <= 1e-15);

    const BackboneModel model = load_preset("two_blob_1d");
    const Vec x0 = v1(0.4);
    const Vec a = reference_solve(model, x0, Condition::target, 0.1, 0.9, 400);
    const Vec b = reference_solve(model, x0, Condition::target, 0.1, 0.9, 800);
    CHECK(std::abs(a[0] - b[0]) < 1e-8);

    // Single Gaussian: z(t) = m(t) + (z0 - m(t0)) sqrt(V(t) / V(t0)).
    for (const Schedule& s : {model.schedule, Schedule::vp_const_beta(2.0)}) {
        BackboneModel g = model;
        g.schedule = s;
        auto m = [&](double t) { return evaluate(s, t).alpha * 2.0; };
        auto V = [&](double t) {
            const PathPoint p = evaluate(s, t);
            return p.alpha * p.alpha * 0.01 + p.sigma * p.sigma;
        };
        const double t0 = 0.2, t1 = 0.85, z0 = -0.6;
        const double exact = m(t1) + (z0 - m(t0)) * std::sqrt(V(t1) / V(t0));
        CHECK(reference_solve(g, v1(z0), Condition::target, t0, t1, 1000)[0] == Approx(exact).epsilon(1e-8));
    }
    CHECK_THROWS_AS(reference_solve(model, x0, Condition::target, 0.1, 0.9, 50), DomainError);
}

TEST_CASE("divergence carries the last valid state") {
    const FieldFn blowup = [](const Vec& x, double) { return Vec(1e4 * x); };
    try {
        euler_solve(blowup, v1(1.0), 0.0, 1.0, 10);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.last_valid.allFinite());
        CHECK(e.last_valid.norm() <= kDivergenceNorm);
    }
}

TEST_CASE("particle sampling") {
    const BackboneModel model = load_preset("ring_3blob");
    const ParticleSet a = sample_particles(model.source, 3000, 4), b = sample_particles(model.source, 3000, 4);
    REQUIRE(a.points.size() == 3000);
    for (size_t i = 0; i < a.points.size(); ++i) REQUIRE(a.points[i] == b.points[i]);
    std::vector<int> counts(3, 0);
    for (const auto& x : a.points) {
        size_t best = 0;
        for (size_t k = 1; k < 3; ++k)
            if ((x - model.source.means[k]).norm() < (x - model.source.means[best]).norm()) best = k;
        ++counts[best];
    }
    for (int c : counts) CHECK(std::abs(c - 1000) < 4 * std::sqrt(3000 * (1.0 / 3) * (2.0 / 3)));
    CHECK(distance_to_nearest_mode(model.source, model.source.means[2]) == 0.0);
}

TEST_CASE("stiff preset divergence counts") {
    const BackboneModel model = load_preset("stiff_2d");
    const ParticleSet ps = sample_particles(model.source, 200, 12);
    const ToyResult r = toy_transport(model, ChordParams{}, ps, 1, 12);
    CHECK(r.naive.diverged >= r.chord.diverged);
    CHECK(r.chord.mean_distance < r.naive.mean_distance);
}
