#include "chord/transport.hpp"

#include <cmath>
#include <limits>

#include "chord/rng.hpp"

namespace chord {

const char* to_string(FieldKind k) { return k == FieldKind::naive ? "naive" : "chord"; }

void check_bounded(const Vec& x, const Vec& last_valid, const std::string& where) {
    if (!x.allFinite() || x.norm() > kDivergenceNorm)
        throw DivergenceError(where + ": state norm exceeded " + std::to_string(kDivergenceNorm), last_valid);
}

namespace {

SharedNoiseBatch transport_batch(const ChordParams& p, uint64_t seed, int dim) {
    return SharedNoiseBatch(seed, p.n, dim, stream::transport);
}

SharedNoiseBatch prev_time_batch(const ChordParams& p, uint64_t seed, int dim) {
    return SharedNoiseBatch(seed, p.n, dim, p.decouple_times ? stream::decoupled_time : stream::transport);
}

Vec proxy_checked(const BackboneModel& model, const Vec& x, double t, const SharedNoiseBatch& batch) {
    try {
        return proxy_field(model, x, t, batch);
    } catch (const IllConditionedError& e) {
        throw IllConditionedError(std::string("proxy query at t=") + std::to_string(t) + ": " + e.what(), t);
    }
}

}  // namespace

EditField::EditField(const BackboneModel& model, const ChordParams& params, FieldKind kind, uint64_t seed)
    : EditField(model, params, kind, transport_batch(params, seed, model.dim()),
                prev_time_batch(params, seed, model.dim())) {}

EditField::EditField(const BackboneModel& model, const ChordParams& params, FieldKind kind, SharedNoiseBatch batch,
                     SharedNoiseBatch prev_batch)
    : model_(&model), params_(params), kind_(kind), batch_(std::move(batch)), prev_batch_(std::move(prev_batch)) {
    params_.validate();
}

Vec EditField::evaluate(const Vec& x, double t, std::vector<TimedVec>* queried) const {
    if (kind_ == FieldKind::naive) {
        Vec r = proxy_checked(*model_, x, t, batch_);
        if (queried) queried->push_back({t, r});
        return r;
    }
    const double tp = t - params_.delta;
    if (tp < 0.0) throw DomainError("chord field needs t - delta >= 0, got t=" + std::to_string(t));
    Vec r_prev = proxy_checked(*model_, x, tp, prev_batch_);
    Vec r_curr = params_.delta == 0.0 ? r_prev : proxy_checked(*model_, x, t, batch_);
    Vec u = chord_field(r_prev, r_curr, t, params_.delta);
    if (queried) {
        queried->push_back({tp, std::move(r_prev)});
        queried->push_back({t, std::move(r_curr)});
    }
    return u;
}

Vec EditField::operator()(const Vec& x, double t) const { return evaluate(x, t, nullptr); }

Vec prox_noise(const ChordParams& params, uint64_t seed, int dim) {
    if (params.prox_shares_noise) return normal_vector(seed, stream::transport, 0, dim);
    return normal_vector(seed, stream::prox, 0, dim);
}

Vec proximal_refine(const BackboneModel& model, const Vec& x_pred, double t_c, const Vec& eps_fixed) {
    if (!(t_c > 0.0 && t_c < 1.0)) throw DomainError("t_c must be in (0, 1)");
    const Vec z = noising_sample(model.schedule, x_pred, t_c, eps_fixed);
    return posterior_x0(model, z, t_c, Condition::target);
}

Vec proximal_refine(const BackboneModel& model, const Vec& x_pred, double t_c, uint64_t seed) {
    return proximal_refine(model, x_pred, t_c, normal_vector(seed, stream::prox, 0, int(x_pred.size())));
}

namespace {

TransportResult finish(const BackboneModel& model, const Vec& x_src, const ChordParams& params, const Vec& prox_eps,
                       Vec u_hat, std::vector<TimedVec> queried) {
    TransportResult r;
    r.u_hat = std::move(u_hat);
    r.fields_queried = std::move(queried);
    r.x_pred = x_src + params.lambda * r.u_hat;
    check_bounded(r.x_pred, x_src, "chordedit");
    r.x_out = params.use_prox ? proximal_refine(model, r.x_pred, params.t_c, prox_eps) : r.x_pred;
    r.energy = r.u_hat.squaredNorm() / double(r.u_hat.size());
    return r;
}

}  // namespace

TransportResult chordedit(const BackboneModel& model, const Vec& x_src, const ChordParams& params,
                          const SharedNoiseBatch& batch, const SharedNoiseBatch& prev_batch, const Vec& prox_eps) {
    const EditField field(model, params, FieldKind::chord, batch, prev_batch);
    std::vector<TimedVec> queried;
    Vec u = field.evaluate(x_src, params.t, &queried);
    return finish(model, x_src, params, prox_eps, std::move(u), std::move(queried));
}

TransportResult chordedit(const BackboneModel& model, const Vec& x_src, const ChordParams& params, uint64_t seed) {
    const int d = model.dim();
    return chordedit(model, x_src, params, transport_batch(params, seed, d), prev_time_batch(params, seed, d),
                     prox_noise(params, seed, d));
}

TransportResult chordedit_multi_noise(const BackboneModel& model, const Vec& x_src, const ChordParams& params,
                                      uint64_t seed) {
    const int d = model.dim();
    return chordedit_multi_noise(model, x_src, params, transport_batch(params, seed, d),
                                 prev_time_batch(params, seed, d), prox_noise(params, seed, d));
}

TransportResult chordedit_multi_noise(const BackboneModel& model, const Vec& x_src, const ChordParams& params,
                                      const SharedNoiseBatch& batch, const SharedNoiseBatch& prev,
                                      const Vec& prox_eps) {
    params.validate();
    if (batch.n() != prev.n()) throw DomainError("multi-noise batches must have equal n");
    const double tp = params.t - params.delta;
    std::vector<TimedVec> queried;
    Vec u_sum;
    for (int i = 0; i < batch.n(); ++i) {
        Vec r_prev = proxy_checked(model, x_src, tp, SharedNoiseBatch(Eigen::MatrixXd(prev.draw(i))));
        Vec r_curr = params.delta == 0.0 ? r_prev
                                         : proxy_checked(model, x_src, params.t, SharedNoiseBatch(Eigen::MatrixXd(batch.draw(i))));
        Vec u_i = chord_field(r_prev, r_curr, params.t, params.delta);
        if (i == 0)
            u_sum = u_i;
        else
            u_sum += u_i;
        queried.push_back({tp, std::move(r_prev)});
        queried.push_back({params.t, std::move(r_curr)});
    }
    Vec u_avg = u_sum / double(batch.n());
    return finish(model, x_src, params, prox_eps, std::move(u_avg), std::move(queried));
}

MultiStepResult multi_step_transport(const BackboneModel& model, const Vec& x_src, const ChordParams& params, int S,
                                     FieldKind kind, uint64_t seed, const MultiStepOptions& opts) {
    if (S < 1) throw DomainError("multi_step_transport needs S >= 1");
    const EditField field(model, params, kind, seed);
    const double h = params.lambda / double(S);
    MultiStepResult out;
    out.trajectory.reserve(size_t(S) + 1);
    out.trajectory.push_back(x_src);
    for (int s = 0; s < S; ++s) {
        double tq = params.t;
        if (opts.time_marching && S > 1) tq = params.t - params.delta + params.delta * double(s + 1) / double(S);
        const Vec& x = out.trajectory.back();
        Vec u = field(x, tq);
        Vec next = x + h * u;
        check_bounded(next, x, "multi_step_transport step " + std::to_string(s));
        out.fields.push_back(std::move(u));
        out.trajectory.push_back(std::move(next));
    }
    return out;
}

Vec rk4_solve(const FieldFn& f, const Vec& x0, double t_from, double t_to, int steps) {
    if (steps < 1) throw DomainError("rk4_solve needs steps >= 1");
    const double h = (t_to - t_from) / double(steps);
    Vec x = x0;
    for (int i = 0; i < steps; ++i) {
        const double t = t_from + double(i) * h;
        const Vec k1 = f(x, t);
        const Vec k2 = f(x + 0.5 * h * k1, t + 0.5 * h);
        const Vec k3 = f(x + 0.5 * h * k2, t + 0.5 * h);
        const Vec k4 = f(x + h * k3, t + h);
        Vec next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        check_bounded(next, x, "rk4_solve");
        x = std::move(next);
    }
    return x;
}

Vec euler_solve(const FieldFn& f, const Vec& x0, double t_from, double t_to, int steps) {
    if (steps < 1) throw DomainError("euler_solve needs steps >= 1");
    const double h = (t_to - t_from) / double(steps);
    Vec x = x0;
    for (int i = 0; i < steps; ++i) {
        Vec next = x + h * f(x, t_from + double(i) * h);
        check_bounded(next, x, "euler_solve");
        x = std::move(next);
    }
    return x;
}

Vec reference_solve(const BackboneModel& model, const Vec& x0, Condition c, double t_from, double t_to, int steps) {
    if (steps < 100) throw DomainError("reference_solve needs steps >= 100");
    return rk4_solve([&](const Vec& x, double t) { return velocity(model, x, t, c); }, x0, t_from, t_to, steps);
}

ParticleSet sample_particles(const GaussianMixture& m, int count, uint64_t seed) {
    if (count < 1) throw DomainError("particle count must be >= 1");
    ParticleSet ps;
    ps.seed = seed;
    ps.sampler = "mixture(K=" + std::to_string(m.size()) + ", d=" + std::to_string(m.dim()) + ")";
    ps.points.reserve(size_t(count));
    for (int i = 0; i < count; ++i) {
        const double u = uniform01(seed, stream::particles, uint64_t(i), 0);
        size_t k = 0;
        double acc = m.weights[0];
        while (u > acc && k + 1 < m.size()) acc += m.weights[++k];
        Vec x(m.dim());
        for (int j = 0; j < m.dim(); ++j)
            x[j] = m.means[k][j] + m.scales[k] * standard_normal(seed, stream::particles, uint64_t(i), uint64_t(j) + 1);
        ps.points.push_back(std::move(x));
    }
    return ps;
}

double distance_to_nearest_mode(const GaussianMixture& m, const Vec& x) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& mu : m.means) best = std::min(best, (x - mu).norm());
    return best;
}

}  // namespace chord
