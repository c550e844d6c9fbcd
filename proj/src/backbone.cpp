#include "chord/backbone.hpp"

#include <cmath>
#include <limits>

namespace chord {

void GaussianMixture::validate() const {
    if (weights.empty()) throw ConfigError("mixture has no components");
    if (means.size() != weights.size() || scales.size() != weights.size())
        throw ConfigError("mixture weights/means/scales sizes differ");
    double total = 0.0;
    for (size_t k = 0; k < weights.size(); ++k) {
        if (!(weights[k] > 0.0)) throw ConfigError("mixture weights must be positive");
        if (!(scales[k] > 0.0) || !std::isfinite(scales[k])) throw ConfigError("mixture scales must be positive");
        if (means[k].size() != means.front().size() || means[k].size() == 0)
            throw ConfigError("mixture means must share one positive dimension");
        if (!means[k].allFinite()) throw ConfigError("mixture means must be finite");
        total += weights[k];
    }
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("mixture weights must sum to 1");
}

void BackboneModel::validate() const {
    schedule.validate();
    source.validate();
    target.validate();
    if (source.dim() != target.dim()) throw ConfigError("source and target dimensions differ");
}

Moments marginal_moments(const GaussianMixture& m, size_t k, const Schedule& s, double t) {
    if (k >= m.size()) throw DomainError("component index " + std::to_string(k) + " out of range");
    const PathPoint p = evaluate(s, t);
    return {p.alpha * m.means[k], p.alpha * p.alpha * m.scales[k] * m.scales[k] + p.sigma * p.sigma};
}

namespace {

Vec responsibilities_at(const GaussianMixture& m, const PathPoint& p, const Vec& z) {
    const size_t K = m.size();
    const double d = double(z.size());
    Vec logw(K);
    for (size_t k = 0; k < K; ++k) {
        const double V = p.alpha * p.alpha * m.scales[k] * m.scales[k] + p.sigma * p.sigma;
        const double r2 = (z - p.alpha * m.means[k]).squaredNorm();
        logw[k] = std::log(m.weights[k]) - 0.5 * d * std::log(V) - 0.5 * r2 / V;
    }
    const double top = logw.maxCoeff();
    if (!std::isfinite(top)) throw DegenerateError("posterior log-weights are not finite");
    Vec r = (logw.array() - top).exp().matrix();
    const double mass = r.sum();
    if (!(mass >= 1e-300) || !std::isfinite(mass)) throw DegenerateError("posterior total mass degenerate");
    return r / mass;
}

}  // namespace

Vec responsibilities(const GaussianMixture& m, const Schedule& s, const Vec& z, double t) {
    return responsibilities_at(m, evaluate(s, t), z);
}

namespace {

Vec posterior_at(const GaussianMixture& m, const PathPoint& p, const Vec& z) {
    if (z.size() != m.dim()) throw DomainError("query point dimension mismatch");
    if (p.sigma == 0.0) return z / p.alpha;
    const Vec r = responsibilities_at(m, p, z);
    Vec out = Vec::Zero(z.size());
    for (size_t k = 0; k < m.size(); ++k) {
        const double s2 = m.scales[k] * m.scales[k];
        const double V = p.alpha * p.alpha * s2 + p.sigma * p.sigma;
        out += r[k] * (m.means[k] + (p.alpha * s2 / V) * (z - p.alpha * m.means[k]));
    }
    return out;
}

}  // namespace

Vec posterior_x0(const BackboneModel& model, const Vec& z, double t, Condition c) {
    return posterior_at(model.mixture(c), evaluate(model.schedule, t), z);
}

Vec velocity(const BackboneModel& model, const Vec& z, double t, Condition c) {
    const PathPoint p = evaluate(model.schedule, t);
    const PathRates r = derivatives(model.schedule, t);
    const Vec x0 = posterior_at(model.mixture(c), p, z);
    if (p.sigma == 0.0) return r.alpha_dot * x0;
    const Vec eps = (z - p.alpha * x0) / p.sigma;
    return r.alpha_dot * x0 + r.sigma_dot * eps;
}

Vec observable(const BackboneModel& model, ParamKind kind, const Vec& z, double t, Condition c) {
    if (kind == ParamKind::velocity) return velocity(model, z, t, c);
    const PathPoint p = evaluate(model.schedule, t);
    const Vec x0 = posterior_at(model.mixture(c), p, z);
    if (kind == ParamKind::data_x0 || kind == ParamKind::consistency) return x0;
    if (p.sigma < model.schedule.alpha_floor)
        throw IllConditionedError("sigma(" + std::to_string(t) + ") below alpha_floor for " + to_string(kind) + " head",
                                  t);
    const Vec eps = (z - p.alpha * x0) / p.sigma;
    switch (kind) {
        case ParamKind::noise_eps: return eps;
        case ParamKind::v_pred: return p.alpha * eps - p.sigma * x0;
        case ParamKind::score: return -eps / p.sigma;
        default: break;
    }
    return eps;
}

Vec observable(const BackboneModel& model, const Vec& z, double t, Condition c) {
    return observable(model, model.output_kind, z, t, c);
}

Vec delta_drift(const BackboneModel& model, const Vec& z, double t) {
    return velocity(model, z, t, Condition::target) - velocity(model, z, t, Condition::source);
}

}  // namespace chord
