#include "chord/proxy.hpp"

#include "chord/rng.hpp"

namespace chord {

uint64_t SharedNoiseBatch::stream_transport() { return stream::transport; }

SharedNoiseBatch::SharedNoiseBatch(uint64_t seed, int n, int dim, uint64_t stream_id) : seed_(seed) {
    if (n < 1) throw DomainError("noise batch needs n >= 1");
    if (dim < 1) throw DomainError("noise batch needs dim >= 1");
    draws_.resize(dim, n);
    for (int i = 0; i < n; ++i) draws_.col(i) = normal_vector(seed, stream_id, uint64_t(i), dim);
}

SharedNoiseBatch::SharedNoiseBatch(Eigen::MatrixXd draws) : draws_(std::move(draws)) {
    if (draws_.cols() < 1) throw DomainError("noise batch needs n >= 1");
}

Vec noising_sample(const Schedule& s, const Vec& x_tau, double t, const Vec& eps) {
    const PathPoint p = evaluate(s, t);
    return p.alpha * x_tau + p.sigma * eps;
}

Vec proxy_term(const BackboneModel& model, const Vec& x_tau, double t, const Vec& eps) {
    const double A = coefficient(model.output_kind, model.schedule, t);
    const Vec z = noising_sample(model.schedule, x_tau, t, eps);
    return A * (observable(model, z, t, Condition::target) - observable(model, z, t, Condition::source));
}

Vec proxy_field(const BackboneModel& model, const Vec& x_tau, double t, const SharedNoiseBatch& batch) {
    if (batch.dim() != x_tau.size()) throw DomainError("noise batch dimension mismatch");
    Vec acc = proxy_term(model, x_tau, t, batch.draw(0));
    for (int i = 1; i < batch.n(); ++i) acc += proxy_term(model, x_tau, t, batch.draw(i));
    return acc / double(batch.n());
}

Vec proxy_field_independent(const BackboneModel& model, const Vec& x_tau, double t, const SharedNoiseBatch& src_batch,
                            const SharedNoiseBatch& tar_batch) {
    if (src_batch.n() != tar_batch.n()) throw DomainError("independent batches must have equal n");
    const double A = coefficient(model.output_kind, model.schedule, t);
    Vec acc = Vec::Zero(x_tau.size());
    for (int i = 0; i < src_batch.n(); ++i) {
        const Vec zs = noising_sample(model.schedule, x_tau, t, src_batch.draw(i));
        const Vec zt = noising_sample(model.schedule, x_tau, t, tar_batch.draw(i));
        acc += A * (observable(model, zt, t, Condition::target) - observable(model, zs, t, Condition::source));
    }
    return acc / double(src_batch.n());
}

ProxyField sample_proxy(const BackboneModel& model, const Vec& anchor, const std::vector<double>& times,
                        const SharedNoiseBatch& batch) {
    ProxyField f{anchor, {}};
    for (double t : times) f.samples.push_back({t, proxy_field(model, anchor, t, batch)});
    return f;
}

}  // namespace chord
