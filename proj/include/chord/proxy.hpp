#pragma once

#include <cstdint>
#include <vector>

#include "chord/backbone.hpp"

namespace chord {

// n standard-normal draws in R^d, fixed by (seed, stream).
class SharedNoiseBatch {
public:
    SharedNoiseBatch(uint64_t seed, int n, int dim, uint64_t stream_id = stream_transport());
    // Explicit draws, one column per sample.
    explicit SharedNoiseBatch(Eigen::MatrixXd draws);

    int n() const { return int(draws_.cols()); }
    int dim() const { return int(draws_.rows()); }
    uint64_t seed() const { return seed_; }
    Vec draw(int i) const { return draws_.col(i); }
    const Eigen::MatrixXd& draws() const { return draws_; }

    static uint64_t stream_transport();

private:
    uint64_t seed_ = 0;
    Eigen::MatrixXd draws_;
};

Vec noising_sample(const Schedule& s, const Vec& x_tau, double t, const Vec& eps);

// Coefficient-mapped head residual A_t [Q_tar(z) - Q_src(z)] at z = alpha x + sigma eps.
Vec proxy_term(const BackboneModel& model, const Vec& x_tau, double t, const Vec& eps);

// Mean of proxy_term over the batch (same eps for both conditions).
Vec proxy_field(const BackboneModel& model, const Vec& x_tau, double t, const SharedNoiseBatch& batch);

// Ablation estimator: source and target heads see unrelated draws.
Vec proxy_field_independent(const BackboneModel& model, const Vec& x_tau, double t, const SharedNoiseBatch& src_batch,
                            const SharedNoiseBatch& tar_batch);

struct TimedVec {
    double time;
    Vec value;
};

struct ProxyField {
    Vec anchor;
    std::vector<TimedVec> samples;
};

ProxyField sample_proxy(const BackboneModel& model, const Vec& anchor, const std::vector<double>& times,
                        const SharedNoiseBatch& batch);

}  // namespace chord
