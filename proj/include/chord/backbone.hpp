#pragma once

#include <vector>

#include "chord/schedule.hpp"
#include "chord/types.hpp"

namespace chord {

// Isotropic Gaussian mixture standing in for one text condition's data.
struct GaussianMixture {
    std::vector<double> weights;
    std::vector<Vec> means;
    std::vector<double> scales;

    int dim() const { return means.empty() ? 0 : int(means.front().size()); }
    size_t size() const { return weights.size(); }
    void validate() const;
};

enum class Condition { source, target };

struct BackboneModel {
    Schedule schedule;
    GaussianMixture source;
    GaussianMixture target;
    ParamKind output_kind = ParamKind::velocity;

    const GaussianMixture& mixture(Condition c) const { return c == Condition::source ? source : target; }
    int dim() const { return source.dim(); }
    void validate() const;
};

struct Moments {
    Vec mean;
    double variance;
};

Moments marginal_moments(const GaussianMixture& m, size_t component, const Schedule& s, double t);

// Posterior component probabilities of the noised mixture at z.
Vec responsibilities(const GaussianMixture& m, const Schedule& s, const Vec& z, double t);

Vec posterior_x0(const BackboneModel& model, const Vec& z, double t, Condition c);
Vec velocity(const BackboneModel& model, const Vec& z, double t, Condition c);

// Model head of the given kind; the one-argument form uses model.output_kind.
Vec observable(const BackboneModel& model, ParamKind kind, const Vec& z, double t, Condition c);
Vec observable(const BackboneModel& model, const Vec& z, double t, Condition c);

Vec delta_drift(const BackboneModel& model, const Vec& z, double t);

}  // namespace chord
