#pragma once

#include <memory>
#include <string>
#include <vector>

namespace chord {

enum class ScheduleKind { vp_const_beta, vp_generic, linear_interp };

// Where the clean-data endpoint sits on the time axis. data_at_one runs the
// base path backwards: alpha(t) = alpha_base(1 - t).
enum class Orientation { data_at_zero, data_at_one };

enum class ParamKind { noise_eps, data_x0, v_pred, score, velocity, consistency };

// Piecewise-linear beta(t); first knot at 0, last at 1.
struct BetaTable {
    std::vector<double> t;
    std::vector<double> beta;
    std::vector<double> cumulative;  // integral of beta up to each knot

    BetaTable(std::vector<double> t, std::vector<double> beta);
    double value(double s) const;
    double integral(double s) const;
};

struct Schedule {
    ScheduleKind kind = ScheduleKind::linear_interp;
    double beta0 = 1.0;
    std::shared_ptr<const BetaTable> table;
    double alpha_floor = 1e-3;
    double fd_step = 1e-3;
    Orientation orientation = Orientation::data_at_zero;

    static Schedule vp_const_beta(double beta0);
    static Schedule vp_generic(BetaTable table);
    static Schedule linear_interp();

    Schedule oriented(Orientation o) const;
    bool is_vp() const { return kind != ScheduleKind::linear_interp; }
    void validate() const;
};

struct PathPoint {
    double alpha;
    double sigma;
};

struct PathRates {
    double alpha_dot;
    double sigma_dot;
};

PathPoint evaluate(const Schedule& s, double t);
PathRates derivatives(const Schedule& s, double t);     // analytic
PathRates derivatives_fd(const Schedule& s, double t);  // backward difference with fd_step

// beta(t) = -2 alpha_dot / alpha (the log-decay rate of alpha).
double beta(const Schedule& s, double t);

double coefficient(ParamKind kind, const Schedule& s, double t);

// The general-path coefficient next to its VP-only and beta-written forms.
struct CoefficientForms {
    double general;
    double vp_form;
    double beta_form;
    double max_rel_disagreement;
};
CoefficientForms coefficient_forms(ParamKind kind, const Schedule& s, double t);

BetaTable load_beta_csv(const std::string& path);

const char* to_string(ParamKind k);
const char* to_string(ScheduleKind k);
const char* to_string(Orientation o);
ParamKind parse_param_kind(const std::string& s);
ScheduleKind parse_schedule_kind(const std::string& s);
Orientation parse_orientation(const std::string& s);

}  // namespace chord
