#include "chord/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "chord/types.hpp"

namespace chord {

BetaTable::BetaTable(std::vector<double> t_, std::vector<double> beta_) : t(std::move(t_)), beta(std::move(beta_)) {
    if (t.size() < 2 || t.size() != beta.size()) throw ConfigError("beta table needs >= 2 rows of (t, beta)");
    if (t.front() != 0.0 || t.back() != 1.0) throw ConfigError("beta table must span t in [0, 1]");
    for (size_t i = 1; i < t.size(); ++i)
        if (!(t[i] > t[i - 1])) throw ConfigError("beta table t must be strictly increasing");
    for (double b : beta)
        if (!std::isfinite(b) || b < 0.0) throw ConfigError("beta table values must be finite and >= 0");
    cumulative.assign(t.size(), 0.0);
    for (size_t i = 1; i < t.size(); ++i)
        cumulative[i] = cumulative[i - 1] + 0.5 * (beta[i] + beta[i - 1]) * (t[i] - t[i - 1]);
}

namespace {

size_t segment(const std::vector<double>& t, double s) {
    auto it = std::upper_bound(t.begin(), t.end(), s);
    size_t i = size_t(it - t.begin());
    if (i == 0) return 0;
    return std::min(i - 1, t.size() - 2);
}

}  // namespace

double BetaTable::value(double s) const {
    const size_t i = segment(t, s);
    const double w = (s - t[i]) / (t[i + 1] - t[i]);
    return beta[i] + w * (beta[i + 1] - beta[i]);
}

double BetaTable::integral(double s) const {
    const size_t i = segment(t, s);
    return cumulative[i] + 0.5 * (beta[i] + value(s)) * (s - t[i]);
}

Schedule Schedule::vp_const_beta(double beta0) {
    Schedule s;
    s.kind = ScheduleKind::vp_const_beta;
    s.beta0 = beta0;
    s.validate();
    return s;
}

Schedule Schedule::vp_generic(BetaTable table) {
    Schedule s;
    s.kind = ScheduleKind::vp_generic;
    s.table = std::make_shared<const BetaTable>(std::move(table));
    return s;
}

Schedule Schedule::linear_interp() { return Schedule{}; }

Schedule Schedule::oriented(Orientation o) const {
    Schedule s = *this;
    s.orientation = o;
    return s;
}

void Schedule::validate() const {
    if (kind == ScheduleKind::vp_const_beta && !(beta0 > 0.0 && std::isfinite(beta0)))
        throw ConfigError("vp_const_beta needs beta0 > 0");
    if (kind == ScheduleKind::vp_generic && !table) throw ConfigError("vp_generic needs a beta table");
    if (!(alpha_floor > 0.0)) throw ConfigError("alpha_floor must be > 0");
    if (!(fd_step > 0.0 && fd_step < 1.0)) throw ConfigError("fd_step must be in (0, 1)");
}

namespace {

void check_time(double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("time " + std::to_string(t) + " outside [0, 1]");
}

double base_time(const Schedule& s, double t) { return s.orientation == Orientation::data_at_zero ? t : 1.0 - t; }

// Log-decay integral: alpha = exp(-I/2).
double decay_integral(const Schedule& s, double tau) {
    return s.kind == ScheduleKind::vp_const_beta ? s.beta0 * tau : s.table->integral(tau);
}

double base_beta(const Schedule& s, double tau) {
    return s.kind == ScheduleKind::vp_const_beta ? s.beta0 : s.table->value(tau);
}

PathPoint base_point(const Schedule& s, double tau) {
    if (s.kind == ScheduleKind::linear_interp) return {1.0 - tau, tau};
    const double I = decay_integral(s, tau);
    return {std::exp(-0.5 * I), std::sqrt(-std::expm1(-I))};
}

PathRates base_rates(const Schedule& s, double tau) {
    if (s.kind == ScheduleKind::linear_interp) return {-1.0, 1.0};
    const PathPoint p = base_point(s, tau);
    const double ad = -0.5 * base_beta(s, tau) * p.alpha;
    return {ad, -p.alpha * ad / p.sigma};
}

}  // namespace

PathPoint evaluate(const Schedule& s, double t) {
    check_time(t);
    return base_point(s, base_time(s, t));
}

PathRates derivatives(const Schedule& s, double t) {
    check_time(t);
    const PathRates r = base_rates(s, base_time(s, t));
    if (s.orientation == Orientation::data_at_zero) return r;
    return {-r.alpha_dot, -r.sigma_dot};
}

PathRates derivatives_fd(const Schedule& s, double t) {
    check_time(t);
    if (t - s.fd_step < 0.0) throw DomainError("t - fd_step < 0 at t=" + std::to_string(t));
    const PathPoint a = evaluate(s, t);
    const PathPoint b = evaluate(s, t - s.fd_step);
    return {(a.alpha - b.alpha) / s.fd_step, (a.sigma - b.sigma) / s.fd_step};
}

double beta(const Schedule& s, double t) {
    const PathPoint p = evaluate(s, t);
    const PathRates r = derivatives(s, t);
    return -2.0 * r.alpha_dot / p.alpha;
}

namespace {

void guard(const Schedule& s, double t, const PathPoint& p) {
    if (p.alpha < s.alpha_floor)
        throw IllConditionedError("alpha(" + std::to_string(t) + ")=" + std::to_string(p.alpha) + " below alpha_floor", t);
    if (p.sigma < s.alpha_floor)
        throw IllConditionedError("sigma(" + std::to_string(t) + ")=" + std::to_string(p.sigma) + " below alpha_floor", t);
}

}  // namespace

double coefficient(ParamKind kind, const Schedule& s, double t) {
    if (kind == ParamKind::velocity) {
        check_time(t);
        return 1.0;
    }
    const PathPoint p = evaluate(s, t);
    guard(s, t, p);
    const PathRates r = derivatives(s, t);
    const double a = p.alpha, sg = p.sigma, ad = r.alpha_dot, sd = r.sigma_dot;
    switch (kind) {
        case ParamKind::noise_eps:
            return sd - ad * sg / a;
        case ParamKind::data_x0:
        case ParamKind::consistency:
            return ad - sd * a / sg;
        case ParamKind::v_pred:
            return (sd * a - ad * sg) / (a * a + sg * sg);
        case ParamKind::score:
            return -sg * (sd - ad * sg / a);
        case ParamKind::velocity:
            break;
    }
    return 1.0;
}

CoefficientForms coefficient_forms(ParamKind kind, const Schedule& s, double t) {
    const double general = coefficient(kind, s, t);
    if (kind == ParamKind::velocity) return {1.0, 1.0, 1.0, 0.0};
    const PathPoint p = evaluate(s, t);
    const PathRates r = derivatives(s, t);
    const double a = p.alpha, sg = p.sigma, ad = r.alpha_dot;
    const double b = -2.0 * ad / a;
    double vp = 0.0, bf = 0.0;
    switch (kind) {
        case ParamKind::noise_eps:
            vp = -ad / (a * sg);
            bf = b / (2.0 * sg);
            break;
        case ParamKind::data_x0:
        case ParamKind::consistency:
            vp = ad / (sg * sg);
            bf = -b * a / (2.0 * sg * sg);
            break;
        case ParamKind::v_pred:
            vp = -ad / sg;
            bf = b * a / (2.0 * sg);
            break;
        case ParamKind::score:
            vp = ad / a;
            bf = -0.5 * b;
            break;
        case ParamKind::velocity:
            break;
    }
    auto rel = [](double x, double y) {
        const double scale = std::max(std::abs(x), std::abs(y));
        return scale == 0.0 ? 0.0 : std::abs(x - y) / scale;
    };
    const double dis = std::max({rel(general, vp), rel(general, bf), rel(vp, bf)});
    return {general, vp, bf, dis};
}

BetaTable load_beta_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open beta table " + path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("beta table " + path + " is empty");
    if (line.find("t") == std::string::npos || line.find("beta") == std::string::npos)
        throw ConfigError("beta table " + path + " needs a 't,beta' header row");
    std::vector<double> t, b;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string a, c;
        if (!std::getline(row, a, ',') || !std::getline(row, c, ','))
            throw ConfigError("beta table row '" + line + "' is not 't,beta'");
        try {
            t.push_back(std::stod(a));
            b.push_back(std::stod(c));
        } catch (const std::exception&) {
            throw ConfigError("beta table row '" + line + "' is not numeric");
        }
    }
    return BetaTable(std::move(t), std::move(b));
}

const char* to_string(ParamKind k) {
    switch (k) {
        case ParamKind::noise_eps: return "noise_eps";
        case ParamKind::data_x0: return "data_x0";
        case ParamKind::v_pred: return "v_pred";
        case ParamKind::score: return "score";
        case ParamKind::velocity: return "velocity";
        case ParamKind::consistency: return "consistency";
    }
    return "?";
}

const char* to_string(ScheduleKind k) {
    switch (k) {
        case ScheduleKind::vp_const_beta: return "vp_const_beta";
        case ScheduleKind::vp_generic: return "vp_generic";
        case ScheduleKind::linear_interp: return "linear_interp";
    }
    return "?";
}

const char* to_string(Orientation o) { return o == Orientation::data_at_zero ? "data_at_zero" : "data_at_one"; }

ParamKind parse_param_kind(const std::string& s) {
    for (auto k : {ParamKind::noise_eps, ParamKind::data_x0, ParamKind::v_pred, ParamKind::score, ParamKind::velocity,
                   ParamKind::consistency})
        if (s == to_string(k)) return k;
    throw ConfigError("unknown parameterization '" + s + "'");
}

ScheduleKind parse_schedule_kind(const std::string& s) {
    for (auto k : {ScheduleKind::vp_const_beta, ScheduleKind::vp_generic, ScheduleKind::linear_interp})
        if (s == to_string(k)) return k;
    throw ConfigError("unknown schedule kind '" + s + "'");
}

Orientation parse_orientation(const std::string& s) {
    if (s == "data_at_zero") return Orientation::data_at_zero;
    if (s == "data_at_one") return Orientation::data_at_one;
    throw ConfigError("unknown orientation '" + s + "'");
}

}  // namespace chord
