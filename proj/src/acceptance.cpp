#include "fibwild/acceptance.hpp"
#include "fibwild/errors.hpp"
#include "fibwild/kneading.hpp"
#include "fibwild/mc_sim.hpp"
#include "fibwild/plmap.hpp"
#include "fibwild/thermo.hpp"
#include "fibwild/walk.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>

namespace fibwild {

namespace {

using json = nlohmann::json;

std::string fmt(const char* f, double a)
{
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string fmt(const char* f, double a, double b)
{
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

std::string fmt(const char* f, double a, double b, double c)
{
    char buf[200];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

const double kGoldenLambda = 2 / (3 + std::sqrt(5.0));

// 1: eval_F_linear against the iterate, 113-bit orbit
void c1_branch_linearity(CriterionResult& r, const AcceptanceOptions&)
{
    r.time_limit = 5;
    double worst = 0;
    int samples = 0;
    SplitMix64 rng(101);
    for (double lam : {0.3, 0.5, 0.7}) {
        auto m = fibonacci_family(lam, 200);
        auto mq = fibonacci_family<Quad>(Quad(lam), 200);
        for (int j = 1; j <= 12; ++j) {
            for (int i = 0; i < 100; ++i) {
                double x = m.z[j - 1] + (0.01 + 0.98 * rng.uniform()) * m.eps[j];
                if (i % 2)
                    x = 1 - x;
                double lin = eval_F_linear(m, x).first;
                double it = to_double(eval_F_iterate(mq, Quad(x)));
                worst = std::max(worst, std::abs(lin - it) / std::abs(it));
                ++samples;
            }
        }
    }
    r.pass = worst <= 1e-9;
    r.metrics = {{"max_relative_error", worst}, {"samples", samples}, {"tolerance", 1e-9}};
    r.summary = fmt("max relative error %.3g over %.0f samples (tol 1e-9)", worst, samples);
}

// 2: construction inequalities on the lambda grid
void c2_conditions(CriterionResult& r, const AcceptanceOptions&)
{
    r.time_limit = 2;
    int failures = 0, rows = 0;
    double worst_ratio = 0;
    for (int i = 1; i <= 19; ++i) {
        double lam = 0.05 * i;
        auto m = fibonacci_family(lam, 200);
        auto rep = verify_conditions(m, 40);
        for (const auto& row : rep.rows) {
            ++rows;
            if (!row.pass())
                ++failures;
            worst_ratio = std::max(worst_ratio, row.lhs / row.rhs_128);
            if (row.has_129)
                worst_ratio = std::max(worst_ratio, row.lhs / row.rhs_129);
        }
    }
    r.pass = failures == 0;
    r.metrics = {{"rows", rows}, {"failures", failures}, {"max_lhs_over_rhs", worst_ratio}};
    r.summary = fmt("%.0f rows checked, %.0f failures, max lhs/rhs %.3g", rows, failures, worst_ratio);
}

// 3: power iteration against the closed-form stationary vector
void c3_stationary(CriterionResult& r, const AcceptanceOptions&)
{
    r.time_limit = 1;
    double worst = 0;
    for (double lam : {0.2, 0.3, 0.4}) {
        auto A = transition_matrix(lam, fibonacci_kneading(210), 200);
        auto st = stationary_vector(A);
        auto cf = stationary_closed_form(lam, 200);
        for (int i = 1; i <= 200; ++i)
            worst = std::max(worst, std::abs(st.v[i] - cf[i]));
    }
    r.pass = worst < 1e-10;
    r.metrics = {{"max_abs_error", worst}, {"tolerance", 1e-10}};
    r.summary = fmt("max |v - v_closed| = %.3g (tol 1e-10)", worst);
}

// 4: regime bands and critical order
void c4_regimes(CriterionResult& r, const AcceptanceOptions&)
{
    struct Case {
        double lambda;
        Regime want;
    };
    const Case cases[] = {{kGoldenLambda - 1e-6, Regime::Acip},
                          {kGoldenLambda + 1e-6, Regime::SigmaFiniteInfinite},
                          {0.5, Regime::SigmaFiniteInfinite},
                          {0.5 + 1e-6, Regime::WildAttractor}};
    bool ok = true;
    json rows = json::array();
    for (const auto& c : cases) {
        auto got = classify(c.lambda).regime;
        ok = ok && got == c.want;
        rows.push_back({{"lambda", c.lambda}, {"regime", to_string(got)}, {"expected", to_string(c.want)}});
    }
    double o5 = std::abs(critical_order(0.5) - 5.0);
    double o4 = std::abs(critical_order(kGoldenLambda) - 4.0);
    ok = ok && o5 < 1e-12 && o4 < 1e-12;
    r.pass = ok;
    r.metrics = {{"regimes", rows}, {"order_error_half", o5}, {"order_error_golden", o4}};
    r.summary = std::string("regimes ") + (ok ? "as expected" : "mismatch") +
                fmt("; |order-5| = %.2g, |order-4| = %.2g", o5, o4);
}

template <class Real>
void pressure_transition(json& per_lambda, bool& ok, double& worst_residual)
{
    for (double lamd : {0.3, 0.45, 0.6, 0.7}) {
        Real lam(lamd);
        Real t1 = thermo_constants(lam, Real(1)).t1;
        bool zero_ok = true, pos_ok = true, dec_ok = true;
        double res_max = 0;
        Real prev = -1;
        for (int k = 0; k < 20; ++k) {
            Real t = t1 + Real(0.05) * k;
            auto pt = solve_pressure(lam, t);
            zero_ok = zero_ok && pt.p == 0;
        }
        for (int k = 0; k < 20; ++k) {
            // ascending t from t1 - 0.5 to t1 - 0.01
            Real t = t1 - Real(0.5) + Real(0.49) * k / 19;
            auto pt = solve_pressure(lam, t);
            pos_ok = pos_ok && pt.p > 0;
            if (k > 0)
                dec_ok = dec_ok && pt.p < prev;
            prev = pt.p;
            res_max = std::max(res_max, std::abs(to_double(pt.residual)));
        }
        bool this_ok = zero_ok && pos_ok && dec_ok && res_max < 1e-12;
        ok = ok && this_ok;
        worst_residual = std::max(worst_residual, res_max);
        per_lambda.push_back({{"lambda", lamd},
                              {"zero_above", zero_ok},
                              {"positive_below", pos_ok},
                              {"strictly_decreasing", dec_ok},
                              {"max_abs_H_minus_1", res_max}});
    }
}

// 5: p = 0 above t1, positive and decreasing below, H = 1 at each solved point
void c5_pressure_transition(CriterionResult& r, const AcceptanceOptions& o)
{
    r.time_limit = 60;
    int bits = o.precision_bits.value_or(113);
    json per = json::array();
    bool ok = true;
    double worst = 0;
    with_precision(bits, [&](auto zero) {
        using R = decltype(zero);
        pressure_transition<R>(per, ok, worst);
        return 0;
    });
    r.pass = ok;
    r.metrics = {{"precision_bits", bits}, {"lambdas", per}};
    r.summary = fmt("4 lambdas x 40 t-points at %.0f bits, max |H-1| = %.3g", bits, worst) +
                (ok ? "" : "; transition check failed");
}

// 6: equilibrium identity and Abramov
void c6_equilibrium(CriterionResult& r, const AcceptanceOptions&)
{
    bool ok = true;
    double worst_res = 0, worst_abr = 0;
    json rows = json::array();
    for (auto [lam, t] : {std::pair{0.3, 0.8}, std::pair{0.45, 0.9}}) {
        auto eq = equilibrium_data<double>(lam, t);
        double res = std::abs(pressure_identity_residual(eq));
        auto pd = project_measures(eq);
        double abr = std::abs(pd.entropy - t * pd.lyap - eq.p);
        ok = ok && res < 1e-6 && abr < 1e-6;
        worst_res = std::max(worst_res, res);
        worst_abr = std::max(worst_abr, abr);
        rows.push_back({{"lambda", lam},
                        {"t", t},
                        {"p", eq.p},
                        {"residual", res},
                        {"abramov_error", abr},
                        {"Lambda", eq.Lambda},
                        {"M", pd.M}});
    }
    r.pass = ok;
    r.metrics = {{"points", rows}};
    r.summary = fmt("max identity residual %.3g, max Abramov error %.3g (tol 1e-6)", worst_res, worst_abr);
}

template <class Real>
void scaling_fit(double lamd, std::vector<double>& xs, std::vector<double>& ys)
{
    Real lam(lamd);
    Real t1 = thermo_constants(lam, Real(1)).t1;
    for (int k = 0; k <= 8; ++k) {
        Real delta = pow(Real(10), Real(-2) - Real(k) / 4);
        auto pt = solve_pressure(lam, Real(t1 - delta));
        xs.push_back(to_double(Real(1 / sqrt(delta))));
        ys.push_back(-to_double(Real(log(pt.p))));
    }
}

// 7: slope of -log p against (t1 - t)^{-1/2}
void c7_scaling(CriterionResult& r, const AcceptanceOptions& o)
{
    r.time_limit = 120;
    int bits = o.precision_bits.value_or(256);
    std::vector<double> xs, ys;
    with_precision(bits, [&](auto zero) {
        scaling_fit<decltype(zero)>(0.7, xs, ys);
        return 0;
    });
    double n = double(xs.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    double a = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double b = (sy - a * sx) / n;
    double Gamma = thermo_constants<double>(0.7, 1.0).Gamma;
    double lo = 0.9 * (5.0 / 6.0) * Gamma, hi = 1.1 * pi_value<double>() * Gamma;
    r.pass = a >= lo && a <= hi;
    r.metrics = {{"precision_bits", bits}, {"slope", a}, {"intercept", b}, {"Gamma", Gamma},
                 {"lower", lo},          {"upper", hi}, {"x", xs},       {"minus_log_p", ys}};
    r.summary = fmt("fitted slope %.4f, required [%.4f, %.4f]", a, lo, hi);
}

// 8: k0 estimate against the exact index
void c8_k0(CriterionResult& r, const AcceptanceOptions&)
{
    std::vector<std::pair<double, double>> pairs = {{0.1, 0.95}, {0.1, 0.99},  {0.2, 0.95},
                                                    {0.2, 0.99}, {0.3, 0.95},  {0.3, 0.99},
                                                    {0.3, 0.999}, {0.4, 0.99}, {0.45, 0.999}};
    for (double l : {0.1, 0.2, 0.3, 0.4, 0.45})
        pairs.push_back({l, thermo_constants<double>(l, 1.0).t2 - 1e-4});
    for (double l : {0.7, 0.8})
        for (double d : {1e-2, 1e-3, 1e-4})
            pairs.push_back({l, thermo_constants<double>(l, 1.0).t2 - d});
    int worst = 0, agree = 0;
    json rows = json::array();
    std::vector<std::string> cases;
    for (auto [lam, t] : pairs) {
        auto exact = first_negative_index_p0<double>(lam, t);
        int est = k0_estimate(lam, t);
        int diff = exact ? std::abs(est - *exact) : 1 << 30;
        worst = std::max(worst, diff);
        agree += diff <= 2;
        // the three branches of the estimate: distinct real roots, near t2 with lambda^t <= 1/2, complex above 1/2
        if (root_case<double>(lam, t) == RootCase::RealRoots)
            cases.push_back("real-roots");
        else
            cases.push_back(std::pow(lam, t) <= 0.5 ? "near-t2" : "complex-roots");
        rows.push_back({{"lambda", lam},
                        {"t", t},
                        {"case", cases.back()},
                        {"estimate", est},
                        {"exact", exact ? json(*exact) : json(nullptr)}});
    }
    std::sort(cases.begin(), cases.end());
    cases.erase(std::unique(cases.begin(), cases.end()), cases.end());
    r.pass = agree == static_cast<int>(pairs.size()) && cases.size() == 3;
    r.metrics = {{"pairs", rows}, {"max_abs_difference", worst}, {"cases", cases}};
    r.summary = fmt("%.0f/%.0f pairs within +-2 (max |diff| %.0f), ", agree, double(pairs.size()), worst) +
                std::to_string(cases.size()) + " estimate cases";
}

// 9: Monte Carlo escape and occupation
void c9_monte_carlo(CriterionResult& r, const AcceptanceOptions& o)
{
    r.time_limit = 60;
    WalkConfig up;
    up.lambda = 0.6;
    up.n_walkers = 10000;
    up.n_steps = 10000;
    up.threshold = 50;
    up.seed = o.seed;
    up.n_threads = o.threads;
    auto a = simulate_walk(up);
    WalkConfig down = up;
    down.lambda = 0.4;
    down.n_steps = 100000;
    auto b = simulate_walk(down);
    double tv = b.tv_distance.value_or(1.0);
    r.pass = a.escape_fraction >= 0.99 && tv < 0.02;
    r.metrics = {{"seed", o.seed},
                 {"escape_fraction_0.6", a.escape_fraction},
                 {"tv_distance_0.4", tv},
                 {"drift_0.6", a.drift},
                 {"drift_0.4", b.drift}};
    r.summary = fmt("escape(0.6) = %.4f (>= 0.99), TV(0.4) = %.3g (< 0.02)", a.escape_fraction, tv);
}

// 10: critical orbit derivative, 113-bit map
void c10_critical_derivative(CriterionResult& r, const AcceptanceOptions&)
{
    double worst = 0;
    for (double lamd : {0.4, 0.5, 0.6}) {
        Quad lam(lamd);
        auto m = fibonacci_family<Quad>(lam, 200);
        Quad target = 1 / ((lam * (1 - lam)) * (lam * (1 - lam)));
        for (int k = 4; k <= 20; ++k) {
            Quad d = critical_derivative_check(m, k);
            worst = std::max(worst, to_double(Quad(abs(d - target) / target)));
        }
    }
    r.pass = worst < 1e-9;
    r.metrics = {{"k_range", {4, 20}}, {"max_relative_error", worst}, {"tolerance", 1e-9}};
    r.summary = fmt("max relative error %.3g over k = 4..20 (tol 1e-9)", worst);
}

// 11: normalisations and density monotonicity
void c11_normalisations(CriterionResult& r, const AcceptanceOptions&)
{
    double m_err = 0, mu_err = 0, g_err = 0;
    for (auto [lam, t] : {std::pair{0.3, 0.8}, std::pair{0.4, 1.0}, std::pair{0.6, 0.5}, std::pair{0.8, 0.6},
                          std::pair{0.5, 1.0}})
        m_err = std::max(m_err, std::abs(closed_form_conformal_masses(lam, t).total - 1));
    for (auto [lam, t] : {std::pair{0.3, 0.8}, std::pair{0.4, 1.0}, std::pair{0.45, 0.9}})
        mu_err = std::max(mu_err, std::abs(closed_form_measures(lam, t).total - 1));
    bool increasing = true;
    double ratio = 0;
    for (auto [lam, t] : {std::pair{0.3, 0.8}, std::pair{0.45, 0.9}}) {
        auto eq = equilibrium_data<double>(lam, t);
        for (int i = 1; i <= eq.N; ++i)
            g_err = std::max(g_err, std::abs(eq.row_sum(i) - 1));
        for (int k = 2; k <= eq.N; ++k)
            increasing = increasing && eq.density[k] >= eq.density[k - 1] * (1 - 1e-12);
        auto [mn, mx] = std::minmax_element(eq.density.begin() + 1, eq.density.end());
        ratio = std::max(ratio, *mx / *mn);
    }
    r.pass = m_err < 1e-12 && mu_err < 1e-12 && g_err < 1e-12 && increasing && std::isfinite(ratio);
    r.metrics = {{"conformal_sum_error", m_err},
                 {"invariant_sum_error", mu_err},
                 {"G_row_error", g_err},
                 {"density_increasing", increasing},
                 {"density_max_over_min", ratio}};
    r.summary = fmt("sum errors m %.2g, mu %.2g, G rows %.2g", m_err, mu_err, g_err) + "; density " +
                (increasing ? "increasing" : "NOT increasing") + fmt(", max/min %.4g", ratio);
}

// 12: Gurevich growth rates at the solved pressure
void c12_gurevich(CriterionResult& r, const AcceptanceOptions&)
{
    double lam = 0.6;
    double t = thermo_constants<double>(lam, 1.0).t1 - 0.05;
    auto pt = solve_pressure<double>(lam, t);
    auto g = gurevich_diagnostic<double>(lam, t, pt.p, 15, 60);
    bool monotone = true;
    std::vector<double> rates;
    for (int n = 5; n <= 15; ++n) {
        rates.push_back(g.rate[n]);
        if (n > 5)
            monotone = monotone && std::abs(g.rate[n]) <= std::abs(g.rate[n - 1]);
    }
    double final_rate = g.rate[15];
    r.pass = monotone && std::abs(final_rate) < 0.05;
    r.metrics = {{"lambda", lam},       {"t", t},
                 {"p", pt.p},           {"rates_n5_to_15", rates},
                 {"monotone", monotone}, {"final", final_rate},
                 {"step_rate_15", g.step_rate[15]}};
    r.summary = fmt("(1/n) log Z_n: n=5 %.4f, n=15 %.4f (need |.| < 0.05)", g.rate[5], final_rate) +
                (monotone ? ", monotone" : ", not monotone");
}

struct Entry {
    const char* name;
    void (*fn)(CriterionResult&, const AcceptanceOptions&);
};

const Entry kCriteria[criterion_count] = {
    {"branch linearity against the iterate", c1_branch_linearity},
    {"construction conditions on the lambda grid", c2_conditions},
    {"stationary vector closed form", c3_stationary},
    {"regime boundaries and critical order", c4_regimes},
    {"pressure transition at t1", c5_pressure_transition},
    {"equilibrium identity and Abramov formula", c6_equilibrium},
    {"pressure scaling near t1", c7_scaling},
    {"k0 estimate agreement", c8_k0},
    {"Monte Carlo escape and occupation", c9_monte_carlo},
    {"critical orbit derivative", c10_critical_derivative},
    {"normalisations and density", c11_normalisations},
    {"Gurevich growth rates", c12_gurevich},
};

} // namespace

CriterionResult run_criterion(int id, const AcceptanceOptions& opts)
{
    if (id < 1 || id > criterion_count)
        throw InvalidArgument("criterion must be in 1.." + std::to_string(criterion_count));
    CriterionResult r;
    r.id = id;
    r.name = kCriteria[id - 1].name;
    auto t0 = std::chrono::steady_clock::now();
    try {
        kCriteria[id - 1].fn(r, opts);
    } catch (const Error& e) {
        r.pass = false;
        r.summary = std::string(e.kind()) + ": " + e.what();
    } catch (const std::exception& e) {
        r.pass = false;
        r.summary = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (r.time_limit > 0 && r.seconds > r.time_limit) {
        r.pass = false;
        r.summary += fmt(" [runtime %.1f s exceeds %.0f s]", r.seconds, r.time_limit);
    }
    return r;
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts, std::vector<int> ids)
{
    if (ids.empty())
        for (int i = 1; i <= criterion_count; ++i)
            ids.push_back(i);
    std::vector<CriterionResult> out;
    for (int id : ids)
        out.push_back(run_criterion(id, opts));
    return out;
}

void to_json(nlohmann::json& j, const CriterionResult& r)
{
    j = nlohmann::json{{"id", r.id},
                       {"name", r.name},
                       {"pass", r.pass},
                       {"seconds", r.seconds},
                       {"time_limit", r.time_limit},
                       {"summary", r.summary},
                       {"metrics", r.metrics}};
}

void from_json(const nlohmann::json& j, CriterionResult& r)
{
    r.id = j.at("id").get<int>();
    r.name = j.at("name").get<std::string>();
    r.pass = j.at("pass").get<bool>();
    r.seconds = j.at("seconds").get<double>();
    r.time_limit = j.at("time_limit").get<double>();
    r.summary = j.at("summary").get<std::string>();
    r.metrics = j.at("metrics");
}

} // namespace fibwild
