/** @file main.cpp
 *  @brief `fibwild` command-line front end.
 */

#include "run_config.hpp"

#include "fibwild/acceptance.hpp"
#include "fibwild/kneading.hpp"
#include "fibwild/mc_sim.hpp"
#include "fibwild/plmap.hpp"
#include "fibwild/thermo.hpp"
#include "fibwild/walk.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <functional>
#include <future>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using nlohmann::json;

namespace fibwild::cli {
namespace {

constexpr int exit_ok = 0;
constexpr int exit_failure = 1;
constexpr int exit_usage = 2;

/// Evaluates compute(i) for i < n on up to `threads` workers and hands results to emit in index order.
template <class Result, class Compute, class Emit>
void ordered_parallel(std::size_t n, int threads, Compute compute, Emit emit)
{
    std::size_t width = threads > 0 ? std::size_t(threads) : std::max(1u, std::thread::hardware_concurrency());
    std::deque<std::future<Result>> pending;
    std::size_t next = 0;
    while (next < n || !pending.empty()) {
        while (next < n && pending.size() < width) {
            pending.push_back(std::async(std::launch::async, compute, next));
            ++next;
        }
        emit(pending.front().get());
        pending.pop_front();
    }
}

std::string fmt(double x)
{
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    return to_string_full(x);
}

std::string error_status(const std::exception& e)
{
    if (auto* fe = dynamic_cast<const Error*>(&e))
        return fe->kind();
    return "Error";
}

/// "a:b:s" -> a, a+s, ..., up to b inclusive.
std::vector<double> parse_grid(const std::string& spec)
{
    double a, b, s;
    char c1, c2;
    std::istringstream is(spec);
    if (!(is >> a >> c1 >> b >> c2 >> s) || c1 != ':' || c2 != ':' || !(is >> std::ws).eof())
        throw InvalidArgument("grid must have the form start:stop:step");
    if (!(s > 0) || b < a)
        throw InvalidArgument("grid needs step > 0 and stop >= start");
    auto n = static_cast<std::size_t>(std::floor((b - a) / s + 1e-9)) + 1;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = std::round((a + double(i) * s) * 1e12) / 1e12;
    return out;
}

std::vector<double> lambda_values(const std::vector<double>& single, const std::string& grid)
{
    std::vector<double> out = single;
    if (!grid.empty()) {
        auto g = parse_grid(grid);
        out.insert(out.end(), g.begin(), g.end());
    }
    if (out.empty())
        throw InvalidArgument("give --lambda or --lambda-grid");
    return out;
}

void add_emit(CLI::App* sub, std::string& emit, const std::string& def)
{
    emit = def;
    sub->add_option("--emit", emit, "output format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
}

void add_output(CLI::App* sub, RunConfig& cfg)
{
    sub->add_option("-o,--output", cfg.output, "write to this file instead of stdout");
}

void add_precision(CLI::App* sub, RunConfig& cfg)
{
    sub->add_option("--precision-bits", cfg.precision_bits, "mantissa bits: 53, 113 or 256")
        ->check(CLI::IsMember({53, 113, 256}));
}

Format to_format(const std::string& s) { return s == "json" ? Format::Json : Format::Csv; }

// kneading

struct KneadingArgs {
    std::string family = "fibonacci";
    double r = 0.5;
    int depth = 30;
    int prefix = 2;
    std::string emit;
};

int cmd_kneading(const KneadingArgs& a, RunConfig cfg)
{
    cfg.format = to_format(a.emit);
    if (a.depth < 1)
        throw InvalidArgument("depth must be >= 1");
    KneadingData kd = a.family == "fibonacci" ? fibonacci_kneading(a.depth) : floor_r_kneading(a.r, a.depth, a.prefix);
    Output out(cfg.output);
    auto& os = out.stream();
    if (cfg.format == Format::Json) {
        os << json(kd).dump() << "\n";
    } else {
        os << "k,Q,S\n";
        for (int k = 0; k <= kd.K; ++k)
            os << k << "," << kd.q(k) << "," << kd.s(k).str() << "\n";
    }
    return exit_ok;
}

// map

struct MapArgs {
    double lambda = 0.3;
    int depth = 200;
    bool verify = false;
    int J = 40;
    std::vector<double> eval;
    std::string emit;
};

int cmd_map(const MapArgs& a, RunConfig cfg)
{
    cfg.format = to_format(a.emit);
    auto m = fibonacci_family<double>(a.lambda, a.depth);
    Output out(cfg.output);
    auto& os = out.stream();

    std::optional<ConditionReport<double>> cond;
    if (a.verify)
        cond = verify_conditions(m, std::min(a.J, m.N - 1));

    struct EvalRow {
        double x;
        std::optional<double> f, F;
        std::optional<int> branch;
        std::string status = "ok";
    };
    std::vector<EvalRow> evals;
    for (double x : a.eval) {
        EvalRow r;
        r.x = x;
        try {
            r.f = eval_f(m, x);
            auto [Fx, info] = eval_F_linear(m, x);
            r.F = Fx;
            r.branch = info.j;
        } catch (const Error& e) {
            r.status = e.kind();
        }
        evals.push_back(r);
    }

    if (cfg.format == Format::Json) {
        json j = plmap_to_json(m);
        if (cond) {
            json rows = json::array();
            for (const auto& row : cond->rows) {
                json jr{{"j", row.j}, {"lhs", row.lhs}, {"rhs_128", row.rhs_128}, {"pass_128", row.pass_128}};
                if (row.has_129) {
                    jr["rhs_129"] = row.rhs_129;
                    jr["pass_129"] = row.pass_129;
                }
                rows.push_back(jr);
            }
            j["conditions"] = {{"all_pass", cond->all_pass}, {"rows", rows}};
        }
        if (!evals.empty()) {
            json je = json::array();
            for (const auto& r : evals) {
                json e{{"x", r.x}, {"status", r.status}};
                if (r.f)
                    e["f"] = *r.f;
                if (r.F)
                    e["F"] = *r.F;
                if (r.branch)
                    e["branch"] = *r.branch;
                je.push_back(e);
            }
            j["eval"] = je;
        }
        os << j.dump() << "\n";
    } else if (!evals.empty()) {
        os << "x,f,F,branch,status\n";
        for (const auto& r : evals)
            os << fmt(r.x) << "," << (r.f ? fmt(*r.f) : "") << "," << (r.F ? fmt(*r.F) : "") << ","
               << (r.branch ? std::to_string(*r.branch) : "") << "," << r.status << "\n";
    } else if (cond) {
        os << "j,lhs,rhs_128,rhs_129,pass\n";
        for (const auto& row : cond->rows)
            os << row.j << "," << fmt(row.lhs) << "," << fmt(row.rhs_128) << ","
               << (row.has_129 ? fmt(row.rhs_129) : "") << "," << (row.pass() ? "true" : "false") << "\n";
    } else {
        os << "j,eps,z,kappa,s,orientation,side\n";
        for (int j = 0; j <= m.N; ++j) {
            os << j << "," << fmt(m.eps[j]) << "," << fmt(m.z[j]) << "," << fmt(m.kappa[j]) << ",";
            if (j > 0)
                os << fmt(m.s[j]) << "," << m.orientation[j] << "," << to_string(m.side[j]);
            else
                os << ",,";
            os << "\n";
        }
    }
    return cond && !cond->all_pass ? exit_failure : exit_ok;
}

// classify

struct ClassifyArgs {
    std::vector<double> lambda;
    std::string grid;
    std::string emit;
};

int cmd_classify(const ClassifyArgs& a, RunConfig cfg)
{
    cfg.format = to_format(a.emit);
    auto lambdas = lambda_values(a.lambda, a.grid);
    Output out(cfg.output);
    auto& os = out.stream();
    struct Row {
        double lambda;
        std::optional<ClassifyRow> row;
        std::string status;
    };
    json all = json::array();
    if (cfg.format == Format::Csv)
        os << "lambda,drift,second_moment,tail_ratio,regime,status\n";
    ordered_parallel<Row>(
        lambdas.size(), cfg.threads,
        [&](std::size_t i) {
            Row r{lambdas[i], std::nullopt, "ok"};
            try {
                r.row = classify(lambdas[i]);
            } catch (const std::exception& e) {
                r.status = error_status(e);
            }
            return r;
        },
        [&](const Row& r) {
            if (cfg.format == Format::Json) {
                json j = r.row ? json(*r.row) : json{{"lambda", r.lambda}};
                j["status"] = r.status;
                all.push_back(j);
                return;
            }
            os << fmt(r.lambda) << ",";
            if (r.row)
                os << fmt(r.row->drift) << "," << fmt(r.row->second_moment) << "," << fmt(r.row->tail_ratio) << ","
                   << to_string(r.row->regime);
            else
                os << ",,,";
            os << "," << r.status << "\n" << std::flush;
        });
    if (cfg.format == Format::Json)
        os << all.dump() << "\n";
    return exit_ok;
}

// pressure

struct PressureArgs {
    double lambda = 0.7;
    std::string t_min = "0.5", t_max = "1";
    int steps = 20;
    std::string emit;
};

struct PressureRow {
    std::string t, p, residual;
    std::optional<double> lower, upper;
    int iterations = 0;
    std::string status = "ok";
};

template <class Real>
PressureRow pressure_row(const Real& lambda, const Real& t, const PressureOptions& opts)
{
    PressureRow r;
    r.t = to_string_full(t);
    try {
        auto pp = solve_pressure(lambda, t, opts);
        r.p = to_string_full(pp.p);
        r.residual = to_string_full(pp.residual);
        r.iterations = pp.iterations;
    } catch (const std::exception& e) {
        r.status = error_status(e);
    }
    try {
        auto b = pressure_bounds(to_double(lambda), to_double(t));
        if (b.available) {
            r.lower = b.lower;
            r.upper = b.upper;
        }
    } catch (const Error&) {
    }
    return r;
}

int cmd_pressure(const PressureArgs& a, RunConfig cfg)
{
    cfg.format = to_format(a.emit);
    cfg.validate();
    if (a.steps < 1)
        throw InvalidArgument("steps must be >= 1");
    PressureOptions opts;
    opts.sum_tol = cfg.sum_tol;
    opts.max_terms = cfg.max_terms;
    opts.max_iterations = cfg.max_iterations;

    Output out(cfg.output);
    auto& os = out.stream();
    json all = json::array();
    bool any_error = false;
    if (cfg.format == Format::Csv)
        os << "t,p,residual,lower_factor,upper_factor,status\n";

    with_precision(cfg.precision_bits, [&](auto zero) {
        using Real = decltype(zero);
        const Real lambda = Real(a.lambda);
        const Real lo = from_string<Real>(a.t_min), hi = from_string<Real>(a.t_max);
        if (hi < lo)
            throw InvalidArgument("t-max must not be below t-min");
        ordered_parallel<PressureRow>(
            std::size_t(a.steps), cfg.threads,
            [&](std::size_t i) {
                Real t = a.steps == 1 ? lo : lo + (hi - lo) * Real(int(i)) / Real(a.steps - 1);
                return pressure_row(lambda, t, opts);
            },
            [&](const PressureRow& r) {
                any_error = any_error || r.status != "ok";
                if (cfg.format == Format::Json) {
                    json j{{"t", r.t}, {"status", r.status}, {"iterations", r.iterations}};
                    j["p"] = r.p.empty() ? json(nullptr) : json(r.p);
                    j["residual"] = r.residual.empty() ? json(nullptr) : json(r.residual);
                    j["lower_factor"] = r.lower ? json(*r.lower) : json(nullptr);
                    j["upper_factor"] = r.upper ? json(*r.upper) : json(nullptr);
                    all.push_back(j);
                    return;
                }
                os << r.t << "," << r.p << "," << r.residual << "," << (r.lower ? fmt(*r.lower) : "") << ","
                   << (r.upper ? fmt(*r.upper) : "") << "," << r.status << "\n"
                   << std::flush;
            });
    });
    if (cfg.format == Format::Json)
        os << json{{"lambda", a.lambda}, {"precision_bits", cfg.precision_bits}, {"rows", all}}.dump() << "\n";
    return exit_ok;
}

// measures

struct MeasuresArgs {
    double lambda = 0.3;
    double t = 0.8;
    std::string emit;
};

int cmd_measures(const MeasuresArgs& a, RunConfig cfg)
{
    cfg.format = to_format(a.emit);
    cfg.validate();
    auto cf = closed_form_measures(a.lambda, a.t, cfg.depth);
    Output out(cfg.output);
    auto& os = out.stream();

    if (cfg.format == Format::Csv) {
        os << "j,m,v,mu_left,mu_right\n";
        for (std::size_t j = 1; j < cf.v.size(); ++j)
            os << j << "," << fmt(cf.conformal.m[j]) << "," << fmt(cf.v[j]) << "," << fmt(cf.mu_left[j]) << ","
               << fmt(cf.mu_right[j]) << "\n";
        return exit_ok;
    }

    auto from1 = [](const std::vector<double>& x) { return std::vector<double>(x.begin() + 1, x.end()); };
    json j{{"lambda", a.lambda},
           {"t", a.t},
           {"closed_form",
            {{"m", from1(cf.conformal.m)},
             {"m_total", cf.conformal.total},
             {"v", from1(cf.v)},
             {"zeta", cf.zeta},
             {"mu_left", from1(cf.mu_left)},
             {"mu_right", from1(cf.mu_right)},
             {"mu_total", cf.total}}}};
    json eqj{{"precision_bits", cfg.precision_bits}, {"status", "ok"}};
    try {
        with_precision(cfg.precision_bits, [&](auto zero) {
            using Real = decltype(zero);
            PressureOptions opts;
            opts.sum_tol = cfg.sum_tol;
            opts.max_terms = cfg.max_terms;
            opts.max_iterations = cfg.max_iterations;
            auto eq = equilibrium_data(Real(a.lambda), Real(a.t), opts);
            auto pr = project_measures(eq);
            eqj["p"] = to_string_full(eq.p);
            eqj["N"] = eq.N;
            eqj["entropy"] = to_double(eq.entropy);
            eqj["entropy_tail_bound"] = to_double(eq.entropy_tail_bound);
            eqj["lyapunov"] = to_double(eq.lyap);
            eqj["mean_inducing_time"] = to_double(eq.Lambda);
            eqj["M"] = to_double(eq.M);
            eqj["zeta"] = to_double(eq.zeta);
            eqj["identity_residual"] = to_double(pressure_identity_residual(eq));
            eqj["projected"] = {{"entropy", to_double(pr.entropy)},
                                {"lyapunov", to_double(pr.lyap)},
                                {"pressure_check", to_double(pr.pressure_check)}};
            std::vector<double> density;
            for (std::size_t k = 1; k < eq.density.size(); ++k)
                density.push_back(to_double(eq.density[k]));
            eqj["density"] = density;
        });
    } catch (const std::exception& e) {
        eqj["status"] = error_status(e);
        eqj["message"] = e.what();
    }
    j["equilibrium"] = eqj;
    os << j.dump() << "\n";
    return exit_ok;
}

// dims

struct DimsArgs {
    std::vector<double> lambda;
    std::string grid;
    std::string emit;
};

int cmd_dims(const DimsArgs& a, RunConfig cfg)
{
    cfg.format = to_format(a.emit);
    auto lambdas = lambda_values(a.lambda, a.grid);
    Output out(cfg.output);
    auto& os = out.stream();
    json all = json::array();
    if (cfg.format == Format::Csv)
        os << "lambda,dim_hyp,status\n";
    for (double l : lambdas) {
        std::optional<double> d;
        std::string status = "ok";
        try {
            d = hyperbolic_dimension(l);
        } catch (const std::exception& e) {
            status = error_status(e);
        }
        if (cfg.format == Format::Json)
            all.push_back({{"lambda", l}, {"dim_hyp", d ? json(*d) : json(nullptr)}, {"status", status}});
        else
            os << fmt(l) << "," << (d ? fmt(*d) : "") << "," << status << "\n";
    }
    if (cfg.format == Format::Json)
        os << all.dump() << "\n";
    return exit_ok;
}

// recurrence

struct RecurrenceArgs {
    double lambda = 0.3;
    double t = 1.0;
    std::string emit;
};

int cmd_recurrence(const RecurrenceArgs& a, RunConfig cfg)
{
    cfg.format = to_format(a.emit);
    auto r = classify_recurrence(a.lambda, a.t);
    Output out(cfg.output);
    auto& os = out.stream();
    if (cfg.format == Format::Json)
        os << json(r).dump() << "\n";
    else
        os << "lambda,t,t1,induced,original\n"
           << fmt(r.lambda) << "," << fmt(r.t) << "," << fmt(r.t1) << "," << to_string(r.induced) << ","
           << to_string(r.original) << "\n";
    return exit_ok;
}

// simulate

struct SimulateArgs {
    WalkConfig walk;
    std::string emit;
};

int cmd_simulate(SimulateArgs a, RunConfig cfg)
{
    cfg.format = to_format(a.emit);
    a.walk.seed = cfg.seed;
    a.walk.n_threads = cfg.threads;
    if (!(a.walk.lambda > 0 && a.walk.lambda < 1))
        throw InvalidArgument("lambda must lie in (0,1)");
    if (a.walk.n_walkers < 1 || a.walk.n_steps < 0 || a.walk.threshold < 1 || a.walk.state_cap < a.walk.threshold)
        throw InvalidArgument("need walkers >= 1, steps >= 0, 1 <= threshold <= state cap");
    auto r = simulate_walk(a.walk);
    Output out(cfg.output);
    auto& os = out.stream();
    if (cfg.format == Format::Json) {
        os << json(r).dump() << "\n";
    } else {
        os << "lambda,walkers,steps,seed,threshold,escape_fraction,frozen_fraction,drift,drift_stderr,"
              "drift_expected,rows_outside,tv_distance\n";
        os << fmt(r.lambda) << "," << r.n_walkers << "," << r.n_steps << "," << r.seed << "," << r.threshold << ","
           << fmt(r.escape_fraction) << "," << fmt(r.frozen_fraction) << "," << fmt(r.drift) << ","
           << fmt(r.drift_stderr) << "," << fmt(r.drift_expected) << "," << rows_outside(r) << ","
           << (r.tv_distance ? fmt(*r.tv_distance) : "") << "\n";
    }
    return exit_ok;
}

// verify

struct VerifyArgs {
    std::vector<int> criteria;
    bool precision_given = false;
    std::string emit = "table";
};

int cmd_verify(const VerifyArgs& a, RunConfig cfg)
{
    AcceptanceOptions opts;
    if (a.precision_given)
        opts.precision_bits = cfg.precision_bits;
    opts.seed = cfg.seed;
    opts.threads = cfg.threads;
    Output out(cfg.output);
    auto& os = out.stream();
    bool ok = true;
    json all = json::array();
    if (a.emit == "csv")
        os << "id,name,pass,seconds,time_limit,summary\n";
    std::vector<int> ids = a.criteria;
    if (ids.empty())
        for (int i = 1; i <= criterion_count; ++i)
            ids.push_back(i);
    for (int id : ids) {
        auto r = run_criterion(id, opts);
        ok = ok && r.pass;
        if (a.emit == "json") {
            all.push_back(r);
        } else if (a.emit == "csv") {
            os << r.id << "," << csv_field(r.name) << "," << (r.pass ? "true" : "false") << "," << fmt(r.seconds)
               << "," << fmt(r.time_limit) << "," << csv_field(r.summary) << "\n"
               << std::flush;
        } else {
            char buf[160];
            std::snprintf(buf, sizeof buf, "%2d  %s  %-45s %8.2fs  ", r.id, r.pass ? "PASS" : "FAIL", r.name.c_str(),
                          r.seconds);
            os << buf << r.summary << "\n" << std::flush;
        }
    }
    if (a.emit == "json")
        os << json{{"all_pass", ok}, {"criteria", all}}.dump() << "\n";
    else if (a.emit == "table")
        os << (ok ? "all criteria pass" : "some criteria fail") << "\n";
    return ok ? exit_ok : exit_failure;
}

} // namespace

int run(int argc, char** argv)
{
    CLI::App app{"Fibonacci-type piecewise-linear interval maps: construction, regimes, pressure, measures"};
    app.require_subcommand(1);
    RunConfig cfg;
    std::function<int()> action;

    try {
        cfg.precision_bits = default_precision_bits();
    } catch (const Error& e) {
        std::fprintf(stderr, "fibwild: %s\n", e.what());
        return exit_usage;
    }

    KneadingArgs kn;
    auto* sk = app.add_subcommand("kneading", "kneading map Q and cutting times S");
    sk->add_option("--family", kn.family, "kneading family")->check(CLI::IsMember({"fibonacci", "floor-r"}));
    sk->add_option("--r", kn.r, "slope r for Q(k) = floor(r k)")->check(CLI::Range(0.0, 1.0));
    sk->add_option("--depth", kn.depth, "largest index K")->capture_default_str();
    sk->add_option("--prefix", kn.prefix, "Fibonacci prefix length for floor-r")->capture_default_str();
    add_emit(sk, kn.emit, "json");
    add_output(sk, cfg);
    sk->callback([&] { action = [&] { return cmd_kneading(kn, cfg); }; });

    MapArgs ma;
    auto* sm = app.add_subcommand("map", "build the piecewise-linear map of the Fibonacci family");
    sm->add_option("--lambda", ma.lambda, "geometric ratio in (0,1)")->required();
    sm->add_option("--depth", ma.depth, "number of branches N")->capture_default_str();
    sm->add_flag("--verify-conditions", ma.verify, "check the construction inequalities for 2 <= j <= J");
    sm->add_option("--J", ma.J, "last branch checked by --verify-conditions")->capture_default_str();
    sm->add_option("--eval", ma.eval, "evaluate f and the induced map at x (repeatable)");
    add_emit(sm, ma.emit, "json");
    add_output(sm, cfg);
    sm->callback([&] { action = [&] { return cmd_map(ma, cfg); }; });

    ClassifyArgs ca;
    auto* sc = app.add_subcommand("classify", "attractor regime from the induced random walk");
    sc->add_option("--lambda", ca.lambda, "lambda value (repeatable)");
    sc->add_option("--lambda-grid", ca.grid, "start:stop:step");
    add_emit(sc, ca.emit, "csv");
    add_output(sc, cfg);
    sc->add_option("--threads", cfg.threads, "worker threads (0: all cores)");
    sc->callback([&] { action = [&] { return cmd_classify(ca, cfg); }; });

    PressureArgs pa;
    auto* sp = app.add_subcommand("pressure", "pressure curve t -> p(t)");
    sp->add_option("--lambda", pa.lambda, "lambda in (0,1)")->required();
    sp->add_option("--t-min", pa.t_min, "first t")->capture_default_str();
    sp->add_option("--t-max", pa.t_max, "last t")->capture_default_str();
    sp->add_option("--steps", pa.steps, "number of grid points")->capture_default_str();
    add_precision(sp, cfg);
    sp->add_option("--sum-tol", cfg.sum_tol, "tolerance on the weight sum")->capture_default_str();
    sp->add_option("--max-terms", cfg.max_terms, "weight terms before PrecisionExhausted")->capture_default_str();
    sp->add_option("--max-iterations", cfg.max_iterations, "bisection iteration cap")->capture_default_str();
    sp->add_option("--threads", cfg.threads, "worker threads (0: all cores)");
    add_emit(sp, pa.emit, "csv");
    add_output(sp, cfg);
    sp->callback([&] { action = [&] { return cmd_pressure(pa, cfg); }; });

    MeasuresArgs me;
    auto* sme = app.add_subcommand("measures", "conformal and invariant measures, equilibrium data");
    sme->add_option("--lambda", me.lambda, "lambda in (0,1)")->required();
    sme->add_option("--t", me.t, "potential parameter t > 0")->required();
    sme->add_option("--depth", cfg.depth, "branches in the closed-form tables (0: automatic)");
    add_precision(sme, cfg);
    add_emit(sme, me.emit, "json");
    add_output(sme, cfg);
    sme->callback([&] { action = [&] { return cmd_measures(me, cfg); }; });

    DimsArgs da;
    auto* sd = app.add_subcommand("dims", "hyperbolic dimension");
    sd->add_option("--lambda", da.lambda, "lambda value (repeatable)");
    sd->add_option("--lambda-grid", da.grid, "start:stop:step");
    add_emit(sd, da.emit, "csv");
    add_output(sd, cfg);
    sd->callback([&] { action = [&] { return cmd_dims(da, cfg); }; });

    RecurrenceArgs ra;
    auto* sr = app.add_subcommand("recurrence", "recurrence type of the potential");
    sr->add_option("--lambda", ra.lambda, "lambda in (0,1)")->required();
    sr->add_option("--t", ra.t, "potential parameter t > 0")->required();
    add_emit(sr, ra.emit, "csv");
    add_output(sr, cfg);
    sr->callback([&] { action = [&] { return cmd_recurrence(ra, cfg); }; });

    SimulateArgs sa;
    auto* ss = app.add_subcommand("simulate", "Monte Carlo run of the branch-index walk");
    ss->add_option("--lambda", sa.walk.lambda, "lambda in (0,1)")->required();
    ss->add_option("--walkers", sa.walk.n_walkers, "number of walkers")->capture_default_str();
    ss->add_option("--steps", sa.walk.n_steps, "steps per walker")->capture_default_str();
    ss->add_option("--seed", cfg.seed, "master seed")->capture_default_str();
    ss->add_option("--threshold", sa.walk.threshold, "escape threshold")->capture_default_str();
    ss->add_option("--state-cap", sa.walk.state_cap, "walkers above this state are frozen")->capture_default_str();
    ss->add_option("--threads", cfg.threads, "worker threads (0: all cores)");
    add_emit(ss, sa.emit, "json");
    add_output(ss, cfg);
    ss->callback([&] { action = [&] { return cmd_simulate(sa, cfg); }; });

    VerifyArgs va;
    auto* sv = app.add_subcommand("verify", "run the acceptance suite");
    sv->add_option("--criterion", va.criteria, "criterion number (repeatable; default all)")
        ->check(CLI::Range(1, criterion_count));
    auto* vbits = sv->add_option("--precision-bits", cfg.precision_bits, "working precision for the pressure criteria")
                      ->check(CLI::IsMember({53, 113, 256}));
    sv->add_option("--seed", cfg.seed, "Monte Carlo seed")->capture_default_str();
    sv->add_option("--threads", cfg.threads, "worker threads (0: all cores)");
    sv->add_option("--emit", va.emit, "output format")->check(CLI::IsMember({"table", "json", "csv"}))->capture_default_str();
    add_output(sv, cfg);
    sv->callback([&] {
        va.precision_given = vbits->count() > 0 || std::getenv("FIBWILD_PRECISION_BITS") != nullptr;
        action = [&] { return cmd_verify(va, cfg); };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_usage;
    }

    try {
        return action();
    } catch (const InvalidArgument& e) {
        std::fprintf(stderr, "fibwild: %s\n", e.what());
        return exit_usage;
    } catch (const IndexOutOfRange& e) {
        std::fprintf(stderr, "fibwild: %s\n", e.what());
        return exit_usage;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "fibwild: %s\n", e.what());
        return exit_usage;
    } catch (const Error& e) {
        std::fprintf(stderr, "fibwild: %s: %s\n", e.kind(), e.what());
        return exit_failure;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "fibwild: %s\n", e.what());
        return exit_failure;
    }
}

} // namespace fibwild::cli

int main(int argc, char** argv) { return fibwild::cli::run(argc, argv); }
