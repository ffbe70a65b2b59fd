#include "doctest.h"

#include "fibwild/errors.hpp"
#include "fibwild/thermo.hpp"

#include <cmath>

using namespace fibwild;

namespace {

// plain recursion w_{k+1} = w_k - e^beta w_{k-1} at p = 0, seeded with the first two weights
std::vector<double> p0_recursion(double lambda, double t, int N)
{
    double eb = std::pow(lambda * (1 - lambda), t);
    std::vector<double> w(N + 1, 0.0);
    w[1] = std::pow(1 - lambda, t);
    w[2] = eb;
    for (int k = 2; k < N; ++k)
        w[k + 1] = w[k] - eb * w[k - 1];
    return w;
}

} // namespace

TEST_CASE("thermo constants")
{
    auto k = thermo_constants<double>(0.6, 1.0);
    CHECK(k.t1 == doctest::Approx(k.t2));
    CHECK(std::exp(thermo_constants<double>(0.6, k.t2).beta) == doctest::Approx(0.25).epsilon(1e-14));
    auto k3 = thermo_constants<double>(0.3, 0.5);
    CHECK(k3.t1 == 1.0);
    CHECK(k3.t2 < 1.0);
    auto kh = thermo_constants<double>(0.5, 1.0);
    CHECK(kh.t2 == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(kh.Gamma == doctest::Approx(2 * std::log(golden_ratio<double>()) / std::sqrt(std::log(4.0))));
    auto S = fibonacci_times<double>(6);
    CHECK(S == std::vector<double>{1, 2, 3, 5, 8, 13, 21});
}

TEST_CASE("conformal weights: recursion identities")
{
    auto sol = conformal_weights<double>(0.5, 1.0, 0.0, 30);
    CHECK(sol.w[1] == doctest::Approx(0.5));

    double lambda = 0.3, t = 0.8, p = 0.1;
    auto s = conformal_weights<double>(lambda, t, p, 25);
    auto S = fibonacci_times<double>(30);
    double eb = std::pow(lambda * (1 - lambda), t);
    for (int k = 2; k < 12; ++k) {
        double lhs = std::exp(p * S[k - 1]) * s.w[k] - std::exp(p * S[k]) * s.w[k + 1];
        CHECK(lhs == doctest::Approx(eb * s.w[k - 1]).epsilon(1e-10));
    }
    CHECK(s.H[25] == doctest::Approx(1 - s.remainder).epsilon(1e-14));
}

TEST_CASE("p = 0: status by t")
{
    auto k = thermo_constants<double>(0.6, 1.0);
    auto at = conformal_weights<double>(0.6, k.t1, 0.0, 4000, 1e-3);
    CHECK_FALSE(at.k0.has_value());
    CHECK(at.H[4000] == doctest::Approx(1.0).epsilon(1e-3));
    auto below = conformal_weights<double>(0.6, k.t1 - 0.05, 0.0, 200);
    CHECK(below.status == WeightStatus::WentNegative);
    auto above = conformal_weights<double>(0.3, 1.2, 0.0, 400);
    CHECK(above.status == WeightStatus::AllPositiveSumOne);
}

TEST_CASE("p = 0 closed form against the recursion, all root cases")
{
    struct P {
        double lambda, t;
        RootCase c;
    };
    auto t2 = [](double l) { return thermo_constants<double>(l, 1.0).t2; };
    for (auto [lambda, t, c] : {P{0.4, 1.0, RootCase::RealRoots}, P{0.2, 0.9, RootCase::RealRoots},
                                P{0.6, 1.2, RootCase::RealRoots}, P{0.3, t2(0.3), RootCase::Degenerate},
                                P{0.7, t2(0.7), RootCase::Degenerate}, P{0.7, t2(0.7) - 0.01, RootCase::ComplexRoots},
                                P{0.5, 0.9, RootCase::ComplexRoots}}) {
        CAPTURE(lambda);
        CAPTURE(t);
        REQUIRE(root_case(lambda, t) == c);
        auto cf = closed_form_weights_p0(lambda, t, 60);
        auto rec = p0_recursion(lambda, t, 60);
        auto cw = conformal_weights<double>(lambda, t, 0.0, 60);
        for (int k = 1; k <= 60; ++k) {
            CHECK(std::abs(cf[k] - rec[k]) <= 1e-10 * std::max(1.0, std::abs(rec[k])));
            CHECK(std::abs(cw.w[k] - rec[k]) <= 1e-10 * std::max(1.0, std::abs(rec[k])));
        }
    }
    // t = 1: roots are lambda and 1 - lambda and the weights are geometric with ratio lambda
    auto cf = closed_form_weights_p0(0.4, 1.0, 10);
    for (int k = 2; k < 10; ++k)
        CHECK(cf[k + 1] / cf[k] == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("k0 estimate near the exact first negative index")
{
    struct P {
        double lambda, t;
    };
    std::vector<P> pairs = {{0.1, 0.95}, {0.1, 0.99}, {0.2, 0.95}, {0.2, 0.99}, {0.3, 0.95},
                            {0.3, 0.99}, {0.3, 0.999}, {0.4, 0.99}, {0.45, 0.999}};
    for (double l : {0.1, 0.2, 0.3, 0.4, 0.45})
        pairs.push_back({l, thermo_constants<double>(l, 1.0).t2 - 1e-4});
    for (double l : {0.7, 0.8})
        for (double d : {1e-2, 1e-3, 1e-4})
            pairs.push_back({l, thermo_constants<double>(l, 1.0).t2 - d});
    for (auto [lambda, t] : pairs) {
        CAPTURE(lambda);
        CAPTURE(t);
        auto exact = first_negative_index_p0<double>(lambda, t);
        REQUIRE(exact.has_value());
        CHECK(std::abs(k0_estimate(lambda, t) - *exact) <= 2);
    }
    CHECK(k0_estimate(0.3, 0.9999) > k0_estimate(0.3, 0.99));
    CHECK_FALSE(first_negative_index_p0<double>(0.3, 1.1).has_value());
}

TEST_CASE("solve_pressure: reference values and H = 1")
{
    auto a = solve_pressure<double>(0.3, 0.8);
    CHECK(a.p == doctest::Approx(0.10026634988740).epsilon(1e-11));
    CHECK(std::abs(a.residual) < 1e-12);
    auto b = solve_pressure<double>(0.45, 0.9);
    CHECK(b.p == doctest::Approx(0.033018371356577).epsilon(1e-11));
    CHECK(std::abs(b.residual) < 1e-12);

    auto q = solve_pressure<Quad>(Quad(0.3), Quad(0.8));
    CHECK(std::abs(to_double(q.p) - a.p) < 1e-14);
    CHECK(abs(q.residual) < Quad(1e-25));

    auto z = solve_pressure<double>(0.6, thermo_constants<double>(0.6, 1.0).t1);
    CHECK(z.p == 0);
    CHECK(z.zero_branch);
    CHECK(solve_pressure<double>(0.3, 1.1).p == 0);
}

TEST_CASE("solve_pressure: uniqueness and monotonicity")
{
    double lambda = 0.3, t = 0.9;
    auto pt = solve_pressure<double>(lambda, t);
    auto S = fibonacci_times<double>(20002);
    auto lo = scan_weights<double>(lambda, t, pt.p * (1 - 1e-6), S, 20000);
    auto hi = scan_weights<double>(lambda, t, pt.p * (1 + 1e-6), S, 20000);
    CHECK(lo.negative);
    CHECK_FALSE(hi.negative);
    CHECK(hi.remainder > 1e-12);

    double prev = 1e9;
    for (double tt = 0.5; tt < 0.99; tt += 0.05) {
        double p = solve_pressure<double>(lambda, tt).p;
        CHECK(p < prev);
        prev = p;
    }
    for (double tt = 1.0; tt < 1.5; tt += 0.1)
        CHECK(solve_pressure<double>(lambda, tt).p == 0);
}

TEST_CASE("solve_pressure: precision limits near t1")
{
    double t1 = thermo_constants<double>(0.7, 1.0).t1;
    CHECK_THROWS_AS(solve_pressure<double>(0.7, t1 - 1e-6), PrecisionExhausted);
    auto q = solve_pressure<Quad>(Quad(0.7), Quad(t1) - Quad(1e-4));
    CHECK(to_double(q.p) == doctest::Approx(6.47e-54).epsilon(5e-3));
    CHECK_THROWS_AS(solve_pressure<double>(0.3, -0.5), InvalidArgument);
}

TEST_CASE("weights decay super-exponentially for p > 0")
{
    // alpha_k = log w_k - beta k + p S_{k+1} settles; the forward recursion resolves it until the
    // remainder drops below the working precision (k ~ 14 at 113 bits)
    Quad L(0.3), T(0.9);
    auto pt = solve_pressure<Quad>(L, T);
    auto sol = conformal_weights<Quad>(L, T, pt.p, 20);
    auto S = fibonacci_times<Quad>(25);
    auto k = thermo_constants<Quad>(L, T);
    std::vector<double> alpha(15);
    for (int j = 2; j <= 14; ++j)
        alpha[j] = to_double(Quad(log(sol.w[j]) + pt.p * S[j + 1] - k.beta * j));
    for (int j = 5; j <= 12; ++j)
        CHECK(std::abs(alpha[j] - alpha[j - 1]) < 0.8 * std::abs(alpha[j - 1] - alpha[j - 2]));
    CHECK(std::abs(alpha[14] - alpha[13]) < 1e-6);
    CHECK(alpha[14] == doctest::Approx(2.68988738).epsilon(1e-7));
    // p S_{k-1} exceeds any linear function of k
    auto d = conformal_weights<double>(0.3, 0.9, to_double(pt.p), 12);
    CHECK(std::log(d.w[12]) < 12 * std::log(std::pow(0.21, 0.9)) - 5);
}

TEST_CASE("u_k recursion")
{
    Quad L(0.3), T(0.8);
    auto pt = solve_pressure<Quad>(L, T);
    auto u = uk_recursion<Quad>(L, T, pt.p, 12);
    auto sol = conformal_weights<Quad>(L, T, pt.p, 14);
    auto S = fibonacci_times<Quad>(14);
    CHECK(u.u[1] == pow(L, T));
    for (int k = 2; k <= 11; ++k) {
        // u_k = a_{k+1}/a_k with a_k = e^{p S_{k-1}} w_k
        Quad ratio = exp(pt.p * S[k]) * sol.w[k + 1] / (exp(pt.p * S[k - 1]) * sol.w[k]);
        CAPTURE(k);
        CHECK(to_double(Quad(u.u[k] / ratio)) == doctest::Approx(1.0).epsilon(1e-12));
    }
    double t1 = thermo_constants<double>(0.6, 1.0).t1;
    // above the pressure the sequence stays >= 1/3; at the pressure it stays positive
    auto above = uk_recursion<double>(0.6, t1 - 0.01, 1.0, 60);
    CHECK(above.min_u >= 1.0 / 3);
    CHECK(above.tends_to_one);
    auto at = uk_recursion<double>(0.6, t1 - 0.01, solve_pressure<double>(0.6, t1 - 0.01).p, 60);
    CHECK(at.min_u > 0);
    CHECK_FALSE(at.first_nonpositive.has_value());

    auto big = uk_recursion<double>(0.6, 0.9, 5.0, 30);
    CHECK(big.tends_to_one);
    auto neg = uk_recursion<double>(0.6, t1 - 0.05, 0.0, 200);
    CHECK(neg.first_nonpositive.has_value());
    auto fix = uk_recursion<double>(0.6, t1, 0.0, 4000);
    CHECK(fix.u[4000] == doctest::Approx(0.5).epsilon(1e-2));
    CHECK_FALSE(fix.first_nonpositive.has_value());
}

TEST_CASE("closed-form conformal and invariant masses")
{
    for (auto [lambda, t] : {std::pair{0.3, 0.8}, {0.4, 1.0}, {0.6, 0.5}, {0.8, 0.6}}) {
        CAPTURE(lambda);
        auto cm = closed_form_conformal_masses(lambda, t);
        CHECK(cm.total == doctest::Approx(1.0).epsilon(1e-12));
    }
    double x = std::pow(0.8, 0.6);
    REQUIRE(x > 0.5);
    CHECK(closed_form_conformal_masses(0.8, 0.6).m[1] == doctest::Approx(1 / (8 * x)));

    auto im = closed_form_measures(0.3, 0.8);
    CHECK(im.total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(im.zeta > 0);
    CHECK(im.zeta < 1);
    CHECK_THROWS_AS(closed_form_measures(0.8, 0.6), InvariantUnavailable);
}

TEST_CASE("projection constant: closed form against series")
{
    for (auto [lambda, t, p] : {std::tuple{0.3, 0.8, 0.1}, {0.5, 1.0, 0.0}, {0.7, 0.4, 0.3}, {0.2, 2.0, 1.0}}) {
        CAPTURE(lambda);
        double cf = projection_constant<double>(lambda, t, p);
        double sr = projection_constant_series<double>(lambda, t, p, 4000);
        CHECK(cf == doctest::Approx(sr).epsilon(1e-12));
        CHECK(cf >= 1);
        CHECK(std::isfinite(cf));
    }
}

TEST_CASE("equilibrium data")
{
    auto eq = equilibrium_data<double>(0.3, 0.8);
    for (int i = 1; i <= eq.N; ++i)
        CHECK(eq.row_sum(i) == doctest::Approx(1.0).epsilon(1e-13));
    // vG = v
    for (int j = 1; j <= std::min(eq.N, 15); ++j) {
        double s = 0;
        for (int i = 1; i <= eq.N; ++i)
            s += eq.v[i] * eq.G(i, j);
        CHECK(s == doctest::Approx(eq.v[j]).epsilon(1e-10));
    }
    for (int k = 2; k <= eq.N; ++k)
        CHECK(eq.density[k] >= eq.density[k - 1] * (1 - 1e-12));
    CHECK(eq.Lambda > 1);
    CHECK(std::isfinite(eq.Lambda));
    CHECK(eq.zeta > 0);
    CHECK(eq.zeta < 1);
    CHECK(eq.entropy_tail_bound < 1e-12);
    CHECK_THROWS_AS(equilibrium_data<double>(0.3, 1.3), InvalidArgument);
}

TEST_CASE("equilibrium identity and Abramov")
{
    for (auto [lambda, t] : {std::pair{0.3, 0.8}, {0.3, 0.9}, {0.45, 0.8}, {0.45, 0.9}}) {
        CAPTURE(lambda);
        CAPTURE(t);
        auto eq = equilibrium_data<double>(lambda, t);
        CHECK(std::abs(pressure_identity_residual(eq)) < 1e-6);
        auto pd = project_measures(eq);
        CHECK(std::abs(pd.pressure_check) < 1e-6);
        CHECK(pd.entropy - t * pd.lyap == doctest::Approx(eq.p).epsilon(1e-6));
        CHECK(pd.M >= 1);
    }
    auto eq = equilibrium_data<double>(0.3, 0.8);
    CHECK(std::abs(pressure_identity_residual(eq, std::optional<double>(eq.p / 2))) > 1e-3);
}

TEST_CASE("hyperbolic dimension")
{
    CHECK(hyperbolic_dimension(0.5) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(hyperbolic_dimension(0.4) == doctest::Approx(0.9714).epsilon(1e-4));
    CHECK(hyperbolic_dimension(0.7) == 1.0);
    CHECK_THROWS_AS(hyperbolic_dimension(1.0), InvalidArgument);
}

TEST_CASE("recurrence classification")
{
    double t1 = thermo_constants<double>(0.6, 1.0).t1;
    CHECK(classify_recurrence(0.6, t1 - 0.05).induced == Recurrence::PositiveRecurrent);
    CHECK(classify_recurrence(0.6, t1 + 0.05).induced == Recurrence::Transient);
    CHECK(classify_recurrence(0.6, t1).induced == Recurrence::Transient);
    CHECK(classify_recurrence(0.5, 1.0).induced == Recurrence::NullRecurrent);
    CHECK(classify_recurrence(0.5, 1.0).original == Recurrence::NullRecurrent);
    CHECK(classify_recurrence(0.3, 1.0).induced == Recurrence::PositiveRecurrent);
    CHECK(classify_recurrence(0.3, 1.0).original == Recurrence::PositiveRecurrent);
    CHECK(classify_recurrence(0.45, 1.0).original == Recurrence::NullRecurrent);
    CHECK(classify_recurrence(0.45, 1.1).induced == Recurrence::Transient);

    auto r = classify_recurrence(0.45, 1.0);
    nlohmann::json j = r;
    CHECK(j["original"] == "null-recurrent");
    CHECK(j.get<RecurrenceReport>() == r);
    CHECK_THROWS_AS(recurrence_from_string("sometimes"), InvalidArgument);
}

TEST_CASE("Gurevich diagnostic")
{
    double lambda = 0.3, t = 0.8, p = 0.2;
    auto one = gurevich_diagnostic<double>(lambda, t, p, 10, 1);
    double a = std::pow(1 - lambda, t) * std::exp(-p);
    for (int n = 1; n <= 10; ++n)
        CHECK(one.Z[n] == doctest::Approx(std::pow(a, n)).epsilon(1e-13));

    auto pt = solve_pressure<double>(lambda, t);
    auto at = gurevich_diagnostic<double>(lambda, t, pt.p, 15, 60);
    auto up = gurevich_diagnostic<double>(lambda, t, pt.p + 0.1, 15, 60);
    CHECK(std::abs(at.step_rate[15]) < 1e-3);
    CHECK(up.step_rate[15] < -0.05);
    CHECK(std::abs(at.rate[15]) < std::abs(at.rate[5]));
    CHECK_THROWS_AS(gurevich_diagnostic<double>(lambda, t, p, 20, 5000), CombinatorialOverflow);
}

TEST_CASE("left derivative probe")
{
    auto low = left_derivative_probe<double>(0.3, {1e-2, 1e-3});
    for (auto& r : low) {
        CHECK(r.slope < -0.1);
        CHECK(std::isfinite(r.Lambda));
    }
    auto high = left_derivative_probe<Quad>(Quad(0.6), {1e-2, 1e-3});
    CHECK(std::abs(high[1].slope) < std::abs(high[0].slope));
    CHECK(std::abs(high[1].slope) < 1e-6);

    nlohmann::json j = low[0];
    CHECK(j.get<DerivativeProbeRow>().slope == low[0].slope);
}

TEST_CASE("pressure bounds")
{
    auto b = pressure_bounds(0.7, thermo_constants<double>(0.7, 1.0).t1 - 1e-3);
    CHECK(b.available);
    CHECK(b.lower < b.upper);
    auto c = pressure_bounds(0.45, 0.995);
    CHECK(c.available);
    CHECK_FALSE(pressure_bounds(0.45, 0.99).available);
    CHECK(c.R > 1);
    CHECK_FALSE(pressure_bounds(0.3, 0.9).available);
}
