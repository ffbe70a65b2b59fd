#include "fibwild/thermo.hpp"
#include "fibwild/errors.hpp"
#include "fibwild/plmap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fibwild {

namespace {

template <class Real>
Real ldexp_r(const Real& x, int e)
{
    using std::ldexp;
    return ldexp(x, e);
}

template <class Real>
Real eps_of()
{
    return std::numeric_limits<Real>::epsilon();
}

template <class Real>
void check_lambda_t(const Real& lambda, const Real& t)
{
    if (!(lambda > 0 && lambda < 1))
        throw InvalidArgument("lambda must lie in (0,1)");
    if (!(t > 0))
        throw InvalidArgument("t must be positive");
}

std::vector<int> fibonacci_Q(int N)
{
    std::vector<int> Q(N + 1, 0);
    for (int k = 1; k <= N; ++k)
        Q[k] = std::max(k - 2, 0);
    return Q;
}

template <class Real>
Real log_slope(const Real& lambda, int i)
{
    using std::log;
    return i == 1 ? -log(1 - lambda) : -log(lambda * (1 - lambda));
}

} // namespace

template <class Real>
ThermoConstants<Real> thermo_constants(const Real& lambda, const Real& t)
{
    using std::log;
    using std::sqrt;
    if (!(lambda > 0 && lambda < 1))
        throw InvalidArgument("lambda must lie in (0,1)");
    ThermoConstants<Real> k;
    k.lambda = lambda;
    k.t = t;
    k.log_ll = log(lambda * (1 - lambda));
    k.beta = t * k.log_ll;
    k.t2 = -log(Real(4)) / k.log_ll;
    k.beta_prime = (t - k.t2) * k.log_ll;
    k.t1 = lambda <= Real(1) / 2 ? Real(1) : k.t2;
    k.gamma_plus = golden_ratio<Real>();
    k.Gamma = 2 * log(k.gamma_plus) / sqrt(-k.log_ll);
    return k;
}

template <class Real>
std::vector<Real> fibonacci_times(int K)
{
    std::vector<Real> S(std::max(K, 1) + 1);
    S[0] = 1;
    S[1] = 2;
    for (int k = 2; k <= K; ++k)
        S[k] = S[k - 1] + S[k - 2];
    return S;
}

const char* to_string(WeightStatus s)
{
    switch (s) {
    case WeightStatus::AllPositiveSumOne:
        return "all-positive-sum-one";
    case WeightStatus::WentNegative:
        return "went-negative";
    case WeightStatus::SumBelowOne:
        return "sum-below-one";
    }
    return "?";
}

template <class Real>
ConformalSolution<Real> conformal_weights(const Real& lambda, const Real& t, const Real& p, int N, double sum_tol)
{
    using std::exp;
    using std::pow;
    check_lambda_t(lambda, t);
    if (p < 0)
        throw InvalidArgument("p must be nonnegative");
    if (p > 0 && p < std::numeric_limits<Real>::min())
        throw PrecisionExhausted("p below the smallest normal number of this precision");
    if (N < 1)
        throw InvalidArgument("N must be >= 1");
    auto k = thermo_constants(lambda, t);
    auto S = fibonacci_times<Real>(N + 2);
    ConformalSolution<Real> sol;
    sol.p = p;
    sol.w.assign(N + 1, Real(0));
    sol.H.assign(N + 1, Real(0));
    std::vector<Real> R(N + 3);
    R[0] = 1;
    Real w1 = pow(1 - lambda, t) * exp(-p * S[0]);
    R[1] = 1 - w1;
    sol.w[1] = w1;
    Real eb = exp(k.beta);
    for (int j = 2; j <= N + 2; ++j) {
        Real c = p == 0 ? eb : exp(k.beta - p * S[j - 1]);
        Real wj = c * R[j - 2];
        R[j] = R[j - 1] - wj;
        if (j <= N)
            sol.w[j] = wj;
        if (wj < 0 && !sol.k0)
            sol.k0 = j;
    }
    detail::CompensatedSum<Real> acc;
    for (int j = 1; j <= N; ++j) {
        acc.add(sol.w[j]);
        sol.H[j] = acc.value();
    }
    sol.remainder = R[N];
    using std::abs;
    if (sol.k0)
        sol.status = WeightStatus::WentNegative;
    else if (abs(sol.remainder) <= Real(sum_tol))
        sol.status = WeightStatus::AllPositiveSumOne;
    else
        sol.status = WeightStatus::SumBelowOne;
    return sol;
}

const char* to_string(RootCase c)
{
    switch (c) {
    case RootCase::RealRoots:
        return "real";
    case RootCase::Degenerate:
        return "degenerate";
    case RootCase::ComplexRoots:
        return "complex";
    }
    return "?";
}

template <class Real>
RootCase root_case(const Real& lambda, const Real& t)
{
    using std::abs;
    using std::exp;
    auto k = thermo_constants(lambda, t);
    Real disc = 1 - 4 * exp(k.beta);
    if (abs(disc) <= 64 * eps_of<Real>())
        return RootCase::Degenerate;
    return disc > 0 ? RootCase::RealRoots : RootCase::ComplexRoots;
}

namespace {

/// Evaluator for the p = 0 closed forms.
template <class Real>
struct P0Form {
    RootCase kind;
    Real w1, w2;
    Real rp, rm, A, B; // real roots
    Real a, b;         // degenerate
    Real rho, phi, sphi; // complex

    P0Form(const Real& lambda, const Real& t)
    {
        using std::acos;
        using std::exp;
        using std::pow;
        using std::sin;
        using std::sqrt;
        auto k = thermo_constants(lambda, t);
        kind = root_case(lambda, t);
        w1 = pow(1 - lambda, t);
        w2 = exp(k.beta);
        Real disc = 1 - 4 * w2;
        if (kind == RootCase::RealRoots) {
            Real sq = sqrt(disc);
            rp = (1 + sq) / 2;
            rm = (1 - sq) / 2;
            A = (w2 - rm * w1) / (rp * sq);
            B = (rp * w1 - w2) / (rm * sq);
        } else if (kind == RootCase::Degenerate) {
            b = 4 * w2 - 2 * w1;
            a = 2 * w1 - b;
        } else {
            rho = exp(k.beta / 2);
            phi = acos(1 / (2 * rho));
            sphi = sin(phi);
        }
    }

    Real operator()(int k) const
    {
        using std::ldexp;
        using std::pow;
        using std::sin;
        switch (kind) {
        case RootCase::RealRoots:
            return A * pow(rp, k) + B * pow(rm, k);
        case RootCase::Degenerate:
            return ldexp(a + b * k, -k);
        case RootCase::ComplexRoots:
        default:
            return (w2 * pow(rho, k - 2) * sin(phi * (k - 1)) - w1 * pow(rho, k - 1) * sin(phi * (k - 2))) / sphi;
        }
    }
};

} // namespace

template <class Real>
std::vector<Real> closed_form_weights_p0(const Real& lambda, const Real& t, int N)
{
    check_lambda_t(lambda, t);
    P0Form<Real> f(lambda, t);
    std::vector<Real> w(N + 1, Real(0));
    for (int k = 1; k <= N; ++k)
        w[k] = f(k);
    return w;
}

template <class Real>
std::optional<int> first_negative_index_p0(const Real& lambda, const Real& t, int kmax)
{
    using std::abs;
    using std::log;
    check_lambda_t(lambda, t);
    P0Form<Real> f(lambda, t);
    // past these indices the sign can no longer change
    double settle = std::numeric_limits<double>::infinity();
    if (f.kind == RootCase::RealRoots && f.A > 0)
        settle = f.B >= 0 ? 0.0 : to_double(log(-f.B / f.A) / log(f.rp / f.rm));
    if (f.kind == RootCase::Degenerate && f.b >= 0)
        settle = 0.0;
    for (int k = 1; k <= kmax; ++k) {
        if (f(k) < 0)
            return k;
        if (k > settle + 1)
            return std::nullopt;
    }
    return std::nullopt;
}

int k0_estimate(double lambda, double t)
{
    auto k = thermo_constants<double>(lambda, t);
    if (!(t < k.t1))
        throw InvalidArgument("k0 estimate needs t < t1");
    double disc = 1 - 4 * std::exp(k.beta);
    double lt = std::pow(lambda, t);
    if (disc > 0) {
        double sq = std::sqrt(disc);
        double rp = (1 + sq) / 2, rm = (1 - sq) / 2;
        return static_cast<int>(std::ceil(std::log(rp * (rp - lt) / (rm * (rm - lt))) / std::log(rp / rm))) + 1;
    }
    if (lt <= 0.5)
        return static_cast<int>(std::ceil(2 * (1 - lt) / (1 - 2 * lt))) + 1;
    double phi = std::acos(1 / (2 * std::exp(k.beta / 2)));
    return static_cast<int>(std::ceil(pi_value<double>() / phi));
}

template <class Real>
WeightScan<Real> scan_weights(const Real& lambda, const Real& t, const Real& p, const std::vector<Real>& S,
                              int max_terms)
{
    using std::exp;
    using std::pow;
    constexpr int d = std::numeric_limits<Real>::digits;
    const Real tiny = ldexp_r(Real(1), -(d + 8));
    const Real tiny2 = tiny * tiny;
    const Real lo_guard = ldexp_r(Real(1), -200);
    const Real up = ldexp_r(Real(1), 200);
    if (static_cast<int>(S.size()) < max_terms)
        throw InvalidArgument("cutting-time table shorter than the scan budget");
    using std::log;
    const Real beta = t * log(lambda * (1 - lambda));
    WeightScan<Real> res;
    Real R0 = 1;
    Real R1 = 1 - pow(1 - lambda, t) * exp(-p * S[0]);
    int scale = 0;
    if (R1 < 0) {
        res.negative = true;
        res.first_negative = 3;
        res.terms = 1;
        return res;
    }
    for (int j = 2; j < max_terms; ++j) {
        Real c = exp(beta - p * S[j - 1]);
        Real term = c * R0;
        Real R2 = R1 - term;
        if (R2 < 0) {
            res.negative = true;
            res.first_negative = j + 2;
            res.terms = j;
            return res;
        }
        bool settled = p > 0 && c < tiny && (term <= tiny * R2 || c < tiny2);
        R0 = R1;
        R1 = R2;
        if (R1 > 0 && R1 < lo_guard) {
            R0 *= up;
            R1 *= up;
            ++scale;
        }
        if (settled) {
            res.remainder = ldexp_r(R1, -200 * scale);
            res.terms = j;
            return res;
        }
    }
    throw PrecisionExhausted("weight scan needs more than " + std::to_string(max_terms) +
                             " terms (p too small for the configured depth)");
}

template <class Real>
PressurePoint<Real> solve_pressure(const Real& lambda, const Real& t, const PressureOptions& opts)
{
    using std::abs;
    using std::sqrt;
    check_lambda_t(lambda, t);
    auto k = thermo_constants(lambda, t);
    PressurePoint<Real> pt;
    if (t >= k.t1) {
        auto sol = conformal_weights(lambda, t, Real(0), 2000, opts.sum_tol);
        pt.zero_branch = true;
        pt.residual = -sol.remainder;
        return pt;
    }
    constexpr int d = std::numeric_limits<Real>::digits;
    auto S = fibonacci_times<Real>(opts.max_terms + 2);
    auto scan = [&](const Real& p) { return scan_weights(lambda, t, p, S, opts.max_terms); };

    Real hi = 1;
    auto sh = scan(hi);
    for (int grow = 0; sh.negative; ++grow) {
        if (grow >= 8)
            throw BracketFailure("no p up to 2^128 keeps the weights nonnegative");
        hi *= 65536;
        sh = scan(hi);
    }
    Real lo = hi / 2;
    auto sl = scan(lo);
    while (!sl.negative) {
        hi = lo;
        sh = sl;
        lo /= 65536;
        if (lo < std::numeric_limits<Real>::min())
            throw PrecisionExhausted("pressure below the smallest normal number at " + std::to_string(d) +
                                     "-bit precision");
        sl = scan(lo);
    }
    const Real rel = ldexp_r(Real(1), -(d - 6));
    int it = 0;
    for (; it < opts.max_iterations; ++it) {
        if (hi - lo <= hi * rel)
            break;
        Real mid = hi / lo > Real(3) / 2 ? Real(sqrt(lo * hi)) : Real((lo + hi) / 2);
        if (!(mid > lo && mid < hi))
            break;
        auto sm = scan(mid);
        if (sm.negative) {
            lo = mid;
        } else {
            hi = mid;
            sh = sm;
        }
    }
    if (it >= opts.max_iterations)
        throw NoConvergence("pressure bisection exceeded the iteration budget");
    // H decreases in p: doubling p must not raise the sum
    auto s2 = scan(Real(2 * hi));
    if (s2.negative || s2.remainder < sh.remainder)
        throw BracketFailure("H(p,t) is not decreasing across the final bracket");
    pt.p = hi;
    pt.lo = lo;
    pt.hi = hi;
    pt.residual = -sh.remainder;
    pt.iterations = it;
    pt.terms = sh.terms;
    return pt;
}

PressureBounds pressure_bounds(double lambda, double t)
{
    auto k = thermo_constants<double>(lambda, t);
    PressureBounds b;
    b.Gamma = k.Gamma;
    if (!(t < k.t1))
        throw InvalidArgument("pressure bounds need t < t1");
    double lb = 2 / (3 + std::sqrt(5.0));
    if (lambda >= 0.5) {
        double r = std::sqrt(k.t1 - t);
        b.available = true;
        b.lower = std::exp(-pi_value<double>() * k.Gamma / r);
        b.upper = std::exp(-(5.0 / 6.0) * k.Gamma / r);
    } else if (lambda >= lb) {
        double e = std::pow(lambda, t) * std::pow(1 - lambda, t);
        if (4 * e > 1)
            return b;
        b.R = std::pow(1 + std::sqrt(1 - 4 * e), 2) / (4 * e);
        b.available = true;
        b.lower = std::pow(1 - t, std::log(k.gamma_plus) / std::log(b.R));
        b.upper = std::pow(1 - t, lambda * std::log(k.gamma_plus) / (2 * t * (1 - 2 * lambda)));
    }
    return b;
}

template <class Real>
UkResult<Real> uk_recursion(const Real& lambda, const Real& t, const Real& p, int K)
{
    using std::abs;
    using std::exp;
    using std::pow;
    check_lambda_t(lambda, t);
    if (K < 1)
        throw InvalidArgument("K must be >= 1");
    auto k = thermo_constants(lambda, t);
    auto S = fibonacci_times<Real>(K + 1);
    UkResult<Real> r;
    r.u.assign(K + 1, Real(0));
    r.u[1] = pow(lambda, t);
    for (int i = 1; i < K; ++i) {
        if (abs(r.u[i]) < Real(1e-300))
            throw DivisionNearZero("u_" + std::to_string(i) + " vanishes");
        Real e = p == 0 ? exp(k.beta_prime) : exp(k.beta_prime - p * S[i - 1]);
        r.u[i + 1] = 1 - e / (4 * r.u[i]);
    }
    r.min_u = r.u[1];
    for (int i = 1; i <= K; ++i) {
        if (r.u[i] < r.min_u) {
            r.min_u = r.u[i];
            r.argmin = i;
        }
        if (!(r.u[i] > 0) && !r.first_nonpositive)
            r.first_nonpositive = i;
    }
    r.tends_to_one = abs(r.u[K] - 1) < Real(1e-6);
    return r;
}

ConformalMasses closed_form_conformal_masses(double lambda, double t, int N)
{
    check_lambda_t(lambda, t);
    double x = std::pow(lambda, t);
    if (N <= 0)
        N = x <= 0.5 ? static_cast<int>(std::ceil(std::log(1e-18) / std::log(x))) + 2 : 80;
    ConformalMasses cm;
    cm.m.assign(N + 1, 0.0);
    detail::CompensatedSum<double> acc;
    for (int j = 1; j <= N; ++j) {
        if (x <= 0.5)
            cm.m[j] = (1 - x) / 2 * std::pow(x, j - 1);
        else
            cm.m[j] = ((j - 1) + (1 - j / 2.0) / x) * std::ldexp(1.0, -(j + 1));
        acc.add(2 * cm.m[j]);
    }
    cm.total = acc.value();
    return cm;
}

InvariantMasses closed_form_measures(double lambda, double t, int N)
{
    check_lambda_t(lambda, t);
    double x = std::pow(lambda, t);
    if (!(x < 0.5))
        throw InvariantUnavailable("no invariant probability for lambda^t >= 1/2");
    double r = x / (1 - x);
    if (N <= 0)
        N = std::min(2000000, static_cast<int>(std::ceil(std::log(1e-18) / std::log(r))) + 2);
    InvariantMasses im;
    im.conformal = closed_form_conformal_masses(lambda, t, N);
    im.v.assign(N + 1, 0.0);
    double c = (1 - 2 * x) / x;
    double pw = 1;
    for (int j = 1; j <= N; ++j) {
        pw *= r;
        im.v[j] = c * pw;
    }
    auto sides = branch_signs(fibonacci_Q(N), N).second;
    detail::CompensatedSum<double> z, tot;
    for (int j = 1; j <= N; ++j) {
        if (sides[j] == Side::Left)
            z.add(im.v[j]);
        tot.add(im.v[j]);
    }
    im.zeta = z.value() / tot.value();
    im.mu_left.assign(N + 1, 0.0);
    im.mu_right.assign(N + 1, 0.0);
    detail::CompensatedSum<double> all;
    for (int j = 1; j <= N; ++j) {
        im.mu_left[j] = im.zeta * im.v[j];
        im.mu_right[j] = (1 - im.zeta) * im.v[j];
        all.add(im.mu_left[j]);
        all.add(im.mu_right[j]);
    }
    im.total = all.value();
    return im;
}

template <class Real>
Real projection_constant(const Real& lambda, const Real& t, const Real& p)
{
    using std::exp;
    using std::pow;
    check_lambda_t(lambda, t);
    Real L = pow(lambda, t), U = pow(1 - lambda, t);
    Real q = pow(L, 3) * pow(U, 2);
    Real first = 1 + U * L + pow(U, 3) * pow(L, 2) + pow(L, 4) * pow(U, 5) / (1 - q);
    Real second = 1 + pow(U, 2) * L + pow(L, 3) * pow(U, 4) / (1 - q);
    return 1 + exp(p) * (1 - L) / 2 * first + exp(2 * p) * (1 - L) * L / 2 * second;
}

template <class Real>
Real projection_constant_series(const Real& lambda, const Real& t, const Real& p, int terms)
{
    using std::exp;
    using std::pow;
    check_lambda_t(lambda, t);
    Real L = pow(lambda, t);
    Real k0 = pow(fibonacci_kappa_closed_form(lambda, 0), t);
    detail::CompensatedSum<Real> a, b;
    for (int i = 2; i <= terms; ++i) {
        Real wi = (1 - L) / 2 * pow(L, i - 1);
        Real ki = pow(fibonacci_kappa_closed_form(lambda, i), t);
        a.add(wi * ki);
        if (i >= 3)
            b.add(wi * ki * k0);
    }
    return 1 + exp(p) * a.value() + exp(2 * p) * b.value();
}

template <class Real>
Real EquilibriumData<Real>::row_sum(int i) const
{
    detail::CompensatedSum<Real> acc;
    for (int j = start[i]; j <= N; ++j)
        acc.add(G(i, j));
    return acc.value();
}

template <class Real>
EquilibriumData<Real> equilibrium_data(const Real& lambda, const Real& t, const PressurePoint<Real>& pp)
{
    using std::abs;
    using std::exp;
    using std::log;
    using std::pow;
    check_lambda_t(lambda, t);
    auto k = thermo_constants(lambda, t);
    if (t > k.t1 + Real(1e-12))
        throw InvalidArgument("no equilibrium state of the induced system for t > t1");
    constexpr int d = std::numeric_limits<Real>::digits;
    const int max_terms = 20000;
    EquilibriumData<Real> eq;
    eq.lambda = lambda;
    eq.t = t;
    eq.p = pp.p;
    const Real p = pp.p;

    // weights until they drop below 1e-40 of the largest
    auto S = fibonacci_times<Real>(max_terms + 2);
    std::vector<Real> w{Real(0)};
    Real R0 = 1;
    Real w1 = pow(1 - lambda, t) * exp(-p);
    Real R1 = 1 - w1;
    w.push_back(w1);
    Real wmax = w1;
    const Real cut = Real(1e-40);
    Real next{};
    for (int j = 2;; ++j) {
        if (j > max_terms)
            throw NoConvergence("weights do not decay within the term budget");
        Real c = p == 0 ? exp(k.beta) : exp(k.beta - p * S[j - 1]);
        Real wj = c * R0;
        if (!(wj > 0))
            throw NonPositiveWeight("weight " + std::to_string(j) + " is not positive");
        if (wj < cut * wmax && j > 3) {
            next = wj;
            break;
        }
        wmax = std::max(wmax, wj);
        w.push_back(wj);
        R0 = R1;
        R1 = R1 - wj;
    }
    const int N = static_cast<int>(w.size()) - 1;
    eq.N = N;
    eq.w = w;
    eq.start.assign(N + 1, 1);
    for (int i = 1; i <= N; ++i)
        eq.start[i] = std::max(i - 2, 0) + 1;
    eq.tail.assign(N + 2, Real(0));
    std::vector<Real> wlogw(N + 2, Real(0));
    {
        detail::CompensatedSum<Real> a, b;
        for (int m = N; m >= 1; --m) {
            a.add(w[m]);
            b.add(w[m] * log(w[m]));
            eq.tail[m] = a.value();
            wlogw[m] = b.value();
        }
    }

    // power iteration from the first state; rows share normalisers, so vG costs O(N)
    std::vector<Real> v(N + 1, Real(0)), nv(N + 1), bucket(N + 2);
    v[1] = 1;
    const Real tol = ldexp_r(Real(1), -(d - 10));
    int it = 0;
    for (;; ++it) {
        if (it > 1000000)
            throw NoConvergence("stationary vector of G did not converge");
        std::fill(bucket.begin(), bucket.end(), Real(0));
        for (int i = 1; i <= N; ++i)
            bucket[eq.start[i]] += v[i] / eq.tail[eq.start[i]];
        Real run = 0, total = 0;
        for (int j = 1; j <= N; ++j) {
            run += bucket[j];
            nv[j] = w[j] * run;
            total += nv[j];
        }
        Real diff = 0;
        for (int j = 1; j <= N; ++j) {
            nv[j] /= total;
            diff += abs(nv[j] - v[j]);
        }
        v.swap(nv);
        if (diff < tol)
            break;
    }
    eq.iterations = it;
    eq.v = v;
    eq.density.assign(N + 1, Real(0));
    for (int j = 1; j <= N; ++j)
        eq.density[j] = v[j] / w[j];

    detail::CompensatedSum<Real> h, ly, La;
    for (int i = 1; i <= N; ++i) {
        int st = eq.start[i];
        Real T = eq.tail[st];
        h.add(v[i] * (log(T) - wlogw[st] / T));
        ly.add(v[i] * log_slope(lambda, i));
        La.add(S[i - 1] * v[i]);
    }
    eq.entropy = h.value();
    eq.lyap = ly.value();
    eq.Lambda = La.value();
    // mass cut from row i is at most twice the first omitted weight (the weights decay at least geometrically)
    detail::CompensatedSum<Real> tb;
    for (int i = 1; i <= N; ++i) {
        Real r = 2 * next / eq.tail[eq.start[i]];
        if (r < 1)
            tb.add(v[i] * r * (1 - log(r)));
        else
            tb.add(v[i]);
    }
    eq.entropy_tail_bound = tb.value();
    if (p == 0) {
        // at p = 0 the weights decay only geometrically; a non-decaying last term means Lambda diverges
        Real a = S[N - 1] * v[N], b = S[N - 2] * v[N - 1];
        if (!(a < Real(0.999) * b) || !(a < Real(1e-9) * eq.Lambda))
            throw InfiniteInducingTime("mean inducing time diverges at t = t1 for this lambda");
    }
    eq.M = projection_constant(lambda, t, p);
    auto sides = branch_signs(fibonacci_Q(N), N).second;
    detail::CompensatedSum<Real> z;
    for (int j = 1; j <= N; ++j)
        if (sides[j] == Side::Left)
            z.add(v[j]);
    eq.zeta = z.value();
    return eq;
}

template <class Real>
EquilibriumData<Real> equilibrium_data(const Real& lambda, const Real& t, const PressureOptions& opts)
{
    auto pp = solve_pressure(lambda, t, opts);
    return equilibrium_data(lambda, t, pp);
}

template <class Real>
Real pressure_identity_residual(const EquilibriumData<Real>& eq, std::optional<Real> p_override)
{
    Real p = p_override.value_or(eq.p);
    return eq.entropy - eq.t * eq.lyap - p * eq.Lambda;
}

template <class Real>
ProjectedData<Real> project_measures(const EquilibriumData<Real>& eq)
{
    using std::isfinite;
    if (!(eq.Lambda > 0) || !isfinite(to_double(eq.Lambda)))
        throw InfiniteInducingTime("mean inducing time is not finite");
    ProjectedData<Real> pd;
    pd.M = eq.M;
    pd.Lambda = eq.Lambda;
    pd.entropy = eq.entropy / eq.Lambda;
    pd.lyap = eq.lyap / eq.Lambda;
    pd.pressure_check = pd.entropy - eq.t * pd.lyap - eq.p;
    return pd;
}

double hyperbolic_dimension(double lambda)
{
    if (!(lambda > 0 && lambda < 1))
        throw InvalidArgument("lambda must lie in (0,1)");
    if (lambda <= 0.5)
        return -std::log(4.0) / std::log(lambda * (1 - lambda));
    return 1.0;
}

const char* to_string(Recurrence r)
{
    switch (r) {
    case Recurrence::PositiveRecurrent:
        return "positive-recurrent";
    case Recurrence::NullRecurrent:
        return "null-recurrent";
    case Recurrence::Transient:
        return "transient";
    }
    return "?";
}

Recurrence recurrence_from_string(const std::string& s)
{
    for (Recurrence r : {Recurrence::PositiveRecurrent, Recurrence::NullRecurrent, Recurrence::Transient})
        if (s == to_string(r))
            return r;
    throw InvalidArgument("unknown recurrence class '" + s + "'");
}

RecurrenceReport classify_recurrence(double lambda, double t, double tol)
{
    check_lambda_t(lambda, t);
    auto k = thermo_constants<double>(lambda, t);
    RecurrenceReport rep;
    rep.lambda = lambda;
    rep.t = t;
    rep.t1 = k.t1;
    bool half = std::abs(lambda - 0.5) <= tol;
    bool at_t1 = std::abs(t - k.t1) <= tol;
    bool below = t < k.t1 && !at_t1;
    using R = Recurrence;
    if (half)
        rep.induced = below ? R::PositiveRecurrent : at_t1 ? R::NullRecurrent : R::Transient;
    else if (lambda > 0.5)
        rep.induced = below ? R::PositiveRecurrent : R::Transient;
    else
        rep.induced = below || at_t1 ? R::PositiveRecurrent : R::Transient;

    double lb = 2 / (3 + std::sqrt(5.0));
    if (lambda > 0.5 && !half)
        rep.original = below ? R::PositiveRecurrent : R::Transient;
    else if (below)
        rep.original = R::PositiveRecurrent;
    else if (at_t1)
        rep.original = lambda < lb ? R::PositiveRecurrent : R::NullRecurrent;
    else
        rep.original = R::Transient;
    return rep;
}

template <class Real>
GurevichReport<Real> gurevich_diagnostic(const Real& lambda, const Real& t, const Real& p, int n_max, int N)
{
    using std::exp;
    using std::log;
    using std::pow;
    check_lambda_t(lambda, t);
    if (n_max < 1 || N < 1)
        throw InvalidArgument("n_max and N must be positive");
    if (static_cast<long long>(n_max) * N > 40000)
        throw CombinatorialOverflow("n_max * N exceeds the diagnostic budget of 40000");
    auto S = fibonacci_times<Real>(N + 1);
    std::vector<Real> a(N + 1);
    std::vector<int> start(N + 1);
    for (int i = 1; i <= N; ++i) {
        a[i] = exp(-t * log_slope(lambda, i) - p * S[i - 1]);
        start[i] = std::max(i - 2, 0) + 1;
    }
    GurevichReport<Real> rep;
    rep.Z.assign(n_max + 1, Real(0));
    rep.rate.assign(n_max + 1, 0.0);
    rep.step_rate.assign(n_max + 1, 0.0);
    rep.partial_sum.assign(n_max + 1, Real(0));
    std::vector<Real> x(N + 1, Real(0)), nx(N + 1), bucket(N + 2);
    x[1] = 1;
    for (int n = 1; n <= n_max; ++n) {
        std::fill(bucket.begin(), bucket.end(), Real(0));
        for (int i = 1; i <= N; ++i)
            bucket[start[i]] += x[i] * a[i];
        Real run = 0;
        for (int j = 1; j <= N; ++j) {
            run += bucket[j];
            nx[j] = run;
        }
        x.swap(nx);
        rep.Z[n] = x[1];
        rep.rate[n] = to_double(Real(log(x[1]) / n));
        if (n >= 2)
            rep.step_rate[n] = to_double(Real(log(rep.Z[n] / rep.Z[n - 1])));
        rep.partial_sum[n] = rep.partial_sum[n - 1] + rep.Z[n];
    }
    return rep;
}

template <class Real>
std::vector<DerivativeProbeRow> left_derivative_probe(const Real& lambda, const std::vector<double>& deltas)
{
    auto k = thermo_constants(lambda, Real(1));
    std::vector<DerivativeProbeRow> rows;
    for (double dlt : deltas) {
        Real t = k.t1 - Real(dlt);
        auto pp = solve_pressure(lambda, t);
        auto eq = equilibrium_data(lambda, t, pp);
        DerivativeProbeRow r;
        r.delta = dlt;
        r.t = to_double(t);
        r.p = to_double(pp.p);
        r.slope = to_double(Real(-pp.p / Real(dlt)));
        r.Lambda = to_double(eq.Lambda);
        rows.push_back(r);
    }
    return rows;
}

void to_json(nlohmann::json& j, const RecurrenceReport& r)
{
    j = nlohmann::json{{"lambda", r.lambda},
                       {"t", r.t},
                       {"t1", r.t1},
                       {"induced", to_string(r.induced)},
                       {"original", to_string(r.original)}};
}

void from_json(const nlohmann::json& j, RecurrenceReport& r)
{
    r.lambda = j.at("lambda").get<double>();
    r.t = j.at("t").get<double>();
    r.t1 = j.at("t1").get<double>();
    r.induced = recurrence_from_string(j.at("induced").get<std::string>());
    r.original = recurrence_from_string(j.at("original").get<std::string>());
}

void to_json(nlohmann::json& j, const DerivativeProbeRow& r)
{
    j = nlohmann::json{{"delta", r.delta}, {"t", r.t}, {"p", r.p}, {"slope", r.slope}, {"Lambda", r.Lambda}};
}

void from_json(const nlohmann::json& j, DerivativeProbeRow& r)
{
    r.delta = j.at("delta").get<double>();
    r.t = j.at("t").get<double>();
    r.p = j.at("p").get<double>();
    r.slope = j.at("slope").get<double>();
    r.Lambda = j.at("Lambda").get<double>();
}

#define FIBWILD_THERMO_INSTANTIATE(R)                                                                          \
    template ThermoConstants<R> thermo_constants<R>(const R&, const R&);                                       \
    template std::vector<R> fibonacci_times<R>(int);                                                           \
    template ConformalSolution<R> conformal_weights<R>(const R&, const R&, const R&, int, double);             \
    template RootCase root_case<R>(const R&, const R&);                                                        \
    template std::vector<R> closed_form_weights_p0<R>(const R&, const R&, int);                                \
    template std::optional<int> first_negative_index_p0<R>(const R&, const R&, int);                           \
    template WeightScan<R> scan_weights<R>(const R&, const R&, const R&, const std::vector<R>&, int);          \
    template PressurePoint<R> solve_pressure<R>(const R&, const R&, const PressureOptions&);                   \
    template UkResult<R> uk_recursion<R>(const R&, const R&, const R&, int);                                   \
    template R projection_constant<R>(const R&, const R&, const R&);                                           \
    template R projection_constant_series<R>(const R&, const R&, const R&, int);                               \
    template struct EquilibriumData<R>;                                                                        \
    template EquilibriumData<R> equilibrium_data<R>(const R&, const R&, const PressurePoint<R>&);              \
    template EquilibriumData<R> equilibrium_data<R>(const R&, const R&, const PressureOptions&);               \
    template R pressure_identity_residual<R>(const EquilibriumData<R>&, std::optional<R>);                     \
    template ProjectedData<R> project_measures<R>(const EquilibriumData<R>&);                                  \
    template GurevichReport<R> gurevich_diagnostic<R>(const R&, const R&, const R&, int, int);                 \
    template std::vector<DerivativeProbeRow> left_derivative_probe<R>(const R&, const std::vector<double>&)

FIBWILD_THERMO_INSTANTIATE(double);
FIBWILD_THERMO_INSTANTIATE(Quad);
FIBWILD_THERMO_INSTANTIATE(Oct);

#undef FIBWILD_THERMO_INSTANTIATE

} // namespace fibwild
