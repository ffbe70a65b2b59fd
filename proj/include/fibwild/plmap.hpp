#pragma once

/** @file plmap.hpp
 *  @brief Countably piecewise linear unimodal maps f, their induced map F, and the factor map T.
 *
 *  Layout on [0,1]: W_j = (z_{j-1}, z_j) left of c = 1/2 and its mirror image on the right,
 *  with |W_j| = eps_j. The map is affine with slope kappa_j on W_j and -kappa_j on the mirror.
 */

#include "fibwild/errors.hpp"
#include "fibwild/kneading.hpp"
#include "fibwild/real.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace fibwild {

enum class Side { Left, Right };

inline const char* to_string(Side s) { return s == Side::Left ? "left" : "right"; }

template <class Real>
struct BranchInfo {
    int j = 0;
    BigInt tau;          ///< inducing time S_{j-1}
    Real slope{};        ///< |DF| on the branch
    int orientation = 1; ///< sign of DF on W_j (the mirror branch has the opposite sign)
    Side side = Side::Left;
    Real image_lo{}, image_hi{};
};

template <class Real>
struct PLMapT {
    KneadingData kneading;
    int N = 0;
    std::vector<Real> eps;   ///< eps_0..eps_N
    std::vector<Real> tail;  ///< tail[m] = sum_{i>=m} eps_i, m = 0..N+1 (includes the analytic remainder)
    std::vector<Real> z;     ///< z_0..z_N
    std::vector<Real> kappa; ///< kappa_0..kappa_N
    std::vector<Real> s;     ///< s_1..s_N (s[0] unused)
    std::vector<Real> fvals; ///< f(z_j), j = 0..N
    std::vector<int> orientation; ///< sign of DF on W_j, j = 1..N
    std::vector<Side> side;       ///< side of c containing F(W_j)
    int resolved = 0;             ///< deepest branch separable in this arithmetic
    std::optional<Real> lambda;   ///< set for the geometric Fibonacci family

    Real c() const { return Real(1) / 2; }
    Real zhat(int j) const { return 1 - z[j]; }
};

using PLMap = PLMapT<double>;

namespace detail {

/// Neumaier compensated accumulator.
template <class Real>
struct CompensatedSum {
    Real sum{0}, comp{0};
    void add(const Real& x)
    {
        using std::abs;
        Real t = sum + x;
        if (abs(sum) >= abs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    Real value() const { return sum + comp; }
};

} // namespace detail

/** Orientation of F on W_j and the side of c containing F(W_j), j = 1..N. Purely combinatorial.
 *  Signs follow the decomposition f^{S_{j-1}-1} = f^{S_{Q^2(j-1)}} o F|_{W_{Q(j-1)}} o f^{S_{j-2}-1};
 *  tau_j is the sign of f^{S_{j-1}-1} on (f(z_{j-1}), f(c)) and F on W_j has the same sign.
 */
inline std::pair<std::vector<int>, std::vector<Side>> branch_signs(const std::vector<int>& Q, int N)
{
    if (static_cast<int>(Q.size()) <= N)
        throw IndexOutOfRange("kneading depth below requested branch count");
    std::vector<int> orientation(N + 1, 1);
    std::vector<Side> side(N + 1, Side::Right);
    auto hat_sign = [&](int i) { return side[i] == Side::Left ? 1 : -1; };
    for (int j = 2; j <= N; ++j) {
        int q = Q[j - 1];
        int sign = orientation[j - 1] * hat_sign(j - 1);
        if (q > 0) {
            int r = Q[q] + 1;
            sign *= orientation[q] * hat_sign(q) * orientation[r];
        }
        orientation[j] = sign;
        side[j] = sign > 0 ? Side::Right : Side::Left;
    }
    return {orientation, side};
}

inline std::pair<std::vector<int>, std::vector<Side>> branch_signs(const KneadingData& kd, int N)
{
    return branch_signs(kd.Q, N);
}

/** Builds the map from a kneading map and interval lengths eps_0..eps_N.
 *  tail_beyond is sum_{i>N} eps_i; when absent it is inferred as 1/2 - sum eps.
 */
template <class Real>
PLMapT<Real> build(const KneadingData& kd, std::vector<Real> eps, std::optional<Real> tail_beyond = std::nullopt,
                   double sum_tol = 1e-12)
{
    using std::abs;
    PLMapT<Real> m;
    m.N = static_cast<int>(eps.size()) - 1;
    if (m.N < 1)
        throw InvalidArgument("need at least eps_0 and eps_1");
    if (kd.K < m.N)
        throw InvalidArgument("kneading depth " + std::to_string(kd.K) + " below map depth " + std::to_string(m.N));
    for (const auto& e : eps)
        if (!(e > 0))
            throw InvalidArgument("interval lengths must be positive");
    const int N = m.N;
    const Real half = Real(1) / 2;

    detail::CompensatedSum<Real> total;
    for (const auto& e : eps)
        total.add(e);
    Real beyond;
    if (tail_beyond) {
        beyond = *tail_beyond;
        if (abs(total.value() + beyond - half) > sum_tol)
            throw NonSummable("sum of eps differs from 1/2 by more than the tolerance");
    } else {
        beyond = half - total.value();
        if (beyond < -Real(sum_tol))
            throw NonSummable("sum of eps exceeds 1/2");
        if (beyond < 0)
            beyond = 0;
    }

    auto c121 = check_condition_121(kd, std::min(kd.K - 1, N - 1));
    if (!c121.holds)
        throw ConditionFailure("kneading condition (Q(k+1) > Q(Q^2(k)+1)) fails at k = " +
                               std::to_string(*c121.first_failing_k));

    m.kneading = kd;
    m.tail.assign(N + 2, Real(0));
    m.tail[N + 1] = beyond;
    {
        detail::CompensatedSum<Real> acc;
        acc.add(beyond);
        for (int i = N; i >= 0; --i) {
            acc.add(eps[i]);
            m.tail[i] = acc.value();
        }
    }
    m.z.resize(N + 1);
    {
        detail::CompensatedSum<Real> acc;
        for (int i = 0; i <= N; ++i) {
            acc.add(eps[i]);
            m.z[i] = acc.value();
        }
    }
    m.s.assign(N + 1, Real(0));
    for (int j = 1; j <= N; ++j)
        m.s[j] = m.tail[kd.Q[j] + 1] / eps[j];

    m.kappa.assign(N + 1, Real(0));
    m.kappa[0] = 1 / (2 * eps[0]);
    m.kappa[1] = m.s[1];
    for (int j = 2; j <= N; ++j) {
        int q = kd.Q[j - 1];
        if (q == 0)
            m.kappa[j] = (m.s[j] / m.kappa[0]) * (m.kappa[j - 1] / m.s[j - 1]);
        else
            m.kappa[j] = m.s[j] * m.kappa[j - 1] / (m.s[j - 1] * m.s[q] * m.s[kd.Q[q] + 1]);
    }

    m.fvals.resize(N + 1);
    {
        detail::CompensatedSum<Real> acc;
        acc.add(half);
        m.fvals[0] = half;
        for (int j = 1; j <= N; ++j) {
            acc.add(m.kappa[j] * eps[j]);
            m.fvals[j] = acc.value();
        }
    }

    std::tie(m.orientation, m.side) = branch_signs(kd, N);

    m.resolved = 0;
    for (int j = 1; j <= N; ++j) {
        if (!(m.z[j] > m.z[j - 1] && m.z[j] < half))
            break;
        m.resolved = j;
    }
    m.eps = std::move(eps);
    return m;
}

/// Geometric Fibonacci family eps_j = (1-lambda)/2 lambda^j.
template <class Real>
PLMapT<Real> fibonacci_family(const Real& lambda, int N = 200)
{
    using std::pow;
    if (!(lambda > 0 && lambda < 1))
        throw InvalidArgument("lambda must lie in (0,1)");
    if (N < 2)
        throw InvalidArgument("depth N must be >= 2");
    std::vector<Real> eps(N + 1);
    Real e = (1 - lambda) / 2;
    for (int j = 0; j <= N; ++j) {
        eps[j] = e;
        e *= lambda;
    }
    Real beyond = pow(lambda, N + 1) / 2;
    auto m = build<Real>(fibonacci_kneading(N), std::move(eps), beyond);
    m.lambda = lambda;
    return m;
}

/** Polynomial family eps_j = C (j+1)^{-alpha} on a given kneading map. C is fixed so that the
 *  represented lengths plus an integral estimate of the remainder sum to 1/2.
 */
template <class Real>
PLMapT<Real> polynomial_family(const KneadingData& kd, const Real& alpha, int N)
{
    using std::pow;
    if (!(alpha > 1))
        throw InvalidArgument("alpha must exceed 1");
    std::vector<Real> eps(N + 1);
    detail::CompensatedSum<Real> partial;
    for (int j = 0; j <= N; ++j) {
        eps[j] = pow(Real(j + 1), -alpha);
        partial.add(eps[j]);
    }
    Real rest = pow(Real(N) + Real(3) / 2, 1 - alpha) / (alpha - 1);
    Real C = 1 / (2 * (partial.value() + rest));
    for (auto& e : eps)
        e *= C;
    return build<Real>(kd, std::move(eps), C * rest);
}

/// Closed forms of the map slopes kappa_j for the geometric Fibonacci family.
template <class Real>
Real fibonacci_kappa_closed_form(const Real& lambda, int j)
{
    using std::pow;
    const Real mu = 1 - lambda;
    switch (j) {
    case 0:
    case 1:
        return 1 / mu;
    case 2:
        return 1 / lambda;
    case 3:
        return mu / lambda;
    case 4:
        return pow(mu, 3) / lambda;
    default:
        return pow(lambda, 2 * j - 10) * pow(mu, 2 * j - 5);
    }
}

template <class Real>
Real fibonacci_s_closed_form(const Real& lambda, int j)
{
    return j == 1 ? 1 / (1 - lambda) : 1 / (lambda * (1 - lambda));
}

namespace detail {

/// Index j with y in (z_{j-1}, z_j], or 0 for y <= z_0. Requires y <= 1/2.
template <class Real>
int locate(const PLMapT<Real>& m, const Real& y)
{
    if (y <= m.z[0])
        return 0;
    auto it = std::lower_bound(m.z.begin(), m.z.end(), y);
    if (it == m.z.end())
        return m.N + 1;
    return static_cast<int>(it - m.z.begin());
}

} // namespace detail

template <class Real>
Real eval_f(const PLMapT<Real>& m, const Real& x)
{
    if (!(x >= 0 && x <= 1))
        throw OutsideDomain("eval_f needs x in [0,1]");
    const Real half = m.c();
    Real y = x <= half ? x : 1 - x;
    if (y == half)
        throw DepthExceeded("x = c is not resolved at finite depth");
    int j = detail::locate(m, y);
    if (j == 0)
        return m.kappa[0] * y;
    if (j > m.resolved)
        throw DepthExceeded("point within the unresolved tail near c (branch " + std::to_string(j) + ")");
    return m.fvals[j - 1] + m.kappa[j] * (y - m.z[j - 1]);
}

/// |f'| at a point off the precritical set.
template <class Real>
Real slope_f(const PLMapT<Real>& m, const Real& x)
{
    const Real half = m.c();
    Real y = x <= half ? x : 1 - x;
    if (y == half)
        throw DepthExceeded("slope at c");
    int j = detail::locate(m, y);
    if (j > m.resolved)
        throw DepthExceeded("point within the unresolved tail near c");
    return m.kappa[j];
}

/// Supremum of f, f(c) = 1/2 + sum_{i>=1} kappa_i eps_i, truncated at depth N.
template <class Real>
Real critical_value(const PLMapT<Real>& m)
{
    return m.fvals[m.N];
}

/// Branch j of the induced map containing x; validates the domain.
template <class Real>
int induced_branch(const PLMapT<Real>& m, const Real& x)
{
    const Real half = m.c();
    if (!(x > m.z[0] && x < 1 - m.z[0]))
        throw OutsideDomain("induced map is defined on (z_0, 1 - z_0)");
    Real y = x <= half ? x : 1 - x;
    if (y == half)
        throw BoundaryPoint("x = c");
    int j = detail::locate(m, y);
    if (j > m.resolved)
        throw DepthExceeded("point within the unresolved tail near c (branch " + std::to_string(j) + ")");
    if (y == m.z[j])
        throw BoundaryPoint("x is a precritical endpoint z_" + std::to_string(j));
    return j;
}

template <class Real>
BranchInfo<Real> branch_info(const PLMapT<Real>& m, int j)
{
    if (j < 1 || j > m.N)
        throw IndexOutOfRange("branch index " + std::to_string(j));
    BranchInfo<Real> b;
    b.j = j;
    b.tau = m.kneading.S[j - 1];
    b.slope = m.s[j];
    b.orientation = m.orientation[j];
    b.side = m.side[j];
    int q = m.kneading.Q[j];
    if (b.side == Side::Left) {
        b.image_lo = m.z[q];
        b.image_hi = m.c();
    } else {
        b.image_lo = m.c();
        b.image_hi = m.zhat(q);
    }
    return b;
}

/// F on W_j is affine with F(z_{j-1}) = c and |DF| = s_j; the mirror branch gives the same values.
template <class Real>
std::pair<Real, BranchInfo<Real>> eval_F_linear(const PLMapT<Real>& m, const Real& x)
{
    int j = induced_branch(m, x);
    const Real half = m.c();
    Real y = x <= half ? x : 1 - x;
    Real val = half + Real(m.orientation[j]) * m.s[j] * (y - m.z[j - 1]);
    return {val, branch_info(m, j)};
}

/// Applies f exactly S_{j-1} times; independent oracle for eval_F_linear.
template <class Real>
Real eval_F_iterate(const PLMapT<Real>& m, const Real& x, std::int64_t max_steps = 100000000)
{
    int j = induced_branch(m, x);
    const BigInt& tau = m.kneading.S[j - 1];
    if (tau > BigInt(max_steps))
        throw DepthExceeded("inducing time of branch " + std::to_string(j) + " exceeds the iteration budget");
    std::int64_t n = tau.convert_to<std::int64_t>();
    Real y = x;
    for (std::int64_t i = 0; i < n; ++i)
        y = eval_f(m, y);
    return y;
}

/// Countably piecewise linear factor map T_lambda on (0,1].
template <class Real>
Real eval_T(const Real& lambda, const Real& x)
{
    using std::floor;
    using std::log;
    using std::pow;
    if (!(x > 0))
        throw InvalidArgument("T is defined on (0,1]");
    if (x > 1)
        throw InvalidArgument("T is defined on (0,1]");
    if (x > lambda)
        return (x - lambda) / (1 - lambda);
    // x in (lambda^n, lambda^{n-1}]
    int n = static_cast<int>(floor(log(x) / log(lambda))) + 1;
    while (n > 2 && pow(lambda, n - 1) < x)
        --n;
    while (pow(lambda, n) >= x)
        ++n;
    return (x - pow(lambda, n)) / (lambda * (1 - lambda));
}

/// Index n with x in V_n = (lambda^n, lambda^{n-1}].
template <class Real>
int T_branch(const Real& lambda, const Real& x)
{
    using std::floor;
    using std::log;
    using std::pow;
    if (x > lambda)
        return 1;
    int n = std::max(2, static_cast<int>(floor(log(x) / log(lambda))) + 1);
    while (n > 2 && pow(lambda, n - 1) < x)
        --n;
    while (pow(lambda, n) >= x)
        ++n;
    return n;
}

/// Two-to-one factor map with pi(z_{j-1}) = lambda^{j-1}, so pi maps W_j onto V_j.
template <class Real>
Real semiconjugacy_pi(const PLMapT<Real>& m, const Real& x)
{
    using std::abs;
    return abs(2 * x - 1) / (1 - 2 * m.z[0]);
}

template <class Real>
struct SemiconjugacyReport {
    Real defect{};         ///< max |pi(F x) - T(rho(pi x))| with rho the flip of V_n onto itself
    Real literal_defect{}; ///< max |pi(F x) - T(pi x)|
    int samples = 0;
    int skipped = 0;
};

template <class Real>
SemiconjugacyReport<Real> semiconjugacy_defect(const PLMapT<Real>& m, const std::vector<Real>& sample)
{
    using std::abs;
    using std::pow;
    if (!m.lambda)
        throw InvalidArgument("semiconjugacy needs the geometric Fibonacci family");
    const Real lam = *m.lambda;
    SemiconjugacyReport<Real> rep;
    for (const auto& x : sample) {
        Real Fx;
        try {
            Fx = eval_F_linear(m, x).first;
        } catch (const BoundaryPoint&) {
            ++rep.skipped;
            continue;
        } catch (const DepthExceeded&) {
            ++rep.skipped;
            continue;
        }
        Real px = semiconjugacy_pi(m, x);
        int n = T_branch(lam, px);
        Real flipped = pow(lam, n) + pow(lam, n - 1) - px;
        Real lhs = semiconjugacy_pi(m, Fx);
        Real d = abs(lhs - eval_T(lam, flipped));
        Real dl = abs(lhs - eval_T(lam, px));
        if (d > rep.defect)
            rep.defect = d;
        if (dl > rep.literal_defect)
            rep.literal_defect = dl;
        ++rep.samples;
    }
    return rep;
}

template <class Real>
Real critical_order(const Real& lambda)
{
    using std::log;
    return 3 + 2 * log(1 - lambda) / log(lambda);
}

/// |Df^{S_{Q(k+1)}}(c_{S_k})| by chaining slopes along the orbit of f(c).
template <class Real>
Real critical_derivative_check(const PLMapT<Real>& m, int k)
{
    using std::abs;
    if (k < 1 || k + 1 > m.kneading.K)
        throw IndexOutOfRange("k out of range for the kneading depth");
    const BigInt& Sk = m.kneading.S[k];
    const BigInt& Sq = m.kneading.S[m.kneading.Q[k + 1]];
    const BigInt budget(100000000);
    if (Sk > budget || Sq > budget)
        throw DepthExceeded("orbit length beyond budget");
    std::int64_t n1 = Sk.convert_to<std::int64_t>();
    std::int64_t n2 = Sq.convert_to<std::int64_t>();
    Real x = critical_value(m);
    for (std::int64_t i = 1; i < n1; ++i)
        x = eval_f(m, x);
    Real d = 1;
    for (std::int64_t i = 0; i < n2; ++i) {
        d *= slope_f(m, x);
        x = eval_f(m, x);
    }
    return abs(d);
}

template <class Real>
struct ConditionRow {
    int j = 0;
    Real lhs{};        ///< (s_j / kappa_j) sum_{i>j} kappa_i eps_i
    Real rhs_128{};    ///< eps_{Q(j)}
    Real rhs_129{};    ///< eps_{Q^2(j)+1} / s_{Q(j)}, only when Q(j) > 0
    bool has_129 = false;
    bool pass_128 = false;
    bool pass_129 = true;
    bool pass() const { return pass_128 && pass_129; }
};

template <class Real>
struct ConditionReport {
    std::vector<ConditionRow<Real>> rows;
    bool all_pass = true;
};

template <class Real>
ConditionReport<Real> verify_conditions(const PLMapT<Real>& m, int J)
{
    if (J < 2)
        throw InvalidArgument("J must be >= 2");
    if (J >= m.N)
        throw TailTooShort("map depth must exceed J");
    // suffix sums of kappa_i eps_i
    std::vector<Real> suf(m.N + 2, Real(0));
    {
        detail::CompensatedSum<Real> acc;
        for (int i = m.N; i >= 0; --i) {
            acc.add(m.kappa[i] * m.eps[i]);
            suf[i] = acc.value();
        }
    }
    ConditionReport<Real> rep;
    const auto& Q = m.kneading.Q;
    for (int j = 2; j <= J; ++j) {
        Real tailsum = suf[j + 1];
        Real last = m.kappa[m.N] * m.eps[m.N];
        if (tailsum > 0 && last > tailsum * Real(1e-15))
            throw TailTooShort("sum over i > " + std::to_string(j) + " has not converged at depth N");
        ConditionRow<Real> row;
        row.j = j;
        row.lhs = m.s[j] / m.kappa[j] * tailsum;
        row.rhs_128 = m.eps[Q[j]];
        row.pass_128 = row.lhs <= row.rhs_128;
        if (Q[j] > 0) {
            row.has_129 = true;
            row.rhs_129 = m.eps[Q[Q[j]] + 1] / m.s[Q[j]];
            row.pass_129 = row.lhs <= row.rhs_129;
        }
        rep.all_pass = rep.all_pass && row.pass();
        rep.rows.push_back(row);
    }
    return rep;
}

extern template PLMapT<double> build<double>(const KneadingData&, std::vector<double>, std::optional<double>, double);
extern template PLMapT<Quad> build<Quad>(const KneadingData&, std::vector<Quad>, std::optional<Quad>, double);

nlohmann::json plmap_to_json(const PLMap& m);

} // namespace fibwild
