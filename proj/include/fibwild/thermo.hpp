#pragma once

/** @file thermo.hpp
 *  @brief Conformal weights, the pressure p(t), equilibrium data of the induced system and related diagnostics
 *         for the geometric Fibonacci family.
 *
 *  Functions templated on Real are instantiated for double, Quad and Oct.
 */

#include "fibwild/real.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fibwild {

template <class Real>
struct ThermoConstants {
    Real lambda, t;
    Real log_ll;      ///< log[lambda(1-lambda)]
    Real beta;        ///< t log[lambda(1-lambda)]
    Real beta_prime;  ///< (t - t2) log[lambda(1-lambda)]
    Real t1, t2;
    Real gamma_plus;  ///< golden mean
    Real Gamma;       ///< 2 log(gamma_plus) / sqrt(-log[lambda(1-lambda)])
};

template <class Real>
ThermoConstants<Real> thermo_constants(const Real& lambda, const Real& t);

/// Cutting times of the Fibonacci kneading map S_0..S_K as reals (exact while S_k fits the mantissa).
template <class Real>
std::vector<Real> fibonacci_times(int K);

enum class WeightStatus { AllPositiveSumOne, WentNegative, SumBelowOne };

const char* to_string(WeightStatus s);

template <class Real>
struct ConformalSolution {
    Real p{};
    std::vector<Real> w;     ///< w[1..N]; w[0] unused
    std::vector<Real> H;     ///< H[j] = sum_{k<=j} w_k
    Real remainder{};        ///< 1 - H[N]
    WeightStatus status = WeightStatus::SumBelowOne;
    std::optional<int> k0;   ///< first negative weight (may lie just past N)
};

/** Weights solving w_1 = (1-lambda)^t e^{-p S_0}, w_j = e^{beta - p S_{j-1}} (1 - sum_{k<j-1} w_k).
 *  The remainder is carried as R_j = 1 - sum_{k<=j} w_k, which is the difference recursion in disguise.
 */
template <class Real>
ConformalSolution<Real> conformal_weights(const Real& lambda, const Real& t, const Real& p, int N,
                                          double sum_tol = 1e-12);

enum class RootCase { RealRoots, Degenerate, ComplexRoots };

const char* to_string(RootCase c);

/// Sign of 1 - 4 e^beta, with |.| <= 64 eps treated as the double root 1/2.
template <class Real>
RootCase root_case(const Real& lambda, const Real& t);

/// Closed-form weights at p = 0, k = 1..N (index 0 unused).
template <class Real>
std::vector<Real> closed_form_weights_p0(const Real& lambda, const Real& t, int N);

/// First k with a negative closed-form weight at p = 0, scanning k <= kmax.
template <class Real>
std::optional<int> first_negative_index_p0(const Real& lambda, const Real& t, int kmax = 1000000);

/// Asymptotic estimate of the first negative weight index at p = 0 for t < t1.
int k0_estimate(double lambda, double t);

/// Sign scan of the weight system to super-exponential convergence.
template <class Real>
struct WeightScan {
    bool negative = false;
    int first_negative = 0;  ///< index of the first negative weight when negative
    Real remainder{};        ///< 1 - H(p,t) when not negative
    int terms = 0;
};

template <class Real>
WeightScan<Real> scan_weights(const Real& lambda, const Real& t, const Real& p, const std::vector<Real>& S,
                              int max_terms);

struct PressureOptions {
    double sum_tol = 1e-12;
    int max_terms = 20000;
    int max_iterations = 5000;
};

template <class Real>
struct PressurePoint {
    Real p{};
    Real residual{};     ///< H(p,t) - 1
    Real lo{}, hi{};     ///< final bracket: lo has a negative weight, hi does not
    int iterations = 0;
    int terms = 0;
    bool zero_branch = false; ///< t >= t1, p = 0 without solving
};

/** p(t): zero for t >= t1, otherwise the unique p > 0 with nonnegative weights summing to 1.
 *  Throws PrecisionExhausted when p falls below the smallest normal number or the scan depth.
 */
template <class Real>
PressurePoint<Real> solve_pressure(const Real& lambda, const Real& t, const PressureOptions& opts = {});

struct PressureBounds {
    bool available = false; ///< false for lambda < 2/(3+sqrt5) and, below 1/2, for t < t2 where R is complex
    double lower = 0;       ///< structural lower factor (constants omitted)
    double upper = 0;
    double R = 0;           ///< only for lambda < 1/2
    double Gamma = 0;
};

PressureBounds pressure_bounds(double lambda, double t);

template <class Real>
struct UkResult {
    std::vector<Real> u;     ///< u[1..K]
    Real min_u{};
    int argmin = 1;
    std::optional<int> first_nonpositive;
    bool tends_to_one = false; ///< |u_K - 1| < 1e-6
};

/// u_1 = lambda^t, u_{k+1} = 1 - e^{beta' - p S_{k-1}} / (4 u_k); u_k is the ratio e^{pS_k} w_{k+1} / (e^{pS_{k-1}} w_k).
template <class Real>
UkResult<Real> uk_recursion(const Real& lambda, const Real& t, const Real& p, int K);

struct ConformalMasses {
    std::vector<double> m;  ///< m(W_j) = m(hat W_j), j = 1..N
    double total = 0;       ///< sum over j of both sides
};

/// Closed-form conformal masses of W_j in the two cases lambda^t <= 1/2 and >= 1/2. N = 0 picks a depth automatically.
ConformalMasses closed_form_conformal_masses(double lambda, double t, int N = 0);

struct InvariantMasses {
    ConformalMasses conformal;
    std::vector<double> v;        ///< v_j = ((1-2x)/x)(x/(1-x))^j with x = lambda^t
    double zeta = 0;              ///< mass of branches whose image lies left of c
    std::vector<double> mu_left;  ///< zeta v_j
    std::vector<double> mu_right; ///< (1-zeta) v_j
    double total = 0;
};

/// Throws InvariantUnavailable when lambda^t >= 1/2.
InvariantMasses closed_form_measures(double lambda, double t, int N = 0);

/// Normalising constant of the projected conformal measure, closed form and defining series.
template <class Real>
Real projection_constant(const Real& lambda, const Real& t, const Real& p);
template <class Real>
Real projection_constant_series(const Real& lambda, const Real& t, const Real& p, int terms);

template <class Real>
struct EquilibriumData {
    Real lambda{}, t{}, p{};
    int N = 0;
    std::vector<Real> w;     ///< conformal weights w[1..N]
    std::vector<int> start;  ///< first reachable state of row i, start[i] = Q(i)+1
    std::vector<Real> tail;  ///< tail[m] = sum_{j=m..N} w_j, m = 1..N+1
    std::vector<Real> v;     ///< stationary vector v[1..N]
    std::vector<Real> density; ///< h_k = v_k / w_k
    Real entropy{};          ///< -sum_i v_i sum_j G_ij log G_ij
    Real entropy_tail_bound{};
    Real lyap{};             ///< sum_i v_i log s_i
    Real Lambda{};           ///< sum_i S_{i-1} v_i
    Real M{};
    Real zeta{};
    int iterations = 0;

    Real G(int i, int j) const { return j >= start[i] ? w[j] / tail[start[i]] : Real(0); }
    Real row_sum(int i) const;
};

/// Equilibrium data at the solved pressure; t must satisfy t <= t1.
template <class Real>
EquilibriumData<Real> equilibrium_data(const Real& lambda, const Real& t, const PressureOptions& opts = {});

/// Equilibrium data from an already solved pressure point.
template <class Real>
EquilibriumData<Real> equilibrium_data(const Real& lambda, const Real& t, const PressurePoint<Real>& pp);

/// h + sum_i v_i (-t log s_i - p S_{i-1}); p_override replaces the solved p (negative control).
template <class Real>
Real pressure_identity_residual(const EquilibriumData<Real>& eq, std::optional<Real> p_override = std::nullopt);

template <class Real>
struct ProjectedData {
    Real M{};
    Real Lambda{};
    Real entropy{};   ///< h(nu) = h(mu)/Lambda
    Real lyap{};      ///< lambda(nu) = lyap/Lambda
    Real pressure_check{}; ///< h(nu) - t lambda(nu) - p
};

template <class Real>
ProjectedData<Real> project_measures(const EquilibriumData<Real>& eq);

double hyperbolic_dimension(double lambda);

enum class Recurrence { PositiveRecurrent, NullRecurrent, Transient };

const char* to_string(Recurrence r);
Recurrence recurrence_from_string(const std::string& s);

struct RecurrenceReport {
    double lambda = 0, t = 0, t1 = 0;
    Recurrence induced = Recurrence::Transient;
    Recurrence original = Recurrence::Transient;

    bool operator==(const RecurrenceReport&) const = default;
};

/// Case lists for the induced and original systems at p = p(t); t = t1 and lambda = 1/2 are matched within tol.
RecurrenceReport classify_recurrence(double lambda, double t, double tol = 1e-12);

template <class Real>
struct GurevichReport {
    std::vector<Real> Z;          ///< Z[1..n_max]
    std::vector<double> rate;     ///< (1/n) log Z_n
    std::vector<double> step_rate; ///< log(Z_n / Z_{n-1}), n >= 2
    std::vector<Real> partial_sum; ///< sum_{m<=n} Z_m
};

/** Local partition sums at state 1 for the potential -t log s_i - p S_{i-1} on the Markov graph
 *  truncated to N states. Throws CombinatorialOverflow when n_max * N exceeds 40000.
 */
template <class Real>
GurevichReport<Real> gurevich_diagnostic(const Real& lambda, const Real& t, const Real& p, int n_max, int N);

struct DerivativeProbeRow {
    double delta = 0;
    double t = 0;
    double p = 0;
    double slope = 0;   ///< (p(t1) - p(t1 - delta)) / delta
    double Lambda = 0;  ///< mean inducing time at t1 - delta
};

template <class Real>
std::vector<DerivativeProbeRow> left_derivative_probe(const Real& lambda, const std::vector<double>& deltas);

void to_json(nlohmann::json& j, const RecurrenceReport& r);
void from_json(const nlohmann::json& j, RecurrenceReport& r);
void to_json(nlohmann::json& j, const DerivativeProbeRow& r);
void from_json(const nlohmann::json& j, DerivativeProbeRow& r);

} // namespace fibwild
