#pragma once

/** @file walk.hpp
 *  @brief The induced map as a countable-state Markov chain: transition matrix, stationary vector, drift, regimes.
 */

#include "fibwild/kneading.hpp"
#include "fibwild/plmap.hpp"

#include "json.hpp"

#include <string>
#include <utility>
#include <vector>

namespace fibwild {

enum class Regime { Acip, SigmaFiniteInfinite, WildAttractor };

const char* to_string(Regime r);
Regime regime_from_string(const std::string& s);

/// Row-stochastic matrix on states 1..N, stored dense and row-major.
struct TransitionMatrix {
    int N = 0;
    std::vector<int> first;       ///< first[i] = Q(i)+1, the first reachable state of row i
    std::vector<double> data;     ///< N*N entries, (i,j) at (i-1)*N + (j-1)
    std::vector<double> deficit;  ///< mass beyond N removed from row i before renormalising

    double operator()(int i, int j) const { return data[static_cast<std::size_t>(i - 1) * N + (j - 1)]; }
    double row_sum(int i) const;
    /// v A for a row vector indexed 1..N (v[0] unused).
    std::vector<double> left_multiply(const std::vector<double>& v) const;
};

/** Fibonacci-family intervals eps_j = (1-lambda) lambda^{j-1}/2 with an arbitrary kneading map:
 *  A_{ij} = eps_j / sum_{k>Q(i)} eps_k for j > Q(i), renormalised over j <= N.
 */
TransitionMatrix transition_matrix(double lambda, const KneadingData& kd, int N);

/// Same construction from the interval lengths of a built map.
TransitionMatrix transition_matrix(const PLMap& map, int N);

struct StationaryResult {
    std::vector<double> v; ///< indexed 1..N
    int iterations = 0;
    double residual = 0;   ///< ||vA - v||_1 at exit
};

/** Power iteration from the uniform vector on states 1..10. Throws NoConvergence after max_iter, or when
 *  the limit keeps more than 1e-6 of its mass on the last tenth of the states (a truncation artifact).
 */
StationaryResult stationary_vector(const TransitionMatrix& A, double tol = 1e-14, int max_iter = 200000);

/// v_i = ((1-2 lambda)/lambda) (lambda/(1-lambda))^i, i = 1..N; requires lambda < 1/2.
std::vector<double> stationary_closed_form(double lambda, int N);

double drift(double lambda);
/// E[(phi_n - k)^2 | phi_{n-1} = k] for rows k >= 2 of the Fibonacci chain.
double second_moment(double lambda);

/// Empirical sum_j (j-k) A_{kj} and sum_j (j-k)^2 A_{kj} of one row.
double row_drift(const TransitionMatrix& A, int k);
double row_second_moment(const TransitionMatrix& A, int k);

/// Asymptotic mean and second moment of log phi_n - log k for eps_j ~ j^{-alpha}, Q(k) ~ r k.
std::pair<double, double> log_drift(double r, double alpha);

struct TailExpectation {
    std::vector<double> partial; ///< partial[K'] = sum_{k<=K'} S_{k-1} v_k, K' = 0..K
    double ratio = 0;            ///< gamma_+ lambda/(1-lambda)
    bool finite = false;         ///< ratio < 1
};

TailExpectation tail_expectation(double lambda, const KneadingData& kd, const std::vector<double>& v, int K);

struct ClassifyRow {
    double lambda = 0;
    double drift = 0;
    double second_moment = 0;
    double tail_ratio = 0;
    Regime regime = Regime::Acip;

    bool operator==(const ClassifyRow&) const = default;
};

/// Regime from the sign of the drift and the tail ratio.
ClassifyRow classify(double lambda);

void to_json(nlohmann::json& j, const ClassifyRow& r);
void from_json(const nlohmann::json& j, ClassifyRow& r);

} // namespace fibwild
