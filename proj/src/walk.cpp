#include "fibwild/walk.hpp"
#include "fibwild/errors.hpp"

#include <cmath>
#include <numeric>

namespace fibwild {

const char* to_string(Regime r)
{
    switch (r) {
    case Regime::Acip:
        return "acip";
    case Regime::SigmaFiniteInfinite:
        return "sigma-finite-infinite";
    case Regime::WildAttractor:
        return "wild-attractor";
    }
    return "?";
}

Regime regime_from_string(const std::string& s)
{
    for (Regime r : {Regime::Acip, Regime::SigmaFiniteInfinite, Regime::WildAttractor})
        if (s == to_string(r))
            return r;
    throw InvalidArgument("unknown regime '" + s + "'");
}

double TransitionMatrix::row_sum(int i) const
{
    const double* row = &data[static_cast<std::size_t>(i - 1) * N];
    return std::accumulate(row, row + N, 0.0);
}

std::vector<double> TransitionMatrix::left_multiply(const std::vector<double>& v) const
{
    std::vector<double> out(N + 1, 0.0);
    for (int i = 1; i <= N; ++i) {
        double vi = v[i];
        if (vi == 0)
            continue;
        const double* row = &data[static_cast<std::size_t>(i - 1) * N];
        for (int j = first[i]; j <= N; ++j)
            out[j] += vi * row[j - 1];
    }
    return out;
}

namespace {

void check_sizes(const KneadingData& kd, int N)
{
    if (N < 10)
        throw InvalidArgument("truncation N must be >= 10");
    if (kd.K < N)
        throw IndexOutOfRange("kneading depth " + std::to_string(kd.K) + " below N = " + std::to_string(N));
}

// eps given for j = 1..N, tail[m] = sum_{i>=m} eps_i including the part beyond N
TransitionMatrix from_lengths(const KneadingData& kd, int N, const std::vector<double>& eps,
                              const std::vector<double>& tail)
{
    TransitionMatrix A;
    A.N = N;
    A.first.assign(N + 1, 1);
    A.data.assign(static_cast<std::size_t>(N) * N, 0.0);
    A.deficit.assign(N + 1, 0.0);
    for (int i = 1; i <= N; ++i) {
        int lo = kd.Q[i] + 1;
        A.first[i] = lo;
        double kept = tail[lo] - tail[N + 1];
        A.deficit[i] = tail[N + 1] / tail[lo];
        double* row = &A.data[static_cast<std::size_t>(i - 1) * N];
        for (int j = lo; j <= N; ++j)
            row[j - 1] = eps[j] / kept;
    }
    return A;
}

} // namespace

TransitionMatrix transition_matrix(double lambda, const KneadingData& kd, int N)
{
    if (!(lambda > 0 && lambda < 1))
        throw InvalidArgument("lambda must lie in (0,1)");
    check_sizes(kd, N);
    // geometric lengths are handled in relative form so deep rows keep full precision
    TransitionMatrix A;
    A.N = N;
    A.first.assign(N + 1, 1);
    A.data.assign(static_cast<std::size_t>(N) * N, 0.0);
    A.deficit.assign(N + 1, 0.0);
    for (int i = 1; i <= N; ++i) {
        int lo = kd.Q[i] + 1;
        A.first[i] = lo;
        int len = N - lo + 1;
        A.deficit[i] = std::pow(lambda, len);
        double norm = (1 - lambda) / -std::expm1(len * std::log(lambda));
        double* row = &A.data[static_cast<std::size_t>(i - 1) * N];
        double p = norm;
        for (int j = lo; j <= N; ++j) {
            row[j - 1] = p;
            p *= lambda;
        }
    }
    return A;
}

TransitionMatrix transition_matrix(const PLMap& map, int N)
{
    check_sizes(map.kneading, N);
    if (map.N < N)
        throw IndexOutOfRange("map depth below N");
    std::vector<double> eps(map.eps.begin(), map.eps.begin() + N + 1);
    std::vector<double> tail(N + 2);
    tail[N + 1] = map.tail[N + 1];
    for (int m = N; m >= 0; --m)
        tail[m] = tail[m + 1] + eps[m];
    return from_lengths(map.kneading, N, eps, tail);
}

StationaryResult stationary_vector(const TransitionMatrix& A, double tol, int max_iter)
{
    int N = A.N;
    std::vector<double> v(N + 1, 0.0);
    int m = std::min(10, N);
    for (int i = 1; i <= m; ++i)
        v[i] = 1.0 / m;
    StationaryResult res;
    for (int it = 1; it <= max_iter; ++it) {
        auto w = A.left_multiply(v);
        double s = std::accumulate(w.begin() + 1, w.end(), 0.0);
        double diff = 0;
        for (int i = 1; i <= N; ++i) {
            w[i] /= s;
            diff += std::abs(w[i] - v[i]);
        }
        v.swap(w);
        if (diff < tol) {
            double edge = std::accumulate(v.begin() + (N - N / 10 + 1), v.end(), 0.0);
            if (edge > 1e-6)
                throw NoConvergence("limit vector carries mass " + std::to_string(edge) +
                                    " on the last tenth of the truncated states (escape to infinity)");
            res.v = std::move(v);
            res.iterations = it;
            res.residual = diff;
            return res;
        }
    }
    throw NoConvergence("power iteration did not reach l1 change " + std::to_string(tol) + " in " +
                        std::to_string(max_iter) + " iterations (no stationary probability vector in this regime)");
}

std::vector<double> stationary_closed_form(double lambda, int N)
{
    if (!(lambda > 0 && lambda < 0.5))
        throw InvalidArgument("closed-form stationary vector needs lambda in (0, 1/2)");
    std::vector<double> v(N + 1, 0.0);
    double r = lambda / (1 - lambda);
    double p = (1 - 2 * lambda) / lambda;
    for (int i = 1; i <= N; ++i) {
        p *= r;
        v[i] = p;
    }
    return v;
}

double drift(double lambda) { return (2 * lambda - 1) / (1 - lambda); }

double second_moment(double lambda)
{
    double m = 1 - lambda;
    return lambda * (1 + lambda) / (m * m) - 2 * lambda / m + 1;
}

double row_drift(const TransitionMatrix& A, int k)
{
    double s = 0;
    for (int j = A.first[k]; j <= A.N; ++j)
        s += (j - k) * A(k, j);
    return s;
}

double row_second_moment(const TransitionMatrix& A, int k)
{
    double s = 0;
    for (int j = A.first[k]; j <= A.N; ++j)
        s += double(j - k) * (j - k) * A(k, j);
    return s;
}

std::pair<double, double> log_drift(double r, double alpha)
{
    if (!(r > 0 && r < 1) || !(alpha > 1))
        throw InvalidArgument("log_drift needs r in (0,1) and alpha > 1");
    double a = alpha - 1;
    double L = std::log(r);
    return {1 / a + L, L * L + 2 * L / a + 2 / (a * a)};
}

TailExpectation tail_expectation(double lambda, const KneadingData& kd, const std::vector<double>& v, int K)
{
    if (K >= static_cast<int>(v.size()) || K > kd.K + 1)
        throw IndexOutOfRange("tail_expectation depth beyond data");
    TailExpectation te;
    te.partial.assign(K + 1, 0.0);
    for (int k = 1; k <= K; ++k)
        te.partial[k] = te.partial[k - 1] + kd.s_double(k - 1) * v[k];
    te.ratio = golden_ratio<double>() * lambda / (1 - lambda);
    te.finite = te.ratio < 1;
    return te;
}

ClassifyRow classify(double lambda)
{
    if (!(lambda > 0 && lambda < 1))
        throw InvalidArgument("lambda must lie in (0,1)");
    ClassifyRow row;
    row.lambda = lambda;
    row.drift = drift(lambda);
    row.second_moment = second_moment(lambda);
    row.tail_ratio = golden_ratio<double>() * lambda / (1 - lambda);
    if (row.drift > 0)
        row.regime = Regime::WildAttractor;
    else if (row.tail_ratio >= 1)
        row.regime = Regime::SigmaFiniteInfinite;
    else
        row.regime = Regime::Acip;
    return row;
}

void to_json(nlohmann::json& j, const ClassifyRow& r)
{
    j = nlohmann::json{{"lambda", r.lambda},
                       {"drift", r.drift},
                       {"second_moment", r.second_moment},
                       {"tail_ratio", r.tail_ratio},
                       {"regime", to_string(r.regime)}};
}

void from_json(const nlohmann::json& j, ClassifyRow& r)
{
    r.lambda = j.at("lambda").get<double>();
    r.drift = j.at("drift").get<double>();
    r.second_moment = j.at("second_moment").get<double>();
    r.tail_ratio = j.at("tail_ratio").get<double>();
    r.regime = regime_from_string(j.at("regime").get<std::string>());
}

} // namespace fibwild
