#include "fibwild/mc_sim.hpp"
#include "fibwild/errors.hpp"
#include "fibwild/walk.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <thread>

namespace fibwild {

std::uint64_t SplitMix64::next()
{
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double SplitMix64::uniform()
{
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index)
{
    SplitMix64 a(master ^ 0x6A09E667F3BCC909ULL);
    std::uint64_t base = a.next();
    SplitMix64 b(base + index * 0xD1B54A32D192ED03ULL);
    return b.next();
}

std::int64_t sample_geometric(double u, double log_lambda)
{
    double g = std::floor(std::log(u) / log_lambda);
    return g > 0x1.0p31 ? (std::int64_t(1) << 31) : static_cast<std::int64_t>(g);
}

namespace {

int thread_count(int requested, std::int64_t work)
{
    int n = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    return static_cast<int>(std::max<std::int64_t>(1, std::min<std::int64_t>(n, work)));
}

// splits [0, total) into n contiguous blocks and runs fn(block, begin, end) on worker threads
template <class Fn>
void parallel_blocks(int n, std::int64_t total, Fn&& fn)
{
    if (n == 1) {
        fn(0, 0, total);
        return;
    }
    std::vector<std::thread> pool;
    for (int b = 0; b < n; ++b) {
        std::int64_t lo = total * b / n, hi = total * (b + 1) / n;
        pool.emplace_back([&fn, b, lo, hi] { fn(b, lo, hi); });
    }
    for (auto& t : pool)
        t.join();
}

struct WalkTally {
    std::vector<std::int64_t> occ; // occ[0] = frozen steps
    std::int64_t escaped = 0, frozen = 0;
    std::int64_t inc_n = 0;
    long double inc_sum = 0, inc_sq = 0;
    std::vector<std::int64_t> row_n, row_sum, row_sq;
};

} // namespace

WalkRunReport simulate_walk(const WalkConfig& cfg)
{
    if (!(cfg.lambda > 0 && cfg.lambda < 1))
        throw InvalidArgument("lambda must lie in (0,1)");
    if (cfg.n_walkers < 1 || cfg.n_steps < 1)
        throw InvalidArgument("walkers and steps must be positive");
    if (cfg.state_cap < 2 || cfg.threshold < 1)
        throw InvalidArgument("state cap and threshold must be positive");
    const int cap = cfg.state_cap;
    const int R = std::clamp(cfg.drift_rows, 2, cap);
    const double logl = std::log(cfg.lambda);
    const int nt = thread_count(cfg.n_threads, cfg.n_walkers);
    std::vector<WalkTally> tallies(nt);

    parallel_blocks(nt, cfg.n_walkers, [&](int b, std::int64_t lo, std::int64_t hi) {
        WalkTally& T = tallies[b];
        T.occ.assign(cap + 1, 0);
        T.row_n.assign(R + 1, 0);
        T.row_sum.assign(R + 1, 0);
        T.row_sq.assign(R + 1, 0);
        // integer increment sums keep the aggregate exact and order independent
        std::int64_t isum = 0, isq = 0;
        for (std::int64_t w = lo; w < hi; ++w) {
            SplitMix64 rng(substream_seed(cfg.seed, static_cast<std::uint64_t>(w)));
            std::int64_t k = 1;
            std::int64_t s = 0;
            for (; s < cfg.n_steps; ++s) {
                std::int64_t g = sample_geometric(rng.uniform(), logl);
                std::int64_t j = (k >= 2 ? k - 1 : 1) + g;
                if (k >= 2) {
                    std::int64_t d = j - k;
                    ++T.inc_n;
                    isum += d;
                    isq += d * d;
                    if (k <= R) {
                        ++T.row_n[k];
                        T.row_sum[k] += d;
                        T.row_sq[k] += d * d;
                    }
                }
                k = j;
                if (k > cap)
                    break;
                ++T.occ[k];
            }
            if (k > cap) {
                ++T.frozen;
                T.occ[0] += cfg.n_steps - s;
            }
            if (k >= cfg.threshold)
                ++T.escaped;
        }
        T.inc_sum = static_cast<long double>(isum);
        T.inc_sq = static_cast<long double>(isq);
    });

    WalkTally all;
    all.occ.assign(cap + 1, 0);
    all.row_n.assign(R + 1, 0);
    all.row_sum.assign(R + 1, 0);
    all.row_sq.assign(R + 1, 0);
    for (auto& T : tallies) {
        for (int k = 0; k <= cap; ++k)
            all.occ[k] += T.occ[k];
        for (int k = 0; k <= R; ++k) {
            all.row_n[k] += T.row_n[k];
            all.row_sum[k] += T.row_sum[k];
            all.row_sq[k] += T.row_sq[k];
        }
        all.escaped += T.escaped;
        all.frozen += T.frozen;
        all.inc_n += T.inc_n;
        all.inc_sum += T.inc_sum;
        all.inc_sq += T.inc_sq;
    }

    WalkRunReport r;
    r.lambda = cfg.lambda;
    r.n_walkers = cfg.n_walkers;
    r.n_steps = cfg.n_steps;
    r.seed = cfg.seed;
    r.threshold = cfg.threshold;
    r.state_cap = cap;
    r.escape_fraction = double(all.escaped) / double(cfg.n_walkers);
    r.frozen_fraction = double(all.frozen) / double(cfg.n_walkers);
    const double total = double(cfg.n_walkers) * double(cfg.n_steps);
    r.occupation.resize(cap + 1);
    for (int k = 0; k <= cap; ++k)
        r.occupation[k] = double(all.occ[k]) / total;
    r.drift_expected = drift(cfg.lambda);
    if (all.inc_n > 0) {
        long double n = all.inc_n;
        long double m = all.inc_sum / n;
        r.drift = static_cast<double>(m);
        long double var = all.inc_sq / n - m * m;
        r.drift_stderr = static_cast<double>(std::sqrt(std::max<long double>(var, 0) / n));
    }
    for (int k = 2; k <= R; ++k) {
        if (all.row_n[k] < 2)
            continue;
        RowDrift rd;
        rd.row = k;
        rd.count = all.row_n[k];
        double n = double(all.row_n[k]);
        rd.mean = double(all.row_sum[k]) / n;
        double var = double(all.row_sq[k]) / n - rd.mean * rd.mean;
        rd.stderr_ = std::sqrt(std::max(var, 0.0) / n);
        r.rows.push_back(rd);
    }
    if (cfg.lambda < 0.5) {
        auto v = stationary_closed_form(cfg.lambda, cap);
        std::vector<double> occ(r.occupation);
        occ[0] = 0;
        // frozen mass sits outside 1..cap and counts fully toward the distance
        r.tv_distance = tv_distance(occ, v) + r.occupation[0] / 2;
    }
    return r;
}

int rows_outside(const WalkRunReport& r, double z)
{
    int bad = 0;
    for (const auto& rd : r.rows)
        if (std::abs(rd.mean - r.drift_expected) > z * rd.stderr_)
            ++bad;
    return bad;
}

const char* to_string(OrbitEnd e)
{
    switch (e) {
    case OrbitEnd::Completed:
        return "completed";
    case OrbitEnd::DepthExceeded:
        return "depth-exceeded";
    case OrbitEnd::BoundaryHit:
        return "boundary-hit";
    }
    return "?";
}

OrbitRun simulate_orbit(const PLMap& map, double x0, int n_returns)
{
    if (!(x0 > map.z[0] && x0 < map.zhat(0)))
        throw OutsideDomain("x0 must lie in (z_0, 1 - z_0)");
    OrbitRun run;
    run.x0 = x0;
    run.branches.reserve(n_returns);
    // the branch index depends only on d = |x - c|, and c - z_j = tail[j+1] keeps full relative precision near c
    const auto& tail = map.tail;
    double d = std::abs(x0 - 0.5);
    for (int n = 0; n < n_returns; ++n) {
        if (!(d < tail[1]) || !(d > 0)) {
            run.end = OrbitEnd::BoundaryHit;
            return run;
        }
        if (d <= tail[map.N + 1]) {
            run.end = OrbitEnd::DepthExceeded;
            return run;
        }
        // tail is decreasing: find j with tail[j+1] < d < tail[j]
        auto it = std::upper_bound(tail.begin() + 1, tail.begin() + map.N + 2, d, std::greater<double>());
        int j = static_cast<int>(it - tail.begin()) - 1;
        if (d == tail[j]) {
            run.end = OrbitEnd::BoundaryHit;
            return run;
        }
        run.branches.push_back(j);
        d = map.s[j] * (tail[j] - d);
    }
    return run;
}

OrbitEnsembleReport sample_orbits(const PLMap& map, std::int64_t n_orbits, int n_returns, std::uint64_t seed, int K,
                                  int n_threads)
{
    if (n_orbits < 1 || n_returns < 1)
        throw InvalidArgument("orbit count and length must be positive");
    K = std::min(K, map.N);
    const int M = map.N;
    const int nt = thread_count(n_threads, n_orbits);
    struct Tally {
        std::vector<std::int64_t> freq, trans;
        std::int64_t depth = 0, boundary = 0;
    };
    std::vector<Tally> tallies(nt);
    const double a = map.z[0], width = map.zhat(0) - map.z[0];

    parallel_blocks(nt, n_orbits, [&](int b, std::int64_t lo, std::int64_t hi) {
        Tally& T = tallies[b];
        T.freq.assign(M + 1, 0);
        T.trans.assign(static_cast<std::size_t>(K + 1) * (M + 1), 0);
        for (std::int64_t o = lo; o < hi; ++o) {
            SplitMix64 rng(substream_seed(seed, static_cast<std::uint64_t>(o)));
            auto run = simulate_orbit(map, a + width * rng.uniform(), n_returns);
            for (std::size_t n = 0; n < run.branches.size(); ++n) {
                int i = run.branches[n];
                ++T.freq[i];
                if (n + 1 < run.branches.size() && i <= K)
                    ++T.trans[static_cast<std::size_t>(i) * (M + 1) + run.branches[n + 1]];
            }
            if (run.end == OrbitEnd::DepthExceeded)
                ++T.depth;
            else if (run.end == OrbitEnd::BoundaryHit)
                ++T.boundary;
        }
    });

    std::vector<std::int64_t> freq(M + 1, 0), trans(static_cast<std::size_t>(K + 1) * (M + 1), 0);
    std::int64_t depth = 0, boundary = 0;
    for (auto& T : tallies) {
        for (std::size_t i = 0; i < freq.size(); ++i)
            freq[i] += T.freq[i];
        for (std::size_t i = 0; i < trans.size(); ++i)
            trans[i] += T.trans[i];
        depth += T.depth;
        boundary += T.boundary;
    }

    OrbitEnsembleReport rep;
    rep.lambda = map.lambda ? *map.lambda : 0.0;
    rep.n_orbits = n_orbits;
    rep.n_returns = n_returns;
    rep.seed = seed;
    rep.depth_exceeded_fraction = double(depth) / double(n_orbits);
    rep.boundary_fraction = double(boundary) / double(n_orbits);
    std::int64_t nrec = 0;
    for (int k = 1; k <= M; ++k)
        nrec += freq[k];
    rep.frequency.assign(M + 1, 0.0);
    if (nrec > 0)
        for (int k = 1; k <= M; ++k)
            rep.frequency[k] = double(freq[k]) / double(nrec);

    // pooled chi-square: each row contributes its bins, the tail merged until the expected count reaches 5
    double chi2 = 0;
    int dof = 0;
    for (int i = 1; i <= K; ++i) {
        const std::int64_t* row = &trans[static_cast<std::size_t>(i) * (M + 1)];
        std::int64_t n = 0;
        for (int j = 1; j <= M; ++j)
            n += row[j];
        rep.transitions += n;
        if (n < 20)
            continue;
        int lo = map.kneading.Q[i] + 1;
        double norm = map.tail[lo];
        std::vector<double> e_bin;
        std::vector<std::int64_t> o_bin;
        double e_acc = 0, e_used = 0;
        std::int64_t o_acc = 0, o_used = 0;
        for (int j = lo; j <= std::min(M, map.N); ++j) {
            e_acc += n * (map.eps[j] / norm);
            o_acc += row[j];
            if (e_acc >= 5) {
                e_bin.push_back(e_acc);
                o_bin.push_back(o_acc);
                e_used += e_acc;
                o_used += o_acc;
                e_acc = 0;
                o_acc = 0;
            }
        }
        // remaining probability, including states beyond the resolved depth
        e_bin.push_back(std::max(0.0, n - e_used));
        o_bin.push_back(n - o_used);
        if (e_bin.size() > 1 && e_bin.back() < 5) {
            e_bin[e_bin.size() - 2] += e_bin.back();
            o_bin[o_bin.size() - 2] += o_bin.back();
            e_bin.pop_back();
            o_bin.pop_back();
        }
        int bins = static_cast<int>(e_bin.size());
        for (int k = 0; k < bins; ++k)
            if (e_bin[k] > 0)
                chi2 += (o_bin[k] - e_bin[k]) * (o_bin[k] - e_bin[k]) / e_bin[k];
        dof += bins - 1;
    }
    rep.chi2 = chi2;
    rep.dof = dof;
    if (dof > 0) {
        boost::math::chi_squared dist(dof);
        rep.p_value = boost::math::cdf(boost::math::complement(dist, chi2));
    }
    return rep;
}

double tv_distance(const std::vector<double>& a, const std::vector<double>& b)
{
    std::size_t n = std::max(a.size(), b.size());
    double s = 0;
    for (std::size_t k = 1; k < n; ++k) {
        double x = k < a.size() ? a[k] : 0.0;
        double y = k < b.size() ? b[k] : 0.0;
        s += std::abs(x - y);
    }
    return s / 2;
}

void to_json(nlohmann::json& j, const RowDrift& r)
{
    j = nlohmann::json{{"row", r.row}, {"count", r.count}, {"mean", r.mean}, {"stderr", r.stderr_}};
}

void from_json(const nlohmann::json& j, RowDrift& r)
{
    r.row = j.at("row").get<int>();
    r.count = j.at("count").get<std::int64_t>();
    r.mean = j.at("mean").get<double>();
    r.stderr_ = j.at("stderr").get<double>();
}

void to_json(nlohmann::json& j, const WalkRunReport& r)
{
    j = nlohmann::json{{"lambda", r.lambda},
                       {"n_walkers", r.n_walkers},
                       {"n_steps", r.n_steps},
                       {"seed", r.seed},
                       {"threshold", r.threshold},
                       {"state_cap", r.state_cap},
                       {"escape_fraction", r.escape_fraction},
                       {"frozen_fraction", r.frozen_fraction},
                       {"occupation", r.occupation},
                       {"drift", r.drift},
                       {"drift_stderr", r.drift_stderr},
                       {"drift_expected", r.drift_expected},
                       {"rows", r.rows},
                       {"tv_distance", r.tv_distance ? nlohmann::json(*r.tv_distance) : nlohmann::json(nullptr)}};
}

void from_json(const nlohmann::json& j, WalkRunReport& r)
{
    r.lambda = j.at("lambda").get<double>();
    r.n_walkers = j.at("n_walkers").get<std::int64_t>();
    r.n_steps = j.at("n_steps").get<std::int64_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.threshold = j.at("threshold").get<int>();
    r.state_cap = j.at("state_cap").get<int>();
    r.escape_fraction = j.at("escape_fraction").get<double>();
    r.frozen_fraction = j.at("frozen_fraction").get<double>();
    r.occupation = j.at("occupation").get<std::vector<double>>();
    r.drift = j.at("drift").get<double>();
    r.drift_stderr = j.at("drift_stderr").get<double>();
    r.drift_expected = j.at("drift_expected").get<double>();
    r.rows = j.at("rows").get<std::vector<RowDrift>>();
    const auto& tv = j.at("tv_distance");
    r.tv_distance = tv.is_null() ? std::nullopt : std::optional<double>(tv.get<double>());
}

void to_json(nlohmann::json& j, const OrbitEnsembleReport& r)
{
    j = nlohmann::json{{"lambda", r.lambda},
                       {"n_orbits", r.n_orbits},
                       {"n_returns", r.n_returns},
                       {"seed", r.seed},
                       {"depth_exceeded_fraction", r.depth_exceeded_fraction},
                       {"boundary_fraction", r.boundary_fraction},
                       {"frequency", r.frequency},
                       {"transitions", r.transitions},
                       {"chi2", r.chi2},
                       {"dof", r.dof},
                       {"p_value", r.p_value}};
}

void from_json(const nlohmann::json& j, OrbitEnsembleReport& r)
{
    r.lambda = j.at("lambda").get<double>();
    r.n_orbits = j.at("n_orbits").get<std::int64_t>();
    r.n_returns = j.at("n_returns").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.depth_exceeded_fraction = j.at("depth_exceeded_fraction").get<double>();
    r.boundary_fraction = j.at("boundary_fraction").get<double>();
    r.frequency = j.at("frequency").get<std::vector<double>>();
    r.transitions = j.at("transitions").get<std::int64_t>();
    r.chi2 = j.at("chi2").get<double>();
    r.dof = j.at("dof").get<int>();
    r.p_value = j.at("p_value").get<double>();
}

} // namespace fibwild
