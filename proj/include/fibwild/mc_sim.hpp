#pragma once

/** @file mc_sim.hpp
 *  @brief Monte Carlo runs of the branch-index random walk and sampled orbits of the induced map.
 */

#include "fibwild/plmap.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace fibwild {

/** SplitMix64 (Steele, Lea, Flood 2014): state += 0x9E3779B97F4A7C15, output mixed by
 *  xor-shift-multiply with 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB.
 */
struct SplitMix64 {
    std::uint64_t state = 0;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}
    std::uint64_t next();
    /// Uniform on the open interval (0,1) with 53-bit resolution.
    double uniform();
};

/// Seed of substream `index` derived from the master seed; independent of scheduling.
std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index);

/// Geometric variate on {0,1,...} with P(G >= g) = lambda^g by inverse CDF; log_lambda = log(lambda).
std::int64_t sample_geometric(double u, double log_lambda);

struct WalkConfig {
    double lambda = 0.5;
    std::int64_t n_walkers = 10000;
    std::int64_t n_steps = 10000;
    std::uint64_t seed = 1;
    int threshold = 50;
    int state_cap = 10000;  ///< walkers above this state are frozen and count as escaped
    int n_threads = 0;      ///< 0: hardware concurrency
    int drift_rows = 64;    ///< rows 2..drift_rows get individual drift statistics
};

struct RowDrift {
    int row = 0;
    std::int64_t count = 0;
    double mean = 0;
    double stderr_ = 0;

    bool operator==(const RowDrift&) const = default;
};

struct WalkRunReport {
    double lambda = 0;
    std::int64_t n_walkers = 0, n_steps = 0;
    std::uint64_t seed = 0;
    int threshold = 0;
    int state_cap = 0;
    double escape_fraction = 0;      ///< final state >= threshold, frozen walkers included
    double frozen_fraction = 0;
    std::vector<double> occupation; ///< occupation[k], k = 1..state_cap; occupation[0] holds the frozen mass
    double drift = 0;                ///< mean increment over transitions from rows k >= 2
    double drift_stderr = 0;
    double drift_expected = 0;       ///< (2 lambda - 1)/(1 - lambda)
    std::vector<RowDrift> rows;
    std::optional<double> tv_distance; ///< to the closed-form stationary vector, lambda < 1/2 only

    bool operator==(const WalkRunReport&) const = default;
};

/** Walkers start in state 1 and jump i -> Q(i)+1+G with Q(i) = max(i-2,0) and G geometric.
 *  The report is bit-identical for a given config regardless of n_threads.
 */
WalkRunReport simulate_walk(const WalkConfig& cfg);

/// Number of rows k >= 2 whose empirical drift lies outside mean +- z stderr.
int rows_outside(const WalkRunReport& r, double z = 3.0);

enum class OrbitEnd { Completed, DepthExceeded, BoundaryHit };

const char* to_string(OrbitEnd e);

struct OrbitRun {
    double x0 = 0;
    std::vector<int> branches; ///< phi_1, phi_2, ... up to the first failure
    OrbitEnd end = OrbitEnd::Completed;
};

/** Iterates F n_returns times from x0 and records the branch index of each point. The orbit is carried
 *  as the distance to c, F(W_j) acting as d -> s_j (c - z_{j-1} - d); ends with DepthExceeded past branch N.
 */
OrbitRun simulate_orbit(const PLMap& map, double x0, int n_returns);

struct OrbitEnsembleReport {
    double lambda = 0;
    std::int64_t n_orbits = 0;
    int n_returns = 0;
    std::uint64_t seed = 0;
    double depth_exceeded_fraction = 0;
    double boundary_fraction = 0;
    std::vector<double> frequency;   ///< branch frequencies over all recorded indices, k = 1..K
    std::int64_t transitions = 0;
    double chi2 = 0;                 ///< transition counts against rows of A, pooled
    int dof = 0;
    double p_value = 1;

    bool operator==(const OrbitEnsembleReport&) const = default;
};

/** Orbits from x0 uniform on (z_0, 1 - z_0), substream per orbit. Transition counts out of rows
 *  1..K are compared with the Fibonacci matrix rows (tail bins merged to expected count >= 5).
 */
OrbitEnsembleReport sample_orbits(const PLMap& map, std::int64_t n_orbits, int n_returns, std::uint64_t seed,
                                  int K = 40, int n_threads = 0);

/// Total variation distance between two distributions indexed 1..; missing entries count as 0.
double tv_distance(const std::vector<double>& a, const std::vector<double>& b);

void to_json(nlohmann::json& j, const RowDrift& r);
void from_json(const nlohmann::json& j, RowDrift& r);
void to_json(nlohmann::json& j, const WalkRunReport& r);
void from_json(const nlohmann::json& j, WalkRunReport& r);
void to_json(nlohmann::json& j, const OrbitEnsembleReport& r);
void from_json(const nlohmann::json& j, OrbitEnsembleReport& r);

} // namespace fibwild
