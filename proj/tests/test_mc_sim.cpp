#include "doctest.h"

#include "fibwild/errors.hpp"
#include "fibwild/mc_sim.hpp"
#include "fibwild/walk.hpp"

#include <cmath>

using namespace fibwild;

TEST_CASE("SplitMix64 reference outputs")
{
    SplitMix64 g(0);
    CHECK(g.next() == 0xE220A8397B1DCDAFULL);
    CHECK(g.next() == 0x6E789E6AA1B965F4ULL);
    CHECK(g.next() == 0x06C45D188009454FULL);
    SplitMix64 u(42);
    for (int i = 0; i < 1000; ++i) {
        double x = u.uniform();
        CHECK((x > 0 && x < 1));
    }
    CHECK(substream_seed(7, 0) != substream_seed(7, 1));
    CHECK(substream_seed(7, 3) == substream_seed(7, 3));
}

TEST_CASE("geometric sampling by inverse CDF")
{
    double lambda = 0.6;
    SplitMix64 g(3);
    const int n = 400000;
    double sum = 0;
    int zeros = 0;
    for (int i = 0; i < n; ++i) {
        auto k = sample_geometric(g.uniform(), std::log(lambda));
        REQUIRE(k >= 0);
        sum += double(k);
        zeros += k == 0;
    }
    double mean = lambda / (1 - lambda);
    double sd = std::sqrt(lambda) / (1 - lambda);
    CHECK(std::abs(sum / n - mean) < 4 * sd / std::sqrt(n));
    CHECK(std::abs(double(zeros) / n - (1 - lambda)) < 4 * std::sqrt(0.24 / n));
    CHECK(sample_geometric(0.7, std::log(lambda)) == 0);
    CHECK(sample_geometric(0.5, std::log(lambda)) == 1);
}

TEST_CASE("walk reports are reproducible and thread independent")
{
    WalkConfig cfg;
    cfg.lambda = 0.45;
    cfg.n_walkers = 600;
    cfg.n_steps = 500;
    cfg.seed = 11;
    cfg.n_threads = 1;
    auto a = simulate_walk(cfg);
    cfg.n_threads = 3;
    auto b = simulate_walk(cfg);
    CHECK(a == b);
    cfg.seed = 12;
    CHECK_FALSE(simulate_walk(cfg) == a);

    double s = 0;
    for (double x : a.occupation)
        s += x;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(a.escape_fraction >= 0);
    CHECK(a.escape_fraction <= 1);
}

TEST_CASE("walk drift matches the formula")
{
    for (double lambda : {0.4, 0.5, 0.6}) {
        CAPTURE(lambda);
        WalkConfig cfg;
        cfg.lambda = lambda;
        cfg.n_walkers = 2000;
        cfg.n_steps = 2000;
        cfg.seed = 5;
        auto r = simulate_walk(cfg);
        CHECK(std::abs(r.drift - drift(lambda)) < 3 * r.drift_stderr);
        CHECK(rows_outside(r) <= 2);
        CHECK(r.rows.size() > 10);
    }
}

TEST_CASE("walk occupation approaches the stationary vector below 1/2")
{
    WalkConfig cfg;
    cfg.lambda = 0.4;
    cfg.n_walkers = 1000;
    cfg.n_steps = 20000;
    cfg.seed = 9;
    auto r = simulate_walk(cfg);
    REQUIRE(r.tv_distance.has_value());
    CHECK(*r.tv_distance < 0.02);
    CHECK(r.escape_fraction < 0.01);

    cfg.lambda = 0.6;
    CHECK_FALSE(simulate_walk(cfg).tv_distance.has_value());
}

TEST_CASE("escape above 1/2 and monotone in lambda")
{
    WalkConfig cfg;
    cfg.n_walkers = 2000;
    cfg.n_steps = 300;
    cfg.seed = 21;
    cfg.threshold = 50;
    double prev = -1;
    for (double lambda : {0.55, 0.6, 0.7}) {
        cfg.lambda = lambda;
        auto r = simulate_walk(cfg);
        CHECK(r.escape_fraction >= prev);
        prev = r.escape_fraction;
    }
    CHECK(prev > 0.99);

    cfg.lambda = 0.9;
    cfg.state_cap = 100;
    auto f = simulate_walk(cfg);
    CHECK(f.frozen_fraction > 0.99);
    CHECK(f.escape_fraction >= f.frozen_fraction);
    CHECK(f.occupation[0] > 0.5);
}

TEST_CASE("orbit branches")
{
    auto map = fibonacci_family<double>(0.3, 80);
    // a point of W_1 maps onto the whole domain, so the next index can be any state >= 1
    double x = (map.z[0] + map.z[1]) / 2;
    auto run = simulate_orbit(map, x, 2);
    REQUIRE(run.branches.size() == 2);
    CHECK(run.branches[0] == 1);
    CHECK(run.branches[1] >= 1);
    CHECK_THROWS_AS(simulate_orbit(map, 0.01, 5), OutsideDomain);

    // agrees with eval_F_linear while the double iterate resolves the branches
    SplitMix64 g(4);
    for (int i = 0; i < 200; ++i) {
        double x0 = map.z[0] + (map.zhat(0) - map.z[0]) * g.uniform();
        auto r = simulate_orbit(map, x0, 6);
        double y = x0;
        for (std::size_t n = 0; n < r.branches.size(); ++n) {
            auto [fy, info] = eval_F_linear(map, y);
            CHECK(info.j == r.branches[n]);
            y = fy;
        }
    }
}

TEST_CASE("orbit transition frequencies follow the matrix rows")
{
    auto map = fibonacci_family<double>(0.3, 80);
    auto rep = sample_orbits(map, 1000, 200, 17);
    CHECK(rep.transitions > 150000);
    CHECK(rep.dof > 10);
    CHECK(rep.p_value > 0.01);
    CHECK(rep.depth_exceeded_fraction < 0.01);

    // chain occupation against orbit branch frequencies
    WalkConfig cfg;
    cfg.lambda = 0.3;
    cfg.n_walkers = 1000;
    cfg.n_steps = 200;
    cfg.seed = 17;
    auto walk = simulate_walk(cfg);
    std::vector<double> occ(walk.occupation);
    occ[0] = 0;
    CHECK(tv_distance(occ, rep.frequency) < 0.03);

    auto again = sample_orbits(map, 1000, 200, 17, 40, 2);
    CHECK(again == rep);
}

TEST_CASE("orbits escape toward c above 1/2")
{
    auto map = fibonacci_family<double>(0.6, 80);
    auto shortr = sample_orbits(map, 400, 40, 3);
    auto longr = sample_orbits(map, 400, 400, 3);
    CHECK(longr.depth_exceeded_fraction > shortr.depth_exceeded_fraction);
    CHECK(longr.depth_exceeded_fraction > 0.9);
}

TEST_CASE("json round trips")
{
    WalkConfig cfg;
    cfg.lambda = 0.4;
    cfg.n_walkers = 50;
    cfg.n_steps = 50;
    cfg.state_cap = 200;
    auto r = simulate_walk(cfg);
    nlohmann::json j = r;
    auto back = nlohmann::json::parse(j.dump()).get<WalkRunReport>();
    CHECK(back == r);

    cfg.lambda = 0.6;
    auto r2 = simulate_walk(cfg);
    CHECK(nlohmann::json(r2).get<WalkRunReport>() == r2);

    auto map = fibonacci_family<double>(0.3, 60);
    auto o = sample_orbits(map, 20, 20, 1);
    CHECK(nlohmann::json::parse(nlohmann::json(o).dump()).get<OrbitEnsembleReport>() == o);
}
