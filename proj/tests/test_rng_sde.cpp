#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "hetlab/gaussian.hpp"
#include "hetlab/kernel.hpp"
#include "hetlab/rng.hpp"
#include "hetlab/sde.hpp"

using namespace hetlab;

namespace {

struct Moments {
    double mean = 0.0, var = 0.0, se_mean = 0.0, se_var = 0.0;
};

Moments moments(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    Moments m;
    for (double x : xs) m.mean += x;
    m.mean /= n;
    double m2 = 0.0, m4 = 0.0;
    for (double x : xs) {
        const double d = x - m.mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m4 /= n;
    m.var = m2 * n / (n - 1.0);
    m.se_mean = std::sqrt(m2 / n);
    m.se_var = std::sqrt(std::max(m4 - m2 * m2, 0.0) / n);
    return m;
}

}  // namespace

TEST_CASE("philox streams") {
    SECTION("deterministic per (seed, stream)") {
        RngStream a(42, 7), b(42, 7);
        for (int i = 0; i < 100; ++i) REQUIRE(a.bits64() == b.bits64());
        RngStream c(42, 7), d(42, 7);
        for (int i = 0; i < 100; ++i) REQUIRE(c.normal() == d.normal());
    }
    SECTION("distinct streams and seeds decorrelate") {
        RngStream a(42, 7), b(42, 8), c(43, 7);
        int same_ab = 0, same_ac = 0;
        for (int i = 0; i < 64; ++i) {
            const auto va = a.bits64();
            if (va == b.bits64()) ++same_ab;
            if (va == c.bits64()) ++same_ac;
        }
        CHECK(same_ab == 0);
        CHECK(same_ac == 0);
    }
    SECTION("uniform and normal moments") {
        RngStream rng(2024, 0);
        const int n = 200000;
        double su = 0.0, sn = 0.0, sn2 = 0.0;
        for (int i = 0; i < n; ++i) {
            su += rng.uniform01();
            const double z = rng.normal();
            sn += z;
            sn2 += z * z;
        }
        CHECK(std::abs(su / n - 0.5) < 0.002);
        CHECK(std::abs(sn / n) < 0.01);
        CHECK(std::abs(sn2 / n - 1.0) < 0.01);
    }
}

TEST_CASE("exact linear step") {
    const SaddleBox box{1.0, 0.5, 1.0};
    SECTION("zero noise reduces to the flow") {
        LinearSaddleSde sde{{1.3, 0.7}, box, 0.0};
        RngStream rng(1, 0);
        Vec2 p{0.2, 0.4};
        step_linear_exact(sde, p, 0.25, rng);
        CHECK(p.x1 == Catch::Approx(0.2 * std::exp(1.3 * 0.25)).epsilon(1e-14));
        CHECK(p.x2 == Catch::Approx(0.4 * std::exp(-0.7 * 0.25)).epsilon(1e-14));
    }
    SECTION("one-step variance at dt = ln 2 equals 1.5 eps^2") {
        // lambda = 1: Var X1' = eps^2 (e^{2 dt} - 1)/2 = 1.5 eps^2 at dt = ln 2
        const double eps = 0.3;
        LinearSaddleSde sde{{1.0, 0.5}, box, eps};
        ExactStepper st(sde, std::log(2.0));
        RngStream rng(77, 0);
        const int n = 1000000;
        std::vector<double> xs(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            Vec2 p{0.0, 0.0};
            st.step(p, rng);
            xs[static_cast<size_t>(i)] = p.x1;
        }
        auto m = moments(xs);
        CHECK(std::abs(m.var - 1.5 * eps * eps) / (1.5 * eps * eps) < 0.01);
    }
    SECTION("small dt matches Euler-Maruyama moments to O(dt^2)") {
        const double dt = 1e-3, lam = 1.2, mu = 0.8;
        LinearSaddleSde sde{{lam, mu}, box, 1.0};
        ExactStepper st(sde, dt);
        // exact one-step mean factor vs Euler's (1 + lam dt)
        CHECK(std::exp(lam * dt) == Catch::Approx(1.0 + lam * dt).margin(3.0 * dt * dt));
        CHECK(std::exp(-mu * dt) == Catch::Approx(1.0 - mu * dt).margin(3.0 * dt * dt));
        // exact one-step variances vs Euler's dt
        const double v1 = (std::exp(2.0 * lam * dt) - 1.0) / (2.0 * lam);
        const double v2 = (1.0 - std::exp(-2.0 * mu * dt)) / (2.0 * mu);
        CHECK(v1 == Catch::Approx(dt).margin(3.0 * dt * dt));
        CHECK(v2 == Catch::Approx(dt).margin(3.0 * dt * dt));
    }
    SECTION("constant sigma composes linearly") {
        LinearSaddleSde sde{{1.0, 1.0}, box, 0.5};
        sde.sigma = {2.0, 0.0, 0.0, 3.0};
        ExactStepper st(sde, 0.1);
        RngStream rng(5, 0);
        const int n = 400000;
        std::vector<double> x1(static_cast<size_t>(n)), x2(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            Vec2 p{0.0, 0.0};
            st.step(p, rng);
            x1[static_cast<size_t>(i)] = p.x1;
            x2[static_cast<size_t>(i)] = p.x2;
        }
        const double v1 = 4.0 * 0.25 * (std::exp(0.2) - 1.0) / 2.0;
        const double v2 = 9.0 * 0.25 * (1.0 - std::exp(-0.2)) / 2.0;
        CHECK(std::abs(moments(x1).var - v1) / v1 < 0.015);
        CHECK(std::abs(moments(x2).var - v2) / v2 < 0.015);
    }
}

TEST_CASE("euler step") {
    SECTION("pure gaussian when the drift vanishes") {
        GeneralSde sde;
        sde.drift = [](double, double, double& b1, double& b2) { b1 = b2 = 0.0; };
        sde.diffusion = [](double, double, std::array<double, 4>& s) {
            s = {1.0, 0.0, 0.0, 1.0};
        };
        sde.epsilon = 0.7;
        RngStream rng(3, 0);
        const int n = 200000;
        std::vector<double> xs(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            Vec2 p{0.0, 0.0};
            step_euler(sde, p, 1.0, rng);
            xs[static_cast<size_t>(i)] = p.x1;
        }
        auto m = moments(xs);
        CHECK(std::abs(m.var - 0.49) / 0.49 < 0.015);
    }
    SECTION("zero noise is forward Euler") {
        GeneralSde sde;
        sde.drift = [](double x1, double x2, double& b1, double& b2) {
            b1 = -x2;
            b2 = x1;
        };
        sde.diffusion = [](double, double, std::array<double, 4>& s) {
            s = {1.0, 0.0, 0.0, 1.0};
        };
        sde.epsilon = 0.0;
        RngStream rng(3, 0);
        Vec2 p{1.0, 0.0};
        step_euler(sde, p, 0.01, rng);
        CHECK(p.x1 == Catch::Approx(1.0).epsilon(1e-12));
        CHECK(p.x2 == Catch::Approx(0.01).epsilon(1e-12));
    }
    SECTION("linear drift: path mean matches the matrix exponential") {
        // dX = A X dt + eps dW with A = diag(0.5, -1): mean after t = 1 from x0
        GeneralSde sde;
        sde.drift = [](double x1, double x2, double& b1, double& b2) {
            b1 = 0.5 * x1;
            b2 = -x2;
        };
        sde.diffusion = [](double, double, std::array<double, 4>& s) {
            s = {1.0, 0.0, 0.0, 1.0};
        };
        sde.epsilon = 0.2;
        const double dt = 1e-3;
        const int n = 10000;
        std::vector<double> x1s(static_cast<size_t>(n)), x2s(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            RngStream rng(9, static_cast<std::uint64_t>(i));
            Vec2 p{0.4, 0.8};
            for (int k = 0; k < 1000; ++k) step_euler(sde, p, dt, rng);
            x1s[static_cast<size_t>(i)] = p.x1;
            x2s[static_cast<size_t>(i)] = p.x2;
        }
        auto m1 = moments(x1s);
        auto m2 = moments(x2s);
        CHECK(std::abs(m1.mean - 0.4 * std::exp(0.5)) < 3.0 * m1.se_mean + 1e-3);
        CHECK(std::abs(m2.mean - 0.8 * std::exp(-1.0)) < 3.0 * m2.se_mean + 1e-3);
    }
}

TEST_CASE("exit simulation") {
    const SaddleBox box{1.0, 0.5, 1.0};
    SECTION("deterministic exit on the unstable axis") {
        LinearSaddleSde sde{{2.0, 1.0}, box, 0.0};
        RngStream rng(1, 1);
        auto exit = simulate_exit(sde, Vec2{0.25, 0.0}, 100.0, 1e-4, rng);
        REQUIRE(exit);
        CHECK(exit->side == ExitSide::Right);
        CHECK(exit->location == Catch::Approx(0.0).margin(1e-12));
        CHECK(exit->time == Catch::Approx(std::log(1.0 / 0.25) / 2.0).margin(1e-3));
    }
    SECTION("timeout surfaces as nullopt") {
        LinearSaddleSde sde{{1.0, 1.0}, box, 1e-4};
        RngStream rng(1, 2);
        CHECK_FALSE(simulate_exit(sde, Vec2{0.0, 0.1}, 0.5, 1e-3, rng).has_value());
    }
    SECTION("initial point must be interior") {
        LinearSaddleSde sde{{1.0, 1.0}, box, 0.1};
        RngStream rng(1, 3);
        CHECK_THROWS_AS(simulate_exit(sde, Vec2{2.0, 0.0}, 1.0, 1e-3, rng), DomainError);
    }
    SECTION("exit side frequency matches psi_{c1}(-x) at x = 1") {
        const double eps = 1e-3;
        LinearSaddleSde sde{{1.0, 0.5}, box, eps};
        const int n = 20000;
        int lefts = 0;
        for (int i = 0; i < n; ++i) {
            RngStream rng(31415, static_cast<std::uint64_t>(i));
            auto exit = simulate_exit(sde, Vec2{eps * 1.0, box.L}, 200.0, 1e-3, rng);
            REQUIRE(exit);
            if (exit->side == ExitSide::Left) ++lefts;
        }
        const double p = exit_direction_prob(1.0, 0.5);  // 0.0786...
        const double freq = static_cast<double>(lefts) / n;
        const double se = std::sqrt(p * (1.0 - p) / n);
        CHECK(std::abs(freq - p) < 3.5 * se);
    }
    SECTION("mean exit time near (alpha/lambda) log(1/eps)") {
        const double eps = 1e-3;
        LinearSaddleSde sde{{1.0, 0.5}, box, eps};
        const int n = 3000;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            RngStream rng(2718, static_cast<std::uint64_t>(i));
            auto exit = simulate_exit(sde, Vec2{eps, box.L}, 400.0, 1e-3, rng);
            REQUIRE(exit);
            acc += exit->time;
        }
        const double ratio = acc / n / std::log(1.0 / eps);
        CHECK(ratio > 0.9);
        CHECK(ratio < 1.1);
    }
    SECTION("exit location stays on the recorded face") {
        LinearSaddleSde sde{{1.0, 0.5}, box, 0.2};
        const double dt = 1e-3;
        for (int i = 0; i < 1000; ++i) {
            RngStream rng(99, static_cast<std::uint64_t>(i));
            auto exit = simulate_exit(sde, Vec2{0.0, box.L}, 500.0, dt, rng);
            REQUIRE(exit);
            const double slack = 2.0 * 1.0 * dt + 6.0 * 0.2 * std::sqrt(dt);
            if (exit->side == ExitSide::Left || exit->side == ExitSide::Right)
                REQUIRE(std::abs(exit->location) <= box.L_prime + slack);
            else
                REQUIRE(std::abs(exit->location) <= box.R + slack);
        }
    }
}

TEST_CASE("exact vs euler backend consistency") {
    // linear saddle via both backends: exit time and location moments agree
    const SaddleBox box{1.0, 0.5, 1.0};
    const double eps = 0.1, lam = 1.0, mu = 0.5;
    const int n = 10000;
    std::vector<double> t_ex, l_ex, t_eu, l_eu;
    LinearSaddleSde lin{{lam, mu}, box, eps};
    GeneralSde gen;
    gen.drift = [&](double x1, double x2, double& b1, double& b2) {
        b1 = lam * x1;
        b2 = -mu * x2;
    };
    gen.diffusion = [](double, double, std::array<double, 4>& s) {
        s = {1.0, 0.0, 0.0, 1.0};
    };
    gen.epsilon = eps;
    gen.domain = rect_of(box);
    for (int i = 0; i < n; ++i) {
        RngStream r1(111, static_cast<std::uint64_t>(i));
        auto e1 = simulate_exit(lin, Vec2{0.0, box.L}, 400.0, 1e-2, r1);
        REQUIRE(e1);
        t_ex.push_back(e1->time);
        l_ex.push_back(e1->location);
        RngStream r2(222, static_cast<std::uint64_t>(i));
        auto e2 = simulate_exit(gen, Vec2{0.0, box.L}, 400.0, 1e-4, r2);
        REQUIRE(e2);
        t_eu.push_back(e2->time);
        l_eu.push_back(e2->location);
    }
    auto mt1 = moments(t_ex), mt2 = moments(t_eu);
    auto ml1 = moments(l_ex), ml2 = moments(l_eu);
    CHECK(std::abs(mt1.mean - mt2.mean) < 3.0 * std::hypot(mt1.se_mean, mt2.se_mean));
    CHECK(std::abs(mt1.var - mt2.var) < 3.0 * std::hypot(mt1.se_var, mt2.se_var));
    CHECK(std::abs(ml1.mean - ml2.mean) < 3.0 * std::hypot(ml1.se_mean, ml2.se_mean));
    CHECK(std::abs(ml1.var - ml2.var) < 3.0 * std::hypot(ml1.se_var, ml2.se_var));
}

TEST_CASE("transport map") {
    SECTION("identity passes the rescaled coordinate through") {
        RngStream rng(4, 4);
        ExitRecord exit{ExitSide::Right, 0.02, 3.0, 100};
        const double xi = apply_transport(TransportMap::identity(), exit, 0.5, 0.01, rng);
        CHECK(xi == Catch::Approx(0.02 / std::sqrt(0.01)).epsilon(1e-14));
    }
    SECTION("alpha = 1 pure kick") {
        TransportMap map{1.0, 2.0, +1, 1.0};
        ExitRecord exit{ExitSide::Right, 0.0, 3.0, 100};
        RngStream rng(8, 8);
        const int n = 100000;
        std::vector<double> xs(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i)
            xs[static_cast<size_t>(i)] = apply_transport(map, exit, 1.0, 0.05, rng);
        auto m = moments(xs);
        CHECK(std::abs(m.mean) < 0.02);
        CHECK(std::abs(m.var - 4.0) / 4.0 < 0.02);
    }
    SECTION("kick vanishes as eps -> 0 for alpha < 1 (KS against a xi)") {
        // xi ~ U(1,2): compare samples of xi' with the cdf of a*xi
        const TransportMap map{1.3, 1.0, +1, 1.0};
        const double eps = 1e-6, alpha = 0.5;
        RngStream rng(12, 0);
        const int n = 100000;
        std::vector<double> xs(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            const double xi = 1.0 + rng.uniform01();
            ExitRecord exit{ExitSide::Right, std::pow(eps, alpha) * xi, 1.0, 10};
            xs[static_cast<size_t>(i)] = apply_transport(map, exit, alpha, eps, rng);
        }
        std::sort(xs.begin(), xs.end());
        auto cdf = [&](double v) { return std::clamp((v / 1.3 - 1.0), 0.0, 1.0); };
        double ks = 0.0;
        for (size_t i = 0; i < xs.size(); ++i) {
            const double f = cdf(xs[i]);
            ks = std::max(ks, std::max(std::abs((i + 1.0) / n - f), std::abs(i / static_cast<double>(n) - f)));
        }
        CHECK(ks < 0.02);
    }
    SECTION("flip changes the side") {
        TransportMap map{1.0, 0.0, -1, 0.0};
        ExitRecord exit{ExitSide::Right, 0.5, 1.0, 10};
        RngStream rng(4, 5);
        CHECK(apply_transport(map, exit, 1.0, 0.1, rng) < 0.0);
    }
    SECTION("non-outgoing faces are geometry errors") {
        RngStream rng(4, 6);
        ExitRecord top{ExitSide::Top, 0.5, 1.0, 10};
        CHECK_THROWS_AS(apply_transport(TransportMap{}, top, 1.0, 0.1, rng), GeometryError);
    }
}

TEST_CASE("chain simulation") {
    EscapeChainSpec two;
    two.alpha0 = 1.0;
    two.saddles = {{1.0, 0.5}, {1.0, 1.0}};
    two.wrong_turn = true;

    SECTION("zero noise never escapes") {
        ChainConfig cfg;
        cfg.spec = two;
        cfg.epsilon = 1e-12;  // effectively deterministic at the coin
        cfg.xi0 = XiLaw::constant(1.0);
        ChainSimulator sim(cfg);
        RngStream rng(1, 0);
        auto out = sim.run(rng);
        CHECK_FALSE(out.escaped);
    }
    SECTION("single saddle symmetric entrance escapes half the time") {
        EscapeChainSpec one;
        one.alpha0 = 1.0;
        one.saddles = {{1.0, 1.0}};
        one.wrong_turn = true;
        ChainConfig cfg;
        cfg.spec = one;
        cfg.epsilon = 0.05;
        cfg.maps = {TransportMap::identity()};
        cfg.xi0 = XiLaw::gaussian(0.0, 1.0);  // any symmetric entrance law works
        ChainSimulator sim(cfg);
        const int n = 20000;
        int hits = 0;
        for (int i = 0; i < n; ++i) {
            RngStream rng(555, static_cast<std::uint64_t>(i));
            if (sim.run(rng).escaped) ++hits;
        }
        const double freq = static_cast<double>(hits) / n;
        CHECK(std::abs(freq - 0.5) < 3.5 * std::sqrt(0.25 / n));
    }
    SECTION("bit-identical outcomes for identical configuration") {
        ChainConfig cfg;
        cfg.spec = two;
        cfg.epsilon = 0.1;
        cfg.maps = {TransportMap::identity(), TransportMap::identity()};
        ChainSimulator sim1(cfg), sim2(cfg);
        for (int i = 0; i < 200; ++i) {
            RngStream r1(77, static_cast<std::uint64_t>(i)), r2(77, static_cast<std::uint64_t>(i));
            auto o1 = sim1.run(r1);
            auto o2 = sim2.run(r2);
            REQUIRE(o1.escaped == o2.escaped);
            REQUIRE(o1.total_time == o2.total_time);
            REQUIRE(o1.exits.size() == o2.exits.size());
            for (size_t k = 0; k < o1.exits.size(); ++k) {
                REQUIRE(o1.exits[k].time == o2.exits[k].time);
                REQUIRE(o1.exits[k].location == o2.exits[k].location);
            }
        }
    }
    SECTION("one-sidedness: negative-side exits are rare at alpha < 1") {
        // alpha = 0.5, rho = 0.5, order-one positive entrance
        EscapeChainSpec one;
        one.alpha0 = 0.5;
        one.saddles = {{1.0, 0.5}};
        one.wrong_turn = false;  // following the + branch is the tracked event
        ChainConfig cfg;
        cfg.spec = one;
        cfg.epsilon = 1e-3;
        cfg.maps = {TransportMap::identity()};
        cfg.xi0 = XiLaw::constant(1.0);
        ChainSimulator sim(cfg);
        const int n = 10000;
        int wrong_side = 0;
        const double l_eps = std::log(1e3);
        for (int i = 0; i < n; ++i) {
            RngStream rng(808, static_cast<std::uint64_t>(i));
            auto out = sim.run(rng);
            REQUIRE_FALSE(out.timeout);
            REQUIRE(out.exits.size() == 1);
            // rescaled exit below 1/l_eps counts as a failure of one-sidedness
            const double xi_prime = out.exits[0].location / std::pow(cfg.epsilon, 0.25);
            if (!out.escaped || xi_prime <= 1.0 / l_eps) ++wrong_side;
        }
        CHECK(static_cast<double>(wrong_side) / n < 1e-3);
    }
    SECTION("transport maps size validated") {
        ChainConfig cfg;
        cfg.spec = two;
        cfg.maps = {TransportMap::identity()};
        CHECK_THROWS_AS(ChainSimulator(cfg), ValidationError);
    }
}
