#pragma once

// Path simulation near rectified saddles: exact Gaussian stepping for the
// linear saddle, Euler-Maruyama for general planar fields, rectangular exit
// detection with linear interpolation of the crossing, inter-saddle transport
// maps, and whole-chain composition.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hetlab/errors.hpp"
#include "hetlab/exponents.hpp"
#include "hetlab/rng.hpp"
#include "hetlab/saddle.hpp"

namespace hetlab {

struct Vec2 {
    double x1 = 0.0;
    double x2 = 0.0;
};

enum class ExitSide { Left, Right, Top, Bottom };

inline const char* exit_side_name(ExitSide s) {
    switch (s) {
        case ExitSide::Left: return "left";
        case ExitSide::Right: return "right";
        case ExitSide::Top: return "top";
        case ExitSide::Bottom: return "bottom";
    }
    return "?";
}

struct ExitRecord {
    ExitSide side = ExitSide::Right;
    double location = 0.0;  // transverse coordinate at the crossing
    double time = 0.0;
    std::uint64_t steps = 0;
};

struct Rect {
    double x1_min, x1_max, x2_min, x2_max;
    bool contains(const Vec2& p) const {
        return p.x1 > x1_min && p.x1 < x1_max && p.x2 > x2_min && p.x2 < x2_max;
    }
};

inline Rect rect_of(const SaddleBox& b) { return {-b.R, b.R, -b.L_prime, b.L_prime}; }

struct LinearSaddleSde {
    Saddle saddle;
    SaddleBox box;
    double epsilon = 0.1;
    std::array<double, 4> sigma = {1.0, 0.0, 0.0, 1.0};  // row-major 2x2
};

// Exact one-step transition sampler for the linear saddle SDE. The transition
// over dt is Gaussian with mean (e^{lambda dt} x1, e^{-mu dt} x2) and
// covariance eps^2 * C(dt); C depends on sigma and is Cholesky-factored once.
class ExactStepper {
  public:
    ExactStepper(const LinearSaddleSde& sde, double dt)
        : eps_(sde.epsilon), dt_(dt) {
        const double lam = sde.saddle.lambda, mu = sde.saddle.mu;
        e_lam_ = std::exp(lam * dt);
        e_mu_ = std::exp(-mu * dt);
        const auto& s = sde.sigma;
        const double a11 = s[0] * s[0] + s[1] * s[1];
        const double a22 = s[2] * s[2] + s[3] * s[3];
        const double a12 = s[0] * s[2] + s[1] * s[3];
        const double c11 = a11 * (std::exp(2.0 * lam * dt) - 1.0) / (2.0 * lam);
        const double c22 = a22 * (1.0 - std::exp(-2.0 * mu * dt)) / (2.0 * mu);
        const double d = lam - mu;
        const double cross =
            std::abs(d) > 1e-12 ? (std::exp(d * dt) - 1.0) / d : dt * (1.0 + 0.5 * d * dt);
        const double c12 = a12 * cross;
        l11_ = std::sqrt(c11);
        l21_ = c12 / l11_;
        l22_ = std::sqrt(std::max(c22 - l21_ * l21_, 0.0));
    }

    void step(Vec2& p, RngStream& rng) const {
        double n1, n2;
        rng.normal_pair(n1, n2);
        p.x1 = e_lam_ * p.x1 + eps_ * l11_ * n1;
        p.x2 = e_mu_ * p.x2 + eps_ * (l21_ * n1 + l22_ * n2);
    }

    double dt() const { return dt_; }

  private:
    double eps_, dt_, e_lam_, e_mu_, l11_, l21_, l22_;
};

inline void step_linear_exact(const LinearSaddleSde& sde, Vec2& state, double dt, RngStream& rng) {
    ExactStepper(sde, dt).step(state, rng);
}

struct GeneralSde {
    std::function<void(double, double, double&, double&)> drift;          // (x1,x2) -> (b1,b2)
    std::function<void(double, double, std::array<double, 4>&)> diffusion; // (x1,x2) -> sigma(x)
    double epsilon = 0.1;
    Rect domain = {-1.0, 1.0, -1.0, 1.0};
};

class EulerStepper {
  public:
    EulerStepper(const GeneralSde& sde, double dt)
        : sde_(&sde), dt_(dt), sq_(std::sqrt(dt)) {}

    void step(Vec2& p, RngStream& rng) const {
        double b1, b2, n1, n2;
        sde_->drift(p.x1, p.x2, b1, b2);
        std::array<double, 4> s;
        sde_->diffusion(p.x1, p.x2, s);
        rng.normal_pair(n1, n2);
        p.x1 += b1 * dt_ + sde_->epsilon * sq_ * (s[0] * n1 + s[1] * n2);
        p.x2 += b2 * dt_ + sde_->epsilon * sq_ * (s[2] * n1 + s[3] * n2);
    }

    double dt() const { return dt_; }

  private:
    const GeneralSde* sde_;
    double dt_, sq_;
};

inline void step_euler(const GeneralSde& sde, Vec2& state, double dt, RngStream& rng) {
    EulerStepper(sde, dt).step(state, rng);
}

namespace detail {

// First-crossing interpolation between the last inside point and the first
// outside point; picks the earliest crossed face.
inline ExitRecord interpolate_exit(const Vec2& prev, const Vec2& cur, const Rect& d,
                                   double t_prev, double dt, std::uint64_t steps) {
    double best = 2.0;
    ExitSide side = ExitSide::Right;
    auto consider = [&](double num, double den, ExitSide s) {
        if (den == 0.0) return;
        double th = num / den;
        if (th >= 0.0 && th <= 1.0 && th < best) {
            best = th;
            side = s;
        }
    };
    consider(d.x1_max - prev.x1, cur.x1 - prev.x1, ExitSide::Right);
    consider(d.x1_min - prev.x1, cur.x1 - prev.x1, ExitSide::Left);
    consider(d.x2_max - prev.x2, cur.x2 - prev.x2, ExitSide::Top);
    consider(d.x2_min - prev.x2, cur.x2 - prev.x2, ExitSide::Bottom);
    if (best > 1.0) best = 1.0;  // numerical corner case: attribute to this step
    ExitRecord rec;
    rec.side = side;
    rec.time = t_prev + best * dt;
    rec.steps = steps;
    const double x1 = prev.x1 + best * (cur.x1 - prev.x1);
    const double x2 = prev.x2 + best * (cur.x2 - prev.x2);
    rec.location = (side == ExitSide::Left || side == ExitSide::Right) ? x2 : x1;
    return rec;
}

template <class Stepper>
std::optional<ExitRecord> run_to_exit(const Stepper& stepper, Vec2& state, const Rect& domain,
                                      double max_time, RngStream& rng) {
    const double dt = stepper.dt();
    double t = 0.0;
    std::uint64_t steps = 0;
    Vec2 prev = state;
    while (t < max_time) {
        prev = state;
        stepper.step(state, rng);
        t += dt;
        ++steps;
        if (!domain.contains(state))
            return interpolate_exit(prev, state, domain, t - dt, dt, steps);
    }
    return std::nullopt;  // timeout
}

}  // namespace detail

// First exit of the exact linear saddle from its box. nullopt signals Timeout.
inline std::optional<ExitRecord> simulate_exit(const LinearSaddleSde& sde, Vec2 initial,
                                               double max_time, double dt, RngStream& rng) {
    Rect d = rect_of(sde.box);
    if (!d.contains(initial)) throw DomainError("simulate_exit: initial point not inside domain");
    ExactStepper st(sde, dt);
    return detail::run_to_exit(st, initial, d, max_time, rng);
}

inline std::optional<ExitRecord> simulate_exit(const GeneralSde& sde, Vec2 initial,
                                               double max_time, double dt, RngStream& rng) {
    if (!sde.domain.contains(initial))
        throw DomainError("simulate_exit: initial point not inside domain");
    EulerStepper st(sde, dt);
    return detail::run_to_exit(st, initial, sde.domain, max_time, rng);
}

// Transport along a heteroclinic connection: linear gain a, Gaussian kick of
// magnitude b at the noise scale, sign flip for the side geometry, and a
// deterministic travel time.
struct TransportMap {
    double a = 1.0;
    double b = 1.0;
    int flip = +1;
    double travel_time = 1.0;

    static TransportMap identity() { return {1.0, 0.0, +1, 0.0}; }
};

// Rescaled entrance coordinate for the next saddle:
// xi' = flip * (a xi + b eps^{1-alpha_in} N(0,1)), xi = exit.location / eps^{alpha_in}.
// The kick is applied at every alpha; its eps^{1-alpha} factor vanishes
// automatically as eps -> 0 unless alpha = 1.
inline double apply_transport(const TransportMap& map, const ExitRecord& exit, double alpha_in,
                              double epsilon, RngStream& rng) {
    if (map.a == 0.0) throw ValidationError("transport map: a must be nonzero");
    if (exit.side == ExitSide::Top || exit.side == ExitSide::Bottom)
        throw GeometryError("transport applied to an exit on a non-outgoing face");
    const double xi = exit.location / std::pow(epsilon, alpha_in);
    const double kick = map.b * std::pow(epsilon, 1.0 - alpha_in) * rng.normal();
    return map.flip * (map.a * xi + kick);
}

struct ChainOutcome {
    bool escaped = false;
    bool timeout = false;
    int break_index = 0;  // 1-based saddle of the chain-breaking exit; 0 if none
    std::vector<ExitRecord> exits;
    double total_time = 0.0;
};

// Entrance scaling variable xi_0.
struct XiLaw {
    enum class Kind { Constant, Gaussian, Uniform } kind = Kind::Constant;
    double p0 = 0.0, p1 = 1.0;

    static XiLaw constant(double v) { return {Kind::Constant, v, 0.0}; }
    static XiLaw gaussian(double mean, double sd) { return {Kind::Gaussian, mean, sd}; }
    static XiLaw uniform(double a, double b) { return {Kind::Uniform, a, b}; }

    double sample(RngStream& rng) const {
        switch (kind) {
            case Kind::Constant: return p0;
            case Kind::Gaussian: return p0 + p1 * rng.normal();
            case Kind::Uniform: return p0 + (p1 - p0) * rng.uniform01();
        }
        return p0;
    }
};

struct ChainConfig {
    EscapeChainSpec spec;
    std::vector<TransportMap> maps;   // maps[k-1] follows saddle k; size n (empty = identity)
    std::vector<SaddleBox> boxes;     // per saddle; empty = standard box for all
    double epsilon = 0.1;
    double dt = 0.0;                  // 0: default 1e-3 * min(1/lambda, 1/mu)
    double max_time = 0.0;            // 0: regime-dependent default
    XiLaw xi0 = XiLaw::constant(0.0);
};

// Precomputes steppers, continuation sides and the alpha ladder once, then
// runs independent paths. All mutable state lives in the per-path locals.
class ChainSimulator {
  public:
    explicit ChainSimulator(const ChainConfig& cfg) : cfg_(cfg) {
        validate(cfg.spec);
        const int n = cfg.spec.n();
        if (cfg_.maps.empty()) cfg_.maps.assign(static_cast<size_t>(n), TransportMap::identity());
        if (static_cast<int>(cfg_.maps.size()) != n)
            throw ValidationError("simulate_chain: need one transport map per saddle");
        if (cfg_.boxes.empty()) cfg_.boxes.assign(static_cast<size_t>(n), SaddleBox{});
        if (static_cast<int>(cfg_.boxes.size()) != n)
            throw ValidationError("simulate_chain: need one box per saddle");
        for (const auto& b : cfg_.boxes) hetlab::validate(b);
        if (!(cfg_.epsilon > 0.0)) throw ValidationError("simulate_chain: epsilon must be > 0");

        alpha_ = alpha_sequence(cfg.spec.alpha0, cfg.spec.rhos());
        double dt = cfg.dt;
        if (dt <= 0.0) {
            double scale = 1e300;
            for (const auto& s : cfg.spec.saddles)
                scale = std::min({scale, 1.0 / s.lambda, 1.0 / s.mu});
            dt = 1e-3 * scale;
        }
        dt_ = dt;
        const double l_eps = std::log(1.0 / cfg_.epsilon);
        double max_time = cfg.max_time;
        if (max_time <= 0.0) {
            auto rep = classify_escape(cfg.spec);
            double chi;
            if (rep.regime == Regime::PowerLaw) {
                chi = *rep.chi_bar;
            } else {
                chi = 0.0;
                for (int k = 1; k <= n; ++k)
                    chi += alpha_[static_cast<size_t>(k - 1)] /
                           cfg.spec.saddles[static_cast<size_t>(k - 1)].lambda;
            }
            max_time = 10.0 * chi * std::max(l_eps, 1.0);
        }
        max_time_ = max_time;

        steppers_.reserve(static_cast<size_t>(n));
        for (int k = 0; k < n; ++k) {
            LinearSaddleSde sde{cfg.spec.saddles[static_cast<size_t>(k)],
                                cfg_.boxes[static_cast<size_t>(k)], cfg_.epsilon};
            steppers_.emplace_back(sde, dt_);
            rects_.push_back(rect_of(cfg_.boxes[static_cast<size_t>(k)]));
        }
    }

    double dt() const { return dt_; }
    double max_time() const { return max_time_; }
    const std::vector<double>& alpha() const { return alpha_; }

    ChainOutcome run(RngStream& rng) const {
        const int n = cfg_.spec.n();
        ChainOutcome out;
        out.exits.reserve(static_cast<size_t>(n));
        double entrance = std::pow(cfg_.epsilon, cfg_.spec.alpha0) * cfg_.xi0.sample(rng);
        double budget = max_time_;
        for (int k = 1; k <= n; ++k) {
            const auto& box = cfg_.boxes[static_cast<size_t>(k - 1)];
            Vec2 state{entrance, box.L};
            if (!rects_[static_cast<size_t>(k - 1)].contains(state)) {
                // entered outside the box: chain lost before reaching the saddle
                out.break_index = k;
                return out;
            }
            auto exit = detail::run_to_exit(steppers_[static_cast<size_t>(k - 1)], state,
                                            rects_[static_cast<size_t>(k - 1)], budget, rng);
            if (!exit) {
                out.timeout = true;
                out.break_index = k;
                return out;
            }
            out.exits.push_back(*exit);
            out.total_time += exit->time;
            budget -= exit->time;
            const int side = (exit->side == ExitSide::Right)  ? +1
                             : (exit->side == ExitSide::Left) ? -1
                                                              : 0;
            if (side != cfg_.spec.required_side(k)) {
                out.break_index = k;
                return out;
            }
            const auto& map = cfg_.maps[static_cast<size_t>(k - 1)];
            out.total_time += map.travel_time;
            if (k < n)
                entrance = std::pow(cfg_.epsilon, alpha_[static_cast<size_t>(k)]) *
                           apply_transport(map, *exit, alpha_[static_cast<size_t>(k)], cfg_.epsilon, rng);
        }
        out.escaped = true;
        return out;
    }

    const ChainConfig& config() const { return cfg_; }

  private:
    ChainConfig cfg_;
    std::vector<double> alpha_;
    std::vector<ExactStepper> steppers_;
    std::vector<Rect> rects_;
    double dt_ = 0.0;
    double max_time_ = 0.0;
};

inline ChainOutcome simulate_chain(const EscapeChainSpec& spec,
                                   const std::vector<TransportMap>& maps, double epsilon,
                                   double dt, RngStream& rng) {
    ChainConfig cfg;
    cfg.spec = spec;
    cfg.maps = maps;
    cfg.epsilon = epsilon;
    cfg.dt = dt;
    return ChainSimulator(cfg).run(rng);
}

}  // namespace hetlab
