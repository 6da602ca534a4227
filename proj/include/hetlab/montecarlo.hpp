#pragma once

// Experiment orchestration and statistics: epsilon ladders, rare-event
// estimates with Wilson intervals, weighted log-log power-law fits, exit-time
// concentration summaries, local-limit window checks, and histogram-vs-density
// distances. Paths are independent tasks keyed by path index, so parallel and
// serial runs aggregate to identical results.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "hetlab/errors.hpp"
#include "hetlab/exponents.hpp"
#include "hetlab/kernel.hpp"
#include "hetlab/rng.hpp"
#include "hetlab/sde.hpp"

namespace hetlab {

struct WilsonInterval {
    double low = 0.0;
    double high = 1.0;
};

inline WilsonInterval wilson_interval(std::uint64_t hits, std::uint64_t n, double z = 1.959963984540054) {
    if (n == 0) return {0.0, 1.0};
    const double nh = static_cast<double>(n);
    const double p = static_cast<double>(hits) / nh;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nh;
    const double center = (p + z2 / (2.0 * nh)) / denom;
    const double half = z / denom * std::sqrt(p * (1.0 - p) / nh + z2 / (4.0 * nh * nh));
    WilsonInterval ci{std::max(0.0, center - half), std::min(1.0, center + half)};
    if (hits == 0) ci.low = 0.0;
    if (hits == n) ci.high = 1.0;
    return ci;
}

struct EstimateRow {
    double eps = 0.0;
    std::uint64_t hits = 0;
    std::uint64_t n = 0;
    double p_hat = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::uint64_t timeouts = 0;
};

struct PowerLawFit {
    double theta_hat = 0.0;   // slope of log p-hat vs log eps (+theta means decay)
    double h_hat = 0.0;       // exp(intercept)
    double stderr_theta = 0.0;
    double r_squared = 0.0;
    int rows_used = 0;
    std::vector<double> dropped_eps;  // rows excluded for hits < 10
};

struct EstimateTable {
    std::vector<EstimateRow> rows;
    std::optional<PowerLawFit> fit;
};

struct LadderConfig {
    std::vector<double> eps_values;   // strictly decreasing, all > 0
    std::uint64_t samples_per_eps = 0;
    std::uint64_t seed = 1;
    double dt = 0.0;
    int threads = 1;
};

inline void validate(const LadderConfig& cfg) {
    if (cfg.eps_values.empty()) throw ValidationError("ladder: needs at least one epsilon");
    for (size_t i = 0; i < cfg.eps_values.size(); ++i) {
        if (!(cfg.eps_values[i] > 0.0)) throw ValidationError("ladder: epsilons must be > 0");
        if (i > 0 && !(cfg.eps_values[i] < cfg.eps_values[i - 1]))
            throw ValidationError("ladder: epsilons must be strictly decreasing");
    }
    if (cfg.samples_per_eps < 100) throw ValidationError("ladder: samples must be >= 100");
}

// Runs fn(path_index, stream) over [0, n), split into contiguous ranges per
// worker; merge(worker_results in worker order) keeps aggregation deterministic.
template <class State, class PerPath>
std::vector<State> parallel_paths(std::uint64_t n, std::uint64_t seed, int threads, PerPath fn) {
    threads = std::max(1, threads);
    const std::uint64_t nt = static_cast<std::uint64_t>(threads);
    std::vector<State> states(static_cast<size_t>(threads));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (std::uint64_t w = 0; w < nt; ++w) {
        const std::uint64_t begin = n * w / nt;
        const std::uint64_t end = n * (w + 1) / nt;
        pool.emplace_back([&, w, begin, end]() {
            State& st = states[static_cast<size_t>(w)];
            for (std::uint64_t i = begin; i < end; ++i) {
                RngStream rng(seed, i);
                fn(i, rng, st);
            }
        });
    }
    for (auto& t : pool) t.join();
    return states;
}

// Per-escape record kept for conditional statistics.
struct EscapeStat {
    std::uint64_t path_id = 0;
    double total_time = 0.0;
    std::vector<double> saddle_times;
};

struct ChainRunStats {
    std::uint64_t hits = 0;
    std::uint64_t timeouts = 0;
    std::vector<EscapeStat> escapes;
};

inline ChainRunStats run_chain_paths(const ChainSimulator& sim, std::uint64_t n,
                                     std::uint64_t seed, int threads, bool keep_escape_records) {
    struct Local {
        std::uint64_t hits = 0, timeouts = 0;
        std::vector<EscapeStat> escapes;
    };
    auto locals = parallel_paths<Local>(
        n, seed, threads, [&](std::uint64_t i, RngStream& rng, Local& st) {
            ChainOutcome out = sim.run(rng);
            if (out.timeout) {
                ++st.timeouts;
                return;
            }
            if (out.escaped) {
                ++st.hits;
                if (keep_escape_records) {
                    EscapeStat es;
                    es.path_id = i;
                    es.total_time = out.total_time;
                    es.saddle_times.reserve(out.exits.size());
                    for (const auto& e : out.exits) es.saddle_times.push_back(e.time);
                    st.escapes.push_back(std::move(es));
                }
            }
        });
    ChainRunStats stats;
    for (auto& l : locals) {
        stats.hits += l.hits;
        stats.timeouts += l.timeouts;
        stats.escapes.insert(stats.escapes.end(), l.escapes.begin(), l.escapes.end());
    }
    return stats;
}

// One ladder rung: p-hat = hits / samples with timeouts counted separately
// and reported, never silently dropped.
inline EstimateRow estimate_event(const ChainSimulator& sim, double eps, std::uint64_t samples,
                                  std::uint64_t seed, int threads,
                                  ChainRunStats* stats_out = nullptr) {
    ChainRunStats stats = run_chain_paths(sim, samples, seed, threads, stats_out != nullptr);
    if (stats.timeouts == samples) throw AllTimeout("every path timed out at eps = " + std::to_string(eps));
    EstimateRow row;
    row.eps = eps;
    row.hits = stats.hits;
    row.n = samples;
    row.timeouts = stats.timeouts;
    row.p_hat = static_cast<double>(stats.hits) / static_cast<double>(samples);
    auto ci = wilson_interval(stats.hits, samples);
    row.ci_low = ci.low;
    row.ci_high = ci.high;
    if (stats_out) *stats_out = std::move(stats);
    return row;
}

// Weighted least squares of log p-hat on log eps. Weights are the delta-method
// variances (1 - p)/(p n). Rows with hits < 10 are dropped and reported.
inline PowerLawFit fit_power_law(const std::vector<EstimateRow>& rows) {
    PowerLawFit fit;
    std::vector<double> x, y, w;
    for (const auto& r : rows) {
        if (r.hits < 10) {
            fit.dropped_eps.push_back(r.eps);
            continue;
        }
        const double n_eff = static_cast<double>(r.n);
        x.push_back(std::log(r.eps));
        y.push_back(std::log(r.p_hat));
        double var = (1.0 - r.p_hat) / (r.p_hat * n_eff);
        w.push_back(1.0 / std::max(var, 1e-300));
    }
    if (x.size() < 3) throw InsufficientData("fit_power_law: need >= 3 rows with hits >= 10");
    double sw = 0, sx = 0, sy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
    }
    const double xbar = sx / sw, ybar = sy / sw;
    double sxx = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxx += w[i] * (x[i] - xbar) * (x[i] - xbar);
        sxy += w[i] * (x[i] - xbar) * (y[i] - ybar);
    }
    fit.theta_hat = sxy / sxx;
    fit.h_hat = std::exp(ybar - fit.theta_hat * xbar);
    fit.stderr_theta = std::sqrt(1.0 / sxx);
    double ss_res = 0, ss_tot = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double pred = ybar + fit.theta_hat * (x[i] - xbar);
        ss_res += w[i] * (y[i] - pred) * (y[i] - pred);
        ss_tot += w[i] * (y[i] - ybar) * (y[i] - ybar);
    }
    fit.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    fit.rows_used = static_cast<int>(x.size());
    return fit;
}

inline EstimateTable run_ladder(const ChainConfig& base, const LadderConfig& ladder,
                                std::vector<ChainRunStats>* stats_out = nullptr) {
    validate(ladder);
    EstimateTable table;
    for (size_t r = 0; r < ladder.eps_values.size(); ++r) {
        ChainConfig cfg = base;
        cfg.epsilon = ladder.eps_values[r];
        cfg.dt = ladder.dt;
        ChainSimulator sim(cfg);
        ChainRunStats stats;
        // rung-specific seed offset keeps the streams of different rungs disjoint
        table.rows.push_back(estimate_event(sim, cfg.epsilon, ladder.samples_per_eps,
                                            ladder.seed + 7919 * static_cast<std::uint64_t>(r),
                                            ladder.threads, stats_out ? &stats : nullptr));
        if (stats_out) stats_out->push_back(std::move(stats));
    }
    try {
        table.fit = fit_power_law(table.rows);
    } catch (const InsufficientData&) {
        table.fit = std::nullopt;
    }
    return table;
}

struct ConcentrationSummary {
    std::uint64_t escapes = 0;
    double mean_ratio = 0.0;  // mean of tau / (chi_bar log eps^{-1})
    double q05 = 0.0, q50 = 0.0, q95 = 0.0;
    std::vector<int> slowdown_saddles;
    std::vector<double> per_saddle_ratio;  // passage time / ((bar_alpha_i / mu_i) log eps^{-1})
};

// Conditional-on-escape time statistics against chi_bar, plus the per-saddle
// slowdown check at each J-saddle.
inline ConcentrationSummary exit_time_concentration(const std::vector<EscapeStat>& escapes,
                                                    const EscapeChainSpec& spec,
                                                    const ExponentReport& report, double eps) {
    if (report.regime != Regime::PowerLaw)
        throw RegimeError("exit_time_concentration: requires the PowerLaw regime");
    if (escapes.size() < 200)
        throw InsufficientEscapes("exit_time_concentration: need >= 200 escapes, got " +
                                  std::to_string(escapes.size()));
    const double l_eps = std::log(1.0 / eps);
    const double scale = *report.chi_bar * l_eps;
    std::vector<double> ratios;
    ratios.reserve(escapes.size());
    for (const auto& e : escapes) ratios.push_back(e.total_time / scale);
    std::sort(ratios.begin(), ratios.end());
    ConcentrationSummary s;
    s.escapes = escapes.size();
    double acc = 0.0;
    for (double r : ratios) acc += r;
    s.mean_ratio = acc / static_cast<double>(ratios.size());
    auto q = [&](double p) {
        size_t idx = static_cast<size_t>(p * static_cast<double>(ratios.size() - 1));
        return ratios[idx];
    };
    s.q05 = q(0.05);
    s.q50 = q(0.50);
    s.q95 = q(0.95);
    s.slowdown_saddles = report.slowdown;
    for (int i : report.slowdown) {
        double mean_t = 0.0;
        for (const auto& e : escapes) mean_t += e.saddle_times[static_cast<size_t>(i - 1)];
        mean_t /= static_cast<double>(escapes.size());
        const double predicted =
            (*report.bar_alpha)[static_cast<size_t>(i)] / spec.saddles[static_cast<size_t>(i - 1)].mu * l_eps;
        s.per_saddle_ratio.push_back(mean_t / predicted);
    }
    return s;
}

struct LocalLimitCheck {
    double empirical_scaled = 0.0;
    double ci_low_scaled = 0.0;
    double ci_high_scaled = 0.0;
    double predicted = 0.0;
    double rel_discrepancy = 0.0;
    std::uint64_t hits = 0;
    std::uint64_t n = 0;
    std::uint64_t timeouts = 0;
};

// Empirical eps^{-(beta/rho - 1)} P{exit in {R} x eps^beta [a,b]} from
// entrance (eps x, L) against the closed-form saddle-kernel prediction.
inline LocalLimitCheck local_limit_check(const Saddle& saddle, const SaddleBox& box, double eps,
                                         double beta, double x, double a, double b,
                                         std::uint64_t samples, std::uint64_t seed, int threads,
                                         double dt = 0.0) {
    const double rho = saddle.rho();
    if (!(rho < 1.0 && beta > rho && beta <= 1.0))
        throw DomainError("local_limit_check: requires rho < 1 and beta in (rho, 1]");
    if (!(a <= b)) throw DomainError("local_limit_check: requires a <= b");
    if (a == b) return LocalLimitCheck{0.0, 0.0, 0.0, 0.0, 0.0, 0, samples, 0};
    if (dt <= 0.0) dt = 1e-3 * std::min(1.0 / saddle.lambda, 1.0 / saddle.mu);
    LinearSaddleSde sde{saddle, box, eps};
    const double l_eps = std::log(1.0 / eps);
    const double max_time = 10.0 * (1.0 / saddle.mu + 1.0 / saddle.lambda) * std::max(l_eps, 1.0);
    const double lo = std::pow(eps, beta) * a, hi = std::pow(eps, beta) * b;

    struct Local {
        std::uint64_t hits = 0, timeouts = 0;
    };
    auto locals = parallel_paths<Local>(
        samples, seed, threads, [&](std::uint64_t, RngStream& rng, Local& st) {
            auto exit = simulate_exit(sde, Vec2{eps * x, box.L}, max_time, dt, rng);
            if (!exit) {
                ++st.timeouts;
                return;
            }
            if (exit->side == ExitSide::Right && exit->location >= lo && exit->location <= hi)
                ++st.hits;
        });
    std::uint64_t hits = 0, timeouts = 0;
    for (auto& l : locals) {
        hits += l.hits;
        timeouts += l.timeouts;
    }
    if (hits < 10) throw InsufficientData("local_limit_check: fewer than 10 window hits");
    const double scale = std::pow(eps, -(beta / rho - 1.0));
    LocalLimitCheck out;
    out.hits = hits;
    out.n = samples;
    out.timeouts = timeouts;
    out.empirical_scaled = scale * static_cast<double>(hits) / static_cast<double>(samples);
    auto ci = wilson_interval(hits, samples);
    out.ci_low_scaled = scale * ci.low;
    out.ci_high_scaled = scale * ci.high;
    out.predicted = local_limit_prediction(x, a, b, beta, saddle, box);
    out.rel_discrepancy = std::abs(out.empirical_scaled - out.predicted) / out.predicted;
    return out;
}

struct HistDistance {
    double l1 = 0.0;
    std::optional<double> ks;
    size_t n = 0;
    size_t bins = 0;
};

// L1 distance between the normalized sample histogram and the predicted
// density, plus the one-sample KS statistic where the law has a CDF.
inline HistDistance histogram_vs_density(std::vector<double> samples, const TypicalExitLaw& law) {
    if (samples.size() < 10000)
        throw InsufficientData("histogram_vs_density: need >= 1e4 samples");
    std::sort(samples.begin(), samples.end());
    HistDistance out;
    out.n = samples.size();
    if (law.cdf) {
        double ks = 0.0;
        const double n = static_cast<double>(samples.size());
        for (size_t i = 0; i < samples.size(); ++i) {
            const double f = law.cdf(samples[i]);
            ks = std::max(ks, std::max(std::abs((i + 1.0) / n - f), std::abs(i / n - f)));
        }
        out.ks = ks;
    }
    if (law.has_density && law.density) {
        const double lo = samples.front(), hi = samples.back();
        const size_t bins = static_cast<size_t>(std::max(20.0, std::cbrt(static_cast<double>(samples.size())) * 2.0));
        const double width = (hi - lo) / static_cast<double>(bins);
        if (width > 0.0) {
            std::vector<double> counts(bins, 0.0);
            for (double v : samples) {
                size_t b = std::min(bins - 1, static_cast<size_t>((v - lo) / width));
                counts[b] += 1.0;
            }
            double l1 = 0.0;
            for (size_t b = 0; b < bins; ++b) {
                const double mid = lo + (static_cast<double>(b) + 0.5) * width;
                const double hist = counts[b] / (static_cast<double>(samples.size()) * width);
                l1 += std::abs(hist - law.density(mid)) * width;
            }
            out.l1 = l1;
            out.bins = bins;
        }
    }
    return out;
}

}  // namespace hetlab
