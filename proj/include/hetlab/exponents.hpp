#pragma once

// Escape-exponent calculus for cell-escape heteroclinic chains: the forward
// alpha recursion, the binding set H found by a record scan, effective
// exponents bar_alpha, the escape exponent theta with its partial sums, and
// the time constant chi_bar, plus the three-regime classification.
//
// Products of stability indices are accumulated in log domain so that
// rho_{kj} stays accurate for chains with n up to ~100.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "hetlab/errors.hpp"
#include "hetlab/json_out.hpp"
#include "hetlab/saddle.hpp"

namespace hetlab {

enum class Regime { PositiveLimit, PowerLaw, Superpolynomial };

inline const char* regime_name(Regime r) {
    switch (r) {
        case Regime::PositiveLimit: return "PositiveLimit";
        case Regime::PowerLaw: return "PowerLaw";
        case Regime::Superpolynomial: return "Superpolynomial";
    }
    return "?";
}

// alpha_k = (alpha_{k-1} * rho_k) ^ 1, clamped by min against the literal 1.0.
inline std::vector<double> alpha_sequence(double alpha0, const std::vector<double>& rhos) {
    if (!(alpha0 > 0.0 && alpha0 <= 1.0))
        throw DomainError("alpha0 must lie in (0, 1], got " + std::to_string(alpha0));
    for (double r : rhos)
        if (!(r > 0.0)) throw DomainError("stability indices must be > 0");
    std::vector<double> alpha;
    alpha.reserve(rhos.size() + 1);
    alpha.push_back(alpha0);
    for (double r : rhos) alpha.push_back(std::min(alpha.back() * r, 1.0));
    return alpha;
}

// Largest k <= n-1 with alpha_k == 1 (exact comparison; the recursion clamps
// to the constant 1.0). Absent when no such k exists.
inline std::optional<int> kappa_index(const std::vector<double>& alpha) {
    const int n = static_cast<int>(alpha.size()) - 1;
    for (int k = n - 1; k >= 0; --k)
        if (alpha[static_cast<size_t>(k)] == 1.0) return k;
    return std::nullopt;
}

namespace detail {

// prefix[j] = sum_{i=1..j} log rho_i, so log rho_{kj} = prefix[j] - prefix[k].
inline std::vector<double> log_rho_prefix(const std::vector<double>& rhos) {
    std::vector<double> prefix(rhos.size() + 1, 0.0);
    for (size_t i = 0; i < rhos.size(); ++i) prefix[i + 1] = prefix[i] + std::log(rhos[i]);
    return prefix;
}

}  // namespace detail

// Binding set H, computed by the record scan of the suffix products
// rho_{i,n-1} explored from n-1 down to kappa+1. Ties (rho_{kj} == 1) are
// not binding: the defining inequality is strict.
inline std::vector<int> binding_set(const std::vector<double>& rhos, int kappa, int n) {
    if (kappa < 0 || kappa > n - 1) throw DomainError("binding_set: kappa out of range");
    std::vector<int> H;
    if (kappa >= n - 1) return H;  // empty index range
    const auto prefix = detail::log_rho_prefix(rhos);
    // log rho_{i,n-1} = prefix[n-1] - prefix[i]
    auto s = [&](int i) { return prefix[static_cast<size_t>(n - 1)] - prefix[static_cast<size_t>(i)]; };
    H.push_back(n - 1);
    int j = n - 1;
    for (;;) {
        int next = -1;
        for (int i = j - 1; i >= kappa + 1; --i)
            if (s(i) < s(j)) { next = i; break; }  // max of the record candidates
        if (next < 0) break;
        j = next;
        H.push_back(j);
    }
    std::sort(H.begin(), H.end());
    return H;
}

// Effective exponents via bar_alpha_i = rho_{i,k(i)}^{-1} with
// k(i) = min{k in H : k >= i}; bar_alpha_i = alpha_i for i <= kappa.
inline std::vector<double> bar_alpha_seq(const std::vector<double>& rhos, int kappa,
                                         const std::vector<int>& H,
                                         const std::vector<double>& alpha) {
    const int n = static_cast<int>(rhos.size());
    const auto prefix = detail::log_rho_prefix(rhos);
    std::vector<double> bar(static_cast<size_t>(n), 0.0);  // indices 0..n-1
    for (int i = 0; i <= std::min(kappa, n - 1); ++i) bar[static_cast<size_t>(i)] = alpha[static_cast<size_t>(i)];
    size_t hpos = 0;
    for (int i = kappa + 1; i <= n - 1; ++i) {
        while (hpos < H.size() && H[hpos] < i) ++hpos;
        if (hpos == H.size()) throw DomainError("bar_alpha: no binding index >= i");
        int ki = H[hpos];
        // rho_{i,k(i)}^{-1} = exp(prefix[i] - prefix[k(i)])
        bar[static_cast<size_t>(i)] =
            std::exp(prefix[static_cast<size_t>(i)] - prefix[static_cast<size_t>(ki)]);
        if (ki == i) bar[static_cast<size_t>(i)] = 1.0;
    }
    return bar;
}

// Backward recursion route: bar_alpha_{n-1} = 1; bar_alpha_i = 1 if i in H,
// else bar_alpha_{i+1} / rho_{i+1}.
inline std::vector<double> bar_alpha_backward(const std::vector<double>& rhos, int kappa,
                                              const std::vector<int>& H,
                                              const std::vector<double>& alpha) {
    const int n = static_cast<int>(rhos.size());
    std::vector<double> bar(static_cast<size_t>(n), 0.0);
    for (int i = 0; i <= std::min(kappa, n - 1); ++i) bar[static_cast<size_t>(i)] = alpha[static_cast<size_t>(i)];
    if (kappa <= n - 2) {
        auto in_H = [&](int i) { return std::binary_search(H.begin(), H.end(), i); };
        bar[static_cast<size_t>(n - 1)] = 1.0;
        for (int i = n - 2; i >= kappa + 1; --i)
            bar[static_cast<size_t>(i)] =
                in_H(i) ? 1.0 : bar[static_cast<size_t>(i + 1)] / rhos[static_cast<size_t>(i)];
    }
    return bar;
}

// Clamped backward recursion route: bar_alpha_i = (bar_alpha_{i+1}/rho_{i+1}) ^ 1.
inline std::vector<double> bar_alpha_clamped(const std::vector<double>& rhos, int kappa,
                                             const std::vector<double>& alpha) {
    const int n = static_cast<int>(rhos.size());
    std::vector<double> bar(static_cast<size_t>(n), 0.0);
    for (int i = 0; i <= std::min(kappa, n - 1); ++i) bar[static_cast<size_t>(i)] = alpha[static_cast<size_t>(i)];
    if (kappa <= n - 2) {
        bar[static_cast<size_t>(n - 1)] = 1.0;
        for (int i = n - 2; i >= kappa + 1; --i)
            bar[static_cast<size_t>(i)] =
                std::min(bar[static_cast<size_t>(i + 1)] / rhos[static_cast<size_t>(i)], 1.0);
    }
    return bar;
}

inline std::vector<int> h_prime_set(const std::vector<int>& H, int kappa, int n) {
    std::vector<int> hp;
    for (int k : H)
        if (k != n - 1) hp.push_back(k);
    if (!std::binary_search(hp.begin(), hp.end(), kappa) && kappa != n - 1) hp.push_back(kappa);
    std::sort(hp.begin(), hp.end());
    return hp;
}

inline std::vector<int> slowdown_set(const std::vector<int>& h_prime) {
    std::vector<int> J;
    J.reserve(h_prime.size());
    for (int k : h_prime) J.push_back(k + 1);
    return J;
}

// theta = sum_{i in J} (bar_alpha_i / rho_i - 1)
inline double theta_total(const std::vector<double>& rhos, const std::vector<int>& J,
                          const std::vector<double>& bar_alpha) {
    double th = 0.0;
    for (int i : J)
        th += bar_alpha[static_cast<size_t>(i)] / rhos[static_cast<size_t>(i - 1)] - 1.0;
    return th;
}

// theta_k = sum_{j <= k, j in J} (bar_alpha_j / rho_j - 1), for k = 0..n.
inline std::vector<double> theta_partials(int n, const std::vector<double>& rhos,
                                          const std::vector<int>& J,
                                          const std::vector<double>& bar_alpha) {
    std::vector<double> th(static_cast<size_t>(n + 1), 0.0);
    double acc = 0.0;
    size_t jpos = 0;
    for (int k = 0; k <= n; ++k) {
        if (jpos < J.size() && J[jpos] == k) {
            acc += bar_alpha[static_cast<size_t>(k)] / rhos[static_cast<size_t>(k - 1)] - 1.0;
            ++jpos;
        }
        th[static_cast<size_t>(k)] = acc;
    }
    return th;
}

// chi_bar = sum_{i not in J} bar_alpha_{i-1}/lambda_i + sum_{i in J} bar_alpha_i/mu_i,
// with i running over the saddles 1..n.
inline double chi_bar_value(const std::vector<Saddle>& saddles, const std::vector<int>& J,
                            const std::vector<double>& bar_alpha) {
    const int n = static_cast<int>(saddles.size());
    double chi = 0.0;
    for (int i = 1; i <= n; ++i) {
        bool in_J = std::binary_search(J.begin(), J.end(), i);
        if (in_J)
            chi += bar_alpha[static_cast<size_t>(i)] / saddles[static_cast<size_t>(i - 1)].mu;
        else
            chi += bar_alpha[static_cast<size_t>(i - 1)] / saddles[static_cast<size_t>(i - 1)].lambda;
    }
    return chi;
}

struct ExponentReport {
    std::vector<double> alpha;                        // alpha_0..alpha_n
    std::optional<int> kappa;                         // absent when no alpha_k = 1, k <= n-1
    std::vector<int> binding;                         // H
    std::vector<int> h_prime;                         // H'
    std::vector<int> slowdown;                        // J = H' + 1
    std::optional<std::vector<double>> bar_alpha;     // indices 0..n-1 (absent with kappa)
    std::optional<double> theta;                      // escape exponent
    std::optional<std::vector<double>> theta_partial; // theta_k, k = 0..n
    std::optional<double> chi_bar;                    // PowerLaw regime only
    Regime regime = Regime::Superpolynomial;
    std::vector<double> log_rho_prefix;               // rho-product accessor backing

    // rho_{kj} = prod_{i=k+1..j} rho_i (equals 1 when j <= k)
    double rho_product(int k, int j) const {
        if (j <= k) return 1.0;
        return std::exp(log_rho_prefix[static_cast<size_t>(j)] -
                        log_rho_prefix[static_cast<size_t>(k)]);
    }
};

inline ExponentReport classify_escape(const EscapeChainSpec& spec) {
    validate(spec);
    const auto rhos = spec.rhos();
    const int n = spec.n();

    ExponentReport rep;
    rep.alpha = alpha_sequence(spec.alpha0, rhos);
    rep.log_rho_prefix = detail::log_rho_prefix(rhos);
    rep.kappa = kappa_index(rep.alpha);
    if (!rep.kappa) {
        rep.regime = Regime::Superpolynomial;
        return rep;
    }
    const int kappa = *rep.kappa;
    rep.binding = binding_set(rhos, kappa, n);
    rep.h_prime = h_prime_set(rep.binding, kappa, n);
    rep.slowdown = slowdown_set(rep.h_prime);
    rep.bar_alpha = bar_alpha_seq(rhos, kappa, rep.binding, rep.alpha);
    rep.theta = theta_total(rhos, rep.slowdown, *rep.bar_alpha);
    rep.theta_partial = theta_partials(n, rhos, rep.slowdown, *rep.bar_alpha);
    if (kappa == n - 1) {
        rep.regime = Regime::PositiveLimit;
    } else {
        rep.regime = Regime::PowerLaw;
        rep.chi_bar = chi_bar_value(spec.saddles, rep.slowdown, *rep.bar_alpha);
    }
    return rep;
}

// Standalone chi_bar with the PowerLaw precondition.
inline double chi_bar(const EscapeChainSpec& spec) {
    auto rep = classify_escape(spec);
    if (rep.regime != Regime::PowerLaw)
        throw RegimeError("chi_bar requires the PowerLaw regime (kappa defined and < n-1)");
    return *rep.chi_bar;
}

inline std::string report_to_json(const ExponentReport& rep) {
    jout::Writer w;
    w.begin_object();
    w.key("alpha"); w.array(rep.alpha);
    w.key("kappa");
    if (rep.kappa) w.value(*rep.kappa); else w.null();
    w.key("H");
    w.begin_array();
    for (int k : rep.binding) w.value(k);
    w.end_array();
    w.key("H_prime");
    w.begin_array();
    for (int k : rep.h_prime) w.value(k);
    w.end_array();
    w.key("J");
    w.begin_array();
    for (int k : rep.slowdown) w.value(k);
    w.end_array();
    w.key("bar_alpha");
    if (rep.bar_alpha) w.array(*rep.bar_alpha); else w.null();
    w.key("theta");
    if (rep.theta) w.value(*rep.theta); else w.null();
    w.key("theta_partial");
    if (rep.theta_partial) w.array(*rep.theta_partial); else w.null();
    w.key("chi_bar");
    if (rep.chi_bar) w.value(*rep.chi_bar); else w.null();
    w.key("regime"); w.value(regime_name(rep.regime));
    w.end_object();
    return w.out;
}

inline std::string report_to_table(const ExponentReport& rep) {
    auto join_ints = [](const std::vector<int>& v) {
        std::string s = "{";
        for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
        return s + "}";
    };
    auto join_nums = [](const std::vector<double>& v) {
        std::string s;
        char buf[32];
        for (size_t i = 0; i < v.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.6g", v[i]);
            s += (i ? " " : "") + std::string(buf);
        }
        return s;
    };
    std::string out;
    out += "regime      " + std::string(regime_name(rep.regime)) + "\n";
    out += "alpha       " + join_nums(rep.alpha) + "\n";
    out += "kappa       " + (rep.kappa ? std::to_string(*rep.kappa) : std::string("undefined")) + "\n";
    out += "H           " + join_ints(rep.binding) + "\n";
    out += "H'          " + join_ints(rep.h_prime) + "\n";
    out += "J           " + join_ints(rep.slowdown) + "\n";
    if (rep.bar_alpha) out += "bar_alpha   " + join_nums(*rep.bar_alpha) + "\n";
    if (rep.theta) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.12g", *rep.theta);
        out += "theta       " + std::string(buf) + "\n";
    }
    if (rep.theta_partial) out += "theta_k     " + join_nums(*rep.theta_partial) + "\n";
    if (rep.chi_bar) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.12g", *rep.chi_bar);
        out += "chi_bar     " + std::string(buf) + "\n";
    }
    return out;
}

}  // namespace hetlab
