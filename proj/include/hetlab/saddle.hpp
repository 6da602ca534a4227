#pragma once

// Domain types for saddles, heteroclinic chains and periodic cell networks.
// All types are immutable value objects; rho is always derived from (lambda, mu).

#include <optional>
#include <string>
#include <vector>

#include "hetlab/errors.hpp"

namespace hetlab {

// Hyperbolic saddle with expansion rate lambda > 0 and contraction rate mu > 0.
struct Saddle {
    double lambda = 0.0;
    double mu = 0.0;

    // Stability index rho = mu / lambda, recomputed on every access.
    double rho() const { return mu / lambda; }

    bool operator==(const Saddle&) const = default;
};

inline void validate(const Saddle& s, const std::string& where) {
    if (!(s.lambda > 0.0))
        throw ValidationError(where + ": lambda must be > 0, got " + std::to_string(s.lambda));
    if (!(s.mu > 0.0))
        throw ValidationError(where + ": mu must be > 0, got " + std::to_string(s.mu));
}

// Ordered cell-escape chain O_1..O_n. wrong_turn marks that the final
// connection leaves the cell; turn_signs optionally overrides the
// continuation side per saddle (+1 typical side, -1 crossing side).
struct EscapeChainSpec {
    double alpha0 = 1.0;
    std::vector<Saddle> saddles;
    bool wrong_turn = true;
    std::optional<std::vector<int>> turn_signs;

    int n() const { return static_cast<int>(saddles.size()); }
    std::vector<double> rhos() const {
        std::vector<double> r;
        r.reserve(saddles.size());
        for (const auto& s : saddles) r.push_back(s.rho());
        return r;
    }
    // Required exit branch at saddle k (1-based): +1 continues along the cell
    // boundary, -1 is the crossing ("wrong turn") side.
    int required_side(int k) const {
        if (turn_signs) return (*turn_signs)[static_cast<size_t>(k - 1)];
        return (k == n() && wrong_turn) ? -1 : +1;
    }

    bool operator==(const EscapeChainSpec&) const = default;
};

inline void validate(const EscapeChainSpec& c) {
    if (!(c.alpha0 > 0.0 && c.alpha0 <= 1.0))
        throw ValidationError("chain: alpha0 must lie in (0, 1], got " + std::to_string(c.alpha0));
    if (c.saddles.empty()) throw ValidationError("chain: needs at least one saddle");
    for (size_t i = 0; i < c.saddles.size(); ++i)
        validate(c.saddles[i], "chain saddle " + std::to_string(i + 1));
    if (c.turn_signs) {
        if (c.turn_signs->size() != c.saddles.size())
            throw ValidationError("chain: turn_signs length must equal the number of saddles");
        for (int s : *c.turn_signs)
            if (s != 1 && s != -1) throw ValidationError("chain: turn_signs entries must be +1 or -1");
    }
}

// One cell boundary as a cyclic saddle sequence.
struct CellCycle {
    std::vector<Saddle> saddles;
    bool operator==(const CellCycle&) const = default;
};

struct PeriodicNetworkSpec {
    struct Escape {
        int from = 0;
        EscapeChainSpec chain;
        int to = 0;
        bool operator==(const Escape&) const = default;
    };
    std::vector<CellCycle> cells;
    std::vector<Escape> escapes;
    bool operator==(const PeriodicNetworkSpec&) const = default;
};

struct Diagnostic {
    std::string location;
    std::string message;
};

// Structural validation; returns an empty list iff all invariants hold.
inline std::vector<Diagnostic> validate_network(const PeriodicNetworkSpec& net) {
    std::vector<Diagnostic> diags;
    if (net.cells.empty()) diags.push_back({"cells", "no cells"});
    for (size_t i = 0; i < net.cells.size(); ++i) {
        const auto& cell = net.cells[i];
        std::string loc = "cells[" + std::to_string(i) + "]";
        if (cell.saddles.empty()) diags.push_back({loc, "cycle length must be >= 1"});
        for (size_t j = 0; j < cell.saddles.size(); ++j) {
            const auto& s = cell.saddles[j];
            if (!(s.lambda > 0.0) || !(s.mu > 0.0))
                diags.push_back({loc + ".saddles[" + std::to_string(j) + "]",
                                 "lambda and mu must be > 0"});
        }
    }
    const int ncells = static_cast<int>(net.cells.size());
    for (size_t e = 0; e < net.escapes.size(); ++e) {
        const auto& esc = net.escapes[e];
        std::string loc = "escapes[" + std::to_string(e) + "]";
        bool from_ok = esc.from >= 0 && esc.from < ncells;
        bool to_ok = esc.to >= 0 && esc.to < ncells;
        if (!from_ok) diags.push_back({loc + ".from", "cell index out of range"});
        if (!to_ok) diags.push_back({loc + ".to", "cell index out of range"});
        try {
            validate(esc.chain);
        } catch (const ValidationError& err) {
            diags.push_back({loc + ".chain", err.what()});
        }
        if (from_ok) {
            const auto& boundary = net.cells[static_cast<size_t>(esc.from)].saddles;
            for (size_t j = 0; j < esc.chain.saddles.size(); ++j) {
                const auto& s = esc.chain.saddles[j];
                bool found = false;
                for (const auto& b : boundary)
                    if (b == s) { found = true; break; }
                if (!found)
                    diags.push_back({loc + ".chain.saddles[" + std::to_string(j) + "]",
                                     "saddle is not on the source cell's boundary"});
            }
        }
    }
    return diags;
}

// Rectified saddle box [-R, R] x [-L', L'] with entrance height L.
struct SaddleBox {
    double R = 1.0;
    double L = 0.5;
    double L_prime = 1.0;
};

inline void validate(const SaddleBox& b) {
    if (!(b.R >= 1.0)) throw ValidationError("box: R must be >= 1");
    if (!(b.L_prime >= 1.0)) throw ValidationError("box: L' must be >= 1");
    if (!(b.L > 0.0 && b.L < b.L_prime))
        throw ValidationError("box: L must satisfy 0 < L < L'");
}

}  // namespace hetlab
