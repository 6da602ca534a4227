#pragma once

// Timescale-ladder analysis for periodic cell networks: per-escape exponents,
// union-find cluster merging across sorted theta levels, and limiting
// invariant-measure weights on the saddles of stable cycles. The construction
// follows a heuristic picture; all outputs are labeled as such.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "hetlab/errors.hpp"
#include "hetlab/exponents.hpp"
#include "hetlab/json_out.hpp"
#include "hetlab/saddle.hpp"

namespace hetlab {

struct CycleWeights {
    std::vector<double> alpha_enter;  // periodic entering exponent per saddle slot
    std::vector<double> weights;      // normalized alpha_{i-1} / lambda_i
};

// Iterates alpha -> (alpha * rho) ^ 1 around the cycle until the entering
// exponents repeat with a clamp present; weights are alpha_enter / lambda
// normalized. Cycles whose exponents decay with no clamp are rejected.
inline CycleWeights cycle_invariant_weights(const CellCycle& cycle) {
    const size_t m = cycle.saddles.size();
    if (m == 0) throw ValidationError("cycle_invariant_weights: empty cycle");
    for (size_t i = 0; i < m; ++i) validate(cycle.saddles[i], "cycle saddle " + std::to_string(i));

    // Start clamped at slot 0 and iterate; a recurring clamp position pins the
    // periodic orbit because the post-clamp trajectory is deterministic.
    std::vector<double> enter(m, 0.0);
    double alpha = 1.0;
    size_t pos = 0;
    std::vector<char> clamp_seen(m, 0);
    bool periodic = false;
    const size_t max_steps = 16 * m + 64;
    for (size_t step = 0; step < max_steps; ++step) {
        if (alpha == 1.0) {
            if (clamp_seen[pos]) {
                periodic = true;
                break;
            }
            clamp_seen[pos] = 1;
        }
        enter[pos] = alpha;
        alpha = std::min(alpha * cycle.saddles[pos].rho(), 1.0);
        pos = (pos + 1) % m;
    }
    if (!periodic)
        throw UnstableCycle(
            "cycle is unstable: entering exponents decay, no invariant weight vector of this form");
    // one more full loop from the recurring clamp records the periodic values
    for (size_t i = 0; i < m; ++i) {
        enter[pos] = alpha;
        alpha = std::min(alpha * cycle.saddles[pos].rho(), 1.0);
        pos = (pos + 1) % m;
    }
    CycleWeights out;
    out.alpha_enter = enter;
    out.weights.resize(m);
    double z = 0.0;
    for (size_t i = 0; i < m; ++i) {
        out.weights[i] = enter[i] / cycle.saddles[i].lambda;
        z += out.weights[i];
    }
    for (auto& w : out.weights) w /= z;
    return out;
}

namespace detail {
struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(static_cast<size_t>(n)) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    int find(int a) {
        while (parent[static_cast<size_t>(a)] != a) {
            parent[static_cast<size_t>(a)] = parent[static_cast<size_t>(parent[static_cast<size_t>(a)])];
            a = parent[static_cast<size_t>(a)];
        }
        return a;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[static_cast<size_t>(std::max(a, b))] = std::min(a, b);
    }
};
}  // namespace detail

struct HierarchyReport {
    struct WeightEntry {
        int cell = 0;
        int slot = 0;
        double weight = 0.0;
    };
    std::vector<double> escape_thetas;                      // per escape edge
    std::vector<double> levels;                             // sorted distinct thetas
    std::vector<std::vector<std::vector<int>>> partitions;  // base partition + one per level
    std::vector<std::vector<std::vector<WeightEntry>>> weights;  // aligned with partitions
};

// Builds the ladder: every escape must classify as PowerLaw; distinct theta
// values (1e-9 merge tolerance) define the levels; clusters at a level are the
// union-find closure of all escapes with theta <= level. Cluster weights are
// the equal mixture of member-cycle weight vectors (heuristic default).
inline HierarchyReport timescale_ladder(const PeriodicNetworkSpec& net) {
    auto diags = validate_network(net);
    if (!diags.empty())
        throw ValidationError("timescale_ladder: invalid network: " + diags.front().location +
                              ": " + diags.front().message);
    const int ncells = static_cast<int>(net.cells.size());
    HierarchyReport rep;
    for (const auto& esc : net.escapes) {
        auto r = classify_escape(esc.chain);
        if (r.regime != Regime::PowerLaw)
            throw RegimeError("timescale_ladder: every escape must classify as PowerLaw; got " +
                              std::string(regime_name(r.regime)));
        rep.escape_thetas.push_back(*r.theta);
    }
    std::vector<double> sorted = rep.escape_thetas;
    std::sort(sorted.begin(), sorted.end());
    const double tol = 1e-9;
    for (double t : sorted)
        if (rep.levels.empty() || t > rep.levels.back() + tol) rep.levels.push_back(t);

    std::vector<CycleWeights> cycle_w;
    cycle_w.reserve(net.cells.size());
    for (const auto& cell : net.cells) cycle_w.push_back(cycle_invariant_weights(cell));

    auto snapshot = [&](detail::UnionFind& uf) {
        std::vector<std::vector<int>> clusters;
        std::vector<int> root_index(static_cast<size_t>(ncells), -1);
        for (int c = 0; c < ncells; ++c) {
            int r = uf.find(c);
            if (root_index[static_cast<size_t>(r)] < 0) {
                root_index[static_cast<size_t>(r)] = static_cast<int>(clusters.size());
                clusters.emplace_back();
            }
            clusters[static_cast<size_t>(root_index[static_cast<size_t>(r)])].push_back(c);
        }
        std::vector<std::vector<HierarchyReport::WeightEntry>> wts;
        for (const auto& cl : clusters) {
            std::vector<HierarchyReport::WeightEntry> entries;
            const double mix = 1.0 / static_cast<double>(cl.size());
            for (int cell : cl) {
                const auto& cw = cycle_w[static_cast<size_t>(cell)];
                for (size_t s = 0; s < cw.weights.size(); ++s)
                    entries.push_back({cell, static_cast<int>(s), mix * cw.weights[s]});
            }
            wts.push_back(std::move(entries));
        }
        rep.partitions.push_back(std::move(clusters));
        rep.weights.push_back(std::move(wts));
    };

    detail::UnionFind uf(ncells);
    snapshot(uf);  // base partition: singletons
    for (double level : rep.levels) {
        for (size_t e = 0; e < net.escapes.size(); ++e)
            if (rep.escape_thetas[e] <= level + tol)
                uf.unite(net.escapes[e].from, net.escapes[e].to);
        snapshot(uf);
    }
    return rep;
}

inline std::string hierarchy_to_json(const HierarchyReport& rep) {
    jout::Writer w;
    w.begin_object();
    w.key("heuristic"); w.value(true);
    w.key("note");
    w.value("cluster weights use an equal mixture of member-cycle weight vectors");
    w.key("escape_thetas"); w.array(rep.escape_thetas);
    w.key("levels"); w.array(rep.levels);
    w.key("partitions");
    w.begin_array();
    for (const auto& part : rep.partitions) {
        w.begin_array();
        for (const auto& cl : part) {
            w.begin_array();
            for (int c : cl) w.value(c);
            w.end_array();
        }
        w.end_array();
    }
    w.end_array();
    w.key("weights");
    w.begin_array();
    for (const auto& level : rep.weights) {
        w.begin_array();
        for (const auto& cluster : level) {
            w.begin_array();
            for (const auto& e : cluster) {
                w.begin_object();
                w.key("cell"); w.value(e.cell);
                w.key("slot"); w.value(e.slot);
                w.key("weight"); w.value(e.weight);
                w.end_object();
            }
            w.end_array();
        }
        w.end_array();
    }
    w.end_array();
    w.end_object();
    return w.out;
}

// Cluster-merge tree in DOT form: one node per (level, cluster).
inline std::string hierarchy_to_dot(const HierarchyReport& rep) {
    std::string out = "digraph hierarchy {\n  rankdir=BT;\n";
    auto node_name = [](size_t level, size_t idx) {
        return "L" + std::to_string(level) + "_" + std::to_string(idx);
    };
    for (size_t l = 0; l < rep.partitions.size(); ++l) {
        for (size_t c = 0; c < rep.partitions[l].size(); ++c) {
            std::string label = "{";
            for (size_t i = 0; i < rep.partitions[l][c].size(); ++i)
                label += (i ? "," : "") + std::to_string(rep.partitions[l][c][i]);
            label += "}";
            if (l > 0) {
                char buf[40];
                std::snprintf(buf, sizeof(buf), "%.6g", rep.levels[l - 1]);
                label += "\\ntheta<=" + std::string(buf);
            }
            out += "  " + node_name(l, c) + " [label=\"" + label + "\"];\n";
        }
    }
    for (size_t l = 0; l + 1 < rep.partitions.size(); ++l) {
        for (size_t c = 0; c < rep.partitions[l].size(); ++c) {
            const int rep_cell = rep.partitions[l][c].front();
            for (size_t c2 = 0; c2 < rep.partitions[l + 1].size(); ++c2) {
                const auto& cl2 = rep.partitions[l + 1][c2];
                if (std::find(cl2.begin(), cl2.end(), rep_cell) != cl2.end()) {
                    out += "  " + node_name(l, c) + " -> " + node_name(l + 1, c2) + ";\n";
                    break;
                }
            }
        }
    }
    out += "}\n";
    return out;
}

}  // namespace hetlab
