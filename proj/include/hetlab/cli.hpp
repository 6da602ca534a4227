#pragma once

// Single-binary command dispatch: analyze / predict / simulate / fit /
// hierarchy. Exit codes: 0 success, 1 validation or input error, 2 runtime
// error (timeouts, quadrature, insufficient data). HETLAB_SEED overrides
// --seed everywhere.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hetlab/errors.hpp"
#include "hetlab/exponents.hpp"
#include "hetlab/hierarchy.hpp"
#include "hetlab/io.hpp"
#include "hetlab/kernel.hpp"
#include "hetlab/manifest.hpp"
#include "hetlab/montecarlo.hpp"
#include "hetlab/sde.hpp"
#include "hetlab/svg.hpp"
#include "hetlab/version.hpp"

namespace hetlab::cli {

namespace detail {

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path);
    out << content;
}

inline std::uint64_t resolve_seed(std::uint64_t flag_seed) {
    if (const char* env = std::getenv("HETLAB_SEED")) {
        try {
            return static_cast<std::uint64_t>(std::stoull(env));
        } catch (...) {
            throw ValidationError("HETLAB_SEED is not an unsigned integer");
        }
    }
    return flag_seed;
}

inline std::string fmt17(double v) { return jout::num(v); }

struct ModelSpec {
    Saddle saddle;
    SaddleBox box;
};

inline ModelSpec load_model(const std::string& path) {
    auto j = hetlab::detail::parse_json(read_file(path), "model spec");
    ModelSpec m;
    m.saddle = hetlab::detail::parse_saddle(j, "model");
    if (j.contains("R")) m.box.R = j["R"].get<double>();
    if (j.contains("L")) m.box.L = j["L"].get<double>();
    if (j.contains("L_prime")) m.box.L_prime = j["L_prime"].get<double>();
    validate(m.saddle, "model saddle");
    validate(m.box);
    return m;
}

inline std::string csv_of_table(const std::vector<EstimateRow>& rows) {
    std::string csv = "eps,hits,n,p_hat,ci_low,ci_high,timeouts\n";
    for (const auto& r : rows) {
        csv += fmt17(r.eps) + "," + std::to_string(r.hits) + "," + std::to_string(r.n) + "," +
               fmt17(r.p_hat) + "," + fmt17(r.ci_low) + "," + fmt17(r.ci_high) + "," +
               std::to_string(r.timeouts) + "\n";
    }
    return csv;
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

}  // namespace detail

inline int dispatch(int argc, const char* const* argv) {
    CLI::App app{"hetlab: exponent calculus and Monte Carlo verification for noisy heteroclinic cell escapes"};
    app.set_version_flag("--version", std::string("hetlab ") + kVersion);
    app.require_subcommand(1);

    // ---- analyze ----------------------------------------------------------
    auto* analyze = app.add_subcommand("analyze", "classify a cell-escape chain");
    std::string an_chain, an_out;
    analyze->add_option("--chain", an_chain, "chain JSON file")->required();
    analyze->add_option("--out", an_out, "write the report JSON here");

    // ---- predict ----------------------------------------------------------
    auto* predict = app.add_subcommand("predict", "closed-form saddle-kernel predictions");
    std::string pr_model, pr_name;
    double pr_x = 0.0, pr_alpha = 1.0, pr_theta = 0.0, pr_beta = 1.0, pr_c = 0.0, pr_r = 1.0;
    double pr_a = 0.0, pr_b = 1.0, pr_lambda2 = 0.0, pr_s = 0.0, pr_xi0 = 0.0;
    std::optional<double> pr_eps;
    predict->add_option("--model", pr_model, "saddle/box JSON file")->required();
    predict
        ->add_option("--prediction", pr_name,
                     "exit-time-tail | local-limit | exit-direction | typical-law | prefactor")
        ->required();
    predict->add_option("--x", pr_x, "rescaled entrance coordinate");
    predict->add_option("--alpha", pr_alpha, "entrance scaling exponent");
    predict->add_option("--theta", pr_theta, "strip exponent (exit-time-tail)");
    predict->add_option("--beta", pr_beta, "target scale exponent");
    predict->add_option("--c", pr_c, "time offset (exit-time-tail)");
    predict->add_option("--r", pr_r, "strip half-width (exit-time-tail)");
    predict->add_option("--a", pr_a, "window lower end");
    predict->add_option("--b", pr_b, "window upper end");
    predict->add_option("--lambda2", pr_lambda2, "expansion rate of the next saddle (prefactor)");
    predict->add_option("--s", pr_s, "direction variance at the next saddle (prefactor)");
    predict->add_option("--xi0", pr_xi0, "entrance point mass (prefactor)");
    double pr_eps_val = 0.0;
    auto* pr_eps_opt = predict->add_option("--eps", pr_eps_val, "evaluate the prediction at this eps");

    // ---- simulate ---------------------------------------------------------
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo chain escapes at one eps");
    std::string si_chain, si_record;
    double si_eps = 0.1, si_dt = 0.0, si_xi0 = 0.0, si_travel = -1.0;
    std::uint64_t si_samples = 1000, si_seed = 1;
    int si_threads = 1;
    std::string si_transport = "default";
    simulate->add_option("--chain", si_chain, "chain JSON file")->required();
    simulate->add_option("--eps", si_eps, "noise magnitude")->required();
    simulate->add_option("--samples", si_samples, "number of paths")->required();
    simulate->add_option("--dt", si_dt, "time step (default 1e-3 * min(1/lambda, 1/mu))");
    simulate->add_option("--seed", si_seed, "master seed");
    simulate->add_option("--threads", si_threads, "worker threads");
    simulate->add_option("--record-paths", si_record, "stream per-path records to this CSV");
    simulate->add_option("--xi0", si_xi0, "constant entrance value xi_0");
    simulate->add_option("--transport", si_transport, "identity | default (a=1,b=1,T=1)");
    simulate->add_option("--travel-time", si_travel, "override transport travel time");
    double si_max_time = 0.0;
    simulate->add_option("--max-time", si_max_time, "per-path time budget (default regime-based)");

    // ---- fit --------------------------------------------------------------
    auto* fitcmd = app.add_subcommand("fit", "eps ladder, CSV table, log-log power-law fit");
    std::string fi_chain, fi_ladder, fi_out, fi_plot;
    double fi_dt = 0.0, fi_xi0 = 0.0;
    std::uint64_t fi_samples = 0, fi_seed = 1;
    int fi_threads = 1;
    std::string fi_transport = "default";
    fitcmd->add_option("--chain", fi_chain, "chain JSON file")->required();
    fitcmd->add_option("--eps-ladder", fi_ladder, "comma-separated decreasing eps values")->required();
    fitcmd->add_option("--samples", fi_samples, "paths per rung")->required();
    fitcmd->add_option("--seed", fi_seed, "master seed");
    fitcmd->add_option("--dt", fi_dt, "time step");
    fitcmd->add_option("--threads", fi_threads, "worker threads");
    fitcmd->add_option("--out", fi_out, "CSV output path")->required();
    fitcmd->add_option("--plot", fi_plot, "SVG plot path");
    fitcmd->add_option("--xi0", fi_xi0, "constant entrance value xi_0");
    fitcmd->add_option("--transport", fi_transport, "identity | default");

    // ---- hierarchy --------------------------------------------------------
    auto* hier = app.add_subcommand("hierarchy", "timescale ladder for a periodic network");
    std::string hi_net, hi_out, hi_dot;
    hier->add_option("--network", hi_net, "network JSON file")->required();
    hier->add_option("--out", hi_out, "report JSON path");
    hier->add_option("--dot", hi_dot, "cluster-merge tree DOT path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {  // --help / --version
            return app.exit(e);
        }
        std::cerr << "argument error: " << e.what() << "\n";
        return 1;
    }

    detail::Timer timer;
    try {
        if (*analyze) {
            auto spec = load_chain_spec(an_chain);
            auto rep = classify_escape(spec);
            std::cout << report_to_table(rep);
            const std::string json = report_to_json(rep);
            if (!an_out.empty()) {
                detail::write_file(an_out, json + "\n");
                RunManifest mf;
                mf.subcommand = "analyze";
                mf.config.emplace_back("chain", an_chain);
                mf.inputs.emplace_back(an_chain, digest_hex(read_file(an_chain)));
                mf.outputs.push_back(an_out);
                mf.wall_time_s = timer.seconds();
                detail::write_file(an_out + ".manifest.json", mf.to_json() + "\n");
            } else {
                std::cout << json << "\n";
            }
            return 0;
        }

        if (*predict) {
            auto model = detail::load_model(pr_model);
            if (*pr_eps_opt) pr_eps = pr_eps_val;
            const auto [c1, c2] = model_variances(model.saddle);
            jout::Writer w;
            w.begin_object();
            w.key("prediction"); w.value(pr_name);
            w.key("lambda"); w.value(model.saddle.lambda);
            w.key("mu"); w.value(model.saddle.mu);
            w.key("rho"); w.value(model.saddle.rho());
            w.key("c1"); w.value(c1);
            w.key("c2"); w.value(c2);
            if (pr_name == "exit-direction") {
                w.key("x"); w.value(pr_x);
                w.key("value"); w.value(exit_direction_prob(pr_x, c1));
            } else if (pr_name == "exit-time-tail") {
                auto t = exit_time_tail(pr_x, pr_alpha, pr_theta, pr_beta, pr_c, pr_r, model.saddle);
                w.key("x"); w.value(pr_x);
                w.key("alpha"); w.value(pr_alpha);
                w.key("theta"); w.value(pr_theta);
                w.key("beta"); w.value(pr_beta);
                w.key("offset_c"); w.value(pr_c);
                w.key("r"); w.value(pr_r);
                w.key("epsilon_exponent"); w.value(t.epsilon_exponent);
                w.key("coefficient"); w.value(t.coefficient);
                w.key("boundary_case"); w.value(t.boundary);
                if (pr_eps) { w.key("value_at_eps"); w.value(t.value(*pr_eps)); }
            } else if (pr_name == "local-limit") {
                const double coeff =
                    local_limit_prediction(pr_x, pr_a, pr_b, pr_beta, model.saddle, model.box);
                w.key("x"); w.value(pr_x);
                w.key("a"); w.value(pr_a);
                w.key("b"); w.value(pr_b);
                w.key("beta"); w.value(pr_beta);
                w.key("epsilon_exponent"); w.value(pr_beta / model.saddle.rho() - 1.0);
                w.key("coefficient"); w.value(coeff);
                if (pr_eps) {
                    w.key("value_at_eps");
                    w.value(coeff * std::pow(*pr_eps, pr_beta / model.saddle.rho() - 1.0));
                }
            } else if (pr_name == "typical-law") {
                auto law = typical_exit_law(pr_alpha, pr_x, model.saddle, model.box);
                w.key("alpha"); w.value(pr_alpha);
                w.key("x"); w.value(pr_x);
                w.key("case"); w.value(exit_law_kind_name(law.kind));
                w.key("alpha_prime"); w.value(law.alpha_prime);
                w.key("c"); w.value(law.c);
                w.key("branch_prob"); w.value(law.branch_prob);
                w.key("has_density"); w.value(law.has_density);
                w.key("point_mass"); w.value(law.point_mass);
                if (law.point_mass) { w.key("point_value"); w.value(law.point_value); }
            } else if (pr_name == "prefactor") {
                double s = pr_s;
                if (s <= 0.0) {
                    if (pr_lambda2 <= 0.0)
                        throw ValidationError("prefactor: provide --s or --lambda2");
                    s = 1.0 / (2.0 * pr_lambda2);
                }
                NuMeasure nu = nu_for(model.saddle, model.box, 1.0);
                const double h =
                    two_saddle_prefactor(c1, s, nu, EntranceLaw::point_mass(pr_xi0));
                w.key("s"); w.value(s);
                w.key("xi0"); w.value(pr_xi0);
                w.key("value"); w.value(h);
            } else {
                throw ValidationError("unknown prediction name: " + pr_name);
            }
            w.end_object();
            std::cout << w.out << "\n";
            return 0;
        }

        if (*simulate) {
            const std::uint64_t seed = detail::resolve_seed(si_seed);
            if (si_samples == 0) throw ValidationError("simulate: samples must be > 0");
            auto spec = load_chain_spec(si_chain);
            ChainConfig cfg;
            cfg.spec = spec;
            cfg.epsilon = si_eps;
            cfg.dt = si_dt;
            cfg.max_time = si_max_time;
            cfg.xi0 = XiLaw::constant(si_xi0);
            TransportMap base = si_transport == "identity" ? TransportMap::identity() : TransportMap{};
            if (si_transport != "identity" && si_transport != "default")
                throw ValidationError("simulate: --transport must be identity or default");
            if (si_travel >= 0.0) base.travel_time = si_travel;
            cfg.maps.assign(static_cast<size_t>(spec.n()), base);
            ChainSimulator sim(cfg);

            std::string csv;
            std::uint64_t hits = 0, timeouts = 0;
            if (!si_record.empty()) {
                csv = "path_id,escaped,total_time";
                for (int k = 1; k <= spec.n(); ++k)
                    csv += ",exit_" + std::to_string(k) + ",side_" + std::to_string(k) + ",loc_" +
                           std::to_string(k);
                csv += "\n";
                struct Local {
                    std::uint64_t hits = 0, timeouts = 0;
                    std::string csv;
                };
                auto locals = parallel_paths<Local>(
                    si_samples, seed, si_threads, [&](std::uint64_t i, RngStream& rng, Local& st) {
                        auto out = sim.run(rng);
                        if (out.timeout) ++st.timeouts;
                        if (out.escaped) ++st.hits;
                        st.csv += std::to_string(i) + "," + (out.escaped ? "1" : "0") + "," +
                                  detail::fmt17(out.total_time);
                        for (int k = 0; k < spec.n(); ++k) {
                            if (k < static_cast<int>(out.exits.size())) {
                                const auto& e = out.exits[static_cast<size_t>(k)];
                                st.csv += "," + detail::fmt17(e.time) + "," +
                                          exit_side_name(e.side) + "," + detail::fmt17(e.location);
                            } else {
                                st.csv += ",,,";
                            }
                        }
                        st.csv += "\n";
                    });
                for (auto& l : locals) {
                    hits += l.hits;
                    timeouts += l.timeouts;
                    csv += l.csv;
                }
            } else {
                auto stats = run_chain_paths(sim, si_samples, seed, si_threads, false);
                hits = stats.hits;
                timeouts = stats.timeouts;
            }
            if (timeouts == si_samples) throw AllTimeout("simulate: every path timed out");
            auto ci = wilson_interval(hits, si_samples);
            jout::Writer w;
            w.begin_object();
            w.key("eps"); w.value(si_eps);
            w.key("samples"); w.value(static_cast<unsigned long long>(si_samples));
            w.key("hits"); w.value(static_cast<unsigned long long>(hits));
            w.key("timeouts"); w.value(static_cast<unsigned long long>(timeouts));
            w.key("p_hat"); w.value(static_cast<double>(hits) / static_cast<double>(si_samples));
            w.key("ci_low"); w.value(ci.low);
            w.key("ci_high"); w.value(ci.high);
            w.key("dt"); w.value(sim.dt());
            w.key("max_time"); w.value(sim.max_time());
            w.key("seed"); w.value(static_cast<unsigned long long>(seed));
            w.end_object();
            std::cout << w.out << "\n";
            if (!si_record.empty()) {
                detail::write_file(si_record, csv);
                RunManifest mf;
                mf.subcommand = "simulate";
                mf.seed = seed;
                mf.config.emplace_back("chain", si_chain);
                mf.config.emplace_back("eps", detail::fmt17(si_eps));
                mf.config.emplace_back("samples", std::to_string(si_samples));
                mf.config.emplace_back("dt", detail::fmt17(sim.dt()));
                mf.config.emplace_back("threads", std::to_string(si_threads));
                mf.config.emplace_back("xi0", detail::fmt17(si_xi0));
                mf.config.emplace_back("transport", si_transport);
                mf.inputs.emplace_back(si_chain, digest_hex(read_file(si_chain)));
                mf.outputs.push_back(si_record);
                mf.wall_time_s = timer.seconds();
                detail::write_file(si_record + ".manifest.json", mf.to_json() + "\n");
            }
            return 0;
        }

        if (*fitcmd) {
            const std::uint64_t seed = detail::resolve_seed(fi_seed);
            if (fi_samples == 0) throw ValidationError("fit: samples must be > 0");
            auto spec = load_chain_spec(fi_chain);
            ChainConfig cfg;
            cfg.spec = spec;
            cfg.xi0 = XiLaw::constant(fi_xi0);
            TransportMap base = fi_transport == "identity" ? TransportMap::identity() : TransportMap{};
            if (fi_transport != "identity" && fi_transport != "default")
                throw ValidationError("fit: --transport must be identity or default");
            cfg.maps.assign(static_cast<size_t>(spec.n()), base);

            LadderConfig ladder;
            std::stringstream ss(fi_ladder);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                try {
                    size_t used = 0;
                    double v = std::stod(tok, &used);
                    if (used != tok.size()) throw std::invalid_argument(tok);
                    ladder.eps_values.push_back(v);
                } catch (const std::exception&) {
                    throw ValidationError("fit: bad --eps-ladder entry '" + tok + "'");
                }
            }
            ladder.samples_per_eps = fi_samples;
            ladder.seed = seed;
            ladder.dt = fi_dt;
            ladder.threads = fi_threads;
            validate(ladder);

            auto table = run_ladder(cfg, ladder);
            detail::write_file(fi_out, detail::csv_of_table(table.rows));

            auto rep = classify_escape(spec);
            std::optional<double> theta_ref = rep.theta;
            if (!fi_plot.empty())
                detail::write_file(fi_plot, svg_loglog_fit(table.rows, table.fit, theta_ref,
                                                           fi_out + ".manifest.json"));

            jout::Writer w;
            w.begin_object();
            w.key("rows"); w.value(static_cast<unsigned long long>(table.rows.size()));
            w.key("predicted_theta");
            if (theta_ref) w.value(*theta_ref); else w.null();
            if (table.fit) {
                w.key("theta_hat"); w.value(table.fit->theta_hat);
                w.key("h_hat"); w.value(table.fit->h_hat);
                w.key("stderr_theta"); w.value(table.fit->stderr_theta);
                w.key("r_squared"); w.value(table.fit->r_squared);
                w.key("rows_used"); w.value(table.fit->rows_used);
            } else {
                w.key("theta_hat"); w.null();
            }
            w.end_object();
            std::cout << w.out << "\n";

            RunManifest mf;
            mf.subcommand = "fit";
            mf.seed = seed;
            mf.config.emplace_back("chain", fi_chain);
            mf.config.emplace_back("eps_ladder", fi_ladder);
            mf.config.emplace_back("samples", std::to_string(fi_samples));
            mf.config.emplace_back("dt", detail::fmt17(fi_dt));
            mf.config.emplace_back("threads", std::to_string(fi_threads));
            mf.config.emplace_back("xi0", detail::fmt17(fi_xi0));
            mf.config.emplace_back("transport", fi_transport);
            mf.inputs.emplace_back(fi_chain, digest_hex(read_file(fi_chain)));
            mf.outputs.push_back(fi_out);
            if (!fi_plot.empty()) mf.outputs.push_back(fi_plot);
            mf.wall_time_s = timer.seconds();
            detail::write_file(fi_out + ".manifest.json", mf.to_json() + "\n");
            return 0;
        }

        if (*hier) {
            auto net = load_network_spec(hi_net);
            auto diags = validate_network(net);
            if (!diags.empty()) {
                for (const auto& d : diags)
                    std::cerr << "invalid network: " << d.location << ": " << d.message << "\n";
                return 1;
            }
            auto rep = timescale_ladder(net);
            const std::string json = hierarchy_to_json(rep);
            if (!hi_out.empty()) {
                detail::write_file(hi_out, json + "\n");
                RunManifest mf;
                mf.subcommand = "hierarchy";
                mf.config.emplace_back("network", hi_net);
                mf.inputs.emplace_back(hi_net, digest_hex(read_file(hi_net)));
                mf.outputs.push_back(hi_out);
                if (!hi_dot.empty()) mf.outputs.push_back(hi_dot);
                mf.wall_time_s = timer.seconds();
                detail::write_file(hi_out + ".manifest.json", mf.to_json() + "\n");
            } else {
                std::cout << json << "\n";
            }
            if (!hi_dot.empty()) detail::write_file(hi_dot, hierarchy_to_dot(rep));
            return 0;
        }
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const RegimeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const GeometryError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const UnstableCycle& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const KappaUndefined& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::runtime_error& e) {
        // QuadratureError, AllTimeout, InsufficientData, InsufficientEscapes
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace hetlab::cli
