#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hetlab/cli.hpp"

using namespace hetlab;

namespace {

int run(std::vector<std::string> args) {
    std::vector<const char*> argv;
    argv.push_back("hetlab");
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli::dispatch(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempFile {
    std::string path;
    explicit TempFile(std::string p, const std::string& content = "") : path(std::move(p)) {
        if (!content.empty()) {
            std::ofstream out(path);
            out << content;
        }
    }
    ~TempFile() { std::remove(path.c_str()); }
};

const char* kTwoSaddle =
    R"({"alpha0":1.0,"saddles":[{"lambda":1.0,"mu":0.5},{"lambda":1.0,"mu":1.0}],"wrong_turn":true})";
const char* kModel = R"({"lambda":1.0,"mu":0.5,"R":1.0,"L":0.5,"L_prime":1.0})";

}  // namespace

TEST_CASE("cli analyze") {
    TempFile chain("cli_chain.json", kTwoSaddle);
    SECTION("prints the table and report, exit 0") {
        TempFile out("cli_report.json");
        TempFile mf("cli_report.json.manifest.json");
        CHECK(run({"analyze", "--chain", chain.path, "--out", out.path}) == 0);
        auto json = slurp(out.path);
        CHECK(json.find("\"regime\":\"PowerLaw\"") != std::string::npos);
        CHECK(json.find("\"theta\":1") != std::string::npos);
        auto manifest = slurp(mf.path);
        CHECK(manifest.find("\"subcommand\":\"analyze\"") != std::string::npos);
        CHECK(manifest.find("fnv1a64:") != std::string::npos);
    }
    SECTION("byte-identical reports across runs") {
        TempFile out1("cli_rep1.json"), out2("cli_rep2.json");
        TempFile m1("cli_rep1.json.manifest.json"), m2("cli_rep2.json.manifest.json");
        REQUIRE(run({"analyze", "--chain", chain.path, "--out", out1.path}) == 0);
        REQUIRE(run({"analyze", "--chain", chain.path, "--out", out2.path}) == 0);
        CHECK(slurp(out1.path) == slurp(out2.path));
    }
    SECTION("missing file is exit 1") {
        CHECK(run({"analyze", "--chain", "no_such_file.json"}) == 1);
    }
    SECTION("invalid chain is exit 1") {
        TempFile bad("cli_bad.json", R"({"alpha0":0.0,"saddles":[{"lambda":1,"mu":1}]})");
        CHECK(run({"analyze", "--chain", bad.path}) == 1);
    }
}

TEST_CASE("cli predict") {
    TempFile model("cli_model.json", kModel);
    SECTION("exit direction") {
        CHECK(run({"predict", "--model", model.path, "--prediction", "exit-direction", "--x",
                   "1.0"}) == 0);
    }
    SECTION("prefactor reproduces the frozen constant") {
        // captured via a file by rerunning analyze-level API; here just exercise exit code
        CHECK(run({"predict", "--model", model.path, "--prediction", "prefactor", "--lambda2",
                   "1.0"}) == 0);
    }
    SECTION("typical law and tails") {
        CHECK(run({"predict", "--model", model.path, "--prediction", "typical-law", "--alpha",
                   "1.0", "--x", "0.5"}) == 0);
        CHECK(run({"predict", "--model", model.path, "--prediction", "exit-time-tail", "--x",
                   "0.0", "--alpha", "1.0", "--theta", "0.0", "--beta", "1.5", "--c", "0.0",
                   "--r", "1.0", "--eps", "0.04"}) == 0);
        CHECK(run({"predict", "--model", model.path, "--prediction", "local-limit", "--x", "0.0",
                   "--a", "0.0", "--b", "1.0", "--beta", "0.75"}) == 0);
    }
    SECTION("unknown prediction is exit 1") {
        CHECK(run({"predict", "--model", model.path, "--prediction", "nope"}) == 1);
    }
    SECTION("bad tail parameters are exit 1") {
        CHECK(run({"predict", "--model", model.path, "--prediction", "exit-time-tail", "--theta",
                   "2.0"}) == 1);
    }
}

TEST_CASE("cli simulate") {
    TempFile chain("cli_sim_chain.json", kTwoSaddle);
    SECTION("small run exits 0") {
        CHECK(run({"simulate", "--chain", chain.path, "--eps", "0.3", "--samples", "200",
                   "--seed", "5", "--threads", "2"}) == 0);
    }
    SECTION("records per-path CSV deterministically") {
        TempFile csv1("cli_paths1.csv"), csv2("cli_paths2.csv");
        TempFile m1("cli_paths1.csv.manifest.json"), m2("cli_paths2.csv.manifest.json");
        REQUIRE(run({"simulate", "--chain", chain.path, "--eps", "0.3", "--samples", "100",
                     "--seed", "5", "--threads", "1", "--record-paths", csv1.path}) == 0);
        REQUIRE(run({"simulate", "--chain", chain.path, "--eps", "0.3", "--samples", "100",
                     "--seed", "5", "--threads", "2", "--record-paths", csv2.path}) == 0);
        auto a = slurp(csv1.path);
        CHECK(a == slurp(csv2.path));  // thread count does not change the bytes
        CHECK(a.rfind("path_id,escaped,total_time,exit_1,side_1,loc_1,exit_2,side_2,loc_2\n", 0) ==
              0);
    }
    SECTION("HETLAB_SEED overrides the flag") {
        TempFile csv1("cli_env1.csv"), csv2("cli_env2.csv"), csv3("cli_env3.csv");
        TempFile m1("cli_env1.csv.manifest.json"), m2("cli_env2.csv.manifest.json"),
            m3("cli_env3.csv.manifest.json");
        REQUIRE(run({"simulate", "--chain", chain.path, "--eps", "0.3", "--samples", "50",
                     "--seed", "5", "--record-paths", csv1.path}) == 0);
        setenv("HETLAB_SEED", "999", 1);
        REQUIRE(run({"simulate", "--chain", chain.path, "--eps", "0.3", "--samples", "50",
                     "--seed", "5", "--record-paths", csv2.path}) == 0);
        unsetenv("HETLAB_SEED");
        REQUIRE(run({"simulate", "--chain", chain.path, "--eps", "0.3", "--samples", "50",
                     "--seed", "999", "--record-paths", csv3.path}) == 0);
        CHECK(slurp(csv1.path) != slurp(csv2.path));
        CHECK(slurp(csv2.path) == slurp(csv3.path));
    }
    SECTION("zero samples is exit 1") {
        CHECK(run({"simulate", "--chain", chain.path, "--eps", "0.3", "--samples", "0"}) == 1);
    }
    SECTION("all-timeout is a runtime error, exit 2") {
        CHECK(run({"simulate", "--chain", chain.path, "--eps", "0.3", "--samples", "20",
                   "--max-time", "0.002"}) == 2);
    }
}

TEST_CASE("cli fit") {
    TempFile chain("cli_fit_chain.json", kTwoSaddle);
    SECTION("writes the CSV table, the plot, and a manifest") {
        TempFile csv("cli_fit.csv"), svg("cli_fit.svg");
        TempFile mf("cli_fit.csv.manifest.json");
        REQUIRE(run({"fit", "--chain", chain.path, "--eps-ladder", "0.4,0.3,0.2", "--samples",
                     "400", "--seed", "3", "--threads", "2", "--out", csv.path, "--plot",
                     svg.path}) == 0);
        auto table = slurp(csv.path);
        CHECK(table.rfind("eps,hits,n,p_hat,ci_low,ci_high,timeouts\n", 0) == 0);
        // three data rows
        int lines = 0;
        for (char ch : table)
            if (ch == '\n') ++lines;
        CHECK(lines == 4);
        auto plot = slurp(svg.path);
        CHECK(plot.rfind("<svg", 0) == 0);
        CHECK(plot.find("manifest") != std::string::npos);
        CHECK(slurp(mf.path).find("\"subcommand\":\"fit\"") != std::string::npos);
        // reruns are byte-identical
        TempFile csv2("cli_fit2.csv");
        TempFile mf2("cli_fit2.csv.manifest.json");
        REQUIRE(run({"fit", "--chain", chain.path, "--eps-ladder", "0.4,0.3,0.2", "--samples",
                     "400", "--seed", "3", "--threads", "1", "--out", csv2.path}) == 0);
        CHECK(slurp(csv2.path) == table);
    }
    SECTION("bad ladder is exit 1") {
        TempFile csv("cli_fit_bad.csv");
        CHECK(run({"fit", "--chain", chain.path, "--eps-ladder", "0.1,0.2", "--samples", "400",
                   "--out", csv.path}) == 1);
        CHECK(run({"fit", "--chain", chain.path, "--eps-ladder", "0.2,0.1", "--samples", "0",
                   "--out", csv.path}) == 1);
        CHECK(run({"fit", "--chain", chain.path, "--eps-ladder", "0.2,zebra", "--samples", "400",
                   "--out", csv.path}) == 1);
    }
}

TEST_CASE("cli hierarchy") {
    const std::string network = R"({
      "cells":[{"saddles":[{"lambda":1,"mu":0.5},{"lambda":1,"mu":0.6},{"lambda":1,"mu":0.8},{"lambda":2,"mu":10}]},
               {"saddles":[{"lambda":1,"mu":0.5},{"lambda":1,"mu":0.6},{"lambda":1,"mu":0.8},{"lambda":2,"mu":10}]}],
      "escapes":[{"from":0,"to":1,"chain":{"alpha0":1.0,"saddles":[{"lambda":1,"mu":0.5},{"lambda":1,"mu":0.6}]}},
                 {"from":1,"to":0,"chain":{"alpha0":1.0,"saddles":[{"lambda":1,"mu":0.5},{"lambda":1,"mu":0.6}]}}]
    })";
    TempFile net("cli_net.json", network);
    SECTION("report and dot file") {
        TempFile out("cli_hier.json"), dot("cli_hier.dot");
        TempFile mf("cli_hier.json.manifest.json");
        REQUIRE(run({"hierarchy", "--network", net.path, "--out", out.path, "--dot", dot.path}) ==
                0);
        auto json = slurp(out.path);
        CHECK(json.find("\"heuristic\":true") != std::string::npos);
        CHECK(slurp(dot.path).find("digraph") != std::string::npos);
    }
    SECTION("invalid network is exit 1") {
        TempFile bad("cli_bad_net.json", R"({"cells":[],"escapes":[]})");
        CHECK(run({"hierarchy", "--network", bad.path}) == 1);
    }
}

TEST_CASE("cli misc") {
    CHECK(run({"--version"}) == 0);
    CHECK(run({}) == 1);              // missing subcommand
    CHECK(run({"frobnicate"}) == 1);  // unknown subcommand
}
