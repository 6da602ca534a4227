#pragma once

// Run manifests: every file-producing command writes <output>.manifest.json
// recording the subcommand, resolved configuration, seed, tool version, input
// digests, produced outputs and wall time. The wall-time field is the one
// value that varies between otherwise identical runs.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hetlab/json_out.hpp"
#include "hetlab/version.hpp"

namespace hetlab {

inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string digest_hex(const std::string& bytes) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

struct RunManifest {
    std::string subcommand;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> config;   // resolved flag -> value
    std::vector<std::pair<std::string, std::string>> inputs;   // path -> digest
    std::vector<std::string> outputs;
    double wall_time_s = 0.0;

    std::string to_json() const {
        jout::Writer w;
        w.begin_object();
        w.key("tool"); w.value("hetlab");
        w.key("version"); w.value(kVersion);
        w.key("subcommand"); w.value(subcommand);
        w.key("seed"); w.value(static_cast<unsigned long long>(seed));
        w.key("config");
        w.begin_object();
        for (const auto& [k, v] : config) {
            w.key(k);
            w.value(v);
        }
        w.end_object();
        w.key("inputs");
        w.begin_object();
        for (const auto& [k, v] : inputs) {
            w.key(k);
            w.value(v);
        }
        w.end_object();
        w.key("outputs");
        w.begin_array();
        for (const auto& o : outputs) w.value(o);
        w.end_array();
        w.key("wall_time_s"); w.value(wall_time_s);
        w.end_object();
        return w.out;
    }
};

}  // namespace hetlab
