#pragma once

// JSON ingestion and canonical serialization of chain/network specs.
// Parsing goes through nlohmann::json; output uses the deterministic writer.

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hetlab/errors.hpp"
#include "hetlab/json_out.hpp"
#include "hetlab/saddle.hpp"

namespace hetlab {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace detail {

inline nlohmann::json parse_json(const std::string& text, const std::string& what) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ParseError("malformed JSON in " + what);
    return j;
}

inline double get_number(const nlohmann::json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j[key].is_number())
        throw ParseError(where + ": missing numeric field '" + key + "'");
    return j[key].get<double>();
}

inline Saddle parse_saddle(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object()) throw ParseError(where + ": saddle must be an object");
    return Saddle{get_number(j, "lambda", where), get_number(j, "mu", where)};
}

inline EscapeChainSpec parse_chain(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object()) throw ParseError(where + ": chain must be an object");
    EscapeChainSpec spec;
    spec.alpha0 = get_number(j, "alpha0", where);
    if (!j.contains("saddles") || !j["saddles"].is_array())
        throw ParseError(where + ": missing 'saddles' array");
    for (size_t i = 0; i < j["saddles"].size(); ++i)
        spec.saddles.push_back(
            parse_saddle(j["saddles"][i], where + ".saddles[" + std::to_string(i) + "]"));
    if (j.contains("wrong_turn")) {
        if (!j["wrong_turn"].is_boolean()) throw ParseError(where + ": wrong_turn must be a bool");
        spec.wrong_turn = j["wrong_turn"].get<bool>();
    }
    if (j.contains("turn_signs")) {
        if (!j["turn_signs"].is_array()) throw ParseError(where + ": turn_signs must be an array");
        std::vector<int> signs;
        for (const auto& v : j["turn_signs"]) signs.push_back(v.get<int>());
        spec.turn_signs = std::move(signs);
    }
    return spec;
}

}  // namespace detail

inline EscapeChainSpec parse_chain_spec(const std::string& text) {
    auto spec = detail::parse_chain(detail::parse_json(text, "chain spec"), "chain");
    validate(spec);
    return spec;
}

inline EscapeChainSpec load_chain_spec(const std::string& path) {
    return parse_chain_spec(read_file(path));
}

inline PeriodicNetworkSpec parse_network_spec(const std::string& text) {
    auto j = detail::parse_json(text, "network spec");
    PeriodicNetworkSpec net;
    if (!j.contains("cells") || !j["cells"].is_array())
        throw ParseError("network: missing 'cells' array");
    for (size_t i = 0; i < j["cells"].size(); ++i) {
        const auto& jc = j["cells"][i];
        std::string where = "cells[" + std::to_string(i) + "]";
        if (!jc.is_object() || !jc.contains("saddles") || !jc["saddles"].is_array())
            throw ParseError("network: " + where + " must contain a 'saddles' array");
        CellCycle cell;
        for (size_t k = 0; k < jc["saddles"].size(); ++k)
            cell.saddles.push_back(detail::parse_saddle(
                jc["saddles"][k], where + ".saddles[" + std::to_string(k) + "]"));
        net.cells.push_back(std::move(cell));
    }
    if (j.contains("escapes")) {
        if (!j["escapes"].is_array()) throw ParseError("network: 'escapes' must be an array");
        for (size_t i = 0; i < j["escapes"].size(); ++i) {
            const auto& je = j["escapes"][i];
            std::string where = "escapes[" + std::to_string(i) + "]";
            PeriodicNetworkSpec::Escape esc;
            esc.from = static_cast<int>(detail::get_number(je, "from", where));
            esc.to = static_cast<int>(detail::get_number(je, "to", where));
            if (!je.contains("chain")) throw ParseError(where + ": missing 'chain'");
            esc.chain = detail::parse_chain(je["chain"], where + ".chain");
            net.escapes.push_back(std::move(esc));
        }
    }
    return net;
}

inline PeriodicNetworkSpec load_network_spec(const std::string& path) {
    return parse_network_spec(read_file(path));
}

inline void emit(jout::Writer& w, const Saddle& s) {
    w.begin_object();
    w.key("lambda"); w.value(s.lambda);
    w.key("mu"); w.value(s.mu);
    w.end_object();
}

inline std::string serialize_chain(const EscapeChainSpec& spec) {
    jout::Writer w;
    w.begin_object();
    w.key("alpha0"); w.value(spec.alpha0);
    w.key("saddles");
    w.begin_array();
    for (const auto& s : spec.saddles) emit(w, s);
    w.end_array();
    w.key("wrong_turn"); w.value(spec.wrong_turn);
    if (spec.turn_signs) {
        w.key("turn_signs");
        w.begin_array();
        for (int t : *spec.turn_signs) w.value(t);
        w.end_array();
    }
    w.end_object();
    return w.out;
}

inline std::string serialize_network(const PeriodicNetworkSpec& net) {
    jout::Writer w;
    w.begin_object();
    w.key("cells");
    w.begin_array();
    for (const auto& c : net.cells) {
        w.begin_object();
        w.key("saddles");
        w.begin_array();
        for (const auto& s : c.saddles) emit(w, s);
        w.end_array();
        w.end_object();
    }
    w.end_array();
    w.key("escapes");
    w.begin_array();
    for (const auto& e : net.escapes) {
        w.begin_object();
        w.key("from"); w.value(e.from);
        w.key("chain"); w.value_raw(serialize_chain(e.chain));
        w.key("to"); w.value(e.to);
        w.end_object();
    }
    w.end_array();
    w.end_object();
    return w.out;
}

}  // namespace hetlab
