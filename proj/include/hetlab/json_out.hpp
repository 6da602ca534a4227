#pragma once

// Deterministic JSON emission. All numbers are printed with %.17g so that
// doubles round-trip bit-exactly and repeated runs produce identical bytes.

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

namespace hetlab::jout {

inline std::string num(double v) {
    if (std::isnan(v)) return "null";
    if (std::isinf(v)) return v > 0 ? "1e999" : "-1e999";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string num(long long v) { return std::to_string(v); }
inline std::string num(unsigned long long v) { return std::to_string(v); }
inline std::string num(int v) { return std::to_string(v); }

inline std::string escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char ch : s) {
        switch (ch) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(ch) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", ch);
                    out += buf;
                } else {
                    out += ch;
                }
        }
    }
    return out;
}

inline std::string str(const std::string& s) { return "\"" + escape(s) + "\""; }

// Incremental writer for objects/arrays with insertion-ordered keys.
class Writer {
  public:
    std::string out;

    void begin_object() {
        sep();
        out += '{';
        fresh_ = true;
    }
    void end_object() {
        out += '}';
        fresh_ = false;
    }
    void begin_array() {
        sep();
        out += '[';
        fresh_ = true;
    }
    void end_array() {
        out += ']';
        fresh_ = false;
    }

    void key(const std::string& k) {
        sep();
        out += str(k);
        out += ':';
        fresh_ = true;
    }
    void value_raw(const std::string& v) {
        sep();
        out += v;
    }
    void value(double v) { value_raw(num(v)); }
    void value(int v) { value_raw(num(v)); }
    void value(unsigned long long v) { value_raw(num(v)); }
    void value(bool v) { value_raw(v ? "true" : "false"); }
    void value(const std::string& v) { value_raw(str(v)); }
    void value(const char* v) { value_raw(str(v)); }
    void null() { value_raw("null"); }

    template <class T>
    void array(const std::vector<T>& xs) {
        sep();
        out += '[';
        for (size_t i = 0; i < xs.size(); ++i) {
            if (i) out += ',';
            out += num(xs[i]);
        }
        out += ']';
    }

  private:
    bool fresh_ = true;
    void sep() {
        if (!fresh_) out += ',';
        fresh_ = false;
    }
};

}  // namespace hetlab::jout
