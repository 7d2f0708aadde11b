#pragma once

#include <cmath>
#include <cstdio>
#include <string>

#include <json.hpp>

namespace solab::report {

using Json = nlohmann::ordered_json;

namespace detail {

inline void put_string(std::string& out, const std::string& s) {
    // nlohmann already knows the escaping rules.
    out += Json(s).dump();
}

inline void dump(const Json& j, std::string& out, int indent, int depth) {
    const std::string pad(indent > 0 ? indent * (depth + 1) : 0, ' ');
    const std::string close(indent > 0 ? indent * depth : 0, ' ');
    const char* nl = indent > 0 ? "\n" : "";
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += '{';
            out += nl;
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) {
                    out += ',';
                    out += nl;
                }
                first = false;
                out += pad;
                put_string(out, it.key());
                out += indent > 0 ? ": " : ":";
                dump(it.value(), out, indent, depth + 1);
            }
            out += nl;
            out += close;
            out += '}';
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out += '[';
            out += nl;
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) {
                    out += ',';
                    out += nl;
                }
                out += pad;
                dump(j[i], out, indent, depth + 1);
            }
            out += nl;
            out += close;
            out += ']';
            return;
        }
        case Json::value_t::number_float: {
            const double v = j.get<double>();
            if (!std::isfinite(v)) {
                out += "null";
                return;
            }
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out += buf;
            return;
        }
        default:
            out += j.dump();
    }
}

}  // namespace detail

// Doubles with 17 significant digits so values round-trip exactly.
inline std::string dump17(const Json& j, int indent = 2) {
    std::string out;
    detail::dump(j, out, indent, 0);
    return out;
}

// Copy without the keys that hold wall-clock timings.
inline Json strip_timing(const Json& j) {
    if (j.is_object()) {
        Json out = Json::object();
        for (auto it = j.begin(); it != j.end(); ++it)
            if (it.key() != "wall_seconds") out[it.key()] = strip_timing(it.value());
        return out;
    }
    if (j.is_array()) {
        Json out = Json::array();
        for (const auto& v : j) out.push_back(strip_timing(v));
        return out;
    }
    return j;
}

}  // namespace solab::report
