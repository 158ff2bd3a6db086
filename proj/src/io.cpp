#include "qcurv/io.hpp"

#include <cmath>
#include <cstdio>

namespace qcurv {

std::string fmt17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string json_num(double x) {
    if (!std::isfinite(x)) return "null";
    return fmt17(x);
}

std::string json_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    out += '"';
    return out;
}

JsonObject& JsonObject::raw(const std::string& key, const std::string& rendered) {
    if (!first_) body_ << ",";
    first_ = false;
    body_ << json_quote(key) << ":" << rendered;
    return *this;
}

std::string JsonObject::str() const { return "{" + body_.str() + "}"; }

std::string json_array_of(const std::vector<double>& xs) {
    std::string out = "[";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ",";
        out += json_num(xs[i]);
    }
    out += "]";
    return out;
}

}  // namespace qcurv
