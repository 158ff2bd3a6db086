#pragma once

// Deterministic serialization helpers: every float is printed with 17
// significant digits so emitted files are byte-reproducible.

#include <sstream>
#include <string>
#include <vector>

namespace qcurv {

/// %.17g rendering; infinities map to null-compatible "null" via json_num.
std::string fmt17(double x);

/// JSON number token: fmt17, or "null" for non-finite values.
std::string json_num(double x);

std::string json_quote(const std::string& s);

/// Flat ordered JSON object builder.
class JsonObject {
public:
    JsonObject& field(const std::string& key, double value) {
        return raw(key, json_num(value));
    }
    JsonObject& field(const std::string& key, int value) {
        return raw(key, std::to_string(value));
    }
    JsonObject& field(const std::string& key, bool value) {
        return raw(key, value ? "true" : "false");
    }
    JsonObject& field(const std::string& key, const std::string& value) {
        return raw(key, json_quote(value));
    }
    JsonObject& raw(const std::string& key, const std::string& rendered);

    [[nodiscard]] std::string str() const;

private:
    std::ostringstream body_;
    bool first_ = true;
};

std::string json_array_of(const std::vector<double>& xs);

}  // namespace qcurv
