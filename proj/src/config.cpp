#include "qcurv/config.hpp"

#include <cstdlib>
#include <fstream>

#include <json.hpp>

namespace qcurv {

void CliConfig::validate() const {
    controls.validate();
    if (!(vol_tol > 0.0)) throw std::invalid_argument("config: vol_tol must be positive");
    if (format != "csv" && format != "json")
        throw std::invalid_argument("config: format must be csv or json");
    if (out_dir.empty()) throw std::invalid_argument("config: out_dir must be non-empty");
}

CliConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("config: parse error in '" + path + "': " + e.what());
    }
    CliConfig cfg;
    for (const auto& [key, value] : j.items()) {
        if (key == "rel_tol")
            cfg.controls.rel_tol = value.get<double>();
        else if (key == "abs_tol")
            cfg.controls.abs_tol = value.get<double>();
        else if (key == "h_init")
            cfg.controls.h_init = value.get<double>();
        else if (key == "h_min")
            cfg.controls.h_min = value.get<double>();
        else if (key == "h_max")
            cfg.controls.h_max = value.get<double>();
        else if (key == "u_blow")
            cfg.controls.u_blow = value.get<double>();
        else if (key == "u_underflow")
            cfg.controls.u_underflow = value.get<double>();
        else if (key == "r_max")
            cfg.controls.r_max = value.get<double>();
        else if (key == "vol_tol")
            cfg.vol_tol = value.get<double>();
        else if (key == "out_dir")
            cfg.out_dir = value.get<std::string>();
        else if (key == "format")
            cfg.format = value.get<std::string>();
        else if (key == "seed")
            cfg.seed = value.get<std::uint64_t>();
        else
            throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

CliConfig resolve_config(const std::string& explicit_path) {
    if (!explicit_path.empty()) return load_config_file(explicit_path);
    if (const char* env = std::getenv("QCURV_CONFIG"); env && *env)
        return load_config_file(env);
    return CliConfig{};
}

}  // namespace qcurv
