#pragma once

// CLI configuration: built-in defaults overridden by a JSON config file
// (--config flag or QCURV_CONFIG env var), overridden by flags.

#include <cstdint>
#include <string>

#include "qcurv/radial.hpp"
#include "qcurv/volume.hpp"

namespace qcurv {

struct CliConfig {
    IntegratorControls controls;
    double vol_tol = kDefaultVolTol;
    std::string out_dir = ".";
    std::string format = "csv";  // csv | json
    std::uint64_t seed = 20240901;

    void validate() const;  // throws std::invalid_argument
};

/// Parse a JSON config file into defaults.  Unknown keys are rejected.
CliConfig load_config_file(const std::string& path);

/// Resolve the config source: explicit path if non-empty, else QCURV_CONFIG,
/// else built-in defaults.
CliConfig resolve_config(const std::string& explicit_path);

}  // namespace qcurv
