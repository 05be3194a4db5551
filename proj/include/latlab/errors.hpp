#pragma once

#include <stdexcept>

namespace latlab {

/// Data/validation failure (corrupt artifact, inconsistent manifest, bad
/// config value). The CLI maps these to exit code 2.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace latlab
