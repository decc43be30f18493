#pragma once

#include <stdexcept>

namespace logconc {

// Parameter or configuration outside the supported domain (CLI exit 2).
struct domain_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Grid, spacing, or horizon too coarse to resolve the requested quantity
// (CLI exit 3).
struct resolution_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Caller violated an operation contract (dimension mismatch, unnormalized
// input, incompatible grids).
struct contract_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Mathematical precondition not satisfied by the data (e.g. a density that
// is not log-concave); reported per item rather than aborting a batch.
struct precondition_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace logconc
