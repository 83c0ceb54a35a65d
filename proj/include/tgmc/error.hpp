#pragma once

#include <stdexcept>
#include <string>

namespace tgmc {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error {
    using Error::Error;
};

/// √B requested for an antiferromagnetic bond; callers fall back to the asymmetric split.
struct IndefiniteFactor : Error {
    using Error::Error;
};

struct NonDecomposable : Error {
    using Error::Error;
};

struct NonFrustratedPlaquette : Error {
    using Error::Error;
};

struct DegenerateAutocorrelation : Error {
    using Error::Error;
};

/// A cluster that cannot be laid out as an open 2D grid of cells.
struct UnsupportedCluster : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace tgmc
