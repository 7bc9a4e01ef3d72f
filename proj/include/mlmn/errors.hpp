#pragma once

#include <stdexcept>
#include <string>

namespace mlmn {

    struct Error : std::runtime_error {
        using std::runtime_error::runtime_error;
    };

    // tensor shapes disagree with what an operation needs
    struct ShapeError : Error {
        using Error::Error;
    };

    // unreadable or malformed input files, invalid arguments
    struct InputError : Error {
        using Error::Error;
    };

    // NaN/Inf or divergence
    struct NumericError : Error {
        using Error::Error;
    };

    // checkpoint version, vocabulary or shape mismatches
    struct CompatibilityError : Error {
        using Error::Error;
    };

}  // namespace mlmn
