#ifndef BASISRISK_ERRORS_HPP
#define BASISRISK_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace basisrisk {

/// Malformed or unusable input data (bad CSV, too few fields, duplicate labels).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical precondition failed or a computation did not converge.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace basisrisk

#endif
