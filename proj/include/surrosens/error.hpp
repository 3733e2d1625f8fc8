#pragma once

#include <stdexcept>
#include <string>

namespace surrosens {

/// Broad failure category; the CLI maps each onto a process exit code.
enum class ErrorKind {
    Config,     // invalid parameter, family/range mismatch, bad CLI input
    Data,       // schema violation or unusable dataset
    Numerical,  // quadrature / root-finding / degenerate design failure
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline Error config_error(const std::string& what) { return {ErrorKind::Config, what}; }
inline Error data_error(const std::string& what) { return {ErrorKind::Data, what}; }
inline Error numerical_error(const std::string& what) { return {ErrorKind::Numerical, what}; }

}  // namespace surrosens
