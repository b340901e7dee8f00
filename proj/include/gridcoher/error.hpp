#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gridcoher {

enum class ErrorKind {
    Graph,       // malformed or disconnected network
    Parameter,   // non-positive inertia, damping or gain
    Dimension,   // inconsistent vector or matrix sizes
    Assumption,  // closed-form path called outside its validity domain
    Stability,   // unstable mode, divergence, observable marginal mode
    Config,      // bad experiment configuration
    Io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace gridcoher
