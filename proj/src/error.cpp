#include "gridcoher/error.hpp"

namespace gridcoher {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Graph: return "graph";
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Assumption: return "assumption";
    case ErrorKind::Stability: return "stability";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
    }
    return "unknown";
}

} // namespace gridcoher
