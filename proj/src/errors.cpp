#include "fcr/errors.hpp"

namespace fcr {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Argument:
            return "argument";
        case ErrorKind::Data:
            return "data";
        case ErrorKind::Numerical:
            return "numerical";
    }
    return "unknown";
}

}  // namespace fcr
