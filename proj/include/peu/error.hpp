#pragma once

#include <stdexcept>
#include <string>

namespace peu {

enum class ErrorKind {
    invalid_input,
    not_a_trajectory,
    persistently_exciting,
    eigenvalue_conflict,
    near_singular,
    construction_failed,
    unsupported,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_input: return "invalid input";
        case ErrorKind::not_a_trajectory: return "not a trajectory of the system";
        case ErrorKind::persistently_exciting: return "input is persistently exciting";
        case ErrorKind::eigenvalue_conflict: return "eigenvalue conflict";
        case ErrorKind::near_singular: return "near-singular";
        case ErrorKind::construction_failed: return "numerical construction failed";
        case ErrorKind::unsupported: return "unsupported";
    }
    return "unknown";
}

class Error : public std::runtime_error {
   public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

   private:
    ErrorKind kind_;
};

namespace detail {

inline void require(bool condition, const std::string& message,
                    ErrorKind kind = ErrorKind::invalid_input) {
    if (!condition) throw Error(kind, message);
}

}  // namespace detail
}  // namespace peu
