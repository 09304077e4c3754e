#pragma once

#include <stdexcept>
#include <string>

namespace attnrec {

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

struct TrainingError : std::runtime_error {
    explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace attnrec
