#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridsim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Scenario text does not conform to the schema.
class ParseError : public Error {
public:
    ParseError(std::string key, std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": '" + key + "': " + what),
          key_(std::move(key)), line_(line) {}

    const std::string& key() const noexcept { return key_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string key_;
    std::size_t line_;
};

struct Violation {
    std::string code;
    std::string message;
};

/// A structurally valid scenario that breaks a domain invariant.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<Violation> violations)
        : Error(join(violations)), violations_(std::move(violations)) {}

    const std::vector<Violation>& violations() const noexcept { return violations_; }

private:
    static std::string join(const std::vector<Violation>& vs) {
        std::string out = "scenario validation failed";
        for (const auto& v : vs) out += "\n  [" + v.code + "] " + v.message;
        return out;
    }
    std::vector<Violation> violations_;
};

/// Problems with trace files and trace alignment.
class TraceError : public Error {
public:
    using Error::Error;
};

}  // namespace gridsim
