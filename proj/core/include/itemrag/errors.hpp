#pragma once

#include <stdexcept>
#include <string>

namespace itemrag {

/// Base class for all itemrag errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input data; carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t line)
        : Error(message + " (line " + std::to_string(line) + ")"), line_(line) {}
    explicit ParseError(const std::string& message) : Error(message), line_(0) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A record references an entity that does not exist, or stored data fails verification.
class IntegrityError : public Error {
public:
    using Error::Error;
};

/// Lookup of an unknown item or user.
class LookupError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration value or combination.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// The evaluation protocol cannot be satisfied (e.g. too few eligible negatives).
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// An LLM ranking response that could not be repaired into a permutation.
class RankingParseError : public Error {
public:
    RankingParseError(const std::string& message, std::string raw_response)
        : Error(message), raw_response_(std::move(raw_response)) {}

    const std::string& raw_response() const noexcept { return raw_response_; }

private:
    std::string raw_response_;
};

/// Network-level failure after exhausting the retry budget.
class TransportError : public Error {
public:
    using Error::Error;
};

/// Request timed out after exhausting the retry budget.
class TimeoutError : public TransportError {
public:
    using TransportError::TransportError;
};

/// Endpoint rejected the credential; never retried.
class AuthenticationError : public Error {
public:
    using Error::Error;
};

/// Endpoint returned a body that does not match the chat-completions schema.
class ResponseFormatError : public Error {
public:
    using Error::Error;
};

}  // namespace itemrag
