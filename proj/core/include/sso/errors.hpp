#pragma once

#include <stdexcept>
#include <string>

namespace sso {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or unknown names (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A caller broke a documented precondition.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Index or identifier that does not resolve.
class LookupError : public Error {
public:
    using Error::Error;
};

/// Network or provider failure after retries (CLI exit code 3).
class TransportError : public Error {
public:
    using Error::Error;
};

/// Replay-mode cassette had no entry for a request.
class CassetteMiss : public TransportError {
public:
    explicit CassetteMiss(std::string hash)
        : TransportError("cassette miss for request " + hash), hash_(std::move(hash)) {}

    const std::string& hash() const noexcept { return hash_; }

private:
    std::string hash_;
};

class EmbeddingError : public Error {
public:
    using Error::Error;
};

/// Model output did not follow the requested format.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Malformed persisted file; the message names the first offending field.
class LoadError : public Error {
public:
    using Error::Error;
};

}  // namespace sso
