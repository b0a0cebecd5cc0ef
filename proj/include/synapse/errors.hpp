#pragma once

#include <stdexcept>
#include <string>

namespace synapse {

// Root of all errors thrown by the library. `kind()` is a stable
// machine-readable tag used by the CLI when emitting structured errors.
class SynapseError : public std::runtime_error {
public:
    SynapseError(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

// Invalid compendium document; `path` is the JSON path of the offending node.
class SchemaError : public SynapseError {
public:
    SchemaError(std::string path, const std::string& message)
        : SynapseError("SchemaError", path + ": " + message), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

class DomainError : public SynapseError {
public:
    explicit DomainError(const std::string& message) : SynapseError("DomainError", message) {}
};

class PolicyDisabled : public SynapseError {
public:
    explicit PolicyDisabled(const std::string& message) : SynapseError("PolicyDisabled", message) {}
};

class DimensionMismatch : public SynapseError {
public:
    explicit DimensionMismatch(const std::string& message)
        : SynapseError("DimensionMismatch", message) {}
};

class EmptyIndex : public SynapseError {
public:
    explicit EmptyIndex(const std::string& message) : SynapseError("EmptyIndex", message) {}
};

class TooManyCandidates : public SynapseError {
public:
    explicit TooManyCandidates(const std::string& message)
        : SynapseError("TooManyCandidates", message) {}
};

class UnknownTool : public SynapseError {
public:
    explicit UnknownTool(const std::string& message) : SynapseError("UnknownTool", message) {}
};

class UnknownTopology : public SynapseError {
public:
    explicit UnknownTopology(const std::string& message)
        : SynapseError("UnknownTopology", message) {}
};

class InsufficientData : public SynapseError {
public:
    explicit InsufficientData(const std::string& message)
        : SynapseError("InsufficientData", message) {}
};

// Dataset file rejected; `line` is 1-based.
class FormatError : public SynapseError {
public:
    FormatError(int line, const std::string& message)
        : SynapseError("FormatError", "line " + std::to_string(line) + ": " + message),
          line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

class TransportError : public SynapseError {
public:
    explicit TransportError(const std::string& message) : SynapseError("TransportError", message) {}
};

// Non-2xx reply from an HTTP provider; carries the response body.
class ProviderError : public SynapseError {
public:
    ProviderError(int status, const std::string& body)
        : SynapseError("ProviderError", "status " + std::to_string(status) + ": " + body),
          status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};

class ConfigError : public SynapseError {
public:
    explicit ConfigError(const std::string& message) : SynapseError("ConfigError", message) {}
};

}  // namespace synapse
