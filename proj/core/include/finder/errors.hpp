#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace finder {

// Base for all typed errors raised by the library. `code()` is a stable,
// machine-readable identifier; `what()` prepends it to the message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define FINDER_DEFINE_ERROR(NAME)                                             \
    class NAME : public Error {                                               \
    public:                                                                    \
        explicit NAME(const std::string& message) : Error(#NAME, message) {}   \
    }

#define FINDER_DEFINE_ERROR_WITH_BASE(NAME, BASE)                              \
    class NAME : public BASE {                                                 \
    public:                                                                    \
        explicit NAME(const std::string& message) : BASE(#NAME, message) {}    \
    }

// corpus
FINDER_DEFINE_ERROR(DecodeError);
FINDER_DEFINE_ERROR(EmptyDocument);
FINDER_DEFINE_ERROR(InvalidPolicy);
FINDER_DEFINE_ERROR(EmptyCorpus);

// vector_index
FINDER_DEFINE_ERROR(EmptyText);
FINDER_DEFINE_ERROR(ProviderError);
FINDER_DEFINE_ERROR(DimensionMismatch);
FINDER_DEFINE_ERROR(EmptyIndex);
FINDER_DEFINE_ERROR(IoError);
FINDER_DEFINE_ERROR(CorruptIndex);
FINDER_DEFINE_ERROR(VersionMismatch);

// llm_gateway
class GatewayError : public Error {
public:
    GatewayError(std::string code, const std::string& message)
        : Error(std::move(code), message) {}
    explicit GatewayError(const std::string& message)
        : Error("GatewayError", message) {}
};
FINDER_DEFINE_ERROR_WITH_BASE(GatewayTimeout, GatewayError);
FINDER_DEFINE_ERROR_WITH_BASE(RateLimited, GatewayError);
FINDER_DEFINE_ERROR_WITH_BASE(RemoteError, GatewayError);
FINDER_DEFINE_ERROR_WITH_BASE(CacheMiss, GatewayError);

FINDER_DEFINE_ERROR(MissingSlot);
FINDER_DEFINE_ERROR(UnknownTemplate);
FINDER_DEFINE_ERROR(UnparseableList);
FINDER_DEFINE_ERROR(UnparseableJson);
FINDER_DEFINE_ERROR(UnparseableVerdict);

// evaluation
FINDER_DEFINE_ERROR(SchemaError);
FINDER_DEFINE_ERROR(NoJudgments);

// cli
FINDER_DEFINE_ERROR(ConfigError);

#undef FINDER_DEFINE_ERROR
#undef FINDER_DEFINE_ERROR_WITH_BASE

}  // namespace finder
