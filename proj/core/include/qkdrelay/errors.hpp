#pragma once

#include <stdexcept>
#include <string>

namespace qkdrelay {

/// Stable error codes carried by every library exception.
enum class Errc {
    // crypto
    padding,
    length,
    length_mismatch,
    malformed_key,
    unsupported_scheme,
    kem_failure,
    // onion codec
    decrypt,
    format,
    auth,
    // key-management entity
    unauthorized,
    unknown_key_id,
    already_consumed,
    unknown_link,
    exhausted,
    key_count_mismatch,
    // simulated network
    unknown_node,
    no_channel,
    link_missing,
    pad_exhausted,
    run_timeout,
    // configuration / reporting
    config,
    io,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message),
          code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

#define QKDRELAY_DEFINE_ERROR(ClassName, code_value)                        \
    class ClassName : public Error {                                        \
    public:                                                                 \
        explicit ClassName(const std::string& message)                      \
            : Error(Errc::code_value, message) {}                           \
    }

QKDRELAY_DEFINE_ERROR(PaddingError, padding);
QKDRELAY_DEFINE_ERROR(LengthError, length);
QKDRELAY_DEFINE_ERROR(LengthMismatchError, length_mismatch);
QKDRELAY_DEFINE_ERROR(MalformedKeyError, malformed_key);
QKDRELAY_DEFINE_ERROR(UnsupportedSchemeError, unsupported_scheme);
QKDRELAY_DEFINE_ERROR(KemFailureError, kem_failure);
QKDRELAY_DEFINE_ERROR(DecryptError, decrypt);
QKDRELAY_DEFINE_ERROR(FormatError, format);
QKDRELAY_DEFINE_ERROR(AuthError, auth);
QKDRELAY_DEFINE_ERROR(UnauthorizedError, unauthorized);
QKDRELAY_DEFINE_ERROR(UnknownKeyIdError, unknown_key_id);
QKDRELAY_DEFINE_ERROR(AlreadyConsumedError, already_consumed);
QKDRELAY_DEFINE_ERROR(UnknownLinkError, unknown_link);
QKDRELAY_DEFINE_ERROR(ExhaustedError, exhausted);
QKDRELAY_DEFINE_ERROR(KeyCountMismatchError, key_count_mismatch);
QKDRELAY_DEFINE_ERROR(UnknownNodeError, unknown_node);
QKDRELAY_DEFINE_ERROR(NoChannelError, no_channel);
QKDRELAY_DEFINE_ERROR(LinkMissingError, link_missing);
QKDRELAY_DEFINE_ERROR(PadExhaustedError, pad_exhausted);
QKDRELAY_DEFINE_ERROR(RunTimeoutError, run_timeout);
QKDRELAY_DEFINE_ERROR(ConfigError, config);
QKDRELAY_DEFINE_ERROR(IoError, io);

#undef QKDRELAY_DEFINE_ERROR

inline const char* errc_name(Errc code) {
    switch (code) {
    case Errc::padding: return "PaddingError";
    case Errc::length: return "LengthError";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::malformed_key: return "MalformedKey";
    case Errc::unsupported_scheme: return "UnsupportedScheme";
    case Errc::kem_failure: return "KemFailure";
    case Errc::decrypt: return "DecryptError";
    case Errc::format: return "FormatError";
    case Errc::auth: return "AuthError";
    case Errc::unauthorized: return "Unauthorized";
    case Errc::unknown_key_id: return "UnknownKeyId";
    case Errc::already_consumed: return "AlreadyConsumed";
    case Errc::unknown_link: return "UnknownLink";
    case Errc::exhausted: return "Exhausted";
    case Errc::key_count_mismatch: return "KeyCountMismatch";
    case Errc::unknown_node: return "UnknownNode";
    case Errc::no_channel: return "NoChannel";
    case Errc::link_missing: return "LinkMissing";
    case Errc::pad_exhausted: return "PadExhausted";
    case Errc::run_timeout: return "RunTimeout";
    case Errc::config: return "ConfigError";
    case Errc::io: return "IoError";
    }
    return "Error";
}

}  // namespace qkdrelay
