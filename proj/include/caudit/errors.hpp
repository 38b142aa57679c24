#pragma once

#include <stdexcept>
#include <string>

namespace caudit {

enum class Errc {
    invalid_identity,
    zero_case,
    parameter,
    message_too_large,
    stale_key,
    already_registered,
    unknown_client,
    unauthorized,
    chain_invalid,
    conflict,
    unknown_file,
    empty_file,
    out_of_range,
    insufficient_data,
    degenerate_model,
    bad_token,
    malformed_record,
    malformed_script,
    io_failure,
};

/// Single exception type; the code discriminates so the CLI can map each
/// failure class to a stable exit status.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) {
    throw Error(code, what);
}

} // namespace caudit
