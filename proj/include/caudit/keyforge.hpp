#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "caudit/bigint.hpp"

namespace caudit::keyforge {

// Identity attributes as the client presents them. All three strings must
// be non-empty printable ASCII (code points 32..126).
struct DeviceIdentity {
    std::string motherboard_serial;
    std::string disk_serial;
    std::string password;
};

struct NumericIdentity {
    BigUint moboard_num;
    BigUint disk_no;
    BigUint pwd_num;
};

struct CaseValue {
    BigUint value; // (disk_no + moboard_num) * pwd_num
};

// p is a prime below 10; q is the smallest prime strictly above p.
struct PrimeConfig {
    unsigned p = 7;
    unsigned q = 11;

    static PrimeConfig for_prime(unsigned p); // throws parameter unless p in {2,3,5,7}
};

struct MinuteStamp {
    std::uint64_t epoch_minute = 0; // UTC minutes since epoch
    unsigned minute = 0;            // epoch_minute % 60
    unsigned hour = 0;              // (epoch_minute / 60) % 24

    static MinuteStamp from_epoch_minute(std::uint64_t epoch_minute);
};

struct TimeCaseValue {
    BigUint value; // processed_min * processed_hour * case
    std::uint64_t epoch_minute = 0;
};

bool is_printable_ascii(std::string_view s);

/// Concatenated 3-digit zero-padded decimal codes, read as one integer.
/// "AB" -> 65066. Throws invalid_identity for empty or non-printable input.
BigUint encode_ascii(std::string_view s);

NumericIdentity encode_identity(const DeviceIdentity& id);

CaseValue compute_case(const NumericIdentity& id);

/// (minute + p) * q^2
BigUint processed_min(unsigned minute, const PrimeConfig& cfg);

/// hour + pm * 2^n with n = (hour % 6) + 1, so 1 <= n <= 6 for every hour.
BigUint processed_hour(unsigned hour, const BigUint& pm);

TimeCaseValue time_case(const CaseValue& c, const MinuteStamp& ts,
                        const PrimeConfig& cfg);

/// The acceptance set for the 120-second window: values at epoch minutes
/// {now, now-1}, current first. Requires epoch_minute >= 1.
std::vector<TimeCaseValue> candidate_time_cases(const CaseValue& c,
                                                const MinuteStamp& now,
                                                const PrimeConfig& cfg);

} // namespace caudit::keyforge
