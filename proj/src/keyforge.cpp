#include "caudit/keyforge.hpp"

#include "caudit/errors.hpp"

namespace caudit::keyforge {

PrimeConfig PrimeConfig::for_prime(unsigned p) {
    switch (p) {
        case 2: return {2, 3};
        case 3: return {3, 5};
        case 5: return {5, 7};
        case 7: return {7, 11};
        default: raise(Errc::parameter, "prime must be one of 2, 3, 5, 7");
    }
}

MinuteStamp MinuteStamp::from_epoch_minute(std::uint64_t epoch_minute) {
    MinuteStamp ts;
    ts.epoch_minute = epoch_minute;
    ts.minute = static_cast<unsigned>(epoch_minute % 60);
    ts.hour = static_cast<unsigned>((epoch_minute / 60) % 24);
    return ts;
}

bool is_printable_ascii(std::string_view s) {
    if (s.empty()) return false;
    for (unsigned char c : s) {
        if (c < 32 || c > 126) return false;
    }
    return true;
}

BigUint encode_ascii(std::string_view s) {
    if (!is_printable_ascii(s)) {
        raise(Errc::invalid_identity,
              "identity attribute must be non-empty printable ASCII");
    }
    BigUint value = 0;
    for (unsigned char c : s) {
        value *= 1000; // one 3-digit group per character
        value += c;
    }
    return value;
}

NumericIdentity encode_identity(const DeviceIdentity& id) {
    return NumericIdentity{
        encode_ascii(id.motherboard_serial),
        encode_ascii(id.disk_serial),
        encode_ascii(id.password),
    };
}

CaseValue compute_case(const NumericIdentity& id) {
    return CaseValue{(id.disk_no + id.moboard_num) * id.pwd_num};
}

BigUint processed_min(unsigned minute, const PrimeConfig& cfg) {
    if (minute > 59) raise(Errc::parameter, "minute out of range");
    BigUint pm = minute + cfg.p;
    pm *= cfg.q;
    pm *= cfg.q;
    return pm;
}

BigUint processed_hour(unsigned hour, const BigUint& pm) {
    if (hour > 23) raise(Errc::parameter, "hour out of range");
    const unsigned n = (hour % 6) + 1;
    return hour + (pm << n);
}

TimeCaseValue time_case(const CaseValue& c, const MinuteStamp& ts,
                        const PrimeConfig& cfg) {
    if (c.value == 0) {
        raise(Errc::zero_case, "case value must be positive");
    }
    BigUint pm = processed_min(ts.minute, cfg);
    BigUint ph = processed_hour(ts.hour, pm);
    return TimeCaseValue{pm * ph * c.value, ts.epoch_minute};
}

std::vector<TimeCaseValue> candidate_time_cases(const CaseValue& c,
                                                const MinuteStamp& now,
                                                const PrimeConfig& cfg) {
    if (now.epoch_minute == 0) {
        raise(Errc::parameter, "window needs a previous epoch minute");
    }
    return {
        time_case(c, now, cfg),
        time_case(c, MinuteStamp::from_epoch_minute(now.epoch_minute - 1),
                  cfg),
    };
}

} // namespace caudit::keyforge
