#pragma once

#include <charconv>
#include <ostream>
#include <string>
#include <system_error>
#include <vector>

namespace mirrorcle {

/// Shortest decimal form that parses back to the identical double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return res.ec == std::errc{} ? std::string(buf, res.ptr) : std::string("nan");
}

/// One verification record: measured value against its bound.
struct CheckRecord {
    std::string name;
    double measured{0.0};
    double bound{0.0};
    bool pass{false};
};

/// Line format: `<name> measured=<value> bound=<value> PASS|FAIL`.
inline std::string format_record(const CheckRecord& r) {
    return r.name + " measured=" + format_double(r.measured) + " bound=" + format_double(r.bound) +
           (r.pass ? " PASS" : " FAIL");
}

inline void write_report(std::ostream& os, const std::vector<CheckRecord>& records) {
    for (const CheckRecord& r : records)
        os << format_record(r) << '\n';
}

inline bool all_passed(const std::vector<CheckRecord>& records) {
    for (const CheckRecord& r : records)
        if (!r.pass)
            return false;
    return true;
}

}  // namespace mirrorcle
