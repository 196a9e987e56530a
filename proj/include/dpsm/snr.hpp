#pragma once

#include <cmath>
#include <limits>

namespace dpsm {

// Signal-to-noise ratio with an explicit infinite sentinel.
//
// The sentinel marks schemes whose noise covariance is singular in a
// direction that carries signal (perfect recovery / total privacy failure).
// Arithmetic conventions:
//   sentinel * finite        -> sentinel
//   1 + sentinel             -> +inf (as double)
//   sentinel >= every finite -> true
//   mse(power, sentinel)     -> 0
struct Snr {
    double value = 0.0;
    bool infinite = false;

    static Snr finite(double v) { return Snr{v, false}; }
    static Snr inf() { return Snr{0.0, true}; }

    bool is_infinite() const { return infinite; }

    // 1 + SNR as a double; +inf for the sentinel.
    double one_plus() const {
        return infinite ? std::numeric_limits<double>::infinity() : 1.0 + value;
    }

    double as_double() const {
        return infinite ? std::numeric_limits<double>::infinity() : value;
    }

    bool operator>=(const Snr& o) const {
        if (infinite) return true;
        if (o.infinite) return false;
        return value >= o.value;
    }
    bool operator<(const Snr& o) const { return !(*this >= o); }
};

inline Snr max(const Snr& a, const Snr& b) { return a >= b ? a : b; }

} // namespace dpsm
