#pragma once

#include <functional>

namespace ahsabr {

/// Continuous-strike quote source: undiscounted call and put prices as
/// functions of the strike, for one forward and expiry.
struct PriceCurve {
    std::function<double(double)> call;
    std::function<double(double)> put;
    double forward = 0.0;
    double expiry = 0.0;

    /// Wraps a call-price function; puts follow by parity p = c - (F - k).
    static PriceCurve from_calls(std::function<double(double)> call, double forward,
                                 double expiry) {
        PriceCurve curve;
        curve.put = [call, forward](double k) { return call(k) - (forward - k); };
        curve.call = std::move(call);
        curve.forward = forward;
        curve.expiry = expiry;
        return curve;
    }
};

}  // namespace ahsabr
