#pragma once

#include "ahsabr/engine.hpp"
#include "ahsabr/numerics.hpp"

namespace ahsabr {

struct HaganQuoteRequest {
    double strike = 0.0;
    double forward = 0.0;
    double expiry = 0.0;
    SabrParams params;
};

/// Hagan et al. lognormal implied-vol expansion applied to the shifted
/// forward F + b and strike k + b. Returns the Black vol of the shifted rate.
double hagan_implied_vol(const HaganQuoteRequest& req);

/// Black price of the shifted rate at the Hagan vol (undiscounted).
double hagan_price(const HaganQuoteRequest& req, OptionKind kind);

/// Undiscounted Black price on a positive forward.
double black_price(double forward, double strike, double vol, double expiry, OptionKind kind);

}  // namespace ahsabr
