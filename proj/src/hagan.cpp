#include "ahsabr/hagan.hpp"

#include <cmath>
#include <string>

#include "ahsabr/error.hpp"

namespace ahsabr {

namespace {

void check_request(const HaganQuoteRequest& req) {
    req.params.validate();
    if (!(req.expiry > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "expiry must be positive");
    }
    if (!(req.forward + req.params.shift > 0.0) || !(req.strike + req.params.shift > 0.0)) {
        throw Error(ErrorCode::NonpositiveShiftedStrike,
                    "shifted forward and strike must be positive");
    }
}

}  // namespace

double hagan_implied_vol(const HaganQuoteRequest& req) {
    check_request(req);
    const auto& p = req.params;
    const double f = req.forward + p.shift;
    const double k = req.strike + p.shift;
    const double omb = 1.0 - p.beta;
    const double log_fk = std::log(f / k);
    const double fk_pow = std::pow(f * k, 0.5 * omb);  // (fk)^((1-beta)/2)

    const double lg2 = log_fk * log_fk;
    const double denom = fk_pow * (1.0 + omb * omb / 24.0 * lg2 +
                                   omb * omb * omb * omb / 1920.0 * lg2 * lg2);

    const double z = p.nu / p.alpha * fk_pow * log_fk;
    double z_over_x = 1.0;
    if (std::fabs(log_fk) < 1e-7 || std::fabs(z) < 1e-10) {
        z_over_x = 1.0 - 0.5 * p.rho * z;
    } else {
        const double x = std::log((std::sqrt(1.0 - 2.0 * p.rho * z + z * z) + z - p.rho) /
                                  (1.0 - p.rho));
        z_over_x = z / x;
    }

    const double correction =
        1.0 + (omb * omb / 24.0 * p.alpha * p.alpha / (fk_pow * fk_pow) +
               0.25 * p.rho * p.beta * p.nu * p.alpha / fk_pow +
               (2.0 - 3.0 * p.rho * p.rho) / 24.0 * p.nu * p.nu) *
                  req.expiry;

    return p.alpha / denom * z_over_x * correction;
}

double black_price(double forward, double strike, double vol, double expiry, OptionKind kind) {
    const double stdev = vol * std::sqrt(expiry);
    const double d1 = (std::log(forward / strike) + 0.5 * stdev * stdev) / stdev;
    const double d2 = d1 - stdev;
    if (kind == OptionKind::Call) {
        return forward * norm_cdf(d1) - strike * norm_cdf(d2);
    }
    return strike * norm_cdf(-d2) - forward * norm_cdf(-d1);
}

double hagan_price(const HaganQuoteRequest& req, OptionKind kind) {
    const double vol = hagan_implied_vol(req);
    return black_price(req.forward + req.params.shift, req.strike + req.params.shift, vol,
                       req.expiry, kind);
}

}  // namespace ahsabr
