#pragma once

namespace ahsabr {

/// Which volatility scales the strike distance inside the one-step
/// adjustment kappa: the terminal standard deviation sigma*sqrt(T) (Total)
/// or the annualised normal volatility itself (Annualized).
enum class KappaSigma { Total, Annualized };

/// The five near-ATM option prices the analytic calibration consumes.
///
/// Strikes are k[n-2] < k[n-1] < F < k[n+1] < k[n+2]; the four gaps between
/// consecutive strikes are stored explicitly so non-uniform grids are
/// representable. Prices are undiscounted, in rate units.
struct QuoteSet {
    double forward = 0.0;
    double expiry = 0.0;

    double put_minus2 = 0.0;   // put at k[n-2]
    double put_minus1 = 0.0;   // put at k[n-1]
    double atm = 0.0;          // put = call at F
    double call_plus1 = 0.0;   // call at k[n+1]
    double call_plus2 = 0.0;   // call at k[n+2]

    double gap_outer_lo = 0.0;  // k[n-1] - k[n-2]
    double gap_inner_lo = 0.0;  // F - k[n-1]
    double gap_inner_hi = 0.0;  // k[n+1] - F
    double gap_outer_hi = 0.0;  // k[n+2] - k[n+1]

    KappaSigma kappa_sigma = KappaSigma::Total;

    [[nodiscard]] double strike_minus2() const { return strike_minus1() - gap_outer_lo; }
    [[nodiscard]] double strike_minus1() const { return forward - gap_inner_lo; }
    [[nodiscard]] double strike_plus1() const { return forward + gap_inner_hi; }
    [[nodiscard]] double strike_plus2() const { return strike_plus1() + gap_outer_hi; }

    /// In-the-money put at k[n+1], synthesised from the OTM call by parity.
    [[nodiscard]] double put_plus1() const { return call_plus1 + gap_inner_hi; }

    /// Throws InvalidArgument on non-positive gaps, prices or expiry.
    void validate() const;

    bool operator==(const QuoteSet&) const = default;
};

}  // namespace ahsabr
