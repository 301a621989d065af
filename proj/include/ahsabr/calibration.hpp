#pragma once

#include "ahsabr/engine.hpp"
#include "ahsabr/hagan.hpp"
#include "ahsabr/price_curve.hpp"
#include "ahsabr/quote_set.hpp"

namespace ahsabr {

/// Intermediate quantities of the five-quote inversion, kept for reporting.
struct CalibrationDiagnostics {
    double z_minus = 0.0;      // one-step coefficient at k[n-1]
    double z_plus = 0.0;       // one-step coefficient at k[n+1]
    double y_minus = 0.0;      // y(k[n-1]) > 0
    double y_plus = 0.0;       // y(k[n+1]) < 0
    double kappa_minus = 0.0;  // kappa(k[n-1])
    double kappa_plus = 0.0;   // kappa(k[n+1])
    double sigma_atm = 0.0;    // ATM normal vol implied by the ATM price

    bool operator==(const CalibrationDiagnostics&) const = default;
};

struct CalibrationResult {
    SabrParams params;
    CalibrationDiagnostics diagnostics;
};

struct ZCoefficients {
    double minus = 0.0;
    double plus = 0.0;
};

struct NuRho {
    double nu = 0.0;
    double rho = 0.0;
};

/// Alpha from the ATM row of the one-step system. The in-the-money put at
/// k[n+1] is synthesised from the OTM call by parity.
///
/// Throws DegenerateStraddle when the quotes leave no positive ATM density.
double alpha_from_straddle(const QuoteSet& q, double beta, double shift);

/// z[n-1] from the last OTM put row and z[n+1] from the first OTM call row.
///
/// Throws DegenerateButterfly when either butterfly is not positive.
ZCoefficients z_coefficients(const QuoteSet& q);

/// Solves the two local-vol conditions at k[n-1] and k[n+1],
///   nu^2 y - 2 rho nu = (z h+ h- / (T kappa alpha^2 (k+b)^(2 beta)) - 1) / y,
/// for (nu, rho), taking the non-negative root for nu.
///
/// Throws NegativeNuSquared or RhoOutOfRange when no admissible pair exists.
NuRho nu_rho_from_z(ZCoefficients z, double alpha, const QuoteSet& q, double beta, double shift,
                    double sigma_atm);

/// Exact inversion of the one-step pricer: (alpha, nu, rho) from five
/// near-ATM prices for fixed beta and shift.
CalibrationResult calibrate(const QuoteSet& q, double beta, double shift);

/// The same inversion written in the compact equal-step form. Requires all
/// four gaps of q to be equal; throws InvalidArgument otherwise.
SabrParams calibrate_uniform(const QuoteSet& q, double beta, double shift);

/// Left (put side) and right (call side) evaluations of the short-maturity
/// characterisation, reported next to the central one.
struct OneSidedLimit {
    double nu = 0.0;   // NaN when the one-sided second derivative is negative
    double rho = 0.0;  // NaN when nu is
};

struct LimitingResult {
    SabrParams params;
    OneSidedLimit put_side;
    OneSidedLimit call_side;
    double pdf_atm = 0.0;
};

/// Small-step limit of the analytic calibration evaluated on a continuous
/// price curve: alpha from the ATM price and density, nu and rho from the
/// first and second y-derivatives of p(k) / (kappa(k) pdf(k) (k+b)^(2 beta))
/// at the forward, by central differences at steps h0 and h0/2 followed by
/// Richardson extrapolation. Densities use an inner step of h/4.
///
/// Throws UnstableDifferences if halving h0 moves alpha, nu or rho by more
/// than 10% (nu and rho measured against a floor of 0.01).
LimitingResult limiting_params(const PriceCurve& curve, double beta, double shift, double h0,
                               KappaSigma convention = KappaSigma::Total);

/// Samples the five near-ATM quotes of `grid` from a continuous curve.
QuoteSet sample_quote_set(const PriceCurve& curve, const Grid& grid,
                          KappaSigma convention = KappaSigma::Total);

/// Calibrates the one-step model with (target_beta, target_shift) to the
/// quotes another model produces on `grid`.
CalibrationResult recalibrate(const PriceCurve& source, double target_beta, double target_shift,
                              const Grid& grid, KappaSigma convention = KappaSigma::Total);

/// Recalibration whose source is a solved one-step surface on its own grid.
CalibrationResult recalibrate(const PriceSurface& source, double target_beta,
                              double target_shift);

/// Hagan-expansion prices as a continuous curve.
PriceCurve hagan_curve(const SabrParams& params, double forward, double expiry);

/// Node-exact view of a solved surface; throws MissingStrike off the nodes.
PriceCurve surface_curve(const PriceSurface& surface);

}  // namespace ahsabr
