#include "ahsabr/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "ahsabr/error.hpp"

namespace ahsabr {

namespace {

// The closed forms difference nearly equal prices (butterflies) and then
// cancel O(1/y^2) terms down to nu^2; with nu*y around 1e-2 that cancellation
// eats four or more digits. They are therefore evaluated in binary128 where
// the compiler offers it (long double elsewhere) and rounded once at the end.
#if defined(__SIZEOF_FLOAT128__) && !defined(__clang__)
using wide = __float128;
#else
using wide = long double;
#endif

wide wide_sqrt(wide x) {
    if (!(x > 0)) return 0;
    // Long double seed plus one Newton step reaches full binary128 accuracy.
    const wide s = std::sqrt(static_cast<long double>(x));
    return 0.5 * (s + x / s);
}

wide wide_abs(wide x) { return x < 0 ? -x : x; }

constexpr double kDegenerateTolerance = 1e-14;

void check_shifted(const QuoteSet& q, double shift) {
    if (!(q.strike_minus2() + shift > 0.0)) {
        throw Error(ErrorCode::NonpositiveShiftedStrike, "k[n-2] + b must be positive");
    }
}

void check_beta(double beta) {
    if (!(beta >= 0.0 && beta <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "beta must lie in [0, 1]");
    }
}

wide shifted_pow(double strike, double shift, double beta) {
    return std::pow(static_cast<long double>(strike) + shift, static_cast<long double>(beta));
}

// alpha from z[n] (h+ h-) = 2 T alpha^2 (F+b)^(2 beta) and the ATM row.
wide alpha_wide(const QuoteSet& q, double beta, double shift) {
    q.validate();
    check_beta(beta);
    check_shifted(q, shift);
    const wide up = q.gap_inner_hi;
    const wide down = q.gap_inner_lo;
    const wide span = up + down;
    const wide atm = q.atm;
    const wide put_itm = static_cast<wide>(q.call_plus1) + up;
    const wide straddle = up * q.put_minus1 + down * put_itm - atm * span;
    if (!(straddle > kDegenerateTolerance * atm * span)) {
        throw Error(ErrorCode::DegenerateStraddle,
                    "ATM butterfly is not positive; quotes imply no ATM density");
    }
    const wide z_atm = atm * span / straddle;
    return wide_sqrt(z_atm * up * down / (2.0 * q.expiry)) / shifted_pow(q.forward, shift, beta);
}

struct WideZ {
    wide minus;
    wide plus;
};

WideZ z_wide(const QuoteSet& q) {
    q.validate();
    const wide atm = q.atm;

    const wide lo_up = q.gap_inner_lo;    // h+ at k[n-1]
    const wide lo_down = q.gap_outer_lo;  // h- at k[n-1]
    const wide lo_span = lo_up + lo_down;
    const wide put1 = q.put_minus1;
    const wide lo_den = static_cast<wide>(q.put_minus2) * lo_up + atm * lo_down - put1 * lo_span;

    const wide hi_up = q.gap_outer_hi;    // h+ at k[n+1]
    const wide hi_down = q.gap_inner_hi;  // h- at k[n+1]
    const wide hi_span = hi_up + hi_down;
    const wide call1 = q.call_plus1;
    const wide hi_den = static_cast<wide>(q.call_plus2) * hi_down + atm * hi_up - call1 * hi_span;

    if (!(lo_den > kDegenerateTolerance * atm * lo_span)) {
        throw Error(ErrorCode::DegenerateButterfly, "put butterfly at k[n-1] is not positive");
    }
    if (!(hi_den > kDegenerateTolerance * atm * hi_span)) {
        throw Error(ErrorCode::DegenerateButterfly, "call butterfly at k[n+1] is not positive");
    }
    return {put1 * lo_span / lo_den, call1 * hi_span / hi_den};
}

struct WideNuRho {
    wide nu;
    wide rho;
};

struct LocalTerms {
    double y_minus;
    double y_plus;
    double kappa_minus;
    double kappa_plus;
};

LocalTerms local_terms(const QuoteSet& q, double alpha, double beta, double shift,
                       double sigma_atm) {
    const SabrParams y_params{alpha, beta, 0.0, 0.0, shift};
    return {y_of_k(q.strike_minus1(), q.forward, y_params),
            y_of_k(q.strike_plus1(), q.forward, y_params),
            kappa_at_distance(q.gap_inner_lo, sigma_atm, q.expiry, q.kappa_sigma),
            kappa_at_distance(q.gap_inner_hi, sigma_atm, q.expiry, q.kappa_sigma)};
}

WideNuRho nu_rho_wide(WideZ z, wide alpha, const QuoteSet& q, double beta, double shift,
                      const LocalTerms& t) {
    const wide y_m = t.y_minus;
    const wide y_p = t.y_plus;
    if (!(y_m > 0.0 && y_p < 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "y must be positive below F and negative above");
    }
    const wide a2t = alpha * alpha * static_cast<wide>(q.expiry);
    const wide pow_m = shifted_pow(q.strike_minus1(), shift, 2.0 * beta);
    const wide pow_p = shifted_pow(q.strike_plus1(), shift, 2.0 * beta);

    // J(y)^2 recovered at both inner nodes.
    const wide j2_m = z.minus * (static_cast<wide>(q.gap_inner_lo) * q.gap_outer_lo) /
                      (a2t * t.kappa_minus * pow_m);
    const wide j2_p = z.plus * (static_cast<wide>(q.gap_outer_hi) * q.gap_inner_hi) /
                      (a2t * t.kappa_plus * pow_p);
    const wide r_m = (j2_m - 1.0) / y_m;
    const wide r_p = (j2_p - 1.0) / y_p;

    const wide nu2 = (r_m - r_p) / (y_m - y_p);
    if (nu2 < 0.0) {
        throw Error(ErrorCode::NegativeNuSquared,
                    "quotes imply nu^2 = " + std::to_string(static_cast<double>(nu2)));
    }
    const wide rho_nu = 0.5 * (nu2 * y_m - r_m);
    const wide nu = wide_sqrt(nu2);
    const wide rho = nu > 0.0 ? rho_nu / nu : 0.0;
    if (!(wide_abs(rho) < 1.0)) {
        throw Error(ErrorCode::RhoOutOfRange,
                    "quotes imply rho = " + std::to_string(static_cast<double>(rho)));
    }
    return {nu, rho};
}

double atm_normal_vol(const QuoteSet& q) {
    return q.atm * std::sqrt(2.0 * std::numbers::pi) / std::sqrt(q.expiry);
}

}  // namespace

void QuoteSet::validate() const {
    if (!(expiry > 0.0) || !std::isfinite(expiry)) {
        throw Error(ErrorCode::InvalidArgument, "quote set expiry must be positive");
    }
    if (!std::isfinite(forward)) {
        throw Error(ErrorCode::InvalidArgument, "quote set forward must be finite");
    }
    for (double gap : {gap_outer_lo, gap_inner_lo, gap_inner_hi, gap_outer_hi}) {
        if (!(gap > 0.0) || !std::isfinite(gap)) {
            throw Error(ErrorCode::InvalidArgument, "quote set gaps must be positive");
        }
    }
    for (double price : {put_minus2, put_minus1, atm, call_plus1, call_plus2}) {
        if (!(price > 0.0) || !std::isfinite(price)) {
            throw Error(ErrorCode::InvalidArgument, "quote set prices must be positive");
        }
    }
}

double alpha_from_straddle(const QuoteSet& q, double beta, double shift) {
    return static_cast<double>(alpha_wide(q, beta, shift));
}

ZCoefficients z_coefficients(const QuoteSet& q) {
    const WideZ z = z_wide(q);
    return {static_cast<double>(z.minus), static_cast<double>(z.plus)};
}

NuRho nu_rho_from_z(ZCoefficients z, double alpha, const QuoteSet& q, double beta, double shift,
                    double sigma_atm) {
    q.validate();
    check_beta(beta);
    check_shifted(q, shift);
    if (!(alpha > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "alpha must be positive");
    }
    const LocalTerms t = local_terms(q, alpha, beta, shift, sigma_atm);
    const WideNuRho r = nu_rho_wide({z.minus, z.plus}, alpha, q, beta, shift, t);
    return {static_cast<double>(r.nu), static_cast<double>(r.rho)};
}

CalibrationResult calibrate(const QuoteSet& q, double beta, double shift) {
    const double sigma_atm = atm_normal_vol(q);
    const wide alpha = alpha_wide(q, beta, shift);
    const WideZ z = z_wide(q);
    const LocalTerms t = local_terms(q, static_cast<double>(alpha), beta, shift, sigma_atm);
    const WideNuRho nr = nu_rho_wide(z, alpha, q, beta, shift, t);

    CalibrationResult result;
    result.params = {static_cast<double>(alpha), beta, static_cast<double>(nr.rho),
                     static_cast<double>(nr.nu), shift};
    result.diagnostics = {static_cast<double>(z.minus), static_cast<double>(z.plus),
                          t.y_minus, t.y_plus, t.kappa_minus, t.kappa_plus, sigma_atm};
    return result;
}

SabrParams calibrate_uniform(const QuoteSet& q, double beta, double shift) {
    q.validate();
    check_beta(beta);
    check_shifted(q, shift);
    const double h = q.gap_inner_lo;
    for (double gap : {q.gap_outer_lo, q.gap_inner_hi, q.gap_outer_hi}) {
        if (std::fabs(gap - h) > 1e-12 * h) {
            throw Error(ErrorCode::InvalidArgument, "uniform formulas need equal strike gaps");
        }
    }
    const wide hw = h;
    const wide expiry = q.expiry;
    const wide atm = q.atm;
    // Quotes restated as calls c(F-2h), c(F-h), c(F+h), c(F+2h).
    const wide c_m2 = static_cast<wide>(q.put_minus2) + 2.0 * hw;
    const wide c_m1 = static_cast<wide>(q.put_minus1) + hw;
    const wide c_p1 = q.call_plus1;
    const wide c_p2 = q.call_plus2;

    const wide straddle = c_m1 + c_p1 - 2.0 * atm;
    if (!(straddle > kDegenerateTolerance * atm)) {
        throw Error(ErrorCode::DegenerateStraddle, "ATM butterfly is not positive");
    }
    const wide alpha = hw / shifted_pow(q.forward, shift, beta) * wide_sqrt(1.0 / expiry) *
                       wide_sqrt(atm / straddle);

    const wide den_m = c_m2 + atm - 2.0 * c_m1;
    const wide den_p = c_p2 + atm - 2.0 * c_p1;
    if (!(den_m > kDegenerateTolerance * atm) || !(den_p > kDegenerateTolerance * atm)) {
        throw Error(ErrorCode::DegenerateButterfly, "butterfly next to ATM is not positive");
    }
    const wide z_m = (c_m1 - hw) / den_m;
    const wide z_p = c_p1 / den_p;

    const double sigma_atm = atm_normal_vol(q);
    const wide kappa_h = 0.5 * kappa_at_distance(h, sigma_atm, q.expiry, q.kappa_sigma);
    const SabrParams y_params{static_cast<double>(alpha), beta, 0.0, 0.0, shift};
    const wide y_m = y_of_k(q.forward - h, q.forward, y_params);
    const wide y_p = y_of_k(q.forward + h, q.forward, y_params);
    const wide pow_m = shifted_pow(q.forward - h, shift, 2.0 * beta);
    const wide pow_p = shifted_pow(q.forward + h, shift, 2.0 * beta);

    const wide nu2 = (z_m * hw * hw / (y_m * pow_m) - z_p * hw * hw / (y_p * pow_p)) /
                         (expiry * kappa_h * alpha * alpha * (y_m - y_p)) +
                     1.0 / (y_m * y_p);
    if (nu2 < 0.0) {
        throw Error(ErrorCode::NegativeNuSquared, "quotes imply negative nu^2");
    }
    const wide nu = wide_sqrt(nu2);
    const wide rho =
        nu > 0.0 ? (nu2 * y_m - (z_m * hw * hw / (expiry * kappa_h * alpha * alpha * pow_m) -
                                  1.0) / y_m) /
                        (2.0 * nu)
                  : 0.0;
    if (!(wide_abs(rho) < 1.0)) {
        throw Error(ErrorCode::RhoOutOfRange, "quotes imply |rho| >= 1");
    }
    return {static_cast<double>(alpha), beta, static_cast<double>(rho), static_cast<double>(nu),
            shift};
}

// ---------------------------------------------------------------------------
// Small-step limit

namespace {

struct LimitEstimate {
    double alpha;
    double pdf_atm;
    double nu;
    double rho;
    OneSidedLimit put_side;
    OneSidedLimit call_side;
};

LimitEstimate estimate_limit(const PriceCurve& curve, double beta, double shift, double h,
                             KappaSigma convention) {
    const double forward = curve.forward;
    const double expiry = curve.expiry;
    const double inner = 0.25 * h;

    auto pdf = [&](double k) {
        return (curve.call(k + inner) - 2.0 * curve.call(k) + curve.call(k - inner)) /
               (inner * inner);
    };

    const double atm = curve.call(forward);
    const double sigma_atm = atm * std::sqrt(2.0 * std::numbers::pi) / std::sqrt(expiry);
    const double pdf_atm = pdf(forward);
    if (!(pdf_atm > 0.0) || !(atm > 0.0)) {
        throw Error(ErrorCode::DegenerateStraddle, "price curve has no ATM density");
    }
    const double fb_beta = std::pow(forward + shift, beta);
    const double alpha = std::sqrt(atm / (expiry * pdf_atm)) / fb_beta;

    // G(k) = otm(k) / (kappa(k) pdf(k) (k+b)^(2 beta)) at k = F + j h.
    double g[5];
    for (int j = -2; j <= 2; ++j) {
        const double k = forward + j * h;
        if (!(k + shift > 0.0)) {
            throw Error(ErrorCode::NonpositiveShiftedStrike, "difference stencil leaves k + b > 0");
        }
        const double otm = j < 0 ? curve.put(k) : curve.call(k);
        const double density = j == 0 ? pdf_atm : pdf(k);
        if (!(density > 0.0)) {
            throw Error(ErrorCode::DegenerateButterfly, "price curve density is not positive");
        }
        const double kap = kappa_at_distance(j * h, sigma_atm, expiry, convention);
        g[j + 2] = otm / (kap * density * std::pow(k + shift, 2.0 * beta));
    }

    // d/dy = -alpha s(k) d/dk with s = (k+b)^beta, so at the forward
    //   G_y = -alpha s G_k,  G_yy = alpha^2 s (s' G_k + s G_kk),
    // and nu^2 = G_yy / (T alpha^2), rho nu = -G_y / (T alpha^2).
    const double s = fb_beta;
    const double ds = beta * std::pow(forward + shift, beta - 1.0);
    auto to_params = [&](double gk, double gkk) -> OneSidedLimit {
        const double nu2 = s * (ds * gk + s * gkk) / expiry;
        if (nu2 < 0.0) {
            return {std::numeric_limits<double>::quiet_NaN(),
                    std::numeric_limits<double>::quiet_NaN()};
        }
        const double nu = std::sqrt(nu2);
        return {nu, nu > 0.0 ? s * gk / (expiry * alpha * nu) : 0.0};
    };

    const double gk_c = (g[3] - g[1]) / (2.0 * h);
    const double gkk_c = (g[3] - 2.0 * g[2] + g[1]) / (h * h);
    const double nu2_c = s * (ds * gk_c + s * gkk_c) / expiry;
    if (nu2_c < 0.0) {
        throw Error(ErrorCode::NegativeNuSquared,
                    "price curve implies nu^2 = " + std::to_string(nu2_c));
    }
    const OneSidedLimit central = to_params(gk_c, gkk_c);

    const OneSidedLimit put_side = to_params((3.0 * g[2] - 4.0 * g[1] + g[0]) / (2.0 * h),
                                             (g[2] - 2.0 * g[1] + g[0]) / (h * h));
    const OneSidedLimit call_side = to_params((-3.0 * g[2] + 4.0 * g[3] - g[4]) / (2.0 * h),
                                              (g[2] - 2.0 * g[3] + g[4]) / (h * h));
    return {alpha, pdf_atm, central.nu, central.rho, put_side, call_side};
}

double richardson1(double coarse, double fine) { return 2.0 * fine - coarse; }
double richardson2(double coarse, double fine) { return (4.0 * fine - coarse) / 3.0; }

void check_stable(const char* name, double coarse, double fine, double floor) {
    if (std::fabs(fine - coarse) > 0.1 * std::max(std::fabs(fine), floor)) {
        throw Error(ErrorCode::UnstableDifferences,
                    std::string(name) + " moved from " + std::to_string(coarse) + " to " +
                        std::to_string(fine) + " when halving the step");
    }
}

}  // namespace

LimitingResult limiting_params(const PriceCurve& curve, double beta, double shift, double h0,
                               KappaSigma convention) {
    check_beta(beta);
    if (!(h0 > 0.0) || !(curve.expiry > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "limiting_params needs h0 > 0 and T > 0");
    }
    const LimitEstimate coarse = estimate_limit(curve, beta, shift, h0, convention);
    const LimitEstimate fine = estimate_limit(curve, beta, shift, 0.5 * h0, convention);
    check_stable("alpha", coarse.alpha, fine.alpha, 0.0);
    check_stable("nu", coarse.nu, fine.nu, 0.01);
    check_stable("rho", coarse.rho, fine.rho, 0.01);

    auto extrapolate = [](const OneSidedLimit& a, const OneSidedLimit& b) {
        return OneSidedLimit{richardson1(a.nu, b.nu), richardson1(a.rho, b.rho)};
    };

    LimitingResult out;
    out.params.alpha = richardson2(coarse.alpha, fine.alpha);
    out.params.beta = beta;
    out.params.nu = std::max(richardson1(coarse.nu, fine.nu), 0.0);
    out.params.rho = richardson1(coarse.rho, fine.rho);
    out.params.shift = shift;
    out.put_side = extrapolate(coarse.put_side, fine.put_side);
    out.call_side = extrapolate(coarse.call_side, fine.call_side);
    out.pdf_atm = richardson2(coarse.pdf_atm, fine.pdf_atm);
    if (!(std::fabs(out.params.rho) < 1.0)) {
        throw Error(ErrorCode::RhoOutOfRange, "price curve implies |rho| >= 1");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Recalibration

QuoteSet sample_quote_set(const PriceCurve& curve, const Grid& grid, KappaSigma convention) {
    if (grid.forward() != curve.forward) {
        throw Error(ErrorCode::InvalidArgument, "grid forward differs from the source forward");
    }
    const std::size_t n = grid.forward_index();
    QuoteSet q;
    q.forward = curve.forward;
    q.expiry = curve.expiry;
    q.kappa_sigma = convention;
    q.put_minus2 = curve.put(grid.strike(n - 2));
    q.put_minus1 = curve.put(grid.strike(n - 1));
    q.atm = curve.call(grid.strike(n));
    q.call_plus1 = curve.call(grid.strike(n + 1));
    q.call_plus2 = curve.call(grid.strike(n + 2));
    q.gap_outer_lo = grid.step_down(n - 1);
    q.gap_inner_lo = grid.step_down(n);
    q.gap_inner_hi = grid.step_up(n);
    q.gap_outer_hi = grid.step_up(n + 1);
    return q;
}

CalibrationResult recalibrate(const PriceCurve& source, double target_beta, double target_shift,
                              const Grid& grid, KappaSigma convention) {
    return calibrate(sample_quote_set(source, grid, convention), target_beta, target_shift);
}

CalibrationResult recalibrate(const PriceSurface& source, double target_beta,
                              double target_shift) {
    return calibrate(extract_quote_set(source), target_beta, target_shift);
}

PriceCurve hagan_curve(const SabrParams& params, double forward, double expiry) {
    PriceCurve curve;
    curve.forward = forward;
    curve.expiry = expiry;
    curve.call = [=](double k) {
        return hagan_price({k, forward, expiry, params}, OptionKind::Call);
    };
    curve.put = [=](double k) {
        return hagan_price({k, forward, expiry, params}, OptionKind::Put);
    };
    return curve;
}

PriceCurve surface_curve(const PriceSurface& surface) {
    // Copies keep the curve valid independently of `surface`.
    const std::vector<double> strikes = surface.grid().strikes();
    const std::vector<double> calls = surface.calls();
    const std::vector<double> puts = surface.puts();
    auto lookup = [strikes](double k) {
        const auto it = std::lower_bound(strikes.begin(), strikes.end(), k);
        const double tol = 1e-9 * (strikes.back() - strikes.front()) / strikes.size();
        std::size_t j = static_cast<std::size_t>(it - strikes.begin());
        if (j < strikes.size() && std::fabs(strikes[j] - k) <= tol) return j;
        if (j > 0 && std::fabs(strikes[j - 1] - k) <= tol) return j - 1;
        throw Error(ErrorCode::MissingStrike, "strike " + std::to_string(k) + " is not a node");
    };
    PriceCurve curve;
    curve.forward = surface.slice().forward();
    curve.expiry = surface.slice().expiry();
    curve.call = [lookup, calls](double k) { return calls[lookup(k)]; };
    curve.put = [lookup, puts](double k) { return puts[lookup(k)]; };
    return curve;
}

}  // namespace ahsabr
