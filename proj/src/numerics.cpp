#include "ahsabr/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ahsabr/error.hpp"

namespace ahsabr {

namespace {

constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;  // 1/sqrt(2 pi)
constexpr double kContinuedFractionFrom = 3.0;
constexpr int kContinuedFractionDepth = 160;

}  // namespace

double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double one_minus_mills(double x) {
    x = std::fabs(x);
    if (x < kContinuedFractionFrom) {
        return 1.0 - x * norm_cdf(-x) / norm_pdf(x);
    }
    if (std::isinf(x)) return 0.0;
    // Phi(-x)/phi(x) = 1/(x + 1/(x + 2/(x + 3/(x + ...)))).
    // Writing it as 1/(x + t) gives 1 - x R = t R with no cancellation.
    double tail = x;
    for (int k = kContinuedFractionDepth; k >= 2; --k) {
        tail = x + k / tail;
    }
    const double t = 1.0 / tail;
    const double mills = 1.0 / (x + t);
    return t * mills;
}

double bachelier_time_value(double distance, double stdev) {
    distance = std::fabs(distance);
    if (distance == 0.0) return stdev * kInvSqrt2Pi;
    const double d = distance / stdev;
    return stdev * norm_pdf(d) * one_minus_mills(d);
}

double bachelier_price(double forward, double strike, double sigma, double expiry,
                       OptionKind kind) {
    const double stdev = sigma * std::sqrt(expiry);
    const double moneyness = forward - strike;
    const double intrinsic =
        kind == OptionKind::Call ? std::max(moneyness, 0.0) : std::max(-moneyness, 0.0);
    return intrinsic + bachelier_time_value(moneyness, stdev);
}

double bachelier_implied_vol(double price, double forward, double strike, double expiry,
                             OptionKind kind) {
    if (!(expiry > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "expiry must be positive");
    }
    const double moneyness = forward - strike;
    const double intrinsic =
        kind == OptionKind::Call ? std::max(moneyness, 0.0) : std::max(-moneyness, 0.0);
    const double value = price - intrinsic;
    const double root_t = std::sqrt(expiry);
    const double distance = std::fabs(moneyness);
    const double stdev_max = kMaxNormalVol * root_t;

    if (!(value > 0.0)) {
        throw Error(ErrorCode::PriceOutOfBounds,
                    "price " + std::to_string(price) + " not above intrinsic");
    }
    if (!(value < bachelier_time_value(distance, stdev_max))) {
        throw Error(ErrorCode::PriceOutOfBounds,
                    "price " + std::to_string(price) + " at or above the upper bound");
    }
    if (distance == 0.0) {
        return value / (kInvSqrt2Pi * root_t);
    }

    // Newton on log(time value) against log(stdev), bracketed by bisection.
    double lo = 0.0;
    double hi = stdev_max;
    double s = std::min(value / kInvSqrt2Pi, 0.5 * stdev_max);
    const double target = std::log(value);
    for (int iter = 0; iter < 200; ++iter) {
        const double tv = bachelier_time_value(distance, s);
        if (tv <= 0.0) {
            lo = s;
            s = 0.5 * (lo + hi);
            continue;
        }
        const double f = std::log(tv) - target;
        if (f > 0.0) hi = s; else lo = s;
        const double vega = norm_pdf(distance / s);
        const double dlog = s * vega / tv;  // d log(tv) / d log(s)
        double next = s * std::exp(-f / dlog);
        if (!(next > lo && next < hi) || !std::isfinite(next)) {
            next = 0.5 * (lo + hi);
        }
        if (std::fabs(next - s) <= 1e-16 * s) {
            s = next;
            break;
        }
        s = next;
    }
    return s / root_t;
}

void TridiagonalSystem::check_shape() const {
    const std::size_t n = diag.size();
    if (n == 0 || rhs.size() != n || lower.size() != n - 1 || upper.size() != n - 1) {
        throw Error(ErrorCode::InvalidArgument, "inconsistent tridiagonal system shape");
    }
}

std::vector<double> thomas_solve(const TridiagonalSystem& sys) {
    sys.check_shape();
    const std::size_t n = sys.size();
    std::vector<double> c_prime(n);
    std::vector<double> x(n);

    double pivot = sys.diag[0];
    if (std::fabs(pivot) < 1e-300) {
        throw Error(ErrorCode::SingularPivot, "pivot at row 0");
    }
    c_prime[0] = n > 1 ? sys.upper[0] / pivot : 0.0;
    x[0] = sys.rhs[0] / pivot;
    for (std::size_t i = 1; i < n; ++i) {
        pivot = sys.diag[i] - sys.lower[i - 1] * c_prime[i - 1];
        if (std::fabs(pivot) < 1e-300) {
            throw Error(ErrorCode::SingularPivot, "pivot at row " + std::to_string(i));
        }
        c_prime[i] = i + 1 < n ? sys.upper[i] / pivot : 0.0;
        x[i] = (sys.rhs[i] - sys.lower[i - 1] * x[i - 1]) / pivot;
    }
    for (std::size_t i = n - 1; i-- > 0;) {
        x[i] -= c_prime[i] * x[i + 1];
    }
    return x;
}

}  // namespace ahsabr
