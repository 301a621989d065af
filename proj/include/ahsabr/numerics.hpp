#pragma once

#include <cstddef>
#include <vector>

namespace ahsabr {

enum class OptionKind { Call, Put };

/// Standard normal density.
double norm_pdf(double x);

/// Standard normal distribution function, evaluated through erfc so the
/// lower tail keeps full relative accuracy.
double norm_cdf(double x);

/// 1 - x * Phi(-x) / phi(x) for x >= 0.
///
/// This is the time value of a Bachelier option measured in units of its
/// ATM-normalised density and is the core of the one-step adjustment. The
/// naive form cancels catastrophically once x exceeds a few units and turns
/// into 0/0 when phi underflows, so large arguments go through the Laplace
/// continued fraction for the Mills ratio instead.
double one_minus_mills(double x);

/// Undiscounted time value of a Bachelier option with |F - k| = distance
/// and terminal standard deviation stdev = sigma * sqrt(T).
double bachelier_time_value(double distance, double stdev);

/// Undiscounted Bachelier (normal model) price of a call or put on a forward.
double bachelier_price(double forward, double strike, double sigma, double expiry,
                       OptionKind kind);

/// Largest normal volatility (per sqrt year, absolute rate units) accepted by
/// the implied-vol inversion; defines the upper price bound.
inline constexpr double kMaxNormalVol = 1.0;

/// Inverts bachelier_price for sigma.
///
/// Throws PriceOutOfBounds when price <= intrinsic or when the price is at
/// or above the price implied by kMaxNormalVol.
double bachelier_implied_vol(double price, double forward, double strike, double expiry,
                             OptionKind kind);

/// A tridiagonal linear system. Row i reads
///   lower[i-1] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i].
struct TridiagonalSystem {
    std::vector<double> lower;
    std::vector<double> diag;
    std::vector<double> upper;
    std::vector<double> rhs;

    TridiagonalSystem() = default;
    explicit TridiagonalSystem(std::size_t n)
        : lower(n > 0 ? n - 1 : 0), diag(n), upper(n > 0 ? n - 1 : 0), rhs(n) {}

    [[nodiscard]] std::size_t size() const noexcept { return diag.size(); }

    /// Throws InvalidArgument if the vector lengths are inconsistent.
    void check_shape() const;
};

/// Thomas algorithm without pivoting. Throws SingularPivot when a pivot's
/// magnitude drops below 1e-300.
std::vector<double> thomas_solve(const TridiagonalSystem& sys);

}  // namespace ahsabr
