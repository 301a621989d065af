#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "ahsabr/numerics.hpp"
#include "ahsabr/quote_set.hpp"

namespace ahsabr {

/// Shifted-SABR constants: dF = a F_b^beta dW, da = nu a dZ, <dW,dZ> = rho dt
/// with F_b = F + shift.
struct SabrParams {
    double alpha = 0.0;
    double beta = 0.0;
    double rho = 0.0;
    double nu = 0.0;
    double shift = 0.0;

    /// Throws InvalidArgument unless alpha > 0, 0 <= beta <= 1, |rho| < 1,
    /// nu >= 0 and shift >= 0.
    void validate() const;

    bool operator==(const SabrParams&) const = default;
};

/// Forward, expiry and the ATM level, held both as an undiscounted price and
/// as the normal volatility it implies; the two are kept in lock step.
class MarketSlice {
public:
    static MarketSlice from_normal_vol(double forward, double expiry, double atm_normal_vol,
                                       KappaSigma convention = KappaSigma::Total);
    static MarketSlice from_atm_price(double forward, double expiry, double atm_price,
                                      KappaSigma convention = KappaSigma::Total);

    [[nodiscard]] double forward() const noexcept { return forward_; }
    [[nodiscard]] double expiry() const noexcept { return expiry_; }
    [[nodiscard]] double atm_price() const noexcept { return atm_price_; }
    [[nodiscard]] double atm_normal_vol() const noexcept { return atm_normal_vol_; }
    [[nodiscard]] KappaSigma kappa_sigma() const noexcept { return convention_; }

    /// The sigma that divides |F - k| inside kappa.
    [[nodiscard]] double kappa_scale() const noexcept;

private:
    MarketSlice(double forward, double expiry, double price, double vol, KappaSigma convention)
        : forward_(forward), expiry_(expiry), atm_price_(price), atm_normal_vol_(vol),
          convention_(convention) {}

    double forward_;
    double expiry_;
    double atm_price_;
    double atm_normal_vol_;
    KappaSigma convention_;
};

/// Strictly increasing strike mesh with the forward sitting exactly on a node
/// and at least two nodes on each side of it.
class Grid {
public:
    /// Throws InvalidArgument if strikes are not strictly increasing or no
    /// node equals forward, ForwardTooCloseToBoundary if fewer than two
    /// nodes lie on either side of it.
    static Grid from_strikes(std::vector<double> strikes, double forward);

    [[nodiscard]] std::size_t size() const noexcept { return strikes_.size(); }
    [[nodiscard]] const std::vector<double>& strikes() const noexcept { return strikes_; }
    [[nodiscard]] double strike(std::size_t j) const { return strikes_.at(j); }
    [[nodiscard]] std::size_t forward_index() const noexcept { return forward_index_; }
    [[nodiscard]] double forward() const { return strikes_[forward_index_]; }
    [[nodiscard]] double lo() const { return strikes_.front(); }
    [[nodiscard]] double hi() const { return strikes_.back(); }

    /// k[j+1] - k[j]
    [[nodiscard]] double step_up(std::size_t j) const { return strikes_.at(j + 1) - strikes_.at(j); }
    /// k[j] - k[j-1]
    [[nodiscard]] double step_down(std::size_t j) const { return strikes_.at(j) - strikes_.at(j - 1); }

    /// Translation applied by build_uniform_grid to put the forward on a node.
    [[nodiscard]] double translation() const noexcept { return translation_; }

private:
    Grid(std::vector<double> strikes, std::size_t forward_index, double translation)
        : strikes_(std::move(strikes)), forward_index_(forward_index), translation_(translation) {}

    friend Grid build_uniform_grid(double, double, int, double);

    std::vector<double> strikes_;
    std::size_t forward_index_ = 0;
    double translation_ = 0.0;
};

/// Uniform mesh of `count` nodes over [lo, hi], translated by at most half a
/// step so that the forward is a node.
Grid build_uniform_grid(double lo, double hi, int count, double forward);

/// Diffusion distance y(k) = (1/alpha) * integral_k^F (u + b)^-beta du.
double y_of_k(double strike, double forward, const SabrParams& params);

/// Shifted-SABR local normal volatility alpha * J(y(k)) * (k + b)^beta.
double local_vol(double strike, double forward, const SabrParams& params);

/// One-step adjustment kappa(k) = 2 (1 - xi Phi(-xi)/phi(xi)), xi = |F-k|/s,
/// where s = sigma*sqrt(T) under KappaSigma::Total and s = sigma otherwise.
double kappa(double strike, double forward, double sigma, double expiry,
             KappaSigma convention = KappaSigma::Total);

/// The kappa above with the strike distance passed directly; avoids the
/// rounding of forming F - k when the gap is already known.
double kappa_at_distance(double distance, double sigma, double expiry,
                         KappaSigma convention = KappaSigma::Total);

/// z[j] = T theta(k_j)^2 / (h+_j h-_j) on interior nodes; boundary nodes are
/// absorbing and carry z = 0.
std::vector<double> one_step_coefficients(const Grid& grid, const MarketSlice& slice,
                                          const SabrParams& params);

/// The one-step system for calls (rhs (F-k)+) or puts (rhs (k-F)+).
TridiagonalSystem assemble_one_step(const Grid& grid, const MarketSlice& slice,
                                    const SabrParams& params, OptionKind kind);

/// Solved one-step prices on a grid. Immutable once built.
class PriceSurface {
public:
    PriceSurface(Grid grid, MarketSlice slice, SabrParams params, std::vector<double> calls,
                 std::vector<double> puts);

    [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
    [[nodiscard]] const MarketSlice& slice() const noexcept { return slice_; }
    [[nodiscard]] const SabrParams& params() const noexcept { return params_; }
    [[nodiscard]] const std::vector<double>& calls() const noexcept { return calls_; }
    [[nodiscard]] const std::vector<double>& puts() const noexcept { return puts_; }

    /// Discrete density on interior nodes: density()[i] belongs to node i+1.
    [[nodiscard]] const std::vector<double>& density() const noexcept { return density_; }

    /// Out-of-the-money price at node j (put below F, call at and above).
    [[nodiscard]] double otm_price(std::size_t j) const;

    /// Trapezoid-weighted sum of the interior density.
    [[nodiscard]] double density_mass() const;

private:
    Grid grid_;
    MarketSlice slice_;
    SabrParams params_;
    std::vector<double> calls_;
    std::vector<double> puts_;
    std::vector<double> density_;
};

/// Assembles and solves both one-step systems using the ATM vol carried by
/// `slice` inside kappa.
PriceSurface solve_one_step(const Grid& grid, const MarketSlice& slice, const SabrParams& params);

/// Solves with the ATM vol fixed so that the solved ATM price equals
/// sigma * sqrt(T / 2 pi), i.e. the slice is consistent with its own output.
/// This is the surface the analytic calibration inverts exactly.
PriceSurface solve_self_consistent(const Grid& grid, double expiry, const SabrParams& params,
                                   KappaSigma convention = KappaSigma::Total);

/// Bachelier implied normal vol per node from the OTM price; nodes where the
/// price carries no time value are left empty.
std::vector<std::optional<double>> implied_vol_curve(const PriceSurface& surface);

/// The five near-ATM quotes around the forward node.
QuoteSet extract_quote_set(const PriceSurface& surface);

}  // namespace ahsabr
