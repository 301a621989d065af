#include "ahsabr/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "ahsabr/error.hpp"

namespace ahsabr {

namespace {

const double kSqrt2Pi = std::sqrt(2.0 * std::numbers::pi);

void require_finite(double v, const char* name) {
    if (!std::isfinite(v)) {
        throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be finite");
    }
}

void require_shifted_positive(double strike, double shift) {
    if (!(strike + shift > 0.0)) {
        throw Error(ErrorCode::NonpositiveShiftedStrike,
                    "k + b = " + std::to_string(strike + shift) + " at k = " +
                        std::to_string(strike));
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// SabrParams, MarketSlice, Grid

void SabrParams::validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw Error(ErrorCode::InvalidArgument, "alpha must be positive");
    }
    if (!(beta >= 0.0 && beta <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "beta must lie in [0, 1]");
    }
    if (!(std::fabs(rho) < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "rho must lie in (-1, 1)");
    }
    if (!(nu >= 0.0) || !std::isfinite(nu)) {
        throw Error(ErrorCode::InvalidArgument, "nu must be non-negative");
    }
    if (!(shift >= 0.0) || !std::isfinite(shift)) {
        throw Error(ErrorCode::InvalidArgument, "shift must be non-negative");
    }
}

MarketSlice MarketSlice::from_normal_vol(double forward, double expiry, double atm_normal_vol,
                                         KappaSigma convention) {
    require_finite(forward, "forward");
    if (!(expiry > 0.0) || !std::isfinite(expiry)) {
        throw Error(ErrorCode::InvalidArgument, "expiry must be positive");
    }
    if (!(atm_normal_vol > 0.0) || !std::isfinite(atm_normal_vol)) {
        throw Error(ErrorCode::InvalidArgument, "ATM normal vol must be positive");
    }
    const double price = atm_normal_vol * std::sqrt(expiry) / kSqrt2Pi;
    return {forward, expiry, price, atm_normal_vol, convention};
}

MarketSlice MarketSlice::from_atm_price(double forward, double expiry, double atm_price,
                                        KappaSigma convention) {
    require_finite(forward, "forward");
    if (!(expiry > 0.0) || !std::isfinite(expiry)) {
        throw Error(ErrorCode::InvalidArgument, "expiry must be positive");
    }
    if (!(atm_price > 0.0) || !std::isfinite(atm_price)) {
        throw Error(ErrorCode::InvalidArgument, "ATM price must be positive");
    }
    const double vol = atm_price * kSqrt2Pi / std::sqrt(expiry);
    return {forward, expiry, atm_price, vol, convention};
}

double MarketSlice::kappa_scale() const noexcept {
    return convention_ == KappaSigma::Total ? atm_normal_vol_ * std::sqrt(expiry_)
                                            : atm_normal_vol_;
}

Grid Grid::from_strikes(std::vector<double> strikes, double forward) {
    for (std::size_t j = 0; j < strikes.size(); ++j) {
        require_finite(strikes[j], "strike");
        if (j > 0 && !(strikes[j] > strikes[j - 1])) {
            throw Error(ErrorCode::InvalidArgument, "strikes must be strictly increasing");
        }
    }
    std::size_t n = strikes.size();
    for (std::size_t j = 0; j < strikes.size(); ++j) {
        if (strikes[j] == forward) n = j;
    }
    if (n == strikes.size()) {
        throw Error(ErrorCode::InvalidArgument, "forward is not a grid node");
    }
    if (n < 2 || strikes.size() - 1 - n < 2) {
        throw Error(ErrorCode::ForwardTooCloseToBoundary,
                    "need two nodes on each side of the forward");
    }
    return {std::move(strikes), n, 0.0};
}

Grid build_uniform_grid(double lo, double hi, int count, double forward) {
    require_finite(lo, "lo");
    require_finite(hi, "hi");
    require_finite(forward, "forward");
    if (!(lo < forward && forward < hi)) {
        throw Error(ErrorCode::InvalidArgument, "require lo < forward < hi");
    }
    if (count < 2) {
        throw Error(ErrorCode::ForwardTooCloseToBoundary, "grid needs nodes around the forward");
    }
    const double step = (hi - lo) / (count - 1);
    const long long n = std::llround((forward - lo) / step);
    if (n < 2 || (count - 1) - n < 2) {
        throw Error(ErrorCode::ForwardTooCloseToBoundary,
                    "fewer than two nodes on one side of the forward");
    }
    if (count < 7) {
        throw Error(ErrorCode::InvalidArgument, "uniform grid needs at least 7 nodes");
    }
    std::vector<double> strikes(static_cast<std::size_t>(count));
    for (int j = 0; j < count; ++j) {
        strikes[static_cast<std::size_t>(j)] = forward + static_cast<double>(j - n) * step;
    }
    const double translation = forward - (lo + static_cast<double>(n) * step);
    return {std::move(strikes), static_cast<std::size_t>(n), translation};
}

// ---------------------------------------------------------------------------
// Local volatility and the one-step adjustment

double y_of_k(double strike, double forward, const SabrParams& params) {
    require_shifted_positive(strike, params.shift);
    require_shifted_positive(forward, params.shift);
    const double fb = forward + params.shift;
    const double log_ratio = std::log1p((strike - forward) / fb);  // ln((k+b)/(F+b))
    const double one_minus_beta = 1.0 - params.beta;
    if (one_minus_beta < 1e-12) {
        return -log_ratio / params.alpha;
    }
    return -std::pow(fb, one_minus_beta) * std::expm1(one_minus_beta * log_ratio) /
           (params.alpha * one_minus_beta);
}

double local_vol(double strike, double forward, const SabrParams& params) {
    const double y = y_of_k(strike, forward, params);
    const double j2 = 1.0 - 2.0 * params.rho * params.nu * y + params.nu * params.nu * y * y;
    return params.alpha * std::sqrt(j2) * std::pow(strike + params.shift, params.beta);
}

double kappa_at_distance(double distance, double sigma, double expiry, KappaSigma convention) {
    if (!(sigma > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "kappa needs a positive sigma");
    }
    const double scale = convention == KappaSigma::Total ? sigma * std::sqrt(expiry) : sigma;
    return 2.0 * one_minus_mills(std::fabs(distance) / scale);
}

double kappa(double strike, double forward, double sigma, double expiry, KappaSigma convention) {
    return kappa_at_distance(forward - strike, sigma, expiry, convention);
}

// ---------------------------------------------------------------------------
// One-step systems

std::vector<double> one_step_coefficients(const Grid& grid, const MarketSlice& slice,
                                          const SabrParams& params) {
    params.validate();
    if (grid.forward() != slice.forward()) {
        throw Error(ErrorCode::InvalidArgument, "slice forward is not the grid's forward node");
    }
    require_shifted_positive(grid.lo(), params.shift);

    const double forward = slice.forward();
    const double expiry = slice.expiry();
    const std::size_t size = grid.size();
    std::vector<double> z(size, 0.0);
    for (std::size_t j = 1; j + 1 < size; ++j) {
        const double k = grid.strike(j);
        const double vartheta = local_vol(k, forward, params);
        const double theta2 = vartheta * vartheta *
                              kappa_at_distance(k - forward, slice.atm_normal_vol(), expiry,
                                                slice.kappa_sigma());
        z[j] = expiry * theta2 / (grid.step_up(j) * grid.step_down(j));
    }
    return z;
}

TridiagonalSystem assemble_one_step(const Grid& grid, const MarketSlice& slice,
                                    const SabrParams& params, OptionKind kind) {
    const std::vector<double> z = one_step_coefficients(grid, slice, params);
    const std::size_t size = grid.size();
    const double forward = slice.forward();
    TridiagonalSystem sys(size);
    for (std::size_t j = 0; j < size; ++j) {
        const double k = grid.strike(j);
        sys.rhs[j] = kind == OptionKind::Call ? std::max(forward - k, 0.0)
                                              : std::max(k - forward, 0.0);
        sys.diag[j] = 1.0 + z[j];
        if (j == 0 || j + 1 == size) continue;  // absorbing: price = intrinsic
        const double up = grid.step_up(j);
        const double down = grid.step_down(j);
        sys.lower[j - 1] = -z[j] * up / (up + down);
        sys.upper[j] = -z[j] * down / (up + down);
    }
    return sys;
}

PriceSurface::PriceSurface(Grid grid, MarketSlice slice, SabrParams params,
                           std::vector<double> calls, std::vector<double> puts)
    : grid_(std::move(grid)), slice_(slice), params_(params), calls_(std::move(calls)),
      puts_(std::move(puts)) {
    const std::size_t size = grid_.size();
    if (calls_.size() != size || puts_.size() != size) {
        throw Error(ErrorCode::InvalidArgument, "price vectors do not match the grid");
    }
    density_.resize(size - 2);
    for (std::size_t j = 1; j + 1 < size; ++j) {
        const double up = grid_.step_up(j);
        const double down = grid_.step_down(j);
        const auto& v = j < grid_.forward_index() ? puts_ : calls_;
        density_[j - 1] = ((v[j + 1] - v[j]) / up - (v[j] - v[j - 1]) / down) * 2.0 / (up + down);
    }
}

double PriceSurface::otm_price(std::size_t j) const {
    return j < grid_.forward_index() ? puts_.at(j) : calls_.at(j);
}

double PriceSurface::density_mass() const {
    double mass = 0.0;
    for (std::size_t j = 1; j + 1 < grid_.size(); ++j) {
        mass += density_[j - 1] * 0.5 * (grid_.step_up(j) + grid_.step_down(j));
    }
    return mass;
}

PriceSurface solve_one_step(const Grid& grid, const MarketSlice& slice, const SabrParams& params) {
    // Both systems share the operator; only the payoff differs.
    const TridiagonalSystem calls = assemble_one_step(grid, slice, params, OptionKind::Call);
    TridiagonalSystem puts = calls;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        puts.rhs[j] = std::max(grid.strike(j) - slice.forward(), 0.0);
    }
    return {grid, slice, params, thomas_solve(calls), thomas_solve(puts)};
}

PriceSurface solve_self_consistent(const Grid& grid, double expiry, const SabrParams& params,
                                   KappaSigma convention) {
    params.validate();
    const double forward = grid.forward();
    const std::size_t n = grid.forward_index();
    const double to_vol = kSqrt2Pi / std::sqrt(expiry);

    auto solve_at = [&](double sigma) {
        return solve_one_step(grid, MarketSlice::from_normal_vol(forward, expiry, sigma, convention),
                              params);
    };
    auto implied = [&](const PriceSurface& s) {
        return 0.5 * (s.calls()[n] + s.puts()[n]) * to_vol;
    };

    // sigma -> ATM vol of the solved surface is a contraction with a fixed
    // point bracketed between 0 and infinity; secant steps converge in a
    // handful of solves, with a plain fixed-point step as fallback.
    double s0 = local_vol(forward, forward, params);
    PriceSurface surf = solve_at(s0);
    double g0 = implied(surf);
    double f0 = g0 - s0;
    double s1 = g0;
    for (int iter = 0; iter < 100; ++iter) {
        surf = solve_at(s1);
        const double g1 = implied(surf);
        const double f1 = g1 - s1;
        if (std::fabs(f1) <= 1e-15 * s1) {
            return surf;
        }
        double next = s1 - f1 * (s1 - s0) / (f1 - f0);
        if (!std::isfinite(next) || !(next > 0.0)) next = g1;
        s0 = s1;
        f0 = f1;
        s1 = next;
    }
    return surf;
}

std::vector<std::optional<double>> implied_vol_curve(const PriceSurface& surface) {
    const Grid& grid = surface.grid();
    const double forward = surface.slice().forward();
    const double expiry = surface.slice().expiry();
    std::vector<std::optional<double>> vols(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const OptionKind kind = j < grid.forward_index() ? OptionKind::Put : OptionKind::Call;
        try {
            vols[j] = bachelier_implied_vol(surface.otm_price(j), forward, grid.strike(j), expiry,
                                            kind);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::PriceOutOfBounds) throw;
        }
    }
    return vols;
}

QuoteSet extract_quote_set(const PriceSurface& surface) {
    const Grid& grid = surface.grid();
    const std::size_t n = grid.forward_index();
    QuoteSet q;
    q.forward = surface.slice().forward();
    q.expiry = surface.slice().expiry();
    q.kappa_sigma = surface.slice().kappa_sigma();
    q.put_minus2 = surface.puts()[n - 2];
    q.put_minus1 = surface.puts()[n - 1];
    q.atm = 0.5 * (surface.calls()[n] + surface.puts()[n]);
    q.call_plus1 = surface.calls()[n + 1];
    q.call_plus2 = surface.calls()[n + 2];
    q.gap_outer_lo = grid.step_down(n - 1);
    q.gap_inner_lo = grid.step_down(n);
    q.gap_inner_hi = grid.step_up(n);
    q.gap_outer_hi = grid.step_up(n + 1);
    return q;
}

}  // namespace ahsabr
