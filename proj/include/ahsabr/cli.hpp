#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "ahsabr/quote_set.hpp"

namespace ahsabr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

/// Settings of one run. Rates, model constants and prices are held in
/// percent exactly as written in the config file or on the command line;
/// expiry is in years and the ATM vol in basis points.
struct RunConfig {
    std::optional<double> grid_lo;
    std::optional<double> grid_hi;
    std::optional<int> grid_count;

    std::optional<double> alpha;
    std::optional<double> beta;
    std::optional<double> rho;
    std::optional<double> nu;
    std::optional<double> shift;

    std::optional<double> forward;
    std::optional<double> expiry;
    std::optional<double> atm_vol_bp;
    std::optional<double> atm_price;

    KappaSigma kappa_sigma = KappaSigma::Total;

    std::optional<std::string> quotes;
    std::optional<std::string> out;

    std::optional<double> grid_step;  // calibrate: strike spacing of the quotes

    std::string source = "hagan";  // recalibrate: hagan | onestep
    std::optional<double> target_beta;
    std::optional<double> target_shift;

    std::map<std::string, std::string> metadata;
};

/// Reads a JSON config. Unknown keys and wrongly typed values are rejected
/// with the offending field named (InvalidArgument).
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text);

/// Entry point of the `ahsabr` tool. Returns the process exit code: 0 on
/// success, 2 for configuration or input errors and 3 for numerical failures.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ahsabr::cli
