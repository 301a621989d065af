#include "ahsabr/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ahsabr/calibration.hpp"
#include "ahsabr/error.hpp"
#include "ahsabr/market_io.hpp"

namespace ahsabr::cli {

namespace {

using nlohmann::json;

constexpr double kPercent = 0.01;
constexpr double kBasisPoint = 1e-4;

[[noreturn]] void config_error(const std::string& msg) {
    throw Error(ErrorCode::InvalidArgument, msg);
}

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// --- config parsing -------------------------------------------------------

void take_number(const json& obj, const std::string& section, const char* key,
                 std::optional<double>& dst) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_number()) config_error(section + "." + key + " must be a number");
    dst = v.get<double>();
}

void take_string(const json& obj, const std::string& section, const char* key,
                 std::optional<std::string>& dst) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_string()) config_error(section + "." + key + " must be a string");
    dst = v.get<std::string>();
}

void reject_unknown(const json& obj, const std::string& section,
                    std::initializer_list<const char*> known) {
    if (!obj.is_object()) config_error(section + " must be an object");
    for (const auto& item : obj.items()) {
        const bool ok = std::any_of(known.begin(), known.end(),
                                    [&](const char* k) { return item.key() == k; });
        if (!ok) config_error("unknown config field " + section + "." + item.key());
    }
}

KappaSigma parse_kappa_sigma(const std::string& s) {
    if (s == "total") return KappaSigma::Total;
    if (s == "annualized") return KappaSigma::Annualized;
    config_error("kappa_sigma must be 'total' or 'annualized', got '" + s + "'");
}

// --- shared steps ---------------------------------------------------------

double required(const std::optional<double>& v, const char* field) {
    if (!v) config_error("missing required setting " + std::string(field));
    return *v;
}

SabrParams model_params(const RunConfig& c) {
    SabrParams p;
    p.alpha = required(c.alpha, "model.alpha") * kPercent;
    p.beta = required(c.beta, "model.beta") * kPercent;
    p.rho = required(c.rho, "model.rho") * kPercent;
    p.nu = required(c.nu, "model.nu") * kPercent;
    p.shift = c.shift.value_or(0.0) * kPercent;
    p.validate();
    return p;
}

double forward_of(const RunConfig& c) { return required(c.forward, "market.forward") * kPercent; }

double expiry_of(const RunConfig& c) {
    const double t = required(c.expiry, "market.expiry");
    if (!(t > 0.0)) config_error("market.expiry must be positive");
    return t;
}

Grid grid_of(const RunConfig& c) {
    const double lo = required(c.grid_lo, "grid.lo") * kPercent;
    const double hi = required(c.grid_hi, "grid.hi") * kPercent;
    if (!c.grid_count) config_error("missing required setting grid.count");
    return build_uniform_grid(lo, hi, *c.grid_count, forward_of(c));
}

GridSpec grid_spec_of(const Grid& g) {
    return {g.lo(), g.hi(), static_cast<int>(g.size()), g.forward()};
}

PriceSurface price_surface(const RunConfig& c, const Grid& grid, const SabrParams& p) {
    const double t = expiry_of(c);
    if (c.atm_vol_bp && c.atm_price) {
        config_error("give at most one of market.atm_vol_bp and market.atm_price");
    }
    if (c.atm_vol_bp) {
        return solve_one_step(grid,
                              MarketSlice::from_normal_vol(grid.forward(), t,
                                                           *c.atm_vol_bp * kBasisPoint,
                                                           c.kappa_sigma),
                              p);
    }
    if (c.atm_price) {
        return solve_one_step(
            grid,
            MarketSlice::from_atm_price(grid.forward(), t, *c.atm_price * kPercent, c.kappa_sigma),
            p);
    }
    return solve_self_consistent(grid, t, p, c.kappa_sigma);
}

void emit(const RunConfig& c, const std::string& text, std::ostream& out) {
    if (c.out) {
        write_text_file(*c.out, text);
    } else {
        out << text;
    }
}

std::vector<VolPoint> vol_points(const PriceSurface& s) {
    std::vector<VolPoint> pts;
    const auto vols = implied_vol_curve(s);
    for (std::size_t j = 0; j < vols.size(); ++j) {
        if (vols[j]) pts.push_back({s.grid().strike(j), *vols[j] / kBasisPoint});
    }
    return pts;
}

// --- commands -------------------------------------------------------------

int cmd_price(const RunConfig& c, std::ostream& out) {
    const Grid grid = grid_of(c);
    const SabrParams p = model_params(c);
    const PriceSurface s = price_surface(c, grid, p);
    const auto vols = implied_vol_curve(s);

    std::ostringstream csv;
    csv << "strike,call,put,density,normal_vol_bp\n";
    const std::size_t last = grid.size() - 1;
    for (std::size_t j = 0; j <= last; ++j) {
        csv << fmt17(grid.strike(j)) << ',' << fmt17(s.calls()[j]) << ',' << fmt17(s.puts()[j])
            << ',';
        if (j > 0 && j < last) csv << fmt17(s.density()[j - 1]);
        csv << ',';
        if (vols[j]) csv << fmt17(*vols[j] / kBasisPoint);
        csv << '\n';
    }
    emit(c, csv.str(), out);
    return kExitOk;
}

int cmd_density(const RunConfig& c, std::ostream& out, std::ostream& err) {
    const Grid grid = grid_of(c);
    const SabrParams p = model_params(c);
    const PriceSurface s = price_surface(c, grid, p);

    std::ostringstream csv;
    csv << "strike,density\n";
    double mass = 0.0;
    double first_moment = 0.0;
    double min_density = s.density().empty() ? 0.0 : s.density().front();
    for (std::size_t i = 0; i < s.density().size(); ++i) {
        const std::size_t j = i + 1;
        const double d = s.density()[i];
        const double weight = 0.5 * (grid.step_up(j) + grid.step_down(j));
        mass += d * weight;
        first_moment += d * weight * grid.strike(j);
        min_density = std::min(min_density, d);
        csv << fmt17(grid.strike(j)) << ',' << fmt17(d) << '\n';
    }
    emit(c, csv.str(), out);

    // Summary goes to stdout unless the density itself did.
    std::ostream& summary = c.out ? out : err;
    summary << "mass=" << fmt17(mass) << '\n'
            << "mean=" << fmt17(mass > 0.0 ? first_moment / mass : 0.0) << '\n'
            << "min_density=" << fmt17(min_density) << '\n';
    return kExitOk;
}

int cmd_calibrate(const RunConfig& c, std::ostream& out) {
    if (!c.quotes) config_error("missing required setting quotes (--quotes)");
    const double forward = forward_of(c);
    const double expiry = expiry_of(c);
    const double beta = required(c.beta, "model.beta") * kPercent;
    const double shift = c.shift.value_or(0.0) * kPercent;

    double step = 0.0;
    if (c.grid_step) {
        step = *c.grid_step * kPercent;
    } else if (c.grid_lo && c.grid_hi && c.grid_count && *c.grid_count > 1) {
        step = (*c.grid_hi - *c.grid_lo) * kPercent / (*c.grid_count - 1);
    } else {
        config_error("missing calibrate.grid_step (or a grid to derive it from)");
    }

    const auto raw = parse_quotes_file(*c.quotes);
    std::vector<RateQuote> rate_quotes;
    rate_quotes.reserve(raw.size());
    for (const auto& q : raw) rate_quotes.push_back(to_rate_space(q));
    const QuoteSet qs = assemble_quote_set(rate_quotes, forward, expiry, step, c.kappa_sigma);

    const CalibrationResult res = calibrate(qs, beta, shift);

    CalibrationReport report;
    report.params = res.params;
    report.diagnostics = res.diagnostics;
    report.quotes = qs;
    report.metadata = c.metadata;
    report.metadata["command"] = "calibrate";
    if (!raw.empty()) {
        report.metadata.emplace("contract", raw.front().contract);
        report.metadata.emplace("quote_date", raw.front().quote_date);
    }

    if (c.grid_lo || c.grid_hi || c.grid_count) {
        const Grid grid = grid_of(c);
        const PriceSurface s = solve_one_step(
            grid, MarketSlice::from_atm_price(forward, expiry, qs.atm, c.kappa_sigma), res.params);
        report.grid = grid_spec_of(grid);
        report.vol_curve = vol_points(s);
    } else {
        report.grid = {forward - 2.0 * step, forward + 2.0 * step, 5, forward};
    }
    emit(c, report_to_json(report), out);
    return kExitOk;
}

int cmd_recalibrate(const RunConfig& c, std::ostream& out) {
    const SabrParams source = model_params(c);
    const double expiry = expiry_of(c);
    const Grid grid = grid_of(c);
    const double forward = grid.forward();
    const double target_beta = c.target_beta ? *c.target_beta * kPercent : source.beta;
    const double target_shift = c.target_shift ? *c.target_shift * kPercent : source.shift;

    QuoteSet qs;
    std::vector<std::optional<double>> source_vols(grid.size());
    if (c.source == "hagan") {
        const PriceCurve curve = hagan_curve(source, forward, expiry);
        qs = sample_quote_set(curve, grid, c.kappa_sigma);
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const double k = grid.strike(j);
            const OptionKind kind = k < forward ? OptionKind::Put : OptionKind::Call;
            try {
                const double price = kind == OptionKind::Put ? curve.put(k) : curve.call(k);
                source_vols[j] = bachelier_implied_vol(price, forward, k, expiry, kind);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::PriceOutOfBounds) throw;
            }
        }
    } else if (c.source == "onestep") {
        const PriceSurface s = price_surface(c, grid, source);
        qs = extract_quote_set(s);
        source_vols = implied_vol_curve(s);
    } else {
        config_error("recalibrate.source must be 'hagan' or 'onestep', got '" + c.source + "'");
    }

    const CalibrationResult res = calibrate(qs, target_beta, target_shift);
    const PriceSurface target = solve_one_step(
        grid, MarketSlice::from_atm_price(forward, expiry, qs.atm, c.kappa_sigma), res.params);
    const auto target_vols = implied_vol_curve(target);

    CalibrationReport report;
    report.params = res.params;
    report.diagnostics = res.diagnostics;
    report.quotes = qs;
    report.grid = grid_spec_of(grid);
    report.source_params = source;
    report.metadata = c.metadata;
    report.metadata["command"] = "recalibrate";
    report.metadata["source"] = c.source;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        if (target_vols[j]) report.vol_curve.push_back({grid.strike(j), *target_vols[j] / kBasisPoint});
        if (target_vols[j] && source_vols[j]) {
            report.smile_comparison.push_back(
                {grid.strike(j), *source_vols[j] / kBasisPoint, *target_vols[j] / kBasisPoint});
        }
    }
    emit(c, report_to_json(report), out);
    return kExitOk;
}

// Command-line values that override the config file.
struct Overrides {
    std::optional<std::string> config;
    std::vector<std::function<void(RunConfig&)>> setters;
};

void add_common_flags(CLI::App& app, Overrides& ov) {
    app.add_option_function<std::string>(
        "--config", [&ov](const std::string& v) { ov.config = v; }, "JSON config file");

    auto number = [&](const char* flag, std::optional<double> RunConfig::*field,
                      const char* help) {
        app.add_option_function<double>(
            flag,
            [&ov, field](double v) { ov.setters.push_back([field, v](RunConfig& c) { c.*field = v; }); },
            help);
    };
    number("--grid-lo", &RunConfig::grid_lo, "lowest strike, percent");
    number("--grid-hi", &RunConfig::grid_hi, "highest strike, percent");
    app.add_option_function<int>(
        "--grid-count",
        [&ov](int v) { ov.setters.push_back([v](RunConfig& c) { c.grid_count = v; }); },
        "number of grid nodes");
    number("--forward", &RunConfig::forward, "forward rate, percent");
    number("--expiry", &RunConfig::expiry, "expiry in years");
    number("--alpha", &RunConfig::alpha, "SABR alpha, percent");
    number("--beta", &RunConfig::beta, "SABR beta, percent");
    number("--rho", &RunConfig::rho, "SABR rho, percent");
    number("--nu", &RunConfig::nu, "SABR nu, percent");
    number("--shift", &RunConfig::shift, "shift b, percent");
    number("--atm-vol-bp", &RunConfig::atm_vol_bp, "ATM normal vol, basis points");
    number("--atm-price", &RunConfig::atm_price, "ATM price, percent");
    app.add_option_function<std::string>(
        "--quotes",
        [&ov](const std::string& v) { ov.setters.push_back([v](RunConfig& c) { c.quotes = v; }); },
        "quote CSV file");
    app.add_option_function<std::string>(
        "--out",
        [&ov](const std::string& v) { ov.setters.push_back([v](RunConfig& c) { c.out = v; }); },
        "output file (stdout when omitted)");
    app.add_option_function<std::string>(
           "--kappa-sigma",
           [&ov](const std::string& v) {
               ov.setters.push_back([v](RunConfig& c) { c.kappa_sigma = parse_kappa_sigma(v); });
           },
           "sigma inside kappa: total or annualized")
        ->check(CLI::IsMember({"total", "annualized"}));
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        config_error(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown(j, "config",
                   {"grid", "model", "market", "kappa_sigma", "quotes", "out", "calibrate",
                    "recalibrate", "metadata"});

    RunConfig c;
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        reject_unknown(g, "grid", {"lo", "hi", "count"});
        take_number(g, "grid", "lo", c.grid_lo);
        take_number(g, "grid", "hi", c.grid_hi);
        if (g.contains("count")) {
            if (!g["count"].is_number_integer()) config_error("grid.count must be an integer");
            c.grid_count = g["count"].get<int>();
        }
    }
    if (j.contains("model")) {
        const auto& m = j["model"];
        reject_unknown(m, "model", {"alpha", "beta", "rho", "nu", "shift"});
        take_number(m, "model", "alpha", c.alpha);
        take_number(m, "model", "beta", c.beta);
        take_number(m, "model", "rho", c.rho);
        take_number(m, "model", "nu", c.nu);
        take_number(m, "model", "shift", c.shift);
    }
    if (j.contains("market")) {
        const auto& m = j["market"];
        reject_unknown(m, "market", {"forward", "expiry", "atm_vol_bp", "atm_price"});
        take_number(m, "market", "forward", c.forward);
        take_number(m, "market", "expiry", c.expiry);
        take_number(m, "market", "atm_vol_bp", c.atm_vol_bp);
        take_number(m, "market", "atm_price", c.atm_price);
    }
    if (j.contains("kappa_sigma")) {
        if (!j["kappa_sigma"].is_string()) config_error("kappa_sigma must be a string");
        c.kappa_sigma = parse_kappa_sigma(j["kappa_sigma"].get<std::string>());
    }
    take_string(j, "config", "quotes", c.quotes);
    take_string(j, "config", "out", c.out);
    if (j.contains("calibrate")) {
        const auto& s = j["calibrate"];
        reject_unknown(s, "calibrate", {"grid_step"});
        take_number(s, "calibrate", "grid_step", c.grid_step);
    }
    if (j.contains("recalibrate")) {
        const auto& s = j["recalibrate"];
        reject_unknown(s, "recalibrate", {"source", "target_beta", "target_shift"});
        std::optional<std::string> source;
        take_string(s, "recalibrate", "source", source);
        if (source) c.source = *source;
        take_number(s, "recalibrate", "target_beta", c.target_beta);
        take_number(s, "recalibrate", "target_shift", c.target_shift);
    }
    if (j.contains("metadata")) {
        const auto& m = j["metadata"];
        if (!m.is_object()) config_error("metadata must be an object");
        for (const auto& [key, value] : m.items()) {
            if (!value.is_string()) config_error("metadata." + key + " must be a string");
            c.metadata[key] = value.get<std::string>();
        }
    }
    return c;
}

RunConfig load_config(const std::string& path) { return parse_config(read_text_file(path)); }

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"One-step shifted SABR pricing and analytic calibration"};
    app.name("ahsabr");
    app.require_subcommand(1);

    Overrides ov;
    std::optional<std::string> source_flag;
    std::optional<double> target_beta_flag;
    std::optional<double> target_shift_flag;
    std::optional<double> grid_step_flag;

    CLI::App* price = app.add_subcommand("price", "price a grid and write strike,call,put,density,vol");
    CLI::App* calib = app.add_subcommand("calibrate", "calibrate alpha, nu, rho to a quote file");
    CLI::App* recal = app.add_subcommand("recalibrate", "fit the one-step model to another model");
    CLI::App* dens = app.add_subcommand("density", "write the implied density and its summary");
    for (CLI::App* sub : {price, calib, recal, dens}) add_common_flags(*sub, ov);
    calib->add_option_function<double>(
        "--grid-step", [&](double v) { grid_step_flag = v; }, "quote strike spacing, percent");
    recal->add_option_function<std::string>(
             "--source", [&](const std::string& v) { source_flag = v; }, "hagan or onestep")
        ->check(CLI::IsMember({"hagan", "onestep"}));
    recal->add_option_function<double>(
        "--target-beta", [&](double v) { target_beta_flag = v; }, "target beta, percent");
    recal->add_option_function<double>(
        "--target-shift", [&](double v) { target_shift_flag = v; }, "target shift, percent");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        RunConfig config = ov.config ? load_config(*ov.config) : RunConfig{};
        for (const auto& set : ov.setters) set(config);
        if (grid_step_flag) config.grid_step = grid_step_flag;
        if (source_flag) config.source = *source_flag;
        if (target_beta_flag) config.target_beta = target_beta_flag;
        if (target_shift_flag) config.target_shift = target_shift_flag;

        if (price->parsed()) return cmd_price(config, out);
        if (dens->parsed()) return cmd_density(config, out, err);
        if (calib->parsed()) return cmd_calibrate(config, out);
        return cmd_recalibrate(config, out);
    } catch (const Error& e) {
        err << "ahsabr: " << e.what() << '\n';
        return is_numerical(e.code()) ? kExitNumerical : kExitConfig;
    } catch (const std::exception& e) {
        err << "ahsabr: " << e.what() << '\n';
        return kExitConfig;
    }
}

}  // namespace ahsabr::cli
