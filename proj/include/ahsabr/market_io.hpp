#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ahsabr/calibration.hpp"

namespace ahsabr {

/// One exchange quote on an interest-rate future, in futures-price space.
struct FuturesOptionQuote {
    std::string contract;
    std::string quote_date;  // ISO yyyy-mm-dd
    OptionKind kind = OptionKind::Call;  // on the futures price
    double strike_price = 0.0;           // price points, e.g. 99.50
    double last = 0.0;                   // premium in price points

    bool operator==(const FuturesOptionQuote&) const = default;
};

/// The same quote restated on the rate r = (100 - price) / 100.
struct RateQuote {
    std::string contract;
    std::string quote_date;
    OptionKind kind = OptionKind::Put;  // on the rate; a price call is a rate put
    double strike = 0.0;
    double premium = 0.0;  // rate units

    bool operator==(const RateQuote&) const = default;
};

/// Parses the quote CSV (header `contract,quote_date,kind,strike_price,last`).
/// Throws MalformedRow naming the 1-based line on the first bad row.
std::vector<FuturesOptionQuote> parse_quotes(std::istream& in);
std::vector<FuturesOptionQuote> parse_quotes_file(const std::string& path);

/// Writes quotes in the same CSV layout with 17 significant digits.
void write_quotes(std::ostream& out, const std::vector<FuturesOptionQuote>& quotes);

RateQuote to_rate_space(const FuturesOptionQuote& q);

/// Inverse of to_rate_space. Strikes and premiums are rounded to 1e-10 price
/// points, which makes the pair an exact involution for exchange-style
/// decimal quotes.
FuturesOptionQuote to_price_space(const RateQuote& q);

/// Matches quotes to the nodes F - 2h .. F + 2h (tolerance h/10) and builds
/// the five-quote set. Out-of-the-money quotes are preferred; a missing side
/// is completed by parity from the other kind at the same strike.
///
/// Throws MissingStrike naming the first node with no usable quote.
QuoteSet assemble_quote_set(const std::vector<RateQuote>& quotes, double forward, double expiry,
                            double grid_step, KappaSigma convention = KappaSigma::Total);

struct GridSpec {
    double lo = 0.0;
    double hi = 0.0;
    int count = 0;
    double forward = 0.0;

    bool operator==(const GridSpec&) const = default;
};

struct VolPoint {
    double strike = 0.0;
    double normal_vol_bp = 0.0;

    bool operator==(const VolPoint&) const = default;
};

struct SmilePoint {
    double strike = 0.0;
    double source_vol_bp = 0.0;
    double target_vol_bp = 0.0;

    bool operator==(const SmilePoint&) const = default;
};

struct CalibrationReport {
    SabrParams params;
    CalibrationDiagnostics diagnostics;
    QuoteSet quotes;
    GridSpec grid;
    std::vector<VolPoint> vol_curve;
    std::map<std::string, std::string> metadata;
    std::optional<SabrParams> source_params;  // recalibration only
    std::vector<SmilePoint> smile_comparison;   // recalibration only

    bool operator==(const CalibrationReport&) const = default;
};

inline constexpr int kReportSchemaVersion = 1;

/// JSON report. Throws NonFiniteValue if any number is NaN or infinite.
std::string report_to_json(const CalibrationReport& report);

/// Throws SchemaMismatch on a wrong or missing schema_version or on missing
/// or mistyped fields.
CalibrationReport report_from_json(const std::string& text);

void write_report(const CalibrationReport& report, const std::string& path);
CalibrationReport read_report(const std::string& path);

/// Whole-file helpers shared by the reader and the command-line tool.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace ahsabr
