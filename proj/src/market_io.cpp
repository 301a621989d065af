#include "ahsabr/market_io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "ahsabr/error.hpp"

namespace ahsabr {

namespace {

constexpr const char* kQuoteHeader = "contract,quote_date,kind,strike_price,last";

[[noreturn]] void bad_row(std::size_t line, const std::string& reason) {
    throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line) + ": " + reason);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool parse_number(const std::string& text, double& value) {
    const char* first = text.data();
    const char* last = first + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    return ec == std::errc{} && ptr == last && std::isfinite(value);
}

bool is_iso_date(const std::string& text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return false;
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    auto digits = [&](std::size_t pos, std::size_t len, auto& out) {
        auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
        return ec == std::errc{} && ptr == text.data() + pos + len;
    };
    if (!digits(0, 4, y) || !digits(5, 2, m) || !digits(8, 2, d)) return false;
    return std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m},
                                       std::chrono::day{d}}
        .ok();
}

// Rounds to `digits` decimals. Dividing by the exact power of ten (rather
// than multiplying by its inexact reciprocal) yields the double nearest to
// the decimal result.
double round_decimals(double value, int digits) {
    const double scale = std::pow(10.0, digits);
    return std::round(value * scale) / scale;
}

// --- report writing -------------------------------------------------------

class JsonWriter {
public:
    void number(double v, const char* where) {
        if (!std::isfinite(v)) {
            throw Error(ErrorCode::NonFiniteValue, std::string("non-finite value in ") + where);
        }
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out_ << buf;
    }
    void string(const std::string& s) { out_ << nlohmann::json(s).dump(); }
    std::ostringstream& raw() { return out_; }
    std::string str() const { return out_.str(); }

private:
    std::ostringstream out_;
};

void write_params(JsonWriter& w, const SabrParams& p, const char* indent) {
    auto& o = w.raw();
    o << "{\n";
    const std::pair<const char*, double> fields[] = {
        {"alpha", p.alpha}, {"beta", p.beta}, {"rho", p.rho}, {"nu", p.nu}, {"shift", p.shift}};
    for (std::size_t i = 0; i < std::size(fields); ++i) {
        o << indent << "  \"" << fields[i].first << "\": ";
        w.number(fields[i].second, "params");
        o << (i + 1 < std::size(fields) ? ",\n" : "\n");
    }
    o << indent << "}";
}

template <std::size_t N>
void write_object(JsonWriter& w, const std::pair<const char*, double> (&fields)[N],
                  const char* where, const char* text_key = nullptr,
                  const char* text_value = nullptr) {
    auto& o = w.raw();
    o << "{\n";
    for (std::size_t i = 0; i < N; ++i) {
        o << "    \"" << fields[i].first << "\": ";
        w.number(fields[i].second, where);
        o << (i + 1 < N || text_key != nullptr ? ",\n" : "\n");
    }
    if (text_key != nullptr) {
        o << "    \"" << text_key << "\": ";
        w.string(text_value);
        o << "\n";
    }
    o << "  }";
}

// --- report reading -------------------------------------------------------

[[noreturn]] void schema_error(const std::string& what) {
    throw Error(ErrorCode::SchemaMismatch, what);
}

double get_number(const nlohmann::json& obj, const char* key) {
    if (!obj.is_object() || !obj.contains(key) || !obj.at(key).is_number()) {
        schema_error(std::string("missing or non-numeric field '") + key + "'");
    }
    return obj.at(key).get<double>();
}

const nlohmann::json& get_member(const nlohmann::json& obj, const char* key) {
    if (!obj.is_object() || !obj.contains(key)) {
        schema_error(std::string("missing field '") + key + "'");
    }
    return obj.at(key);
}

SabrParams read_params(const nlohmann::json& j) {
    return {get_number(j, "alpha"), get_number(j, "beta"), get_number(j, "rho"),
            get_number(j, "nu"), get_number(j, "shift")};
}

KappaSigma parse_convention(const std::string& s) {
    if (s == "total") return KappaSigma::Total;
    if (s == "annualized") return KappaSigma::Annualized;
    schema_error("unknown kappa_sigma '" + s + "'");
}

const char* convention_name(KappaSigma c) {
    return c == KappaSigma::Total ? "total" : "annualized";
}

}  // namespace

// ---------------------------------------------------------------------------
// Quotes

std::vector<FuturesOptionQuote> parse_quotes(std::istream& in) {
    std::vector<FuturesOptionQuote> quotes;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!header_seen) {
            if (line != kQuoteHeader) bad_row(line_no, "expected header '" + std::string(kQuoteHeader) + "'");
            header_seen = true;
            continue;
        }
        if (line.empty()) continue;

        const auto fields = split_csv(line);
        if (fields.size() != 5) {
            bad_row(line_no, "expected 5 fields, found " + std::to_string(fields.size()));
        }
        FuturesOptionQuote q;
        q.contract = fields[0];
        if (q.contract.empty()) bad_row(line_no, "empty contract");
        q.quote_date = fields[1];
        if (!is_iso_date(q.quote_date)) bad_row(line_no, "quote_date is not yyyy-mm-dd");
        if (fields[2] == "C") {
            q.kind = OptionKind::Call;
        } else if (fields[2] == "P") {
            q.kind = OptionKind::Put;
        } else {
            bad_row(line_no, "kind must be C or P");
        }
        if (!parse_number(fields[3], q.strike_price)) bad_row(line_no, "strike_price is not a number");
        if (!(q.strike_price > 0.0 && q.strike_price < 200.0)) {
            bad_row(line_no, "strike_price outside (0, 200)");
        }
        if (!parse_number(fields[4], q.last)) bad_row(line_no, "last is not a number");
        if (q.last < 0.0) bad_row(line_no, "negative premium");
        quotes.push_back(std::move(q));
    }
    if (!header_seen) bad_row(1, "empty file");
    return quotes;
}

std::vector<FuturesOptionQuote> parse_quotes_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    return parse_quotes(in);
}

void write_quotes(std::ostream& out, const std::vector<FuturesOptionQuote>& quotes) {
    out << kQuoteHeader << '\n';
    char buf[64];
    for (const auto& q : quotes) {
        out << q.contract << ',' << q.quote_date << ',' << (q.kind == OptionKind::Call ? 'C' : 'P')
            << ',';
        std::snprintf(buf, sizeof buf, "%.17g", q.strike_price);
        out << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", q.last);
        out << buf << '\n';
    }
}

RateQuote to_rate_space(const FuturesOptionQuote& q) {
    RateQuote r;
    r.contract = q.contract;
    r.quote_date = q.quote_date;
    r.kind = q.kind == OptionKind::Call ? OptionKind::Put : OptionKind::Call;
    r.strike = (100.0 - q.strike_price) / 100.0;
    r.premium = q.last / 100.0;
    return r;
}

FuturesOptionQuote to_price_space(const RateQuote& r) {
    FuturesOptionQuote q;
    q.contract = r.contract;
    q.quote_date = r.quote_date;
    q.kind = r.kind == OptionKind::Call ? OptionKind::Put : OptionKind::Call;
    q.strike_price = round_decimals(100.0 - 100.0 * r.strike, 10);
    q.last = round_decimals(100.0 * r.premium, 10);
    return q;
}

QuoteSet assemble_quote_set(const std::vector<RateQuote>& quotes, double forward, double expiry,
                            double grid_step, KappaSigma convention) {
    if (!(grid_step > 0.0) || !(expiry > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "grid_step and expiry must be positive");
    }
    const double tol = grid_step / 10.0;

    auto find = [&](double node, OptionKind kind) -> const RateQuote* {
        const RateQuote* best = nullptr;
        for (const auto& q : quotes) {
            if (q.kind != kind || std::fabs(q.strike - node) > tol) continue;
            if (best == nullptr || std::fabs(q.strike - node) < std::fabs(best->strike - node)) {
                best = &q;
            }
        }
        return best;
    };
    // Price of `kind` at the node, from a direct quote or by parity
    // c - p = F - k evaluated at the quoted strike.
    auto price_at = [&](int j, OptionKind kind) -> std::optional<double> {
        const double node = forward + j * grid_step;
        if (const RateQuote* q = find(node, kind)) return q->premium;
        const OptionKind other = kind == OptionKind::Call ? OptionKind::Put : OptionKind::Call;
        if (const RateQuote* q = find(node, other)) {
            const double intrinsic_gap = forward - q->strike;
            return kind == OptionKind::Put ? q->premium - intrinsic_gap : q->premium + intrinsic_gap;
        }
        return std::nullopt;
    };
    auto require = [&](int j, OptionKind kind) {
        const auto p = price_at(j, kind);
        if (!p) {
            throw Error(ErrorCode::MissingStrike,
                        "no quote within h/10 of strike " + std::to_string(forward + j * grid_step));
        }
        return *p;
    };

    QuoteSet qs;
    qs.forward = forward;
    qs.expiry = expiry;
    qs.kappa_sigma = convention;
    qs.put_minus2 = require(-2, OptionKind::Put);
    qs.put_minus1 = require(-1, OptionKind::Put);
    const RateQuote* atm_call = find(forward, OptionKind::Call);
    const RateQuote* atm_put = find(forward, OptionKind::Put);
    if (atm_call != nullptr && atm_put != nullptr) {
        qs.atm = 0.5 * (atm_call->premium + atm_put->premium);
    } else {
        qs.atm = require(0, OptionKind::Call);
    }
    qs.call_plus1 = require(1, OptionKind::Call);
    qs.call_plus2 = require(2, OptionKind::Call);
    qs.gap_outer_lo = qs.gap_inner_lo = qs.gap_inner_hi = qs.gap_outer_hi = grid_step;
    return qs;
}

// ---------------------------------------------------------------------------
// Reports

std::string report_to_json(const CalibrationReport& r) {
    JsonWriter w;
    auto& o = w.raw();
    o << "{\n  \"schema_version\": " << kReportSchemaVersion << ",\n";
    o << "  \"params\": ";
    write_params(w, r.params, "  ");
    o << ",\n";

    const auto& d = r.diagnostics;
    const std::pair<const char*, double> diag[] = {
        {"z_minus", d.z_minus},         {"z_plus", d.z_plus},
        {"y_minus", d.y_minus},         {"y_plus", d.y_plus},
        {"kappa_minus", d.kappa_minus}, {"kappa_plus", d.kappa_plus},
        {"sigma_atm", d.sigma_atm}};
    o << "  \"diagnostics\": ";
    write_object(w, diag, "diagnostics");
    o << ",\n";

    const auto& q = r.quotes;
    const std::pair<const char*, double> quote_fields[] = {
        {"forward", q.forward},           {"expiry", q.expiry},
        {"put_minus2", q.put_minus2},     {"put_minus1", q.put_minus1},
        {"atm", q.atm},                   {"call_plus1", q.call_plus1},
        {"call_plus2", q.call_plus2},     {"gap_outer_lo", q.gap_outer_lo},
        {"gap_inner_lo", q.gap_inner_lo}, {"gap_inner_hi", q.gap_inner_hi},
        {"gap_outer_hi", q.gap_outer_hi}};
    o << "  \"quotes\": ";
    write_object(w, quote_fields, "quotes", "kappa_sigma", convention_name(q.kappa_sigma));
    o << ",\n";

    o << "  \"grid\": {\n    \"lo\": ";
    w.number(r.grid.lo, "grid");
    o << ",\n    \"hi\": ";
    w.number(r.grid.hi, "grid");
    o << ",\n    \"count\": " << r.grid.count << ",\n    \"forward\": ";
    w.number(r.grid.forward, "grid");
    o << "\n  },\n";

    o << "  \"vol_curve\": [";
    for (std::size_t i = 0; i < r.vol_curve.size(); ++i) {
        o << (i == 0 ? "\n" : ",\n") << "    {\"strike\": ";
        w.number(r.vol_curve[i].strike, "vol_curve");
        o << ", \"normal_vol_bp\": ";
        w.number(r.vol_curve[i].normal_vol_bp, "vol_curve");
        o << "}";
    }
    o << (r.vol_curve.empty() ? "],\n" : "\n  ],\n");

    if (r.source_params) {
        o << "  \"source_params\": ";
        write_params(w, *r.source_params, "  ");
        o << ",\n";
    }
    if (!r.smile_comparison.empty()) {
        o << "  \"smile_comparison\": [";
        for (std::size_t i = 0; i < r.smile_comparison.size(); ++i) {
            const auto& s = r.smile_comparison[i];
            o << (i == 0 ? "\n" : ",\n") << "    {\"strike\": ";
            w.number(s.strike, "smile_comparison");
            o << ", \"source_vol_bp\": ";
            w.number(s.source_vol_bp, "smile_comparison");
            o << ", \"target_vol_bp\": ";
            w.number(s.target_vol_bp, "smile_comparison");
            o << "}";
        }
        o << "\n  ],\n";
    }

    o << "  \"metadata\": {";
    std::size_t i = 0;
    for (const auto& [key, value] : r.metadata) {
        o << (i++ == 0 ? "\n    " : ",\n    ");
        w.string(key);
        o << ": ";
        w.string(value);
    }
    o << (r.metadata.empty() ? "}\n" : "\n  }\n");
    o << "}\n";
    return w.str();
}

CalibrationReport report_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        schema_error(std::string("report is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("schema_version") || !j["schema_version"].is_number_integer()) {
        schema_error("missing integer schema_version");
    }
    const int version = j["schema_version"].get<int>();
    if (version != kReportSchemaVersion) {
        schema_error("unsupported schema_version " + std::to_string(version));
    }

    CalibrationReport r;
    r.params = read_params(get_member(j, "params"));

    const auto& d = get_member(j, "diagnostics");
    r.diagnostics = {get_number(d, "z_minus"),     get_number(d, "z_plus"),
                     get_number(d, "y_minus"),     get_number(d, "y_plus"),
                     get_number(d, "kappa_minus"), get_number(d, "kappa_plus"),
                     get_number(d, "sigma_atm")};

    const auto& q = get_member(j, "quotes");
    r.quotes.forward = get_number(q, "forward");
    r.quotes.expiry = get_number(q, "expiry");
    r.quotes.put_minus2 = get_number(q, "put_minus2");
    r.quotes.put_minus1 = get_number(q, "put_minus1");
    r.quotes.atm = get_number(q, "atm");
    r.quotes.call_plus1 = get_number(q, "call_plus1");
    r.quotes.call_plus2 = get_number(q, "call_plus2");
    r.quotes.gap_outer_lo = get_number(q, "gap_outer_lo");
    r.quotes.gap_inner_lo = get_number(q, "gap_inner_lo");
    r.quotes.gap_inner_hi = get_number(q, "gap_inner_hi");
    r.quotes.gap_outer_hi = get_number(q, "gap_outer_hi");
    const auto& conv = get_member(q, "kappa_sigma");
    if (!conv.is_string()) schema_error("kappa_sigma must be a string");
    r.quotes.kappa_sigma = parse_convention(conv.get<std::string>());

    const auto& g = get_member(j, "grid");
    r.grid.lo = get_number(g, "lo");
    r.grid.hi = get_number(g, "hi");
    if (!g.contains("count") || !g["count"].is_number_integer()) schema_error("grid.count must be an integer");
    r.grid.count = g["count"].get<int>();
    r.grid.forward = get_number(g, "forward");

    const auto& vc = get_member(j, "vol_curve");
    if (!vc.is_array()) schema_error("vol_curve must be an array");
    for (const auto& p : vc) {
        r.vol_curve.push_back({get_number(p, "strike"), get_number(p, "normal_vol_bp")});
    }

    if (j.contains("source_params")) r.source_params = read_params(j["source_params"]);
    if (j.contains("smile_comparison")) {
        const auto& sc = j["smile_comparison"];
        if (!sc.is_array()) schema_error("smile_comparison must be an array");
        for (const auto& p : sc) {
            r.smile_comparison.push_back({get_number(p, "strike"), get_number(p, "source_vol_bp"),
                                          get_number(p, "target_vol_bp")});
        }
    }

    const auto& meta = get_member(j, "metadata");
    if (!meta.is_object()) schema_error("metadata must be an object");
    for (const auto& [key, value] : meta.items()) {
        if (!value.is_string()) schema_error("metadata values must be strings");
        r.metadata[key] = value.get<std::string>();
    }
    return r;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& contents) {
    // Exclusive create of a sibling file, then an atomic rename over `path`.
    const std::string tmp = path + ".tmp";
    std::remove(tmp.c_str());
    std::FILE* f = std::fopen(tmp.c_str(), "wbx");
    if (f == nullptr) throw Error(ErrorCode::Io, "cannot create " + tmp);
    const bool ok = std::fwrite(contents.data(), 1, contents.size(), f) == contents.size();
    if (std::fclose(f) != 0 || !ok) {
        std::remove(tmp.c_str());
        throw Error(ErrorCode::Io, "failed writing " + path);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw Error(ErrorCode::Io, "cannot rename onto " + path);
    }
}

void write_report(const CalibrationReport& report, const std::string& path) {
    write_text_file(path, report_to_json(report));
}

CalibrationReport read_report(const std::string& path) {
    return report_from_json(read_text_file(path));
}

}  // namespace ahsabr
