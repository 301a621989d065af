#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "ahsabr/error.hpp"
#include "ahsabr/market_io.hpp"
#include "oracles.hpp"

using namespace ahsabr;
using ahsabr::testing::throws_code;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const std::string kFixture = std::string(AHSABR_TEST_DATA_DIR) + "/edh3_2021-04-01.csv";

std::vector<FuturesOptionQuote> parse(const std::string& text) {
    std::istringstream in(text);
    return parse_quotes(in);
}

std::filesystem::path scratch_dir() {
    auto dir = std::filesystem::temp_directory_path() / "ahsabr_market_io_test";
    std::filesystem::create_directories(dir);
    return dir;
}

CalibrationReport sample_report() {
    CalibrationReport r;
    r.params = {0.002079, 0.05, 0.3571, 1.0862, 0.2575};
    r.diagnostics = {1.5, 1.25, 0.3, -0.29, 1.9, 1.91, 0.0048};
    r.quotes.forward = 0.005;
    r.quotes.expiry = 711.0 / 365.0;
    r.quotes.put_minus2 = 0.00083;
    r.quotes.put_minus1 = 0.00106;
    r.quotes.atm = 0.00135;
    r.quotes.call_plus1 = 0.00105;
    r.quotes.call_plus2 = 0.0008;
    r.quotes.gap_outer_lo = r.quotes.gap_inner_lo = r.quotes.gap_inner_hi = r.quotes.gap_outer_hi =
        0.00125;
    r.quotes.kappa_sigma = KappaSigma::Annualized;
    r.grid = {-0.05, 0.25, 241, 0.005};
    r.vol_curve = {{0.0, 48.123456789012345}, {0.005, 50.0}, {0.01, 1.0 / 3.0}};
    r.metadata = {{"contract", "EDH3"}, {"quote_date", "2021-04-01"}, {"note", "a \"quoted\" value"}};
    return r;
}

}  // namespace

TEST_CASE("parse_quotes reads a header and one row", "[market_io]") {
    const auto q = parse("contract,quote_date,kind,strike_price,last\nEDH3,2021-04-01,C,99.5,0.135\n");
    REQUIRE(q.size() == 1);
    CHECK(q[0].contract == "EDH3");
    CHECK(q[0].quote_date == "2021-04-01");
    CHECK(q[0].kind == OptionKind::Call);
    CHECK(q[0].strike_price == 99.5);
    CHECK(q[0].last == 0.135);
    // Windows line endings are accepted.
    CHECK(parse("contract,quote_date,kind,strike_price,last\r\nEDH3,2021-04-01,P,99,0.1\r\n").size() == 1);
}

TEST_CASE("parse_quotes names the offending line", "[market_io]") {
    const std::string header = "contract,quote_date,kind,strike_price,last\n";
    const auto expect_row_error = [&](const std::string& body, const std::string& fragment) {
        try {
            parse(header + "EDH3,2021-04-01,C,99.5,0.1\n" + body);
            FAIL("no error for: " << body);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MalformedRow);
            CHECK_THAT(e.what(), ContainsSubstring("line 3"));
            CHECK_THAT(e.what(), ContainsSubstring(fragment));
        }
    };
    expect_row_error("EDH3,2021-04-01,C,99.5,-0.01\n", "negative premium");
    expect_row_error("EDH3,2021-02-30,C,99.5,0.01\n", "quote_date");
    expect_row_error("EDH3,2021-04-01,X,99.5,0.01\n", "kind");
    expect_row_error("EDH3,2021-04-01,C,abc,0.01\n", "strike_price");
    expect_row_error("EDH3,2021-04-01,C,99.5\n", "5 fields");
    expect_row_error("EDH3,2021-04-01,C,99.5,nan\n", "last");
    CHECK(throws_code(ErrorCode::MalformedRow, [] { parse("strike,last\n99.5,0.1\n"); }));
    CHECK(throws_code(ErrorCode::Io, [] { parse_quotes_file("/nonexistent/quotes.csv"); }));
}

TEST_CASE("fixture quote file has 25 strikes 12.5 bp apart", "[market_io]") {
    const auto quotes = parse_quotes_file(kFixture);
    REQUIRE(quotes.size() == 25);
    for (std::size_t i = 1; i < quotes.size(); ++i) {
        CHECK_THAT(quotes[i].strike_price - quotes[i - 1].strike_price, WithinAbs(0.125, 1e-12));
        const double gap = to_rate_space(quotes[i - 1]).strike - to_rate_space(quotes[i]).strike;
        CHECK_THAT(gap, WithinAbs(0.00125, 1e-15));
    }
}

TEST_CASE("to_rate_space converts units and flips the option kind", "[market_io]") {
    const FuturesOptionQuote q{"EDH3", "2021-04-01", OptionKind::Call, 99.50, 0.135};
    const RateQuote r = to_rate_space(q);
    CHECK_THAT(r.strike, WithinAbs(0.005, 1e-16));
    CHECK(r.kind == OptionKind::Put);
    CHECK_THAT(r.premium, WithinAbs(0.00135, 1e-18));
    CHECK(r.contract == "EDH3");
    CHECK(to_price_space(r) == q);

    for (const auto& fq : parse_quotes_file(kFixture)) {
        CHECK(to_price_space(to_rate_space(fq)) == fq);
    }
}

TEST_CASE("assemble_quote_set on the fixture", "[market_io]") {
    std::vector<RateQuote> rq;
    for (const auto& q : parse_quotes_file(kFixture)) rq.push_back(to_rate_space(q));
    const QuoteSet qs = assemble_quote_set(rq, 0.005, 711.0 / 365.0, 0.00125);
    // ATM last 0.1350 price points.
    CHECK_THAT(qs.atm, WithinAbs(0.001350, 1e-15));
    CHECK(qs.put_minus1 > 0.0);
    CHECK(qs.call_plus1 > 0.0);
    CHECK(qs.gap_inner_lo == 0.00125);

    // Remove both quotes at F + 2h.
    std::vector<RateQuote> gap;
    for (const auto& q : rq) {
        if (std::fabs(q.strike - 0.0075) > 1e-9) gap.push_back(q);
    }
    try {
        assemble_quote_set(gap, 0.005, 711.0 / 365.0, 0.00125);
        FAIL("expected MissingStrike");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingStrike);
        CHECK_THAT(e.what(), ContainsSubstring("0.0075"));
    }
}

TEST_CASE("assemble_quote_set completes a missing side by parity", "[market_io]") {
    const double F = 0.02;
    const double h = 0.001;
    std::vector<RateQuote> rq;
    // Only calls, including in-the-money ones below the forward.
    for (int j = -2; j <= 2; ++j) {
        const double k = F + j * h;
        rq.push_back({"X", "2024-01-02", OptionKind::Call, k,
                      bachelier_price(F, k, 0.006, 1.0, OptionKind::Call)});
    }
    const QuoteSet qs = assemble_quote_set(rq, F, 1.0, h);
    CHECK_THAT(qs.put_minus2, WithinAbs(bachelier_price(F, F - 2 * h, 0.006, 1.0, OptionKind::Put), 1e-17));
    CHECK_THAT(qs.put_minus1, WithinAbs(bachelier_price(F, F - h, 0.006, 1.0, OptionKind::Put), 1e-17));
}

TEST_CASE("pricer quotes survive a CSV round trip", "[market_io]") {
    const SabrParams p{0.002079, 0.05, 0.3571, 1.0862, 0.2575};
    const double F = 0.005;
    const double T = 711.0 / 365.0;
    const PriceSurface s = solve_self_consistent(build_uniform_grid(-0.05, 0.25, 241, F), T, p);
    const QuoteSet expected = extract_quote_set(s);
    const Grid& g = s.grid();
    const std::size_t n = g.forward_index();

    std::vector<FuturesOptionQuote> quotes;
    for (std::size_t j = n - 12; j <= n + 12; ++j) {
        // Rate puts are price calls; the ATM node carries both.
        if (j <= n) {
            quotes.push_back(to_price_space({"EDH3", "2021-04-01", OptionKind::Put, g.strike(j), s.puts()[j]}));
        }
        if (j >= n) {
            quotes.push_back(to_price_space({"EDH3", "2021-04-01", OptionKind::Call, g.strike(j), s.calls()[j]}));
        }
    }
    std::ostringstream out;
    write_quotes(out, quotes);
    std::istringstream in(out.str());
    std::vector<RateQuote> back;
    for (const auto& q : parse_quotes(in)) back.push_back(to_rate_space(q));
    const QuoteSet qs = assemble_quote_set(back, F, T, g.step_up(n));

    CHECK_THAT(qs.put_minus2, WithinAbs(expected.put_minus2, 1e-12));
    CHECK_THAT(qs.put_minus1, WithinAbs(expected.put_minus1, 1e-12));
    CHECK_THAT(qs.atm, WithinAbs(expected.atm, 1e-12));
    CHECK_THAT(qs.call_plus1, WithinAbs(expected.call_plus1, 1e-12));
    CHECK_THAT(qs.call_plus2, WithinAbs(expected.call_plus2, 1e-12));
    CHECK_THAT(qs.gap_outer_lo, WithinAbs(expected.gap_outer_lo, 1e-12));
    CHECK_THAT(qs.gap_outer_hi, WithinAbs(expected.gap_outer_hi, 1e-12));
}

TEST_CASE("report JSON round-trips exactly", "[market_io][report]") {
    const CalibrationReport r = sample_report();
    CHECK(report_from_json(report_to_json(r)) == r);

    CalibrationReport rec = r;
    rec.source_params = SabrParams{0.0217, 0.4, -0.2378, 0.2612, 0.03};
    rec.smile_comparison = {{0.001, 70.5, 70.25}, {0.002, 69.0, 69.125}};
    const auto path = (scratch_dir() / "report.json").string();
    write_report(rec, path);
    CHECK(read_report(path) == rec);
    write_report(r, path);  // replaces the previous file
    CHECK(read_report(path) == r);
}

TEST_CASE("report reader rejects other schemas", "[market_io][report]") {
    std::string text = report_to_json(sample_report());
    const auto pos = text.find("\"schema_version\": 1");
    REQUIRE(pos != std::string::npos);
    std::string other = text;
    other.replace(pos, 19, "\"schema_version\": 2");
    CHECK(throws_code(ErrorCode::SchemaMismatch, [&] { report_from_json(other); }));
    CHECK(throws_code(ErrorCode::SchemaMismatch, [] { report_from_json("{}"); }));
    CHECK(throws_code(ErrorCode::SchemaMismatch, [] { report_from_json("not json"); }));
    std::string missing = text;
    missing.replace(missing.find("\"alpha\""), 7, "\"alpah\"");
    CHECK(throws_code(ErrorCode::SchemaMismatch, [&] { report_from_json(missing); }));
}

TEST_CASE("report writer refuses non-finite numbers", "[market_io][report]") {
    CalibrationReport r = sample_report();
    r.params.nu = std::numeric_limits<double>::quiet_NaN();
    CHECK(throws_code(ErrorCode::NonFiniteValue, [&] { report_to_json(r); }));
    r = sample_report();
    r.vol_curve.push_back({0.02, std::numeric_limits<double>::infinity()});
    CHECK(throws_code(ErrorCode::NonFiniteValue, [&] { report_to_json(r); }));
}
