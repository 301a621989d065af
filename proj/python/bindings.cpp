#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ahsabr/calibration.hpp"
#include "ahsabr/error.hpp"
#include "ahsabr/market_io.hpp"

namespace py = pybind11;
using namespace ahsabr;

namespace {

// Python-side exception carrying the library's error code name.
py::object g_error_type;

void translate(const Error& e) {
    py::object exc = g_error_type(e.what());
    exc.attr("code") = std::string(to_string(e.code()));
    PyErr_SetObject(g_error_type.ptr(), exc.ptr());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "One-step shifted SABR pricer and analytic calibration";

    g_error_type = py::reinterpret_borrow<py::object>(
        py::exception<Error>(m, "AhsabrError", PyExc_RuntimeError));
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            translate(e);
        }
    });

    py::enum_<OptionKind>(m, "OptionKind")
        .value("Call", OptionKind::Call)
        .value("Put", OptionKind::Put);
    py::enum_<KappaSigma>(m, "KappaSigma")
        .value("Total", KappaSigma::Total)
        .value("Annualized", KappaSigma::Annualized);

    m.def("norm_pdf", &norm_pdf);
    m.def("norm_cdf", &norm_cdf);
    m.def("bachelier_price", &bachelier_price, py::arg("forward"), py::arg("strike"),
          py::arg("sigma"), py::arg("expiry"), py::arg("kind"));
    m.def("bachelier_implied_vol", &bachelier_implied_vol, py::arg("price"), py::arg("forward"),
          py::arg("strike"), py::arg("expiry"), py::arg("kind"));

    py::class_<SabrParams>(m, "SabrParams")
        .def(py::init([](double alpha, double beta, double rho, double nu, double shift) {
                 return SabrParams{alpha, beta, rho, nu, shift};
             }),
             py::arg("alpha"), py::arg("beta"), py::arg("rho"), py::arg("nu"),
             py::arg("shift") = 0.0)
        .def_readwrite("alpha", &SabrParams::alpha)
        .def_readwrite("beta", &SabrParams::beta)
        .def_readwrite("rho", &SabrParams::rho)
        .def_readwrite("nu", &SabrParams::nu)
        .def_readwrite("shift", &SabrParams::shift)
        .def("validate", &SabrParams::validate)
        .def("__repr__", [](const SabrParams& p) {
            return "SabrParams(alpha=" + std::to_string(p.alpha) + ", beta=" +
                   std::to_string(p.beta) + ", rho=" + std::to_string(p.rho) +
                   ", nu=" + std::to_string(p.nu) + ", shift=" + std::to_string(p.shift) + ")";
        });

    py::class_<MarketSlice>(m, "MarketSlice")
        .def_static("from_normal_vol", &MarketSlice::from_normal_vol, py::arg("forward"),
                    py::arg("expiry"), py::arg("atm_normal_vol"),
                    py::arg("convention") = KappaSigma::Total)
        .def_static("from_atm_price", &MarketSlice::from_atm_price, py::arg("forward"),
                    py::arg("expiry"), py::arg("atm_price"),
                    py::arg("convention") = KappaSigma::Total)
        .def_property_readonly("forward", &MarketSlice::forward)
        .def_property_readonly("expiry", &MarketSlice::expiry)
        .def_property_readonly("atm_price", &MarketSlice::atm_price)
        .def_property_readonly("atm_normal_vol", &MarketSlice::atm_normal_vol);

    py::class_<Grid>(m, "Grid")
        .def_static("from_strikes", &Grid::from_strikes, py::arg("strikes"), py::arg("forward"))
        .def_property_readonly("strikes", &Grid::strikes)
        .def_property_readonly("forward_index", &Grid::forward_index)
        .def_property_readonly("translation", &Grid::translation)
        .def("__len__", &Grid::size);
    m.def("build_uniform_grid", &build_uniform_grid, py::arg("lo"), py::arg("hi"),
          py::arg("count"), py::arg("forward"));

    m.def("y_of_k", &y_of_k, py::arg("strike"), py::arg("forward"), py::arg("params"));
    m.def("local_vol", &local_vol, py::arg("strike"), py::arg("forward"), py::arg("params"));
    m.def("kappa", &kappa, py::arg("strike"), py::arg("forward"), py::arg("sigma"),
          py::arg("expiry"), py::arg("convention") = KappaSigma::Total);

    py::class_<PriceSurface>(m, "PriceSurface")
        .def_property_readonly("grid", &PriceSurface::grid)
        .def_property_readonly("slice", &PriceSurface::slice)
        .def_property_readonly("params", &PriceSurface::params)
        .def_property_readonly("calls", &PriceSurface::calls)
        .def_property_readonly("puts", &PriceSurface::puts)
        .def_property_readonly("density", &PriceSurface::density)
        .def("density_mass", &PriceSurface::density_mass);
    m.def("solve_one_step", &solve_one_step, py::arg("grid"), py::arg("slice"),
          py::arg("params"));
    m.def("solve_self_consistent", &solve_self_consistent, py::arg("grid"), py::arg("expiry"),
          py::arg("params"), py::arg("convention") = KappaSigma::Total);
    m.def("implied_vol_curve", &implied_vol_curve, py::arg("surface"));

    py::class_<QuoteSet>(m, "QuoteSet")
        .def(py::init<>())
        .def_readwrite("forward", &QuoteSet::forward)
        .def_readwrite("expiry", &QuoteSet::expiry)
        .def_readwrite("put_minus2", &QuoteSet::put_minus2)
        .def_readwrite("put_minus1", &QuoteSet::put_minus1)
        .def_readwrite("atm", &QuoteSet::atm)
        .def_readwrite("call_plus1", &QuoteSet::call_plus1)
        .def_readwrite("call_plus2", &QuoteSet::call_plus2)
        .def_readwrite("gap_outer_lo", &QuoteSet::gap_outer_lo)
        .def_readwrite("gap_inner_lo", &QuoteSet::gap_inner_lo)
        .def_readwrite("gap_inner_hi", &QuoteSet::gap_inner_hi)
        .def_readwrite("gap_outer_hi", &QuoteSet::gap_outer_hi)
        .def_readwrite("kappa_sigma", &QuoteSet::kappa_sigma);
    m.def("extract_quote_set", &extract_quote_set, py::arg("surface"));

    py::class_<CalibrationDiagnostics>(m, "CalibrationDiagnostics")
        .def_readonly("z_minus", &CalibrationDiagnostics::z_minus)
        .def_readonly("z_plus", &CalibrationDiagnostics::z_plus)
        .def_readonly("y_minus", &CalibrationDiagnostics::y_minus)
        .def_readonly("y_plus", &CalibrationDiagnostics::y_plus)
        .def_readonly("kappa_minus", &CalibrationDiagnostics::kappa_minus)
        .def_readonly("kappa_plus", &CalibrationDiagnostics::kappa_plus)
        .def_readonly("sigma_atm", &CalibrationDiagnostics::sigma_atm);
    py::class_<CalibrationResult>(m, "CalibrationResult")
        .def_readonly("params", &CalibrationResult::params)
        .def_readonly("diagnostics", &CalibrationResult::diagnostics);

    m.def("calibrate", &calibrate, py::arg("quotes"), py::arg("beta"), py::arg("shift"));
    m.def("calibrate_uniform", &calibrate_uniform, py::arg("quotes"), py::arg("beta"),
          py::arg("shift"));

    py::class_<PriceCurve>(m, "PriceCurve")
        .def_static("from_calls", &PriceCurve::from_calls, py::arg("call"), py::arg("forward"),
                    py::arg("expiry"))
        .def("call", [](const PriceCurve& c, double k) { return c.call(k); })
        .def("put", [](const PriceCurve& c, double k) { return c.put(k); })
        .def_readonly("forward", &PriceCurve::forward)
        .def_readonly("expiry", &PriceCurve::expiry);
    m.def("hagan_curve", &hagan_curve, py::arg("params"), py::arg("forward"), py::arg("expiry"));

    py::class_<OneSidedLimit>(m, "OneSidedLimit")
        .def_readonly("nu", &OneSidedLimit::nu)
        .def_readonly("rho", &OneSidedLimit::rho);
    py::class_<LimitingResult>(m, "LimitingResult")
        .def_readonly("params", &LimitingResult::params)
        .def_readonly("put_side", &LimitingResult::put_side)
        .def_readonly("call_side", &LimitingResult::call_side)
        .def_readonly("pdf_atm", &LimitingResult::pdf_atm);
    m.def("limiting_params", &limiting_params, py::arg("curve"), py::arg("beta"),
          py::arg("shift"), py::arg("h0"), py::arg("convention") = KappaSigma::Total);

    m.def("recalibrate",
          py::overload_cast<const PriceCurve&, double, double, const Grid&, KappaSigma>(
              &recalibrate),
          py::arg("source"), py::arg("target_beta"), py::arg("target_shift"), py::arg("grid"),
          py::arg("convention") = KappaSigma::Total);
    m.def("recalibrate_surface",
          py::overload_cast<const PriceSurface&, double, double>(&recalibrate),
          py::arg("source"), py::arg("target_beta"), py::arg("target_shift"));

    m.def("hagan_implied_vol",
          [](double strike, double forward, double expiry, const SabrParams& p) {
              return hagan_implied_vol({strike, forward, expiry, p});
          },
          py::arg("strike"), py::arg("forward"), py::arg("expiry"), py::arg("params"));

    py::class_<FuturesOptionQuote>(m, "FuturesOptionQuote")
        .def_readonly("contract", &FuturesOptionQuote::contract)
        .def_readonly("quote_date", &FuturesOptionQuote::quote_date)
        .def_readonly("kind", &FuturesOptionQuote::kind)
        .def_readonly("strike_price", &FuturesOptionQuote::strike_price)
        .def_readonly("last", &FuturesOptionQuote::last);
    py::class_<RateQuote>(m, "RateQuote")
        .def_readonly("kind", &RateQuote::kind)
        .def_readonly("strike", &RateQuote::strike)
        .def_readonly("premium", &RateQuote::premium);
    m.def("parse_quotes_file", &parse_quotes_file, py::arg("path"));
    m.def("to_rate_space", &to_rate_space, py::arg("quote"));
    m.def("to_price_space", &to_price_space, py::arg("quote"));
    m.def("assemble_quote_set", &assemble_quote_set, py::arg("quotes"), py::arg("forward"),
          py::arg("expiry"), py::arg("grid_step"), py::arg("convention") = KappaSigma::Total);
}
