import json
import math
import os
import subprocess

import pytest

import ahsabr


def eurodollar_surface():
    params = ahsabr.SabrParams(alpha=0.002079, beta=0.05, rho=0.3571, nu=1.0862, shift=0.2575)
    grid = ahsabr.build_uniform_grid(-0.05, 0.25, 241, 0.005)
    return params, ahsabr.solve_self_consistent(grid, 711 / 365, params)


def test_bachelier_round_trip():
    price = ahsabr.bachelier_price(0.02, 0.025, 0.006, 1.0, ahsabr.OptionKind.Call)
    vol = ahsabr.bachelier_implied_vol(price, 0.02, 0.025, 1.0, ahsabr.OptionKind.Call)
    assert vol == pytest.approx(0.006, rel=1e-12)
    assert ahsabr.norm_cdf(1.0) == pytest.approx(0.8413447460685429, abs=1e-15)


def test_price_and_calibrate_round_trip():
    params, surface = eurodollar_surface()
    assert len(surface.grid) == 241
    assert len(surface.density) == 239
    assert surface.density_mass() == pytest.approx(1.0, abs=1e-3)
    n = surface.grid.forward_index
    assert surface.calls[n] * 100 == pytest.approx(0.1350, abs=5e-5)

    result = ahsabr.calibrate(ahsabr.extract_quote_set(surface), params.beta, params.shift)
    assert result.params.alpha == pytest.approx(params.alpha, rel=1e-8)
    assert result.params.nu == pytest.approx(params.nu, abs=1e-8)
    assert result.params.rho == pytest.approx(params.rho, abs=1e-8)
    assert result.diagnostics.y_minus > 0 > result.diagnostics.y_plus


def test_recalibrate_hagan_beta_change():
    source = ahsabr.SabrParams(0.0217, 0.4, -0.2378, 0.2612, 0.03)
    forward, h = 0.003, 0.001
    curve = ahsabr.hagan_curve(source, forward, 10.0)
    grid = ahsabr.Grid.from_strikes([forward + j * h for j in range(-2, 3)], forward)
    fit = ahsabr.recalibrate(curve, 0.6, 0.03, grid).params
    assert fit.alpha == pytest.approx(0.0408, abs=1e-3)
    assert fit.rho == pytest.approx(-0.3588, abs=0.02)
    assert fit.nu == pytest.approx(0.2950, abs=0.02)


def test_errors_carry_their_code():
    with pytest.raises(ahsabr.AhsabrError) as info:
        ahsabr.build_uniform_grid(0.0, 1.0, 3, 0.5)
    assert info.value.code == "ForwardTooCloseToBoundary"


def test_python_callable_as_price_curve():
    sigma, forward, expiry = 0.0065, 0.02, 2.0
    curve = ahsabr.PriceCurve.from_calls(
        lambda k: ahsabr.bachelier_price(forward, k, sigma, expiry, ahsabr.OptionKind.Call),
        forward,
        expiry,
    )
    limit = ahsabr.limiting_params(curve, 0.3, 0.03, 0.001)
    assert limit.params.alpha == pytest.approx(sigma / (forward + 0.03) ** 0.3, rel=1e-6)


def test_quote_file_ingestion():
    data = os.environ.get("AHSABR_TEST_DATA_DIR", os.path.join(os.path.dirname(__file__), "..", "data"))
    quotes = ahsabr.parse_quotes_file(os.path.join(data, "edh3_2021-04-01.csv"))
    assert len(quotes) == 25
    rate = [ahsabr.to_rate_space(q) for q in quotes]
    qs = ahsabr.assemble_quote_set(rate, 0.005, 711 / 365, 0.00125)
    assert qs.atm == pytest.approx(0.00135, abs=1e-15)
    fit = ahsabr.calibrate(qs, 0.05, 0.2575).params
    assert fit.alpha == pytest.approx(0.002079, abs=1e-5)


@pytest.mark.skipif("AHSABR_CLI" not in os.environ, reason="command-line tool path not given")
def test_cli_recalibrate_report(tmp_path):
    out = tmp_path / "report.json"
    cmd = [
        os.environ["AHSABR_CLI"], "recalibrate",
        "--forward", "0.3", "--expiry", "10",
        "--alpha", "2.17", "--beta", "40", "--rho", "-23.78", "--nu", "26.12", "--shift", "3",
        "--grid-lo", "-0.1", "--grid-hi", "0.7", "--grid-count", "9",
        "--out", str(out),
    ]
    subprocess.run(cmd, check=True)
    report = json.loads(out.read_text())
    assert report["schema_version"] == 1
    assert report["params"]["alpha"] == pytest.approx(0.0206, abs=1e-3)
    assert math.isfinite(report["params"]["nu"])

    bad = subprocess.run([os.environ["AHSABR_CLI"], "price", "--grid-lo", "-5"], capture_output=True)
    assert bad.returncode == 2
