"""Unit tests for the scenario catalog, its potentials and the config format."""
import math

import numpy as np
import pytest

from oscavg import closed_form_checks, fd_gradient, fd_hessian
from oscavg.fields import Order1Potential
from oscavg.scenarios import (CATALOG, ScenarioUsageError, custom_scenario,
                              format_config, get_scenario, load_config,
                              parse_config, parse_number, save_config)

TWO_PI = 2.0 * math.pi

BUILTIN = ["rotating_saddle", "quartic_drive", "kapitza_pendulum",
           "rotating_wave", "spinning_satellite"]


def _probe_point(name, rng):
    """A random point safely inside the scenario's trusted region."""
    sc = get_scenario(name)
    if sc.dim == 1:
        return np.array([rng.uniform(-1.2, 1.2)])
    if name in ("rotating_wave", "spinning_satellite"):
        r = rng.uniform(0.8, 2.2)
        ang = rng.uniform(0.0, TWO_PI)
        return r * np.array([math.cos(ang), math.sin(ang)])
    return rng.uniform(-1.2, 1.2, 2)


# ---- catalog ----

def test_catalog_contains_the_builtin_scenarios():
    for name in BUILTIN:
        assert name in CATALOG, f"{name} missing from catalog"
    assert "custom" in CATALOG


def test_unknown_scenario_raises_key_error():
    with pytest.raises(KeyError):
        get_scenario("no_such_scenario")


def test_custom_scenario_requires_code():
    with pytest.raises(ScenarioUsageError, match="in code"):
        get_scenario("custom")


def test_bad_factory_kwargs_become_usage_errors():
    with pytest.raises(ScenarioUsageError, match="bogus"):
        get_scenario("rotating_saddle", bogus=1)


def test_custom_scenario_wraps_a_potential():
    sc = get_scenario("quartic_drive")
    wrapped = custom_scenario(sc.potential, name="mine", default_eps=[0.1])
    assert wrapped.name == "mine"
    assert wrapped.dim == 2
    system = wrapped.build_system(0.1)
    assert system.epsilon == 0.1  # eps_scale defaults to 1


# ---- potential derivatives against finite differences ----

def test_analytic_gradients_match_finite_differences():
    rng = np.random.default_rng(21)
    for name in BUILTIN:
        sc = get_scenario(name)
        pot = sc.potential.oscillating if isinstance(sc.potential, Order1Potential) else sc.potential
        for _ in range(3):
            x = _probe_point(name, rng)
            tau = rng.uniform(0.0, 1.0)
            fd = fd_gradient(lambda y: float(pot.value(y, tau)), x)
            got = np.asarray(pot.grad(x, tau), dtype=float)
            err = np.max(np.abs(got - fd))
            assert err < 1e-7, f"{name}: grad vs fd differ by {err:.2e} at {x}, tau={tau:.3f}"


def test_analytic_hessians_match_finite_differences():
    rng = np.random.default_rng(22)
    for name in BUILTIN:
        sc = get_scenario(name)
        pot = sc.potential.oscillating if isinstance(sc.potential, Order1Potential) else sc.potential
        for _ in range(2):
            x = _probe_point(name, rng)
            tau = rng.uniform(0.0, 1.0)
            fd = fd_hessian(lambda y: float(pot.value(y, tau)), x)
            got = np.asarray(pot.hess(x, tau), dtype=float)
            err = np.max(np.abs(got - fd))
            assert err < 1e-5, f"{name}: hess vs fd differ by {err:.2e} at {x}, tau={tau:.3f}"


def test_satellite_static_part_matches_finite_differences():
    rng = np.random.default_rng(23)
    static = get_scenario("spinning_satellite").potential.static
    for _ in range(3):
        x = _probe_point("spinning_satellite", rng)
        fd_g = fd_gradient(lambda y: float(static.value(y)), x)
        err_g = np.max(np.abs(np.asarray(static.grad(x)) - fd_g))
        assert err_g < 1e-7, f"static grad vs fd differ by {err_g:.2e}"
        fd_h = fd_hessian(lambda y: float(static.value(y)), x)
        err_h = np.max(np.abs(np.asarray(static.hess(x)) - fd_h))
        assert err_h < 1e-4, f"static hess vs fd differ by {err_h:.2e}"


def test_oscillating_potentials_broadcast_over_tau():
    taus = np.linspace(0.0, 1.0, 8, endpoint=False)
    for name in BUILTIN:
        sc = get_scenario(name)
        pot = sc.potential.oscillating if isinstance(sc.potential, Order1Potential) else sc.potential
        d = pot.dim
        x = np.full(d, 0.9)
        vals = np.asarray(pot.value(x, taus))
        grads = np.asarray(pot.grad(x, taus))
        hesss = np.asarray(pot.hess(x, taus))
        assert vals.shape == (8,), f"{name}: value shape {vals.shape}"
        assert grads.shape == (8, d), f"{name}: grad shape {grads.shape}"
        assert hesss.shape == (8, d, d), f"{name}: hess shape {hesss.shape}"
        # array evaluation must agree with scalar evaluation
        err = max(np.max(np.abs(vals[3] - pot.value(x, taus[3]))),
                  np.max(np.abs(grads[3] - pot.grad(x, taus[3]))),
                  np.max(np.abs(hesss[3] - pot.hess(x, taus[3]))))
        assert err < 1e-14, f"{name}: array vs scalar tau mismatch {err:.2e}"


# ---- scenario parameters ----

def test_internal_eps_scaling():
    assert get_scenario("rotating_saddle").internal_eps(1.0 / 64) == pytest.approx(TWO_PI / 64)
    assert get_scenario("quartic_drive").internal_eps(1.0 / 64) == pytest.approx(1.0 / 64)


def test_initial_states_match_dimension():
    for name in BUILTIN:
        sc = get_scenario(name)
        assert sc.x0.shape == (sc.dim,), f"{name}: x0 shape {sc.x0.shape}"
        assert sc.v0.shape == (sc.dim,), f"{name}: v0 shape {sc.v0.shape}"
        assert all(e > 0 for e in sc.default_eps), f"{name}: nonpositive ladder eps"
        assert sc.potential.in_region(sc.x0), f"{name}: x0 outside trusted region"


def test_closed_forms_match_assembled_fields():
    rng = np.random.default_rng(24)
    for name in BUILTIN:
        sc = get_scenario(name)
        pts = np.stack([_probe_point(name, rng) for _ in range(4)])
        for check_name, passed, detail in closed_form_checks(sc, 1.0 / 128, pts):
            assert passed, f"{check_name}: {detail}"


def test_satellite_sign_convention():
    """Flipping sigma flips the mean force but keeps the sigma^2 corrections."""
    plus = get_scenario("spinning_satellite", sigma=1.0)
    minus = get_scenario("spinning_satellite", sigma=-1.0)
    x = np.array([1.3, 0.4])
    gp = plus.closed_forms["mean_grad"](x)
    gm = minus.closed_forms["mean_grad"](x)
    assert np.max(np.abs(gp + gm)) < 1e-15, "mean gradient should be odd in sigma"
    bp = plus.closed_forms["b"](x)
    bm = minus.closed_forms["b"](x)
    assert np.max(np.abs(bp - bm)) < 1e-15, "b should be even in sigma"


# ---- config files ----

def test_parse_number_accepts_fractions():
    assert parse_number("1/64") == pytest.approx(1.0 / 64)
    assert parse_number(" 0.25 ") == 0.25


def test_config_round_trip(tmp_path):
    cfg = {"scenario": "rotating_saddle", "eps": [1.0 / 32, 1.0 / 64], "t_end": 1.5}
    path = tmp_path / "run.cfg"
    save_config(cfg, path)
    back = load_config(path)
    assert back["scenario"] == "rotating_saddle"
    assert back["eps"] == pytest.approx([1.0 / 32, 1.0 / 64])
    assert back["t_end"] == pytest.approx(1.5)


def test_parse_config_accepts_comments_and_fractions():
    cfg = parse_config("# header\nscenario = quartic_drive\neps = 1/128  # inline\n\n")
    assert cfg == {"scenario": "quartic_drive", "eps": [pytest.approx(1.0 / 128)]}


def test_parse_config_reports_line_numbers():
    with pytest.raises(ValueError, match="line 2"):
        parse_config("scenario = quartic_drive\nnot a key value pair\n")
    with pytest.raises(ValueError, match="unknown config key 'walrus' on line 1"):
        parse_config("walrus = 3\n")


def test_format_config_rejects_unknown_keys():
    with pytest.raises(ValueError, match="unknown config key"):
        format_config({"walrus": 3})
