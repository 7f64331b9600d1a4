"""Unit tests for the oscillation averages and the assembled force law.

Expected values are hand-derived closed forms, written out as literals so the
averaging pipeline is checked against something it does not compute itself.
"""
import math

import numpy as np
import pytest

from oscavg import (CallablePotential, PeriodicFieldStack, assemble,
                    fd_gradient)
from oscavg.scenarios import get_scenario

TWO_PI = 2.0 * math.pi
J = np.array([[0.0, -1.0], [1.0, 0.0]])


def _saddle_stack(x, n_tau=16):
    sc = get_scenario("rotating_saddle")
    return PeriodicFieldStack(sc.potential, np.asarray(x, dtype=float), n_tau)


# ---- stack construction and validation ----

def test_stack_rejects_wrong_point_shape():
    sc = get_scenario("rotating_saddle")
    with pytest.raises(ValueError, match="does not match potential dim"):
        PeriodicFieldStack(sc.potential, np.zeros(3), 16)


def test_stack_rejects_coarse_tau_grid():
    sc = get_scenario("rotating_saddle")
    with pytest.raises(ValueError, match="too coarse"):
        PeriodicFieldStack(sc.potential, np.array([1.0, 0.0]), 2)


def test_stack_rejects_bad_grad_shape():
    pot = CallablePotential(
        value=lambda x, tau: np.cos(TWO_PI * np.asarray(tau)) * x[0],
        dim=1,
        grad=lambda x, tau: np.cos(TWO_PI * np.asarray(tau)),  # missing dim axis
        hess=lambda x, tau: np.zeros(np.shape(tau) + (1, 1)))
    with pytest.raises(ValueError, match="potential.grad returned shape"):
        PeriodicFieldStack(pot, np.array([0.5]), 16)


def test_stack_rejects_non_finite_samples():
    def bad_value(x, tau):
        tau = np.asarray(tau, dtype=float)
        out = np.cos(TWO_PI * tau)
        return np.where(tau > 0.5, np.nan, out)

    pot = CallablePotential(
        value=bad_value, dim=1,
        grad=lambda x, tau: np.ones(np.shape(tau) + (1,)),
        hess=lambda x, tau: np.zeros(np.shape(tau) + (1, 1)))
    with pytest.raises(ValueError, match="non-finite"):
        PeriodicFieldStack(pot, np.array([0.5]), 16)


# ---- spinning saddle: every averaged field has a two-line closed form ----
# U = x . Q(-2 pi tau) x / 2 gives V' = [[sin, cos], [cos, -sin]] x / (2 pi),
# so avg V'.V' = |x|^2 / (4 pi^2) and b = avg(S'' V') = J x / (8 pi^3).

def test_saddle_fluctuation_energy():
    x = np.array([0.8, -0.5])
    st = _saddle_stack(x)
    want_vv = float(x @ x) / (4.0 * math.pi ** 2)
    assert abs(st.vv_mean() - want_vv) < 1e-13, \
        f"vv_mean {st.vv_mean():.15e} != {want_vv:.15e}"
    assert abs(st.w_value() - 0.5 * want_vv) < 1e-13
    want_grad = x / (4.0 * math.pi ** 2)
    err = np.max(np.abs(st.w_grad() - want_grad))
    assert err < 1e-13, f"w_grad off by {err:.2e}"


def test_saddle_magnetic_vector_and_matrix():
    x = np.array([-0.3, 1.1])
    st = _saddle_stack(x)
    want_b = (J @ x) / (8.0 * math.pi ** 3)
    err = np.max(np.abs(st.b_vector() - want_b))
    assert err < 1e-14, f"b vector off by {err:.2e}"

    system = get_scenario("rotating_saddle").build_system(1.0 / 64)
    B = system.b_matrix(x)
    want_B = -J / (4.0 * math.pi ** 3)
    err = np.max(np.abs(B - want_B))
    # finite differencing a linear field is exact up to rounding
    assert err < 1e-12, f"B matrix off by {err:.2e}"
    skew = np.max(np.abs(B + B.T))
    assert skew < 1e-18, f"B not antisymmetric, |B + B^T| = {skew:.2e}"


def test_saddle_user_unit_force():
    """Assembled force in user units: -eps^2 x - 2 eps^3 J v."""
    sc = get_scenario("rotating_saddle")
    eps_u = 1.0 / 64
    system = sc.build_system(eps_u)
    rng = np.random.default_rng(3)
    for _ in range(4):
        x = rng.uniform(-1.5, 1.5, 2)
        v = rng.uniform(-1.0, 1.0, 2)
        want = -eps_u ** 2 * x - 2.0 * eps_u ** 3 * (J @ v)
        got = system.force(x, v)
        err = np.max(np.abs(got - want))
        assert err < 1e-10, f"saddle force off by {err:.2e} at x={x}, v={v}"


# ---- separable drive a(tau) u(x): b vanishes, W = avg(a-anti^2) |u'|^2 / 2 ----

def test_quartic_fluctuation_and_null_magnetic_vector():
    sc = get_scenario("quartic_drive")
    x = np.array([0.9, -0.4])
    st = PeriodicFieldStack(sc.potential, x, 16)
    u_grad = np.array([x[0] ** 3 + x[1], x[0]])
    avg_v2 = 1.0 / (8.0 * math.pi ** 2)  # cosine drive, antiderivative sin/(2 pi)
    want_vv = avg_v2 * float(u_grad @ u_grad)
    assert abs(st.vv_mean() - want_vv) < 1e-14, \
        f"quartic vv_mean {st.vv_mean():.15e} != {want_vv:.15e}"
    bnorm = float(np.linalg.norm(st.b_vector()))
    assert bnorm < 1e-14, f"separable drive should have b = 0, got |b| = {bnorm:.2e}"

    u_hess = np.array([[3.0 * x[0] ** 2, 1.0], [1.0, 0.0]])
    want_w_grad = avg_v2 * (u_hess @ u_grad)
    err = np.max(np.abs(st.w_grad() - want_w_grad))
    assert err < 1e-13, f"quartic w_grad off by {err:.2e}"


def test_w_grad_matches_gradient_of_w_value():
    """The product-average route and differentiating W must agree."""
    for name, x in (("rotating_saddle", np.array([0.7, 0.2])),
                    ("rotating_wave", np.array([1.3, -0.6]))):
        sc = get_scenario(name)

        def w_of(y, sc=sc):
            return PeriodicFieldStack(sc.potential, y, 32).w_value()

        direct = PeriodicFieldStack(sc.potential, x, 32).w_grad()
        fd = fd_gradient(w_of, x)
        err = np.max(np.abs(direct - fd))
        assert err < 1e-8, f"{name}: w_grad vs grad of w_value differ by {err:.2e}"


# ---- tau-resolved pieces used by the guiding-center velocity ----

def test_third_antiderivative_for_cosine_drive():
    """For a(tau) = cos(2 pi tau) the third antiderivative is -sin(2 pi tau)/(2 pi)^3."""
    sc = get_scenario("quartic_drive")
    x = np.array([0.6, 0.3])
    st = PeriodicFieldStack(sc.potential, x, 16)
    u_grad = np.array([x[0] ** 3 + x[1], x[0]])
    for tau in (0.0, 0.15, 0.4, 0.85):
        want = -math.sin(TWO_PI * tau) / TWO_PI ** 3 * u_grad
        got = st.a_grad_at(tau)
        err = np.max(np.abs(got - want))
        assert err < 1e-14, f"a_grad_at({tau}) off by {err:.2e}"


def test_phase_drive_antiderivative_for_cosine_drive():
    """avg-free antiderivative of U'' S' for a cosine drive.

    a * a_anti2 = -cos^2/(4 pi^2) has oscillating part -cos(4 pi tau)/(8 pi^2),
    whose antiderivative is -sin(4 pi tau)/(32 pi^3), times u'' u'.
    """
    sc = get_scenario("quartic_drive")
    x = np.array([0.5, -0.2])
    st = PeriodicFieldStack(sc.potential, x, 16)
    u_grad = np.array([x[0] ** 3 + x[1], x[0]])
    u_hess = np.array([[3.0 * x[0] ** 2, 1.0], [1.0, 0.0]])
    vec = u_hess @ u_grad
    for tau in (0.1, 0.35, 0.7):
        want = -math.sin(2.0 * TWO_PI * tau) / (32.0 * math.pi ** 3) * vec
        got = st.hess_s_grad_antideriv_at(tau)
        err = np.max(np.abs(got - want))
        assert err < 1e-14, f"phase drive at tau={tau} off by {err:.2e}"


def test_phase_drive_vanishes_for_saddle():
    """The saddle's U'' S' product is constant in tau, so its wiggle part is zero."""
    st = _saddle_stack(np.array([0.9, 0.4]))
    worst = max(np.max(np.abs(st.hess_s_grad_antideriv_at(tau)))
                for tau in (0.0, 0.2, 0.55, 0.8))
    assert worst < 1e-14, f"saddle phase drive should vanish, got {worst:.2e}"


# ---- effective potential assembly ----

def test_effective_potential_standard_split():
    """U = g(x) + cos(2 pi tau) u(x) gives U_eff = g + eps^2 |grad u|^2 / (16 pi^2)."""

    def value(x, tau):
        g = 0.5 * (x[0] ** 2 + x[1] ** 2)
        return g + np.cos(TWO_PI * np.asarray(tau, dtype=float)) * x[0] * x[1]

    def grad(x, tau):
        c = np.cos(TWO_PI * np.asarray(tau, dtype=float))
        gg = np.stack([x[0] + c * x[1], x[1] + c * x[0]], axis=-1)
        return gg

    def hess(x, tau):
        c = np.cos(TWO_PI * np.asarray(tau, dtype=float))
        one = np.ones_like(c)
        return np.stack([np.stack([one, c], axis=-1),
                         np.stack([c, one], axis=-1)], axis=-2)

    pot = CallablePotential(value=value, dim=2, grad=grad, hess=hess)
    eps = 0.05
    system = assemble(pot, eps, n_tau=16)
    x = np.array([0.7, -1.1])
    grad_u = np.array([x[1], x[0]])
    want = 0.5 * float(x @ x) + eps ** 2 * float(grad_u @ grad_u) / (16.0 * math.pi ** 2)
    got = system.effective_potential(x)
    assert abs(got - want) < 1e-13, f"U_eff {got:.15e} != {want:.15e}"


def test_kapitza_inverted_point_stability_flip():
    """Curvature at the flipped equilibrium changes sign once the drive is strong enough.

    With mean gravity a0 and drive amplitude 1, the inverted point is stable
    iff eps^2 / (8 pi^2) > a0.
    """
    a0 = 0.001
    sc = get_scenario("kapitza_pendulum", a_mean=a0, alpha=1.0)
    x_top = np.array([math.pi])

    def curvature(eps):
        system = sc.build_system(eps)

        def u_eff(y):
            return system.effective_potential(y)

        h = 1e-4
        return (u_eff(x_top + h) - 2.0 * u_eff(x_top) + u_eff(x_top - h)) / h ** 2

    # threshold at eps = sqrt(8 pi^2 a0) ~ 0.281
    weak = curvature(0.05)
    strong = curvature(0.5)
    assert weak < 0.0, f"weak drive should leave the inverted point unstable, got {weak:.3e}"
    assert strong > 0.0, f"strong drive should stabilize the inverted point, got {strong:.3e}"


def test_satellite_internal_mean_matches_closed_form():
    """Mean of the oscillating part is sigma/(2 pi) * 1/(2 r^3) (checked at sigma = +1)."""
    sc = get_scenario("spinning_satellite", sigma=1.0)
    system = sc.build_system(1.0 / 128)
    for r in (0.7, 1.4, 2.6):
        x = np.array([r * math.cos(0.9), r * math.sin(0.9)])
        st = system.stack(x)
        want = 1.0 / (TWO_PI * 2.0 * r ** 3)
        assert abs(st.u_mean - want) < 1e-12 * abs(want), \
            f"satellite mean at r={r}: {st.u_mean:.15e} != {want:.15e}"


# ---- system-level wiring ----

def test_order_detection_and_correction_powers():
    standard = get_scenario("rotating_saddle").build_system(1.0 / 64)
    assert standard.order == "standard"
    assert (standard.w_power, standard.b_power) == (2, 3)

    split = get_scenario("spinning_satellite").build_system(1.0 / 64)
    assert split.order == "slow_plus_eps"
    assert (split.w_power, split.b_power) == (4, 5)


def test_energy_is_kinetic_plus_effective_potential():
    system = get_scenario("rotating_wave").build_system(1.0 / 64)
    x = np.array([1.2, -0.8])
    v = np.array([0.3, 0.4])
    want = 0.5 * float(v @ v) + system.effective_potential(x)
    assert abs(system.energy(x, v) - want) < 1e-15


def test_b_matrix_antisymmetric_on_generic_scenarios():
    rng = np.random.default_rng(5)
    for name in ("rotating_wave", "spinning_satellite"):
        system = get_scenario(name).build_system(1.0 / 64)
        for _ in range(5):
            r = rng.uniform(0.8, 2.0)
            ang = rng.uniform(0.0, TWO_PI)
            x = r * np.array([math.cos(ang), math.sin(ang)])
            B = system.b_matrix(x)
            scale = max(float(np.max(np.abs(B))), 1e-14)
            skew = float(np.max(np.abs(B + B.T))) / scale
            assert skew < 1e-9, f"{name}: relative skew {skew:.2e} at {x}"


def test_assemble_rejects_bad_epsilon():
    sc = get_scenario("rotating_saddle")
    with pytest.raises(ValueError, match="epsilon must be positive"):
        assemble(sc.potential, 0.0)
