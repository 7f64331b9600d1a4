"""Bundled scenario potentials, their closed-form fields, and run configs.

Each scenario packages a potential with analytic derivatives, sensible run
defaults, and (where available) closed-form expressions for the averaged
fields.  The closed forms are stated in internal units (fast phase of period 1,
eps measured so the phase is t / eps).  Scenarios whose natural phase is an
angle that advances by 2 pi per cycle carry eps_scale = 2 pi: the eps a user
passes is the angular one, and internal eps = eps_scale * eps_user.  With that
bookkeeping every assembled field times its internal eps power equals the
angular-convention field times the same power of the user eps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .averaging import assemble
from .fields import (CallableStatic, Order1Potential, StaticPotential,
                     TimePeriodicPotential)

TWO_PI = 2.0 * math.pi
J2 = np.array([[0.0, -1.0], [1.0, 0.0]])


class ScenarioUsageError(ValueError):
    """Raised when a scenario cannot be built from the given arguments."""


@dataclass
class Scenario:
    name: str
    description: str
    potential: object
    eps_scale: float
    default_eps: list
    x0: np.ndarray
    v0: np.ndarray
    t_end: float
    steps_per_period: int
    h_avg: float
    out_dt: float
    n_tau: int
    closed_forms: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.potential.dim

    def internal_eps(self, eps_user: float) -> float:
        return self.eps_scale * float(eps_user)

    def build_system(self, eps_user: float):
        return assemble(self.potential, self.internal_eps(eps_user), n_tau=self.n_tau)


# ---- rotating saddle ----

class RotatingSaddlePotential(TimePeriodicPotential):
    """Quadratic saddle whose principal axes spin clockwise, one turn per cycle.

    U(x, tau) = x . Q(-2 pi tau) x / 2 with Q(t) = [[cos t, sin t], [sin t, -cos t]].
    The clockwise sense fixes the sign of the induced magnetic-like coupling:
    the averaged force is -eps_u^2 X - 2 eps_u^3 J Xd in user (angular) units.
    """

    dim = 2

    def _cs(self, tau):
        ang = -TWO_PI * np.asarray(tau, dtype=float)
        return np.cos(ang), np.sin(ang)

    def value(self, x, tau):
        c, s = self._cs(tau)
        return 0.5 * c * (x[0] ** 2 - x[1] ** 2) + s * x[0] * x[1]

    def grad(self, x, tau):
        if np.ndim(tau) == 0:
            ang = -TWO_PI * tau
            c, s = math.cos(ang), math.sin(ang)
            return np.array([c * x[0] + s * x[1], s * x[0] - c * x[1]])
        c, s = self._cs(tau)
        return np.stack([c * x[0] + s * x[1], s * x[0] - c * x[1]], axis=-1)

    def hess(self, x, tau):
        c, s = self._cs(tau)
        row1 = np.stack([c, s], axis=-1)
        row2 = np.stack([s, -c], axis=-1)
        return np.stack([row1, row2], axis=-2)


def rotating_saddle() -> Scenario:
    pot = RotatingSaddlePotential()
    k3 = 1.0 / (8.0 * math.pi ** 3)

    def b_closed(x):
        return k3 * (J2 @ np.asarray(x, dtype=float))

    def b_matrix_closed(x):
        return -2.0 * k3 * J2

    closed = {
        "mean_grad": lambda x: np.zeros(2),
        "w_value": lambda x: float(np.dot(x, x)) / (8.0 * math.pi ** 2),
        "w_grad": lambda x: np.asarray(x, dtype=float) / (4.0 * math.pi ** 2),
        "b": b_closed,
        "b_matrix": b_matrix_closed,
        # total averaged force in user (angular) units
        "force_user": lambda eps_u, x, v: -eps_u ** 2 * np.asarray(x, dtype=float)
                                          - 2.0 * eps_u ** 3 * (J2 @ np.asarray(v, dtype=float)),
    }
    return Scenario(
        name="rotating_saddle",
        description="spinning quadratic saddle, the standard example of magnetic-like stabilization",
        potential=pot,
        eps_scale=TWO_PI,
        default_eps=[1 / 64, 1 / 128, 1 / 256, 1 / 512],
        x0=np.array([1.0, 0.0]),
        v0=np.array([0.0, 0.3]),
        t_end=2.0,
        steps_per_period=256,
        h_avg=0.01,
        out_dt=0.01,
        n_tau=16,
        closed_forms=closed,
        extras={"slope_floor": 3.7},
    )


# ---- separable drives a(tau) u(x) ----

class SeparableDrivePotential(TimePeriodicPotential):
    """U(x, tau) = a(tau) u(x): a scalar drive times a fixed spatial profile.

    The magnetic-like vector vanishes identically for this family, since the
    two tau factors entering it are antiderivatives of the same scalar drive
    and their product has zero mean.  The only surviving correction is the
    velocity-independent one with coefficient avg over tau of the squared
    zero-mean antiderivative of a.
    """

    def __init__(self, a, u_value, u_grad, u_hess, dim):
        self.dim = int(dim)
        self._a = a
        self._uv = u_value
        self._ug = u_grad
        self._uh = u_hess

    def value(self, x, tau):
        return self._a(np.asarray(tau, dtype=float)) * self._uv(x)

    def grad(self, x, tau):
        a = self._a(np.asarray(tau, dtype=float))
        g = np.asarray(self._ug(x), dtype=float)
        if np.ndim(a) == 0:
            return float(a) * g
        return np.asarray(a)[..., None] * g

    def hess(self, x, tau):
        a = self._a(np.asarray(tau, dtype=float))
        hm = np.asarray(self._uh(x), dtype=float)
        if np.ndim(a) == 0:
            return float(a) * hm
        return np.asarray(a)[..., None, None] * hm


def _separable_closed(a_mean, avg_v2, u_grad, u_hess, dim):
    def w_grad(x):
        return avg_v2 * (np.asarray(u_hess(x), dtype=float) @ np.asarray(u_grad(x), dtype=float))

    return {
        "mean_grad": lambda x: a_mean * np.asarray(u_grad(x), dtype=float),
        "w_grad": w_grad,
        "b": lambda x: np.zeros(dim),
        "b_matrix": lambda x: np.zeros((dim, dim)),
    }


def quartic_drive() -> Scenario:
    """Zero-mean cosine drive on a quartic-plus-shear profile (no closed orbitals,
    exercises the third-antiderivative terms of the guiding-center map)."""

    def u_value(x):
        return x[0] ** 4 / 4.0 + x[0] * x[1]

    def u_grad(x):
        return np.array([x[0] ** 3 + x[1], x[0]])

    def u_hess(x):
        return np.array([[3.0 * x[0] ** 2, 1.0], [1.0, 0.0]])

    pot = SeparableDrivePotential(lambda tau: np.cos(TWO_PI * tau),
                                  u_value, u_grad, u_hess, dim=2)
    avg_v2 = 1.0 / (8.0 * math.pi ** 2)  # drive antiderivative sin(2 pi tau)/(2 pi)
    return Scenario(
        name="quartic_drive",
        description="oscillating quartic profile with shear, a generic zero-mean drive",
        potential=pot,
        eps_scale=1.0,
        default_eps=[1 / 64, 1 / 128, 1 / 256, 1 / 512],
        x0=np.array([0.8, 0.4]),
        v0=np.array([0.2, -0.1]),
        t_end=2.0,
        steps_per_period=128,
        h_avg=0.005,
        out_dt=0.01,
        n_tau=16,
        closed_forms=_separable_closed(0.0, avg_v2, u_grad, u_hess, 2),
        extras={"slope_floor": 3.7, "avg_v2": avg_v2},
    )


def kapitza_pendulum(a_mean: float = 1.0, alpha: float = 1.0) -> Scenario:
    """Pendulum with vertically modulated gravity a(tau) = a_mean + alpha cos(2 pi tau).

    The inverted position becomes linearly stable once
    eps^2 alpha^2 / (8 pi^2) exceeds a_mean.
    """

    def u_value(x):
        return -math.cos(x[0])

    def u_grad(x):
        return np.array([math.sin(x[0])])

    def u_hess(x):
        return np.array([[math.cos(x[0])]])

    pot = SeparableDrivePotential(lambda tau: a_mean + alpha * np.cos(TWO_PI * tau),
                                  u_value, u_grad, u_hess, dim=1)
    avg_v2 = alpha ** 2 / (8.0 * math.pi ** 2)
    sc = Scenario(
        name="kapitza_pendulum",
        description="pendulum with oscillating gravity; flips stability of the inverted point",
        potential=pot,
        eps_scale=1.0,
        default_eps=[1 / 16, 1 / 32, 1 / 64, 1 / 128],
        x0=np.array([0.3]),
        v0=np.array([0.0]),
        t_end=3.0,
        steps_per_period=96,
        h_avg=0.005,
        out_dt=0.01,
        n_tau=16,
        closed_forms=_separable_closed(a_mean, avg_v2, u_grad, u_hess, 1),
        extras={"a_mean": a_mean, "alpha": alpha, "avg_v2": avg_v2,
                "inversion_threshold": "a_mean < eps^2 alpha^2 / (8 pi^2)"},
    )
    return sc


# ---- rotating angular wave ----

class RotatingWavePotential(TimePeriodicPotential):
    """U(x, tau) = cos(phi - 2 pi tau) + offset, phi the polar angle of x.

    A pure angular wave sweeping around the origin once per cycle.  Its mean
    is constant, so the entire averaged force comes from the oscillation
    corrections; the magnetic-like vector decays like 1/r^3.  Singular at the
    origin, so a disk around it is excluded from the trusted region.
    """

    def __init__(self, offset: float = 0.3, r_min: float = 0.5):
        self.offset = float(offset)
        self.r_min = float(r_min)

    dim = 2

    def _e(self, tau):
        ang = TWO_PI * np.asarray(tau, dtype=float)
        return np.cos(ang), np.sin(ang)

    def value(self, x, tau):
        c, s = self._e(tau)
        r = math.hypot(x[0], x[1])
        return (x[0] * c + x[1] * s) / r + self.offset

    def grad(self, x, tau):
        c, s = self._e(tau)
        r2 = x[0] ** 2 + x[1] ** 2
        r = math.sqrt(r2)
        dot = (x[0] * c + x[1] * s) / (r2 * r)
        return np.stack([c / r - dot * x[0], s / r - dot * x[1]], axis=-1)

    def hess(self, x, tau):
        c, s = self._e(tau)
        r2 = x[0] ** 2 + x[1] ** 2
        r = math.sqrt(r2)
        r3 = r2 * r
        r5 = r2 * r3
        dot = x[0] * c + x[1] * s
        e = [c, s]
        out = np.empty(np.shape(c) + (2, 2))
        for i in range(2):
            for j in range(2):
                term = -(e[i] * x[j] + e[j] * x[i]) / r3 + 3.0 * dot * x[i] * x[j] / r5
                if i == j:
                    term = term - dot / r3
                out[..., i, j] = term
        return out

    def in_region(self, x):
        return math.hypot(x[0], x[1]) >= self.r_min


def rotating_wave(offset: float = 0.3, r_min: float = 0.5) -> Scenario:
    pot = RotatingWavePotential(offset=offset, r_min=r_min)
    c1 = 0.5  # avg over one turn of (cos)^2

    def w_value(x):
        r2 = float(np.dot(x, x))
        return c1 / (8.0 * math.pi ** 2 * r2)

    def w_grad(x):
        x = np.asarray(x, dtype=float)
        r2 = float(x @ x)
        return -c1 * x / (4.0 * math.pi ** 2 * r2 ** 2)

    def b_closed(x):
        x = np.asarray(x, dtype=float)
        r2 = float(x @ x)
        return c1 * np.array([x[1], -x[0]]) / (8.0 * math.pi ** 3 * r2 ** 2)

    def b_matrix_closed(x):
        r2 = float(np.dot(x, x))
        kappa = c1 / (4.0 * math.pi ** 3 * r2 ** 2)
        return np.array([[0.0, kappa], [-kappa, 0.0]])

    return Scenario(
        name="rotating_wave",
        description="angular wave circling the origin; pure oscillation corrections, 1/r^3 magnetic decay",
        potential=pot,
        eps_scale=TWO_PI,
        default_eps=[1 / 64, 1 / 128, 1 / 256, 1 / 512],
        x0=np.array([1.5, 0.0]),
        v0=np.array([0.0, 0.25]),
        t_end=2.0,
        steps_per_period=96,
        h_avg=0.01,
        out_dt=0.01,
        n_tau=16,
        closed_forms={"mean_grad": lambda x: np.zeros(2), "w_value": w_value,
                      "w_grad": w_grad, "b": b_closed, "b_matrix": b_matrix_closed},
        extras={"r_min": r_min, "field_decay_slope": -3.0},
    )


# ---- spinning satellite (fast-spinning dumbbell around a point mass) ----

class SatelliteStatic(StaticPotential):
    """Slow part 2 sigma / r: both endpoint masses feel the ambient field."""

    dim = 2

    def __init__(self, sigma=-1.0, r_min=0.1):
        self.sigma = float(sigma)
        self.r_min = float(r_min)

    def value(self, x):
        return 2.0 * self.sigma / math.hypot(x[0], x[1])

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        r = math.hypot(x[0], x[1])
        return -2.0 * self.sigma * x / r ** 3

    def hess(self, x):
        x = np.asarray(x, dtype=float)
        r2 = float(x @ x)
        r3 = r2 ** 1.5
        r5 = r2 * r3
        return 2.0 * self.sigma * (3.0 * np.outer(x, x) / r5 - np.eye(2) / r3)

    def in_region(self, x):
        return math.hypot(x[0], x[1]) >= self.r_min


class SatelliteOscillating(TimePeriodicPotential):
    """First-order tidal term of a spinning dumbbell, phase-averaged form.

    In angular variables the term is sigma (1 + 3 cos 2(theta - phi)) / (2 r^3)
    with theta the spin angle and phi the polar angle of the center.  Written
    on the unit-period phase tau (theta = 2 pi tau) and rescaled by 1/(2 pi) so
    that internal eps times this equals the angular-units term times the user
    eps.
    """

    dim = 2

    def __init__(self, sigma=-1.0, r_min=0.1):
        self.sigma = float(sigma)
        self.r_min = float(r_min)

    # cartesian pieces: value = sigma/(2 pi) [p + 2 C cos(2 theta) - 2 B sin(2 theta)]
    # with p = 1/(2 r^3), B = -3xy/(2 r^5), C = 3(x^2 - y^2)/(4 r^5)

    @staticmethod
    def _pieces(x):
        xx, yy = float(x[0]), float(x[1])
        r2 = xx * xx + yy * yy
        r = math.sqrt(r2)
        r3 = r2 * r
        r5 = r2 * r3
        p = 0.5 / r3
        B = -1.5 * xx * yy / r5
        C = 0.75 * (xx * xx - yy * yy) / r5
        return p, B, C

    @staticmethod
    def _piece_grads(x):
        x = np.asarray(x, dtype=float)
        xx, yy = x
        r2 = float(x @ x)
        r = math.sqrt(r2)
        r5 = r2 * r2 * r
        r7 = r5 * r2
        gp = -1.5 * x / r5
        gB = -1.5 * (np.array([yy, xx]) / r5 - 5.0 * xx * yy * x / r7)
        q = xx * xx - yy * yy
        gC = 0.75 * (np.array([2.0 * xx, -2.0 * yy]) / r5 - 5.0 * q * x / r7)
        return gp, gB, gC

    @staticmethod
    def _piece_hessians(x):
        x = np.asarray(x, dtype=float)
        xx, yy = x
        r2 = float(x @ x)
        r = math.sqrt(r2)
        r5 = r2 * r2 * r
        r7 = r5 * r2
        r9 = r7 * r2
        I = np.eye(2)
        zz = np.outer(x, x)
        hp = -1.5 * I / r5 + 7.5 * zz / r7
        # product rule on B = -3/2 * (xy) r^-5 and C = 3/4 * (x^2-y^2) r^-5
        gxy = np.array([yy, xx])
        hxy = np.array([[0.0, 1.0], [1.0, 0.0]])
        grm5 = -5.0 * x / r7
        hrm5 = -5.0 * I / r7 + 35.0 * zz / r9
        hB = -1.5 * (hxy / r5 + xx * yy * hrm5
                     + np.outer(gxy, grm5) + np.outer(grm5, gxy))
        q = xx * xx - yy * yy
        gq = np.array([2.0 * xx, -2.0 * yy])
        hq = np.array([[2.0, 0.0], [0.0, -2.0]])
        hC = 0.75 * (hq / r5 + q * hrm5 + np.outer(gq, grm5) + np.outer(grm5, gq))
        return hp, hB, hC

    def _phase(self, tau):
        ang = 2.0 * TWO_PI * np.asarray(tau, dtype=float)
        return np.cos(ang), np.sin(ang)

    def value(self, x, tau):
        p, B, C = self._pieces(x)
        c2, s2 = self._phase(tau)
        return self.sigma / TWO_PI * (p + 2.0 * C * c2 - 2.0 * B * s2)

    def grad(self, x, tau):
        gp, gB, gC = self._piece_grads(x)
        c2, s2 = self._phase(tau)
        c2 = np.asarray(c2)[..., None]
        s2 = np.asarray(s2)[..., None]
        return self.sigma / TWO_PI * (gp + 2.0 * gC * c2 - 2.0 * gB * s2)

    def hess(self, x, tau):
        hp, hB, hC = self._piece_hessians(x)
        c2, s2 = self._phase(tau)
        c2 = np.asarray(c2)[..., None, None]
        s2 = np.asarray(s2)[..., None, None]
        return self.sigma / TWO_PI * (hp + 2.0 * hC * c2 - 2.0 * hB * s2)

    def in_region(self, x):
        return math.hypot(x[0], x[1]) >= self.r_min


def spinning_satellite(sigma: float = -1.0, r_min: float = 0.1) -> Scenario:
    """Fast-spinning dumbbell around a point mass, reduced to a split potential.

    sigma = -1 is the attractive case with bound orbits; sigma = +1 is
    repulsive and only useful for field checks.
    """
    pot = Order1Potential(SatelliteStatic(sigma, r_min), SatelliteOscillating(sigma, r_min))
    s2 = sigma * sigma

    def mean_grad(x):
        x = np.asarray(x, dtype=float)
        r = math.hypot(x[0], x[1])
        return sigma / TWO_PI * (-1.5) * x / r ** 5

    def w_value(x):
        r2 = float(np.dot(x, x))
        return s2 * (117.0 / 64.0) / r2 ** 4 / TWO_PI ** 4

    def w_grad(x):
        x = np.asarray(x, dtype=float)
        r2 = float(x @ x)
        return -s2 * (117.0 / 8.0) * x / r2 ** 5 / TWO_PI ** 4

    def b_closed(x):
        x = np.asarray(x, dtype=float)
        r2 = float(x @ x)
        return s2 * (171.0 / 32.0) * np.array([x[1], -x[0]]) / r2 ** 5 / TWO_PI ** 5

    def b_matrix_closed(x):
        r2 = float(np.dot(x, x))
        kappa = s2 * (171.0 / 4.0) / r2 ** 5 / TWO_PI ** 5
        return np.array([[0.0, kappa], [-kappa, 0.0]])

    return Scenario(
        name="spinning_satellite",
        description="fast-spinning dumbbell orbiting a point mass (split potential, corrections two orders down)",
        potential=pot,
        eps_scale=TWO_PI,
        default_eps=[1 / 64, 1 / 128, 1 / 256, 1 / 512],
        x0=np.array([1.0, 0.0]),
        v0=np.array([0.0, 1.2]),
        t_end=2.0,
        steps_per_period=96,
        h_avg=0.001,
        out_dt=0.01,
        n_tau=16,
        closed_forms={"mean_grad": mean_grad, "w_value": w_value, "w_grad": w_grad,
                      "b": b_closed, "b_matrix": b_matrix_closed},
        extras={"sigma": sigma, "r_min": r_min, "slope_floor": 4.5,
                # defaults for the dumbbell-vs-model precession comparison;
                # periods are rough vis-viva estimates used only to size t_end
                "precession": {"eps": 0.02, "z0": [1.0, 0.0],
                               "dumbbell_v0": [0.0, 0.9], "dumbbell_period": 4.9,
                               "averaged_v0": [0.0, 1.2], "averaged_period": 3.1,
                               "min_separation": 1.0}},
    )


def custom_scenario(potential, eps_scale=1.0, default_eps=(0.05,), x0=None, v0=None,
                    t_end=2.0, steps_per_period=96, h_avg=0.01, out_dt=0.01,
                    n_tau=48, name="custom", description="user-supplied potential") -> Scenario:
    """Wrap a user potential as a scenario.  Library use only: the command line
    cannot construct one, since a potential is code, not a config value."""
    dim = potential.dim
    return Scenario(
        name=name, description=description, potential=potential,
        eps_scale=float(eps_scale), default_eps=list(default_eps),
        x0=np.zeros(dim) if x0 is None else np.asarray(x0, dtype=float),
        v0=np.zeros(dim) if v0 is None else np.asarray(v0, dtype=float),
        t_end=float(t_end), steps_per_period=int(steps_per_period),
        h_avg=float(h_avg), out_dt=float(out_dt), n_tau=int(n_tau),
    )


def _custom_placeholder(**kw):
    raise ScenarioUsageError(
        "scenario 'custom' wraps a user potential and can only be built in code: "
        "call oscavg.scenarios.custom_scenario(potential, ...)")


CATALOG = {
    "rotating_saddle": rotating_saddle,
    "quartic_drive": quartic_drive,
    "kapitza_pendulum": kapitza_pendulum,
    "rotating_wave": rotating_wave,
    "spinning_satellite": spinning_satellite,
    "custom": _custom_placeholder,
}


def get_scenario(name: str, **kwargs) -> Scenario:
    try:
        factory = CATALOG[name]
    except KeyError:
        raise KeyError(name)
    try:
        return factory(**kwargs)
    except TypeError as exc:
        raise ScenarioUsageError(f"scenario {name!r} does not accept {sorted(kwargs)}: {exc}")


# ---- flat key=value config files ----

_CONFIG_TYPES = {
    "scenario": "str",
    "eps": "numlist",
    "t_end": "num",
    "steps_per_period": "int",
    "h_avg": "num",
    "out_dt": "num",
    "n_tau": "int",
    "sign": "num",
    "out_dir": "str",
    "jobs": "int",
    "seed": "int",
}


def parse_number(text: str) -> float:
    """Parse a float, allowing fractions like 1/64."""
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def parse_config(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno} is not key = value: {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_TYPES:
            raise ValueError(f"unknown config key {key!r} on line {lineno}")
        kind = _CONFIG_TYPES[key]
        if kind == "str":
            out[key] = val
        elif kind == "int":
            out[key] = int(val)
        elif kind == "num":
            out[key] = parse_number(val)
        elif kind == "numlist":
            out[key] = [parse_number(part) for part in val.split(",") if part.strip()]
    return out


def format_config(cfg: dict) -> str:
    lines = ["# oscavg run configuration"]
    for key in sorted(cfg):
        if key not in _CONFIG_TYPES:
            raise ValueError(f"unknown config key {key!r}")
        val = cfg[key]
        if isinstance(val, (list, tuple)):
            val = ", ".join(repr(float(v)) for v in val)
        lines.append(f"{key} = {val}")
    return "\n".join(lines) + "\n"


def load_config(path) -> dict:
    with open(path) as fh:
        return parse_config(fh.read())


def save_config(cfg: dict, path):
    with open(path, "w") as fh:
        fh.write(format_config(cfg))
