"""Construction of the averaged dynamics for a rapidly oscillating potential.

For a particle obeying  xdd = -grad U(x, t/eps)  with U 1-periodic in its
second argument, the motion splits into a small fast wiggle around a smooth
guiding trajectory.  The guiding trajectory feels the mean potential, a
velocity-independent correction built from the oscillating part, and a weak
magnetic-like coupling.  This module builds those fields pointwise from tau
samples of the potential and packages them as a force law.

Per-point construction: sample value/grad/hess of the potential on a uniform
tau grid, take the rfft, then divide by (2 pi i k) once, twice, three times to
get the zero-mean tau antiderivatives.  Products of the resulting series are
averaged on the sample grid, which is exact as long as the potential is a
trigonometric polynomial resolved by the grid (all bundled scenarios are).

Powers of eps carried by each piece of the averaged force:

    standard split   F = -grad(Ubar) - eps^2 grad(W) + eps^3 B xd
    slow+eps split   F = -grad(U0) - eps grad(U1bar) - eps^4 grad(W) + eps^5 B xd

with W = avg(V' . V')/2, b = avg(S'' V'), B = (Db)^T - Db, where V, S are the
first and second zero-mean tau antiderivatives of the oscillating part and
(Db)[i, j] = d b_i / d x_j.
"""
from __future__ import annotations

import numpy as np

from .fields import (FourierSeries, Order1Potential, TimePeriodicPotential,
                     fd_jacobian)


class PeriodicFieldStack:
    """Tau-resolved oscillation fields of one potential at one point.

    Holds the mean value/gradient and Fourier series for the antiderivative
    ladder: V (one integration), S (two), A (three), each with zero tau mean,
    at the spatial-derivative levels needed downstream.
    """

    def __init__(self, potential: TimePeriodicPotential, x, n_tau: int = 48):
        x = np.asarray(x, dtype=float)
        if x.shape != (potential.dim,):
            raise ValueError(f"point shape {x.shape} does not match potential dim {potential.dim}")
        if n_tau < 4:
            raise ValueError(f"n_tau={n_tau} is too coarse to resolve any oscillation")
        self.x = x
        self.n_tau = int(n_tau)
        taus = np.arange(n_tau) / n_tau

        vals = np.asarray(potential.value(x, taus), dtype=float)
        grads = np.asarray(potential.grad(x, taus), dtype=float)
        hesss = np.asarray(potential.hess(x, taus), dtype=float)
        d = potential.dim
        if vals.shape != (n_tau,):
            raise ValueError(f"potential.value returned shape {vals.shape}, expected {(n_tau,)}")
        if grads.shape != (n_tau, d):
            raise ValueError(f"potential.grad returned shape {grads.shape}, expected {(n_tau, d)}")
        if hesss.shape != (n_tau, d, d):
            raise ValueError(f"potential.hess returned shape {hesss.shape}, expected {(n_tau, d, d)}")
        if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(grads)) and np.all(np.isfinite(hesss))):
            bad = taus[~np.all(np.isfinite(grads.reshape(n_tau, -1)), axis=1)
                       | ~np.isfinite(vals)
                       | ~np.all(np.isfinite(hesss.reshape(n_tau, -1)), axis=1)]
            raise ValueError(f"potential returned non-finite samples at tau={bad[:4]}")

        f_val = FourierSeries.from_samples(vals)
        f_grad = FourierSeries.from_samples(grads)
        f_hess = FourierSeries.from_samples(hesss)

        self.u_mean = float(f_val.mean)
        self.g_mean = f_grad.mean
        self.h_mean = f_hess.mean

        self.v_val = f_val.without_mean().antiderivative()
        self.v_grad = f_grad.without_mean().antiderivative()
        self.v_hess = f_hess.without_mean().antiderivative()
        self.s_grad = self.v_grad.antiderivative()
        self.s_hess = self.v_hess.antiderivative()
        self.a_grad = self.s_grad.antiderivative()
        self.a_hess = self.s_hess.antiderivative()

        # grid samples for product averages (exact for resolved trig polynomials)
        self._vg = self.v_grad.grid()
        self._vh = self.v_hess.grid()
        self._sg = self.s_grad.grid()
        self._sh = self.s_hess.grid()
        self._h_samples = hesss

    # ---- tau averages ----

    def vv_mean(self) -> float:
        """avg over tau of V' . V'  (twice the velocity-independent correction)."""
        return float(np.mean(np.sum(self._vg ** 2, axis=1)))

    def w_value(self) -> float:
        return 0.5 * self.vv_mean()

    def w_grad(self):
        """grad of W, computed as avg(V'' V') without differencing."""
        return np.einsum("nij,nj->i", self._vh, self._vg) / self.n_tau

    def b_vector(self):
        """Magnetic-like vector b = avg(S'' V')."""
        return np.einsum("nij,nj->i", self._sh, self._vg) / self.n_tau

    # ---- tau-resolved evaluations used by the guiding-center map ----

    def v_grad_at(self, tau):
        return self.v_grad.eval(tau)

    def v_hess_at(self, tau):
        return self.v_hess.eval(tau)

    def s_grad_at(self, tau):
        return self.s_grad.eval(tau)

    def s_hess_at(self, tau):
        return self.s_hess.eval(tau)

    def a_grad_at(self, tau):
        return self.a_grad.eval(tau)

    def a_hess_at(self, tau):
        return self.a_hess.eval(tau)

    def hess_s_grad_antideriv_at(self, tau):
        """Zero-mean tau antiderivative of the product U''(tau) S'(tau).

        This is the driven part of the phase velocity carried by the first
        corrector dropped from the guiding-center position map; the product is
        formed on the sample grid before transforming, which keeps it exact as
        long as twice the potential's bandwidth is still resolved.
        """
        prod = np.einsum("nij,nj->ni", self._h_samples, self._sg)
        return FourierSeries.from_samples(prod).without_mean().antiderivative().eval(tau)


class AveragedSystem:
    """The assembled averaged dynamics for one potential at one eps.

    force(x, v) evaluates the averaged force law; the eps powers of each term
    depend on whether the potential oscillates at leading order or one order
    down (see the module docstring).  The instance also exposes the raw b
    vector, the antisymmetric coupling matrix B, the effective potential and an
    adiabatic-invariant style energy for drift checks.
    """

    def __init__(self, potential, epsilon: float, n_tau: int = 48):
        if epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {epsilon}")
        self.potential = potential
        self.epsilon = float(epsilon)
        self.n_tau = int(n_tau)
        if isinstance(potential, Order1Potential):
            self.order = "slow_plus_eps"
            self._osc = potential.oscillating
            self._static = potential.static
            self.w_power = 4
            self.b_power = 5
        else:
            self.order = "standard"
            self._osc = potential
            self._static = None
            self.w_power = 2
            self.b_power = 3
        self.dim = self._osc.dim

    def stack(self, x) -> PeriodicFieldStack:
        return PeriodicFieldStack(self._osc, x, self.n_tau)

    # ---- assembled fields ----

    def conservative_grad(self, x):
        """Gradient of the effective potential (everything except the B term)."""
        st = self.stack(x)
        eps = self.epsilon
        g = eps ** self.w_power * st.w_grad()
        if self._static is None:
            g = g + st.g_mean
        else:
            g = g + eps * st.g_mean + np.asarray(self._static.grad(x), dtype=float)
        return g

    def effective_potential(self, x) -> float:
        st = self.stack(x)
        eps = self.epsilon
        u = eps ** self.w_power * st.w_value()
        if self._static is None:
            u += st.u_mean
        else:
            u += eps * st.u_mean + float(self._static.value(x))
        return float(u)

    def b_vector(self, x):
        return self.stack(x).b_vector()

    def b_matrix(self, x):
        """B = (Db)^T - Db, exactly antisymmetric by construction."""
        Db = fd_jacobian(self.b_vector, np.asarray(x, dtype=float))
        return Db.T - Db

    def force(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        f = -self.conservative_grad(x)
        f = f + self.epsilon ** self.b_power * (self.b_matrix(x) @ v)
        return f

    def energy(self, x, v) -> float:
        """Effective energy 0.5 |v|^2 + U_eff(x).

        The velocity-coupled part of the force is antisymmetric and does no
        work, so this is an exact invariant of the averaged flow; its numerical
        drift measures integrator quality alone.
        """
        v = np.asarray(v, dtype=float)
        return float(0.5 * np.dot(v, v) + self.effective_potential(x))

    def full_acceleration(self, x, tau):
        """Instantaneous acceleration of the underlying full system at phase tau."""
        if self._static is None:
            return -np.asarray(self._osc.grad(x, tau), dtype=float)
        return -np.asarray(self.potential.grad(x, tau, self.epsilon), dtype=float)

    def in_region(self, x):
        return self.potential.in_region(x)


def assemble(potential, epsilon: float, n_tau: int = 48) -> AveragedSystem:
    """Build the averaged system for a potential at a given eps.

    The potential type selects the eps bookkeeping: a plain
    TimePeriodicPotential oscillates at leading order, an Order1Potential
    carries its oscillation one power of eps down.
    """
    return AveragedSystem(potential, epsilon, n_tau=n_tau)
