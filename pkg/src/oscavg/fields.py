"""Time-periodic potentials and the Fourier tools used to average them.

Everything here works with the fast phase tau measured in units of one
oscillation period, so all periodic quantities have period 1 in tau.
"""
from __future__ import annotations

import numpy as np

_EPS = float(np.finfo(float).eps)

# central-difference steps, scaled by the point magnitude
GRAD_STEP = _EPS ** (1.0 / 3.0)
HESS_STEP = _EPS ** 0.25


def _fd_step(x, base):
    return base * (1.0 + float(np.max(np.abs(x))))


def fd_gradient(f, x, h=None):
    """Central-difference gradient of a scalar function f at x."""
    x = np.asarray(x, dtype=float)
    if h is None:
        h = _fd_step(x, GRAD_STEP)
    g = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        xp = x.copy(); xp[i] += h
        xm = x.copy(); xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2.0 * h)
    return g


def fd_jacobian(f, x, h=None):
    """Central-difference Jacobian J[i, j] = d f_i / d x_j."""
    x = np.asarray(x, dtype=float)
    if h is None:
        h = _fd_step(x, GRAD_STEP)
    cols = []
    for j in range(x.shape[0]):
        xp = x.copy(); xp[j] += h
        xm = x.copy(); xm[j] -= h
        cols.append((np.asarray(f(xp), dtype=float) - np.asarray(f(xm), dtype=float)) / (2.0 * h))
    return np.stack(cols, axis=-1)


def fd_hessian(f, x, h=None):
    """Symmetric second-difference Hessian of a scalar function f at x."""
    x = np.asarray(x, dtype=float)
    d = x.shape[0]
    if h is None:
        h = _fd_step(x, HESS_STEP)
    f0 = f(x)
    H = np.empty((d, d))
    for i in range(d):
        xp = x.copy(); xp[i] += h
        xm = x.copy(); xm[i] -= h
        H[i, i] = (f(xp) - 2.0 * f0 + f(xm)) / h ** 2
    for i in range(d):
        for j in range(i + 1, d):
            xpp = x.copy(); xpp[i] += h; xpp[j] += h
            xpm = x.copy(); xpm[i] += h; xpm[j] -= h
            xmp = x.copy(); xmp[i] -= h; xmp[j] += h
            xmm = x.copy(); xmm[i] -= h; xmm[j] -= h
            H[i, j] = H[j, i] = (f(xpp) - f(xpm) - f(xmp) + f(xmm)) / (4.0 * h ** 2)
    return H


class FourierSeries:
    """A real, 1-periodic function (possibly array valued) held as rfft coefficients.

    Built from uniform samples over one period.  Coefficients are normalized so
    that coeffs[0] is the mean.  The sample count n is kept so the series can be
    restored on the original grid exactly.
    """

    __slots__ = ("coeffs", "n")

    def __init__(self, coeffs, n):
        self.coeffs = np.asarray(coeffs, dtype=complex)
        self.n = int(n)

    @classmethod
    def from_samples(cls, samples):
        samples = np.asarray(samples, dtype=float)
        if samples.shape[0] < 2:
            raise ValueError(f"need at least 2 samples per period, got {samples.shape[0]}")
        n = samples.shape[0]
        return cls(np.fft.rfft(samples, axis=0) / n, n)

    @property
    def mean(self):
        m = self.coeffs[0].real
        return float(m) if m.ndim == 0 else m.copy()

    def without_mean(self):
        c = self.coeffs.copy()
        c[0] = 0.0
        return FourierSeries(c, self.n)

    def antiderivative(self):
        """Zero-mean antiderivative in tau.  Requires a zero-mean input."""
        scale = float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0
        if float(np.max(np.abs(self.coeffs[0]))) > 1e-10 * max(scale, 1e-300):
            raise ValueError("nonzero mean; subtract the average before integrating in tau")
        k = np.arange(self.coeffs.shape[0])
        factor = np.zeros(k.shape[0], dtype=complex)
        factor[1:] = 1.0 / (2.0j * np.pi * k[1:])
        shape = (k.shape[0],) + (1,) * (self.coeffs.ndim - 1)
        return FourierSeries(self.coeffs * factor.reshape(shape), self.n)

    def derivative(self):
        """Derivative in tau."""
        k = np.arange(self.coeffs.shape[0])
        factor = 2.0j * np.pi * k
        shape = (k.shape[0],) + (1,) * (self.coeffs.ndim - 1)
        return FourierSeries(self.coeffs * factor.reshape(shape), self.n)

    def grid(self):
        """Values back on the original n-point sample grid."""
        return np.fft.irfft(self.coeffs * self.n, n=self.n, axis=0)

    def eval(self, tau):
        """Evaluate at arbitrary tau (scalar or 1-d array), interpreted mod 1."""
        tau_arr = np.atleast_1d(np.asarray(tau, dtype=float))
        m = self.coeffs.shape[0]
        k = np.arange(m)
        w = np.full(m, 2.0)
        w[0] = 1.0
        if self.n % 2 == 0:
            w[-1] = 1.0  # Nyquist bin appears once
        phases = np.exp(2.0j * np.pi * np.outer(tau_arr, k))
        wc = self.coeffs * w.reshape((m,) + (1,) * (self.coeffs.ndim - 1))
        out = np.real(np.tensordot(phases, wc, axes=([1], [0])))
        if np.isscalar(tau) or np.asarray(tau).ndim == 0:
            return out[0]
        return out


class TimePeriodicPotential:
    """Base class for potentials U(x, tau) with period 1 in tau.

    Subclasses must implement value() and should implement grad() and hess()
    analytically when possible; the finite-difference fallbacks are accurate to
    roughly 1e-10 (gradient) and 1e-8 (Hessian).  value/grad/hess must accept
    tau as a scalar or a 1-d array and vectorize over it.
    """

    dim: int = 0

    def value(self, x, tau):
        raise NotImplementedError

    def grad(self, x, tau):
        x = np.asarray(x, dtype=float)
        h = _fd_step(x, GRAD_STEP)
        parts = []
        for i in range(self.dim):
            xp = x.copy(); xp[i] += h
            xm = x.copy(); xm[i] -= h
            parts.append((np.asarray(self.value(xp, tau)) - np.asarray(self.value(xm, tau))) / (2.0 * h))
        return np.stack(parts, axis=-1)

    def hess(self, x, tau):
        x = np.asarray(x, dtype=float)
        d = self.dim
        h = _fd_step(x, HESS_STEP)
        f0 = np.asarray(self.value(x, tau))
        out = np.empty(f0.shape + (d, d))
        for i in range(d):
            xp = x.copy(); xp[i] += h
            xm = x.copy(); xm[i] -= h
            out[..., i, i] = (np.asarray(self.value(xp, tau)) - 2.0 * f0
                              + np.asarray(self.value(xm, tau))) / h ** 2
        for i in range(d):
            for j in range(i + 1, d):
                xpp = x.copy(); xpp[i] += h; xpp[j] += h
                xpm = x.copy(); xpm[i] += h; xpm[j] -= h
                xmp = x.copy(); xmp[i] -= h; xmp[j] += h
                xmm = x.copy(); xmm[i] -= h; xmm[j] -= h
                mixed = (np.asarray(self.value(xpp, tau)) - np.asarray(self.value(xpm, tau))
                         - np.asarray(self.value(xmp, tau)) + np.asarray(self.value(xmm, tau))) / (4.0 * h ** 2)
                out[..., i, j] = mixed
                out[..., j, i] = mixed
        return out

    def in_region(self, x):
        """True while x stays inside the region where the model is trusted."""
        return True


class CallablePotential(TimePeriodicPotential):
    """Wrap plain callables as a time-periodic potential."""

    def __init__(self, value, dim, grad=None, hess=None, in_region=None):
        self.dim = int(dim)
        self._value = value
        self._grad = grad
        self._hess = hess
        self._in_region = in_region

    def value(self, x, tau):
        return self._value(x, tau)

    def grad(self, x, tau):
        if self._grad is None:
            return super().grad(x, tau)
        return self._grad(x, tau)

    def hess(self, x, tau):
        if self._hess is None:
            return super().hess(x, tau)
        return self._hess(x, tau)

    def in_region(self, x):
        if self._in_region is None:
            return True
        return bool(self._in_region(x))


class StaticPotential:
    """Potential of position only.  Used as the slow part of split potentials."""

    dim: int = 0

    def value(self, x):
        raise NotImplementedError

    def grad(self, x):
        return fd_gradient(self.value, np.asarray(x, dtype=float))

    def hess(self, x):
        return fd_hessian(self.value, np.asarray(x, dtype=float))

    def in_region(self, x):
        return True


class CallableStatic(StaticPotential):
    def __init__(self, value, dim, grad=None, hess=None, in_region=None):
        self.dim = int(dim)
        self._value = value
        self._grad = grad
        self._hess = hess
        self._in_region = in_region

    def value(self, x):
        return self._value(x)

    def grad(self, x):
        if self._grad is None:
            return super().grad(x)
        return self._grad(x)

    def hess(self, x):
        if self._hess is None:
            return super().hess(x)
        return self._hess(x)

    def in_region(self, x):
        if self._in_region is None:
            return True
        return bool(self._in_region(x))


class Order1Potential:
    """Split potential U0(x) + eps * U1(x, tau).

    The oscillating part U1 rides one power of eps above the slow part, which
    pushes every averaged correction two orders higher than in the standard
    case.  The averaging layer detects this type and shifts the powers.
    """

    def __init__(self, static: StaticPotential, oscillating: TimePeriodicPotential):
        if static.dim != oscillating.dim:
            raise ValueError(f"dimension mismatch: static {static.dim} vs oscillating {oscillating.dim}")
        self.static = static
        self.oscillating = oscillating
        self.dim = static.dim

    def value(self, x, tau, eps):
        return self.static.value(x) + eps * self.oscillating.value(x, tau)

    def grad(self, x, tau, eps):
        g1 = np.asarray(self.oscillating.grad(x, tau), dtype=float)
        return np.asarray(self.static.grad(x), dtype=float) + eps * g1

    def hess(self, x, tau, eps):
        h1 = np.asarray(self.oscillating.hess(x, tau), dtype=float)
        return np.asarray(self.static.hess(x), dtype=float) + eps * h1

    def in_region(self, x):
        return self.static.in_region(x) and self.oscillating.in_region(x)
