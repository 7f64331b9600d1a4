"""Unit tests for the finite-difference helpers."""
import math

import numpy as np

from oscavg import fd_gradient, fd_hessian, fd_jacobian

X0 = np.array([0.4, -0.7])


def f_scalar(x):
    return math.sin(x[0]) * math.cos(2.0 * x[1]) + x[0] ** 3 * x[1]


def grad_true(x):
    return np.array([math.cos(x[0]) * math.cos(2.0 * x[1]) + 3.0 * x[0] ** 2 * x[1],
                     -2.0 * math.sin(x[0]) * math.sin(2.0 * x[1]) + x[0] ** 3])


def hess_true(x):
    mixed = -2.0 * math.cos(x[0]) * math.sin(2.0 * x[1]) + 3.0 * x[0] ** 2
    return np.array([
        [-math.sin(x[0]) * math.cos(2.0 * x[1]) + 6.0 * x[0] * x[1], mixed],
        [mixed, -4.0 * math.sin(x[0]) * math.cos(2.0 * x[1])],
    ])


def test_gradient_matches_analytic():
    err = np.max(np.abs(fd_gradient(f_scalar, X0) - grad_true(X0)))
    # default step is tuned for ~10 digits on smooth O(1) functions
    assert err < 1e-9, f"fd_gradient error {err:.2e}"


def test_jacobian_matches_analytic():
    def f_vec(x):
        return np.array([x[0] ** 2 * x[1], math.sin(x[1]), x[0] + 2.0 * x[1]])

    def jac_true(x):
        return np.array([[2.0 * x[0] * x[1], x[0] ** 2],
                         [0.0, math.cos(x[1])],
                         [1.0, 2.0]])

    err = np.max(np.abs(fd_jacobian(f_vec, X0) - jac_true(X0)))
    assert err < 1e-9, f"fd_jacobian error {err:.2e}"


def test_hessian_matches_analytic_and_is_symmetric():
    H = fd_hessian(f_scalar, X0)
    err = np.max(np.abs(H - hess_true(X0)))
    assert err < 1e-6, f"fd_hessian error {err:.2e}"
    skew = np.max(np.abs(H - H.T))
    assert skew == 0.0, f"fd_hessian not exactly symmetric, skew {skew:.2e}"


def test_gradient_is_second_order():
    h1, h2 = 1e-2, 5e-3
    e1 = np.max(np.abs(fd_gradient(f_scalar, X0, h=h1) - grad_true(X0)))
    e2 = np.max(np.abs(fd_gradient(f_scalar, X0, h=h2) - grad_true(X0)))
    order = math.log(e1 / e2) / math.log(h1 / h2)
    assert order >= 1.9, f"gradient empirical order {order:.3f} < 1.9"


def test_hessian_is_second_order():
    h1, h2 = 1e-2, 5e-3
    e1 = np.max(np.abs(fd_hessian(f_scalar, X0, h=h1) - hess_true(X0)))
    e2 = np.max(np.abs(fd_hessian(f_scalar, X0, h=h2) - hess_true(X0)))
    order = math.log(e1 / e2) / math.log(h1 / h2)
    assert order >= 1.9, f"hessian empirical order {order:.3f} < 1.9"


def test_jacobian_of_linear_map_is_exact():
    A = np.array([[1.0, 2.0], [-0.5, 3.0]])
    J = fd_jacobian(lambda x: A @ x, X0)
    err = np.max(np.abs(J - A))
    # central differences are exact on affine maps up to rounding
    assert err < 1e-10, f"linear map Jacobian error {err:.2e}"
