#  BSD 3-Clause License
#
#  Copyright (c) 2023., reset-delay-certifier contributors
#  All rights reserved.
#
"""Legendre polynomials on [-h, 0] and the constant projection matrices of the
Bessel-Legendre stability conditions.

The augmented vector the matrices act on has N+3 blocks of size n::

    xi = [x(t), x(t-h), (1/h) int L_0 x, ..., (1/h) int L_{N-1} x, x(t_k)]
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.special import comb

from reset_delay_certifier.__common__.env import (
    LEGENDRE_EXPLICIT_MAX_DEGREE,
    LEGENDRE_MAX_ORDER,
)
from reset_delay_certifier.__common__.exceptions import (
    AssemblyError,
    LegendreDomainError,
    QueryError,
)

DOMAIN_TOL = 1e-12


@dataclass(frozen=True)
class LegendreBasis:
    h: float
    max_degree: int

    def __post_init__(self):
        if self.h <= 0:
            raise LegendreDomainError("h must be positive. Got {}".format(self.h))
        if self.max_degree < 0:
            raise LegendreDomainError(
                "max_degree must be nonnegative. Got {}".format(self.max_degree)
            )


@dataclass
class ProjectionMatrices:
    n: int
    N: int
    alpha: float
    h: float
    G: np.ndarray
    F: np.ndarray
    H: np.ndarray
    Gamma: list
    Gamma_N: np.ndarray
    N1: np.ndarray
    N2: np.ndarray
    Nh: np.ndarray
    N12: np.ndarray
    R_N_weights: np.ndarray
    sigma_terms: list = field(default_factory=list)

    @property
    def xi_size(self):
        return (self.N + 3) * self.n

    def R_N(self, R):
        """e^{-2 alpha h} diag(R, 3R, ..., (2N+1)R)."""
        return np.kron(np.diag(self.R_N_weights), R)

    def Sigma_N(self, S):
        """diag(S, -e^{-2 alpha h} S, 0)."""
        return sum(w * sel.T @ S @ sel for w, sel in self.sigma_terms)


def _check_domain(basis, k, u):
    if k < 0 or k > basis.max_degree:
        raise LegendreDomainError(
            "Degree {} outside [0, {}]".format(k, basis.max_degree)
        )
    u_arr = np.asarray(u, dtype=float)
    tol = DOMAIN_TOL * max(1.0, basis.h)
    if np.any(u_arr < -basis.h - tol) or np.any(u_arr > tol):
        raise LegendreDomainError(
            "Evaluation point(s) outside [-{}, 0]: {}".format(basis.h, u)
        )
    return u_arr


def legendre_eval(basis, k, u):
    """L_k(u) = (-1)^k sum_l (-1)^l C(k,l) C(k+l,l) ((u+h)/h)^l."""
    u_arr = _check_domain(basis, k, u)
    if k > LEGENDRE_EXPLICIT_MAX_DEGREE:
        return legendre_eval_recurrence(basis, k, u_arr)
    s = (u_arr + basis.h) / basis.h
    value = np.zeros_like(s)
    for ell in range(k + 1):
        coeff = (-1) ** ell * comb(k, ell, exact=True) * comb(k + ell, ell, exact=True)
        value = value + coeff * s**ell
    value = (-1) ** k * value
    if np.ndim(value) == 0:
        return float(value)
    return value


def legendre_eval_recurrence(basis, k, u):
    """Shifted three-term recurrence, L_k(u) = P_k(2u/h + 1)."""
    u_arr = _check_domain(basis, k, u)
    x = 2.0 * u_arr / basis.h + 1.0
    p_prev = np.ones_like(x)
    if k == 0:
        p_cur = p_prev
    else:
        p_cur = x
        for j in range(1, k):
            p_prev, p_cur = p_cur, ((2 * j + 1) * x * p_cur - j * p_prev) / (j + 1)
    if np.ndim(p_cur) == 0:
        return float(p_cur)
    return p_cur


def gamma_coeff(k, i):
    if i > k:
        return 0.0
    return float(-(2 * i + 1) * (1 - (-1) ** (k + i)))


def gamma_row(k, N, n):
    """Gamma(k) = [I, (-1)^{k+1} I, gamma_k^0 I, ..., gamma_k^{N-1} I, 0_n]."""
    coeffs = [1.0, float((-1) ** (k + 1))]
    coeffs += [gamma_coeff(k, i) for i in range(N)]
    coeffs += [0.0]
    return np.kron(np.array([coeffs]), np.eye(n))


def block_selector(position, blocks, n):
    sel = np.zeros((n, blocks * n))
    sel[:, position * n : (position + 1) * n] = np.eye(n)
    return sel


def cond1_weight(n, N, alpha, h):
    """(e^{-2 alpha h}/h) diag(0, 1, 3, ..., 2N-1), as the pattern multiplying S."""
    weights = [0.0] + [float(2 * j - 1) for j in range(1, N + 1)]
    return np.exp(-2.0 * alpha * h) / h * np.array(weights)


def build_projection_matrices(model, N, alpha, allow_high_order=False):
    if N < 1:
        raise QueryError("Legendre order N must be >= 1. Got {}".format(N))
    if N > LEGENDRE_MAX_ORDER and not allow_high_order:
        raise QueryError(
            "Legendre order N={} exceeds the cap {}".format(N, LEGENDRE_MAX_ORDER)
        )
    n = model.n
    h = model.h
    Lambda = np.asarray(model.Lambda, dtype=float)
    Lambda_d = np.asarray(model.Lambda_d, dtype=float)
    K = np.asarray(model.K, dtype=float)
    if Lambda.shape != (n, n) or Lambda_d.shape != (n, n) or K.shape != (n, n):
        raise AssemblyError(
            "Sampled-data matrices inconsistent with n={}: {}, {}, {}".format(
                n, Lambda.shape, Lambda_d.shape, K.shape
            )
        )
    blocks = N + 3
    width = blocks * n

    F = np.hstack([Lambda, Lambda_d, np.zeros((n, n * N)), Lambda @ K])

    G = np.zeros(((N + 1) * n, width))
    G[:n, :n] = np.eye(n)
    G[n:, 2 * n : (N + 2) * n] = h * np.eye(n * N)

    Gamma = [gamma_row(k, N, n) for k in range(N + 1)]
    H = np.vstack([F] + Gamma[:N])
    Gamma_N = np.vstack(Gamma)

    N1 = block_selector(0, blocks, n)
    Nh = block_selector(1, blocks, n)
    N2 = block_selector(blocks - 1, blocks, n)
    decay = np.exp(-2.0 * alpha * h)
    R_N_weights = decay * np.array([2.0 * j + 1.0 for j in range(N + 1)])

    proj = ProjectionMatrices(
        n=n,
        N=N,
        alpha=float(alpha),
        h=h,
        G=G,
        F=F,
        H=H,
        Gamma=Gamma,
        Gamma_N=Gamma_N,
        N1=N1,
        N2=N2,
        Nh=Nh,
        N12=N1 - N2,
        R_N_weights=R_N_weights,
        sigma_terms=[(1.0, N1), (-decay, Nh)],
    )
    if proj.G.shape != ((N + 1) * n, width) or proj.H.shape != G.shape:
        raise AssemblyError("Projection matrices have inconsistent shapes")
    return proj


def project_history(basis, times, values, k, nodes=64):
    """int_{-h}^{0} L_k(s) x(s) ds of a sampled history, by Gauss-Legendre quadrature."""
    times = np.asarray(times, dtype=float)
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if values.shape[0] != times.shape[0]:
        values = values.T
    x_gl, w_gl = np.polynomial.legendre.leggauss(nodes)
    s = 0.5 * basis.h * (x_gl - 1.0)
    weights = 0.5 * basis.h * w_gl
    L = legendre_eval(basis, k, s)
    samples = np.column_stack(
        [np.interp(s, times, values[:, j]) for j in range(values.shape[1])]
    )
    return (weights * L) @ samples
