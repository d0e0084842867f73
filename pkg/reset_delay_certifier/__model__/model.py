#  BSD 3-Clause License
#
#  Copyright (c) 2023., reset-delay-certifier contributors
#  All rights reserved.
#
import logging
from dataclasses import dataclass

import control
import numpy as np
from scipy import signal

from reset_delay_certifier.__common__.exceptions import ModelConstructionError


@dataclass(frozen=True)
class Plant:
    """Delayed SISO LTI process x_p' = A_p x_p + B_p u_p, y_p = C_p x_p (no feedthrough)."""

    A_p: np.ndarray
    B_p: np.ndarray
    C_p: np.ndarray

    @property
    def n_p(self):
        return self.A_p.shape[0]


@dataclass(frozen=True)
class PiRiController:
    k_p: float
    k_i: float
    p_r: float


@dataclass(frozen=True)
class ClosedLoopModel:
    A: np.ndarray
    A_d: np.ndarray
    A_R: np.ndarray
    h: float
    n: int
    n_p: int
    C_p: np.ndarray = None


@dataclass(frozen=True)
class SampledDataModel:
    Lambda: np.ndarray
    Lambda_d: np.ndarray
    K: np.ndarray
    h: float
    n: int
    n_p: int


@dataclass(frozen=True)
class ResetSequenceBounds:
    T_m: float
    T_M: float

    def __post_init__(self):
        if self.T_M <= 0 or self.T_m < 0 or self.T_m > self.T_M:
            raise ModelConstructionError(
                "Reset interval bounds must satisfy 0 <= T_m <= T_M, T_M > 0. Got [{}, {}]".format(
                    self.T_m, self.T_M
                )
            )


def make_plant(A_p, B_p, C_p):
    A_p = np.atleast_2d(np.asarray(A_p, dtype=float))
    B_p = np.asarray(B_p, dtype=float)
    C_p = np.asarray(C_p, dtype=float)
    n_p = A_p.shape[0]
    if A_p.shape != (n_p, n_p) or n_p == 0:
        raise ModelConstructionError(
            "A_p must be a non-empty square matrix. Got shape {}".format(A_p.shape)
        )
    if B_p.ndim < 2:
        B_p = B_p.reshape(-1, 1)
    if C_p.ndim < 2:
        C_p = C_p.reshape(1, -1)
    if B_p.shape[1] != 1 or C_p.shape[0] != 1:
        raise ModelConstructionError(
            "Only SISO plants are supported. Got B_p {} and C_p {}".format(
                B_p.shape, C_p.shape
            )
        )
    if B_p.shape[0] != n_p or C_p.shape[1] != n_p:
        raise ModelConstructionError(
            "Plant dimension mismatch: A_p {}, B_p {}, C_p {}".format(
                A_p.shape, B_p.shape, C_p.shape
            )
        )
    return Plant(A_p=A_p, B_p=B_p, C_p=C_p)


def make_controller(k_p, k_i, p_r):
    if not 0.0 <= p_r <= 1.0:
        raise ModelConstructionError(
            "Reset ratio p_r must lie in [0,1]. Got {}".format(p_r)
        )
    return PiRiController(k_p=float(k_p), k_i=float(k_i), p_r=float(p_r))


def _cancel_common_roots(num, den, tol=1e-8):
    poles = list(np.roots(den))
    kept_zeros = []
    for z in np.roots(num):
        match = next(
            (j for j, p in enumerate(poles) if abs(z - p) <= tol * max(1.0, abs(p))),
            None,
        )
        if match is None:
            kept_zeros.append(z)
        else:
            poles.pop(match)
    num = num[0] * np.real(np.atleast_1d(np.poly(kept_zeros)))
    den = den[0] * np.real(np.atleast_1d(np.poly(poles)))
    return num, den


def plant_from_transfer_function(num, den):
    """Minimal state-space realization of a strictly proper SISO transfer function.

    Common pole/zero pairs are cancelled first, so the controllable canonical
    form of the remainder is minimal.
    """
    num = np.trim_zeros(np.atleast_1d(np.asarray(num, dtype=float)), "f")
    den = np.trim_zeros(np.atleast_1d(np.asarray(den, dtype=float)), "f")
    if num.size == 0 or den.size == 0:
        raise ModelConstructionError(
            "Transfer function {}/{} has a zero polynomial".format(num, den)
        )
    num, den = _cancel_common_roots(num, den)
    try:
        A_p, B_p, C_p, D_p = signal.tf2ss(num, den)
    except ValueError as e:
        raise ModelConstructionError(
            "Cannot realize transfer function {}/{}: {}".format(num, den, e)
        )
    if np.any(np.abs(np.asarray(D_p, dtype=float)) > 0):
        raise ModelConstructionError(
            "Transfer function {}/{} has direct feedthrough".format(num, den)
        )
    return make_plant(A_p, B_p, C_p)


def check_minimality(plant):
    n_p = plant.n_p
    controllable = np.linalg.matrix_rank(control.ctrb(plant.A_p, plant.B_p)) == n_p
    observable = np.linalg.matrix_rank(control.obsv(plant.A_p, plant.C_p)) == n_p
    return controllable, observable


def _check_inputs(plant, ctrl, h):
    if h <= 0:
        raise ModelConstructionError("Delay h must be positive. Got {}".format(h))
    # re-run the constructors so hand-built dataclasses are validated too
    make_plant(plant.A_p, plant.B_p, plant.C_p)
    make_controller(ctrl.k_p, ctrl.k_i, ctrl.p_r)
    controllable, observable = check_minimality(plant)
    if not (controllable and observable):
        logging.warning(
            "Plant realization is not minimal (controllable={}, observable={})".format(
                controllable, observable
            )
        )


def build_closed_loop(plant, ctrl, h):
    _check_inputs(plant, ctrl, h)
    n_p = plant.n_p
    n = n_p + 2
    B_r = ctrl.k_i * np.ones((2, 1))
    C_r = np.array([[1.0 - ctrl.p_r, ctrl.p_r]])
    A_rho = np.diag([1.0, 0.0])

    A = np.zeros((n, n))
    A[:n_p, :n_p] = plant.A_p
    A[:n_p, n_p:] = plant.B_p @ C_r

    A_d = np.zeros((n, n))
    A_d[:n_p, :n_p] = -ctrl.k_p * plant.B_p @ plant.C_p
    A_d[n_p:, :n_p] = -B_r @ plant.C_p

    A_R = np.zeros((n, n))
    A_R[:n_p, :n_p] = np.eye(n_p)
    A_R[n_p:, n_p:] = A_rho
    return ClosedLoopModel(
        A=A, A_d=A_d, A_R=A_R, h=float(h), n=n, n_p=n_p, C_p=plant.C_p.copy()
    )


def build_sampled_data(plant, ctrl, h):
    _check_inputs(plant, ctrl, h)
    n_p = plant.n_p
    n = n_p + 1

    Lambda = np.zeros((n, n))
    Lambda[:n_p, :n_p] = plant.A_p
    Lambda[:n_p, n_p:] = plant.B_p

    Lambda_d = np.zeros((n, n))
    Lambda_d[:n_p, :n_p] = -ctrl.k_p * plant.B_p @ plant.C_p
    Lambda_d[n_p:, :n_p] = -ctrl.k_i * plant.C_p

    K = np.zeros((n, n))
    K[n - 1, n - 1] = -ctrl.p_r
    return SampledDataModel(
        Lambda=Lambda, Lambda_d=Lambda_d, K=K, h=float(h), n=n, n_p=n_p
    )


def base_system_matrices(model):
    """Closed loop with reset actions disabled: x' = A x + A_d x(t-h)."""
    return model.A.copy(), model.A_d.copy()


def delay_free_spectrum(model):
    if isinstance(model, SampledDataModel):
        return np.linalg.eigvals(model.Lambda + model.Lambda_d)
    return np.linalg.eigvals(model.A + model.A_d)


def model_to_dict(model):
    if isinstance(model, SampledDataModel):
        return {
            "Lambda": model.Lambda.tolist(),
            "Lambda_d": model.Lambda_d.tolist(),
            "K": model.K.tolist(),
            "h": model.h,
            "n": model.n,
        }
    return {
        "A": model.A.tolist(),
        "A_d": model.A_d.tolist(),
        "A_R": model.A_R.tolist(),
        "h": model.h,
        "n": model.n,
    }
