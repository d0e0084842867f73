#  BSD 3-Clause License
#
#  Copyright (c) 2023., reset-delay-certifier contributors
#  All rights reserved.
#
"""Fixed-step RK4 for x' = f(t, x, x(t-h)) by the method of steps.

The past is kept as a list of continuous pieces; each reset closes a piece and
opens a new one, so the delayed term never interpolates across a jump. The open
piece is turned into a cubic Hermite spline once per delay window, when a
delayed argument first runs past the cached spline.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from reset_delay_certifier.__common__.env import SIM_OVERFLOW_GUARD
from reset_delay_certifier.__common__.exceptions import ModelConstructionError


@dataclass
class InitialCondition:
    """Piecewise-linear phi on [-h, 0]."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.values.shape[0] != self.times.shape[0]:
            raise ModelConstructionError(
                "Initial condition has {} times but {} value rows".format(
                    self.times.shape[0], self.values.shape[0]
                )
            )
        if self.times.shape[0] < 2 or np.any(np.diff(self.times) <= 0):
            raise ModelConstructionError(
                "Initial condition times must be strictly increasing with 2+ entries"
            )

    @classmethod
    def constant(cls, value, h):
        value = np.atleast_1d(np.asarray(value, dtype=float))
        return cls(np.array([-h, 0.0]), np.vstack([value, value]))

    @property
    def dim(self):
        return self.values.shape[1]

    def covers(self, h, tol=1e-12):
        return self.times[0] <= -h + tol and abs(self.times[-1]) <= tol

    def __call__(self, s):
        return np.array(
            [np.interp(s, self.times, self.values[:, j]) for j in range(self.dim)]
        )

    def derivative_segments(self):
        return np.diff(self.values, axis=0) / np.diff(self.times)[:, None]

    def to_dict(self):
        return {"times": self.times.tolist(), "values": self.values.tolist()}


class _Piece:
    def __init__(self, t, x, dx):
        self.t = [t]
        self.x = [x]
        self.dx = [dx]
        self.spline = None

    @property
    def start(self):
        return self.t[0]

    def append(self, t, x, dx):
        self.t.append(t)
        self.x.append(x)
        self.dx.append(dx)

    def __call__(self, s):
        if len(self.t) == 1:
            return self.x[0]
        if self.spline is None or s > self.spline.x[-1]:
            self.spline = CubicHermiteSpline(
                np.array(self.t), np.array(self.x), np.array(self.dx), axis=0
            )
        return self.spline(s)


class DenseHistory:
    """x(s) for s <= current time, phi before 0, Hermite pieces after."""

    def __init__(self, phi):
        self.phi = phi
        self.pieces = []
        self.starts = []

    def open_piece(self, t, x, dx):
        self.pieces.append(_Piece(t, x, dx))
        self.starts.append(t)

    def append(self, t, x, dx):
        self.pieces[-1].append(t, x, dx)

    def __call__(self, s):
        if s <= 0.0 or not self.pieces:
            return self.phi(min(s, 0.0))
        # at a reset instant the post-reset piece wins
        idx = int(np.searchsorted(self.starts, s, side="right")) - 1
        return self.pieces[max(idx, 0)](s)


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    reset_flags: np.ndarray
    resets: list = field(default_factory=list)
    diverged: bool = False
    info: dict = field(default_factory=dict)

    @property
    def norms(self):
        return np.linalg.norm(self.x, axis=1)

    @property
    def final_state(self):
        return self.x[-1]


def _rk4_step(rhs, history, h, t, x, step):
    k1 = rhs(t, x, history(t - h))
    k2 = rhs(t + step / 2.0, x + step / 2.0 * k1, history(t + step / 2.0 - h))
    k3 = rhs(t + step / 2.0, x + step / 2.0 * k2, history(t + step / 2.0 - h))
    k4 = rhs(t + step, x + step * k3, history(t + step - h))
    return x + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_dde(
    rhs,
    phi,
    h,
    horizon,
    step,
    reset_times=None,
    on_reset=None,
    event=None,
    min_dwell=0.0,
    overflow_guard=SIM_OVERFLOW_GUARD,
):
    """Integrate on [0, horizon] with jumps at reset_times or at event roots.

    rhs(t, x, x_delayed) -> x'. on_reset(t, x) -> post-reset state.
    event(s, history) is a scalar whose sign changes trigger a reset, located by
    Brent's method to step/100. A sign change closer than min_dwell to the
    previous reset is deferred to the end of the dwell window and fires there
    only if the sign is still changed.
    """
    if step <= 0 or step > h:
        raise ModelConstructionError(
            "step must lie in (0, h]. Got step={}, h={}".format(step, h)
        )
    if horizon <= 0:
        raise ModelConstructionError("horizon must be positive. Got {}".format(horizon))
    if not phi.covers(h):
        raise ModelConstructionError(
            "Initial condition must be defined on [-{}, 0]".format(h)
        )
    if on_reset is None:
        on_reset = lambda t, x: x  # noqa: E731

    history = DenseHistory(phi)
    x = phi(0.0)
    history.open_piece(0.0, x, rhs(0.0, x, history(-h)))
    times, states, flags, resets = [0.0], [x], [0], []
    pending = []
    if reset_times is not None:
        pending = sorted(float(tk) for tk in reset_times if 0.0 < tk <= horizon)
    last_reset = 0.0
    deferred = None
    deferred_sign = 0.0
    t = 0.0
    diverged = False
    time_tol = 1e-9 * step

    while t < horizon - time_tol:
        dt = min(step, horizon - t)
        target = None
        closes_window = False
        if pending and pending[0] - t <= dt + time_tol:
            target = pending.pop(0)
        elif event is not None:
            if deferred is None:
                g0 = event(t, history)
                g1 = event(t + dt, history)
                if g0 * g1 < 0:
                    root = brentq(
                        lambda s: event(s, history), t, t + dt, xtol=step / 100.0
                    )
                    if root - last_reset >= min_dwell:
                        target = root
                    else:
                        deferred, deferred_sign = last_reset + min_dwell, g0
            if deferred is not None and deferred - t <= dt + time_tol:
                target = deferred
                closes_window = True
        if target is not None:
            dt = target - t
        if dt > time_tol:
            x = _rk4_step(rhs, history, h, t, x, dt)
            t = target if target is not None else t + dt
            history.append(t, x, rhs(t, x, history(t - h)))
            times.append(t)
            states.append(x)
            flags.append(0)
        elif target is not None:
            # reset instant coincides with the last grid point
            t = target
            times[-1] = t
        fire = target is not None
        if closes_window:
            deferred = None
            # the dwell window is over; reset only if the sign change persists
            fire = event(t, history) * deferred_sign < 0
        if fire:
            x = np.asarray(on_reset(t, x), dtype=float)
            history.open_piece(t, x, rhs(t, x, history(t - h)))
            times.append(t)
            states.append(x)
            flags.append(1)
            resets.append(t)
            last_reset = t
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > overflow_guard:
            diverged = True
            logging.warning(
                "State norm exceeded {:.1e} at t={:.4f}; trajectory truncated".format(
                    overflow_guard, t
                )
            )
            break

    return Trajectory(
        t=np.array(times),
        x=np.vstack(states),
        reset_flags=np.array(flags, dtype=int),
        resets=resets,
        diverged=diverged,
    )
