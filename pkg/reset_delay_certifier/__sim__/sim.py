#  BSD 3-Clause License
#
#  Copyright (c) 2023., reset-delay-certifier contributors
#  All rights reserved.
#
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from reset_delay_certifier.__common__.env import (
    SIM_MIN_DWELL_FRACTION,
    SIM_STEP_FRACTION,
    SIM_TAIL_FRACTION,
)
from reset_delay_certifier.__common__.exceptions import (
    DecayEstimationError,
    ModelConstructionError,
)
from reset_delay_certifier.__common__.output import write_results_csv
from reset_delay_certifier.__legendre__.legendre import LegendreBasis, project_history
from reset_delay_certifier.__model__.model import base_system_matrices
from reset_delay_certifier.__sim__.integrator import InitialCondition, integrate_dde
from reset_delay_certifier.__sim__.laws import (
    LAW_NONE,
    LAW_ZERO_CROSSING,
    bounded_random,
    generate_reset_sequence,
)


def default_step(h):
    return SIM_STEP_FRACTION * h


def _check_step(h, step):
    if step is None:
        step = default_step(h)
    if step > h / 10.0 + 1e-15:
        raise ModelConstructionError(
            "step must not exceed h/10. Got step={}, h={}".format(step, h)
        )
    return step


def simulate_reset_system(model, law, phi, horizon, step=None):
    """Closed loop x' = A x + A_d x(t-h) with x(t+) = A_R x(t) at reset instants."""
    step = _check_step(model.h, step)
    if phi.dim != model.n:
        raise ModelConstructionError(
            "Initial condition has dimension {}, model has n={}".format(
                phi.dim, model.n
            )
        )
    A, A_d = base_system_matrices(model)

    def rhs(t, x, xd):
        return A @ x + A_d @ xd

    def on_reset(t, x):
        return model.A_R @ x

    reset_times = None
    event = None
    min_dwell = 0.0
    if law.is_scheduled:
        reset_times = generate_reset_sequence(law, horizon)[1:]
    elif law.kind == LAW_ZERO_CROSSING:
        if model.C_p is None:
            raise ModelConstructionError(
                "Zero-crossing law needs the plant output matrix on the model"
            )
        C_p = np.asarray(model.C_p, dtype=float).ravel()
        n_p = model.n_p
        h = model.h
        min_dwell = law.min_dwell

        def event(s, history):
            # reset-integrator input u_r(s) = -y_p(s - h)
            return -float(C_p @ history(s - h)[:n_p])

    traj = integrate_dde(
        rhs,
        phi,
        model.h,
        horizon,
        step,
        reset_times=reset_times,
        on_reset=None if law.kind == LAW_NONE else on_reset,
        event=event,
        min_dwell=min_dwell,
    )
    traj.info.update({"law": law.to_dict(), "step": step, "phi": phi.to_dict()})
    logging.info(
        "Simulated reset system up to t={:.3f} with {} resets ({})".format(
            traj.t[-1], len(traj.resets), "diverged" if traj.diverged else "bounded"
        )
    )
    return traj


def default_min_dwell(h):
    return SIM_MIN_DWELL_FRACTION * h


def simulate_sampled_system(model, resets, phi_X, u0, horizon, step=None):
    """X' = Lambda X + Lambda_d X(t-h) + Lambda K X(t_k), held between resets.

    u0 is x_i(0) - x_ri(0); before the first reset the held sample is u0 e_n.
    """
    step = _check_step(model.h, step)
    if phi_X.dim != model.n:
        raise ModelConstructionError(
            "Initial condition has dimension {}, model has n={}".format(
                phi_X.dim, model.n
            )
        )
    LK = model.Lambda @ model.K
    held = np.zeros(model.n)
    held[-1] = u0
    samples = [(0.0, held.copy())]

    def rhs(t, x, xd):
        return model.Lambda @ x + model.Lambda_d @ xd + LK @ held

    def on_reset(t, x):
        held[:] = x
        samples.append((t, x.copy()))
        return x

    resets = np.asarray(resets, dtype=float)
    traj = integrate_dde(
        rhs,
        phi_X,
        model.h,
        horizon,
        step,
        reset_times=resets[resets > 0.0],
        on_reset=on_reset,
    )
    traj.info.update({"samples": samples, "u0": float(u0), "step": step})
    return traj


def matched_sampled_initial_condition(phi, n_p):
    """Sampled-data initial data equivalent to a closed-loop phi.

    X keeps (x_p, x_i); the held sample starts at x_i(0) - x_ri(0).
    """
    x0 = phi(0.0)
    phi_X = InitialCondition(phi.times, phi.values[:, : n_p + 1])
    return phi_X, float(x0[n_p] - x0[n_p + 1])


def reconstruct_reset_states(traj, model):
    """Rebuild (x_p, x_i, x_ri) from a sampled-data trajectory.

    x_i = x_s and x_ri = x_s - s, where s is the last held sample of x_s.
    """
    samples = traj.info["samples"]
    held = np.array([sample[-1] for _, sample in samples])
    index = np.cumsum(traj.reset_flags)
    x_s = traj.x[:, model.n - 1]
    x_ri = x_s - held[index]
    return np.column_stack([traj.x, x_ri])


def equivalence_oracle_CI(v, resets, horizon, x0=0.0, step=None):
    """max |y_ri - y_s| between a Clegg integrator and its sampled-data form.

    v is a scipy PPoly input, continuous across its breakpoints. The reset
    integrator y_ri is integrated numerically and zeroed at every reset; the
    sampled form y_s is the exact free integral minus the sample held at the
    last reset. The grid stops at every breakpoint of v, where RK4 is exact for
    pieces up to cubic.
    """
    if step is None:
        step = horizon / 2000.0
    resets = np.unique(np.asarray(resets, dtype=float))
    resets = resets[(resets > 0.0) & (resets <= horizon)]
    breaks = np.asarray(v.x, dtype=float)
    breaks = breaks[(breaks > 0.0) & (breaks < horizon)]
    reset_set = set(resets.tolist())

    def rhs(t, x, xd):
        return np.array([float(v(t))])

    def on_reset(t, x):
        return np.zeros(1) if t in reset_set else x

    traj = integrate_dde(
        rhs,
        InitialCondition.constant([x0], horizon),
        horizon,
        horizon,
        step,
        reset_times=np.union1d(resets, breaks),
        on_reset=on_reset,
    )
    V = v.antiderivative()
    free = x0 + V(traj.t) - V(0.0)
    applied = np.cumsum(traj.reset_flags.astype(bool) & np.isin(traj.t, resets))
    held_samples = np.concatenate([[0.0], x0 + V(resets) - V(0.0)])
    y_s = free - held_samples[applied]
    return float(np.max(np.abs(traj.x[:, 0] - y_s)))


def estimate_decay_rate(traj, tail_fraction=SIM_TAIL_FRACTION):
    """Least-squares decay rate of log||x|| over the tail, fitted at local maxima."""
    if traj.diverged:
        raise DecayEstimationError("Cannot estimate decay of a divergent trajectory")
    t = traj.t
    norms = traj.norms
    t_start = t[-1] - tail_fraction * (t[-1] - t[0])
    mask = (t >= t_start) & (norms > 0.0)
    t_tail = t[mask]
    log_tail = np.log(norms[mask])
    if t_tail.size < 3:
        raise DecayEstimationError(
            "Only {} usable samples in the tail window".format(t_tail.size)
        )
    peaks, _ = find_peaks(log_tail)
    if peaks.size >= 3:
        t_fit, y_fit = t_tail[peaks], log_tail[peaks]
    elif np.all(np.diff(log_tail) <= 0.0):
        t_fit, y_fit = t_tail, log_tail
    else:
        raise DecayEstimationError(
            "Found {} peaks in the tail window; need at least 3".format(peaks.size)
        )
    slope, _ = np.polyfit(t_fit, y_fit, 1)
    return float(-slope)


def w_norm(phi):
    """max ||phi|| + (int ||phi'||^2)^(1/2) for a piecewise-linear phi."""
    max_part = float(np.max(np.linalg.norm(phi.values, axis=1)))
    slopes = phi.derivative_segments()
    widths = np.diff(phi.times)
    energy = float(np.sum(np.sum(slopes**2, axis=1) * widths))
    return max_part + np.sqrt(energy)


def augmented_state(traj, t, h, N):
    """(x(t), (1/h) int L_k(s) x(t+s) ds for k < N) from a stored trajectory."""
    basis = LegendreBasis(h, N)
    mask = (traj.t >= t - h - 1e-12) & (traj.t <= t + 1e-12)
    times = traj.t[mask] - t
    values = traj.x[mask]
    idx = int(np.searchsorted(traj.t, t, side="right")) - 1
    parts = [traj.x[idx]]
    for k in range(N):
        parts.append(project_history(basis, times, values, k) / h)
    return np.concatenate(parts)


def trajectory_to_csv(traj, path, config=None):
    n = traj.x.shape[1]
    headers = ["t"] + ["x{}".format(j + 1) for j in range(n)] + ["reset"]
    rows = [
        [float(t)] + [float(v) for v in x] + [int(flag)]
        for t, x, flag in zip(traj.t, traj.x, traj.reset_flags)
    ]
    return write_results_csv(path, "trajectory", headers, rows, config)


@dataclass
class SoundnessReport:
    alpha: float
    runs: list = field(default_factory=list)

    @property
    def passed(self):
        return all(run["ok"] for run in self.runs)


def certificate_soundness_check(
    model,
    T_m,
    T_M,
    alpha,
    runs=20,
    seed=0,
    phi=None,
    horizon=None,
    step=None,
    tail_fraction=SIM_TAIL_FRACTION,
    ratio=0.8,
):
    """Random bounded reset sequences should converge at least at ratio*alpha."""
    if phi is None:
        phi = InitialCondition.constant(np.eye(model.n)[0], model.h)
    if horizon is None:
        horizon = 40.0 * max(T_M, model.h)
    lower = T_m if T_m > 0 else 0.01 * T_M
    report = SoundnessReport(alpha=alpha)
    for r in range(runs):
        law = bounded_random(lower, T_M, seed=seed + r)
        traj = simulate_reset_system(model, law, phi, horizon, step)
        decay = None
        message = ""
        if not traj.diverged:
            try:
                decay = estimate_decay_rate(traj, tail_fraction)
            except DecayEstimationError as e:
                message = str(e)
        ok = decay is not None and decay >= ratio * alpha
        report.runs.append(
            {
                "seed": seed + r,
                "diverged": traj.diverged,
                "decay": decay,
                "ok": ok,
                "message": message,
            }
        )
        if not ok:
            logging.warning(
                "Soundness run seed={} failed: diverged={} decay={}".format(
                    seed + r, traj.diverged, decay
                )
            )
    return report
