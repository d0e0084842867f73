#  BSD 3-Clause License
#
#  Copyright (c) 2023., reset-delay-certifier contributors
#  All rights reserved.
#
import logging
from dataclasses import dataclass

import numpy as np

from reset_delay_certifier.__common__.exceptions import ModelConstructionError

LAW_NONE = "none"
LAW_PERIODIC = "periodic"
LAW_BOUNDED_RANDOM = "bounded_random"
LAW_ZERO_CROSSING = "zero_crossing"
LAW_KINDS = [LAW_NONE, LAW_PERIODIC, LAW_BOUNDED_RANDOM, LAW_ZERO_CROSSING]


@dataclass(frozen=True)
class ResettingLaw:
    """When the controller resets.

    periodic uses T, bounded_random draws gaps uniformly in [T_m, T_M] from seed,
    zero_crossing fires on sign changes of the reset-integrator input that are at
    least min_dwell after the previous reset. none disables resets (base system).
    """

    kind: str
    T: float = None
    T_m: float = None
    T_M: float = None
    seed: int = None
    min_dwell: float = None

    def __post_init__(self):
        if self.kind not in LAW_KINDS:
            raise ModelConstructionError(
                "Unknown resetting law '{}'. One of {}".format(self.kind, LAW_KINDS)
            )
        if self.kind == LAW_PERIODIC and not (self.T is not None and self.T > 0):
            raise ModelConstructionError(
                "Periodic law requires T > 0. Got {}".format(self.T)
            )
        if self.kind == LAW_BOUNDED_RANDOM:
            if self.T_m is None or self.T_M is None:
                raise ModelConstructionError("bounded_random law requires T_m and T_M")
            if not 0 < self.T_m <= self.T_M:
                raise ModelConstructionError(
                    "bounded_random law requires 0 < T_m <= T_M. Got [{}, {}]".format(
                        self.T_m, self.T_M
                    )
                )
        if self.kind == LAW_ZERO_CROSSING and not (
            self.min_dwell is not None and self.min_dwell > 0
        ):
            raise ModelConstructionError(
                "zero_crossing law requires min_dwell > 0. Got {}".format(
                    self.min_dwell
                )
            )

    @property
    def is_scheduled(self):
        return self.kind in (LAW_PERIODIC, LAW_BOUNDED_RANDOM)

    @property
    def bounds(self):
        if self.kind == LAW_PERIODIC:
            return self.T, self.T
        if self.kind == LAW_BOUNDED_RANDOM:
            return self.T_m, self.T_M
        return None

    def to_dict(self):
        return {
            "kind": self.kind,
            "T": self.T,
            "T_m": self.T_m,
            "T_M": self.T_M,
            "seed": self.seed,
            "min_dwell": self.min_dwell,
        }


def periodic(T):
    return ResettingLaw(LAW_PERIODIC, T=T)


def bounded_random(T_m, T_M, seed=None):
    return ResettingLaw(LAW_BOUNDED_RANDOM, T_m=T_m, T_M=T_M, seed=seed)


def zero_crossing(min_dwell):
    return ResettingLaw(LAW_ZERO_CROSSING, min_dwell=min_dwell)


def no_reset():
    return ResettingLaw(LAW_NONE)


def generate_reset_sequence(law, horizon):
    """Reset instants t_0 = 0 < t_1 < ... covering [0, horizon].

    The last instant is the first one at or beyond horizon so every gap,
    including the final one, respects the law's bounds.
    """
    if not law.is_scheduled:
        raise ModelConstructionError(
            "Law '{}' has no precomputed reset sequence".format(law.kind)
        )
    if horizon <= 0:
        raise ModelConstructionError("horizon must be positive. Got {}".format(horizon))
    T_m, T_M = law.bounds
    if law.kind == LAW_PERIODIC:
        count = int(np.ceil(horizon / law.T - 1e-12))
        return law.T * np.arange(count + 1)
    rng = np.random.default_rng(law.seed)
    times = [0.0]
    while times[-1] < horizon:
        times.append(times[-1] + rng.uniform(T_m, T_M))
    logging.debug(
        "Generated {} reset instants on [0, {}] with gaps in [{}, {}]".format(
            len(times), horizon, T_m, T_M
        )
    )
    return np.array(times)


def check_reset_sequence(times, T_m, T_M, tol=1e-12):
    times = np.asarray(times, dtype=float)
    if times.size == 0 or times[0] != 0.0:
        return False
    gaps = np.diff(times)
    return bool(np.all(gaps >= T_m - tol) and np.all(gaps <= T_M + tol))
