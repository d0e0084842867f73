#  BSD 3-Clause License
#
#  Copyright (c) 2023., reset-delay-certifier contributors
#  All rights reserved.
#
"""Exponential-stability LMIs for the sampled-data form of a PI+RI reset loop.

For a partition T_m = T_0 < T_1 < ... < T_M = T_M of the reset-interval bounds the
problem holds one positivity block for the storage functional and, per interval,
two (N+3)n blocks at tau = 0 and two (N+4)n Schur blocks at the interval edges.
"""
import logging
from dataclasses import dataclass

import numpy as np

from reset_delay_certifier.__common__.env import LMI_EPSILON_SCALE
from reset_delay_certifier.__common__.exceptions import AssemblyError, QueryError
from reset_delay_certifier.__legendre__.legendre import (
    block_selector,
    build_projection_matrices,
    cond1_weight,
)
from reset_delay_certifier.__lmi__.problem import (
    SENSE_NEGATIVE,
    SENSE_POSITIVE,
    AffineMatrix,
    LmiProblem,
    Term,
    congruence,
    he,
)


@dataclass(frozen=True)
class AnalysisQuery:
    alpha: float
    T_m: float
    T_M: float
    N: int = 2
    M: int = 1
    include_decay_storage_term: bool = True
    allow_high_order: bool = False

    def validate(self):
        if not self.alpha > 0:
            raise QueryError("Decay rate alpha must be positive. Got {}".format(self.alpha))
        if self.T_M <= 0 or self.T_m < 0:
            raise QueryError(
                "Reset interval bounds must satisfy T_m >= 0, T_M > 0. Got [{}, {}]".format(
                    self.T_m, self.T_M
                )
            )
        if self.T_m > self.T_M:
            raise QueryError(
                "T_m={} is larger than T_M={}".format(self.T_m, self.T_M)
            )
        if self.N < 1:
            raise QueryError("Legendre order N must be >= 1. Got {}".format(self.N))
        if self.M < 1:
            raise QueryError("Partition count M must be >= 1. Got {}".format(self.M))
        return self

    @property
    def partition(self):
        return uniform_partition(self.T_m, self.T_M, self.M)

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "T_m": self.T_m,
            "T_M": self.T_M,
            "N": self.N,
            "M": self.M,
            "include_decay_storage_term": self.include_decay_storage_term,
        }


class DecisionVariables:
    """Names and dimensions of the decision variables; values are optional."""

    def __init__(self, n, N, M, values=None):
        self.n = n
        self.N = N
        self.M = M
        self.values = values

    P_N = "P_N"
    S = "S"
    R = "R"

    @staticmethod
    def Q(i):
        return "Q_{}".format(i)

    @staticmethod
    def X(i):
        return "X_{}".format(i)

    @staticmethod
    def U(i):
        return "U_{}".format(i)

    @staticmethod
    def Z(i):
        return "Z_{}".format(i)

    @staticmethod
    def Y(i):
        return "Y_{}".format(i)

    def specs(self):
        n, N = self.n, self.N
        specs = [
            (self.P_N, ((N + 1) * n, (N + 1) * n), True),
            (self.S, (n, n), True),
            (self.R, (n, n), True),
        ]
        for i in range(1, self.M + 1):
            specs += [
                (self.Q(i), (n, n), True),
                (self.X(i), (n, n), True),
                (self.U(i), (n, n), True),
                (self.Z(i), (n, n), False),
                (self.Y(i), ((N + 3) * n, n), False),
            ]
        return specs

    def positive_definite(self):
        names = [self.S, self.R]
        for i in range(1, self.M + 1):
            names += [self.Q(i), self.X(i), self.U(i)]
        return names

    def declare(self, problem):
        for name, shape, symmetric in self.specs():
            problem.add_variable(name, shape, symmetric)


def uniform_partition(T_m, T_M, M):
    return [T_m + i * (T_M - T_m) / M for i in range(M + 1)]


def h_functions(alpha, tau, T):
    """h1..h4 of the looped-functional bounds, written with expm1 for small alpha."""
    if not alpha > 0:
        raise QueryError("alpha must be positive. Got {}".format(alpha))
    two_a = 2.0 * alpha
    h1 = np.exp(two_a * tau)
    h2 = np.exp(two_a * tau) * np.expm1(two_a * (T - tau)) / two_a
    h3 = np.exp(two_a * T) * np.expm1(two_a * tau) / two_a
    h4 = ((np.e**2 - 4.0) * np.exp(alpha * T) + 1.0) * np.exp(
        two_a * tau
    ) + 2.0 * np.exp(two_a * T)
    return float(h1), float(h2), float(h3), float(h4)


def assemble_pi_blocks(proj, variables, alpha, h, i, include_decay_storage_term=True):
    """Pi_1i and Pi_2i as affine blocks of size (N+3)n."""
    m = proj.xi_size
    if proj.G.shape[1] != m or proj.F.shape != (proj.n, m):
        raise AssemblyError(
            "Projection matrices inconsistent with N={}, n={}".format(proj.N, proj.n)
        )
    if variables.n != proj.n or variables.N != proj.N:
        raise AssemblyError(
            "Decision variables sized for n={}, N={} but projections use n={}, N={}".format(
                variables.n, variables.N, proj.n, proj.N
            )
        )
    G, H, F = proj.G, proj.H, proj.F
    N1, N2, Nh, N12 = proj.N1, proj.N2, proj.Nh, proj.N12
    decay = np.exp(-2.0 * alpha * h)
    Q, Z, Y, U = variables.Q(i), variables.Z(i), variables.Y(i), variables.U(i)

    pi1 = he(variables.P_N, G.T, H)
    if include_decay_storage_term:
        pi1.append(Term(variables.P_N, 2.0 * alpha * G.T, G))
    pi1 += [
        congruence(variables.S, N1),
        congruence(variables.S, Nh, -decay),
        congruence(variables.R, F, h**2),
    ]
    for k, Gk in enumerate(proj.Gamma):
        pi1.append(congruence(variables.R, Gk, -proj.R_N_weights[k]))
    pi1.append(congruence(Q, N12, -1.0))
    # looped term on x(t) - x(t_k)
    pi1 += he(Z, -N12.T, N2)
    pi1 += he(Y, np.eye(m), N12)

    pi2 = [congruence(U, F)]
    pi2 += he(Q, F.T, N12)
    pi2 += he(Z, F.T, N2)
    return AffineMatrix(m, pi1), AffineMatrix(m, pi2)


def _x_term(proj, variables, i, coeff):
    return AffineMatrix(proj.xi_size, [congruence(variables.X(i), proj.N2, coeff)])


def _schur_block(proj, variables, i, top, h3):
    """[top, h3 Y_i; *, -h3 U_i] of size (N+4)n."""
    m = proj.xi_size
    n = proj.n
    size = m + n
    E_top = np.vstack([np.eye(m), np.zeros((n, m))])
    E_bot = np.vstack([np.zeros((m, n)), np.eye(n)])
    block = top.embedded(E_top)
    block.terms += [
        Term(variables.Y(i), h3 * E_top, E_bot.T),
        Term(variables.Y(i), h3 * E_bot, E_top.T, transpose=True),
        Term(variables.U(i), -h3 * E_bot, E_bot.T),
    ]
    if block.size != size:
        raise AssemblyError("Schur block has size {}, expected {}".format(block.size, size))
    return block


def cond1_block(proj, variables):
    size = (proj.N + 1) * proj.n
    weights = cond1_weight(proj.n, proj.N, proj.alpha, proj.h)
    terms = [Term(variables.P_N, np.eye(size), np.eye(size))]
    for j, w in enumerate(weights):
        if w == 0.0:
            continue
        sel = block_selector(j, proj.N + 1, proj.n)
        terms.append(congruence(variables.S, sel, w))
    return AffineMatrix(size, terms)


def interval_blocks(proj, variables, alpha, h, i, T_prev, T_cur, include_decay_storage_term=True):
    """The four per-interval conditions as (name, condition, AffineMatrix)."""
    pi1, pi2 = assemble_pi_blocks(
        proj, variables, alpha, h, i, include_decay_storage_term
    )
    h1_0, h2_prev, _, _ = h_functions(alpha, 0.0, T_prev)
    _, h2_cur, _, h4_0 = h_functions(alpha, 0.0, T_cur)
    h1_prev, _, h3_prev, h4_prev = h_functions(alpha, T_prev, T_cur)
    h1_cur, _, h3_cur, h4_cur = h_functions(alpha, T_cur, T_cur)

    cond2 = pi1.scaled(h1_0) + pi2.scaled(h2_prev) + _x_term(proj, variables, i, h4_0)
    cond3 = pi1.scaled(h1_0) + pi2.scaled(h2_cur) + _x_term(proj, variables, i, h4_0)

    blocks = [
        ("cond2[{}]".format(i), "cond2", cond2),
        ("cond3[{}]".format(i), "cond3", cond3),
    ]
    for label, h1v, h3v, h4v in (
        ("cond4", h1_prev, h3_prev, h4_prev),
        ("cond5", h1_cur, h3_cur, h4_cur),
    ):
        top = pi1.scaled(h1v) + _x_term(proj, variables, i, h4v)
        if h3v == 0.0:
            # the Y/U row vanishes at tau = 0; keep the reduced (N+3)n condition
            logging.debug(
                "h3 vanishes for {}[{}]; emitting reduced block".format(label, i)
            )
            blocks.append(("{}[{}]".format(label, i), label, top))
        else:
            blocks.append(
                (
                    "{}[{}]".format(label, i),
                    label,
                    _schur_block(proj, variables, i, top, h3v),
                )
            )
    return blocks


def problem_epsilon(problem, scale=LMI_EPSILON_SCALE):
    return scale * (1.0 + problem.max_coefficient())


def assemble_conditions(model, query, epsilon_scale=LMI_EPSILON_SCALE):
    query.validate()
    proj = build_projection_matrices(
        model, query.N, query.alpha, allow_high_order=query.allow_high_order
    )
    variables = DecisionVariables(model.n, query.N, query.M)
    problem = LmiProblem(
        metadata={
            "n": model.n,
            "h": model.h,
            "query": query.to_dict(),
            "partition": query.partition,
        }
    )
    variables.declare(problem)
    problem.add_block("cond1", SENSE_POSITIVE, cond1_block(proj, variables), "cond1")
    for name in variables.positive_definite():
        problem.add_block(
            "{}>0".format(name),
            SENSE_POSITIVE,
            AffineMatrix(model.n, [Term(name, np.eye(model.n), np.eye(model.n))]),
            "positivity",
        )
    breakpoints = query.partition
    for i in range(1, query.M + 1):
        for name, condition, matrix in interval_blocks(
            proj,
            variables,
            query.alpha,
            model.h,
            i,
            breakpoints[i - 1],
            breakpoints[i],
            query.include_decay_storage_term,
        ):
            problem.add_block(name, SENSE_NEGATIVE, matrix, condition, i)
    problem.epsilon = problem_epsilon(problem, epsilon_scale)
    logging.debug(
        "Assembled {} LMI blocks (n={}, N={}, M={}), epsilon={:.3e}".format(
            len(problem.blocks), model.n, query.N, query.M, problem.epsilon
        )
    )
    return problem
