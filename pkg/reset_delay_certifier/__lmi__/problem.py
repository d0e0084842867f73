#  BSD 3-Clause License
#
#  Copyright (c) 2023., reset-delay-certifier contributors
#  All rights reserved.
#
"""Affine matrix-inequality containers, backend neutral.

Every block is C + sum_t L_t V_t R_t where V_t is a decision variable (or its
transpose). Blocks are symmetric by construction: callers add both halves of
He(.) terms.
"""
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from reset_delay_certifier.__common__.env import LMI_PROBLEM_SCHEMA_VERSION
from reset_delay_certifier.__common__.exceptions import AssemblyError

SENSE_POSITIVE = "positive"
SENSE_NEGATIVE = "negative"


@dataclass(frozen=True)
class VariableSpec:
    name: str
    shape: tuple
    symmetric: bool


@dataclass
class Term:
    variable: str
    left: np.ndarray
    right: np.ndarray
    transpose: bool = False

    def evaluate(self, values):
        V = np.asarray(values[self.variable], dtype=float)
        if self.transpose:
            V = V.T
        return self.left @ V @ self.right

    def scaled(self, c):
        return Term(self.variable, c * self.left, self.right, self.transpose)

    def embedded(self, E):
        return Term(self.variable, E @ self.left, self.right @ E.T, self.transpose)

    def magnitude(self):
        return float(np.max(np.abs(self.left), initial=0.0)) * float(
            np.max(np.abs(self.right), initial=0.0)
        )


def he(variable, left, right):
    """Both halves of He(left V right)."""
    return [
        Term(variable, left, right),
        Term(variable, right.T, left.T, transpose=True),
    ]


def congruence(variable, M, scale=1.0):
    """scale * M^T V M."""
    return Term(variable, scale * M.T, M)


@dataclass
class AffineMatrix:
    size: int
    terms: list = field(default_factory=list)
    constant: np.ndarray = None

    def __post_init__(self):
        if self.constant is None:
            self.constant = np.zeros((self.size, self.size))

    def evaluate(self, values):
        out = np.array(self.constant, dtype=float)
        for term in self.terms:
            out = out + term.evaluate(values)
        return out

    def scaled(self, c):
        return AffineMatrix(
            self.size, [t.scaled(c) for t in self.terms], c * self.constant
        )

    def embedded(self, E):
        return AffineMatrix(
            E.shape[0],
            [t.embedded(E) for t in self.terms],
            E @ self.constant @ E.T,
        )

    def __add__(self, other):
        if self.size != other.size:
            raise AssemblyError(
                "Cannot add affine blocks of size {} and {}".format(
                    self.size, other.size
                )
            )
        return AffineMatrix(
            self.size, self.terms + other.terms, self.constant + other.constant
        )

    def variables(self):
        return sorted({t.variable for t in self.terms})


@dataclass
class LmiBlock:
    name: str
    sense: str
    matrix: AffineMatrix
    condition: str = ""
    interval: int = 0

    @property
    def size(self):
        return self.matrix.size


@dataclass
class LmiProblem:
    variables: dict = field(default_factory=dict)
    blocks: list = field(default_factory=list)
    epsilon: float = 0.0
    metadata: dict = field(default_factory=dict)

    def add_variable(self, name, shape, symmetric):
        self.variables[name] = VariableSpec(name, tuple(shape), bool(symmetric))

    def add_block(self, name, sense, matrix, condition="", interval=0):
        for term in matrix.terms:
            if term.variable not in self.variables:
                raise AssemblyError(
                    "Block {} references undeclared variable {}".format(
                        name, term.variable
                    )
                )
            spec = self.variables[term.variable]
            rows, cols = spec.shape
            if term.transpose:
                rows, cols = cols, rows
            if (
                term.left.shape != (matrix.size, rows)
                or term.right.shape != (cols, matrix.size)
            ):
                raise AssemblyError(
                    "Term on {} in block {} has left {} / right {}, "
                    "expected ({}, {}) / ({}, {})".format(
                        term.variable,
                        name,
                        term.left.shape,
                        term.right.shape,
                        matrix.size,
                        rows,
                        cols,
                        matrix.size,
                    )
                )
        self.blocks.append(LmiBlock(name, sense, matrix, condition, interval))

    def block(self, name):
        for blk in self.blocks:
            if blk.name == name:
                return blk
        raise KeyError(name)

    def block_sizes(self):
        return [(blk.name, blk.size) for blk in self.blocks]

    def max_coefficient(self):
        magnitude = 0.0
        for blk in self.blocks:
            magnitude = max(
                magnitude, float(np.max(np.abs(blk.matrix.constant), initial=0.0))
            )
            for term in blk.matrix.terms:
                magnitude = max(magnitude, term.magnitude())
        return magnitude

    def evaluate(self, values):
        return {blk.name: blk.matrix.evaluate(values) for blk in self.blocks}

    def to_dict(self):
        return {
            "schema_version": LMI_PROBLEM_SCHEMA_VERSION,
            "epsilon": self.epsilon,
            "metadata": self.metadata,
            "variables": {
                name: {"shape": list(spec.shape), "symmetric": spec.symmetric}
                for name, spec in self.variables.items()
            },
            "blocks": [
                {
                    "name": blk.name,
                    "sense": blk.sense,
                    "condition": blk.condition,
                    "interval": blk.interval,
                    "size": blk.size,
                    "constant": blk.matrix.constant.tolist(),
                    "terms": [
                        {
                            "variable": t.variable,
                            "left": t.left.tolist(),
                            "right": t.right.tolist(),
                            "transpose": t.transpose,
                        }
                        for t in blk.matrix.terms
                    ],
                }
                for blk in self.blocks
            ],
        }

    def to_json(self, path=None):
        payload = json.dumps(self.to_dict())
        if path is not None:
            logging.info("Dumping LMI problem into {}".format(path))
            with open(path, "w") as fd:
                fd.write(payload)
        return payload

    @classmethod
    def from_dict(cls, data):
        if data.get("schema_version") != LMI_PROBLEM_SCHEMA_VERSION:
            raise AssemblyError(
                "Unsupported LMI problem schema version {}".format(
                    data.get("schema_version")
                )
            )
        problem = cls(epsilon=data["epsilon"], metadata=data.get("metadata", {}))
        for name, spec in data["variables"].items():
            problem.add_variable(name, spec["shape"], spec["symmetric"])
        for blk in data["blocks"]:
            terms = [
                Term(
                    t["variable"],
                    np.array(t["left"], dtype=float),
                    np.array(t["right"], dtype=float),
                    bool(t["transpose"]),
                )
                for t in blk["terms"]
            ]
            matrix = AffineMatrix(
                blk["size"], terms, np.array(blk["constant"], dtype=float)
            )
            problem.add_block(
                blk["name"],
                blk["sense"],
                matrix,
                blk.get("condition", ""),
                blk.get("interval", 0),
            )
        return problem

    @classmethod
    def from_json(cls, payload):
        return cls.from_dict(json.loads(payload))


def zero_values(problem):
    return {name: np.zeros(spec.shape) for name, spec in problem.variables.items()}


def random_decision_values(problem, rng, scale=1.0):
    values = {}
    for name, spec in problem.variables.items():
        V = scale * rng.standard_normal(spec.shape)
        if spec.symmetric:
            V = 0.5 * (V + V.T)
        values[name] = V
    return values
