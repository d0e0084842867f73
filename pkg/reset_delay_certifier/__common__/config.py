#  BSD 3-Clause License
#
#  Copyright (c) 2023., reset-delay-certifier contributors
#  All rights reserved.
#
"""Problem definition files.

A problem file is JSON (any YAML superset is accepted since it is read with
yaml.safe_load). Times are in the plant's time unit, alpha in 1/time.
"""
import copy
import logging
import os

import numpy as np
import yaml
from marshmallow import (
    RAISE,
    Schema,
    ValidationError,
    fields,
    post_load,
    pre_load,
    validate,
    validates_schema,
)

from reset_delay_certifier.__common__.env import (
    LEGENDRE_MAX_ORDER,
    LMI_CONE_MARGIN,
    LMI_EPSILON_SCALE,
    LMI_SOLVE_MARGIN,
    PROBLEMS_PATH,
    SEARCH_ALPHA_LOWER,
    SEARCH_ALPHA_TOL,
    SEARCH_ALPHA_UPPER,
    SEARCH_T_TOL,
    SIM_TAIL_FRACTION,
    SOLVER_FEASTOL,
    SOLVER_MAX_ITERS,
    SOLVER_NAME,
    TABLE1_M_LIST,
)
from reset_delay_certifier.__common__.exceptions import CertifierError, ConfigError
from reset_delay_certifier.__lmi__.conditions import AnalysisQuery
from reset_delay_certifier.__model__.model import (
    build_closed_loop,
    build_sampled_data,
    make_controller,
    make_plant,
    plant_from_transfer_function,
)
from reset_delay_certifier.__sdp__.sdp import SolverOptions
from reset_delay_certifier.__sim__.integrator import InitialCondition
from reset_delay_certifier.__sim__.laws import ResettingLaw
from reset_delay_certifier.__sim__.sim import default_min_dwell

POSITIVE = validate.Range(min=0, min_inclusive=False)
NON_NEGATIVE = validate.Range(min=0)
NESTED_SECTIONS = ["query", "law", "solver", "simulation", "sweep", "output"]


class BaseSchema(Schema):
    class Meta:
        unknown = RAISE


class PlantSchema(BaseSchema):
    A = fields.List(fields.List(fields.Float()))
    B = fields.Raw()
    C = fields.Raw()
    num = fields.List(fields.Float())
    den = fields.List(fields.Float())

    @validates_schema
    def check_representation(self, data, **kwargs):
        has_ss = all(key in data for key in ("A", "B", "C"))
        has_tf = all(key in data for key in ("num", "den"))
        if has_ss == has_tf:
            raise ValidationError(
                "plant needs either {A, B, C} or {num, den}", "plant"
            )


class ControllerSchema(BaseSchema):
    k_p = fields.Float(required=True)
    k_i = fields.Float(required=True)
    p_r = fields.Float(required=True, validate=validate.Range(min=0.0, max=1.0))


class QuerySchema(BaseSchema):
    alpha = fields.Float(load_default=SEARCH_ALPHA_LOWER, validate=POSITIVE)
    T_m = fields.Float(load_default=None, allow_none=True, validate=NON_NEGATIVE)
    T_M = fields.Float(load_default=None, allow_none=True, validate=POSITIVE)
    N = fields.Integer(load_default=2, validate=validate.Range(min=1))
    M = fields.Integer(load_default=1, validate=validate.Range(min=1))
    include_decay_storage_term = fields.Boolean(load_default=True)
    allow_high_order = fields.Boolean(load_default=False)

    @validates_schema
    def check_bounds(self, data, **kwargs):
        T_m, T_M = data.get("T_m"), data.get("T_M")
        if T_m is not None and T_M is not None and T_m > T_M:
            raise ValidationError("T_m={} exceeds T_M={}".format(T_m, T_M), "T_m")
        if data.get("N", 2) > LEGENDRE_MAX_ORDER and not data.get("allow_high_order"):
            raise ValidationError(
                "N above {} requires allow_high_order".format(LEGENDRE_MAX_ORDER), "N"
            )


class LawSchema(BaseSchema):
    kind = fields.String(
        load_default="none",
        validate=validate.OneOf(["none", "periodic", "bounded_random", "zero_crossing"]),
    )
    T = fields.Float(load_default=None, allow_none=True, validate=POSITIVE)
    T_m = fields.Float(load_default=None, allow_none=True, validate=POSITIVE)
    T_M = fields.Float(load_default=None, allow_none=True, validate=POSITIVE)
    seed = fields.Integer(load_default=None, allow_none=True)
    min_dwell = fields.Float(load_default=None, allow_none=True, validate=POSITIVE)


class SolverSchema(BaseSchema):
    name = fields.String(load_default=SOLVER_NAME)
    max_iters = fields.Integer(load_default=SOLVER_MAX_ITERS, validate=POSITIVE)
    feastol = fields.Float(load_default=SOLVER_FEASTOL, validate=POSITIVE)
    epsilon_scale = fields.Float(load_default=LMI_EPSILON_SCALE, validate=POSITIVE)
    solve_margin = fields.Float(load_default=LMI_SOLVE_MARGIN, validate=NON_NEGATIVE)
    cone_margin = fields.Float(load_default=LMI_CONE_MARGIN, validate=POSITIVE)
    dump_problem = fields.String(load_default=None, allow_none=True)


class SimulationSchema(BaseSchema):
    horizon = fields.Float(load_default=100.0, validate=POSITIVE)
    step = fields.Float(load_default=None, allow_none=True, validate=POSITIVE)
    phi = fields.Raw(load_default=None, allow_none=True)
    tail_fraction = fields.Float(
        load_default=SIM_TAIL_FRACTION,
        validate=validate.Range(min=0, max=1, min_inclusive=False),
    )

    @validates_schema
    def check_phi(self, data, **kwargs):
        phi = data.get("phi")
        if phi is None or isinstance(phi, list):
            return
        if not isinstance(phi, dict) or set(phi.keys()) != {"times", "values"}:
            raise ValidationError(
                "phi must be a constant vector or {times, values}", "phi"
            )


class SweepSchema(BaseSchema):
    p_r = fields.List(fields.Float(validate=validate.Range(min=0.0, max=1.0)))
    h = fields.List(fields.Float(validate=POSITIVE))
    T = fields.List(fields.Float(validate=POSITIVE))
    M = fields.List(
        fields.Integer(validate=validate.Range(min=1)),
        load_default=lambda: list(TABLE1_M_LIST),
    )
    asynchronous_ratio = fields.Float(
        load_default=None,
        allow_none=True,
        validate=validate.Range(min=0, max=1, min_inclusive=False),
    )
    T_tol = fields.Float(load_default=SEARCH_T_TOL, validate=POSITIVE)
    alpha_tol = fields.Float(load_default=SEARCH_ALPHA_TOL, validate=POSITIVE)
    alpha_upper = fields.Float(load_default=SEARCH_ALPHA_UPPER, validate=POSITIVE)


class OutputSchema(BaseSchema):
    dir = fields.String(load_default=".")
    prefix = fields.String(load_default=None, allow_none=True)


class ProblemConfigSchema(BaseSchema):
    name = fields.String(load_default="problem")
    description = fields.String(load_default="")
    plant = fields.Nested(PlantSchema, required=True)
    controller = fields.Nested(ControllerSchema, required=True)
    h = fields.Float(required=True, validate=POSITIVE)
    query = fields.Nested(QuerySchema)
    law = fields.Nested(LawSchema)
    solver = fields.Nested(SolverSchema)
    simulation = fields.Nested(SimulationSchema)
    sweep = fields.Nested(SweepSchema)
    output = fields.Nested(OutputSchema)

    @pre_load
    def fill_sections(self, data, **kwargs):
        data = dict(data)
        for section in NESTED_SECTIONS:
            if data.get(section) is None:
                data[section] = {}
        return data

    @post_load
    def make_config(self, data, **kwargs):
        return ProblemConfig(data)


class ProblemConfig:
    """Validated problem definition plus builders for the domain objects."""

    def __init__(self, resolved):
        self.resolved = resolved

    def __getitem__(self, key):
        return self.resolved[key]

    @property
    def name(self):
        return self.resolved["name"]

    @property
    def h(self):
        return self.resolved["h"]

    def plant(self):
        spec = self.resolved["plant"]
        if "num" in spec:
            return plant_from_transfer_function(spec["num"], spec["den"])
        return make_plant(spec["A"], spec["B"], spec["C"])

    def controller(self, p_r=None):
        spec = self.resolved["controller"]
        return make_controller(
            spec["k_p"], spec["k_i"], spec["p_r"] if p_r is None else p_r
        )

    def closed_loop(self):
        return build_closed_loop(self.plant(), self.controller(), self.h)

    def sampled_data(self):
        return build_sampled_data(self.plant(), self.controller(), self.h)

    def query(self, **overrides):
        spec = dict(self.resolved["query"])
        spec.update(overrides)
        if spec.get("T_m") is None or spec.get("T_M") is None:
            raise ConfigError("query needs T_m and T_M", {"query": ["T_m", "T_M"]})
        return AnalysisQuery(
            alpha=spec["alpha"],
            T_m=spec["T_m"],
            T_M=spec["T_M"],
            N=spec["N"],
            M=spec["M"],
            include_decay_storage_term=spec["include_decay_storage_term"],
            allow_high_order=spec["allow_high_order"],
        )

    def law(self):
        spec = dict(self.resolved["law"])
        if spec["kind"] == "zero_crossing" and spec.get("min_dwell") is None:
            spec["min_dwell"] = default_min_dwell(self.h)
        return ResettingLaw(**spec)

    def solver_options(self):
        spec = self.resolved["solver"]
        return SolverOptions(
            name=spec["name"],
            max_iters=spec["max_iters"],
            feastol=spec["feastol"],
            epsilon_scale=spec["epsilon_scale"],
            solve_margin=spec["solve_margin"],
            cone_margin=spec["cone_margin"],
        )

    def initial_condition(self, n):
        phi = self.resolved["simulation"]["phi"]
        if phi is None:
            return InitialCondition.constant(np.eye(n)[0], self.h)
        if isinstance(phi, list):
            return InitialCondition.constant(phi, self.h)
        return InitialCondition(phi["times"], phi["values"])

    def output_prefix(self):
        prefix = self.resolved["output"]["prefix"]
        return self.name if prefix is None else prefix

    def output_path(self, suffix, out_dir=None):
        if out_dir is None:
            out_dir = self.resolved["output"]["dir"]
        return os.path.join(out_dir, "{}-{}".format(self.output_prefix(), suffix))

    def to_dict(self):
        return copy.deepcopy(self.resolved)


def load_problem_config_dict(data):
    try:
        return ProblemConfigSchema().load(data)
    except ValidationError as e:
        raise ConfigError("Invalid problem definition: {}".format(e.messages), e.messages)


def load_problem_config(filename):
    full_filename = os.path.abspath(filename)
    if not os.path.exists(full_filename):
        bundled = os.path.join(PROBLEMS_PATH, filename)
        if os.path.exists(bundled):
            full_filename = bundled
    logging.info("Loading problem definition from {}".format(full_filename))
    try:
        with open(full_filename) as stream:
            data = yaml.safe_load(stream)
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError("Unable to read {}: {}".format(full_filename, e))
    if not isinstance(data, dict):
        raise ConfigError("{} does not hold a mapping".format(full_filename))
    config = load_problem_config_dict(data)
    # surface model errors (dimensions, p_r range) at load time
    try:
        config.plant()
        config.controller()
    except CertifierError as e:
        raise ConfigError("Invalid problem definition: {}".format(e))
    return config


def list_bundled_problems(problems_path=PROBLEMS_PATH):
    return sorted(
        os.path.join(problems_path, f)
        for f in os.listdir(problems_path)
        if f.endswith(".json") or f.endswith(".yml") or f.endswith(".yaml")
    )


def apply_cli_overrides(config, args, tol_key="T_tol"):
    """CLI flags win over file values; the result is what outputs record."""
    resolved = config.resolved
    if getattr(args, "out", None) is not None:
        resolved["output"]["dir"] = args.out
    if getattr(args, "tol", None) is not None:
        resolved["sweep"][tol_key] = args.tol
    if getattr(args, "seed", None) is not None:
        resolved["law"]["seed"] = args.seed
    if getattr(args, "dump_problem", None) is not None:
        resolved["solver"]["dump_problem"] = args.dump_problem
    logging.info(
        "Resolved problem '{}' (output dir {})".format(
            config.name, resolved["output"]["dir"]
        )
    )
    return config


def resolve_config(args, tol_key="T_tol"):
    return apply_cli_overrides(load_problem_config(args.config), args, tol_key)
