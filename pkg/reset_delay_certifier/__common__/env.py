import logging
import os

# default problem definitions path
import pkg_resources
import psutil

PROBLEMS_PATH_DEFAULT_PATH = pkg_resources.resource_filename(
    "reset_delay_certifier", "problems"
)
PROBLEMS_PATH = os.getenv("PROBLEMS_PATH", PROBLEMS_PATH_DEFAULT_PATH)

# semidefinite backend
SOLVER_NAME = os.getenv("SOLVER_NAME", "CLARABEL")
SOLVER_MAX_ITERS = int(os.getenv("SOLVER_MAX_ITERS", "10000"))
SOLVER_FEASTOL = float(os.getenv("SOLVER_FEASTOL", "1e-8"))
# strict inequalities are checked against eps = scale * (1 + max |coefficient|)
LMI_EPSILON_SCALE = float(os.getenv("LMI_EPSILON_SCALE", "1e-9"))
LMI_SOLVE_MARGIN = float(os.getenv("LMI_SOLVE_MARGIN", "1e-7"))
LMI_CONE_MARGIN = float(os.getenv("LMI_CONE_MARGIN", "1.0"))

# Legendre order guard
LEGENDRE_MAX_ORDER = int(os.getenv("LEGENDRE_MAX_ORDER", "5"))
LEGENDRE_EXPLICIT_MAX_DEGREE = 10

# searches
SEARCH_T_TOL = float(os.getenv("SEARCH_T_TOL", "0.01"))
SEARCH_ALPHA_TOL = float(os.getenv("SEARCH_ALPHA_TOL", "1e-3"))
SEARCH_ALPHA_LOWER = 1e-6
SEARCH_ALPHA_UPPER = float(os.getenv("SEARCH_ALPHA_UPPER", "5.0"))
TABLE1_M_LIST = [1, 3, 5, 10, 50]

# simulation
SIM_STEP_FRACTION = float(os.getenv("SIM_STEP_FRACTION", "0.01"))
SIM_OVERFLOW_GUARD = float(os.getenv("SIM_OVERFLOW_GUARD", "1e12"))
SIM_MIN_DWELL_FRACTION = float(os.getenv("SIM_MIN_DWELL_FRACTION", "1e-3"))
SIM_TAIL_FRACTION = float(os.getenv("SIM_TAIL_FRACTION", "0.5"))

# output schemas
CERTIFICATE_SCHEMA_VERSION = 1
LMI_PROBLEM_SCHEMA_VERSION = 1

# logging related
VERBOSE = os.getenv("VERBOSE", "1") == "0"
LOG_FORMAT = "%(asctime)s %(levelname)-4s %(message)s"
LOG_DATEFMT = "%Y-%m-%d %H:%M:%S"
LOG_LEVEL = logging.INFO
if VERBOSE:
    LOG_LEVEL = logging.WARN

MACHINE_CPU_COUNT = psutil.cpu_count()
