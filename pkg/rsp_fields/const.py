"""Constants for the rsp_fields package."""

DOMAIN = "rsp_fields"

# Commands
CMD_SYNTH = "synth"
CMD_FIDELITY = "fidelity"
CMD_SWEEP = "sweep"
CMD_CORRELATOR = "correlator"
CMD_PROPAGATE = "propagate"
COMMANDS = (CMD_SYNTH, CMD_FIDELITY, CMD_SWEEP, CMD_CORRELATOR, CMD_PROPAGATE)

# Configuration sections
SECTION_MODEL = "model"
SECTION_TARGET = "target"
SECTION_WINDOW = "window"
SECTION_GRID = "grid"
SECTION_SWEEP = "sweep"
SECTION_CORRELATOR = "correlator"
SECTION_PROPAGATE = "propagate"
SECTION_OUTPUT = "output"

# Configuration keys
CONF_KIND = "kind"
CONF_MASS = "mass"
CONF_MAX_FREQUENCY = "max_frequency"
CONF_WEIGHT_RULE = "weight_rule"
CONF_PROFILE = "profile"
CONF_DIMENSION = "dimension"
CONF_RADIUS = "L"
CONF_WIDTH = "width"
CONF_GAP = "gap"
CONF_INGOING = "ingoing"
CONF_T0 = "t0"
CONF_HALF_SPAN = "T"
CONF_M_INDEX = "m_index"
CONF_OMEGA_C = "omega_c"
CONF_TIME_STEP = "time_step"
CONF_COUPLING = "coupling_lambda"
CONF_MOLLIFIER_ORDER = "mollifier_order"
CONF_MOLLIFIER_TAU = "mollifier_tau"
CONF_SPIKE_WIDTH = "spike_width"
CONF_K_MIN = "k_min"
CONF_K_MAX = "k_max"
CONF_K_COUNT = "k_count"
CONF_OMEGA_COUNT = "omega_count"
CONF_TIME_COUNT = "time_count"
CONF_AXIS = "axis"
CONF_VALUES = "values"
CONF_POINT_TIMEOUT = "point_timeout"
CONF_R_MIN = "r_min"
CONF_R_MAX = "r_max"
CONF_R_COUNT = "r_count"
CONF_DT_VALUES = "dt_values"
CONF_EPSILON0 = "epsilon0"
CONF_X_MIN = "x_min"
CONF_X_MAX = "x_max"
CONF_X_COUNT = "x_count"
CONF_T_VALUES = "t_values"
CONF_K_CENTER = "k_center"
CONF_K_WIDTH = "k_width"
CONF_DIRECTORY = "directory"

# Environment
ENV_THREADS = "RSP_THREADS"

# Default values
DEFAULT_THREADS = 1
DEFAULT_M_INDEX = 8
DEFAULT_TIME_STEP = 0.02
DEFAULT_COUPLING = 1e-3
DEFAULT_MOLLIFIER_ORDER = 8
DEFAULT_K_COUNT = 1024
DEFAULT_OMEGA_COUNT = 4096
DEFAULT_TIME_COUNT = 8193
DEFAULT_POINT_TIMEOUT = 600  # seconds
DEFAULT_EPSILON0 = 0.2
DEFAULT_OUTPUT_DIRECTORY = "rsp_output"
DEFAULT_TAIL_ETA = 1e-3
DEFAULT_CORRELATOR_DIMENSION = 3
DEFAULT_R_COUNT = 21
DEFAULT_X_COUNT = 401

# Numerical tolerances
DEFAULT_QUADRATURE_TOL = 1e-10
PERIODIC_MAX_SAMPLES = 2**20
PROBE_GRID_POINTS = 256
PROBE_K_RANGE = (1e-3, 1e3)

# Superoscillation design
SYNTHESIS_VALIDITY = 1.0
SYNTHESIS_ENERGY_QUANTILE = 0.99
QUADRATURE_RANGE_CAP = 27.0
QUADRATURE_ORACLE_TOL = 1e-8
BAND_EDGE_TOLERANCE = 0.01
MOLLIFIER_MIN_ORDER = 4
PERTURBATIVE_LIMIT = 0.1

# Exit codes
EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_NUMERIC_ERROR = 3
EXIT_PRECISION_ERROR = 4

# Output files
FILE_PLAN = "window_plan.txt"
FILE_SPECTRUM = "spectrum.csv"
FILE_WINDOW = "window_time.csv"
FILE_WINDOW_PHYSICAL = "window_physical.csv"
FILE_AMPLITUDES_DESIRED = "amplitude_desired.csv"
FILE_AMPLITUDES_GENERATED = "amplitude_generated.csv"
FILE_SWEEP = "sweep.csv"
FILE_CORRELATOR = "correlator.csv"
FILE_PROPAGATE = "propagate.csv"
FILE_REPORT = "report.json"

# CSV schemas
SPECTRUM_COLUMNS = ("omega_prime", "re", "im", "abs")
WINDOW_COLUMNS = ("t", "re", "im", "abs")
AMPLITUDE_COLUMNS = ("k", "re", "im", "omega_k")
SWEEP_COLUMNS = ("value", "fidelity", "log_p", "eta", "omega_c", "error")
CORRELATOR_COLUMNS = ("r", "dt", "re", "im", "abs", "flag")
PROPAGATE_COLUMNS = ("x", "t", "abs")

# Sweep axes
SWEEP_AXES = {
    "A": {
        "name": "Hyperbolic parameter",
        "section": SECTION_WINDOW,
        "fit": "log_p vs sinh(A)/delta^2",
    },
    "m_index": {
        "name": "Quantization index",
        "section": SECTION_WINDOW,
        "fit": None,
    },
    "T": {
        "name": "Window half-span",
        "section": SECTION_WINDOW,
        "fit": "log_p vs T^2",
    },
    "omega_c": {
        "name": "Band edge",
        "section": SECTION_WINDOW,
        "fit": "log omega_c vs log eta",
    },
    "L": {
        "name": "Target radius",
        "section": SECTION_TARGET,
        "fit": None,
    },
    "mass": {
        "name": "Field mass",
        "section": SECTION_MODEL,
        "fit": None,
    },
}
