"""
Configuration settings for the quantum information manifold toolkit.
"""
import os
from pathlib import Path

# Base directories
BASE_DIR = Path(__file__).parent
DATA_DIR = Path(os.environ.get("QIMANIFOLD_DATA_DIR", BASE_DIR / "data"))
LOG_DIR = DATA_DIR / "logs"

# Default files
LOG_FILE = LOG_DIR / "qimanifold.log"
REPLAY_DIR = DATA_DIR / "replay"

# Spectral tolerances
TOL_EIG = 1e-12
TOL_TRACE = 1e-10
LOEWNER_TOL = 1e-10
HERMITIAN_TOL = 1e-8
POSITIVITY_FACTOR = 1e-14  # gate: min eigenvalue > n * factor * ||rho||
DEGENERACY_TOL = 1e-13

# sinh(x)/x switches to its Taylor polynomial below this |x|
SINCH_TAYLOR_CUTOFF = 0.0135

# Expansional settings
MAX_SERIES_ORDER = 30
DEFAULT_ORDER = 20

# Grids
ARAKI_SCAN_POINTS = 10001
HOOD_GRID_POINTS = 101

# Finite differences
FD_STEP = 1e-3
MIN_FD_STEP = 1e-4

# Audit defaults
DEFAULT_SEED = 20240601
DEFAULT_INSTANCES = 500
DEFAULT_DIMS = (2, 3, 4, 5, 6, 7, 8)
DEFAULT_FORMAT = "table"
OUTPUT_FORMATS = ("table", "csv", "json-lines")
MAX_ARAKI_TARGET = 3.0
MAX_THREADS = 4  # For parallel audit instances

# Per-audit tolerances used when the run does not override them
AUDIT_TOLERANCES = {
    "sandwich": 1e-9,
    "form-bound": 1e-9,
    "araki-scan": 1e-6,
    "bkm-quadrature": 1e-8,
    "norm-chain": 1e-10,
    "dyson-series": 1e-12,
    "duality": 1e-12,
    "hessian": 1e-4,
    "trace-norm-bound": 1e-10,
    "kullback": 1e-10,
    "entropy-identity": 1e-10,
    "mixture-closure": 1e-10,
    "hood-norms": 1e-10,
    "hood-entropy": 1e-10,
    "free-energy": 1e-10,
}

# Digest algorithm for reports and replay dumps
CHECKSUM_ALGORITHM = "sha256"
