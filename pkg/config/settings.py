"""Application configuration, numerical tolerances, and file-format constants."""
import logging
import os

from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger(__name__)

# --- Parallelism ---
DEFAULT_THREADS = os.cpu_count() or 1

# --- Logging ---
LOG_LEVEL = os.getenv("NETCERT_LOG_LEVEL", "WARNING").upper()
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# --- Linear-algebra tolerances ---
NORM_TOL = 1e-12             # PureState normalization
HERMITIAN_TOL = 1e-12        # DensityOp hermiticity
FLAG_TOL = 1e-10             # LinOp hermitian/unitary flags, projector checks
PSD_FLOOR = -1e-10           # smallest eigenvalue tolerated in a state
EIGEN_RESIDUAL_TOL = 1e-10   # ||M - V L V^dag||_max after diagonalization
SCHMIDT_TOL = 1e-9           # singular values above this count toward Schmidt rank
REGULARIZE_ZERO_TOL = 1e-12  # eigenvalues treated as exactly zero by regularize()

# --- Behavior tolerances ---
PROB_FLOOR = -1e-12          # probabilities in (PROB_FLOOR, 0) are clamped to 0
NORMALIZATION_TOL = 1e-10
NO_SIGNALING_TOL = 1e-9

# --- Certification defaults ---
DEFAULT_TOL_CHSH = 1e-9
DEFAULT_TOL_TOMO = 1e-9
DEFAULT_TOL_ALIGN = 1e-9
CONJUGATION_FIT_TOL = 1e-9

# --- Tomography ---
FRAME_RANK_TOL = 1e-8        # relative singular-value cutoff of a measurement frame
PT_LOWER = -0.5              # partial-transpose spectra of states lie in [PT_LOWER, PT_UPPER]
PT_UPPER = 1.0

# --- Extraction ---
ISOMETRY_TOL = 1e-9
KRAUS_TOL = 1e-8
ENSEMBLE_CUTOFF = 1e-12      # spectral weights below this are dropped from mixed models

# --- File formats ---
SCHEMA_VERSION = 1
STATE_FILE_NORM_TOL = 1e-6   # state files further from norm 1 are rejected


def thread_count(override: int | None = None) -> int:
    """Return the worker-thread cap for behavior generation.

    An explicit override wins; otherwise NETCERT_THREADS is read from the
    environment at call time so that it can be changed between runs.
    """
    if override is not None:
        return max(1, int(override))
    raw = os.getenv("NETCERT_THREADS")
    if raw is None or raw.strip() == "":
        return DEFAULT_THREADS
    try:
        value = int(raw)
    except ValueError:
        logger.warning("NETCERT_THREADS=%r is not an integer; using 1 thread", raw)
        return 1
    if value < 1:
        logger.warning("NETCERT_THREADS=%d is below 1; using 1 thread", value)
        return 1
    return value
