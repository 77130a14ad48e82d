import os
from dotenv import load_dotenv

load_dotenv()


class ConfigError(ValueError):
    """Raised for malformed experiment files, presets or CLI settings."""


# --- Logging ---
LOG_FILE = os.getenv("LOG_FILE", "sparse_bwk.log")
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_MAX_BYTES = 10 * 1024 * 1024
LOG_BACKUP_COUNT = 5

# --- Online HT ---
HT_RHO = float(os.getenv("HT_RHO") or "0.25")  # relative sparsity s0 / s
HT_SYMMETRY_TOL = 1e-10

# --- Sparse spectrum ---
EXACT_SPECTRUM_MAX_DIM = 20

# --- Environment ---
FEATURE_BOUND = float(os.getenv("FEATURE_BOUND") or "3.0")
SIGNAL_LOW = 0.5
SIGNAL_HIGH = 1.0
NOISE_SIGMA = 0.5
COVARIANCE_ALPHA = 0.5

# --- LP solver ---
LP_PIVOT_TOL = 1e-9
LP_FEAS_TOL = 1e-7
LP_MAX_ITER = int(os.getenv("LP_MAX_ITER") or "50000")
DENSE_LP_MAX_VARS = int(os.getenv("DENSE_LP_MAX_VARS") or "600")

# --- LASSO ---
LASSO_TOL = 1e-12           # duality-gap tolerance, relative to ||y||^2
LASSO_MAX_SWEEPS = 10_000
LASSO_KKT_TOL = 1e-6
LASSO_C_GRID = (5.0, 1.0, 0.1)
ETC_FRACTIONS = (0.3, 0.5)

# --- Harness ---
SCHEMA_VERSION = 1
DEFAULT_REPS_ESTIMATION = int(os.getenv("DEFAULT_REPS_ESTIMATION") or "20")
DEFAULT_REPS_BANDIT = int(os.getenv("DEFAULT_REPS_BANDIT") or "10")
DEFAULT_THREADS = int(os.getenv("DEFAULT_THREADS") or "4")
DEFAULT_MASTER_SEED = int(os.getenv("DEFAULT_MASTER_SEED") or "20240101")
OUTPUT_DIR = os.getenv("OUTPUT_DIR", "results")
