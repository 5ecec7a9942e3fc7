from datetime import datetime
from pathlib import Path
import logging
import math
import os
import sys

# === Leg mặc định (simplified leg, reference design study) ===
LEG_L1_M = 0.45
LEG_L2_M = 0.45
LEG_M1_KG = 2.5
LEG_M2_KG = 5.0
LEG_M3_KG = 20.0
GRAVITY = 9.81
Q2_CAP_RAD = -0.05
JACOBIAN_MODE = "paper"

# === Motor mặc định (72 V knee motor, 1.5 kW / 9.37 Nm) ===
TAU_PEAK_NM = 9.37
I_Q_PEAK_A = 92.0
P_PEAK_W = 1500.0
OMEGA_MAX_RPM = 4800.0
HPL_FRACTION = 0.54  # high-power-loss onset, share of omega_max
R_PHASE_OHM = 0.05
C_IRON1 = 0.5
C_IRON2 = 0.00494
ETA_J = 0.90

# === Mechanism mặc định ===
LEAD_MM = 10.0
VRR_R_MM = 47.0
VRR_S0_MM = 150.0
VRR_DTHETA_DEG = 0.0
FRR_K = 22.0

# Working-range guard on the crank angle
THETA_GUARD_LO = 0.01
THETA_GUARD_HI = math.pi - 0.001

# === Simulation ===
DT_S = 1e-4
T_MAX_S = 1.0
Q2_TAKEOFF_CAP_RAD = -0.05
TAKEOFF_RULE = "either"
TABLE_ANGLES_RAD = [-2.6180, -2.2689, -1.9199]

# === Search box (min, max, step) ===
SEARCH_R_MM = (25.0, 75.0, 1.0)
SEARCH_S0_MM = (100.0, 250.0, 5.0)
SEARCH_DTHETA_DEG = (-3.0, 3.0, 1.0)
SEARCH_K_FIXED = (10.0, 40.0, 1.0)
# Build rules: actuator body beside the stroke, straight-knee reach
DEAD_LENGTH_MM = 72.0
STANDING_REACH = True

WORKERS = 1
CSV_DIGITS = 9

LOG_ENV = "VRRJUMP_LOG"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s %(message)s"

PROJECT_ROOT = Path(__file__).resolve().parents[0]
DATA_DIR = PROJECT_ROOT / "data"
OUTPUT_DIR = Path("output")


def setup_logging(level: str | None = None) -> int:
    """Configure root logging from ``VRRJUMP_LOG`` (or an explicit level)."""
    name = (level or os.environ.get(LOG_ENV) or "INFO").strip().upper()
    resolved = logging.getLevelName(name)
    bad = not isinstance(resolved, int)
    if bad:
        resolved = logging.INFO

    logging.basicConfig(level=resolved, format=LOG_FORMAT, stream=sys.stderr, force=True)
    if bad:
        logging.getLogger(__name__).warning("[Config] Unknown %s=%r, using INFO", LOG_ENV, name)
    return resolved


def ensure_directories(*dirs: Path):
    """Create output directories required for a run."""
    for d in dirs:
        os.makedirs(d, exist_ok=True)


def sanitize_filename(value) -> str:
    """Convert angle/label values to safe filename parts."""
    text = str(value).replace("/", "_").replace("\\", "_").replace(" ", "_")
    return text.replace("-", "m").replace(".", "p")


def prepare_output_paths(output_dir: Path | str | None = None, today: datetime | None = None):
    """Return (started_at, out_dir) with ``out_dir`` created."""
    today = today or datetime.now()
    out_dir = Path(output_dir) if output_dir else OUTPUT_DIR
    ensure_directories(out_dir)
    return today, out_dir
