"""Centralized configuration for compound-mimo-capacity."""

import os
from pathlib import Path

from dotenv import load_dotenv

# Load .env from project root
_ENV_FILE = Path(__file__).resolve().parent.parent / ".env"
load_dotenv(_ENV_FILE)

# ── Runtime ──────────────────────────────────────────────────────
THREADS: int = max(1, int(os.getenv("COMPOUND_MIMO_THREADS", str(os.cpu_count() or 1))))
LOG_LEVEL: str = os.getenv("COMPOUND_MIMO_LOG_LEVEL", "INFO")

# ── Matrix kernel tolerances ─────────────────────────────────────
PSD_TOL: float = float(os.getenv("PSD_TOL", "1e-9"))
# Singular values below RANK_TOL * sigma_max count as zero
RANK_TOL: float = float(os.getenv("RANK_TOL", "1e-12"))

# ── Capacity solvers ─────────────────────────────────────────────
DUALITY_TOL: float = float(os.getenv("DUALITY_TOL", "1e-8"))
SADDLE_TOL: float = float(os.getenv("SADDLE_TOL", "1e-8"))
FROBENIUS_MAX_ITER: int = int(os.getenv("FROBENIUS_MAX_ITER", "500"))
FROBENIUS_STALL_WINDOW: int = int(os.getenv("FROBENIUS_STALL_WINDOW", "5"))
FROBENIUS_STALL_TOL: float = float(os.getenv("FROBENIUS_STALL_TOL", "1e-10"))
PROJECTION_ROUNDS: int = int(os.getenv("PROJECTION_ROUNDS", "200"))
PROJECTION_TOL: float = float(os.getenv("PROJECTION_TOL", "1e-10"))

# ── Verification ─────────────────────────────────────────────────
MC_SAMPLES: int = int(os.getenv("MC_SAMPLES", "10000"))
# Samples per worker chunk; also fixes the seed partition
MC_CHUNK: int = int(os.getenv("MC_CHUNK", "2048"))
VERIFY_TOL: float = float(os.getenv("VERIFY_TOL", "1e-9"))
GRID_STEP: float = float(os.getenv("GRID_STEP", "1e-3"))
BOUNDARY_FRACTION: float = float(os.getenv("BOUNDARY_FRACTION", "0.75"))

# ── Reports ──────────────────────────────────────────────────────
REPORT_DIGITS: int = int(os.getenv("REPORT_DIGITS", "12"))
