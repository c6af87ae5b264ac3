import math
import os


class Config:
    """Shared configuration for the library, the CLI and the HTTP service"""

    PROBABILITY_TOLERANCE = float(os.getenv("PROBABILITY_TOLERANCE", "1e-9"))
    VIOLATION_TOLERANCE = float(os.getenv("VIOLATION_TOLERANCE", "1e-9"))

    # Largest e_c of the extrapolation ladder h, h/2, h/4
    RICHARDSON_STEP = float(os.getenv("RICHARDSON_STEP", "1e-2"))
    MARGIN_BAND = float(os.getenv("MARGIN_BAND", "1e-4"))

    DEFAULT_SEED = int(os.getenv("DEFAULT_SEED", "20240101"))
    DEFAULT_TRIALS = int(os.getenv("DEFAULT_TRIALS", "500"))
    SHARD_SIZE = int(os.getenv("SHARD_SIZE", "50"))
    JOBS = int(os.getenv("JOBS", "1"))

    API_HOST = os.getenv("API_HOST", "0.0.0.0")
    API_PORT = int(os.getenv("API_PORT", "8000"))

    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")


ML_I3322_BOUND = 1 / 5
TSIRELSON_BIAS = 1 / math.sqrt(2)
REGION_Q2_MAX = 0.3
