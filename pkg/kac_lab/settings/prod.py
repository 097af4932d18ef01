from .base import *

# Acceptance-scale sizes. Runs at these sizes take minutes, not seconds.

DEFAULT_STEP = 1e-4
DEFAULT_PATHS = 100_000
BLOCK_SIZE = 4096
KATO_QUADRATURE_N = 16_384

WORKERS = int(os.getenv("KAC_LAB_WORKERS", "4"))
