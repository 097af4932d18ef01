from .base import *

# Quick sizes for local work and the default test run

DEFAULT_STEP = 1e-3
DEFAULT_PATHS = 10_000
KATO_QUADRATURE_N = 2048
