import os

# Settings for the kac_lab project
#
# For simplicity, this file contains only settings considered important or
# commonly used. Every value here is echoed into the run manifest, so changing
# a default is visible in every artifact produced afterwards.

LAB_NAME = "kac_lab"

# Command modules resolved by the CLI
COMMANDS_MODULE = "commands"

# Geometry: points within this distance of a topological boundary are treated
# as boundary points by complement_interior
DELTA_GEOM = 1e-12

# Potentials
COULOMB_CAP = 1e6
HERMITIAN_TOL = 1e-12

# Path engine
BLOCK_SIZE = 2048
DEFAULT_STEP = 1e-3
DEFAULT_PATHS = 10_000
ANTITHETIC = False

# Number of worker processes; the --workers flag takes precedence
WORKERS = int(os.getenv("KAC_LAB_WORKERS", "1"))

# Discretization budget c * sqrt(h) for Lipschitz-domain agreement tests.
# Calibrated on the half-line against the erf oracle (see calibrate_budget).
BUDGET_CONSTANT = 0.5

# Verdict thresholds, in paired standard errors
IRREGULAR_SIGMAS = 5.0
REGULAR_SIGMAS = 3.0

# Kato probe
KATO_QUADRATURE_N = 4096
KATO_TIME_NODES = 32
KATO_REFINE_RTOL = 1e-3

# Grid / semigroup application
SEMIGROUP_TOL = 1e-10
KRYLOV_MAX_DIM = 600
