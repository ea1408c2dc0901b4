# settings.py
# Default tolerances and environment configuration for the skewability tools

import os

from errors import ConfigurationError

# Environment variable holding the default RNG seed for the PD search
SEED_ENV_VAR = "SKEWABLE_SEED"

# Numerical-rank / null-space cutoff, relative to the largest singular value
NULL_TOL = 1e-10
RANK_TOL = 1e-10

# Smallest accepted eigenvalue of A, relative to its spectral norm
EPS_PD = 1e-8

# Verification of U^-1 S U + (U^-1 S U)^T = 0, relative to max(1, ||X||_F)
SKEW_TOL = 1e-8

# Quick-reject tolerance for trace and spectrum checks, relative to ||S||_F
REJECT_TOL = 1e-6

# Projected subgradient search
RESTARTS = 20
ITERATIONS = 500

# Reject a frame change whose smallest singular value is below this * largest
COND_RTOL = 1e-12

# Symmetry required of square-root input
SQRT_SYM_TOL = 1e-10

# Orthogonality defect accepted by the equivalence tools
ORTHO_TOL = 1e-8


def default_seed():
    """Read the default seed from the environment (0 when unset)"""
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None or raw.strip() == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigurationError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}")
