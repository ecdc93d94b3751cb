"""Shared numerical tolerances and configuration defaults.

All operational tolerances live here so that experiment configs can
override them in one place.
"""

# Relative scale below which a matrix is accepted as self-adjoint / PSD.
HERM_TOL = 1e-10

# Eigenvalues of nominally-PSD matrices are clipped at -EIG_CLIP * ||a||_inf
# before fractional powers; anything more negative is an input error.
EIG_CLIP = 1e-10

# Default slack allowed when checking operator inequalities on random data.
PSD_SLACK = 1e-9

# Residual accepted for partition-of-unity identities.
PARTITION_TOL = 1e-8

# Sector half-width constant c in the directional frequency sectors; chosen
# so that sectors 1 .. 2^(m-1)-1 are pairwise disjoint for every m >= 2.
SECTOR_C = 0.25

# Index-separation threshold for the microlocal overlap audit.
OVERLAP_SEP = 1000

# Practical admissibility margin for gaussian boundary majorants exp(b*y^2).
GAUSS_BETA_MAX = 4.9348022005446790  # pi^2 / 2

# Absolute tolerance on the exponent of the interpolation constant.
INTERP_EXP_TOL = 1e-8

# Default environment variable controlling experiment output root.
OUT_ENV_VAR = "NCFLAB_OUT"
