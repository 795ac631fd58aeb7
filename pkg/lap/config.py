"""Defaults shared by the library and the command line."""
import os

# Probability sums and envelope identities
MASS_TOL = 1e-12
# Generic comparisons (utilities, revenues)
TOL = 1e-9
# Relative slack used when comparing candidate revenues for argmax ties
TIE_TOL = 1e-12

FOUR_SEVENTHS = 4.0 / 7.0
TWO_THIRDS = 2.0 / 3.0

LP_MAX_PROFILES = 10_000
LP_TOL = 1e-7

DEFAULT_SEED = 0
DEFAULT_CORPUS_SIZE = 200
DEFAULT_MAX_BIDDERS = 3
DEFAULT_MAX_SUPPORT = 5
DEFAULT_VALUE_RANGE = (1.0, 10.0)

DEFAULT_GRID_STEP = 0.02
DEFAULT_RMAX = 20.0

DEFAULT_EPS = 0.01
DEFAULT_EPS1 = 0.001
DEFAULT_EPS2 = 0.05
LADDER_EPS1 = (0.1, 0.02, 0.005, 0.001)
EQUAL_REVENUE_RATIO = 1.25
CORRELATED_MAX_JUMPS = 3

EQ1_GRID_POINTS = 1000

DEFAULTS = {
    "seed": DEFAULT_SEED,
    "corpus_size": DEFAULT_CORPUS_SIZE,
    "grid_step": DEFAULT_GRID_STEP,
    "rmax": DEFAULT_RMAX,
    "eps": DEFAULT_EPS,
    "eps1": DEFAULT_EPS1,
    "eps2": DEFAULT_EPS2,
    "max_jumps": None,
}


def output_dir():
    """
    Directory for artefacts written under a bare file name

    Returns:
        str: value of LAP_OUTPUT_DIR, or the current directory
    """
    return os.environ.get("LAP_OUTPUT_DIR", ".")
