"""Hyperbolic torus automorphisms: matrices, spectra, entropies, generators."""

__version__ = "0.1.0"

from .errors import AnosovError, CapacityError, InvalidInputError, NumericError  # noqa: E402
from .matrix_core import (  # noqa: E402
    IntegerMatrix, build_mixmax, cat_map, determinant_exact, rcarry_companion, verify_c_condition,
)
from .spectrum import Spectrum, classify, eigenvalues_mixmax_analytic, eigenvalues_numeric  # noqa: E402
from .entropy import entropy, r2_split, r_tuple, relaxation_time, s_total  # noqa: E402
