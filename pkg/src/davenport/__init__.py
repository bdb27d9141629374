"""Multivariate Davenport series: coefficient calculus, pointwise and
multifractal regularity, and global Sobolev regularity."""
from __future__ import annotations

from .arith import HyperplaneIndex, divisors, mobius, sigma_power, tau_multi
from .coeffs import (CoefficientFamily, FBeta, FiniteSupport, Hecke, LAdic, PowerLacunary,
                     family_from_json, gamma_a_estimate, zero_family)
from .errors import DavenportError, InvalidInputError, NumericError, ResourceLimitError
from .evaluation import GridSpec, grid_eval, partial_sum, sawtooth
from .regularity import empirical_exponent, holder_exponent
from .sobolev import SobolevLabel, classify_sobolev
from .spectrum import SpectrumPrediction, empirical_spectrum, theoretical_spectrum
from .transforms import davenport_to_fourier, invert_jump, jump_operator, maximal_operator

__version__ = "0.1.0"
