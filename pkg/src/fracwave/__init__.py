"""Radial wave equations with an inverse-square potential in fractional effective dimension."""

from .exponents import (ExponentSet, LawForm, LifespanLaw, ParameterError, ProblemParams,
                        classify_regime, dimension_shift, exponent_set, lifespan_law)
from .kernel import KernelTable, eval_kernel, kernel_table
from .linear import SolutionField, SpacetimePoint, solve_linear
from .profiles import RadialProfile, SourceField, bump
from .quadrature import QuadratureConfig, QuadratureError

__version__ = "0.1.0"
