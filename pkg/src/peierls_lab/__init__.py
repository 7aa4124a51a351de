"""Discrete covariant Poisson brackets for scalar field theory on a 1+1 lattice.

The package builds retarded and advanced propagators for linearized
Euler-Lagrange operators on a periodic space-time grid, the bracket of
functionals they induce, and checkers for the algebraic and causal
properties the bracket should satisfy.
"""
from .fields import Density, FieldConfig, TestFunction, random_field
from .functionals import DomainError, Functional, LocalTerm
from .geometry import GeometryError, GridSpacetime, MetricField, causal_future, causal_past
from .hyperbolic import LinearHypOp, NotHyperbolic
from .lagrangian import GeneralizedLagrangian, epsilon_model, free_field, linearize
from .microcausal import ConeFamily, CovectorTuple
from .peierls import BracketContext, advanced_product, peierls_bracket, retarded_product

__version__ = "0.1.0"

__all__ = [
    "BracketContext",
    "ConeFamily",
    "CovectorTuple",
    "Density",
    "DomainError",
    "FieldConfig",
    "Functional",
    "GeneralizedLagrangian",
    "GeometryError",
    "GridSpacetime",
    "LinearHypOp",
    "LocalTerm",
    "MetricField",
    "NotHyperbolic",
    "TestFunction",
    "advanced_product",
    "causal_future",
    "causal_past",
    "epsilon_model",
    "free_field",
    "linearize",
    "peierls_bracket",
    "random_field",
    "retarded_product",
]
