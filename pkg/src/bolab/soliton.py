"""Soliton family, its derivatives, eigenfunctions, and exact integral table.

The traveling-wave profile is the algebraically decaying bump
``q(y) = 4/(1 + y^2)`` and the two-parameter family is
``q_{a,c}(x) = c*q(c*(x-a))``.  Every field here is sampled from closed
formulas; nothing is obtained by solving the profile equation
numerically.  The integral table keeps its entries symbolic (multiples
of pi and sqrt(5)) so golden tests stay self-documenting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .grid import Field, Grid, derivative, hilbert, l2_norm


GOLDEN_PLUS = (math.sqrt(5.0) - 1.0) / 2.0      # positive bound-state eigenvalue
GOLDEN_MINUS = -(math.sqrt(5.0) + 1.0) / 2.0    # negative bound-state eigenvalue


@dataclass(frozen=True)
class SolitonParams:
    """Translation/scale pair (a, c) with c > 0."""

    a: float
    c: float = 1.0

    def __post_init__(self):
        if not (self.c > 0):
            raise ConfigurationError(f"scale c must be positive, got {self.c}")


def profile(y):
    """q(y) = 4/(1+y^2)."""
    y = np.asarray(y, dtype=float)
    return 4.0 / (1.0 + y * y)


def profile_derivative(y):
    """q'(y) = -8y/(1+y^2)^2."""
    y = np.asarray(y, dtype=float)
    return -8.0 * y / (1.0 + y * y) ** 2


def profile_second_derivative(y):
    """q''(y) = (24y^2 - 8)/(1+y^2)^3."""
    y = np.asarray(y, dtype=float)
    return (24.0 * y * y - 8.0) / (1.0 + y * y) ** 3


def scaled_profile(y):
    """(y q)'(y) = 4(1-y^2)/(1+y^2)^2, the scale-direction generator."""
    y = np.asarray(y, dtype=float)
    return 4.0 * (1.0 - y * y) / (1.0 + y * y) ** 2


def scaled_profile_derivative(y):
    """(y q)''(y) = 8y(y^2-3)/(1+y^2)^3."""
    y = np.asarray(y, dtype=float)
    return 8.0 * y * (y * y - 3.0) / (1.0 + y * y) ** 3


def soliton_field(grid: Grid, p: SolitonParams) -> Field:
    """Sample c*q(c*(x-a)) exactly at the grid nodes."""
    return Field(grid, p.c * profile(p.c * (grid.nodes - p.a)))


def soliton_derivative_field(grid: Grid, p: SolitonParams) -> Field:
    """d/dx of the soliton, sampled from the closed formula."""
    return Field(grid, p.c ** 2 * profile_derivative(p.c * (grid.nodes - p.a)))


def soliton_scale_field(grid: Grid, p: SolitonParams) -> Field:
    """d/dc of the soliton = q(c(x-a)) + c(x-a) q'(c(x-a))."""
    z = p.c * (grid.nodes - p.a)
    return Field(grid, scaled_profile(z))


def soliton_residual(p: SolitonParams, grid: Grid) -> float:
    """L2 norm of c*q_{a,c} - H(q_{a,c}') - q_{a,c}^2/2 on the grid."""
    q = soliton_field(grid, p)
    res = p.c * q - hilbert(derivative(q)) - 0.5 * q * q
    return l2_norm(res)


def eigenfunction_field(grid: Grid, sign: str):
    """Bound-state eigenfunction and eigenvalue of the linearized operator.

    sign "+" gives the positive eigenvalue (sqrt(5)-1)/2, sign "-" the
    negative one -(sqrt(5)+1)/2; both eigenfunctions are even.
    """
    if sign not in ("+", "-"):
        raise ConfigurationError(f"sign must be '+' or '-', got {sign!r}")
    y = grid.nodes
    if sign == "+":
        coef = (-math.sqrt(5.0) - 1.0) / 2.0
        lam = GOLDEN_PLUS
    else:
        coef = (math.sqrt(5.0) - 1.0) / 2.0
        lam = GOLDEN_MINUS
    e = Field(grid, profile(y) + coef * scaled_profile(y))
    return e, lam


@dataclass(frozen=True)
class ClosedFormTable:
    """Exact quantities used by golden tests and the modulation solver."""

    normQ_sq: float                 # ||q||_L2^2
    norm_yQprime_sq: float          # ||(yq)'||_L2^2
    inner_yQprime_Q: float          # <(yq)', q>
    norm_eminus_combo_sq: float     # ||q + ((sqrt5-1)/2)(yq)'||_L2^2
    int_z2_Q_Qpp: float             # int z^2 q(z) q''(z) dz
    cos2_beta: float                # alignment of (yq)' with the negative mode
    lambda_plus: float
    lambda_minus: float

    def normQprime_c_sq(self, c: float) -> float:
        """||d/dx q_{a,c}||_L2^2 = 4*pi*c^3."""
        return 4.0 * math.pi * c ** 3


def closed_form_table() -> ClosedFormTable:
    return ClosedFormTable(
        normQ_sq=8.0 * math.pi,
        norm_yQprime_sq=4.0 * math.pi,
        inner_yQprime_Q=4.0 * math.pi,
        norm_eminus_combo_sq=2.0 * (5.0 + math.sqrt(5.0)) * math.pi,
        int_z2_Q_Qpp=4.0 * math.pi,
        cos2_beta=0.5 + math.sqrt(5.0) / 10.0,
        lambda_plus=GOLDEN_PLUS,
        lambda_minus=GOLDEN_MINUS,
    )
