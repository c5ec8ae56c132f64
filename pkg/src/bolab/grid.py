"""Periodic grid, Fourier-multiplier operators and norms.

Everything downstream works on a uniform grid over [-L/2, L/2) with
spectral (FFT-based) realizations of the Hilbert transform, fractional
derivatives |xi|^s, the regularizing inverse (1 + gamma*d/dy)^{-1}, and
the Plancherel-consistent Sobolev norms.

All multiplier operators act through the real FFT, so real-valuedness of
fields is preserved structurally.  Odd symbols (i*sgn(xi), i*xi) are set
to zero on the Nyquist mode; complex symbols keep only their real part
there, which is the unique choice consistent with a real transform.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError, UsageError


class Grid:
    """Uniform periodic grid on [-L/2, L/2) with its wavenumber table.

    Attributes:
        n_points: number of nodes (power of two, >= 8).
        domain_length: box length L.
        spacing: L / n_points.
        nodes: node coordinates, nodes[j] = -L/2 + j*spacing.
        wavenumbers: 2*pi*m/L in standard FFT ordering (full spectrum).
    """

    __slots__ = ("n_points", "domain_length", "spacing", "nodes",
                 "wavenumbers", "rfft_wavenumbers")

    def __init__(self, n_points: int, domain_length: float):
        if n_points < 8 or (n_points & (n_points - 1)) != 0:
            raise ConfigurationError(
                f"n_points must be a power of two >= 8, got {n_points}")
        if not (domain_length > 0):
            raise ConfigurationError(
                f"domain_length must be positive, got {domain_length}")
        self.n_points = int(n_points)
        self.domain_length = float(domain_length)
        self.spacing = self.domain_length / self.n_points
        self.nodes = -self.domain_length / 2 + self.spacing * np.arange(self.n_points)
        self.nodes.setflags(write=False)
        self.wavenumbers = 2 * np.pi * np.fft.fftfreq(self.n_points, d=self.spacing)
        self.wavenumbers.setflags(write=False)
        self.rfft_wavenumbers = 2 * np.pi * np.fft.rfftfreq(self.n_points, d=self.spacing)
        self.rfft_wavenumbers.setflags(write=False)

    def __eq__(self, other):
        return (isinstance(other, Grid)
                and other.n_points == self.n_points
                and other.domain_length == self.domain_length)

    def __hash__(self):
        return hash((self.n_points, self.domain_length))

    def __repr__(self):
        return f"Grid(n_points={self.n_points}, domain_length={self.domain_length})"

    def key(self):
        return (self.n_points, self.domain_length)


def make_grid(n_points: int, domain_length: float) -> Grid:
    """Build a periodic grid with nodes x_j = -L/2 + j*L/N."""
    return Grid(n_points, domain_length)


class Field:
    """Real-valued function sampled on a Grid.

    Values are validated to be finite at construction and stored
    read-only; operators return new Field instances.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n_points,):
            raise UsageError(
                f"field length {values.shape} does not match grid ({grid.n_points},)")
        if not np.all(np.isfinite(values)):
            raise UsageError("field contains NaN or Inf")
        self.grid = grid
        self.values = values
        self.values.setflags(write=False)

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "Field":
        return cls(grid, fn(grid.nodes))

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.n_points))

    def copy_with(self, values) -> "Field":
        return Field(self.grid, values)

    # Small pointwise algebra layer; keeps tests and diagnostics readable.
    def __add__(self, other):
        return Field(self.grid, self.values + _coerce(other, self.grid))

    __radd__ = __add__

    def __sub__(self, other):
        return Field(self.grid, self.values - _coerce(other, self.grid))

    def __rsub__(self, other):
        return Field(self.grid, _coerce(other, self.grid) - self.values)

    def __mul__(self, other):
        return Field(self.grid, self.values * _coerce(other, self.grid))

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self.values)

    def __repr__(self):
        return f"Field(n={self.grid.n_points}, L={self.grid.domain_length})"


def _coerce(other, grid):
    if isinstance(other, Field):
        if other.grid != grid:
            raise UsageError("fields live on different grids")
        return other.values
    return other


def _check_same_grid(*fields):
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise UsageError("fields live on different grids")
    return g


# ---------------------------------------------------------------------------
# spectral multipliers
# ---------------------------------------------------------------------------

def apply_multiplier(f: Field, symbol) -> Field:
    """Apply a Fourier multiplier given as symbol(xi) on the rfft half-axis.

    The Nyquist entry of a complex symbol is replaced by its real part:
    a real transform cannot carry an imaginary Nyquist component.
    """
    m = np.asarray(symbol, dtype=complex).copy()
    if m.shape != f.grid.rfft_wavenumbers.shape:
        raise UsageError("symbol length does not match rfft spectrum")
    m[-1] = m[-1].real
    out = np.fft.irfft(m * np.fft.rfft(f.values), n=f.grid.n_points)
    return Field(f.grid, out)


def hilbert(f: Field) -> Field:
    """Hilbert transform: multiplier i*sgn(xi), zero mode and Nyquist -> 0."""
    xi = f.grid.rfft_wavenumbers
    sym = np.where(xi > 0, 1j, 0.0)
    return apply_multiplier(f, sym)


def derivative(f: Field, order: int = 1) -> Field:
    """Spectral d^k/dy^k; odd orders are zeroed on the Nyquist mode."""
    xi = f.grid.rfft_wavenumbers
    sym = (1j * xi) ** order
    if order % 2 == 1:
        sym = sym.copy()
        sym[-1] = 0.0
    return apply_multiplier(f, sym)


def fractional_derivative(f: Field, s: float) -> Field:
    """|xi|^s multiplier; for s < 0 the zero mode is set to 0."""
    if s < -0.5:
        raise ConfigurationError(f"fractional order {s} below supported floor -1/2")
    xi = f.grid.rfft_wavenumbers
    if s >= 0:
        sym = xi ** s if s != 0 else np.ones_like(xi)
    else:
        sym = np.zeros_like(xi)
        sym[1:] = xi[1:] ** s
    return apply_multiplier(f, sym)


def dgamma_inverse(f: Field, gamma: float) -> Field:
    """(1 + gamma*d/dy)^{-1}: multiplier (1 + i*gamma*xi)^{-1}; output real."""
    if not (gamma > 0):
        raise ConfigurationError(f"gamma must be positive, got {gamma}")
    xi = f.grid.rfft_wavenumbers
    return apply_multiplier(f, 1.0 / (1.0 + 1j * gamma * xi))


def dgamma_inverse_adjoint(f: Field, gamma: float) -> Field:
    """L2 adjoint of dgamma_inverse: multiplier (1 - i*gamma*xi)^{-1}."""
    if not (gamma > 0):
        raise ConfigurationError(f"gamma must be positive, got {gamma}")
    xi = f.grid.rfft_wavenumbers
    return apply_multiplier(f, 1.0 / (1.0 - 1j * gamma * xi))


def translate(f: Field, shift: float) -> Field:
    """Sampled f(y + shift) via the spectral shift multiplier."""
    xi = f.grid.rfft_wavenumbers
    return apply_multiplier(f, np.exp(1j * xi * shift))


# ---------------------------------------------------------------------------
# quadrature and norms
# ---------------------------------------------------------------------------

def integral(f: Field) -> float:
    """Trapezoid (= spectral) quadrature of f over the periodic box."""
    return float(f.grid.spacing * np.sum(f.values))


def inner(f: Field, g: Field) -> float:
    """L2 inner product by periodic trapezoid quadrature."""
    _check_same_grid(f, g)
    return float(f.grid.spacing * np.sum(f.values * g.values))


def l2_norm(f: Field) -> float:
    return float(np.sqrt(f.grid.spacing) * np.linalg.norm(f.values))


def sobolev_norm(f: Field, s: float) -> float:
    """H^s norm: (sum <xi>^{2s} |f_hat|^2 * weight)^{1/2}.

    The Plancherel weight L/N^2 (doubled off the DC/Nyquist bins of the
    half spectrum) makes s = 0 agree with the quadrature of f^2.
    """
    g = f.grid
    spec = np.fft.rfft(f.values)
    w = np.full(spec.shape, 2.0)
    w[0] = 1.0
    if g.n_points % 2 == 0:
        w[-1] = 1.0
    bracket = (1.0 + g.rfft_wavenumbers ** 2) ** s
    total = np.sum(w * bracket * np.abs(spec) ** 2) * g.domain_length / g.n_points ** 2
    return float(np.sqrt(total))


def weighted_l2_norm(f: Field, power: float) -> float:
    """L2 norm of <y>^power * f with <y> = (1 + y^2)^{1/2}."""
    w = (1.0 + f.grid.nodes ** 2) ** (power / 2.0)
    return float(np.sqrt(f.grid.spacing) * np.linalg.norm(w * f.values))


def cell_l2_profile(f: Field):
    """Per-unit-cell L2 norms: values ||f||_{L2[n, n+1)} for integer n.

    Cells are integer intervals [n, n+1).  When 1/spacing is an integer the
    quadrature is the per-cell trapezoid rule (cell boundaries fall on
    nodes); otherwise samples are binned with uniform weight.

    Returns (cell_starts, cell_norms) as arrays.
    """
    g = f.grid
    x = g.nodes
    v2 = f.values ** 2
    per = 1.0 / g.spacing
    n_lo = int(np.floor(x[0]))
    cells = np.floor(x).astype(int) - n_lo
    n_cells = int(np.floor(x[-1])) - n_lo + 1
    masses = np.bincount(cells, weights=v2, minlength=n_cells) * g.spacing
    aligned = (abs(per - round(per)) < 1e-9
               and abs(x[0] - round(x[0])) < 1e-9 * max(1.0, abs(x[0])))
    if aligned:
        # trapezoid correction: boundary nodes carry half weight in each cell
        k = int(round(per))
        idx = np.arange(0, g.n_points, k)   # nodes sitting on cell boundaries
        contrib = 0.5 * g.spacing * v2[idx]
        masses[cells[idx]] -= contrib
        left = cells[idx] - 1
        np.add.at(masses, left[left >= 0], contrib[left >= 0])
        # the last cell's right boundary is the (periodic) first node
        masses[-1] += 0.5 * g.spacing * v2[0]
    starts = n_lo + np.arange(n_cells)
    return starts, np.sqrt(np.maximum(masses, 0.0))


def local_sup_norm(f: Field) -> float:
    """sup over integer n of ||f||_{L2[n, n+1)}."""
    if f.grid.spacing > 0.25 + 1e-12:
        raise ConfigurationError(
            f"grid spacing {f.grid.spacing} too coarse for unit-cell norms (need <= 1/4)")
    _, norms = cell_l2_profile(f)
    return float(np.max(norms))


# ---------------------------------------------------------------------------
# localizer
# ---------------------------------------------------------------------------

class LocalizerSpec:
    """Arctan localizer parameters: scale gamma in (0, 1], center y0."""

    __slots__ = ("gamma", "y_center")

    def __init__(self, gamma: float, y_center: float = 0.0):
        if not (0 < gamma <= 1):
            raise ConfigurationError(f"localizer gamma must be in (0, 1], got {gamma}")
        self.gamma = float(gamma)
        self.y_center = float(y_center)

    def __repr__(self):
        return f"LocalizerSpec(gamma={self.gamma}, y_center={self.y_center})"


def localizer(spec: LocalizerSpec, grid: Grid):
    """Sampled (g, g') with g = arctan(gamma*(y - y0))/gamma, g' = <gamma*(y-y0)>^{-2}."""
    z = spec.gamma * (grid.nodes - spec.y_center)
    g = Field(grid, np.arctan(z) / spec.gamma)
    gp = Field(grid, 1.0 / (1.0 + z ** 2))
    return g, gp
