"""Phase-space grids and the u-quadrature Wigner transform.

Every pulsed state in this package has the form

    W(X, P) = 1/(2 pi) * int exp(iPu) K(X, u) <X - u/2| rho_i |X + u/2> du

with a Gaussian ``rho_i`` and a kernel ``K``.  The integral is done with
Gauss-Legendre nodes on ``[-U, U]``; for each block of X rows it reduces to
one complex matrix product against ``exp(iPu)``.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre

from .errors import AccuracyError, DomainError, PreconditionError
from .gaussian import GaussianState, matrix_element

IMAG_TOL = 1e-8
_ROW_BLOCK = 16      # fixed so results do not depend on the worker count
_COL_BLOCK = 1024


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """Rectangular lattice of ``n_x`` by ``n_p`` nodes including the bounds."""

    x_min: float
    x_max: float
    p_min: float
    p_max: float
    n_x: int = 241
    n_p: int = 241

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.p_max > self.p_min):
            raise DomainError("grid bounds must satisfy max > min")
        if self.n_x < 2 or self.n_p < 2:
            raise DomainError("grid needs at least two points per axis")

    @property
    def x(self):
        return np.linspace(self.x_min, self.x_max, self.n_x)

    @property
    def p(self):
        return np.linspace(self.p_min, self.p_max, self.n_p)

    @property
    def dx(self):
        return (self.x_max - self.x_min) / (self.n_x - 1)

    @property
    def dp(self):
        return (self.p_max - self.p_min) / (self.n_p - 1)

    @property
    def cell(self):
        return self.dx * self.dp

    def is_x_symmetric(self, rtol=1e-12):
        return abs(self.x_min + self.x_max) <= rtol * max(1.0, self.x_max - self.x_min)

    @classmethod
    def from_spacing(cls, x_min, x_max, p_min, p_max, spacing):
        """Grid with nodes on ``x_min + k*spacing``; upper bounds are rounded up."""
        n_x = int(math.ceil((x_max - x_min) / spacing - 1e-9)) + 1
        n_p = int(math.ceil((p_max - p_min) / spacing - 1e-9)) + 1
        return cls(x_min, x_min + (n_x - 1) * spacing,
                   p_min, p_min + (n_p - 1) * spacing, n_x, n_p)

    def to_dict(self):
        return asdict(self)


@dataclass
class WignerGrid:
    """Real Wigner samples on a grid, ``values[i, j] = W(x[i], p[j])``."""

    grid: PhaseSpaceGrid
    values: np.ndarray
    max_imag_residual: float = 0.0
    normalization_ok: bool = True
    meta: dict = field(default_factory=dict)

    @property
    def total(self):
        return float(self.values.sum() * self.grid.cell)

    def value_at(self, x, p):
        """Value at the node nearest to ``(x, p)``."""
        i = int(np.argmin(np.abs(self.grid.x - x)))
        j = int(np.argmin(np.abs(self.grid.p - p)))
        return float(self.values[i, j])


@dataclass(frozen=True)
class QuadratureSettings:
    """Controls the u-integral.

    ``nodes=None`` picks the node count from the largest phase rate the
    integrand can carry on the requested P range, never fewer than
    ``min_nodes``.  The integration window is ``cutoff * sqrt(2 V_X / d)``,
    where the Gaussian factor has fallen to ``exp(-cutoff**2)``.
    """

    nodes: int | None = None
    cutoff: float = 8.0
    min_nodes: int = 257
    node_density: float = 1.2
    photon_tail: float = 1e-10

    def to_dict(self):
        return asdict(self)


def u_limit(state: GaussianState, cutoff=8.0):
    return cutoff * math.sqrt(2 * state.var_x / state.det)


@lru_cache(maxsize=32)
def _unit_nodes(n):
    t, w = roots_legendre(n)
    return t, w


def gauss_legendre(n, u_max):
    t, w = _unit_nodes(int(n))
    return u_max * t, u_max * w


def node_count(state, kernel, p_abs_max, x_abs_max, quad: QuadratureSettings):
    """Gauss-Legendre nodes for the requested window and phase-rate bound."""
    if quad.nodes is not None:
        return int(quad.nodes)
    u_max = u_limit(state, quad.cutoff)
    kick = kernel.params.mu * kernel.max_photons(quad.photon_tail)
    rate = (p_abs_max + kick + abs(state.p_mean)
            + abs(state.cov_xp / state.var_x) * (x_abs_max + abs(state.x_mean)))
    n = max(quad.min_nodes, int(math.ceil(quad.node_density * u_max * rate)))
    return n | 1   # odd, so u = 0 is a node


def _integrand_rows(kernel, state, xs, u, w):
    xs = xs[:, None]
    return kernel(xs, u[None, :]) * matrix_element(state, xs, u[None, :]) * w[None, :]


def _transform_block(rows, u, ps):
    out = np.empty((rows.shape[0], ps.size), dtype=complex)
    for j0 in range(0, ps.size, _COL_BLOCK):
        pj = ps[j0:j0 + _COL_BLOCK]
        out[:, j0:j0 + pj.size] = rows @ np.exp(1j * np.outer(u, pj))
    return out / (2 * math.pi)


def compute_wigner(grid: PhaseSpaceGrid, kernel, state: GaussianState,
                   quad: QuadratureSettings | None = None, *, workers=1,
                   norm_tol=1e-3) -> WignerGrid:
    """Wigner function of the post-interaction state on ``grid``.

    ``kernel`` is any callable ``kernel(x, u)`` with a ``params`` attribute
    and a ``max_photons(tail)`` method (see :mod:`optowigner.kernels`).
    Raises :class:`AccuracyError` when the discarded imaginary part exceeds
    ``1e-8``; a total outside ``1 +- norm_tol`` only sets a warning flag.
    """
    quad = quad or QuadratureSettings()
    xs, ps = grid.x, grid.p
    p_abs = max(abs(grid.p_min), abs(grid.p_max))
    x_abs = max(abs(grid.x_min), abs(grid.x_max))
    n_u = node_count(state, kernel, p_abs, x_abs, quad)
    u_max = u_limit(state, quad.cutoff)
    u, w = gauss_legendre(n_u, u_max)

    blocks = [slice(i, min(i + _ROW_BLOCK, xs.size)) for i in range(0, xs.size, _ROW_BLOCK)]

    def work(sl):
        return _transform_block(_integrand_rows(kernel, state, xs[sl], u, w), u, ps)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(work, blocks))
    else:
        parts = [work(sl) for sl in blocks]
    full = np.vstack(parts)
    imag = float(np.max(np.abs(full.imag)))
    if imag > IMAG_TOL:
        raise AccuracyError(f"imaginary residual {imag:.3e} exceeds {IMAG_TOL}; "
                            "kernel is not conjugation-symmetric")
    values = np.ascontiguousarray(full.real)
    total = float(values.sum() * grid.cell)
    ok = bool(abs(total - 1.0) <= norm_tol)
    if not ok:
        warnings.warn(f"Wigner total {total:.6f} outside 1 +- {norm_tol}; grid too small?",
                      RuntimeWarning, stacklevel=2)
    meta = {"quadrature": {**quad.to_dict(), "nodes_used": n_u, "u_max": u_max},
            "kernel": kernel.describe(), "state": state.to_dict(),
            "params": kernel.params.to_dict()}
    return WignerGrid(grid, values, imag, ok, meta)


def wigner_at(kernel, state: GaussianState, x, p, quad: QuadratureSettings | None = None,
              n_u=None):
    """Wigner value at scattered points ``(x, p)`` (broadcast together)."""
    quad = quad or QuadratureSettings()
    x, p = np.broadcast_arrays(np.asarray(x, float), np.asarray(p, float))
    if n_u is None:
        n_u = node_count(state, kernel, float(np.max(np.abs(p), initial=0.0)),
                         float(np.max(np.abs(x), initial=0.0)), quad)
    u, w = gauss_legendre(n_u, u_limit(state, quad.cutoff))
    flat_x, flat_p = x.ravel(), p.ravel()
    rows = _integrand_rows(kernel, state, flat_x, u, w)
    vals = np.einsum("ij,ij->i", rows, np.exp(1j * flat_p[:, None] * u[None, :]))
    return (vals.real / (2 * math.pi)).reshape(x.shape)


def default_grid(state: GaussianState, kernel, n_x=241, n_p=241, spacing=None,
                 mass_tail=1e-6):
    """Grid covering the state after the momentum kicks.

    X spans 6 standard deviations (the kernels leave the position marginal
    untouched).  P runs from below the initial distribution to above the
    largest kick ``mu * n`` that carries photon weight above ``mass_tail``,
    plus the exponential tail of the single-photon kick spectrum, which
    decays like ``exp(-4 P / mu)`` near the cavity resonance.
    With ``spacing`` the node counts follow from the bounds instead.
    """
    sx, sp = math.sqrt(state.var_x), math.sqrt(state.var_p)
    half = 6 * sx
    x0 = state.x_mean
    p_lo = state.p_mean - max(4.0, 6 * sp)
    mu = kernel.params.mu
    kick = mu * kernel.max_photons(mass_tail)
    tail = 0.25 * mu * 1.5 * math.log(1.0 / mass_tail) if kick > 0 else 0.0
    p_hi = state.p_mean + max(12.0, 4.0 + kick + tail + 6 * sp)
    if spacing is not None:
        n_half = int(math.ceil(half / spacing))
        return PhaseSpaceGrid.from_spacing(x0 - n_half * spacing, x0 + n_half * spacing,
                                           p_lo, p_hi, spacing)
    return PhaseSpaceGrid(x0 - half, x0 + half, p_lo, p_hi, n_x, n_p)


GRID_PRESETS = {
    "default": {"n_x": 241, "n_p": 241},
    "paper-repro": {"spacing": 0.05},
}


def preset_grid(name, state, kernel):
    try:
        opts = GRID_PRESETS[name]
    except KeyError:
        raise DomainError(f"unknown grid preset {name!r}; valid: {sorted(GRID_PRESETS)}")
    return default_grid(state, kernel, **opts)


def marginal(w: WignerGrid, axis="X"):
    """Trapezoidal marginal; ``axis`` names the variable that is kept."""
    if axis in ("X", "x"):
        return np.trapezoid(w.values, dx=w.grid.dp, axis=1)
    if axis in ("P", "p"):
        return np.trapezoid(w.values, dx=w.grid.dx, axis=0)
    raise DomainError("axis must be 'X' or 'P'")


def symmetry_check(w: WignerGrid):
    """Largest ``|W(X, P) - W(-X, P)|`` on an X-symmetric grid."""
    if not w.grid.is_x_symmetric():
        raise PreconditionError("grid is not symmetric about X = 0")
    return float(np.max(np.abs(w.values - w.values[::-1, :])))


def write_csv(w: WignerGrid, path):
    """``X,P,W`` rows, X-major, 17 significant digits."""
    X, P = np.meshgrid(w.grid.x, w.grid.p, indexing="ij")
    data = np.column_stack([X.ravel(), P.ravel(), w.values.ravel()])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header="X,P,W", comments="")


def read_csv(path, grid: PhaseSpaceGrid):
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    return WignerGrid(grid, data[:, 2].reshape(grid.n_x, grid.n_p))
