"""Negativity measures: negative volume, minima, thermal smoothing and depth."""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict, replace

import numpy as np
from scipy.optimize import minimize

from .errors import DomainError, PreconditionError
from .wigner import PhaseSpaceGrid, WignerGrid, wigner_at


@dataclass(frozen=True)
class NegativityReport:
    delta: float
    min_value: float
    min_location: tuple
    neg_to_pos_ratio: float

    def to_dict(self):
        out = asdict(self)
        out["min_location"] = list(self.min_location)
        return out


def negative_volume(w: WignerGrid) -> NegativityReport:
    """``delta = sum|W| dA - sum W dA`` together with the grid minimum.

    Subtracting the grid's own total instead of 1 keeps the truncation
    error of the grid out of ``delta``.
    """
    v = w.values
    cell = w.grid.cell
    total = float(v.sum() * cell)
    delta = max(0.0, float(np.abs(v).sum() * cell) - total)
    i, j = np.unravel_index(int(np.argmin(v)), v.shape)
    positive = total + 0.5 * delta
    ratio = 0.5 * delta / positive if positive > 0 else math.inf
    return NegativityReport(delta, float(v[i, j]),
                            (float(w.grid.x[i]), float(w.grid.p[j])), ratio)


def refine_minimum(w: WignerGrid, kernel, state, quad=None, start=None, n_u=None):
    """Continuous minimum of the pulsed Wigner function near a grid minimum.

    Starts a Nelder-Mead search at ``start`` (default: the grid minimum) and
    evaluates the Wigner function directly by quadrature.  Returns
    ``(value, (x, p))``.
    """
    if start is None:
        start = negative_volume(w).min_location
    scale = np.array([w.grid.dx, w.grid.dp])

    def f(z):
        return float(wigner_at(kernel, state, z[0], z[1], quad, n_u))

    res = minimize(f, np.asarray(start, float), method="Nelder-Mead",
                   options={"xatol": 1e-5, "fatol": 1e-12,
                            "initial_simplex": [start, start + np.array([scale[0], 0]),
                                                start + np.array([0, scale[1]])]})
    return float(res.fun), (float(res.x[0]), float(res.x[1]))


def _pad_cells(tau, step):
    return int(math.ceil(6.0 * math.sqrt(tau) / step)) if tau > 0 else 0


def thermal_convolve(w: WignerGrid, tau_th: float) -> WignerGrid:
    """Add ``tau_th`` thermal phonons: Gaussian smoothing with variance ``tau_th`` per axis.

    The grid is zero-padded by ``6 sqrt(tau_th)`` on every side and the
    returned grid covers the padded region.  The product with the exact
    Gaussian transfer function is done by FFT, so the total is conserved.
    """
    if not math.isfinite(tau_th) or tau_th < 0:
        raise DomainError("tau_th must be a finite number >= 0")
    if tau_th == 0:
        return replace(w, values=w.values.copy(), meta={**w.meta, "tau_th": 0.0})
    g = w.grid
    ax, ap = _pad_cells(tau_th, g.dx), _pad_cells(tau_th, g.dp)
    padded = np.pad(w.values, ((ax, ax), (ap, ap)))
    nx, npp = padded.shape
    kx = 2 * np.pi * np.fft.fftfreq(nx, d=g.dx)
    kp = 2 * np.pi * np.fft.rfftfreq(npp, d=g.dp)
    transfer = np.exp(-0.5 * tau_th * (kx[:, None] ** 2 + kp[None, :] ** 2))
    out = np.fft.irfft2(np.fft.rfft2(padded) * transfer, s=padded.shape)
    grid = PhaseSpaceGrid(g.x_min - ax * g.dx, g.x_max + ax * g.dx,
                          g.p_min - ap * g.dp, g.p_max + ap * g.dp, nx, npp)
    tau_prev = w.meta.get("tau_th", 0.0)
    return WignerGrid(grid, out, w.max_imag_residual, w.normalization_ok,
                      {**w.meta, "tau_th": tau_prev + tau_th})


@dataclass(frozen=True)
class DepthResult:
    tau_inf: float
    tau_th: float
    iterations: int
    eps_neg: float
    bracketed: bool

    def to_dict(self):
        return asdict(self)


def nonclassical_depth(w: WignerGrid, eps_rel=1e-9, tol=1e-4) -> DepthResult:
    """Nonclassical depth ``tau_inf = 1/2 + tau_th*`` of a Wigner-negative grid.

    ``tau_th*`` is the smallest added thermal occupation in ``[0, 1/2]`` for
    which the smoothed grid has no value below ``-eps_rel * max W``, found by
    bisection to ``tol``.
    """
    vmax = float(np.max(w.values))
    eps = eps_rel * vmax
    if float(np.min(w.values)) >= -eps:
        raise PreconditionError("grid has no Wigner negativity; the R-function route "
                                "needed for such states is not supported")

    def classical(t):
        return float(np.min(thermal_convolve(w, t).values)) >= -eps

    lo, hi = 0.0, 0.5
    bracketed = classical(hi)
    it = 0
    if bracketed:
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if classical(mid):
                hi = mid
            else:
                lo = mid
            it += 1
    return DepthResult(0.5 + hi, hi, it, eps, bracketed)
