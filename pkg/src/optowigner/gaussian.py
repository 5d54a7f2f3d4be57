"""Gaussian initial states of the mechanical oscillator."""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from .errors import DomainError

# vacuum has d = 1/4; allow rounding below it
_HEISENBERG_SLACK = 1e-12


@dataclass(frozen=True)
class GaussianState:
    """First moments and covariance of a Gaussian mechanical state."""

    x_mean: float = 0.0
    p_mean: float = 0.0
    var_x: float = 0.5
    var_p: float = 0.5
    cov_xp: float = 0.0

    def __post_init__(self):
        vals = (self.x_mean, self.p_mean, self.var_x, self.var_p, self.cov_xp)
        if not all(math.isfinite(v) for v in vals):
            raise DomainError("Gaussian moments must be finite")
        if self.var_x <= 0 or self.var_p <= 0:
            raise DomainError("variances must be positive")
        if self.det < 0.25 - _HEISENBERG_SLACK:
            raise DomainError(f"covariance determinant {self.det} violates d >= 1/4")

    @property
    def det(self):
        return self.var_x * self.var_p - self.cov_xp ** 2

    @property
    def centred(self):
        return self.x_mean == 0.0 and self.p_mean == 0.0

    def to_dict(self):
        return asdict(self)


def squeezed_thermal(n_bar=0.0, r_m=0.0):
    """Thermal state with occupation ``n_bar`` squeezed in momentum by ``r_m``.

    >>> squeezed_thermal().det
    0.25
    """
    if not (math.isfinite(n_bar) and math.isfinite(r_m)):
        raise DomainError("n_bar and r_m must be finite")
    if n_bar < 0:
        raise DomainError("n_bar must be >= 0")
    v = n_bar + 0.5
    return GaussianState(0.0, 0.0, v * math.exp(2 * r_m), v * math.exp(-2 * r_m), 0.0)


def squeezing_db(r):
    """Quadrature squeezing in dB for squeezing parameter ``r``."""
    return 10.0 * math.log10(math.exp(2 * r))


def matrix_element(s: GaussianState, x, u):
    """Position-basis element ``<x - u/2| rho |x + u/2>`` of a Gaussian state."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(u))):
        raise DomainError("x and u must be finite")
    dx = x - s.x_mean
    expo = (-(s.det / (2 * s.var_x)) * u ** 2 - dx ** 2 / (2 * s.var_x)
            - 1j * s.p_mean * u - 1j * (s.cov_xp / s.var_x) * dx * u)
    return np.exp(expo) / math.sqrt(2 * math.pi * s.var_x)


def wigner(s: GaussianState, x, p):
    """Closed-form Wigner function of ``s``."""
    dx = np.asarray(x, dtype=float) - s.x_mean
    dp = np.asarray(p, dtype=float) - s.p_mean
    d = s.det
    q = (s.var_p * dx ** 2 - 2 * s.cov_xp * dx * dp + s.var_x * dp ** 2) / d
    return np.exp(-0.5 * q) / (2 * math.pi * math.sqrt(d))
