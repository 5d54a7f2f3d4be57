"""Physical parameters and the adiabatic cavity response.

Positions are the dimensionless quadrature ``X = (b + b^dag)/sqrt(2)``; the
cavity maps input to output light through the unit-modulus factor ``f(X)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import DomainError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SystemParams:
    """All physical constants of one optomechanical configuration.

    ``mu`` is derived from ``g0_over_kappa`` and cannot be passed in.
    Rates are angular (rad/s); use :meth:`from_hz` to enter ``gamma`` and
    ``omega_m`` as frequency/2pi in Hz.
    """

    g0_over_kappa: float
    delta_bar: float = 0.0
    omega_m: float = TWO_PI * 1e5
    gamma: float = TWO_PI * 1e-3
    n_bath: float = 0.0
    flux_k: float = 0.0
    flux_k2: float = 0.0
    mu: float = field(init=False)

    def __post_init__(self):
        for name in ("g0_over_kappa", "delta_bar", "omega_m", "gamma",
                     "n_bath", "flux_k", "flux_k2"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value!r}")
        for name in ("g0_over_kappa", "gamma", "n_bath", "flux_k", "flux_k2"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be >= 0")
        if self.omega_m <= 0:
            raise DomainError("omega_m must be positive")
        object.__setattr__(self, "mu", math.sqrt(8.0) * self.g0_over_kappa)

    @classmethod
    def from_hz(cls, g0_over_kappa, *, gamma_hz=1e-3, omega_m_hz=1e5, **kw):
        """Build from gamma/2pi and omega_m/2pi given in Hz."""
        return cls(g0_over_kappa, gamma=TWO_PI * gamma_hz,
                   omega_m=TWO_PI * omega_m_hz, **kw)

    def replace(self, **changes):
        data = {k: v for k, v in asdict(self).items() if k != "mu"}
        data.update(changes)
        return SystemParams(**data)

    def to_dict(self):
        return asdict(self)


def _reduced(x, p):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("position must be finite")
    return 0.5 * p.mu * x + p.delta_bar


def response(x, p: SystemParams):
    """Cavity response ``f(x) = (1 + iy)/(1 - iy)`` with ``y = mu x/2 + delta_bar``."""
    y = _reduced(x, p)
    return (1.0 + 1j * y) / (1.0 - 1j * y)


def phase(x, p: SystemParams):
    """Optical phase ``arg f(x)``, continuous in ``x`` and inside (-pi, pi).

    ``arg f = 2 arg(1 + iy)``; taking the argument of the numerator alone
    keeps the result away from the branch cut of the quotient.
    """
    y = _reduced(x, p)
    return 2.0 * np.arctan2(y, 1.0)
