"""Interaction kernels K(X, u) for pulsed inputs and photon counting.

A kernel multiplies the initial-state matrix element inside the Wigner
integral.  All of them are built from the product

    z(X, u) = f(X - u/2) * conj(f(X + u/2)),

a unit-modulus number equal to one on the diagonal ``u = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx, gammaln

from .errors import AccuracyError, DomainError, PreconditionError, UnsupportedError
from .gaussian import GaussianState, wigner as gaussian_wigner
from .response import SystemParams, response
from .wigner import PhaseSpaceGrid, QuadratureSettings, WignerGrid, wigner_at


# ---------------------------------------------------------------------------
# optical inputs and photon statistics

@dataclass(frozen=True)
class Coherent:
    alpha: complex = 2.0

    @property
    def mean_photons(self):
        return abs(self.alpha) ** 2

    def photon_weights(self, n_max):
        return poisson_weights(self.mean_photons, n_max)


@dataclass(frozen=True)
class SqueezedVac:
    r_l: float = 0.0
    theta: float = 0.0   # accepted for completeness; statistics do not depend on it

    def __post_init__(self):
        if self.r_l < 0:
            raise DomainError("r_l must be >= 0")

    @property
    def mean_photons(self):
        return math.sinh(self.r_l) ** 2

    def photon_weights(self, n_max):
        return squeezed_vacuum_weights(self.r_l, n_max)


def poisson_weights(mean, n_max):
    n = np.arange(n_max + 1)
    if mean == 0:
        return (n == 0).astype(float)
    return np.exp(n * math.log(mean) - mean - gammaln(n + 1))


def squeezed_vacuum_weights(r, n_max):
    """``|c_n|^2`` of a squeezed vacuum; zero for odd ``n``."""
    out = np.zeros(n_max + 1)
    if r == 0:
        out[0] = 1.0
        return out
    m = np.arange(n_max // 2 + 1)
    t = math.tanh(r)
    logw = (-math.log(math.cosh(r)) + 2 * m * math.log(0.5 * t)
            + gammaln(2 * m + 1) - 2 * gammaln(m + 1))
    out[0::2] = np.exp(logw)
    return out


def _tail_quantile(weights_fn, tail, start=16):
    n_max = start
    while True:
        w = weights_fn(n_max)
        upper = np.cumsum(w[::-1])[::-1]        # upper[n] = sum_{m >= n} w_m
        remaining = max(0.0, 1.0 - w.sum()) + upper
        idx = np.nonzero(remaining < tail)[0]
        if idx.size:
            return max(int(idx[0]) - 1, 0)
        n_max *= 2
        if n_max > 1 << 16:
            raise DomainError("photon distribution tail does not converge")


def heralding_probability(n, eta, alpha):
    """Probability of counting ``n`` photons from a coherent pulse after loss ``eta``."""
    if not 0.0 <= eta <= 1.0:
        raise DomainError("eta must lie in [0, 1]")
    if n < 0:
        raise DomainError("n must be >= 0")
    lam = eta * abs(alpha) ** 2
    if lam == 0:
        return 1.0 if n == 0 else 0.0
    return math.exp(n * math.log(lam) - lam - math.lgamma(n + 1))


def max_heralding(n, input_kind="coherent"):
    """Best drive setting and the resulting probability of an ``n``-photon click.

    Returns ``(|alpha|, P)`` for a coherent input and ``(r, P)`` for a
    squeezed vacuum.  A squeezed vacuum has no odd photon numbers, so odd
    ``n`` gives ``(0.0, 0.0)``.
    """
    if n < 0:
        raise DomainError("n must be >= 0")
    if input_kind == "coherent":
        if n == 0:
            return 0.0, 1.0
        return math.sqrt(n), math.exp(-n + n * math.log(n) - math.lgamma(n + 1))
    if input_kind in ("squeezed", "squeezed_vacuum"):
        if n % 2:
            return 0.0, 0.0
        m = n // 2
        r = math.asinh(math.sqrt(n))
        logp = (-0.5 * math.log1p(n) + 2 * m * math.log(0.5 * math.sqrt(n / (1 + n)))
                if n else 0.0)
        logp += math.lgamma(n + 1) - 2 * math.lgamma(m + 1)
        return r, math.exp(logp)
    raise DomainError(f"unknown input kind {input_kind!r}")


# ---------------------------------------------------------------------------
# kernels

def _pair(x, u, p):
    """Return ``z = f(x - u/2) conj(f(x + u/2))``, exactly 1 where ``u = 0``."""
    z = response(x - 0.5 * u, p) * np.conj(response(x + 0.5 * u, p))
    return np.where(u == 0, 1.0 + 0j, z)


def coherent_exponent(x, u, p: SystemParams):
    """``1 - z`` in the closed rational form ``i mu u / ((a - i)(b + i))``."""
    a = 0.5 * p.mu * (x + 0.5 * u) + p.delta_bar
    b = 0.5 * p.mu * (x - 0.5 * u) + p.delta_bar
    return 1j * p.mu * u / ((a - 1j) * (b + 1j))


def kernel_coherent(x, u, alpha, p: SystemParams):
    x, u = np.broadcast_arrays(np.asarray(x, float), np.asarray(u, float))
    return np.exp(-abs(alpha) ** 2 * coherent_exponent(x, u, p))


def _tracked_sqrt(arg, u):
    """Square root continuous along ``u`` starting from the root at ``u = 0``.

    The principal root flips sign whenever ``arg`` crosses the negative real
    axis; consecutive roots with a negative overlap mark such a crossing.
    """
    root = np.sqrt(arg)
    if root.ndim == 0 or root.shape[-1] < 2:
        return root
    order = np.argsort(u, axis=-1, kind="stable")
    sorted_root = np.take_along_axis(root, order, axis=-1)
    u_sorted = np.take_along_axis(np.broadcast_to(u, root.shape), order, axis=-1)
    if np.min(np.abs(arg)) < 1e-12:
        raise AccuracyError("square-root argument passes through zero; branch undefined")
    overlap = np.real(sorted_root[..., 1:] * np.conj(sorted_root[..., :-1]))
    jumps = (overlap < 0).astype(np.int64)
    parity = np.concatenate([np.zeros(root.shape[:-1] + (1,), np.int64),
                             np.cumsum(jumps, axis=-1)], axis=-1)
    # re-reference the parity to the node closest to u = 0
    i0 = np.argmin(np.abs(u_sorted), axis=-1)[..., None]
    parity = parity - np.take_along_axis(parity, i0, axis=-1)
    sign = np.where(parity % 2, -1.0, 1.0)
    fixed = np.empty_like(root)
    np.put_along_axis(fixed, order, sorted_root * sign, axis=-1)
    return fixed


def kernel_squeezed_vacuum(x, u, r_l, p: SystemParams, theta=0.0):
    """Closed-form squeezed-vacuum kernel; ``theta`` has no effect."""
    if r_l < 0:
        raise DomainError("r_l must be >= 0")
    x, u = np.broadcast_arrays(np.asarray(x, float), np.asarray(u, float))
    if r_l == 0:
        return np.ones(x.shape, dtype=complex)
    z = _pair(x, u, p)
    arg = 1.0 - math.tanh(r_l) ** 2 * z ** 2
    out = 1.0 / (math.cosh(r_l) * _tracked_sqrt(arg, u))
    return np.where(u == 0, 1.0 + 0j, out)


def kernel_photon_count(x, u, n, p: SystemParams):
    if n < 0:
        raise DomainError("n must be >= 0")
    x, u = np.broadcast_arrays(np.asarray(x, float), np.asarray(u, float))
    if n == 0:
        return np.ones(x.shape, dtype=complex)
    return _pair(x, u, p) ** n


def kernel_lossy(x, u, n, eta, alpha, p: SystemParams):
    """Kernel after counting ``n`` photons behind a channel of transmission ``eta``."""
    if not 0.0 <= eta <= 1.0:
        raise DomainError("eta must lie in [0, 1]")
    out = kernel_photon_count(x, u, n, p)
    if eta < 1.0:
        out = out * kernel_coherent(x, u, math.sqrt(1.0 - eta) * abs(alpha), p)
    return out


def kernel_baseline(x, u, source, p: SystemParams):
    """Kernel of the linearised interaction ``exp(i mu X n)`` (no cavity response)."""
    x, u = np.broadcast_arrays(np.asarray(x, float), np.asarray(u, float))
    z = np.exp(-1j * p.mu * u)
    if isinstance(source, Coherent):
        return np.exp(-source.mean_photons * (1.0 - z))
    if isinstance(source, SqueezedVac):
        if source.r_l == 0:
            return np.ones(x.shape, dtype=complex)
        out = 1.0 / (math.cosh(source.r_l)
                     * _tracked_sqrt(1.0 - math.tanh(source.r_l) ** 2 * z ** 2, u))
        return np.where(u == 0, 1.0 + 0j, out)
    raise UnsupportedError(f"baseline input {source!r}")


@dataclass(frozen=True)
class KernelSpec:
    """Common interface: ``spec(x, u)`` evaluates the kernel with broadcasting."""

    params: SystemParams

    kind = "identity"

    def __call__(self, x, u):
        x, u = np.broadcast_arrays(np.asarray(x, float), np.asarray(u, float))
        return np.ones(x.shape, dtype=complex)

    def photon_weights(self, n_max):
        w = np.zeros(n_max + 1)
        w[0] = 1.0
        return w

    def max_photons(self, tail=1e-10):
        """Photon number above which the kick weight is below ``tail``."""
        return _tail_quantile(self.photon_weights, tail)

    def describe(self):
        fields = {k: v for k, v in self.__dict__.items() if k != "params"}
        out = {"variant": self.kind}
        for k, v in fields.items():
            if isinstance(v, complex):
                v = [v.real, v.imag]
            elif isinstance(v, (Coherent, SqueezedVac)):
                v = {"type": type(v).__name__, **{
                    kk: ([vv.real, vv.imag] if isinstance(vv, complex) else vv)
                    for kk, vv in v.__dict__.items()}}
            out[k] = v
        return out


@dataclass(frozen=True)
class DeterministicCoherent(KernelSpec):
    alpha: complex = 2.0
    kind = "deterministic_coherent"

    def __call__(self, x, u):
        return kernel_coherent(x, u, self.alpha, self.params)

    def photon_weights(self, n_max):
        return poisson_weights(abs(self.alpha) ** 2, n_max)


@dataclass(frozen=True)
class DeterministicSqueezedVac(KernelSpec):
    r_l: float = 0.0
    theta: float = 0.0
    kind = "deterministic_squeezed_vacuum"

    def __post_init__(self):
        if self.r_l < 0:
            raise DomainError("r_l must be >= 0")

    def __call__(self, x, u):
        return kernel_squeezed_vacuum(x, u, self.r_l, self.params, self.theta)

    def photon_weights(self, n_max):
        return squeezed_vacuum_weights(self.r_l, n_max)


@dataclass(frozen=True)
class PhotonCount(KernelSpec):
    n: int = 1
    kind = "photon_count"

    def __post_init__(self):
        if self.n < 0 or int(self.n) != self.n:
            raise DomainError("n must be a non-negative integer")

    def __call__(self, x, u):
        return kernel_photon_count(x, u, self.n, self.params)

    def photon_weights(self, n_max):
        w = np.zeros(n_max + 1)
        if self.n <= n_max:
            w[self.n] = 1.0
        return w

    def max_photons(self, tail=1e-10):
        return self.n


@dataclass(frozen=True)
class LossyPhotonCount(KernelSpec):
    n: int = 1
    eta: float = 1.0
    alpha: complex = 2.0
    kind = "lossy_photon_count"

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise DomainError("eta must lie in [0, 1]")
        if self.n < 0:
            raise DomainError("n must be >= 0")

    def __call__(self, x, u):
        return kernel_lossy(x, u, self.n, self.eta, self.alpha, self.params)

    def photon_weights(self, n_max):
        # the undetected photons still kick: n plus a Poisson((1-eta)|alpha|^2) ladder
        extra = poisson_weights((1 - self.eta) * abs(self.alpha) ** 2, n_max)
        w = np.zeros(n_max + 1)
        if self.n <= n_max:
            w[self.n:] = extra[:n_max + 1 - self.n]
        return w

    @property
    def probability(self):
        return heralding_probability(self.n, self.eta, self.alpha)


@dataclass(frozen=True)
class BaselineNoCavity(KernelSpec):
    source: Coherent | SqueezedVac = Coherent()
    kind = "baseline_no_cavity"

    def __call__(self, x, u):
        return kernel_baseline(x, u, self.source, self.params)

    def photon_weights(self, n_max):
        return self.source.photon_weights(n_max)


def lossy_kernel_spec(params, n, eta, source):
    """Lossy photon counting is only defined here for coherent pulses."""
    if not isinstance(source, Coherent):
        raise UnsupportedError("lossy photon counting is implemented for coherent input only")
    return LossyPhotonCount(params, n, eta, source.alpha)


# ---------------------------------------------------------------------------
# closed forms

_SINGULAR_TOL = 1e-8


def wigner_single_photon_closed_form(x, p_coord, s: GaussianState, params: SystemParams,
                                     quad: QuadratureSettings | None = None):
    """Wigner function after a single-photon click, via the scaled erfc form.

    Uses ``exp(z^2) erfc(z) = erfcx(z)``; for ``Re z < 0`` the identity
    ``erfcx(z) = 2 exp(z^2) - erfcx(-z)`` lets the growing ``exp(z^2)`` part
    be combined with the Gaussian prefactor in log space.  Points within
    ``1e-8`` of the removable singularity ``mu (2 delta + mu x) = 0`` are
    evaluated by quadrature instead.
    """
    if not s.centred:
        raise PreconditionError("closed form requires an initial state centred at the origin")
    x, p_coord = np.broadcast_arrays(np.asarray(x, float), np.asarray(p_coord, float))
    shape = x.shape
    x, p_coord = x.ravel(), p_coord.ravel()
    mu, det = params.mu, params.delta_bar
    d, vx, vxp = s.det, s.var_x, s.cov_xp
    denom = mu * (2 * det + mu * x)
    singular = np.abs(denom) < _SINGULAR_TOL
    safe = np.where(singular, 1.0, denom)

    amp = math.sqrt(d / (2 * math.pi * vx))
    A = d / (2 * vx)
    B = (vx * p_coord - vxp * x) / d
    y = 2j + 2 * det + mu * x
    with np.errstate(divide="ignore", invalid="ignore"):
        z = math.sqrt(A) * (4 - 4j * det - mu * B - 2j * mu * x) / np.where(mu == 0, 1.0, mu)
    # log of the Gaussian prefactor W_i
    q = (s.var_p * x ** 2 - 2 * vxp * x * p_coord + vx * p_coord ** 2) / d
    log_wi = -0.5 * q - math.log(2 * math.pi * math.sqrt(d))
    wi = np.exp(log_wi)

    left = z.real < 0
    scaled = erfcx(np.where(left, -z, z))
    # W_i * Re[y * erfcx(z)] assembled without overflow
    re_term = wi * np.real(y * scaled)
    if np.any(left):
        zl = z[left]
        re_term[left] = np.real(y[left] * (2 * np.exp(log_wi[left] + zl * zl)
                                           - wi[left] * scaled[left]))
    out = wi - (16 * math.pi / safe) * amp * re_term

    if np.any(singular):
        spec = PhotonCount(params, 1)
        out = np.array(out, dtype=float)
        out[singular] = wigner_at(spec, s, x[singular], p_coord[singular], quad)
    return out.reshape(shape)


def baseline_no_cavity(grid: PhaseSpaceGrid, source, s: GaussianState,
                       params: SystemParams, tail=1e-10) -> WignerGrid:
    """Mixture of momentum-displaced copies of the initial Wigner function."""
    if not isinstance(source, (Coherent, SqueezedVac)):
        raise UnsupportedError(f"baseline input {source!r}")
    n_cut = _tail_quantile(source.photon_weights, tail)
    weights = source.photon_weights(n_cut)
    X, P = np.meshgrid(grid.x, grid.p, indexing="ij")
    values = np.zeros_like(X)
    for n, wn in enumerate(weights):
        if wn:
            values += wn * gaussian_wigner(s, X, P - n * params.mu)
    meta = {"kernel": BaselineNoCavity(params, source).describe(), "state": s.to_dict(),
            "params": params.to_dict(), "photon_cutoff": n_cut,
            "residual_weight": float(max(0.0, 1.0 - weights.sum()))}
    total = values.sum() * grid.cell
    return WignerGrid(grid, values, 0.0, bool(abs(total - 1) <= 1e-3), meta)
