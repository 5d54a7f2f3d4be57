"""Continuously driven steady state in the rotating-wave approximation.

Under a weak continuous drive the mechanics sees the jump operator
``f(X) = T^-1 T^dagger`` with the tridiagonal ``T = I - i (mu/2) X``.  In the
frame rotating at the mechanical frequency, and after dropping terms that
oscillate at multiples of it, the state stays diagonal in the Fock basis.
The drive then acts as a classical Markov chain on the populations with
transition weights ``Phi[n, l] = |<l| f |n>|^2``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict, field

import numpy as np
from scipy.special import gammaln

from .errors import (DomainError, PreconditionError, SolverError, StepSizeError,
                     TruncationError, UnsupportedError)
from .response import SystemParams
from .wigner import PhaseSpaceGrid, WignerGrid

DEFAULT_N = 100
TAIL_EPS = 1e-10


# ---------------------------------------------------------------------------
# tridiagonal inverse

@dataclass
class TridiagRecurrences:
    """Continuants of ``T`` stored as logarithms (all of them are positive).

    ``log_theta[j]`` holds ``log theta_j`` for ``j = 0..N`` and ``log_phi[j]``
    holds ``log phi_j`` for ``j = 1..N+1`` (index 0 unused).
    """

    log_theta: np.ndarray
    log_phi: np.ndarray
    mu: float

    @property
    def N(self):
        return self.log_theta.size - 1

    @property
    def theta(self):
        with np.errstate(over="ignore"):
            return np.exp(self.log_theta)

    @property
    def phi(self):
        with np.errstate(over="ignore"):
            return np.exp(self.log_phi)

    @property
    def det(self):
        """``theta_N = det T``; ``inf`` once it leaves the float range."""
        with np.errstate(over="ignore"):
            return float(np.exp(self.log_theta[-1]))


def recurrences(N, mu) -> TridiagRecurrences:
    """Leading and trailing principal minors of ``T`` for ``N`` levels.

    The recurrences are run on consecutive ratios, which stay between 1 and
    ``1 + sqrt(j) mu / (2 sqrt 2)`` and so never overflow, and then summed in
    log form.
    """
    if N < 1:
        raise DomainError("N must be >= 1")
    c2 = mu * mu / 8.0
    log_theta = np.zeros(N + 1)
    r = 1.0                                    # theta_1 / theta_0
    for j in range(2, N + 1):
        r = 1.0 + c2 * (j - 1) / r
        log_theta[j] = log_theta[j - 1] + math.log(r)
    log_phi = np.zeros(N + 2)
    s = 1.0                                    # phi_N / phi_{N+1}
    for j in range(N - 1, 0, -1):
        s = 1.0 + c2 * j / s
        log_phi[j] = log_phi[j + 1] + math.log(s)
    log_phi[0] = np.nan
    return TridiagRecurrences(log_theta, log_phi, float(mu))


def t_matrix(N, mu, t=0.0, omega_m=1.0, delta_bar=0.0):
    """Dense ``T(t) = (1 - i delta) I - i (mu/2) X(t)`` on ``N`` Fock levels.

    ``X(t) = (b e^{-i w t} + b^dagger e^{i w t}) / sqrt 2``.
    """
    off = np.sqrt(np.arange(1, N) / 2.0) * np.exp(-1j * omega_m * t)
    X = np.diag(off, 1) + np.diag(off.conj(), -1)
    return (1 - 1j * delta_bar) * np.eye(N) - 0.5j * mu * X


def inverse_coefficients(rec: TridiagRecurrences, N=None, mu=None):
    """Time-independent coefficients ``C`` of ``T^-1``.

    ``(T(t)^-1)[i, j] = C[i, j] exp(i (i - j) w t)`` with

        C[i, j] = (i c)^|i-j| sqrt(max(i,j)! / min(i,j)!) theta_min phi_{max+2} / theta_N

    in 0-based indices, where ``c = mu / (2 sqrt 2)``.
    """
    N = rec.N if N is None else N
    mu = rec.mu if mu is None else mu
    if N != rec.N:
        raise PreconditionError("recurrences were built for a different N")
    idx = np.arange(N)
    lo = np.minimum.outer(idx, idx)
    hi = np.maximum.outer(idx, idx)
    gap = hi - lo
    log_c = math.log(mu / (2 * math.sqrt(2))) if mu > 0 else -np.inf
    with np.errstate(invalid="ignore"):
        log_mag = (np.where(gap > 0, gap * log_c, 0.0)
                   + 0.5 * (gammaln(hi + 1) - gammaln(lo + 1))
                   + rec.log_theta[lo] + rec.log_phi[hi + 2] - rec.log_theta[N])
    return np.exp(log_mag) * (1j ** (gap % 4))


def rwa_transfer(C, N, mu):
    """Drive transition weights ``Phi[n, l] = |<l| f |n>|^2``.

    ``<l|f|n> = sum_m (T^-1)[l, m] (T^dagger)[m, n]`` has at most three terms
    because ``T^dagger`` is tridiagonal; with the time factors stripped the
    amplitude is ``C[l, n] + d_{n-1,n} C[l, n-1] + d_{n+1,n} C[l, n+1]`` where
    ``d_{m, m+1} = d_{m+1, m} = i mu sqrt(m+1) / (2 sqrt 2)``.  The overall
    phase ``exp(i (l - n) w t)`` drops out of the modulus, so the RWA average
    over one period is exact.
    """
    C = np.asarray(C)
    if C.shape != (N, N):
        raise PreconditionError("C must be N x N")
    d = 1j * mu * np.sqrt(np.arange(1, N)) / (2 * math.sqrt(2))   # d[m] couples m, m+1
    amp = C.copy()                    # amp[l, n] = <l|f|n>
    amp[:, 1:] += C[:, :-1] * d[None, :]       # m = n - 1
    amp[:, :-1] += C[:, 1:] * d[None, :]       # m = n + 1
    return np.abs(amp.T) ** 2         # indexed [n, l]


def transfer_dense(N, mu, samples=64, omega_m=1.0):
    """Period average of ``|<l|f(t)|n>|^2`` with ``f(t)`` from dense solves."""
    acc = np.zeros((N, N))
    for t in np.arange(samples) * (2 * math.pi / (omega_m * samples)):
        T = t_matrix(N, mu, t, omega_m)
        f = np.linalg.solve(T, T.conj().T)
        acc += np.abs(f.T) ** 2
    return acc / samples


# ---------------------------------------------------------------------------
# populations

@dataclass
class FockPopulations:
    """Diagonal state ``sum_n P_n |n><n|``; ``probs`` has length ``N + 1``.

    Levels ``0..N-1`` carry the drive.  The last entry is a boundary level
    that only exchanges with the bath; it stays empty at zero temperature.
    """

    probs: np.ndarray
    truncation_n: int
    tail_mass: float
    params: SystemParams | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def mean_phonons(self):
        return float(np.arange(self.probs.size) @ self.probs)

    def tail_ok(self, eps=TAIL_EPS):
        return self.tail_mass < eps


def thermal_populations(n_bath, N):
    """``P_n = N^n / (N+1)^(n+1)`` for ``n = 0..N``."""
    n = np.arange(N + 1)
    if n_bath == 0:
        return (n == 0).astype(float)
    return np.exp(n * math.log(n_bath) - (n + 1) * math.log1p(n_bath))


def _check_steady_params(p: SystemParams):
    if p.flux_k2 != 0:
        raise UnsupportedError("steady state requires k2 = 0")
    if p.delta_bar != 0:
        raise UnsupportedError("steady state requires zero detuning")
    rates = 2 * p.gamma * (p.n_bath + 1) + 2 * p.flux_k
    if not rates < 1e-2 * p.omega_m:
        raise PreconditionError("rotating-wave approximation needs omega_m to dominate all rates")


def balance_matrix(p: SystemParams, N, phi_transfer=None, boundary=True):
    """Rate equations for ``P_0..P_N`` stacked with the normalisation row.

    Row ``l < N`` is ``dP_l/dt``; the last row is all ones.  With
    ``boundary=False`` the column of ``P_N`` is zero in every rate row.  That
    matrix is singular because the rate rows already sum to zero, so the
    default keeps the bath decay ``N -> N-1`` in row ``N-1``, which makes
    ``P_N`` the partner of the loss ``N-1 -> N`` and restores full rank.
    """
    if phi_transfer is None:
        phi_transfer = rwa_transfer(inverse_coefficients(recurrences(N, p.mu)), N, p.mu)
    down = 2 * p.gamma * (p.n_bath + 1)
    up = 2 * p.gamma * p.n_bath
    n = np.arange(N)
    A = np.zeros((N + 1, N + 1))
    A[:N, :N] += 2 * p.flux_k * phi_transfer.T
    A[n, n] -= 2 * p.flux_k + down * n + up * (n + 1)
    A[n[:-1], n[:-1] + 1] += down * (n[:-1] + 1)
    A[n[1:], n[1:] - 1] += up * n[1:]
    if boundary:
        A[N - 1, N] += down * N
    A[N, :] = 1.0
    b = np.zeros(N + 1)
    b[N] = 1.0
    return A, b


def _solve_once(p, N, phi_transfer, boundary):
    A, b = balance_matrix(p, N, phi_transfer, boundary)
    rank_tol = None
    try:
        lu_ok = np.linalg.matrix_rank(A, tol=rank_tol) == N + 1
        if not lu_ok:
            raise np.linalg.LinAlgError("rank deficient")
        P = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"balance system is singular at N={N}",
                          {"N": N, "rank": int(np.linalg.matrix_rank(A)),
                           "cond": float(np.linalg.cond(A)), "reason": str(exc)})
    residual = float(np.max(np.abs(A @ P - b)))
    return P, residual


def solve_steady_state(p: SystemParams, N=DEFAULT_N, *, escalations=8, growth=1.5,
                       tail_eps=TAIL_EPS, strict_tail=True, transfer="recurrence",
                       boundary=True) -> FockPopulations:
    """RWA steady-state populations.

    If the population of level ``N-1`` is not below ``tail_eps`` the solve is
    repeated with ``N <- ceil(growth N)``, at most ``escalations`` times.
    With ``escalations=0, strict_tail=False`` the result at exactly ``N``
    levels is returned whatever its tail.

    ``transfer`` selects the recurrence formula (``"recurrence"``) or the
    dense period average (``"dense"``) for the drive weights.
    """
    _check_steady_params(p)
    if N < 2:
        raise DomainError("N must be >= 2")
    history = []
    for attempt in range(escalations + 1):
        if transfer == "recurrence":
            phi_t = rwa_transfer(inverse_coefficients(recurrences(N, p.mu)), N, p.mu)
        elif transfer == "dense":
            phi_t = transfer_dense(N, p.mu)
        else:
            raise DomainError("transfer must be 'recurrence' or 'dense'")
        P, residual = _solve_once(p, N, phi_t, boundary)
        min_raw = float(P.min())
        if min_raw < -1e-12:
            raise SolverError("negative population beyond round-off",
                              {"N": N, "min": min_raw})
        P = np.clip(P, 0.0, None)
        P /= P.sum()
        tail = float(P[N - 1])
        history.append({"N": N, "tail": tail, "residual": residual})
        if tail < tail_eps or attempt == escalations:
            break
        N = int(math.ceil(growth * N))
    diag = {"attempts": history, "residual": residual, "min_raw": min_raw,
            "transfer": transfer, "boundary_level": boundary}
    if tail >= tail_eps and strict_tail:
        raise TruncationError(f"tail population {tail:.3e} at N={N} exceeds {tail_eps:g} "
                              f"after {len(history) - 1} escalations")
    return FockPopulations(P, N, tail, p, diag)


@dataclass(frozen=True)
class Witness:
    value: float
    certified: bool
    levels_used: int

    def __float__(self):
        return self.value


def witness(pop: FockPopulations, n_levels=100, strict=True) -> Witness:
    """Odd-level population ``sum_{k < n_levels} P_{2k+1}``.

    A value above 1/2 makes ``W(0, 0) < 0``.  With ``strict=False`` the sum
    stops at the last retained level when ``2 n_levels - 1`` exceeds it.
    """
    top = pop.probs.size - 1
    need = 2 * n_levels - 1
    if need > top:
        if strict:
            raise PreconditionError(f"witness needs level {need} but truncation keeps {top}")
        n_levels = (top + 1) // 2
    val = float(pop.probs[1:2 * n_levels:2].sum())
    return Witness(val, val > 0.5, n_levels)


def witness_crossing(k, g_lo, g_hi, *, n_levels=100, N=DEFAULT_N, escalations=0,
                     strict=False, xtol=1e-4, **param_kw):
    """Coupling ``g0/kappa`` where the witness crosses 1/2 (root bracketed)."""
    from scipy.optimize import brentq

    def h(g):
        p = SystemParams(g, flux_k=k, **param_kw)
        pop = solve_steady_state(p, N, escalations=escalations, strict_tail=False)
        return witness(pop, n_levels, strict=strict).value - 0.5

    return brentq(h, g_lo, g_hi, xtol=xtol)


# ---------------------------------------------------------------------------
# phase space

def fock_diagonal_wigner(pop: FockPopulations, grid: PhaseSpaceGrid) -> WignerGrid:
    """Wigner function of a Fock-diagonal state.

    Runs the Laguerre recurrence for ``L_n(2R^2)`` with a per-point scale
    exponent that starts at ``-R^2``; values are renormalised whenever they
    grow large, so neither the polynomial nor the Gaussian factor overflow.
    """
    X, P = np.meshgrid(grid.x, grid.p, indexing="ij")
    x2 = 2.0 * (X ** 2 + P ** 2)
    log_scale = -0.5 * x2
    prev = np.zeros_like(x2)
    cur = np.ones_like(x2)
    acc = pop.probs[0] * cur
    for n in range(1, pop.probs.size):
        nxt = ((2 * n - 1 - x2) * cur - (n - 1) * prev) / n
        prev, cur = cur, nxt
        if pop.probs[n]:
            acc = acc + (pop.probs[n] * (-1) ** n) * cur
        big = np.abs(cur) > 1e150
        if big.any():
            s = np.where(big, 1e-150, 1.0)
            prev, cur, acc = prev * s, cur * s, acc * s
            log_scale = log_scale + np.where(big, math.log(1e150), 0.0)
    values = acc * np.exp(log_scale) / math.pi
    meta = {"source": "fock_diagonal", "truncation_n": pop.truncation_n}
    if pop.params is not None:
        meta["params"] = pop.params.to_dict()
    total = values.sum() * grid.cell
    return WignerGrid(grid, values, 0.0, bool(abs(total - 1) <= 1e-3), meta)


def default_steady_grid(pop: FockPopulations, n=None, mass_tail=1e-8, n_max=601):
    """Square grid reaching past the classical radius of the occupied levels.

    Without ``n`` the node count resolves the radial oscillation of the
    highest occupied level (about three nodes per period), between 201 and
    ``n_max``.  Odd counts keep the origin on the grid.
    """
    cum = np.cumsum(pop.probs)
    n_top = int(np.searchsorted(cum, 1 - mass_tail))
    r = math.sqrt(2 * n_top + 1) + 4.0
    if n is None:
        n = int(np.clip(math.ceil(2 * r * math.sqrt(2 * n_top + 1) / 3), 201, n_max)) | 1
    return PhaseSpaceGrid(-r, r, -r, r, n, n)


# ---------------------------------------------------------------------------
# master equation

@dataclass
class JumpOperators:
    L1: np.ndarray
    L2: np.ndarray
    N: int


def master_equation_generator(p: SystemParams, N=DEFAULT_N) -> JumpOperators:
    """Drive jump operators ``sqrt(2 k1) f(X)`` and ``sqrt(2 k2) f(X)^2`` on ``N`` levels."""
    T = t_matrix(N, p.mu, 0.0, 1.0, p.delta_bar)
    f = np.linalg.solve(T, T.conj().T)
    return JumpOperators(math.sqrt(2 * p.flux_k) * f, math.sqrt(2 * p.flux_k2) * (f @ f), N)


def _lower(rho):
    """``b rho b^dagger`` and ``b^dagger b`` diagonal, using index shifts."""
    n = rho.shape[0]
    s = np.sqrt(np.arange(1, n))
    out = np.zeros_like(rho)
    out[:-1, :-1] = s[:, None] * rho[1:, 1:] * s[None, :]
    return out


def _raise(rho):
    n = rho.shape[0]
    s = np.sqrt(np.arange(1, n))
    out = np.zeros_like(rho)
    out[1:, 1:] = s[:, None] * rho[:-1, :-1] * s[None, :]
    return out


def _lindblad_rhs(rho, f, p: SystemParams, num):
    down = 2 * p.gamma * (p.n_bath + 1)
    up = 2 * p.gamma * p.n_bath
    out = 2 * p.flux_k * (f @ rho @ f.conj().T - rho)
    if down:
        out += down * (_lower(rho) - 0.5 * (num[:, None] + num[None, :]) * rho)
    if up:
        out += up * (_raise(rho) - 0.5 * (num[:, None] + num[None, :] + 2) * rho)
    return out


def uhlmann_fidelity(rho, sigma):
    """``(tr sqrt(sqrt(sigma) rho sqrt(sigma)))^2`` for density matrices."""
    w, v = np.linalg.eigh(sigma)
    root = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    m = root @ rho @ root
    ev = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    return float(np.sum(np.sqrt(np.clip(ev, 0, None))) ** 2)


@dataclass
class RwaValidation:
    times: np.ndarray
    fidelity: np.ndarray
    trace_drift: float
    steps_per_period: int

    @property
    def min_fidelity(self):
        return float(self.fidelity.min())

    def to_dict(self):
        return {"times": self.times.tolist(), "fidelity": self.fidelity.tolist(),
                "trace_drift": self.trace_drift, "steps_per_period": self.steps_per_period,
                "min_fidelity": self.min_fidelity}


def validate_rwa(pop: FockPopulations, p: SystemParams, periods=100, N=None,
                 steps_per_period=200, drift_tol=1e-6) -> RwaValidation:
    """Propagate the full rotating-frame master equation from the RWA state.

    The collapse operator ``f(t) = T(t)^-1 T(t)^dagger`` is rebuilt by a
    dense solve at every Runge-Kutta stage.  Returns the Uhlmann fidelity to
    the RWA state once per mechanical period.
    """
    _check_steady_params(p)
    if steps_per_period < 200:
        raise DomainError("use at least 200 steps per mechanical period")
    N = pop.probs.size - 1 if N is None else N
    probs = np.zeros(N)
    m = min(N, pop.probs.size)
    probs[:m] = pop.probs[:m]
    probs /= probs.sum()
    sigma = np.diag(probs).astype(complex)
    rho = sigma.copy()
    num = np.arange(N, dtype=float)
    w = p.omega_m
    h = 2 * math.pi / (w * steps_per_period)
    cache = {}

    def f_at(t):
        key = round(t / h * 2)     # stages fall on half steps
        if key not in cache:
            if len(cache) > 4:
                cache.clear()
            T = t_matrix(N, p.mu, t, w)
            cache[key] = np.linalg.solve(T, T.conj().T)
        return cache[key]

    times, fid = [0.0], [uhlmann_fidelity(rho, sigma)]
    drift = 0.0
    t = 0.0
    for period in range(periods):
        for _ in range(steps_per_period):
            k1 = _lindblad_rhs(rho, f_at(t), p, num)
            fm = f_at(t + 0.5 * h)
            k2 = _lindblad_rhs(rho + 0.5 * h * k1, fm, p, num)
            k3 = _lindblad_rhs(rho + 0.5 * h * k2, fm, p, num)
            k4 = _lindblad_rhs(rho + h * k3, f_at(t + h), p, num)
            rho = rho + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            t += h
        drift = max(drift, abs(float(np.trace(rho).real) - 1.0))
        if drift > drift_tol:
            raise StepSizeError(f"trace drifted by {drift:.3e} after {period + 1} periods")
        rho = 0.5 * (rho + rho.conj().T)
        times.append(t)
        fid.append(uhlmann_fidelity(rho, sigma))
    return RwaValidation(np.array(times), np.array(fid), drift, steps_per_period)


# ---------------------------------------------------------------------------
# files

def write_populations(pop: FockPopulations, path, n_levels=100):
    """``n,P_n`` CSV plus a ``.json`` sidecar next to it."""
    n = np.arange(pop.probs.size)
    np.savetxt(path, np.column_stack([n, pop.probs]), fmt=["%d", "%.17g"],
               delimiter=",", header="n,P_n", comments="")
    wit = witness(pop, n_levels, strict=False)
    side = {"N": pop.truncation_n, "tail_mass": pop.tail_mass,
            "params": pop.params.to_dict() if pop.params else None,
            "witness": {"value": wit.value, "certified": wit.certified,
                        "levels_used": wit.levels_used},
            "diagnostics": pop.diagnostics}
    with open(str(path) + ".json", "w") as fh:
        json.dump(side, fh, indent=2, default=float)


def read_populations(path) -> FockPopulations:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    probs = data[:, 1]
    return FockPopulations(probs, probs.size - 1, float(probs[-2]) if probs.size > 1 else 0.0)
