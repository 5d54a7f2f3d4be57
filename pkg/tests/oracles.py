"""Independent reference computations used only by the tests.

None of these share code paths with the package: series instead of closed
forms, dense linear algebra instead of recurrences, adaptive scipy
quadrature instead of Gauss-Legendre.
"""
import math

import numpy as np
from scipy import integrate
from scipy.special import eval_laguerre, gammaln


def f_direct(x, mu, delta=0.0):
    y = mu * np.asarray(x, float) / 2 + delta
    return (1 + 1j * y) / (1 - 1j * y)


def coherent_series(x, u, alpha, mu, delta=0.0, n_max=60):
    z = f_direct(x - u / 2, mu, delta) * np.conj(f_direct(x + u / 2, mu, delta))
    a2 = abs(alpha) ** 2
    n = np.arange(n_max + 1)
    w = np.exp(n * math.log(a2) - a2 - gammaln(n + 1)) if a2 else (n == 0) * 1.0
    return sum(wn * z ** k for k, wn in zip(n, w))


def squeezed_series(x, u, r, mu, delta=0.0, n_max=60):
    z = f_direct(x - u / 2, mu, delta) * np.conj(f_direct(x + u / 2, mu, delta))
    t = math.tanh(r)
    out = 0
    for m in range(n_max // 2 + 1):
        w = math.exp(-math.log(math.cosh(r)) + 2 * m * math.log(t / 2)
                     + math.lgamma(2 * m + 1) - 2 * math.lgamma(m + 1))
        out = out + w * z ** (2 * m)
    return out


def wigner_adaptive(kernel, vx, vp, vxp, x, p, u_max=None):
    """``1/2pi int exp(ipu) K rho du`` for a centred Gaussian, scipy.quad."""
    d = vx * vp - vxp ** 2
    u_max = u_max or 9 * math.sqrt(2 * vx / d)

    def integrand(u):
        rho = np.exp(-(d / (2 * vx)) * u * u - x * x / (2 * vx) - 1j * (vxp / vx) * x * u)
        rho /= math.sqrt(2 * math.pi * vx)
        return (np.exp(1j * p * u) * kernel(x, u) * rho).real

    val, _ = integrate.quad(integrand, -u_max, u_max, limit=800, epsabs=1e-13, epsrel=1e-12)
    return val / (2 * math.pi)


def dense_T(N, mu, t=0.0):
    X = np.zeros((N, N), complex)
    for m in range(N - 1):
        X[m, m + 1] = math.sqrt((m + 1) / 2) * np.exp(-1j * t)
        X[m + 1, m] = np.conj(X[m, m + 1])
    return np.eye(N) - 0.5j * mu * X


def period_averaged_transfer(N, mu, samples=48):
    acc = np.zeros((N, N))
    for t in np.linspace(0, 2 * math.pi, samples, endpoint=False):
        T = dense_T(N, mu, t)
        f = np.linalg.inv(T) @ T.conj().T
        acc += np.abs(f) ** 2          # [l, n]
    return (acc / samples).T           # [n, l]


def fock_wigner(n, x, p):
    r2 = np.asarray(x) ** 2 + np.asarray(p) ** 2
    return (-1) ** n / math.pi * np.exp(-r2) * eval_laguerre(n, 2 * r2)


def smoothed_fock1(x, p, tau):
    """Fock-1 Wigner convolved with an isotropic Gaussian of variance ``tau``."""
    # W1 = (2 R^2 - 1) W0 with W0 the vacuum; both terms convolve in closed form
    s = 0.5 + tau
    r2 = x * x + p * p
    g = np.exp(-r2 / (2 * s)) / (2 * math.pi * s)
    a = 0.5 / s
    return g * (-1 + 2 * (a * a * r2 + 2 * tau * a))
