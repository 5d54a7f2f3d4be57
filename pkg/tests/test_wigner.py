import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from optowigner import (AccuracyError, DeterministicCoherent, DeterministicSqueezedVac,
                        PhaseSpaceGrid, PhotonCount, PreconditionError, QuadratureSettings,
                        SystemParams, compute_wigner, default_grid, marginal,
                        squeezed_thermal, symmetry_check)
from optowigner.errors import DomainError
from optowigner.gaussian import wigner as gaussian_wigner
from optowigner.kernels import KernelSpec, LossyPhotonCount
from optowigner.negativity import negative_volume
from optowigner.wigner import read_csv, wigner_at, write_csv


def identity(p):
    return KernelSpec(p)


def test_vacuum_passthrough():
    s = squeezed_thermal()
    g = PhaseSpaceGrid(-6, 6, -6, 6, 121, 121)
    w = compute_wigner(g, identity(SystemParams(2.0)), s)
    assert w.value_at(0, 0) == pytest.approx(1 / math.pi, abs=1e-12)
    assert w.total == pytest.approx(1.0, abs=1e-9)
    assert symmetry_check(w) < 1e-14
    assert marginal(w, "X")[60] == pytest.approx(1 / math.sqrt(math.pi), abs=1e-9)


def test_weak_coupling_returns_input():
    s = squeezed_thermal(0.0, 0.4)
    g = PhaseSpaceGrid(-5, 5, -4, 4, 41, 41)
    w = compute_wigner(g, DeterministicCoherent(SystemParams(1e-14), 2.0), s,
                       QuadratureSettings(nodes=401))
    X, P = np.meshgrid(g.x, g.p, indexing="ij")
    assert np.max(np.abs(w.values - gaussian_wigner(s, X, P))) < 1e-10


def _kernels(p):
    return [DeterministicCoherent(p, 2.0), DeterministicSqueezedVac(p, 0.691),
            PhotonCount(p, 1), LossyPhotonCount(p, 1, 0.5, 2.0)]


@pytest.mark.parametrize("idx", range(4))
def test_position_marginal_is_preserved(idx):
    p = SystemParams(1.5, delta_bar=0.7)
    s = squeezed_thermal(0.1, 0.3)
    k = _kernels(p)[idx]
    g = default_grid(s, k, spacing=0.1)
    w = compute_wigner(g, k, s)
    x_marg = marginal(w, "X")
    ref = np.exp(-g.x ** 2 / (2 * s.var_x)) / math.sqrt(2 * math.pi * s.var_x)
    assert np.max(np.abs(x_marg - ref)) < 1e-6
    assert w.total == pytest.approx(1.0, abs=1e-3)
    assert w.max_imag_residual < 1e-8


def test_marginal_total_matches_grid_total():
    s = squeezed_thermal()
    k = DeterministicCoherent(SystemParams(1.0), 2.0)
    w = compute_wigner(default_grid(s, k, spacing=0.1), k, s)
    assert np.trapezoid(marginal(w, "P"), dx=w.grid.dp) == pytest.approx(w.total, abs=1e-6)
    with pytest.raises(DomainError):
        marginal(w, "Q")


def test_momentum_mean_matches_kick():
    # weak coupling: mean momentum shift mu |alpha|^2, as for the linearised model
    p = SystemParams(0.05 / math.sqrt(8))
    s = squeezed_thermal()
    k = DeterministicCoherent(p, 2.0)
    w = compute_wigner(default_grid(s, k, spacing=0.05), k, s)
    pm = np.trapezoid(marginal(w, "P") * w.grid.p, dx=w.grid.dp)
    assert pm == pytest.approx(p.mu * 4.0, rel=2e-3)


def test_parity_and_asymmetry():
    s = squeezed_thermal()
    k0 = DeterministicCoherent(SystemParams(0.8), 2.0)
    g = default_grid(s, k0, n_x=81, n_p=121)
    assert symmetry_check(compute_wigner(g, k0, s)) < 1e-6
    k1 = DeterministicCoherent(SystemParams(0.8, delta_bar=1.5), 2.0)
    w1 = compute_wigner(g, k1, s)
    assert symmetry_check(w1) > 0.1 * np.max(np.abs(w1.values))


def test_symmetry_check_needs_symmetric_grid():
    s = squeezed_thermal()
    w = compute_wigner(PhaseSpaceGrid(-3, 4, -4, 4, 11, 11), identity(SystemParams(1)), s)
    with pytest.raises(PreconditionError):
        symmetry_check(w)


def test_quadrature_convergence():
    s = squeezed_thermal()
    k = DeterministicCoherent(SystemParams(2.0), 2.0)
    g = default_grid(s, k, spacing=0.1)
    base = compute_wigner(g, k, s)
    n = base.meta["quadrature"]["nodes_used"]
    fine = compute_wigner(g, k, s, QuadratureSettings(nodes=2 * n + 1))
    assert abs(negative_volume(base).delta - negative_volume(fine).delta) < 1e-4


def test_worker_count_does_not_change_output():
    s = squeezed_thermal(0.0, 0.691)
    k = DeterministicCoherent(SystemParams(1.0), 2.0)
    g = default_grid(s, k, n_x=61, n_p=67)
    a = compute_wigner(g, k, s, workers=1).values
    b = compute_wigner(g, k, s, workers=3).values
    assert np.array_equal(a, b)


class _Broken(KernelSpec):
    def __call__(self, x, u):
        x, u = np.broadcast_arrays(x, u)
        return (1 + 0.5j) * np.exp(0.3j * u) * np.ones(x.shape)


def test_imaginary_residual_is_fatal():
    with pytest.raises(AccuracyError):
        compute_wigner(PhaseSpaceGrid(-1, 1, -1, 1, 5, 5), _Broken(SystemParams(1)),
                       squeezed_thermal())


def test_small_grid_sets_flag():
    s = squeezed_thermal()
    with pytest.warns(RuntimeWarning):
        w = compute_wigner(PhaseSpaceGrid(-1, 1, -1, 1, 11, 11), identity(SystemParams(1)), s)
    assert not w.normalization_ok


def test_wigner_at_matches_grid():
    s = squeezed_thermal()
    k = PhotonCount(SystemParams(2.0), 1)
    g = PhaseSpaceGrid(-2, 2, -1, 3, 9, 9)
    w = compute_wigner(g, k, s, QuadratureSettings(nodes=1025))
    pts = wigner_at(k, s, g.x[3], g.p[5], QuadratureSettings(nodes=1025))
    assert pts == pytest.approx(w.values[3, 5], abs=1e-13)


def test_csv_roundtrip(tmp_path):
    s = squeezed_thermal()
    g = PhaseSpaceGrid(-2, 2, -2, 2, 5, 7)
    w = compute_wigner(g, identity(SystemParams(1)), s)
    write_csv(w, tmp_path / "w.csv")
    head = (tmp_path / "w.csv").read_text().splitlines()
    assert head[0] == "X,P,W" and len(head) == 36
    assert np.array_equal(read_csv(tmp_path / "w.csv", g).values, w.values)


def test_grid_validation():
    with pytest.raises(DomainError):
        PhaseSpaceGrid(1, 0, 0, 1)
    with pytest.raises(DomainError):
        PhaseSpaceGrid(0, 1, 0, 1, 1, 5)
    g = PhaseSpaceGrid.from_spacing(-1, 1, 0, 0.95, 0.1)
    assert g.dx == pytest.approx(0.1) and g.n_x == 21 and g.p_max >= 0.95


@given(st.floats(0.1, 3), st.floats(-2, 2), st.floats(0, 1))
@settings(max_examples=8, deadline=None)
def test_normalisation_property(g0, det, r_m):
    s = squeezed_thermal(0.0, r_m)
    k = DeterministicCoherent(SystemParams(g0, delta_bar=det), 1.5)
    w = compute_wigner(default_grid(s, k, spacing=0.12), k, s)
    assert w.total == pytest.approx(1.0, abs=1e-3)
    assert w.max_imag_residual < 1e-8
