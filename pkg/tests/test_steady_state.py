import math

import numpy as np
import pytest

from optowigner import (FockPopulations, PhaseSpaceGrid, PreconditionError, SystemParams,
                        fock_diagonal_wigner, inverse_coefficients, master_equation_generator,
                        recurrences, rwa_transfer, solve_steady_state, validate_rwa, witness)
from optowigner.errors import DomainError, SolverError, TruncationError, UnsupportedError
from optowigner.steady_state import (balance_matrix, default_steady_grid, read_populations,
                                     thermal_populations, uhlmann_fidelity, witness_crossing,
                                     write_populations)
from oracles import dense_T, fock_wigner, period_averaged_transfer

MU = lambda g: math.sqrt(8) * g  # noqa: E731


def test_first_recurrence_steps():
    mu = 1.7
    th = recurrences(5, mu).theta
    assert th[0] == th[1] == 1
    assert th[2] == pytest.approx(1 + mu ** 2 / 8, rel=1e-15)
    assert th[3] == pytest.approx(1 + 3 * mu ** 2 / 8, rel=1e-15)


@pytest.mark.parametrize("N", [10, 20, 40])
@pytest.mark.parametrize("g", [1, 5, 10])
def test_theta_is_determinant(N, g):
    rec = recurrences(N, MU(g))
    sign, logdet = np.linalg.slogdet(dense_T(N, MU(g)))
    assert sign == pytest.approx(1.0, abs=1e-12)
    assert rec.log_theta[-1] == pytest.approx(logdet, rel=1e-12, abs=1e-10)
    assert np.all(np.isfinite(rec.log_theta)) and np.all(np.isfinite(rec.log_phi[1:]))


def test_positive_continuants_without_overflow():
    rec = recurrences(5000, MU(10))
    assert np.all(np.isfinite(rec.log_theta))
    assert np.isinf(rec.det)          # plain value overflows, the log form does not


def test_one_level_inverse():
    C = inverse_coefficients(recurrences(1, 2.0))
    assert C.shape == (1, 1) and C[0, 0] == pytest.approx(1.0)


@pytest.mark.parametrize("wt", [0.0, 0.37])
def test_inverse_with_time_factors(wt):
    N, mu = 30, MU(5)
    C = inverse_coefficients(recurrences(N, mu))
    idx = np.arange(N)
    inv = C * np.exp(1j * np.subtract.outer(idx, idx) * wt)
    assert np.max(np.abs(dense_T(N, mu, wt) @ inv - np.eye(N))) < 1e-10


@pytest.mark.parametrize("g", [0.5, 3.0])
def test_transfer_matches_period_average(g):
    N, mu = 15, MU(g)
    phi = rwa_transfer(inverse_coefficients(recurrences(N, mu)), N, mu)
    assert np.max(np.abs(phi - period_averaged_transfer(N, mu))) < 1e-8
    assert np.max(np.abs(phi.sum(axis=1) - 1)) < 1e-8


def test_transfer_weak_coupling():
    N, mu = 12, 1e-7
    phi = rwa_transfer(inverse_coefficients(recurrences(N, mu)), N, mu)
    np.testing.assert_allclose(phi, np.eye(N), atol=1e-12)


def test_ground_state_without_drive():
    pop = solve_steady_state(SystemParams(3.0), 40)
    assert pop.probs[0] == pytest.approx(1.0, abs=1e-14)
    assert np.all(pop.probs[1:] < 1e-14)


def test_thermal_without_drive():
    pop = solve_steady_state(SystemParams(3.0, n_bath=0.5), 120)
    np.testing.assert_allclose(pop.probs, thermal_populations(0.5, pop.truncation_n), atol=1e-12)


def test_weak_drive_continuity():
    p = SystemParams(1e-6 / math.sqrt(8), n_bath=0.3, flux_k=0.1)
    pop = solve_steady_state(p, 100)
    th = thermal_populations(0.3, pop.truncation_n)
    np.testing.assert_allclose(pop.probs, th / th.sum(), atol=1e-8)


def test_populations_are_normalised():
    pop = solve_steady_state(SystemParams(4.0, flux_k=0.1), 100)
    assert pop.probs.sum() == pytest.approx(1.0, abs=1e-10)
    assert pop.diagnostics["min_raw"] >= -1e-12
    assert pop.tail_ok()


def test_literal_zero_column_system_is_singular():
    p = SystemParams(3.0, flux_k=0.1)
    A, _ = balance_matrix(p, 30, boundary=False)
    assert np.linalg.matrix_rank(A) == 30          # one short of full rank
    A, _ = balance_matrix(p, 30)
    assert np.linalg.matrix_rank(A) == 31
    with pytest.raises(SolverError) as err:
        solve_steady_state(p, 30, boundary=False)
    assert err.value.diagnostics["rank"] == 30


def test_dense_and_recurrence_transfer_agree():
    p = SystemParams(2.5, flux_k=0.1)
    a = solve_steady_state(p, 40, escalations=0, strict_tail=False)
    b = solve_steady_state(p, 40, escalations=0, strict_tail=False, transfer="dense")
    np.testing.assert_allclose(a.probs, b.probs, atol=1e-10)


def test_escalation_and_truncation_error():
    p = SystemParams(4.0, flux_k=0.1)
    pop = solve_steady_state(p, 50)
    assert pop.truncation_n > 50 and len(pop.diagnostics["attempts"]) > 1
    with pytest.raises(TruncationError):
        solve_steady_state(p, 50, escalations=1)


def test_parameter_restrictions():
    with pytest.raises(UnsupportedError):
        solve_steady_state(SystemParams(1.0, flux_k2=0.1), 20)
    with pytest.raises(UnsupportedError):
        solve_steady_state(SystemParams(1.0, delta_bar=0.2), 20)
    with pytest.raises(PreconditionError):
        solve_steady_state(SystemParams(1.0, flux_k=1e6), 20)
    with pytest.raises(DomainError):
        solve_steady_state(SystemParams(1.0), 1)


def test_witness_values():
    ground = FockPopulations(np.eye(1, 300)[0], 299, 0.0)
    assert witness(ground, 100).value == 0.0
    th = thermal_populations(1.0, 400)
    # sum over odd n of (1/2)^(n+1) = 1/3
    assert witness(FockPopulations(th, 400, th[-2]), 100).value == pytest.approx(1 / 3, abs=1e-12)
    with pytest.raises(PreconditionError):
        witness(FockPopulations(th[:101], 100, 0.0), 100)
    w = witness(FockPopulations(th[:101], 100, 0.0), 100, strict=False)
    assert w.levels_used == 50


def test_witness_certifies_negative_origin():
    pop = solve_steady_state(SystemParams(6.0, flux_k=0.1), 200)
    w = witness(pop, 100)
    assert w.certified
    g = PhaseSpaceGrid(-1, 1, -1, 1, 3, 3)
    assert fock_diagonal_wigner(pop, g).values[1, 1] < 0


def test_crossing_at_fixed_truncation():
    # frozen from this solver at the 100-level truncation
    assert witness_crossing(0.1, 2.5, 5.0) == pytest.approx(3.5167, abs=2e-3)


@pytest.mark.parametrize("n", [0, 1, 2, 5, 17, 60])
def test_fock_wigner_against_laguerre(n):
    probs = np.zeros(n + 1)
    probs[n] = 1.0
    g = PhaseSpaceGrid(-8, 8, -7, 9, 41, 37)
    w = fock_diagonal_wigner(FockPopulations(probs, n, 0.0), g)
    X, P = np.meshgrid(g.x, g.p, indexing="ij")
    assert np.max(np.abs(w.values - fock_wigner(n, X, P))) < 1e-12


def test_fock_wigner_extremes():
    g = PhaseSpaceGrid(-1, 1, -1, 1, 3, 3)
    assert fock_diagonal_wigner(FockPopulations(np.array([1.0, 0]), 1, 0), g).values[1, 1] == \
        pytest.approx(1 / math.pi)
    assert fock_diagonal_wigner(FockPopulations(np.array([0, 1.0]), 1, 0), g).values[1, 1] == \
        pytest.approx(-1 / math.pi)


def test_fock_wigner_high_levels_do_not_overflow():
    probs = np.zeros(1501)
    probs[1500] = 1.0
    g = PhaseSpaceGrid(-60, 60, -1, 1, 241, 3)
    w = fock_diagonal_wigner(FockPopulations(probs, 1500, 0.0), g)
    assert np.all(np.isfinite(w.values)) and np.max(np.abs(w.values)) <= 1 / math.pi


def test_steady_grid_normalisation_and_rotation():
    pop = solve_steady_state(SystemParams(3.0, n_bath=0.2, flux_k=0.1), 100)
    w = fock_diagonal_wigner(pop, default_steady_grid(pop))
    assert w.total == pytest.approx(1.0, abs=1e-4)
    assert np.allclose(w.values, w.values.T, atol=1e-15)
    assert np.allclose(w.values, w.values[::-1], atol=1e-15)


def test_jump_operators():
    ops = master_equation_generator(SystemParams(2.0, flux_k=0.3), 30)
    assert np.max(np.abs(ops.L2)) == 0.0
    np.testing.assert_allclose(ops.L1.conj().T @ ops.L1, 0.6 * np.eye(30), atol=1e-12)
    weak = master_equation_generator(SystemParams(1e-12, flux_k=0.3), 10).L1
    rho = np.diag(np.linspace(1, 2, 10)) + 0.1
    diss = weak @ rho @ weak.conj().T - 0.5 * (weak.conj().T @ weak @ rho + rho @ weak.conj().T @ weak)
    assert np.max(np.abs(diss)) < 1e-10


def test_uhlmann_fidelity_basics():
    rho = np.diag([0.5, 0.3, 0.2]).astype(complex)
    assert uhlmann_fidelity(rho, rho) == pytest.approx(1.0, abs=1e-12)
    sigma = np.diag([0.2, 0.3, 0.5]).astype(complex)
    assert uhlmann_fidelity(rho, sigma) == pytest.approx(
        (np.sum(np.sqrt([0.1, 0.09, 0.1]))) ** 2, abs=1e-12)


def test_rwa_without_drive_is_static():
    p = SystemParams(3.0, n_bath=0.4)
    pop = solve_steady_state(p, 40, escalations=0, strict_tail=False)
    v = validate_rwa(pop, p, periods=2)
    assert np.all(np.abs(v.fidelity - 1) < 1e-12)


def test_one_period_keeps_steady_state():
    p = SystemParams(3.0, flux_k=0.1)
    pop = solve_steady_state(p, 60, escalations=0, strict_tail=False)
    assert validate_rwa(pop, p, periods=1).min_fidelity >= 1 - 1e-6


def test_rwa_rejects_coarse_steps():
    p = SystemParams(3.0, flux_k=0.1)
    pop = solve_steady_state(p, 20, escalations=0, strict_tail=False)
    with pytest.raises(DomainError):
        validate_rwa(pop, p, periods=1, steps_per_period=50)


def test_population_files(tmp_path):
    pop = solve_steady_state(SystemParams(3.0, flux_k=0.1), 60, escalations=0,
                             strict_tail=False)
    path = tmp_path / "populations.csv"
    write_populations(pop, path)
    back = read_populations(path)
    assert np.array_equal(back.probs, pop.probs)
    assert (tmp_path / "populations.csv.json").exists()
