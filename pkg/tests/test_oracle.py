import numpy as np
import pytest

from mcegate import (
    ROTATING_WAVE,
    SPIN_BOSON,
    BudgetError,
    ExactPropagator,
    FockEvolver,
    FockTruncation,
    HamiltonianSpec,
    UnsupportedRegimeError,
    build_linear,
    channel_trace,
    choi_fidelity,
    exact_evolve,
    rwa_sector_solve,
    sector_evolver,
)
from mcegate.hilbert import basis_state
from mcegate.oracle import FockSpace, build_truncated_hamiltonian, reduce_vector


def rwa(M=1, g2=1.9, **kw):
    return HamiltonianSpec.uniform(ROTATING_WAVE, build_linear(M, 0.1), 1.0, g2, **kw)


def test_qubit_only_diagonal():
    s = HamiltonianSpec.uniform(SPIN_BOSON, [1.0], 0, 0, epsilon=1.0)
    H = build_truncated_hamiltonian(s, FockTruncation(0, 1))
    assert np.allclose(H, np.diag([-2, 0, 0, 2]))


def test_rwa_single_excitation_element():
    s = HamiltonianSpec(ROTATING_WAVE, 0, 0, [0.3], [[0.7, 1.1]])
    tr = FockTruncation(3, 1)
    sp = FockSpace(tr)
    H = build_truncated_hamiltonian(s, tr, sp)
    row = 2 * sp.dim + sp.index[(0,)]  # |ud, 0>
    col = 0 * sp.dim + sp.index[(1,)]  # |dd, 1>
    assert abs(H[row, col] - 0.7) < 1e-15


@pytest.mark.parametrize("variant", [SPIN_BOSON, ROTATING_WAVE])
def test_truncated_hamiltonian_is_hermitian(variant):
    s = HamiltonianSpec(variant, 0.3, (0.2, 0.5), [0.1, 0.4], [[1, 2], [0.5, -1]])
    H = build_truncated_hamiltonian(s, FockTruncation(3, 2))
    assert np.array_equal(H, H.conj().T)


def test_ladder_rules():
    sp = FockSpace(FockTruncation(5, 1))
    a = sp.lowering[0].toarray()
    assert np.allclose(a, np.diag(np.sqrt(np.arange(1, 6)), 1))


def test_budget():
    with pytest.raises(BudgetError):
        FockTruncation(6, 6)
    assert FockTruncation(6, 10, n_total=2).dim == 4 * 66


def test_exact_evolve_basics(rng):
    X = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    H = X + X.conj().T
    psi = rng.normal(size=6) + 1j * rng.normal(size=6)
    psi /= np.linalg.norm(psi)
    assert np.allclose(exact_evolve(H, psi, 0.0), psi, atol=1e-14)
    assert np.allclose(exact_evolve(np.zeros((6, 6)), psi, 3.7), psi)
    prop = ExactPropagator(H)
    out = prop.evolve(psi, np.linspace(0, 50, 11))
    assert np.allclose(np.linalg.norm(out, axis=1), 1, atol=1e-12)
    from scipy.linalg import expm

    assert np.allclose(out[3], expm(-1j * H * 15) @ psi, atol=1e-10)


def test_rabi_period():
    g = 0.8
    s = HamiltonianSpec(ROTATING_WAVE, 0, 0, [0.0], [[g, 0.0]])
    ev = FockEvolver(s, FockTruncation(2, 1))
    ts = np.linspace(0, 2 * np.pi / (2 * g), 9)
    p = np.array([reduce_vector(psi)[2, 2].real for psi in ev.run(basis_state(3), None, ts)])
    assert np.allclose(p, np.cos(g * ts) ** 2, atol=1e-12)
    assert abs(p[-1] - 1) < 1e-12


def test_ground_sector_is_stationary():
    rhos = rwa_sector_solve(rwa(3), basis_state(1), np.linspace(0, 5, 6))
    assert np.allclose(rhos, np.diag([1, 0, 0, 0]), atol=1e-13)


def test_sector_solver_refuses_other_regimes():
    with pytest.raises(UnsupportedRegimeError):
        rwa_sector_solve(rwa(delta=0.5), basis_state(1), [0.0])
    with pytest.raises(UnsupportedRegimeError):
        sector_evolver(rwa().replace(variant=SPIN_BOSON))


def test_sector_solver_matches_full_truncation():
    s = rwa(1)
    ts = np.linspace(0, 5, 21)
    full = FockEvolver(s, FockTruncation(4, 1))
    q = np.array([0.5, 0.5j, -0.5, 0.5])
    a = rwa_sector_solve(s, q, ts)
    b = np.array([reduce_vector(p) for p in full.run(q, None, ts)])
    assert np.max(abs(a - b)) < 1e-8


def test_truncation_convergence_of_fidelity():
    s = rwa(1)
    ts = np.linspace(0, 6, 31)
    z = np.zeros(1)
    f4 = [choi_fidelity(c) for c in channel_trace(FockEvolver(s, FockTruncation(4, 1)), z, ts)]
    f6 = [choi_fidelity(c) for c in channel_trace(FockEvolver(s, FockTruncation(6, 1)), z, ts)]
    assert np.max(abs(np.subtract(f4, f6))) < 1e-6


def test_krylov_path_matches_dense():
    s = HamiltonianSpec.uniform(SPIN_BOSON, [0.1, 0.2], 0.5, 0.5, epsilon=1, delta=1)
    tr = FockTruncation(4, 2)
    dense = FockEvolver(s, tr)
    sparse = FockEvolver(s, tr, dense_limit=10)
    ts = np.linspace(0, 2, 5)
    q = basis_state(4)
    for a, b in zip(dense.run(q, [0.3j, 0.1], ts), sparse.run(q, [0.3j, 0.1], ts)):
        assert np.allclose(a, b, atol=1e-10)
    with pytest.raises(ValueError):
        sparse.run(q, None, [0.0, 0.1, 0.5])


def test_excitation_number_is_conserved_by_rwa():
    s = rwa(2, epsilon=0.4)
    tr = FockTruncation(3, 2)
    sp = FockSpace(tr)
    H = build_truncated_hamiltonian(s, tr, sp)
    ups = np.array([0, 1, 1, 2])
    exc = (ups[:, None] + sp.number()[None, :]).ravel()
    assert np.all(H[exc[:, None] != exc[None, :]] == 0)
