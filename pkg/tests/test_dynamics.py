import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_state
from mcegate import (
    ROTATING_WAVE,
    SPIN_BOSON,
    Configuration,
    FockEvolver,
    FockTruncation,
    GridInit,
    GridInitError,
    HamiltonianSpec,
    IntegratorConfig,
    McEState,
    MCEEvolver,
    StepError,
    build_linear,
    diagnostics,
    divergence_time,
    energy,
    init_grid,
    propagate,
    reduce_to_qubits,
    step,
)
from mcegate import dynamics
from mcegate.dynamics import amplitude_rhs, ehrenfest_rhs, make_rng, solve_gram
from mcegate.hamiltonian import DegenerateConfigurationError
from mcegate.hilbert import basis_state, gram_matrix


def free(w=1.0, M=1):
    return HamiltonianSpec(SPIN_BOSON, 0, 0, np.full(M, w), np.zeros((M, 2)))


def zero_h(M=1):
    return HamiltonianSpec(SPIN_BOSON, 0, 0, np.zeros(M), np.zeros((M, 2)))


def test_config_validation():
    for kw in ({"dt": 0}, {"method": "euler"}, {"abs_tol": 0}, {"gram_reg": 1e-2}, {"gram_reg": -1}):
        with pytest.raises(ValueError):
            IntegratorConfig(**kw)
    for kw in ({"N": 0}, {"comp": 0}):
        with pytest.raises(ValueError):
            GridInit(**kw)


def test_single_config_init_is_exact():
    q = np.array([0.6, 0, 0.8j, 0])
    s, res = init_grid(GridInit(N=1, comp=0.3), q, [0.5 - 0.2j, 1j], return_residual=True)
    assert s.N == 1 and res == 0
    assert np.array_equal(s.centers[0], [0.5 - 0.2j, 1j])
    assert np.allclose(s.amps[0], q)


def test_conjugate_pair_init():
    s = init_grid(GridInit(N=2, comp=1.0, conjugate_pairs=True, seed=3), basis_state(1), [0.0, 0.0])
    assert np.allclose(s.centers[1], s.centers[0].conj())
    s = init_grid(GridInit(N=5, comp=1.0, conjugate_pairs=True, seed=3), basis_state(1), [0.0])
    assert np.allclose(s.centers[3], s.centers[2].conj()) and s.centers[4, 0] == 0


def test_projection_residual_small_grid():
    from math import factorial

    z0 = np.array([0.3 + 0.1j])
    s, res = init_grid(GridInit(N=10, comp=4.0, seed=1), basis_state(2), z0, return_residual=True)
    assert res < 1e-3
    # independent residual from explicit Fock-space vectors
    k = np.arange(60)
    fac = np.array([np.sqrt(float(factorial(i))) for i in k])

    def coh(z):
        return np.exp(-abs(z) ** 2 / 2) * z**k / fac

    target = np.kron(basis_state(2), coh(z0[0]))
    grid = sum(np.kron(c, coh(z[0])) for z, c in zip(s.centers, s.physical_amplitudes()))
    assert abs(np.linalg.norm(grid - target) - res) < 1e-9


def test_init_errors():
    with pytest.raises(ValueError):
        init_grid(GridInit(), [1, 1, 0, 0], [0.0])
    with pytest.raises(GridInitError) as info:
        init_grid(GridInit(N=4, comp=1e9, seed=2), basis_state(1), [0.0], gram_reg=0.0)
    assert info.value.cond > 1e8


def test_rng_streams_are_keyed():
    a = make_rng(5, 1).standard_normal(3)
    assert np.array_equal(a, make_rng(5, 1).standard_normal(3))
    assert not np.array_equal(a, make_rng(5, 2).standard_normal(3))
    assert isinstance(make_rng(0).bit_generator, np.random.Philox)


def test_ehrenfest_rhs_examples():
    a0 = 0.4 - 0.7j
    assert abs(ehrenfest_rhs(free(0.9), Configuration([a0], basis_state(3)))[0] - (-0.9j * a0)) < 1e-15
    assert ehrenfest_rhs(zero_h(2), Configuration([a0, 1], basis_state(1)))[1] == 0
    s = HamiltonianSpec(SPIN_BOSON, 0, 0, [0.0], [[1.0, 0.0]])
    plus = (basis_state(1) + basis_state(3)) / np.sqrt(2)
    assert abs(ehrenfest_rhs(s, Configuration([0.8], plus))[0] - (-1j)) < 1e-15
    with pytest.raises(DegenerateConfigurationError):
        ehrenfest_rhs(s, Configuration([0.8], np.zeros(4)))


def test_amplitude_rhs_single_config_free_oscillator():
    spec = free(0.7)
    st_ = McEState([[0.5 + 0.5j]], [basis_state(2)])
    zdot = ehrenfest_rhs(spec, st_.configs[0])
    cdot = amplitude_rhs(spec, st_, [zdot])
    # d|c|^2/dt = 2 Re(c* cdot) must vanish
    assert abs(np.real(np.vdot(st_.amps[0], cdot[0]))) < 1e-14


def test_amplitude_rhs_zeeman_phase():
    eps = 0.35
    spec = HamiltonianSpec(ROTATING_WAVE, eps, 0, [0.0], np.zeros((1, 2)))
    st_ = McEState([[0.1j]], [np.array([0, 0, 0, 1.0])])
    cdot = amplitude_rhs(spec, st_, [[0.0]])
    assert abs(cdot[0, 3] - (-2j * eps)) < 1e-14


def test_zero_hamiltonian_static(rng):
    s = random_state(rng, 4, 2, scale=0.5)
    assert np.allclose(amplitude_rhs(zero_h(2), s, np.zeros((4, 2))), 0, atol=1e-12)
    out = propagate(zero_h(2), s, IntegratorConfig(dt=0.1), [0.0, 1.0])
    assert np.allclose(reduce_to_qubits(out[-1]), reduce_to_qubits(s), atol=1e-12)


def test_tiny_step_changes_little(rng):
    spec = HamiltonianSpec.uniform(SPIN_BOSON, [0.3, 0.5], 1, 1, epsilon=1, delta=1)
    s = init_grid(GridInit(N=4, comp=2, seed=1), basis_state(4), [0, 0])
    for dt in (1e-3, 1e-4):
        s2 = step(spec, s, IntegratorConfig(dt=dt))
        assert s2.time == pytest.approx(dt)
        assert np.max(abs(s2.centers - s.centers)) < 10 * dt


def test_free_oscillator_period():
    w, a0 = 1.0, 0.8 - 0.3j
    s = McEState([[a0]], [basis_state(4)])
    T = 2 * np.pi / w
    icfg = IntegratorConfig(dt=T / 1000)
    ts = np.linspace(0, T, 11)
    out = propagate(free(w), s, icfg, ts)
    for t, o in zip(ts, out):
        assert abs(o.centers[0, 0] - a0 * np.exp(-1j * w * t)) < 1e-8
        assert abs(abs(o.physical_amplitudes()[0, 3]) - 1) < 1e-9
    assert abs(out[-1].centers[0, 0] - a0) < 1e-8


@settings(max_examples=10)
@given(st.sampled_from([SPIN_BOSON, ROTATING_WAVE]), st.integers(0, 2**31))
def test_norm_is_conserved(variant, seed):
    rng = np.random.default_rng(seed)
    spec = HamiltonianSpec(variant, rng.normal(), rng.normal(size=2), rng.uniform(0.1, 1, 2), rng.normal(size=(2, 2)))
    q = rng.normal(size=4) + 1j * rng.normal(size=4)
    s = init_grid(GridInit(N=5, comp=1.5, seed=seed), q / np.linalg.norm(q), [0.2, -0.1j])
    n0 = diagnostics(spec, s).norm
    out = propagate(spec, s, IntegratorConfig(dt=0.01), [0.3])
    assert abs(diagnostics(spec, out[-1]).norm - n0) < 1e-6


def test_energy_matches_fock_expectation(rng):
    from math import factorial

    spec = HamiltonianSpec(SPIN_BOSON, 0.3, (0.5, -0.2), [0.4], [[0.7, 0.2]])
    s = random_state(rng, 3, 1, scale=0.6)
    nmax = 60
    k = np.arange(nmax)
    fac = np.array([np.sqrt(float(factorial(i))) for i in k])
    psi = sum(np.kron(c, np.exp(-abs(z[0]) ** 2 / 2) * z[0] ** k / fac)
              for z, c in zip(s.centers, s.physical_amplitudes()))
    ad = np.diag(np.sqrt(k[1:]), -1)
    A = spec.coupling_operators()[0]
    H = (np.kron(spec.qubit_hamiltonian(), np.eye(nmax)) + 0.4 * np.kron(np.eye(4), ad @ ad.T)
         + np.kron(A, ad.T) + np.kron(A.conj().T, ad))
    assert abs(energy(spec, s) - np.vdot(psi, H @ psi).real) < 1e-9


def test_zero_hamiltonian_diagnostics():
    s = init_grid(GridInit(N=1), basis_state(1), [0.4])
    d = diagnostics(zero_h(), s)
    assert d.norm == pytest.approx(1, abs=1e-15) and d.energy == 0


def test_divergence_time():
    t = np.linspace(0, 5, 51)
    norms = np.ones_like(t)
    energies = np.ones_like(t)
    assert divergence_time(t, norms, energies) is None
    norms[30:] = 1.02
    assert divergence_time(t, norms, energies) == pytest.approx(3.0)
    e = np.zeros_like(t)
    e[10:] = 0.02  # drift measured on an absolute floor of 1 when E(0) = 0
    assert divergence_time(t, np.ones_like(t), e) == pytest.approx(1.0)


def test_solve_gram_regularizes(rng):
    z = np.array([[0.0], [1e-7], [1.0]])
    G = gram_matrix(z)
    b = rng.normal(size=(3, 2)) + 0j
    _, cond, reg = solve_gram(G, b, 1e-8)
    assert reg and cond > 1e8
    X, cond, reg = solve_gram(np.eye(3), b, 1e-8)
    assert not reg and np.allclose(X, b) and cond == pytest.approx(1)


def test_step_failure_reports_partial_results(monkeypatch):
    spec = free()
    s = McEState([[0.5]], [basis_state(1)])
    calls = {"n": 0}
    real = dynamics._rk4

    def flaky(f, t, y, h):
        calls["n"] += 1
        return real(f, t, y, h) if calls["n"] < 25 else y * np.nan

    monkeypatch.setattr(dynamics, "_rk4", flaky)
    with pytest.raises(StepError) as info:
        propagate(spec, s, IntegratorConfig(dt=0.1), [0.0, 1.0, 2.0, 3.0])
    assert info.value.last_good_time == pytest.approx(2.0)
    assert len(info.value.partial) == 3


def test_rk45_agrees_with_rk4():
    spec = HamiltonianSpec.uniform(ROTATING_WAVE, [0.1, 0.2], 1.0, 1.5)
    s = init_grid(GridInit(N=6, comp=3, seed=2), basis_state(4), [0, 0])
    b = propagate(spec, s, IntegratorConfig(dt=0.01, method="rk45", abs_tol=1e-12, rel_tol=1e-12), [0.5, 1.0])[-1]
    errs = []
    for dt in (0.01, 0.005):
        a = propagate(spec, s, IntegratorConfig(dt=dt), [0.5, 1.0])[-1]
        errs.append(np.max(abs(reduce_to_qubits(a) - reduce_to_qubits(b))))
    # fourth-order convergence of the fixed-step scheme toward the adaptive one
    assert errs[1] < 1e-6 and errs[0] / errs[1] > 8


def test_grid_permutation_invariance_under_evolution():
    spec = HamiltonianSpec.uniform(ROTATING_WAVE, [0.1, 0.2], 1.0, 1.5)
    s = init_grid(GridInit(N=6, comp=3, seed=2), basis_state(4), [0, 0])
    p = s.permuted([3, 1, 5, 0, 2, 4])
    icfg = IntegratorConfig(dt=0.02)
    a, b = propagate(spec, s, icfg, [0.6])[-1], propagate(spec, p, icfg, [0.6])[-1]
    assert np.allclose(reduce_to_qubits(a), reduce_to_qubits(b), atol=1e-12)


def test_single_mode_density_matrix_tracks_oracle():
    spec = HamiltonianSpec.uniform(ROTATING_WAVE, build_linear(1, 0.1), 1.0, 1.9)
    ts = np.linspace(0, 3, 16)
    q = np.full(4, 0.5)
    exact = FockEvolver(spec, FockTruncation(2, 1))
    errs = []
    for N in (9, 25):
        ev = MCEEvolver(spec, GridInit(N=N, comp=1.0, seed=0), IntegratorConfig(dt=0.01))
        mce = [reduce_to_qubits(x) for x in ev.run(q, None, ts)]
        ora = [exact.reduce(x) for x in exact.run(q, None, ts)]
        errs.append(max(np.max(abs(a - b)) for a, b in zip(mce, ora)))
    assert errs[1] < 2e-2 and errs[1] < errs[0]


def test_evolver_streams_differ():
    spec = free(M=2)
    ev = MCEEvolver(spec, GridInit(N=4, comp=2, seed=9), IntegratorConfig())
    a = ev.initial(basis_state(1)).centers
    assert np.array_equal(a, ev.initial(basis_state(2)).centers)
    assert not np.array_equal(a, ev.for_stream(1).initial(basis_state(1)).centers)
    assert ev.with_grid(N=6).initial(basis_state(1)).N == 6
