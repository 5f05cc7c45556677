import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from gflsar.errors import DivergenceError, FactorizationError
from gflsar.solver import (
    GflParams, SolverState, backprojection, build_cache, multiplier_update, objective,
    s_update, soft_threshold, solve_gfl, system_matrix, u_update, z_update,
)

from oracles import (
    chain_weights, csoft, difference_dense, fista_lasso, gfl_objective, lattice_weights,
    least_squares, proximal_gradient_gfl,
)


def crand(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_soft_threshold_cases():
    assert soft_threshold(np.array([0j]), 1.3)[0] == 0
    v = np.array([1 - 2j, 0.1j, -3.0])
    np.testing.assert_array_equal(soft_threshold(v, 0.0), v)
    np.testing.assert_allclose(soft_threshold(np.array([3 + 4j]), 2.0), [1.8 + 2.4j])


@given(st.lists(st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=20),
       st.floats(0, 1e3))
def test_soft_threshold_matches_loop(values, tau):
    v = np.array(values, dtype=complex)
    np.testing.assert_allclose(soft_threshold(v, tau), csoft(v, tau), rtol=1e-12, atol=1e-12)
    out = soft_threshold(v, tau)
    assert np.all(np.abs(out) <= np.abs(v) + 1e-9)


def test_cache_scaled_identity():
    N = 5
    p = GflParams(0.1, 0.1, c_u=2.0)
    cache = build_cache(np.zeros((3, N)), sp.csr_matrix((0, N)), p, np.zeros(3))
    b = np.arange(N) + 1j
    np.testing.assert_allclose(cache.solve(b), b / 2)


def test_cache_scalar():
    A = system_matrix(np.array([[1.0]]), None, 1.0, 1.0)
    np.testing.assert_array_equal(A, [[2.0]])


def test_cache_dense_assembly():
    rng = np.random.default_rng(0)
    Th = crand(rng, 6, 4)
    Lam = rng.standard_normal((7, 4))
    A = system_matrix(Th, sp.csr_matrix(Lam), 0.7, 1.3)
    expected = Th.conj().T @ Th + 0.7 * np.eye(4) + 1.3 * Lam.T @ Lam
    np.testing.assert_allclose(A, expected, atol=1e-12)
    np.testing.assert_allclose(A, A.conj().T)


def test_factorization_failure():
    # a negative c_u bypassing validation makes A indefinite
    p = GflParams(0.1, 0.1)
    object.__setattr__(p, "c_u", -5.0)
    with pytest.raises(FactorizationError):
        build_cache(np.zeros((2, 3)), None, p, np.zeros(2))


def test_s_update_trivial():
    N = 4
    p = GflParams(0.0, 0.0, c_u=1.0)
    Lam = sp.csr_matrix((0, N))
    b = np.array([1, 2j, -3, 4 + 1j])
    cache = build_cache(np.eye(N), Lam, p, b)
    np.testing.assert_allclose(s_update(cache, SolverState.zeros(N, 0), Lam), b / 2)
    cache0 = build_cache(np.eye(N), Lam, p, np.zeros(N))
    assert not s_update(cache0, SolverState.zeros(N, 0), Lam).any()


def test_u_z_updates_trivial():
    rng = np.random.default_rng(1)
    N = 6
    W = chain_weights(N)
    Lam = sp.csr_matrix(difference_dense(W))
    s = crand(rng, N)
    rho_u = crand(rng, N)
    st0 = SolverState(s, s, Lam @ s, rho_u, np.zeros(Lam.shape[0], complex))
    p = GflParams(0.0, 0.0, c_u=2.0, c_z=3.0)
    np.testing.assert_allclose(u_update(st0, p), s - rho_u / 2.0)
    np.testing.assert_allclose(z_update(st0, Lam, p), Lam @ s)
    st1 = SolverState(rho_u / 2.0, s, s, rho_u, st0.rho_z)
    assert not u_update(st1, GflParams(0.4, 0.0, c_u=2.0)).any()
    const = SolverState(np.full(N, 2 - 1j), s, s, rho_u, st0.rho_z)
    np.testing.assert_allclose(z_update(const, Lam, GflParams(0.1, 0.1)), 0, atol=1e-15)


def test_multiplier_updates():
    rng = np.random.default_rng(2)
    N = 5
    Lam = sp.csr_matrix(difference_dense(chain_weights(N)))
    E = Lam.shape[0]
    p = GflParams(0.1, 0.1, c_u=1.5, c_z=0.5)
    s = crand(rng, N)
    same = SolverState(s, s.copy(), Lam @ s, crand(rng, N), crand(rng, E))
    ru, rz = multiplier_update(same, Lam, p)
    np.testing.assert_allclose(ru, same.rho_u)
    np.testing.assert_allclose(rz, same.rho_z)
    d = crand(rng, N)
    st0 = SolverState(s, s + d, Lam @ s, np.zeros(N, complex), np.zeros(E, complex))
    ru, _ = multiplier_update(st0, Lam, p)
    np.testing.assert_allclose(ru, 1.5 * d)
    st0.rho_u = ru
    ru2, _ = multiplier_update(st0, Lam, p)
    np.testing.assert_allclose(ru2, 3.0 * d)


def test_zero_data_gives_zero():
    rng = np.random.default_rng(3)
    Th = crand(rng, 8, 5)
    Lam = sp.csr_matrix(difference_dense(chain_weights(5)))
    s, d = solve_gfl(Th, np.zeros(8), Lam, GflParams(0.1, 0.1))
    assert not s.any()
    assert d.objective == 0.0


def test_unregularised_square_system_inverts():
    rng = np.random.default_rng(4)
    N = 6
    Th = crand(rng, N, N) + 4 * np.eye(N)
    s_true = crand(rng, N)
    y = Th @ s_true
    Lam = sp.csr_matrix(difference_dense(chain_weights(N)))
    s, d = solve_gfl(Th, y, Lam, GflParams(0.0, 0.0, tol=1e-12, max_iter=5000))
    assert d.converged
    np.testing.assert_allclose(s, np.linalg.solve(Th, y), rtol=1e-6, atol=1e-8)


def test_chain_identity_matches_oracle():
    rng = np.random.default_rng(5)
    N = 3
    Th = np.eye(N)
    y = crand(rng, N)
    W = chain_weights(N)
    Lam = difference_dense(W)
    p = GflParams(0.2, 0.3, tol=1e-12, max_iter=20000)
    s, _ = solve_gfl(Th, y, sp.csr_matrix(Lam), p)
    so = proximal_gradient_gfl(Th, y, Lam, 0.2, 0.3)
    gap = gfl_objective(Th, y, Lam, s, 0.2, 0.3) - gfl_objective(Th, y, Lam, so, 0.2, 0.3)
    assert gap <= 1e-6


def test_objective_matches_oracle_formula():
    rng = np.random.default_rng(6)
    Th = crand(rng, 7, 4)
    y = crand(rng, 7)
    Lam = difference_dense(lattice_weights(2, 2))
    s = crand(rng, 4)
    assert objective(Th, y, sp.csr_matrix(Lam), s, 0.3, 0.2) == pytest.approx(
        gfl_objective(Th, y, Lam, s, 0.3, 0.2), rel=1e-12)


def test_lasso_and_least_squares_reductions():
    rng = np.random.default_rng(7)
    Th = crand(rng, 12, 8) / np.sqrt(12)
    y = crand(rng, 12)
    Lam = difference_dense(chain_weights(8))
    LamS = sp.csr_matrix(Lam)
    s, _ = solve_gfl(Th, y, LamS, GflParams(0.2, 0.0, tol=1e-12, max_iter=20000))
    so = fista_lasso(Th, y, 0.2)
    assert gfl_objective(Th, y, Lam, s, 0.2, 0) - gfl_objective(Th, y, Lam, so, 0.2, 0) <= 1e-6
    s, _ = solve_gfl(Th, y, LamS, GflParams(0.0, 0.0, tol=1e-12, max_iter=20000))
    so = least_squares(Th, y)
    assert gfl_objective(Th, y, Lam, s, 0, 0) - gfl_objective(Th, y, Lam, so, 0, 0) <= 1e-6


def test_stopping_defaults():
    p = GflParams(0.1, 0.1)
    assert p.tol == 1e-5 and p.max_iter == 100
    assert p.c_u == 1.0 and p.c_z == 1.0


def test_iteration_cap_reached():
    rng = np.random.default_rng(8)
    Th = crand(rng, 20, 16) / 20
    y = crand(rng, 20)
    Lam = sp.csr_matrix(difference_dense(lattice_weights(4, 4)))
    p = GflParams(0.01, 0.01, c_u=50.0, c_z=50.0)
    _, d = solve_gfl(Th, y, Lam, p)
    assert d.iterations == 100 and not d.converged
    assert len(d.history) == 100


def test_determinism():
    rng = np.random.default_rng(9)
    Th = crand(rng, 10, 9)
    y = crand(rng, 10)
    Lam = sp.csr_matrix(difference_dense(lattice_weights(3, 3)))
    p = GflParams(0.1, 0.05)
    a, da = solve_gfl(Th, y, Lam, p)
    b, db = solve_gfl(Th, y, Lam, p)
    np.testing.assert_array_equal(a, b)
    assert da.history == db.history


@pytest.mark.filterwarnings("ignore:invalid value:RuntimeWarning")
def test_divergence_reported():
    Th = np.array([[1.0, 0.0], [0.0, 1.0]])
    y = np.array([np.inf, 0.0])
    with pytest.raises(DivergenceError) as e:
        solve_gfl(Th, y, None, GflParams(0.0, 0.0))
    assert e.value.iteration == 1


def test_init_is_used():
    rng = np.random.default_rng(10)
    Th = crand(rng, 9, 6)
    y = crand(rng, 9)
    Lam = sp.csr_matrix(difference_dense(chain_weights(6)))
    p = GflParams(0.05, 0.05, tol=1e-12, max_iter=5000)
    s0, _ = solve_gfl(Th, y, Lam, p)
    s1, d1 = solve_gfl(Th, y, Lam, p, init=s0)
    np.testing.assert_allclose(s1, s0, atol=1e-6)


def test_backprojection():
    rng = np.random.default_rng(11)
    Q, _ = np.linalg.qr(crand(rng, 8, 5))
    s = crand(rng, 5)
    np.testing.assert_allclose(backprojection(Q, Q @ s, normalize=False), s, atol=1e-12)
    assert not backprojection(Q, np.zeros(8)).any()
    np.testing.assert_allclose(backprojection(Q, Q @ s), s / 8, atol=1e-12)


def test_diagnostics_csv(tmp_path):
    rng = np.random.default_rng(12)
    Th = crand(rng, 6, 4)
    _, d = solve_gfl(Th, crand(rng, 6), None, GflParams(0.1, 0.0))
    p = tmp_path / "d.csv"
    d.write_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "iter,objective,s_update_norm,r_u_norm,r_z_norm"
    assert len(lines) == d.iterations + 1


def test_params_validation():
    for kw in ({"lambda_e": -1, "lambda_f": 0}, {"lambda_e": 0, "lambda_f": 0, "c_u": 0},
               {"lambda_e": 0, "lambda_f": 0, "tol": 0}, {"lambda_e": 0, "lambda_f": 0, "max_iter": 0},
               {"lambda_e": 0, "lambda_f": 0, "scheme": "sor"}):
        with pytest.raises(ValueError):
            GflParams(**kw)


def test_jacobi_scheme_is_available():
    # the literal all-from-previous sweep runs; it is not the default
    rng = np.random.default_rng(13)
    Th = crand(rng, 6, 4)
    s, d = solve_gfl(Th, crand(rng, 6), None, GflParams(0.1, 0.0, scheme="jacobi", max_iter=10))
    assert d.iterations == 10 and np.all(np.isfinite(s))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_feasibility_residuals_shrink(seed):
    rng = np.random.default_rng(seed)
    N = int(rng.integers(3, 10))
    Th = crand(rng, N + 3, N) / np.sqrt(N)
    y = crand(rng, N + 3)
    Lam = sp.csr_matrix(difference_dense(chain_weights(N)))
    p = GflParams(0.1, 0.1, c_u=0.5, c_z=0.5, tol=1e-6, max_iter=5000)
    s, d = solve_gfl(Th, y, Lam, p)
    bound = 100 * p.tol * (1 + np.linalg.norm(s))
    assert d.converged
    assert d.r_u <= bound and d.r_z <= bound
