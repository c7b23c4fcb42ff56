import numpy as np
import pytest

from tegma.glasso import (SolverOptions, graphical_lasso, kkt_residual,
                          objective)
from tegma.tensor_ops import NotPositiveDefiniteError, sym_inv


def random_scatter(rng, p):
    a = rng.standard_normal((p, 2 * p))
    s = a @ a.T / (2 * p)
    return 0.5 * (s + s.T)


def test_zero_lambda_is_direct_inverse():
    rng = np.random.default_rng(0)
    s = random_scatter(rng, 6)
    res = graphical_lasso(s, SolverOptions(lam=0.0))
    assert np.allclose(res.omega, sym_inv(s, ridge=0.0), atol=1e-6)
    assert res.kkt_residual <= 1e-8


def test_zero_lambda_singular_raises():
    s = np.ones((3, 3))  # rank 1
    with pytest.raises(NotPositiveDefiniteError):
        graphical_lasso(s, SolverOptions(lam=0.0))


def test_large_lambda_diagonal_solution():
    rng = np.random.default_rng(1)
    s = random_scatter(rng, 5)
    lam = float(np.abs(s - np.diag(np.diag(s))).max()) * 1.5
    res = graphical_lasso(s, SolverOptions(lam=lam))
    assert np.allclose(res.omega, np.diag(1.0 / np.diag(s)), atol=1e-8)
    off = res.omega[~np.eye(5, dtype=bool)]
    assert np.all(off == 0.0)


def test_p2_closed_form():
    s = np.array([[1.0, 0.5], [0.5, 1.0]])
    res = graphical_lasso(s, SolverOptions(lam=0.1))
    # soft-thresholded correlation: sigma12 = 0.4, omega11 = 1/(1-0.4^2)
    assert abs(res.omega[0, 0] - 1.0 / (1 - 0.4 ** 2)) <= 1e-4
    assert abs(res.omega[0, 1] + 0.4 / (1 - 0.4 ** 2)) <= 1e-4


def test_p1_trivial():
    res = graphical_lasso(np.array([[4.0]]), SolverOptions(lam=0.3))
    assert res.omega[0, 0] == 0.25


def test_kkt_residual_small_across_sizes():
    rng = np.random.default_rng(2)
    for p in (2, 5, 10):
        for lam in (0.01, 0.1, 1.0):
            s = random_scatter(rng, p)
            res = graphical_lasso(s, SolverOptions(lam=lam))
            assert res.kkt_residual <= 1e-4, (p, lam, res.kkt_residual)


def test_kkt_residual_detects_suboptimal_point():
    rng = np.random.default_rng(3)
    s = random_scatter(rng, 4)
    bad = np.eye(4)
    assert kkt_residual(s, bad, 0.01) > 1e-3


def test_solution_beats_perturbations():
    rng = np.random.default_rng(4)
    s = random_scatter(rng, 6)
    lam = 0.05
    res = graphical_lasso(s, SolverOptions(lam=lam))
    base = objective(s, res.omega, lam)
    for _ in range(30):
        d = rng.standard_normal((6, 6)) * 1e-3
        d = 0.5 * (d + d.T)
        assert objective(s, res.omega + d, lam) >= base - 1e-8


def test_permutation_equivariance():
    rng = np.random.default_rng(5)
    s = random_scatter(rng, 7)
    perm = rng.permutation(7)
    res = graphical_lasso(s, SolverOptions(lam=0.05))
    res_p = graphical_lasso(s[np.ix_(perm, perm)], SolverOptions(lam=0.05))
    assert np.abs(res_p.omega - res.omega[np.ix_(perm, perm)]).max() <= 1e-6


def test_support_is_symmetric():
    rng = np.random.default_rng(6)
    s = random_scatter(rng, 10)
    res = graphical_lasso(s, SolverOptions(lam=0.08))
    z = res.omega == 0.0
    assert np.array_equal(z, z.T)
    assert np.allclose(res.omega, res.omega.T)


def test_warm_start_consistency():
    rng = np.random.default_rng(7)
    s = random_scatter(rng, 6)
    cold = graphical_lasso(s, SolverOptions(lam=0.05))
    warm = graphical_lasso(s, SolverOptions(
        lam=0.05, warm_start=(cold.omega, cold.sigma_hat)))
    assert np.abs(warm.omega - cold.omega).max() <= 1e-5


def test_unpenalized_diagonal_of_sigma_hat():
    rng = np.random.default_rng(8)
    s = random_scatter(rng, 5)
    res = graphical_lasso(s, SolverOptions(lam=0.05))
    assert np.allclose(np.diag(res.sigma_hat), np.diag(s), atol=1e-10)


def test_input_validation():
    with pytest.raises(ValueError):
        graphical_lasso(np.diag([1.0, -1.0]), SolverOptions(lam=0.1))
    with pytest.raises(ValueError):
        SolverOptions(lam=-1.0)
    with pytest.raises(ValueError):
        SolverOptions(tol=0.0)
