import time

import numpy as np
import pytest
from scipy.optimize import minimize

from models.errors import InvalidParameterError, ShapeError
from models.regression import KernelKind, KernelSpec, SvrModel, model_from_dict
from services.linear_service import LinearService
from services.svr_service import SvrService, dual_objective
from utils.rng import Xoshiro256


def gaussian(rng, *shape):
    return np.array(rng.normals(int(np.prod(shape)))).reshape(shape)


def oracle_dual(k, y, c, epsilon):
    """Dual optimum from SLSQP on the split variables alpha, alpha* >= 0"""
    n = y.shape[0]

    def negative(z):
        beta = z[:n] - z[n:]
        return 0.5 * beta @ k @ beta + epsilon * z.sum() - y @ beta

    def gradient(z):
        beta = z[:n] - z[n:]
        g = k @ beta - y
        return np.concatenate([g + epsilon, -g + epsilon])

    res = minimize(negative, np.zeros(2 * n), jac=gradient, method="SLSQP",
                   bounds=[(0.0, c)] * (2 * n),
                   constraints=[{"type": "eq", "fun": lambda z: z[:n].sum() - z[n:].sum(),
                                 "jac": lambda z: np.concatenate([np.ones(n), -np.ones(n)])}],
                   options={"ftol": 1e-14, "maxiter": 1000})
    return -res.fun


def random_problem(seed):
    rng = Xoshiro256(seed)
    n = 3 + rng.below(6)
    m = 1 + rng.below(2)
    x = gaussian(rng, n, m)
    y = gaussian(rng, n)
    return x, (y - y.mean()) / y.std()


# Kernel Tests
def test_kernels_match_direct_formulas():
    a = np.array([[0.0, 1.0], [2.0, -1.0]])
    b = np.array([[1.0, 1.0]])
    assert np.allclose(KernelSpec(KernelKind.LINEAR).evaluate(a, b), [[1.0], [1.0]])
    rbf = KernelSpec(KernelKind.RBF, gamma=0.5).evaluate(a, b)
    assert np.allclose(rbf, [[np.exp(-0.5)], [np.exp(-0.5 * 5.0)]])
    poly = KernelSpec(KernelKind.POLYNOMIAL, gamma=1.0, degree=2, coef0=1.0).evaluate(a, b)
    assert np.allclose(poly, [[4.0], [4.0]])


def test_kernel_validation():
    with pytest.raises(InvalidParameterError):
        KernelSpec(KernelKind.RBF, gamma=0.0)
    with pytest.raises(InvalidParameterError):
        KernelSpec(KernelKind.POLYNOMIAL, degree=0)
    with pytest.raises(ShapeError):
        KernelSpec(KernelKind.LINEAR).evaluate(np.ones((2, 2)), np.ones((2, 3)))


def test_default_kernel_gamma():
    kernel = SvrService.default_kernel(4)
    assert kernel.kind == KernelKind.RBF
    assert kernel.gamma == 0.25


# Solver Tests
@pytest.mark.parametrize("seed", range(20))
def test_smo_matches_qp_oracle(seed):
    x, y = random_problem(seed)
    kernel = KernelSpec(KernelKind.LINEAR) if seed % 2 == 0 else KernelSpec(KernelKind.RBF, gamma=0.5)
    c = 1.0 if seed % 4 < 2 else 10.0
    model = SvrService.fit_svr(x, y, c=c, epsilon=0.1, kernel=kernel, tol=1e-6)
    k = kernel.evaluate(x, x)
    beta = SvrService.full_dual(model, x.shape[0])
    assert model.converged
    assert dual_objective(beta, k, y, 0.1) == pytest.approx(oracle_dual(k, y, c, 0.1), abs=1e-4)


def test_smo_oracle_suite_is_fast():
    start = time.perf_counter()
    for seed in range(20):
        x, y = random_problem(seed)
        SvrService.fit_svr(x, y, c=10.0, epsilon=0.1, tol=1e-6)
    assert time.perf_counter() - start < 5.0


def test_dual_feasibility_and_monotone_objective():
    rng = Xoshiro256(77)
    x = gaussian(rng, 18, 3)
    y = x @ np.array([1.0, -0.5, 0.2]) + 0.1 * gaussian(rng, 18)
    trace = []
    model = SvrService.fit_svr(x, y, c=2.0, epsilon=0.05, tol=1e-6,
                               on_iteration=lambda step, obj: trace.append(obj))
    beta = SvrService.full_dual(model, 18)
    assert abs(beta.sum()) <= 1e-10
    assert np.all(np.abs(beta) <= 2.0)
    assert trace, "solver took no steps"
    assert all(b >= a - 1e-12 for a, b in zip(trace, trace[1:]))
    k = model.kernel.evaluate(x, x)
    assert trace[-1] == pytest.approx(dual_objective(beta, k, y, 0.05), abs=1e-9)


def test_free_support_vectors_sit_on_the_tube():
    rng = Xoshiro256(5)
    x = gaussian(rng, 15, 2)
    y = np.sin(x[:, 0]) + 0.1 * gaussian(rng, 15)
    model = SvrService.fit_svr(x, y, c=5.0, epsilon=0.1, kernel=KernelSpec(KernelKind.RBF, gamma=0.5), tol=1e-7)
    beta = SvrService.full_dual(model, 15)
    resid = y - model.predict(x)
    for i, b in enumerate(beta):
        if 0.0 < abs(b) < 5.0:
            assert abs(abs(resid[i]) - 0.1) < 1e-4
        elif b == 0.0:
            assert abs(resid[i]) <= 0.1 + 1e-4
        else:
            assert abs(resid[i]) >= 0.1 - 1e-4
    classes = SvrService.residual_classes(model, x, y, tol=1e-4)
    assert set(classes) <= {"inside", "margin", "outside"}


def test_wide_tube_has_no_support_vectors():
    x = np.linspace(-1, 1, 10).reshape(-1, 1)
    y = 0.05 * x[:, 0]
    model = SvrService.fit_svr(x, y, c=1.0, epsilon=1.0, kernel=KernelSpec(KernelKind.LINEAR))
    assert model.n_support == 0
    assert model.converged
    assert np.allclose(model.predict(x), model.bias)


def test_iteration_cap_flags_non_convergence():
    x, y = random_problem(3)
    model = SvrService.fit_svr(x, y, c=10.0, epsilon=0.01, tol=1e-12, max_passes=1)
    assert not model.converged
    assert model.iterations == 1
    assert model.violation > 0.0


def test_fit_svr_validation():
    x, y = random_problem(1)
    with pytest.raises(InvalidParameterError):
        SvrService.fit_svr(x, y, c=0.0)
    with pytest.raises(InvalidParameterError):
        SvrService.fit_svr(x, y, epsilon=-0.1)
    with pytest.raises(InvalidParameterError):
        SvrService.fit_svr(x, y, tol=0.0)
    with pytest.raises(ShapeError):
        SvrService.fit_svr(x, y[:-1])


def test_svr_document_keeps_predictions():
    x, y = random_problem(9)
    model = SvrService.fit_svr(x, y, c=1.0, epsilon=0.1)
    again = model_from_dict(model.to_dict())
    assert isinstance(again, SvrModel)
    assert again.converged == model.converged
    assert np.array_equal(again.predict(x), model.predict(x))


def test_gram_is_symmetric_for_identical_inputs():
    x, _ = random_problem(4)
    k = SvrService.gram(x, x, KernelSpec(KernelKind.RBF, gamma=0.3))
    assert k.shape == (x.shape[0], x.shape[0])
    assert np.allclose(k, k.T)
    assert np.allclose(np.diag(k), 1.0)
    assert SvrService.gram(x, x[:2], KernelSpec(KernelKind.LINEAR)).shape == (x.shape[0], 2)


@pytest.mark.parametrize("kernel", [KernelSpec(KernelKind.LINEAR), KernelSpec(KernelKind.RBF, gamma=0.7),
                                    KernelSpec(KernelKind.POLYNOMIAL, gamma=0.5, degree=3, coef0=1.0)])
def test_gram_is_positive_semidefinite(kernel):
    for seed in range(5):
        rng = Xoshiro256(100 + seed)
        x = gaussian(rng, 20, 3)
        k = SvrService.gram(x, x, kernel)
        assert np.allclose(k, k.T)
        assert np.linalg.eigvalsh(0.5 * (k + k.T)).min() >= -1e-8


@pytest.mark.parametrize("kernel", [KernelSpec(KernelKind.LINEAR), KernelSpec(KernelKind.RBF, gamma=0.5)])
def test_constant_target_stays_inside_the_tube(kernel):
    rng = Xoshiro256(21)
    x = gaussian(rng, 12, 2)
    y = np.full(12, 3.25)
    model = SvrService.fit_svr(x, y, c=10.0, epsilon=0.1, kernel=kernel)
    assert model.n_support == 0
    assert np.array_equal(SvrService.full_dual(model, 12), np.zeros(12))
    assert model.bias == pytest.approx(3.25, abs=1e-12)
    assert np.allclose(model.predict(gaussian(rng, 5, 2)), 3.25, atol=1e-12)


def test_zero_tube_linear_svr_matches_ols_on_exact_line():
    rng = Xoshiro256(33)
    x = gaussian(rng, 14, 2)
    y = 1.5 + 2.0 * x[:, 0] - 1.0 * x[:, 1]
    model = SvrService.fit_svr(x, y, c=1000.0, epsilon=0.0, kernel=KernelSpec(KernelKind.LINEAR),
                               tol=1e-7, max_passes=200000)
    ols = LinearService.fit_ols(x, y)
    fresh = gaussian(rng, 6, 2)
    assert model.converged
    assert np.allclose(model.predict(x), ols.predict(x), atol=1e-3)
    assert np.allclose(model.predict(fresh), ols.predict(fresh), atol=1e-3)
