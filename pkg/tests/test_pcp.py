import math

import numpy as np
import pytest

from rad.errors import SolverDivergedError
from rad.pcp import PcpConfig, default_lambda, objective, pcp_decompose

from planted import planted_pcp_instance


def test_default_lambda_swat_shape():
    assert default_lambda(449919, 51) == pytest.approx(1 / math.sqrt(449919), rel=1e-15)
    assert f"{default_lambda(449919, 51):.7f}" == "0.0014908"


@pytest.mark.parametrize("shape, expected", [((4, 4), 0.5), ((100, 10000), 0.01)])
def test_default_lambda_trivial(shape, expected):
    assert default_lambda(*shape) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize(
    "kwargs",
    [{"tol": 0.0}, {"tol": 1.0}, {"rho": 0.9}, {"max_iter": 0}, {"lam": -1.0},
     {"mu0": 2.0, "mu_max": 1.0}],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        PcpConfig(**kwargs)


def test_rank_one_without_corruption():
    # Incoherent factors (flat magnitudes); spiky Gaussian factors have a
    # genuinely non-zero sparse part at the PCP optimum.
    rng = np.random.default_rng(0)
    u = rng.choice([-1.0, 1.0], 20) * rng.uniform(1.0, 2.0, 20)
    v = rng.choice([-1.0, 1.0], 10) * rng.uniform(1.0, 2.0, 10)
    M = np.outer(u, v)
    res = pcp_decompose(M)
    assert res.converged
    assert np.linalg.norm(res.S) <= 1e-6 * np.linalg.norm(M)
    assert np.linalg.norm(res.L - M) <= 1e-6 * np.linalg.norm(M)


def test_zero_matrix():
    res = pcp_decompose(np.zeros((5, 4)))
    assert res.converged and res.iterations == 1
    assert not res.L.any() and not res.S.any()


@pytest.fixture(scope="module")
def planted():
    M, L0, S0 = planted_pcp_instance()
    res = pcp_decompose(M, PcpConfig(lam=1 / math.sqrt(200), tol=1e-7))
    return M, L0, S0, res


def test_planted_recovery(planted):
    M, L0, _, res = planted
    assert res.converged
    assert np.linalg.norm(res.L - L0) / np.linalg.norm(L0) <= 1e-4


def test_feasibility_and_history(planted):
    M, _, _, res = planted
    assert len(res.residual_history) == res.iterations
    assert res.residual_history[-1] == pytest.approx(np.linalg.norm(M - res.L - res.S), rel=1e-12)
    assert res.residual_history[-1] <= 1e-7 * np.linalg.norm(M)


def test_mu_schedule_monotone_and_capped(planted):
    M, _, _, res = planted
    mu = np.array(res.mu_history)
    assert np.all(np.diff(mu) >= 0)
    mu_max = 1e7 * 1.25 / np.linalg.norm(M, 2)
    assert np.all(mu <= mu_max * (1 + 1e-12))


def test_mu_cap_reached_with_small_budget():
    M, _, _ = planted_pcp_instance(seed=3)
    res = pcp_decompose(M, PcpConfig(mu0=1e-3, rho=10.0, mu_max=1e-1, max_iter=6))
    assert max(res.mu_history) == pytest.approx(1e-1)
    assert np.all(np.diff(res.mu_history) >= 0)


def test_objective_no_worse_than_planted(planted):
    M, L0, S0, res = planted
    lam = 1 / math.sqrt(200)
    ours = objective(res.L, res.S, lam)
    truth = objective(L0, S0, lam)
    assert ours <= truth * (1 + 1e-3)


def test_support_recovery(planted):
    _, _, S0, res = planted
    support = S0 != 0
    off = np.abs(res.S[~support])
    cut = 10 * np.median(off)
    assert np.mean(np.abs(res.S[support]) > cut) >= 0.99


def test_determinism(planted):
    M, _, _, res = planted
    again = pcp_decompose(M, PcpConfig(lam=1 / math.sqrt(200), tol=1e-7))
    assert again.residual_history == res.residual_history
    assert np.array_equal(again.L, res.L)


def test_non_convergence_is_reported_not_raised():
    M, _, _ = planted_pcp_instance(seed=1)
    res = pcp_decompose(M, PcpConfig(max_iter=3))
    assert not res.converged
    assert res.iterations == 3 and len(res.residual_history) == 3


def test_divergence_is_an_error(monkeypatch):
    import rad.pcp

    def poisoned(X, tau):
        return np.full_like(X, np.nan), np.zeros(min(X.shape))

    monkeypatch.setattr(rad.pcp, "_svt", poisoned)
    M, _, _ = planted_pcp_instance(seed=2)
    with pytest.raises(SolverDivergedError, match="solver diverged"):
        pcp_decompose(M)
