import math

import numpy as np
import pytest

from specdiff import estimate, simulate
from specdiff.basis import build_basis
from specdiff.simulate import SamplePath


@pytest.fixture(scope="module")
def basis3():
    return build_basis(3)


@pytest.fixture(scope="module")
def rbm_path(rbm, rbm_dec):
    return simulate.simulate_exact(rbm, 0.1, 20_000, seed=0, dec=rbm_dec)


@pytest.fixture(scope="module")
def rbm_ops(rbm_path, basis3):
    return estimate.build_operators(rbm_path, basis3)


def naive_operators(values, basis):
    """Direct textbook sums, independent of the chunked assembly."""
    d = basis.design_matrix(values)
    n = len(values) - 1
    dim = basis.dim
    gram = np.zeros((dim, dim))
    for i, w in enumerate([0.5] + [1.0] * (n - 1) + [0.5]):
        gram += w * np.outer(d[i], d[i])
    trans = np.zeros((dim, dim))
    for i in range(1, n + 1):
        trans += 0.5 * (np.outer(d[i - 1], d[i]) + np.outer(d[i], d[i - 1]))
    return gram / n, trans / n, d.mean(axis=0)


def test_operators_match_naive_sums(rbm, basis3, monkeypatch):
    monkeypatch.setattr(estimate, "_CHUNK", 7)  # force many chunk boundaries
    rng = np.random.default_rng(12)
    values = rng.uniform(0.0, 1.0, 100)
    path = SamplePath(delta=0.1, values=values)
    ops = estimate.build_operators(path, basis3)
    gram, trans, mu = naive_operators(values, basis3)
    assert np.abs(ops.gram - gram).max() < 1e-12
    assert np.abs(ops.transition - trans).max() < 1e-12
    assert np.abs(ops.mu_coeffs - mu).max() < 1e-12


def test_operator_identities(rbm_ops, basis3):
    c = basis3.constant_coeffs
    assert np.array_equal(rbm_ops.gram, rbm_ops.gram.T)
    assert np.array_equal(rbm_ops.transition, rbm_ops.transition.T)
    # both operators act identically on the constant (half-weight identity)
    assert np.abs(rbm_ops.gram @ c - rbm_ops.transition @ c).max() < 1e-14
    assert abs(c @ rbm_ops.gram @ c - 1.0) < 1e-13
    assert np.linalg.eigvalsh(rbm_ops.gram).min() > -1e-12


def test_operators_require_enough_data(basis3):
    short = SamplePath(delta=0.1, values=np.linspace(0.1, 0.9, basis3.dim - 1))
    with pytest.raises(ValueError):
        estimate.build_operators(short, basis3)


def test_mu_estimate_integrates_to_one(all_presets, preset_decs, basis3):
    for spec in all_presets:
        path = simulate.simulate_exact(
            spec, 0.1, 5000, seed=13, dec=preset_decs[spec.name]
        )
        coeffs = estimate.estimate_mu(path, basis3)
        assert abs(coeffs @ basis3.integrals - 1.0) < 1e-12


def test_mu_estimate_accuracy(rbm, rbm_dec, basis3):
    path = simulate.simulate_exact(rbm, 0.1, 100_000, seed=21, dec=rbm_dec)
    coeffs = estimate.estimate_mu(path, basis3)
    xs = np.linspace(0.0, 1.0, 1001)
    resid = basis3.reconstruct(coeffs, xs) - 1.0
    l2 = np.sqrt(np.trapezoid(resid * resid, xs))
    assert l2 < 0.05


def test_mu_estimate_constant_path_is_reproducing_kernel(basis3):
    x_star = 0.4321
    path = SamplePath(delta=0.1, values=np.full(50, x_star))
    coeffs = estimate.estimate_mu(path, basis3)
    assert np.abs(coeffs - basis3.design_matrix(np.array([x_star]))[0]).max() < 1e-13


def test_gram_converges_to_identity(rbm, rbm_dec, basis3):
    path = simulate.simulate_exact(rbm, 0.1, 100_000, seed=22, dec=rbm_dec)
    ops = estimate.build_operators(path, basis3)
    assert np.abs(ops.gram - np.eye(basis3.dim)).max() < 0.05


def test_eigenpair_top_identity_and_bound(rbm_ops, basis3):
    sol = estimate.solve_eigenpair(rbm_ops)
    assert not sol.degenerate
    assert abs(sol.eigenvalues[0] - 1.0) < 1e-10
    assert np.all(sol.eigenvalues <= 1.0 + 1e-10)
    assert 0.0 < sol.kappa1 < 1.0


def test_eigenpair_recovers_transition_eigenvalue(rbm, rbm_dec, basis3):
    target = math.exp(-0.1 * math.pi**2 / 2.0)
    hits = 0
    for seed in range(5):
        path = simulate.simulate_exact(rbm, 0.1, 20_000, seed=seed, dec=rbm_dec)
        sol = estimate.solve_eigenpair(estimate.build_operators(path, basis3))
        hits += abs(sol.kappa1 - target) < 0.05
    assert hits >= 4


def test_eigenvector_normalized_and_oriented(rbm_ops, basis3):
    sol = estimate.solve_eigenpair(rbm_ops)
    assert abs(np.linalg.norm(sol.u1_coeffs) - 1.0) < 1e-12
    ends = basis3.design_matrix(np.array([0.0, 1.0])) @ sol.u1_coeffs
    assert ends[1] - ends[0] > 0.0


def test_degenerate_constant_path(basis3):
    path = SamplePath(delta=0.1, values=np.full(100, 0.5))
    ops = estimate.build_operators(path, basis3)
    sol = estimate.solve_eigenpair(ops)
    assert sol.degenerate
    assert sol.kappa1 == 0.0
    assert np.all(sol.u1_coeffs == 0.0)
    result = estimate.estimate_path(path, basis=basis3)
    assert result.degenerate and "positive definite" in result.reason


def test_tied_second_eigenvalue_is_degenerate(basis3, rbm_ops):
    rigged = estimate.EmpiricalOperators(
        gram=np.eye(basis3.dim),
        transition=np.eye(basis3.dim),
        mu_coeffs=rbm_ops.mu_coeffs,
        n_steps=100,
        basis=basis3,
    )
    sol = estimate.solve_eigenpair(rigged)
    assert sol.degenerate and "tie" in sol.reason


def test_plug_in_oracle_floor(basis3):
    basis6 = build_basis(6)
    u1 = basis6.project(lambda x: np.sqrt(2.0) * np.cos(np.pi * x))
    mu = basis6.constant_coeffs
    kappa = math.exp(-0.1 * math.pi**2 / 2.0)
    pr = estimate.plug_in(kappa, u1, mu, basis6, 0.1)
    assert np.abs(pr.sigma2 - 1.0).max() < 1e-3
    assert np.abs(pr.b).max() < 1e-2
    assert not pr.degenerate


def test_plug_in_homogeneity(basis3):
    basis6 = build_basis(6)
    u1 = basis6.project(lambda x: np.sqrt(2.0) * np.cos(np.pi * x))
    mu = basis6.constant_coeffs
    kappa = math.exp(-0.1 * math.pi**2 / 2.0)
    base = estimate.plug_in(kappa, u1, mu, basis6, 0.1)
    for scale in (-1.0, 3.7, -0.02):
        scaled = estimate.plug_in(kappa, scale * u1, mu, basis6, 0.1)
        assert np.abs(base.sigma2 - scaled.sigma2).max() < 1e-9
        assert np.abs(base.b - scaled.b).max() < 1e-7


def test_plug_in_validations(basis3):
    mu = basis3.constant_coeffs
    u1 = np.zeros(basis3.dim)
    u1[0] = 1.0
    with pytest.raises(ValueError):
        estimate.plug_in(1.0, u1, mu, basis3, 0.1)  # kappa outside (0, 1)
    with pytest.raises(ValueError):
        estimate.plug_in(0.5, u1, mu, basis3, 0.1, interval=(0.0, 0.9))
    with pytest.raises(ValueError):
        estimate.plug_in(0.5, u1, mu, basis3, 0.1, clip_frac=1.5)


def test_plug_in_flat_eigenvector_degenerates(basis3):
    # constant "eigenvector": derivative vanishes, everything clips
    pr = estimate.plug_in(
        0.5, basis3.constant_coeffs, basis3.constant_coeffs, basis3, 0.1
    )
    assert pr.degenerate
    assert "clipped" in pr.reason


def test_clipping_counts_points(basis3):
    # an eigenvector whose derivative changes sign inside the window
    # forces clipping near the sign change
    basis6 = build_basis(6)
    u2 = basis6.project(lambda x: np.sqrt(2.0) * np.cos(2.0 * np.pi * x))
    pr = estimate.plug_in(0.5, u2, basis6.constant_coeffs, basis6, 0.1)
    assert 0 < pr.clip_count < pr.grid.shape[0]


@pytest.mark.parametrize(
    "n_obs,s,target,expected",
    [(10_000, 2.0, "density", 3), (10_000, 2.0, "coefficients", 2), (16, 2.0, "density", 1)],
)
def test_choose_level_rule(n_obs, s, target, expected):
    assert estimate.choose_J(n_obs, s, target) == expected


def test_choose_level_validation():
    with pytest.raises(ValueError):
        estimate.choose_J(8, 2.0)
    with pytest.raises(ValueError):
        estimate.choose_J(100, 1.0)
    with pytest.raises(ValueError):
        estimate.choose_J(100, 2.0, target="other")


def test_estimate_path_pipeline(rbm_path):
    result = estimate.estimate_path(rbm_path, J=3, interval=(0.2, 0.8))
    assert not result.degenerate
    assert 0.0 < result.kappa1 < 1.0
    assert result.nu1 == pytest.approx(math.log(result.kappa1) / 0.1)
    assert result.grid[0] == 0.2 and result.grid[-1] == 0.8
    assert np.all(result.sigma2 > 0.0)
    replay = estimate.estimate_path(rbm_path, J=3, interval=(0.2, 0.8))
    assert np.array_equal(result.sigma2, replay.sigma2)
    d = result.to_dict()
    assert set(d) >= {"kappa1", "nu1", "degenerate", "clip_count",
                      "u1_coeffs", "grid", "sigma2", "b"}


def test_estimate_path_needs_level_source(rbm_path):
    with pytest.raises(ValueError):
        estimate.estimate_path(rbm_path)
