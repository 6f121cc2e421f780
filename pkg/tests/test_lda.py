import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from asslda.lda import LdaError, LdaModel, compute_scatter, criterion, fit, fit_lda, generalized_eigh, project


def _blobs(rng, C, per, d, spread=1.0):
    centers = rng.standard_normal((C, d)) * 3
    X = np.concatenate([c + spread * rng.standard_normal((per, d)) for c in centers])
    y = np.repeat(np.arange(C), per)
    return X, y


def test_scatter_two_points():
    u = np.array([1.0, -2.0, 0.5])
    s = compute_scatter(np.stack([u, -u]), ["a", "b"])
    assert not s.within.any()
    np.testing.assert_allclose(s.between, 2 * np.outer(u, u))
    assert s.n == 2 and s.num_classes == 2


def test_identical_class_members_add_nothing_to_within():
    X = np.array([[1.0, 2.0], [1.0, 2.0], [5.0, 0.0], [3.0, 1.0]])
    s = compute_scatter(X, [0, 0, 1, 1])
    Xb = X[2:] - X[2:].mean(axis=0)
    np.testing.assert_allclose(s.within, Xb.T @ Xb)


def test_scatter_matches_double_loop_oracle():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((30, 5))
    y = rng.integers(0, 3, 30)
    y[:3] = [0, 1, 2]
    s = compute_scatter(X, y)
    Sb, Sw = oracles.scatter(X.tolist(), y.tolist())
    np.testing.assert_allclose(s.between, Sb, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(s.within, Sw, rtol=1e-10, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 6), st.integers(2, 8))
def test_scatter_invariants(seed, C, d):
    rng = np.random.default_rng(seed)
    X, y = _blobs(rng, C, 4, d)
    s = compute_scatter(X, y)
    for M in (s.between, s.within):
        assert np.abs(M - M.T).max() <= 1e-9 * max(np.abs(M).max(), 1.0)
        assert np.linalg.eigvalsh(M).min() >= -1e-8 * max(np.trace(M), 1e-300)
    assert np.linalg.matrix_rank(s.between, tol=1e-8 * np.abs(s.between).max()) <= C - 1
    assert s.class_counts.sum() == len(X)


def test_scatter_rejects_single_class():
    with pytest.raises(LdaError):
        compute_scatter(np.ones((4, 2)), [1, 1, 1, 1])


def test_two_class_fisher_direction():
    rng = np.random.default_rng(1)
    d = 6
    mu1, mu2 = rng.standard_normal(d), rng.standard_normal(d)
    X = np.concatenate([mu1 + 0.5 * rng.standard_normal((400, d)), mu2 + 0.5 * rng.standard_normal((400, d))])
    y = np.repeat([0, 1], 400)
    s = compute_scatter(X, y)
    m = fit(s, reg=0.0)
    closed = np.linalg.solve(s.within, s.class_means[0] - s.class_means[1])
    a = m.A[:, 0]
    assert abs(a @ closed) / np.linalg.norm(a) / np.linalg.norm(closed) >= 0.9999
    # projected means are separated by the full Fisher margin
    dm = s.class_means[0] - s.class_means[1]
    pm = project(m, s.class_means)[:, 0]
    margin = abs(pm[0] - pm[1]) / np.sqrt(a @ s.within @ a)
    assert margin == pytest.approx(np.sqrt(dm @ closed), rel=1e-6)
    assert np.sign(pm[0] - pm[1]) == np.sign(a @ closed)


@pytest.mark.parametrize("C, expected", [(19, 18), (15, 14)])
def test_default_dimension_is_classes_minus_one(C, expected):
    X, y = _blobs(np.random.default_rng(C), C, 5, 40)
    m = fit_lda(X, y)
    assert m.p == expected
    with pytest.raises(LdaError):
        fit_lda(X, y, p=C)


def test_p_cannot_exceed_dimension():
    X, y = _blobs(np.random.default_rng(2), 5, 6, 2)
    with pytest.raises(LdaError):
        fit_lda(X, y, p=3)


def test_whitening_normalization_and_order():
    X, y = _blobs(np.random.default_rng(3), 5, 20, 12)
    s = compute_scatter(X, y)
    m = fit(s)
    Sw = s.within + m.regularization_eps * np.eye(12)
    np.testing.assert_allclose(m.A.T @ Sw @ m.A, np.eye(m.p), atol=1e-9)
    assert np.all(np.diff(m.eigenvalues) <= 0) and np.all(m.eigenvalues >= 0)
    assert m.regularization_eps == pytest.approx(1e-3 * np.trace(s.within) / 12)
    idx = np.argmax(np.abs(m.A), axis=0)
    assert np.all(m.A[idx, np.arange(m.p)] > 0)


def test_projection_linearity_and_zero():
    X, y = _blobs(np.random.default_rng(4), 4, 10, 7)
    m = fit_lda(X, y)
    w1, w2 = X[0], X[5]
    assert not project(m, np.zeros(7)).any()
    np.testing.assert_allclose(project(m, 2.5 * w1 - 0.5 * w2),
                               2.5 * project(m, w1) - 0.5 * project(m, w2), atol=1e-10)
    with pytest.raises(LdaError):
        project(m, np.zeros(6))


def test_criterion_equals_eigenvalue_sum():
    X, y = _blobs(np.random.default_rng(5), 6, 15, 10)
    s = compute_scatter(X, y)
    m = fit(s)
    Sw = s.within + m.regularization_eps * np.eye(10)
    assert criterion(m.A, s.between, Sw) == pytest.approx(m.eigenvalues.sum(), rel=1e-8)


def test_invariance_under_invertible_transform():
    rng = np.random.default_rng(6)
    X, y = _blobs(rng, 5, 30, 8)
    M = rng.standard_normal((8, 8)) + 3 * np.eye(8)
    a = fit_lda(X, y, reg=0.0)
    b = fit_lda(X @ M.T, y, reg=0.0)
    assert b.eigenvalues.sum() == pytest.approx(a.eigenvalues.sum(), rel=1e-6)


def test_at_most_c_minus_one_nonzero_eigenvalues():
    X, y = _blobs(np.random.default_rng(7), 4, 25, 9)
    s = compute_scatter(X, y)
    vals, _ = generalized_eigh(s.between, s.within + 1e-6 * np.eye(9))
    assert np.sum(vals > 1e-8 * vals[0]) <= 3


def _nearest_mean_accuracy(Z, y):
    labels = np.unique(y)
    means = np.stack([Z[y == c].mean(axis=0) for c in labels])
    dist = ((Z[:, None, :] - means[None]) ** 2).sum(axis=-1)
    return np.mean(labels[np.argmin(dist, axis=1)] == y)


def test_projection_helps_nearest_mean_on_ill_scaled_data():
    rng = np.random.default_rng(8)
    n, C = 60, 3
    y = np.repeat(np.arange(C), n)
    informative = y[:, None] + 0.3 * rng.standard_normal((C * n, 2))
    nuisance = 5 * rng.standard_normal((C * n, 10))
    X = np.hstack([nuisance, informative])
    raw = _nearest_mean_accuracy(X, y)
    lda = _nearest_mean_accuracy(project(fit_lda(X, y), X), y)
    assert lda > raw
    assert lda > 0.95


def test_save_load_round_trip(tmp_path):
    X, y = _blobs(np.random.default_rng(9), 3, 10, 5)
    m = fit_lda(X, [f"c{v}" for v in y], layout_hash="abc")
    m.save(tmp_path / "lda.npz")
    back = LdaModel.load(tmp_path / "lda.npz")
    assert back.A.tobytes() == m.A.tobytes()
    assert back.class_labels == ("c0", "c1", "c2") and back.layout_hash == "abc"
    assert back.regularization_eps == m.regularization_eps
