import numpy as np
import pytest

from hybrid_regimes import errors
from hybrid_regimes.panel import apply_standardizer, fit_standardizer
from hybrid_regimes.pca import (
    PcaModel,
    explained_variance_table,
    fit_pca,
    inverse_transform,
    select_components,
    top_loadings,
    transform,
    write_variance_table,
)

from .helpers import make_panel


def standardized(vals):
    p = make_panel(vals)
    s = fit_standardizer(p)
    return apply_standardizer(s, p), s


def eig_oracle(z):
    """Eigenvalues of the sample covariance, descending (independent of SVD)."""
    cov = np.cov(z, rowvar=False)
    return np.sort(np.linalg.eigvalsh(np.atleast_2d(cov)))[::-1]


def test_rank_one_panel():
    a = np.array([1.0, 2.0, 4.0, 3.0, 0.5])
    z, _ = standardized(np.column_stack([a, a]))
    m = fit_pca(z)
    np.testing.assert_allclose(m.eigenvalues, [2.0, 0.0], atol=1e-8)
    assert m.explained_ratio[0] == pytest.approx(1.0, abs=1e-12)
    assert select_components(m, 0.9) == 1
    # equal contributions from the two identical columns
    assert [c for _, c in top_loadings(m, 1, 2)] == pytest.approx([0.5, 0.5], abs=1e-12)


def test_trace_identity(rng):
    z, _ = standardized(rng.normal(size=(40, 7)))
    assert fit_pca(z).eigenvalues.sum() == pytest.approx(7.0, abs=1e-6)


@pytest.mark.parametrize("seed", range(20))
def test_eigenvalues_match_covariance_oracle(seed):
    z, _ = standardized(np.random.default_rng(seed).normal(size=(6, 4)))
    m = fit_pca(z)
    np.testing.assert_allclose(m.eigenvalues, np.clip(eig_oracle(z.values), 0, None), atol=1e-8)
    np.testing.assert_allclose(m.loadings.T @ m.loadings, np.eye(4), atol=1e-8)


def test_wide_panel_completes_basis(rng):
    z, _ = standardized(rng.normal(size=(3, 5)))
    m = fit_pca(z)
    np.testing.assert_allclose(m.loadings.T @ m.loadings, np.eye(5), atol=1e-10)
    assert np.count_nonzero(m.eigenvalues) == 2


def test_sign_convention(rng):
    z, _ = standardized(rng.normal(size=(30, 5)))
    L = fit_pca(z).loadings
    pivots = L[np.argmax(np.abs(L), axis=0), np.arange(5)]
    assert np.all(pivots > 0)
    # flipping a column of the data must not flip the output convention
    flipped = z.values.copy()
    flipped[:, 0] *= -1
    L2 = fit_pca(make_panel(flipped)).loadings
    pivots2 = L2[np.argmax(np.abs(L2), axis=0), np.arange(5)]
    assert np.all(pivots2 > 0)


def test_transform_reconstruction_and_decorrelation(rng):
    z, _ = standardized(rng.normal(size=(50, 6)) @ rng.normal(size=(6, 6)))
    m = fit_pca(z)
    s = transform(m, z, 6)
    np.testing.assert_allclose(inverse_transform(m, s).values, z.values, atol=1e-8)
    cov = np.cov(s.scores, rowvar=False)
    np.testing.assert_allclose(np.diag(cov), m.eigenvalues, atol=1e-8)
    off = cov - np.diag(np.diag(cov))
    np.testing.assert_allclose(off, 0, atol=1e-8)


def test_transform_errors(rng):
    z, _ = standardized(rng.normal(size=(10, 3)))
    m = fit_pca(z)
    with pytest.raises(errors.DimensionMismatch):
        transform(m, z, 4)
    with pytest.raises(errors.DimensionMismatch):
        transform(m, z, 0)
    other, _ = standardized(rng.normal(size=(10, 4)))
    with pytest.raises(errors.ColumnMismatch):
        transform(m, other, 2)


def test_threshold_one_counts_positive_eigenvalues():
    a = np.array([1.0, 2.0, 4.0, 3.0, 0.5, 2.2])
    b = np.array([0.3, -1.0, 2.0, 0.0, 1.5, 0.7])
    z, _ = standardized(np.column_stack([a, b, a + b]))
    m = fit_pca(z)
    assert np.count_nonzero(m.eigenvalues) == 2
    assert select_components(m, 1.0) == 2


def test_select_components_threshold():
    m = PcaModel(["a", "b", "c", "d"], np.eye(4), np.array([2.0, 1.0, 0.6, 0.4]), 4)
    # cumulative shares 0.5, 0.75, 0.9, 1.0
    assert select_components(m, 0.5) == 1
    assert select_components(m, 0.76) == 3
    assert select_components(m, 0.9) == 3
    assert select_components(m, 0.91) == 4
    with pytest.raises(errors.DataError):
        select_components(m, 0.0)


def test_variance_table_arithmetic(tmp_path):
    m = PcaModel(["a", "b"], np.eye(2), np.array([3.0, 1.0]), 2)
    rows = explained_variance_table(m)
    assert [tuple(r) for r in rows] == [(1, 3.0, 75.0, 75.0), (2, 1.0, 25.0, 100.0)]
    write_variance_table(m, tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text().splitlines()[0] == \
        "dimension,eigenvalue,pct_of_variance,cumulative_pct_of_variance"


def test_variance_table_ends_at_100(rng):
    z, _ = standardized(rng.normal(size=(25, 9)))
    rows = explained_variance_table(fit_pca(z))
    assert rows[-1].cumulative_pct == pytest.approx(100.0, abs=1e-6)
    assert all(a.cumulative_pct <= b.cumulative_pct for a, b in zip(rows, rows[1:]))


def test_reference_variance_shares():
    # published shares are eigenvalue / 48, the trace of a 48x48 correlation
    # matrix; the table mixes rounding and truncation, hence 0.01
    for eig, pct in [(8.987, 18.72), (3.089, 6.44), (3.023, 6.30), (1.021, 2.12), (0.356, 0.74)]:
        assert 100 * eig / 48 == pytest.approx(pct, abs=0.01)


def test_top_loadings_identity():
    m = PcaModel(["a", "b", "c"], np.eye(3), np.array([1.0, 1.0, 1.0]), 3)
    assert top_loadings(m, 2, 1) == [("b", 1.0)]
    with pytest.raises(errors.DimensionMismatch):
        top_loadings(m, 4, 1)


def test_top_loadings_sum_to_one(rng):
    z, _ = standardized(rng.normal(size=(20, 5)))
    m = fit_pca(z)
    for dim in range(1, 6):
        assert sum(c for _, c in top_loadings(m, dim, 5)) == pytest.approx(1.0, abs=1e-10)


def test_threshold_sets_n_selected(rng):
    z, s = standardized(rng.normal(size=(40, 6)))
    m = fit_pca(z, s, threshold=0.5)
    assert m.n_selected == select_components(m, 0.5)
    assert transform(m, z).scores.shape == (40, m.n_selected)
    assert PcaModel.from_dict(m.to_dict()).to_dict() == m.to_dict()


def test_nonfinite_input():
    with pytest.raises(errors.NumericalError):
        fit_pca(make_panel([[1.0, np.inf], [0.0, 1.0]]))
