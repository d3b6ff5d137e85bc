import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_empirical_stdf, brute_kendall_tau
from tailtree.depmeasures import (
    SampleMatrix,
    empirical_stdf,
    empirical_stdf_grid,
    empirical_tdc_matrix,
    kendall_tau_matrix,
)
from tailtree.errors import InputError


def sm(*cols):
    return SampleMatrix.from_values(np.column_stack(cols))


def test_ranks_are_stable_permutations():
    s = sm([1.0, 1.0, 0.5, 2.0], [4.0, 3.0, 2.0, 1.0])
    assert sorted(s.ranks[:, 0]) == [1, 2, 3, 4]
    # tie at 1.0 resolves by row order
    assert s.ranks[0, 0] == 2 and s.ranks[1, 0] == 3


def test_tau_perfect_concordance():
    t = kendall_tau_matrix(sm([1.0, 2.0, 3.0], [10.0, 20.0, 30.0]))
    assert t[0, 1] == pytest.approx(1.0)


def test_tau_perfect_discordance():
    t = kendall_tau_matrix(sm([1.0, 2.0, 3.0], [3.0, 2.0, 1.0]))
    assert t[0, 1] == pytest.approx(-1.0)


def test_tau_mixed_pairs():
    t = kendall_tau_matrix(sm([1.0, 2.0, 3.0, 4.0], [2.0, 1.0, 4.0, 3.0]))
    assert t[0, 1] == pytest.approx(1.0 / 3.0)


def test_tau_matches_brute_force(rng):
    x = rng.standard_normal((60, 3))
    x[5, 0] = x[7, 0]  # inject a tie
    t = kendall_tau_matrix(SampleMatrix.from_values(x))
    for a in range(3):
        for b in range(3):
            if a != b:
                assert t[a, b] == pytest.approx(brute_kendall_tau(x[:, a], x[:, b]), abs=1e-12)
    assert np.allclose(np.diag(t), 1.0)


def test_tau_requires_two_rows():
    with pytest.raises(ValueError):
        SampleMatrix.from_values(np.ones((1, 2)))


def test_tdc_comonotone_is_one():
    s = sm(np.arange(10.0), np.arange(10.0) * 3 + 1)
    for k in (1, 3, 5, 10):
        assert empirical_tdc_matrix(s, k)[0, 1] == pytest.approx(1.0)


def test_tdc_countermonotone_is_zero():
    s = sm(np.arange(10.0), -np.arange(10.0))
    for k in (1, 3, 5):
        assert empirical_tdc_matrix(s, k)[0, 1] == pytest.approx(0.0)


def test_tdc_small_example():
    s = sm([1.0, 2.0, 3.0, 4.0], [1.0, 2.0, 4.0, 3.0])
    # rows with both ranks >= 3: rows 3 and 4
    assert empirical_tdc_matrix(s, 2)[0, 1] == pytest.approx(1.0)


def test_tdc_validates_k():
    s = sm(np.arange(5.0), np.arange(5.0))
    with pytest.raises(ValueError):
        empirical_tdc_matrix(s, 0)
    with pytest.raises(ValueError):
        empirical_tdc_matrix(s, 6)


def test_stdf_at_origin_is_zero(rng):
    s = SampleMatrix.from_values(rng.random((20, 2)))
    assert empirical_stdf(s, 5, (1, 2), (0.0, 0.0)) == 0.0


def test_stdf_direct_count_on_fixed_sample():
    vals = np.array(
        [
            [0.1, 0.9], [0.7, 0.3], [0.4, 0.8], [0.95, 0.2], [0.55, 0.6],
            [0.25, 0.45], [0.8, 0.75], [0.35, 0.15], [0.65, 0.5], [0.05, 0.99],
        ]
    )
    s = SampleMatrix.from_values(vals)
    k = 3
    got = empirical_stdf(s, k, (1, 2), (1.0, 1.0))
    want = brute_empirical_stdf(s.ranks[:, 0], s.ranks[:, 1], 10, k, 1.0, 1.0)
    assert got == pytest.approx(want)
    assert 0.0 <= got <= 2.0


def test_stdf_comonotone_diagonal():
    s = sm(np.arange(12.0), np.arange(12.0) + 5)
    for k in (2, 5, 11):
        assert empirical_stdf(s, k, (1, 2), (1.0, 1.0)) == pytest.approx(1.0)


def test_stdf_monotone_in_each_coordinate(rng):
    s = SampleMatrix.from_values(rng.random((50, 2)))
    vals = [empirical_stdf(s, 10, (1, 2), (x, 0.7)) for x in np.linspace(0, 2, 15)]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_stdf_rejects_bad_inputs(rng):
    s = SampleMatrix.from_values(rng.random((20, 2)))
    with pytest.raises(ValueError):
        empirical_stdf(s, 0, (1, 2), (1.0, 1.0))
    with pytest.raises(ValueError):
        empirical_stdf(s, 5, (1, 1), (1.0, 1.0))
    with pytest.raises(ValueError):
        empirical_stdf(s, 5, (1, 2), (-0.1, 1.0))


def test_stdf_grid_matches_pointwise(rng):
    s = SampleMatrix.from_values(rng.standard_normal((80, 3)))
    xs = np.linspace(0.0, 2.0, 9)
    ys = np.linspace(0.0, 1.0, 7)
    grid = empirical_stdf_grid(s, 15, (1, 3), xs, ys)
    for i, xa in enumerate(xs):
        for j, xb in enumerate(ys):
            assert grid[i, j] == pytest.approx(
                empirical_stdf(s, 15, (1, 3), (xa, xb)), abs=1e-12
            )


def test_tail_estimators_agree_on_diagonal(rng):
    # 2 - stdf(1,1) equals the joint top-k fraction when k_lambda = k
    s = SampleMatrix.from_values(rng.standard_normal((100, 2)))
    for k in (5, 10, 25):
        lam = empirical_tdc_matrix(s, k)[0, 1]
        ell = empirical_stdf(s, k, (1, 2), (1.0, 1.0))
        assert abs((2.0 - ell) - lam) <= 2.0 / k


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10**6), st.sampled_from(["exp", "cube", "atan"]))
def test_rank_invariance_under_increasing_maps(seed, transform):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((40, 2))
    fns = {"exp": np.exp, "cube": lambda v: v**3 + v, "atan": np.arctan}
    y = fns[transform](x)
    a, b = SampleMatrix.from_values(x), SampleMatrix.from_values(y)
    assert np.allclose(kendall_tau_matrix(a), kendall_tau_matrix(b))
    assert np.allclose(empirical_tdc_matrix(a, 8), empirical_tdc_matrix(b, 8))
    assert empirical_stdf(a, 9, (1, 2), (1.3, 0.4)) == empirical_stdf(b, 9, (1, 2), (1.3, 0.4))


def test_csv_round_trip(tmp_path, rng):
    s = SampleMatrix.from_values(rng.random((6, 3)), columns=("u", "v", "w"))
    path = tmp_path / "sample.csv"
    s.to_csv(path)
    back = SampleMatrix.from_csv(path)
    assert back.columns == ("u", "v", "w")
    assert np.allclose(back.values, s.values)


def test_csv_rejects_missing_and_bad_cells(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b\n1.0,\n2.0,3.0\n")
    with pytest.raises(InputError, match="column 'b' is missing"):
        SampleMatrix.from_csv(p)
    p.write_text("a,b\n1.0,x\n2.0,3.0\n")
    with pytest.raises(InputError, match="not numeric"):
        SampleMatrix.from_csv(p)
    p.write_text("a,b\n1.0,2.0\n3.0\n")
    with pytest.raises(InputError, match="fields"):
        SampleMatrix.from_csv(p)
