import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oppscreen.learners import IsotonicMap, fit_isotonic, pav

from .oracles import canonical_sequences, grid_isotonic, partition_isotonic

values = st.lists(st.integers(0, 30).map(lambda v: v / 10), min_size=1, max_size=7)


def weighted(draw_len=7):
    return st.integers(1, draw_len).flatmap(
        lambda n: st.tuples(
            st.lists(st.floats(-5, 5, allow_nan=False), min_size=n, max_size=n),
            st.lists(st.floats(0.1, 5), min_size=n, max_size=n),
        )
    )


def test_fixtures():
    assert pav([3, 1]) == [2, 2]
    assert pav([1, 3, 2]) == [1, 2.5, 2.5]
    assert pav([0.5, 1, 2]) == [0.5, 1, 2]
    assert pav([]) == []


def test_fixtures_against_grid_search():
    # the grid search is a literal minimization over every monotone grid sequence
    assert grid_isotonic([3, 1]) == [2.0, 2.0]
    assert grid_isotonic([1, 3, 2]) == [1.0, 2.5, 2.5]


def test_partition_oracle_agrees_with_grid_search():
    rnd = random.Random(11)
    for _ in range(150):
        y = [rnd.randrange(31) / 10 for _ in range(rnd.randint(1, 5))]
        assert np.allclose(partition_isotonic([y])[0], grid_isotonic(y), atol=1e-12)


@settings(max_examples=200)
@given(weighted())
def test_weighted_pav_matches_oracle(case):
    y, w = case
    assert np.allclose(pav(y, w), partition_isotonic([y], [w])[0], atol=1e-9)


@given(values)
def test_monotone_and_mean_preserving(y):
    fit = pav(y)
    assert all(a <= b + 1e-12 for a, b in zip(fit, fit[1:]))
    assert sum(fit) == pytest.approx(sum(y), abs=1e-9)
    assert pav(fit) == pytest.approx(fit, abs=1e-12)


@given(weighted())
def test_weighted_mean_preserved(case):
    y, w = case
    fit = pav(y, w)
    assert np.dot(fit, w) == pytest.approx(np.dot(y, w), abs=1e-8)


@given(values, st.integers(-30, 30).map(lambda c: c / 10))
def test_translation_equivariance(y, c):
    assert np.allclose(pav([v + c for v in y]), [v + c for v in pav(y)], atol=1e-9)


@given(weighted(), st.floats(-3, 3))
def test_reflection_equivariance(case, c):
    y, w = case
    mirrored = pav([c - v for v in reversed(y)], list(reversed(w)))
    assert np.allclose(mirrored, [c - v for v in reversed(pav(y, w))], atol=1e-9)


def test_canonical_set_is_an_orbit_cover():
    # every length-3 code maps into the canonical set by a shift and maybe a reflection
    canon = {tuple(c) for c in canonical_sequences(3, levels=6)}
    for code in np.indices((6,) * 3).reshape(3, -1).T:
        shifted = tuple(code - code.min())
        mirrored = tuple(max(shifted) - np.array(shifted[::-1]))
        assert shifted in canon or mirrored in canon


def test_fit_isotonic_merges_ties_in_x():
    iso = fit_isotonic([1.0, 0.0, 3.0, 1.0], x=[0.0, 0.0, 1.0, 2.0])
    assert iso.x.tolist() == [0.0, 1.0, 2.0]
    assert iso.y.tolist() == [0.5, 2.0, 2.0]
    assert iso.weights.tolist() == [2.0, 1.0, 1.0]


def test_map_interpolates_and_clamps():
    iso = fit_isotonic([0.0, 1.0], x=[-1.0, 1.0])
    assert iso([-5, -1, 0, 1, 5]).tolist() == [0.0, 0.0, 0.5, 1.0, 1.0]


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=20), st.lists(st.floats(-4, 4), min_size=2, max_size=10))
def test_map_is_non_decreasing(y, probes):
    iso = fit_isotonic(y, x=list(range(len(y))))
    out = iso(sorted(probes))
    assert (np.diff(out) >= -1e-12).all()


def test_map_json_round_trip():
    iso = fit_isotonic([0.2, 0.1, 0.9], x=[0.3, -0.2, 1.5])
    back = IsotonicMap.from_json(iso.to_json())
    assert np.array_equal(back.x, iso.x) and np.array_equal(back.y, iso.y)


@pytest.mark.parametrize(
    "kwargs, message",
    [
        (dict(y=[]), "at least one"),
        (dict(y=[1, 2], weights=[1]), "weights must match"),
        (dict(y=[1, 2], weights=[1, 0]), "strictly positive"),
        (dict(y=[1, float("nan")]), "finite"),
        (dict(y=[1, 2], x=[1]), "x must match"),
    ],
)
def test_fit_isotonic_errors(kwargs, message):
    with pytest.raises(ValueError, match=message):
        fit_isotonic(**kwargs)
