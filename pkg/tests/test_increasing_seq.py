import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hamlab.increasing_seq import (
    FieldExhaustedError,
    PatienceState,
    gamma,
    gamma_profile,
    l_between,
    lis_count,
    lis_count_exhaustive,
)
from hamlab.poisson_field import PointField, Region, sample_field


def make_field(xs, ts, region):
    xs = np.asarray(xs, float)
    ts = np.asarray(ts, float)
    order = np.argsort(xs, kind="stable")
    return PointField(seed=-1, region=region, rate=1.0, xs=xs[order], ts=ts[order])


def test_lis_trivial():
    assert lis_count([]) == 0
    assert lis_count([(1, 1), (2, 2), (3, 3)]) == 3
    assert lis_count([(1, 3), (2, 2), (3, 1)]) == 1


def test_lis_equal_x_cannot_chain():
    assert lis_count([(1.0, 1.0), (1.0, 2.0)]) == 1
    assert lis_count([(1.0, 1.0), (1.0, 2.0), (2.0, 3.0)]) == 2


def test_lis_against_exhaustive_search():
    rng = np.random.default_rng(42)
    for _ in range(1000):
        pts = rng.uniform(0, 1, size=(8, 2))
        assert lis_count(pts) == lis_count_exhaustive(pts)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(
        st.tuples(st.integers(0, 6), st.integers(0, 6)),
        max_size=9,
    )
)
def test_lis_matches_oracle_on_small_integer_sets(pts):
    assert lis_count(pts) == lis_count_exhaustive(pts)


def test_patience_state_incremental():
    ps = PatienceState()
    for t, expect in [(3.0, 1), (1.0, 1), (2.0, 2), (2.5, 3), (0.5, 3)]:
        assert ps.push(t) == expect
    assert ps.pile_tops == sorted(ps.pile_tops)


def test_l_between_degenerate_and_definition():
    reg = Region(0.0, 5.0, 0.0, 5.0)
    fld = sample_field(21, reg, 1.0)
    assert l_between(fld, (1.0, 1.0), (1.0, 4.0)) == 0
    assert l_between(fld, (1.0, 2.0), (4.0, 2.0)) == 0
    from hamlab.poisson_field import points_in

    xs, ts = points_in(fld, Region(0.5, 4.5, 0.5, 4.5))
    assert l_between(fld, (0.5, 0.5), (4.5, 4.5)) == lis_count(zip(xs, ts))


def test_l_between_lln_small():
    # quick check of the s -> infinity growth constant 2 (full run in acceptance)
    s = 400.0
    vals = [
        l_between(sample_field(777 + k, Region(0, s, 0, s), 1.0), (0, 0), (s, s)) / s
        for k in range(20)
    ]
    assert 1.9 < np.mean(vals) < 2.05


def test_gamma_trivial_and_single_point():
    reg = Region(0.0, 1.0, 0.0, 1.0)
    fld = make_field([0.5], [0.5], reg)
    assert gamma(fld, (0.0, 0.0), 0, 1.0) == 0.0
    assert gamma(fld, (0.0, 0.0), 1, 1.0) == pytest.approx(0.5)
    with pytest.raises(FieldExhaustedError) as ei:
        gamma(fld, (0.0, 0.0), 2, 1.0)
    assert ei.value.achieved == 1 and ei.value.requested == 2


def test_gamma_profile_matches_and_monotone():
    reg = Region(0.0, 30.0, 0.0, 6.0)
    for k in range(100):
        fld = sample_field(3000 + k, reg, 1.0)
        m_max = 8
        try:
            prof = gamma_profile(fld, (0.0, 0.0), m_max, 6.0)
        except FieldExhaustedError:
            continue
        assert prof[0] == 0.0
        assert np.all(np.diff(prof) >= 0)
        for m in range(m_max + 1):
            assert prof[m] == gamma(fld, (0.0, 0.0), m, 6.0)


def test_gamma_inverse_consistency():
    # L over width Gamma_m reaches m; just below the completing point it does not.
    reg = Region(0.0, 40.0, 0.0, 5.0)
    for k in range(30):
        fld = sample_field(8000 + k, reg, 1.0)
        try:
            h = gamma(fld, (0.0, 0.0), 5, 5.0)
        except FieldExhaustedError:
            continue
        assert l_between(fld, (0.0, 0.0), (h, 5.0)) >= 5
        assert l_between(fld, (0.0, 0.0), (np.nextafter(h, 0.0), 5.0)) < 5


def test_gamma_lln_small():
    s = 400.0
    reg = Region(0.0, 160.0, 0.0, s)
    vals = []
    for k in range(20):
        fld = sample_field(6100 + k, reg, 1.0)
        vals.append(gamma(fld, (0.0, 0.0), int(s), s) / s)
    assert 0.22 < np.mean(vals) < 0.30


def test_gamma_monotone_in_tau():
    reg = Region(0.0, 50.0, 0.0, 8.0)
    fld = sample_field(99, reg, 1.0)
    g_small = gamma(fld, (0.0, 0.0), 6, 4.0)
    g_big = gamma(fld, (0.0, 0.0), 6, 8.0)
    assert g_big <= g_small
