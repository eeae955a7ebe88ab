import numpy as np
import pytest
from scipy.stats import chi2, poisson

from hamlab.increasing_seq import lis_count
from hamlab.poisson_field import (
    CoverageError,
    PointField,
    Region,
    dump_csv,
    load_csv,
    points_in,
    sample_field,
)
from hamlab.stats import ks_two_sample


def test_degenerate_region_rejected():
    with pytest.raises(ValueError):
        Region(1.0, 1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        Region(0.0, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        Region(0.0, 1.0, -0.5, 1.0)


def test_nonpositive_rate_rejected():
    with pytest.raises(ValueError):
        sample_field(1, Region(0, 1, 0, 1), 0.0)
    with pytest.raises(ValueError):
        sample_field(1, Region(0, 1, 0, 1), -2.0)


def test_determinism_bitwise():
    reg = Region(0.0, 1.0, 0.0, 1.0)
    a = sample_field(12345, reg, 1.0)
    b = sample_field(12345, reg, 1.0)
    assert np.array_equal(a.xs, b.xs) and np.array_equal(a.ts, b.ts)
    c = sample_field(12346, reg, 1.0)
    assert not (len(a) == len(c) and np.array_equal(a.xs, c.xs))


def test_points_sorted_and_inside():
    reg = Region(-3.0, 2.0, 0.0, 4.0)
    fld = sample_field(7, reg, 2.0)
    assert np.all(np.diff(fld.xs) >= 0)
    assert np.all((fld.xs > reg.x_min) & (fld.xs <= reg.x_max))
    assert np.all((fld.ts > reg.t_min) & (fld.ts <= reg.t_max))


def test_count_moments_and_chi2_gof():
    # 10^4 replicas on the unit square at rate 4: mean and variance within
    # 3 sigma, and a chi-square fit against the reference point-count law.
    reg = Region(0.0, 1.0, 0.0, 1.0)
    counts = np.array([len(sample_field(1000 + k, reg, 4.0)) for k in range(10_000)])
    lam, m = 4.0, counts.size
    assert abs(counts.mean() - lam) < 3.0 * np.sqrt(lam / m)
    var_se = np.sqrt(2.0 * lam**2 / m + lam / m)  # rough sd of sample variance
    assert abs(counts.var(ddof=1) - lam) < 4.0 * var_se
    edges = list(range(11))
    obs = np.array([(counts == k).sum() for k in edges] + [(counts > 10).sum()], float)
    pk = np.array([poisson.pmf(k, lam) for k in edges] + [1 - poisson.cdf(10, lam)])
    stat = float(((obs - m * pk) ** 2 / (m * pk)).sum())
    assert stat < chi2.ppf(0.999, len(obs) - 1)


def test_points_in_boxes():
    reg = Region(0.0, 10.0, 0.0, 5.0)
    fld = sample_field(3, reg, 1.0)
    xs, ts = points_in(fld, reg)
    assert xs.size == len(fld)
    rng = np.random.default_rng(0)
    for _ in range(100):
        a, b = np.sort(rng.uniform(0, 10, 2))
        s, t = np.sort(rng.uniform(0, 5, 2))
        if a == b or s == t:
            continue
        box = Region(a, b, s, t)
        xs, ts = points_in(fld, box)
        keep = (fld.xs > a) & (fld.xs <= b) & (fld.ts > s) & (fld.ts <= t)
        assert np.array_equal(xs, fld.xs[keep])
        assert np.array_equal(ts, fld.ts[keep])
    with pytest.raises(CoverageError):
        points_in(fld, Region(0.0, 11.0, 0.0, 5.0))


def test_empty_box_gives_empty():
    fld = sample_field(5, Region(0, 1, 0, 1), 1.0)
    xs, ts = points_in(fld, Region(0.4, 0.4 + 1e-12, 0.2, 0.2 + 1e-12))
    assert xs.size == 0


def test_disjoint_counts_uncorrelated():
    reg = Region(0.0, 2.0, 0.0, 1.0)
    left = Region(0.0, 1.0, 0.0, 1.0)
    right = Region(1.0, 2.0, 0.0, 1.0)
    reps = 10_000
    a = np.empty(reps)
    b = np.empty(reps)
    for k in range(reps):
        fld = sample_field(50_000 + k, reg, 2.0)
        a[k] = points_in(fld, left)[0].size
        b[k] = points_in(fld, right)[0].size
    r = np.corrcoef(a, b)[0, 1]
    assert abs(r) < 4.0 / np.sqrt(reps)


def test_lis_law_invariant_under_area_preserving_maps():
    # L over (0,rb]x(0,t/r] and over the square of the same area agree in law.
    reps = 2000
    rect = Region(0.0, 4.0, 0.0, 1.0)
    square = Region(0.0, 2.0, 0.0, 2.0)
    la = np.empty(reps)
    lb = np.empty(reps)
    for k in range(reps):
        fa = sample_field(90_000 + k, rect, 1.0)
        fb = sample_field(190_000 + k, square, 1.0)
        la[k] = lis_count(zip(fa.xs, fa.ts))
        lb[k] = lis_count(zip(fb.xs, fb.ts))
    _d, p = ks_two_sample(la, lb)
    assert p > 0.01


def test_csv_roundtrip(tmp_path):
    reg = Region(-1.0, 1.0, 0.0, 2.0)
    fld = sample_field(9, reg, 3.0)
    path = tmp_path / "field.csv"
    dump_csv(fld, path)
    reloaded = load_csv(path, reg, rate=3.0)
    assert np.allclose(reloaded.xs, fld.xs, rtol=1e-14, atol=0)
    assert np.allclose(reloaded.ts, fld.ts, rtol=1e-14, atol=0)
