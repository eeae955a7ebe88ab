"""Maximal increasing sequences L and the inverse width Gamma over a PointField.

L((a,s),(b,t)) counts the longest chain of field points strictly increasing
in both coordinates inside the box (a,b] x (s,t].  Gamma((a,s), m, tau) is
the minimal strip width h such that L((a,s),(a+h,s+tau)) >= m; since L is a
right-continuous step function of h, Gamma is exactly the distance from a to
the x-coordinate of the point completing the m-th patience pile.
"""

from dataclasses import dataclass, field

import numpy as np

from hamlab._kernels import gamma_profile_sweep, patience_count
from hamlab.poisson_field import PointField, Region, points_in


class FieldExhaustedError(Exception):
    """The strip ran out of points before the requested pile count."""

    def __init__(self, requested: int, achieved: int):
        super().__init__(
            f"strip exhausted at {achieved} piles before reaching {requested};"
            " enlarge the field window"
        )
        self.requested = requested
        self.achieved = achieved


@dataclass
class PatienceState:
    """Incremental patience piles: minimal top t per current chain length."""

    pile_tops: list = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.pile_tops)

    def push(self, t: float) -> int:
        """Insert a t-value (points fed in x-order); returns the new count."""
        import bisect

        j = bisect.bisect_left(self.pile_tops, t)
        if j == len(self.pile_tops):
            self.pile_tops.append(t)
        else:
            self.pile_tops[j] = t
        return len(self.pile_tops)


def lis_count(points) -> int:
    """Longest chain x_1<...<x_m, t_1<...<t_m (strict in both coordinates).

    Accepts any iterable of (x, t) pairs; O(n log n).  Equal x-values are
    ordered by descending t so they can never chain together.
    """
    pts = np.asarray(list(points), dtype=np.float64).reshape(-1, 2)
    if pts.shape[0] == 0:
        return 0
    order = np.lexsort((-pts[:, 1], pts[:, 0]))
    return int(patience_count(np.ascontiguousarray(pts[order, 1])))


def l_between(fld: PointField, lower, upper) -> int:
    """L((a,s),(b,t)) on the field; degenerate boxes give 0."""
    a, s = lower
    b, t = upper
    if not (a <= b and s <= t):
        raise ValueError("need a <= b and s <= t")
    if a == b or s == t:
        return 0
    xs, ts = points_in(fld, Region(a, b, s, t))
    if xs.size == 0:
        return 0
    return int(patience_count(ts))


def _strip_points(fld: PointField, a: float, s: float, tau: float):
    if tau <= 0.0:
        raise ValueError(f"tau must be positive, got {tau}")
    box = Region(a, fld.region.x_max, s, s + tau)
    return points_in(fld, box)


def gamma(fld: PointField, origin, m: int, tau: float) -> float:
    """Minimal h >= 0 with L((a,s),(a+h,s+tau)) >= m, by one patience sweep.

    Nondecreasing in m.  Raises FieldExhaustedError (with the achieved
    count) when the strip ends before m piles complete.
    """
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    if m == 0:
        return 0.0
    a, s = origin
    xs, ts = _strip_points(fld, a, s, tau)
    comp, achieved = gamma_profile_sweep(xs, ts, a, m, np.inf)
    if achieved < m:
        raise FieldExhaustedError(m, achieved)
    return float(comp[m - 1] - a)


def gamma_profile(fld: PointField, origin, m_max: int, tau: float) -> np.ndarray:
    """gamma for every m = 0..m_max in a single sweep (element m is Gamma_m)."""
    if m_max < 0:
        raise ValueError(f"m_max must be >= 0, got {m_max}")
    a, s = origin
    out = np.zeros(m_max + 1, dtype=np.float64)
    if m_max == 0:
        return out
    xs, ts = _strip_points(fld, a, s, tau)
    comp, achieved = gamma_profile_sweep(xs, ts, a, m_max, np.inf)
    if achieved < m_max:
        raise FieldExhaustedError(m_max, achieved)
    out[1:] = comp - a
    return out


def lis_count_exhaustive(points) -> int:
    """O(2^n) reference: longest strictly-increasing chain by subset search.

    Independent oracle for lis_count; keep inputs at <= ~15 points.
    """
    pts = sorted((float(x), float(t)) for x, t in points)
    n = len(pts)
    best = 0
    # depth-first over chains; prune by remaining count
    def extend(last_idx, length):
        nonlocal best
        if length > best:
            best = length
        for j in range(last_idx + 1, n):
            if last_idx < 0 or (
                pts[j][0] > pts[last_idx][0] and pts[j][1] > pts[last_idx][1]
            ):
                extend(j, length + 1)

    extend(-1, 0)
    return best
