"""Diffusive fluctuation fields and their Brownian limit objects.

zeta_n(x,t) = n^{-1/2} (z_[nx](nt) - n u(x,t)) is the microscopic field; its
limit is the initial Brownian fluctuation read off at the backward
minimizer, zeta(x,t) = inf_{y in I(x,t)} B(clock(y)) with the time change
clock(y) = int_0^y rho0^2.  The conserved-quantity fluctuation field xi is
handled through pairings with compactly supported test functions, matched
against an Ito-integral representation with explicit correlations.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from hamlab.streams import stream


@dataclass(frozen=True)
class SpaceTest:
    """1-D test function with derivative and compact support."""

    value: callable
    dx: callable
    support: tuple


def bump1d(lo: float, hi: float, height: float = 1.0) -> SpaceTest:
    """C-infinity bump exp(-1/(1-u^2)) scaled to [lo, hi]."""
    mid, rad = 0.5 * (lo + hi), 0.5 * (hi - lo)

    def val(x):
        u = (np.asarray(x, dtype=np.float64) - mid) / rad
        inside = np.abs(u) < 1.0
        uu = np.where(inside, u, 0.0)
        return np.where(inside, height * np.exp(-1.0 / (1.0 - uu * uu)), 0.0)

    def ddx(x):
        u = (np.asarray(x, dtype=np.float64) - mid) / rad
        inside = np.abs(u) < 1.0
        uu = np.where(inside, u, 0.0)
        q = 1.0 - uu * uu
        return np.where(inside, height * np.exp(-1.0 / q) * (-2.0 * uu / (q * q)) / rad, 0.0)

    return SpaceTest(val, ddx, (lo, hi))


def tent1d(lo: float, mid: float, hi: float, height: float = 1.0) -> SpaceTest:
    """Piecewise-linear tent; handy when exact summation identities are tested."""

    def val(x):
        x = np.asarray(x, dtype=np.float64)
        up = height * (x - lo) / (mid - lo)
        down = height * (hi - x) / (hi - mid)
        return np.clip(np.minimum(up, down), 0.0, None)

    def ddx(x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(
            (x > lo) & (x < mid),
            height / (mid - lo),
            np.where((x > mid) & (x < hi), -height / (hi - mid), 0.0),
        )

    return SpaceTest(val, ddx, (lo, hi))


# -- two-sided Brownian motion -------------------------------------------------


@dataclass(frozen=True)
class BrownianPath:
    """Two-sided standard Brownian motion sampled on a fixed time set.

    The two half-lines use independent streams; value(0) = 0; increments
    over disjoint intervals are independent N(0, dt).
    """

    times: np.ndarray
    values: np.ndarray
    seed: int

    def value_at(self, s):
        s = np.asarray(s, dtype=np.float64)
        j = np.searchsorted(self.times, s)
        j = np.clip(j, 0, self.times.size - 1)
        ok = np.isclose(self.times[j], s, rtol=1e-9, atol=1e-12)
        if not np.all(ok):
            missing = np.atleast_1d(s)[~np.atleast_1d(ok)]
            raise KeyError(f"path does not cover times {missing[:5]}")
        return self.values[j]


def sample_brownian(clock_times, seed: int) -> BrownianPath:
    """Sample B on the given set of times (0 is always included)."""
    ts = np.unique(np.concatenate([np.atleast_1d(np.asarray(clock_times, dtype=np.float64)), [0.0]]))
    vals = np.zeros_like(ts)
    j0 = int(np.searchsorted(ts, 0.0))
    pos = ts[j0:]
    neg = ts[: j0 + 1][::-1]  # 0 and below, walking leftward
    if pos.size > 1:
        rng = stream(seed, "brownian_pos")
        inc = rng.normal(0.0, np.sqrt(np.diff(pos)))
        vals[j0 + 1 :] = np.cumsum(inc)
    if neg.size > 1:
        rng = stream(seed, "brownian_neg")
        inc = rng.normal(0.0, np.sqrt(-np.diff(neg)))
        vals[:j0] = np.cumsum(inc)[::-1]
    return BrownianPath(times=ts, values=vals, seed=int(seed))


# -- microscopic field -----------------------------------------------------------


def zeta_n(state_t, sol, x: float, t: float) -> float:
    """n^{-1/2} (z_[nx](nt) - n u(x,t)) read from an evolved state."""
    if not math.isclose(state_t.time, t, rel_tol=0, abs_tol=1e-12):
        raise ValueError(f"state is at time {state_t.time}, asked for {t}")
    n = state_t.n
    label = math.floor(n * x)
    z = state_t.z(label)
    return (z - n * sol.u_value(x, t)) / math.sqrt(n)


@dataclass(frozen=True)
class FluctuationSample:
    """Per-replica zeta_n evaluations on a space-time grid."""

    n: int
    grid: tuple
    values: np.ndarray
    argmins: np.ndarray  # minimizing index / n per grid point


def collect_fluctuations(state_by_time, sol, grid) -> FluctuationSample:
    """Evaluate zeta_n and scaled argmins on the grid from evolved states.

    state_by_time maps t -> ParticleState at that time (states at t=0 allowed).
    """
    vals, args = [], []
    n = None
    for (x, t) in grid:
        st = state_by_time[t]
        n = st.n
        vals.append(zeta_n(st, sol, x, t))
        label = math.floor(n * x)
        if st.argmins is not None:
            args.append(st.argmin_of(label) / n)
        else:
            args.append(label / n)
    return FluctuationSample(n=n, grid=tuple(grid), values=np.asarray(vals), argmins=np.asarray(args))


# -- limit field ------------------------------------------------------------------


@dataclass(frozen=True)
class LimitSample:
    """zeta(x,t) on a grid, plus the Brownian path it was read from."""

    grid: tuple
    values: np.ndarray
    path: BrownianPath


def sample_limit(sol, profile, grid, seed: int, refine: int = 0) -> LimitSample:
    """One realization of the limit field zeta on the grid.

    The Brownian path is sampled exactly on the clock images of all
    minimizer candidates; `refine` adds equally spaced extra points inside
    [y-, y+] (only useful for exploratory continuity checks, the minimizer
    sets of piecewise profiles are finite).
    """
    member_sets = []
    clocks = [0.0]
    for (x, t) in grid:
        ms = sol.minimizers(x, t)
        ys = ms.members
        if refine > 1 and ms.y_plus - ms.y_minus > 0:
            ys = np.unique(np.concatenate([ys, np.linspace(ms.y_minus, ms.y_plus, refine)]))
        member_sets.append(ys)
        clocks.extend(profile.clock(ys).tolist())
    path = sample_brownian(np.asarray(clocks), seed)
    vals = np.array(
        [
            float(np.min(path.value_at(profile.clock(ys))))
            for ys in member_sets
        ]
    )
    return LimitSample(grid=tuple(grid), values=vals, path=path)


def zeta_bar(limit: LimitSample, sol, profile, x: float, t: float) -> float:
    """The half/half average of the initial fluctuation at y- and y+.

    Agrees with the infimum value off shocks; at shocks it is the version
    entering the weak transport equation, not the pointwise limit.
    """
    ym, yp = sol.y_pm(x, t)
    bm = limit.path.value_at(profile.clock(ym))
    bp = limit.path.value_at(profile.clock(yp))
    return float(0.5 * (bm + bp))


def min_gaussian_cdf(sigma1: float, sigma2: float):
    """CDF of min(N(0, s1^2), N(0, s2^2)) with independent components.

    A zero sigma contributes a point mass at 0 (its factor becomes an
    indicator), which is exactly the shock law when one side of the profile
    carries no initial fluctuation.
    """

    def cdf(z):
        z = np.asarray(z, dtype=np.float64)
        s1 = norm.sf(z / sigma1) if sigma1 > 0 else (z < 0).astype(float)
        s2 = norm.sf(z / sigma2) if sigma2 > 0 else (z < 0).astype(float)
        return 1.0 - s1 * s2

    return cdf


# -- stick-field pairings ----------------------------------------------------------


def xi_n(state_t, sol, t: float, phi: SpaceTest) -> float:
    """n^{-1/2} sum_i phi(i/n) (eta_i(nt) - rho^n_i(t)).

    rho^n_i(t) = n(u(i/n,t) - u((i-1)/n,t)) comes from the exact solver.
    The support of phi must sit strictly inside the window span.
    """
    win = state_t.window
    n = win.n
    lo, hi = phi.support
    if lo <= win.i_min / n or hi >= win.i_max / n:
        raise ValueError("test-function support escapes the window span")
    if not state_t.present.all():
        raise ValueError("xi_n needs all window labels present")
    labels = win.labels
    eta = np.diff(state_t.positions)  # stick i for labels i_min+1 .. i_max
    uvals = sol.u_values(labels / n, t)
    rho_n = n * np.diff(uvals)
    w = phi.value(labels[1:] / n)
    return float(np.dot(w, eta - rho_n) / math.sqrt(n))


def transport_position(sol, r: float, u: float) -> float:
    """Forward characteristic image w(r, u) (a.e. unique; midpoint at fans)."""
    if u == 0.0:
        return float(r)
    wm, wp = sol.forward_char(r, 0.0, u)
    return 0.5 * (wm + wp)


def xi_limit_mesh(sol, profile, t: float, phi: SpaceTest, n_mesh: int = 2048):
    """Deterministic x-mesh and clock set for quadrature of xi(t, phi).

    Returns (x_nodes, clocks): panel-aware nodes (nudged off shocks) and the
    Brownian clock values needed to evaluate zeta at them.
    """
    lo, hi = phi.support
    cuts = np.unique(np.concatenate([[lo, hi], sol.structure_points(t) if t > 0 else []]))
    cuts = cuts[(cuts >= lo) & (cuts <= hi)]
    nodes = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b <= a:
            continue
        m = max(8, int(n_mesh * (b - a) / (hi - lo)))
        xs = np.linspace(a, b, m + 1)
        xs[0] = np.nextafter(a, b)
        xs[-1] = np.nextafter(b, a)
        nodes.append(xs)
    x_nodes = nodes
    clocks = []
    for xs in x_nodes:
        for x in xs:
            ym, yp = (x, x) if t == 0.0 else sol.y_pm(x, t)
            clocks.append(profile.clock(ym))
            clocks.append(profile.clock(yp))
    return x_nodes, np.asarray(clocks)


def xi_limit(sol, profile, path: BrownianPath, t: float, phi: SpaceTest,
              n_mesh: int = 2048) -> float:
    """- integral of phi'(x) zeta(x,t) dx by panel-aware trapezoid quadrature.

    The path must cover the clocks from xi_limit_mesh with the same n_mesh.
    """
    panels, _ = xi_limit_mesh(sol, profile, t, phi, n_mesh)
    total = 0.0
    for xs in panels:
        zvals = np.empty(xs.size)
        for i, x in enumerate(xs):
            ym, yp = (x, x) if t == 0.0 else sol.y_pm(x, t)
            bm = path.value_at(profile.clock(ym))
            bp = path.value_at(profile.clock(yp))
            zvals[i] = min(bm, bp)
        integrand = -phi.dx(xs) * zvals
        total += float(np.trapezoid(integrand, xs))
    return total


def ito_mesh(profile, sol, times, phis, n_mesh: int = 800):
    """Common r-mesh for Ito sums: support ends, breakpoints, absorption edges."""
    los = [p.support[0] for p in phis]
    his = [p.support[1] for p in phis]
    lo, hi = min(los), max(his)
    cuts = [lo, hi]
    cuts.extend(b for b in profile.breakpoints if lo < b < hi)
    for u in times:
        if u <= 0:
            continue
        for xs in sol.shocks_at(u):
            ym, yp = sol.y_pm(xs, u)
            for y in (ym, yp):
                if lo < y < hi:
                    cuts.append(y)
    cuts = np.unique(np.asarray(cuts, dtype=np.float64))
    mesh = [np.linspace(a, b, max(4, int(n_mesh * (b - a) / (hi - lo))) + 1)
            for a, b in zip(cuts[:-1], cuts[1:]) if b > a]
    return np.unique(np.concatenate(mesh))


def ito_weights(sol, profile, t: float, phi: SpaceTest, r_mesh: np.ndarray) -> np.ndarray:
    """phi(w(r_j, t)) rho0(r_j) evaluated at the left ends of the mesh cells."""
    r = r_mesh[:-1]
    w = np.array([transport_position(sol, rj, t) for rj in r])
    return phi.value(w) * profile.rho0(r)


def xi_tilde(t: float, phi: SpaceTest, sol, profile, wpath: BrownianPath,
             r_mesh: np.ndarray = None) -> float:
    """Riemann-Ito sum sum_j phi(w(r_j,t)) rho0(r_j) (W(r_{j+1}) - W(r_j))."""
    if r_mesh is None:
        r_mesh = ito_mesh(profile, sol, [t], [phi])
    wvals = wpath.value_at(r_mesh)
    weights = ito_weights(sol, profile, t, phi, r_mesh)
    return float(np.dot(weights, np.diff(wvals)))


def corr_theoretical(sol, profile, s: float, t: float, psi: SpaceTest,
                      phi: SpaceTest) -> float:
    """Quadrature of psi(w(r,s)) phi(w(r,t)) rho0(r)^2 dr with kink-aware panels."""
    from scipy.integrate import quad

    lo = min(psi.support[0], phi.support[0])
    hi = max(psi.support[1], phi.support[1])
    pts = [b for b in profile.breakpoints if lo < b < hi]
    for u in (s, t):
        if u <= 0:
            continue
        for xs in sol.shocks_at(u):
            ym, yp = sol.y_pm(xs, u)
            pts.extend(y for y in (ym, yp) if lo < y < hi)

    def integrand(r):
        return (
            psi.value(transport_position(sol, r, s))
            * phi.value(transport_position(sol, r, t))
            * profile.rho0(r) ** 2
        )

    val, _err = quad(integrand, lo, hi, points=sorted(set(pts)), limit=200)
    return float(val)
