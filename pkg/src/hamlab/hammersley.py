"""Finite-window construction of Hammersley's process.

Two independent routes are kept deliberately separate:

* evolve_variational: exact evaluation of the coupling formula
      z_k(nt) = min_{i <= k} { z_i(0) + Gamma((z_i(0),0), k-i, nt) }
  over a shared Poisson field, for every window label in one credit sweep
  (see _kernels.credit_sweep), with the minimizing index recorded per label.
* evolve_direct: continuous-time jump simulation with its own randomness.

The two agree in law; the test suite compares their marginals.  Windows are
finite truncations of the infinite lattice, so a guard band near the left
edge turns "minimizer escaped the window" from a silent bias into an error.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from hamlab._kernels import CreditSweep, gamma_profile_sweep, gillespie_sweep
from hamlab.increasing_seq import FieldExhaustedError
from hamlab.poisson_field import PointField, Region, field_chunks, points_in
from hamlab.streams import stream

_NOMIN = np.iinfo(np.int64).min


class WindowTooSmallError(Exception):
    """A minimizing index fell inside the guard band; restart with a wider window."""

    def __init__(self, labels, i_min, guard):
        super().__init__(
            f"argmin within guard band for labels {labels}; "
            f"i_min={i_min}, guard={guard}: enlarge the window leftward"
        )
        self.labels = list(labels)
        self.i_min = i_min
        self.guard = guard


@dataclass(frozen=True)
class WindowSpec:
    """Label window [i_min, i_max] at scale n with a left guard band."""

    n: int
    i_min: int
    i_max: int
    guard: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not (self.i_min + self.guard < self.i_max):
            raise ValueError("need i_min + guard < i_max")

    @property
    def labels(self) -> np.ndarray:
        return np.arange(self.i_min, self.i_max + 1)


@dataclass(frozen=True)
class ParticleState:
    """Labeled particle positions at one macroscopic time.

    positions[j] is z_{i_min+j}(n*time); absent labels (used by the step
    initial condition, where particles start at +infinity) carry
    present=False and a NaN position.  argmins holds the minimizing index of
    the coupling formula per label once the state has been evolved.
    """

    window: WindowSpec
    time: float
    positions: np.ndarray
    present: np.ndarray
    argmins: np.ndarray = None

    @property
    def n(self) -> int:
        return self.window.n

    def index_of(self, label: int) -> int:
        if not (self.window.i_min <= label <= self.window.i_max):
            raise KeyError(f"label {label} outside window [{self.window.i_min}, {self.window.i_max}]")
        return label - self.window.i_min

    def z(self, label: int) -> float:
        j = self.index_of(label)
        if not self.present[j]:
            raise KeyError(f"label {label} is absent (no particle)")
        return float(self.positions[j])

    def argmin_of(self, label: int) -> int:
        if self.argmins is None:
            raise ValueError("state carries no argmins (not evolved)")
        return int(self.argmins[self.index_of(label)])


def sticks(state: ParticleState) -> np.ndarray:
    """Increments z_i - z_{i-1} over the present labels (all >= 0)."""
    pos = state.positions[state.present]
    return np.diff(pos)


def init_local_equilibrium(profile, window: WindowSpec, seed: int) -> ParticleState:
    """Independent exponential sticks matched to the macroscopic profile.

    Stick i has mean n*(u0(i/n) - u0((i-1)/n)).  Zero-density stretches give
    mean-zero sticks, which are taken as exactly zero (the degenerate
    exponential); the anchor is z_0(0) = 0 when label 0 is in the window,
    else z_{i_min}(0) = n*u0(i_min/n).
    """
    n = window.n
    labels = window.labels
    u0 = np.asarray(profile.u0(labels / n), dtype=np.float64)
    means = n * np.diff(u0)
    if np.any(means < -1e-9):
        raise ValueError("negative stick mean: profile must be nondecreasing")
    means = np.maximum(means, 0.0)
    rng = stream(seed, "init")
    gaps = rng.exponential(scale=np.where(means > 0, means, 0.0))
    gaps[means == 0.0] = 0.0
    pos = np.concatenate([[0.0], np.cumsum(gaps)])
    if window.i_min <= 0 <= window.i_max:
        pos -= pos[-window.i_min]
    else:
        pos += n * float(profile.u0(window.i_min / n)) - pos[0]
    return ParticleState(window, 0.0, pos, np.ones(labels.size, dtype=bool))


def init_deterministic(profile, window: WindowSpec) -> ParticleState:
    """Zero-fluctuation data z_i(0) = n*u0(i/n)."""
    n = window.n
    pos = np.asarray(profile.u0(window.labels / n), dtype=np.float64) * n
    return ParticleState(window, 0.0, pos, np.ones(pos.size, dtype=bool))


def init_step_bdj(window: WindowSpec) -> ParticleState:
    """Step data: z_i(0) = 0 for i <= 0, labels i > 0 absent (at +infinity)."""
    if window.i_min > 0:
        raise ValueError("step window must contain nonpositive labels")
    labels = window.labels
    present = labels <= 0
    pos = np.where(present, 0.0, np.nan)
    return ParticleState(window, 0.0, pos, present)


def evolve_variational(
    state0: ParticleState,
    field: PointField,
    t: float,
    check_labels=None,
) -> ParticleState:
    """Evaluate the coupling formula at macroscopic time t on a shared field.

    Always evolves from time-0 data (the construction minimizes from the
    initial configuration; there is deliberately no chained evolution).
    Values are certified for `check_labels`: a certified label either found
    its minimum inside the field or is backed by its initial position within
    coverage; FieldExhaustedError or WindowTooSmallError otherwise.

    The recorded argmin per label is the index implied by the maximal-credit
    chain through the label's witness point.  It always achieves the
    minimum; when several chains witness the same point it may exceed the
    smallest achieving index (which evolve_variational_bruteforce records).
    """
    if t <= 0.0:
        raise ValueError(f"t must be > 0, got {t}")
    reg = field.region
    tau = state0.window.n * t
    if reg.t_min != 0.0 or reg.t_max < tau:
        raise ValueError(f"field must cover (0, {tau}] in time, has {reg}")
    sweep = _new_sweep(state0, t_cap=tau)
    xs, ts = points_in(field, Region(reg.x_min, reg.x_max, 0.0, tau))
    sweep.feed(xs, ts)
    return _assemble(state0, sweep, t, reg.x_max, check_labels)


def evolve_variational_streamed(
    state0: ParticleState,
    field_seed: int,
    region: Region,
    rate: float,
    t_list,
    check_labels=None,
):
    """Coupling evaluation at several times over one streamed field realization.

    Generates the field of (field_seed, region, rate) chunk by chunk and
    feeds every time slice's sweep, so the full field is never materialized;
    results are bitwise identical to evolve_variational on
    sample_field(field_seed, region, rate).  Returns {t: ParticleState}.
    """
    if region.t_min != 0.0:
        raise ValueError("simulation fields start at t=0")
    n = state0.window.n
    t_list = list(t_list)
    if any(t <= 0 for t in t_list):
        raise ValueError("times must be positive")
    if max(t_list) * n > region.t_max:
        raise ValueError("region too short in time for the requested horizon")
    sweeps = {t: _new_sweep(state0, t_cap=n * t) for t in t_list}
    for xs, ts in field_chunks(field_seed, region, rate):
        for sw in sweeps.values():
            if not sw.done:
                sw.feed(xs, ts)
        if all(sw.done for sw in sweeps.values()):
            break
    return {
        t: _assemble(state0, sw, t, region.x_max, check_labels)
        for t, sw in sweeps.items()
    }


def _new_sweep(state0: ParticleState, t_cap: float) -> CreditSweep:
    if state0.time != 0.0:
        raise ValueError("variational evolution always starts from time-0 data")
    win = state0.window
    src_mask = state0.present
    src_x = state0.positions[src_mask]
    if src_x.size == 0:
        raise ValueError("no particles present")
    src_lab = win.labels[src_mask].astype(np.int64)
    return CreditSweep(src_x, src_lab, int(win.i_min), int(win.i_max) + 1, t_cap)


def _assemble(state0, sweep: CreditSweep, t: float, x_max: float, check_labels):
    win = state0.window
    labels = win.labels
    nlab = labels.size
    first_x, fill_credit, fill_src = sweep.first_x, sweep.fill_credit, sweep.fill_src
    pos = np.full(nlab, np.nan)
    present = np.zeros(nlab, dtype=bool)
    argmins = np.full(nlab, _NOMIN, dtype=np.int64)
    # first_x[k - i_min - 1] is the point route for label k
    idx = labels - sweep.lo_credit - 1
    route = np.where(
        (idx >= 0) & (idx < first_x.size),
        first_x[np.clip(idx, 0, first_x.size - 1)],
        np.inf,
    )
    for j, k in enumerate(labels):
        z0 = state0.positions[j] if state0.present[j] else np.inf
        if route[j] < z0:
            pos[j] = route[j]
            present[j] = True
            argmins[j] = k - fill_credit[idx[j]] + fill_src[idx[j]]
        elif state0.present[j]:
            pos[j] = z0
            present[j] = True
            argmins[j] = k
    out = ParticleState(win, t, pos, present, argmins)

    if check_labels is not None:
        bad_cov, bad_guard = [], []
        for k in check_labels:
            j = out.index_of(int(k))
            covered = (route[j] < np.inf) or (
                state0.present[j] and state0.positions[j] <= x_max
            )
            if not covered:
                bad_cov.append(int(k))
            elif present[j] and argmins[j] < win.i_min + win.guard:
                bad_guard.append(int(k))
        if bad_cov:
            raise FieldExhaustedError(int(max(bad_cov)), sweep.record)
        if bad_guard:
            raise WindowTooSmallError(bad_guard, win.i_min, win.guard)

    p = out.positions[present]
    if p.size and np.any(np.diff(p) < 0):
        raise AssertionError("non-monotone evolved configuration (internal error)")
    return out


def evolve_variational_bruteforce(
    state0: ParticleState, field: PointField, t: float
) -> ParticleState:
    """Label-by-label minimization with per-origin patience sweeps.

    Exact reference for evolve_variational on small instances; positions
    agree bitwise (both report the completing point's x-coordinate).  The
    argmin recorded here is the smallest achieving index.
    """
    if state0.time != 0.0:
        raise ValueError("variational evolution always starts from time-0 data")
    win = state0.window
    tau = win.n * t
    reg = field.region
    xs_all, ts_all = points_in(field, Region(reg.x_min, reg.x_max, 0.0, tau))
    labels = win.labels
    pos = np.full(labels.size, np.nan)
    present = np.zeros(labels.size, dtype=bool)
    argmins = np.full(labels.size, _NOMIN, dtype=np.int64)
    for j, k in enumerate(labels):
        best = np.inf
        best_i = _NOMIN
        if state0.present[j]:
            best = state0.positions[j]
            best_i = k
        for jj in range(j, -1, -1):
            if not state0.present[jj]:
                continue
            i = labels[jj]
            m = k - i
            if m == 0:
                continue
            a = state0.positions[jj]
            sel = xs_all > a
            comp, achieved = gamma_profile_sweep(xs_all[sel], ts_all[sel], a, m, best)
            # <= keeps the smallest index among exactly tied minimizers
            if achieved >= m and comp[m - 1] <= best:
                best = comp[m - 1]  # z_i(0) + Gamma = completion x exactly
                best_i = i
        if np.isfinite(best):
            pos[j] = best
            present[j] = True
            argmins[j] = best_i
    return ParticleState(win, t, pos, present, argmins)


def evolve_direct(
    state0: ParticleState, t: float, seed: int, log_events: bool = False
):
    """Continuous-time jump dynamics to macroscopic time t (exact Gillespie).

    Particle i > i_min jumps at rate z_i - z_{i-1} to a uniform point of the
    gap; the leftmost particle is frozen (boundary condition).  Independent
    of any PointField.  Returns the state, or (state, events) with
    log_events: events is a list of (label, mass_moved_right).
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if not state0.present.all():
        raise ValueError("direct dynamics needs all window labels present")
    win = state0.window
    tau = win.n * t
    gaps = np.diff(state0.positions).copy()
    rng = stream(seed, "direct")
    t_now = 0.0
    all_sites, all_mass = [], []
    chunk = max(256, int(4.0 * gaps.sum() * tau) if tau > 0 else 256)
    while t_now < tau:
        wait_u = rng.random(chunk)
        sel_u = rng.random(chunk)
        land_u = rng.random(chunk)
        log_site = np.empty(chunk, dtype=np.int64)
        log_mass = np.empty(chunk)
        ev, t_now = gillespie_sweep(
            gaps, t_now, tau, wait_u, sel_u, land_u, log_site, log_mass, log_events
        )
        if log_events:
            all_sites.append(log_site[:ev])
            all_mass.append(log_mass[:ev])
        if ev < chunk:
            break
    pos = state0.positions[0] + np.concatenate([[0.0], np.cumsum(gaps)])
    out = ParticleState(win, t, pos, state0.present.copy(), None)
    if log_events:
        sites = np.concatenate(all_sites) if all_sites else np.empty(0, dtype=np.int64)
        mass = np.concatenate(all_mass) if all_mass else np.empty(0)
        labels = win.i_min + 1 + sites  # stick j belongs to particle i_min+1+j
        return out, list(zip(labels.tolist(), mass.tolist()))
    return out


def tagged_trajectory(state0, field, label: int, t_grid, return_argmins=False):
    """z_label(n t_j) for each t_j, all read from the same field realization.

    Output is nonincreasing in t (particles only jump leftward).
    """
    ts = list(t_grid)
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ValueError("t_grid must be strictly increasing")
    zs, ams = [], []
    for tj in ts:
        if tj == 0.0:
            zs.append(state0.z(label))
            ams.append(label)
        else:
            st = evolve_variational(state0, field, tj, check_labels=[label])
            zs.append(st.z(label))
            ams.append(st.argmin_of(label))
    if return_argmins:
        return np.asarray(zs), np.asarray(ams, dtype=np.int64)
    return np.asarray(zs)


# -- sizing helpers -------------------------------------------------------------


def default_window(sol, n: int, grid, margin: float = 0.5, guard_frac: float = 0.5) -> WindowSpec:
    """Window placing every queried point's minimizer well inside the labels.

    i_min sits `margin` macroscopic units left of the leftmost backward
    minimizer over the grid; the guard band covers guard_frac of that margin,
    so escape attempts are detected long before the hard edge matters.
    """
    y_lo = min(sol.y_pm(x, t)[0] if t > 0 else x for (x, t) in grid)
    i_min = math.floor(n * (y_lo - margin))
    i_max = max(math.floor(n * x) for (x, t) in grid) + 1
    guard = max(1, int(guard_frac * margin * n))
    if i_min + guard >= i_max:
        i_min = i_max - guard - 1
    return WindowSpec(n=n, i_min=i_min, i_max=i_max, guard=guard)


def required_region(state0: ParticleState, u_max_micro: float, t_max: float,
                    pad_mult: float = 1.0) -> Region:
    """Field rectangle covering the sweep: from the leftmost particle to the
    largest queried macroscopic position plus a fluctuation pad."""
    n = state0.window.n
    tau = n * t_max
    x_lo = float(state0.positions[state0.present][0])
    pad = 8.0 * math.sqrt(abs(u_max_micro - x_lo) + n**0.5 + 1.0) + 12.0 * tau ** (1.0 / 3.0) + 4.0
    x_hi = u_max_micro + pad * pad_mult
    if x_hi <= x_lo + 1.0:
        x_hi = x_lo + 1.0 + pad * pad_mult
    return Region(x_lo, x_hi, 0.0, tau)
