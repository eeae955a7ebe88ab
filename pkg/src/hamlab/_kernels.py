"""Numba kernels for increasing-sequence sweeps and event-driven dynamics.

All kernels are single-threaded and release the GIL; parallelism happens one
level up, across replicas.  Inputs are plain numpy arrays so the kernels
stay cacheable.
"""

import numpy as np
from numba import njit

_I64_MIN = np.iinfo(np.int64).min
_I64_MAX = np.iinfo(np.int64).max


@njit(cache=True, nogil=True)
def patience_count(ts):
    """Length of the longest strictly increasing subsequence of ts.

    ts must already be ordered by the x-coordinate (ties in x presorted with
    descending t, so equal-x points cannot chain).
    """
    n = ts.size
    tops = np.empty(n, dtype=np.float64)
    count = 0
    for j in range(n):
        t = ts[j]
        # first pile whose top is >= t (strict increase).
        lo, hi = 0, count
        while lo < hi:
            mid = (lo + hi) // 2
            if tops[mid] < t:
                lo = mid + 1
            else:
                hi = mid
        tops[lo] = t
        if lo == count:
            count += 1
    return count


@njit(cache=True, nogil=True)
def gamma_profile_sweep(xs, ts, origin_x, m_cap, x_stop):
    """One x-sorted patience sweep from origin_x recording pile completions.

    xs, ts: strip points with x > origin_x, sorted by x.
    Returns (completions, achieved): completions[m-1] is the x-coordinate at
    which pile m first exists, for m = 1..achieved.  The sweep stops once
    m_cap piles exist or x exceeds x_stop.
    """
    n = xs.size
    comp = np.full(m_cap, np.inf, dtype=np.float64)
    tops = np.empty(min(n, m_cap) + 1, dtype=np.float64)
    count = 0
    for j in range(n):
        x = xs[j]
        if x > x_stop:
            break
        t = ts[j]
        lo, hi = 0, count
        while lo < hi:
            mid = (lo + hi) // 2
            if tops[mid] < t:
                lo = mid + 1
            else:
                hi = mid
        if lo == count:
            if count < m_cap:
                tops[lo] = t
                count += 1
                comp[count - 1] = x
                if count >= m_cap:
                    break
        else:
            tops[lo] = t
    return comp, count


@njit(cache=True, nogil=True)
def credit_sweep_chunk(
    xs, ts, t_cap, src_x, src_lab, lo_credit, cap,
    min_t, src_of, first_x, fill_credit, fill_src, cursor,
):
    """Resumable core of the coupling sweep over one x-sorted chunk.

    Each source (initial particle) at src_x[i] carries credit src_lab[i]; a
    chain of points strictly increasing in (x, t), starting strictly right
    of a source, carries credit label + length.  For a point p,
        val(p) = max(bestsource(x_p), max_{q: x_q<x_p, t_q<t_p} val(q)) + 1,
    and first_x[v - lo_credit - 1] records where credit level v was first
    reached, together with the achieving point's full credit and its
    chain-opening source.  Points with t > t_cap are skipped (time slicing).

    cursor holds (record, source_pointer, best_source, work) and is updated
    in place; min_t[v] is the smallest point-t among chains of credit >= v
    and stays nondecreasing in v.
    """
    npts = xs.size
    nsrc = src_x.size
    nlev = cap - lo_credit
    record = cursor[0]
    sp = cursor[1]
    best_src = cursor[2]
    work = cursor[3]
    for j in range(npts):
        if record >= cap:
            break
        x = xs[j]
        t = ts[j]
        while sp < nsrc and src_x[sp] < x:
            if src_lab[sp] > best_src:
                best_src = src_lab[sp]
            sp += 1
        if t > t_cap:
            continue
        # largest credit v with min_t[v] < t, via lower bound on min_t;
        # levels at or below best_src are dominated by the direct source
        # credit, so the search window starts there.
        floor_idx = best_src - lo_credit if best_src > _I64_MIN else 0
        if floor_idx < 0:
            floor_idx = 0
        lo, hi = floor_idx, record - lo_credit
        if lo > hi:
            lo = hi
        while lo < hi:
            mid = (lo + hi) // 2
            if min_t[mid] < t:
                lo = mid + 1
            else:
                hi = mid
        ext_v = lo_credit + lo
        have_ext = lo > 0 and ext_v > best_src
        have_src = best_src > _I64_MIN
        if not (have_ext or have_src):
            continue
        if have_ext:
            val = ext_v + 1
            src = src_of[lo - 1]
        elif have_src:
            val = best_src + 1
            src = best_src
        else:
            continue
        if val > cap:
            val = cap
        if val <= lo_credit:
            continue
        iv = val - lo_credit - 1
        if val > record:
            for v in range(record + 1, val + 1):
                k = v - lo_credit - 1
                first_x[k] = x
                fill_credit[k] = val
                fill_src[k] = src
            record = val
        # entries below floor_idx are dominated forever; keep monotone above it
        lo2, hi2 = floor_idx, iv + 1
        if lo2 > hi2:
            lo2 = hi2
        while lo2 < hi2:
            mid = (lo2 + hi2) // 2
            if min_t[mid] <= t:
                lo2 = mid + 1
            else:
                hi2 = mid
        for k in range(lo2, iv + 1):
            min_t[k] = t
            src_of[k] = src
            work += 1
    cursor[0] = record
    cursor[1] = sp
    cursor[2] = best_src
    cursor[3] = work


class CreditSweep:
    """Stateful wrapper running credit_sweep_chunk over successive chunks."""

    def __init__(self, src_x, src_lab, lo_credit, cap, t_cap):
        self.src_x = np.ascontiguousarray(src_x, dtype=np.float64)
        self.src_lab = np.ascontiguousarray(src_lab, dtype=np.int64)
        self.lo_credit = int(lo_credit)
        self.cap = int(cap)
        self.t_cap = float(t_cap)
        nlev = self.cap - self.lo_credit
        self.min_t = np.full(nlev, np.inf)
        self.src_of = np.full(nlev, _I64_MAX, dtype=np.int64)
        self.first_x = np.full(nlev, np.inf)
        self.fill_credit = np.zeros(nlev, dtype=np.int64)
        self.fill_src = np.zeros(nlev, dtype=np.int64)
        self.cursor = np.array([self.lo_credit, 0, _I64_MIN, 0], dtype=np.int64)

    def feed(self, xs, ts):
        credit_sweep_chunk(
            xs, ts, self.t_cap, self.src_x, self.src_lab, self.lo_credit,
            self.cap, self.min_t, self.src_of, self.first_x,
            self.fill_credit, self.fill_src, self.cursor,
        )

    @property
    def done(self) -> bool:
        return int(self.cursor[0]) >= self.cap

    @property
    def record(self) -> int:
        return int(self.cursor[0])


def credit_sweep(xs, ts, src_x, src_lab, lo_credit, cap):
    """One-shot convenience wrapper; see credit_sweep_chunk."""
    sw = CreditSweep(src_x, src_lab, lo_credit, cap, t_cap=np.inf)
    sw.feed(xs, ts)
    return sw.first_x, sw.fill_credit, sw.fill_src, sw.record, int(sw.cursor[3])


@njit(cache=True, nogil=True)
def gillespie_sweep(sticks, t_start, t_end, wait_u, sel_u, land_u, log_site, log_mass, want_log):
    """Exact event-driven stick dynamics on a finite window, left edge frozen.

    sticks[i] is the gap left of the (i+1)-th movable particle; that particle
    jumps at rate sticks[i] and lands uniformly inside its gap, pushing the
    excess mass onto the next stick (mass past the last stick exits the
    window; nothing enters from the frozen left edge).  Consumes pre-drawn
    uniform draws; returns (events_done, t_reached).  t_reached < t_end
    signals the caller to extend the draw arrays and resume.
    """
    m = sticks.size
    ndraws = wait_u.size
    t = t_start
    ev = 0
    while ev < ndraws:
        total = 0.0
        for i in range(m):
            total += sticks[i]
        if total <= 0.0:
            t = t_end
            break
        dt = -np.log(wait_u[ev]) / total
        if t + dt > t_end:
            t = t_end
            ev += 1
            break
        t += dt
        target = sel_u[ev] * total
        acc = 0.0
        site = m - 1
        for i in range(m):
            acc += sticks[i]
            if acc >= target:
                site = i
                break
        u = land_u[ev] * sticks[site]
        moved = sticks[site] - u
        sticks[site] = u
        if site + 1 < m:
            sticks[site + 1] += moved
        if want_log:
            log_site[ev] = site
            log_mass[ev] = moved
        ev += 1
    return ev, t
