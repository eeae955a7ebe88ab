"""Seeded homogeneous Poisson point process on rectangles of the plane.

A PointField is one realization on a space-time rectangle; it is the shared
randomness coupling every increasing-sequence evaluation within a replica.
Points are stored sorted by the space coordinate x.
"""

from dataclasses import dataclass, field

import numpy as np

from hamlab.streams import stream


class CoverageError(Exception):
    """A query box escapes the region a field was sampled on."""


@dataclass(frozen=True)
class Region:
    """Rectangle (x_min, x_max] x (t_min, t_max], t >= 0."""

    x_min: float
    x_max: float
    t_min: float
    t_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max):
            raise ValueError(f"degenerate x-extent [{self.x_min}, {self.x_max}]")
        if not (0.0 <= self.t_min < self.t_max):
            raise ValueError(f"invalid t-extent [{self.t_min}, {self.t_max}]")

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.t_max - self.t_min)

    def contains(self, other: "Region") -> bool:
        return (
            self.x_min <= other.x_min
            and other.x_max <= self.x_max
            and self.t_min <= other.t_min
            and other.t_max <= self.t_max
        )


@dataclass(frozen=True)
class PointField:
    """One Poisson realization; immutable and safe to share across threads."""

    seed: int
    region: Region
    rate: float
    xs: np.ndarray = field(repr=False)  # sorted ascending
    ts: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return self.xs.size


_CHUNK = 1 << 20


def field_chunks(seed: int, region: Region, rate: float):
    """Yield the field of (seed, region, rate) in x-sorted chunks.

    The x-coordinates form a 1-D Poisson process of intensity rate * height
    (exponential gaps, cumulative sums), so the count on the region is
    Poisson(rate * area) and, given the count, positions are i.i.d. uniform;
    no sort is ever needed.  The chunk size is fixed, making the stream a
    pure function of (seed, region, rate); sample_field materializes exactly
    these chunks.
    """
    if not np.isfinite(rate) or rate <= 0.0:
        raise ValueError(f"rate must be positive, got {rate}")
    rng = stream(seed, "field")
    height = region.t_max - region.t_min
    mu = 1.0 / (rate * height)
    x = region.x_min
    while True:
        gaps = rng.exponential(scale=mu, size=_CHUNK)
        xs = x + np.cumsum(gaps)
        # t drawn in (t_min, t_max] to match the half-open box semantics.
        ts = region.t_max - rng.uniform(0.0, height, size=_CHUNK)
        if xs[-1] > region.x_max:
            m = int(np.searchsorted(xs, region.x_max, side="right"))
            yield xs[:m], ts[:m]
            return
        x = xs[-1]
        yield xs, ts


def sample_field(seed: int, region: Region, rate: float) -> PointField:
    """Sample a rate-`rate` homogeneous Poisson process on `region`.

    Deterministic in (seed, region, rate); points sorted by x.
    """
    xs_parts, ts_parts = [], []
    for xs, ts in field_chunks(seed, region, rate):
        xs_parts.append(xs)
        ts_parts.append(ts)
    xs = np.concatenate(xs_parts) if xs_parts else np.empty(0)
    ts = np.concatenate(ts_parts) if ts_parts else np.empty(0)
    return PointField(seed=int(seed), region=region, rate=float(rate), xs=xs, ts=ts)


def points_in(fld: PointField, box: Region):
    """Points of `fld` with x in (box.x_min, box.x_max], t in (box.t_min, box.t_max].

    Returns (xs, ts) sorted by x.  Raises CoverageError if the box escapes
    the sampled region: the caller must enlarge the field, silently
    truncating would bias every count downstream.
    """
    if not fld.region.contains(box):
        raise CoverageError(f"box {box} escapes field region {fld.region}")
    if box == fld.region:
        return fld.xs, fld.ts
    lo = np.searchsorted(fld.xs, box.x_min, side="right")
    hi = np.searchsorted(fld.xs, box.x_max, side="right")
    xs = fld.xs[lo:hi]
    ts = fld.ts[lo:hi]
    if box.t_min <= fld.region.t_min and box.t_max >= fld.region.t_max:
        return xs, ts
    keep = (ts > box.t_min) & (ts <= box.t_max)
    return xs[keep], ts[keep]


def dump_csv(fld: PointField, path) -> None:
    """Write the field as `x,t` rows at 15 significant digits (replay debugging)."""
    with open(path, "w") as fh:
        fh.write("x,t\n")
        for x, t in zip(fld.xs, fld.ts):
            fh.write(f"{x:.15g},{t:.15g}\n")


def load_csv(path, region: Region, rate: float = 1.0, seed: int = -1) -> PointField:
    """Read a field dumped by dump_csv.  Seed is informational only."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        xs = np.empty(0)
        ts = np.empty(0)
    else:
        order = np.argsort(data[:, 0], kind="stable")
        xs = np.ascontiguousarray(data[order, 0])
        ts = np.ascontiguousarray(data[order, 1])
    return PointField(seed=seed, region=region, rate=rate, xs=xs, ts=ts)
