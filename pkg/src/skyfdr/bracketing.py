"""Decompose radiance maps into LDR exposure brackets and analyse coverage."""

from dataclasses import dataclass, field

import numpy as np

from .image import RadianceImage
from .tonemap import ToneMapper

EPS_LO = 1.0 / 255.0
EPS_HI = 254.0 / 255.0


@dataclass(frozen=True)
class ExposureSet:
    """Strictly decreasing exposure multipliers, the first at most 1."""

    times: tuple

    def __post_init__(self):
        t = tuple(float(x) for x in self.times)
        object.__setattr__(self, "times", t)
        if not t:
            raise ValueError("exposure set is empty")
        if any(x <= 0 for x in t):
            raise ValueError("exposure times must be > 0")
        if any(b >= a for a, b in zip(t, t[1:])):
            raise ValueError("exposure times must be strictly decreasing")
        if t[0] > 1.0:
            raise ValueError("the first exposure time must be <= 2**0")

    @classmethod
    def from_evs(cls, evs):
        """Build from exposure values ``k`` meaning ``dt = 2**k``."""
        if isinstance(evs, str):
            evs = [float(tok) for tok in evs.split(",") if tok.strip()]
        return cls(tuple(2.0 ** float(k) for k in evs))

    @property
    def evs(self):
        return tuple(float(np.log2(t)) for t in self.times)

    def __len__(self):
        return len(self.times)

    def __iter__(self):
        return iter(self.times)

    def as_array(self):
        return np.array(self.times)


@dataclass
class ExposureBracket:
    """N LDR exposures of shape (N, H, W, C) with their exposure times."""

    exposures: np.ndarray
    times: ExposureSet
    tonemapper: ToneMapper = field(default_factory=ToneMapper)
    eps_lo: float = EPS_LO
    eps_hi: float = EPS_HI
    format: str = "none"

    def __post_init__(self):
        self.exposures = np.asarray(self.exposures, dtype=np.float64)
        if not isinstance(self.times, ExposureSet):
            self.times = ExposureSet(tuple(self.times))
        if self.exposures.ndim != 4:
            raise ValueError("exposures must have shape (N, H, W, C)")
        if self.exposures.shape[0] != len(self.times):
            raise ValueError("one exposure time per exposure is required")
        if not 0.0 < self.eps_lo < self.eps_hi <= 1.0:
            raise ValueError("saturation bounds need 0 < eps_lo < eps_hi <= 1")
        if np.any(self.exposures < 0) or np.any(self.exposures > 1):
            raise ValueError("LDR exposures must lie in [0, 1]")

    def __len__(self):
        return self.exposures.shape[0]

    @property
    def dt(self):
        return self.times.as_array()

    def replace(self, **changes):
        kw = dict(exposures=self.exposures, times=self.times, tonemapper=self.tonemapper,
                  eps_lo=self.eps_lo, eps_hi=self.eps_hi, format=self.format)
        kw.update(changes)
        return ExposureBracket(**kw)


def decompose(img, times, tm=None, eps_lo=EPS_LO, eps_hi=EPS_HI):
    """Split radiance into LDR exposures ``T(dt_n * I)``.

    Values below ``eps_lo`` or above ``eps_hi`` are zeroed (under- and
    over-saturation).
    """
    tm = tm or ToneMapper()
    if not isinstance(times, ExposureSet):
        times = ExposureSet(tuple(times))
    fmt = img.format if isinstance(img, RadianceImage) else "none"
    data = np.asarray(img.data if isinstance(img, RadianceImage) else img, dtype=np.float64)
    if np.any(data < 0) or not np.all(np.isfinite(data)):
        raise ValueError("radiance must be finite and non-negative")
    if not 0.0 < eps_lo < eps_hi <= 1.0:
        raise ValueError("saturation bounds need 0 < eps_lo < eps_hi <= 1")
    out = np.empty((len(times),) + data.shape)
    for n, dt in enumerate(times):
        y = tm.apply(dt * data)
        out[n] = np.where((y >= eps_lo) & (y <= eps_hi), y, 0.0)
    return ExposureBracket(out, times, tm, eps_lo, eps_hi, fmt)


def normalize_exposure(bracket, n):
    """Exposure ``n`` mapped back to radiance, ``T^-1(I_n) / dt_n``; zeros stay 0."""
    if not 0 <= n < len(bracket):
        raise IndexError(f"exposure index {n} out of range for {len(bracket)} exposures")
    ldr = bracket.exposures[n]
    tm = bracket.tonemapper
    lo, hi = tm.output_range()
    nz = ldr != 0
    out = np.zeros_like(ldr)
    out[nz] = tm.invert(np.clip(ldr[nz], lo, hi)) / bracket.times.times[n]
    return RadianceImage(out, bracket.format) if ldr.shape[-1] == 3 else out


@dataclass(frozen=True)
class CandlestickRow:
    dt: float
    limit_lo: float
    body_lo: float
    marker: float
    body_hi: float
    limit_hi: float


def _to_hdr(tm, y, dt):
    lo, hi = tm.output_range()
    y = float(np.clip(y, lo, hi))
    if tm.kind == "inverted" and y <= 0.0:
        return np.inf
    return float(tm.invert(y)) / dt


def candlestick(times, tm=None, eps=EPS_LO):
    """Radiance interval covered by each exposure.

    Limits come from LDR levels 0 and 1, the body from ``eps`` and ``1 - eps``,
    the marker from LDR 0.5.  Levels outside the operator's range are clamped
    to it.
    """
    tm = tm or ToneMapper()
    if not isinstance(times, ExposureSet):
        times = ExposureSet(tuple(times))
    rows = []
    for dt in times:
        vals = [_to_hdr(tm, y, dt) for y in (0.0, eps, 0.5, 1.0 - eps, 1.0)]
        if not tm.increasing:
            vals = vals[::-1]
        rows.append(CandlestickRow(dt, *vals))
    return rows


def _merge_intervals(intervals):
    merged = []
    for a, b in sorted(intervals):
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return [tuple(iv) for iv in merged]


def validate_coverage(times, tm=None, eps=EPS_LO, range_lo=None, range_hi=None):
    """Gaps and overlaps of candlestick bodies inside ``[range_lo, range_hi]``.

    Returns ``{"gaps": [(lo, hi), ...], "overlaps": [(lo, hi), ...]}``: gaps
    are covered by no body, overlaps by at least two.
    """
    rows = candlestick(times, tm, eps)
    if range_lo is None:
        range_lo = min(r.body_lo for r in rows)
    if range_hi is None:
        range_hi = max(r.body_hi for r in rows)
    if not range_lo < range_hi:
        raise ValueError("range_lo must be < range_hi")
    events = []
    for r in rows:
        a, b = max(r.body_lo, range_lo), min(r.body_hi, range_hi)
        if a < b:
            events.append((a, 1))
            events.append((b, -1))
    # at equal positions close before opening, so touching bodies neither
    # overlap nor leave a gap
    events.sort(key=lambda e: (e[0], e[1]))
    gaps, overlaps = [], []
    depth = 0
    pos = range_lo
    for x, step in events:
        if x > pos:
            if depth == 0:
                gaps.append((pos, x))
            elif depth >= 2:
                overlaps.append((pos, x))
        depth += step
        pos = max(pos, x)
    if pos < range_hi and depth == 0:
        gaps.append((pos, range_hi))
    return {"gaps": _merge_intervals(gaps), "overlaps": _merge_intervals(overlaps)}


def decay_schedule(targets, epochs_to_target, epoch):
    """Exposure times at ``epoch`` under geometric decay toward ``targets``.

    A global value ``d(e) = dt_0 * (dt_N / dt_0) ** (min(e, i) / i)`` falls
    from the first to the last target over ``i`` epochs; every head is
    ``max(target_n, d(e))``.  Returns a tuple of floats: heads coincide
    mid-schedule, so the result is not an :class:`ExposureSet`.
    """
    if not isinstance(targets, ExposureSet):
        if not len(targets):
            raise ValueError("targets are empty")
        targets = ExposureSet(tuple(targets))
    if epochs_to_target < 1:
        raise ValueError("epochs_to_target must be >= 1")
    if epoch < 0:
        raise ValueError("epoch must be >= 0")
    t = targets.times
    frac = min(epoch, epochs_to_target) / epochs_to_target
    if frac >= 1.0:
        return t
    delta = t[0] * (t[-1] / t[0]) ** frac
    return (t[0],) + tuple(max(x, delta) for x in t[1:])
