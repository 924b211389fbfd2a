"""Disjoint translates of a finite integer set with localized centers.

Given E with card(E) <= 2^N, centers b_i in [i w, (i+1) w), w = 4^(N+1),
are placed inductively (b_0 = 0, then b_1, b_-1, b_2, b_-2, ...) at the
smallest slot position whose translate misses every translate already
placed. Each placed translate forbids at most 2 card(E) positions per
element of E, so at most 2^(2N+1) < w positions are ever excluded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleSlot, WindowTooWide

# Coverage is checked integer by integer below this many points.
EXHAUSTIVE_LIMIT = 1 << 16


@dataclass(frozen=True)
class TilingInstance:
    E: tuple
    N: int
    I: int

    def __post_init__(self):
        E = tuple(sorted(set(int(e) for e in self.E)))
        if not E:
            raise ValueError("E must be nonempty")
        if self.N < 0 or self.I < 0:
            raise ValueError("N and I must be nonnegative")
        if len(E) > 2**self.N:
            raise ValueError(f"card(E) = {len(E)} exceeds 2^N = {2**self.N}")
        object.__setattr__(self, "E", E)

    @property
    def width(self) -> int:
        return 4 ** (self.N + 1)


@dataclass
class TilingResult:
    instance: TilingInstance
    centers: dict
    forbidden: dict = field(default_factory=dict)
    verified: dict = field(default_factory=dict)

    @property
    def max_forbidden(self) -> int:
        return max(self.forbidden.values(), default=0)

    def ordered(self) -> np.ndarray:
        return np.array([self.centers[i] for i in sorted(self.centers)], dtype=np.int64)

    def to_json(self) -> dict:
        inst = self.instance
        return {
            "E": list(inst.E), "N": inst.N, "I": inst.I,
            "centers": {str(i): int(self.centers[i]) for i in sorted(self.centers)},
            "maxForbidden": self.max_forbidden,
            "verified": dict(self.verified),
        }


def _forbidden_mask(occupied: np.ndarray, E: np.ndarray, lo: int, hi: int) -> np.ndarray:
    """Boolean mask over c in [lo, hi): True where (c + E) meets the occupied set."""
    mask = np.zeros(hi - lo, dtype=bool)
    left = np.searchsorted(occupied, lo + E, side="left")
    right = np.searchsorted(occupied, hi + E, side="left")
    counts = right - left
    total = int(counts.sum())
    if total:
        # Gather occupied[left[v]:right[v]] - E[v] for all v in one pass.
        starts = np.repeat(left - np.cumsum(counts) + counts, counts)
        idx = starts + np.arange(total)
        mask[occupied[idx] - np.repeat(E, counts) - lo] = True
    return mask


def _smallest_allowed(mask: np.ndarray, lo: int, hi: int) -> int:
    free = int(np.argmin(mask))
    if mask[free]:
        raise InfeasibleSlot(f"slot [{lo}, {hi}) is entirely forbidden")
    return lo + free


def build_tiling(instance: TilingInstance) -> TilingResult:
    E = np.asarray(instance.E, dtype=np.int64)
    w = instance.width
    centers = {0: 0}
    forbidden = {}
    occupied = np.sort(E.copy())
    for j in range(1, instance.I + 1):
        for i in (j, -j):
            lo, hi = i * w, (i + 1) * w
            bad = _forbidden_mask(occupied, E, lo, hi)
            forbidden[i] = int(np.count_nonzero(bad))
            b = _smallest_allowed(bad, lo, hi)
            centers[i] = b
            new = b + E
            occupied = np.insert(occupied, np.searchsorted(occupied, new), new)
    return TilingResult(instance, centers, forbidden)


def verify_slots(result: TilingResult) -> bool:
    w = result.instance.width
    return all(b // w == i for i, b in result.centers.items())


def verify_gaps(result: TilingResult) -> bool:
    """b_(i+2) - b_i > 4^(N+1) for all consecutive constructed indices."""
    b = result.ordered()
    return bool(np.all(b[2:] - b[:-2] > result.instance.width))


def verify_disjoint(result: TilingResult, E=None, window: tuple[int, int] | None = None) -> bool:
    """No integer (in the window, if given) lies in two translates b_i + E."""
    E = np.asarray(result.instance.E if E is None else sorted(set(E)), dtype=np.int64)
    pts = (result.ordered()[:, None] + E[None, :]).ravel()
    if window is not None:
        pts = pts[(pts >= window[0]) & (pts <= window[1])]
    return bool(np.unique(pts).size == pts.size)


def cover_window(result: TilingResult) -> tuple[int, int]:
    """Largest window free of edge effects: [b_-I + w, b_I - w]."""
    w = result.instance.width
    I = result.instance.I
    return result.centers[-I] + w, result.centers[I] - w


def verify_cover(result: TilingResult, N: int | None = None, window: tuple[int, int] | None = None,
                 exhaustive: bool | None = None) -> bool:
    """Every integer z in the window is n + b_i for some |n| <= 4^(N+1).

    Equivalently the window lies in the union of [b_i - w, b_i + w]. Small
    windows are scanned integer by integer; larger ones use the interval
    union, which is the same statement.
    """
    N = result.instance.N if N is None else N
    w = 4 ** (N + 1)
    safe = cover_window(result)
    window = safe if window is None else window
    if window[0] < safe[0] or window[1] > safe[1]:
        raise WindowTooWide(f"window {window} exceeds {safe}")
    if window[1] < window[0]:
        return True
    b = np.sort(result.ordered())
    if exhaustive is None:
        exhaustive = window[1] - window[0] + 1 <= EXHAUSTIVE_LIMIT
    if exhaustive:
        z = np.arange(window[0], window[1] + 1, dtype=np.int64)
        idx = np.searchsorted(b, z)
        below = np.abs(z - b[np.clip(idx - 1, 0, b.size - 1)])
        above = np.abs(b[np.clip(idx, 0, b.size - 1)] - z)
        return bool(np.all(np.minimum(below, above) <= w))
    # Intervals [b - w, b + w] of consecutive sorted centers chain together
    # iff their gaps are at most 2w + 1; check the chain spanning the window.
    first = int(np.searchsorted(b, window[0] - w, side="left"))
    last = int(np.searchsorted(b, window[1] + w, side="right")) - 1
    if last < first or b[first] - w > window[0] or b[last] + w < window[1]:
        return False
    return bool(np.all(np.diff(b[first:last + 1]) <= 2 * w + 1))


def tile(E, N: int, I: int, exhaustive: bool | None = None) -> TilingResult:
    """Build and verify; the verdicts are stored on the result."""
    result = build_tiling(TilingInstance(tuple(E), N, I))
    result.verified = {
        "slots": verify_slots(result),
        "gaps": verify_gaps(result),
        "disjoint": verify_disjoint(result),
        "cover": verify_cover(result, exhaustive=exhaustive),
        "counting": result.max_forbidden <= 2 ** (2 * N + 1),
    }
    return result


def random_instance(rng: np.random.Generator, max_N: int = 8, I: int = 32, spread: int = 4) -> TilingInstance:
    """card(E) = 2^N, elements uniform in [-spread w, spread w]."""
    N = int(rng.integers(0, max_N + 1))
    w = 4 ** (N + 1)
    E = rng.choice(2 * spread * w + 1, size=2**N, replace=False) - spread * w
    return TilingInstance(tuple(E.tolist()), N, I)
