"""Sampled fields on a truncated box and shifted dyadic cube arithmetic.

The computational domain is the box [-L, L)^n split into N uniform cells per
axis (N a power of two), and a field stores one value per cell, interpreted
as the cell average.  All cube averages <f>_Q = |Q|^-1 int_Q f are then exact
whenever the cube boundaries align with cell boundaries, and use fractional
overlap volumes otherwise; the field is extended by zero outside the box.

Cubes come from the 3^n shifted dyadic grids

    D^a = { 2^-j ([0,1)^n + m + (-1)^j a/3) : j in Z, m in Z^n },  a in {0,1,2}^n.

The alternating sign (-1)^j makes consecutive levels of each grid nest exactly
(the relative offset between a parent and its children is an integer number of
child sides), so two cubes of equal shift are always nested or disjoint, and
every axis-parallel cube is contained in a shifted dyadic cube of comparable
side (the one-third covering trick, see `shifted_cover`).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import PreconditionError, ScanTooLargeError

#: Hard cap on the number of cubes one scan may enumerate.
ENUMERATION_CAP = 10**7

_GAUSS_ORDER_BY_DIM = {1: 8, 2: 4, 3: 2}


@dataclass(frozen=True)
class Box:
    """Truncated domain [-halfwidth, halfwidth)^dim with a uniform cell grid."""

    dim: int
    halfwidth: float
    cells_per_axis: int

    def __post_init__(self):
        if not (1 <= self.dim <= 3):
            raise PreconditionError(f"dim must be 1..3, got {self.dim}")
        if self.halfwidth <= 0:
            raise PreconditionError("halfwidth must be positive")
        n = self.cells_per_axis
        if n < 1 or (n & (n - 1)) != 0:
            raise PreconditionError(f"cells_per_axis must be a power of two, got {n}")

    @property
    def cell_width(self) -> float:
        return 2.0 * self.halfwidth / self.cells_per_axis

    @property
    def cell_volume(self) -> float:
        return self.cell_width ** self.dim

    def axis_edges(self) -> np.ndarray:
        """Cell edges of one axis, length N + 1."""
        N = self.cells_per_axis
        return -self.halfwidth + self.cell_width * np.arange(N + 1)

    def axis_centers(self) -> np.ndarray:
        N = self.cells_per_axis
        return -self.halfwidth + self.cell_width * (np.arange(N) + 0.5)

    def center_points(self) -> np.ndarray:
        """All cell centers as an array of shape (N^dim, dim) in C order."""
        axes = [self.axis_centers()] * self.dim
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def scaled(self, factor: float) -> "Box":
        return Box(self.dim, self.halfwidth * factor, self.cells_per_axis)


class SampledField:
    """Cell-average samples of a function on a Box.

    `values` has shape (N,)*dim; entry [i1,...,in] is the average of the
    function over the cell with index (i1,...,in).  Fields compare by
    identity, which lets cube-integral caches key on the instance.
    """

    def __init__(self, box: Box, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        expected = (box.cells_per_axis,) * box.dim
        if values.shape != expected:
            raise PreconditionError(
                f"values shape {values.shape} does not match grid {expected}"
            )
        if not np.all(np.isfinite(values)):
            raise PreconditionError("field values must be finite")
        self.box = box
        self.values = values
        self._prefix: np.ndarray | None = None

    def integral(self) -> float:
        """int f over the box, h^n * sum of cell averages."""
        return float(self.values.sum()) * self.box.cell_volume

    def copy_with(self, values: np.ndarray) -> "SampledField":
        return SampledField(self.box, values)

    def prefix(self) -> np.ndarray:
        """Cumulative-sum array of shape (N+1,)*dim, zero-padded at the front.

        prefix[i1,...,in] = sum of values over cells [0:i1, ..., 0:in]; box
        integrals evaluate by multilinear interpolation of this array, which
        is exact because the underlying density is piecewise constant.
        """
        if self._prefix is None:
            P = self.values
            for axis in range(self.box.dim):
                P = np.cumsum(P, axis=axis)
            pad = [(1, 0)] * self.box.dim
            self._prefix = np.pad(P, pad)
        return self._prefix


def _prefix_eval(P: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Multilinear interpolation of the prefix array at grid-unit points."""
    n = pts.shape[1]
    N = P.shape[0] - 1
    base = np.floor(pts).astype(np.int64)
    np.clip(base, 0, N - 1, out=base)
    frac = pts - base
    out = np.zeros(pts.shape[0])
    for bits in itertools.product((0, 1), repeat=n):
        w = np.ones(pts.shape[0])
        idx = []
        for axis, b in enumerate(bits):
            w *= frac[:, axis] if b else 1.0 - frac[:, axis]
            idx.append(base[:, axis] + b)
        out += w * P[tuple(idx)]
    return out


def field_box_integrals(f: SampledField, lows: np.ndarray, highs: np.ndarray) -> np.ndarray:
    """int_B f for a batch of axis-parallel boxes B, with f = 0 off the grid.

    `lows`/`highs` have shape (B, dim) in physical coordinates.  Boxes may
    extend past the field's box; the parts outside contribute zero.
    """
    box = f.box
    n = box.dim
    lows = np.atleast_2d(np.asarray(lows, dtype=float))
    highs = np.atleast_2d(np.asarray(highs, dtype=float))
    h = box.cell_width
    lo_u = np.clip((lows + box.halfwidth) / h, 0.0, box.cells_per_axis)
    hi_u = np.clip((highs + box.halfwidth) / h, 0.0, box.cells_per_axis)
    P = f.prefix()
    total = np.zeros(lows.shape[0])
    for picks in itertools.product((0, 1), repeat=n):
        # pick 1 -> upper coordinate on that axis; sign = (-1)^(#lower picks)
        pts = np.empty_like(lo_u)
        for axis, p in enumerate(picks):
            pts[:, axis] = hi_u[:, axis] if p else lo_u[:, axis]
        sign = -1.0 if (n - sum(picks)) % 2 else 1.0
        total += sign * _prefix_eval(P, pts)
    return total * box.cell_volume


def _shift_sign(level: int) -> int:
    return -1 if level % 2 else 1


@dataclass(frozen=True)
class DyadicCube:
    """One cube of a shifted dyadic grid: 2^-level ([0,1)^n + index + (-1)^level shift/3)."""

    shift: tuple
    level: int
    index: tuple

    def __post_init__(self):
        if len(self.shift) != len(self.index):
            raise PreconditionError("shift and index must have equal length")
        if any(a not in (0, 1, 2) for a in self.shift):
            raise PreconditionError("shift components must lie in {0,1,2}")

    @property
    def dim(self) -> int:
        return len(self.index)

    @property
    def side(self) -> float:
        return 2.0 ** (-self.level)

    @property
    def measure(self) -> float:
        return 2.0 ** (-self.level * self.dim)

    def low(self) -> np.ndarray:
        s = _shift_sign(self.level)
        num = 3 * np.asarray(self.index, dtype=float) + s * np.asarray(self.shift, dtype=float)
        return num * (self.side / 3.0)

    def high(self) -> np.ndarray:
        return self.low() + self.side

    def contains_point(self, x: Sequence[float]) -> bool:
        lo, hi = self.low(), self.high()
        x = np.asarray(x, dtype=float)
        return bool(np.all(lo <= x) and np.all(x < hi))

    def contains_cube(self, other: "DyadicCube", tol: float = 0.0) -> bool:
        lo, hi = self.low(), self.high()
        olo, ohi = other.low(), other.high()
        return bool(np.all(olo >= lo - tol) and np.all(ohi <= hi + tol))


def cube_from_point(shift: tuple, level: int, x: Sequence[float]) -> DyadicCube:
    """The unique cube of D^shift at `level` containing the point x."""
    s = _shift_sign(level)
    scale = 2.0 ** level
    m = tuple(
        int(math.floor(float(xi) * scale - s * a / 3.0))
        for xi, a in zip(x, shift)
    )
    return DyadicCube(shift=tuple(shift), level=level, index=m)


@dataclass(frozen=True)
class CubeScan:
    """Finite stand-in for "all cubes": the cubes of the given shifts whose
    level lies in [level_min, level_max] and which meet restrict_to."""

    shifts: tuple
    level_min: int
    level_max: int
    restrict_to: Box

    def __post_init__(self):
        if self.level_min > self.level_max:
            raise PreconditionError("level_min must not exceed level_max")
        for a in self.shifts:
            if len(a) != self.restrict_to.dim or any(c not in (0, 1, 2) for c in a):
                raise PreconditionError(f"invalid shift {a}")

    @staticmethod
    def all_shifts(dim: int) -> tuple:
        return tuple(itertools.product((0, 1, 2), repeat=dim))

    def with_shift(self, shift: tuple) -> "CubeScan":
        return CubeScan((tuple(shift),), self.level_min, self.level_max, self.restrict_to)

    def extended(self, levels_out: int, box_factor: float) -> "CubeScan":
        """Widened scan used by the divergence test: more levels on both ends
        and a larger restriction box."""
        return CubeScan(
            self.shifts,
            self.level_min - levels_out,
            self.level_max + levels_out,
            self.restrict_to.scaled(box_factor),
        )

    def _axis_index_range(self, shift_c: int, level: int) -> range:
        """Exact integer range of cube indices with positive-measure overlap."""
        s = _shift_sign(level)
        L = Fraction(self.restrict_to.halfwidth)
        scale = Fraction(2) ** level
        off = Fraction(s * shift_c, 3)
        hi_bound = L * scale - off        # m <  hi_bound
        lo_bound = -L * scale - off - 1   # m >  lo_bound
        m_min = math.floor(lo_bound) + 1
        m_max = math.ceil(hi_bound) - 1
        return range(m_min, m_max + 1)

    def count(self) -> int:
        total = 0
        for a in self.shifts:
            for level in range(self.level_min, self.level_max + 1):
                per_axis = 1
                for c in a:
                    per_axis *= len(self._axis_index_range(c, level))
                total += per_axis
        return total

    def level_indices(self, shift: tuple, level: int) -> list:
        """Per-axis index ranges at one (shift, level)."""
        return [self._axis_index_range(c, level) for c in shift]


def enumerate_cubes(scan: CubeScan) -> list:
    """All cubes of the scan in (shift, level, index) lexicographic order."""
    total = scan.count()
    if total > ENUMERATION_CAP:
        raise ScanTooLargeError(
            f"scan too large: {total} cubes exceeds cap {ENUMERATION_CAP}"
        )
    cubes = []
    for a in sorted(scan.shifts):
        for level in range(scan.level_min, scan.level_max + 1):
            ranges = scan.level_indices(a, level)
            for m in itertools.product(*ranges):
                cubes.append(DyadicCube(shift=a, level=level, index=m))
    return cubes


def cube_average(f: SampledField, Q: DyadicCube, integral: bool = False) -> float:
    """<f>_Q = |Q|^-1 int_Q f, with f = 0 outside the field's box.

    With integral=True returns int_Q f instead.  Exact for aligned cubes;
    partial cells enter with their fractional overlap volume.  Division by
    |Q| = 2^(-level*dim) is an exact power of two, so nested cube averages
    of a nonnegative field satisfy <f>_child <= 2^n <f>_parent exactly in
    floating point.
    """
    lo, hi = Q.low(), Q.high()
    blo = -f.box.halfwidth
    bhi = f.box.halfwidth
    if np.any(hi <= blo) or np.any(lo >= bhi):
        raise PreconditionError("empty intersection of cube and box")
    val = float(field_box_integrals(f, lo[None, :], hi[None, :])[0])
    if integral:
        return val
    return val / Q.measure


def shifted_cover(
    low: Sequence[float],
    high: Sequence[float],
    search_factor: float = 16.0,
) -> tuple:
    """Smallest shifted dyadic cube containing the cube [low, high).

    Searches levels with side in [l(Q), search_factor*l(Q)] over all 3^n
    shifts, smallest side first, shifts in lexicographic order; within one
    (shift, level) the candidate is the unique cube containing `low`.
    Returns (cube, ratio) with ratio = side(cover)/side(input).
    """
    low = np.asarray(low, dtype=float)
    high = np.asarray(high, dtype=float)
    if low.shape != high.shape or low.ndim != 1:
        raise PreconditionError("low/high must be equal-length vectors")
    sides = high - low
    if np.any(sides <= 0):
        raise PreconditionError("low must be strictly below high componentwise")
    ell = float(sides.mean())
    if np.any(np.abs(sides - ell) > 1e-9 * ell):
        raise PreconditionError("input cube must have equal side lengths")
    n = low.size

    j = int(math.floor(-math.log2(ell) + 1e-12))
    if 2.0 ** (-j) < ell * (1.0 - 1e-12):
        j -= 1
    j_stop_side = search_factor * ell * (1.0 + 1e-12)
    while 2.0 ** (-j) <= j_stop_side:
        side = 2.0 ** (-j)
        tol = 1e-12 * side
        for a in itertools.product((0, 1, 2), repeat=n):
            cand = cube_from_point(a, j, low)
            chi = cand.high()
            if np.all(high <= chi + tol):
                return cand, side / ell
        j -= 1
    raise PreconditionError(
        f"no shifted dyadic cover found for side {ell} within factor "
        f"{search_factor}; levels searched down to {j + 1}"
    )


def cell_center_slices(box: Box, low: Sequence[float], high: Sequence[float]) -> tuple:
    """Per-axis slices of the cells whose centers lie in [low, high).

    Cell membership by center is the grid realization of chi_Q used for
    maximal functions and witness masks: it keeps cubes of one level
    disjoint on the grid exactly when the cubes themselves are disjoint.
    """
    h = box.cell_width
    L = box.halfwidth
    out = []
    for lo_i, hi_i in zip(low, high):
        a = (lo_i + L) / h - 0.5
        b = (hi_i + L) / h - 0.5
        i_lo = max(0, math.ceil(a - 1e-12))
        i_hi = min(box.cells_per_axis, math.ceil(b - 1e-12))
        out.append(slice(i_lo, max(i_lo, i_hi)))
    return tuple(out)


# ---------------------------------------------------------------------------
# Field constructors
# ---------------------------------------------------------------------------

def constant_field(box: Box, value: float) -> SampledField:
    return SampledField(box, np.full((box.cells_per_axis,) * box.dim, float(value)))


def field_from_function(
    box: Box,
    fn: Callable[[np.ndarray], np.ndarray],
    order: int | None = None,
) -> SampledField:
    """Cell averages of fn by a fixed tensor Gauss rule per cell.

    fn maps an array of points with shape (M, dim) to (M,) values.
    """
    n = box.dim
    N = box.cells_per_axis
    q = order if order is not None else _GAUSS_ORDER_BY_DIM[n]
    nodes, wts = np.polynomial.legendre.leggauss(q)
    half = box.cell_width / 2.0
    centers = box.axis_centers()
    # per-axis evaluation points, flattened to (N*q,) in cell-major order
    axis_pts = (centers[:, None] + half * nodes[None, :]).ravel()
    w = wts / 2.0  # averages, not integrals

    # evaluate in blocks along the leading axis to bound memory
    block = max(1, int(2**22 // (q * (N * q) ** (n - 1))))
    out_blocks = []
    tail_axes = [axis_pts] * (n - 1)
    for start in range(0, N, block):
        lead = axis_pts[start * q : (start + min(block, N - start)) * q]
        grids = np.meshgrid(lead, *tail_axes, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        shape = (lead.size // q, q) + (N, q) * (n - 1)
        vals = np.asarray(fn(pts), dtype=float).reshape(shape)
        for i in range(n):
            vals = np.tensordot(vals, w, axes=([i + 1], [0]))
        out_blocks.append(vals)
    return SampledField(box, np.concatenate(out_blocks, axis=0))


def gaussian_field(
    box: Box,
    variance: float,
    center: Sequence[float] | None = None,
    mass: float = 1.0,
) -> SampledField:
    """Exact cell averages of mass * (2 pi v)^(-n/2) exp(-|x-c|^2 / (2 v))."""
    from scipy.special import erf

    n = box.dim
    if center is None:
        center = np.zeros(n)
    center = np.asarray(center, dtype=float)
    edges = box.axis_edges()
    h = box.cell_width
    axis_avgs = []
    for c in center:
        z = (edges - c) / math.sqrt(2.0 * variance)
        cdf = 0.5 * erf(z)
        axis_avgs.append(np.diff(cdf) / h)
    vals = axis_avgs[0]
    for nxt in axis_avgs[1:]:
        vals = np.multiply.outer(vals, nxt)
    return SampledField(box, mass * vals)


def indicator_field(box: Box, low: Sequence[float], high: Sequence[float]) -> SampledField:
    """Exact cell averages of the indicator of the box [low, high)."""
    low = np.asarray(low, dtype=float)
    high = np.asarray(high, dtype=float)
    edges = box.axis_edges()
    h = box.cell_width
    axis_fracs = []
    for lo_i, hi_i in zip(low, high):
        overlap = np.minimum(edges[1:], hi_i) - np.maximum(edges[:-1], lo_i)
        axis_fracs.append(np.clip(overlap, 0.0, None) / h)
    vals = axis_fracs[0]
    for nxt in axis_fracs[1:]:
        vals = np.multiply.outer(vals, nxt)
    return SampledField(box, vals)


def bump_field(
    box: Box,
    center: Sequence[float] | None = None,
    width: float = 1.0,
    height: float = 1.0,
) -> SampledField:
    """Smooth compactly supported bump height * exp(1 - 1/(1 - r^2)), r = |x-c|/width."""
    n = box.dim
    if center is None:
        center = np.zeros(n)
    c = np.asarray(center, dtype=float)

    def fn(pts: np.ndarray) -> np.ndarray:
        r2 = np.sum((pts - c) ** 2, axis=-1) / width**2
        out = np.zeros(pts.shape[0])
        inside = r2 < 1.0
        out[inside] = height * np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
        return out

    return SampledField(box, field_from_function(box, fn).values)
