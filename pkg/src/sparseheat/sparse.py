"""Dyadic maximal functions, stopping-time sparse families, and fractional
sparse operators, plus the singular-kernel fractional integral they dominate.

The sparse construction follows the usual stopping-time recipe on one shifted
grid D^a.  Fix lambda > 2^n.  For each generation k, the stopping cubes are
the maximal scan cubes with <f>_Q > lambda^k; maximality against the scan's
own coarser levels forces the sandwich

    lambda^k < <f>_Q <= 2^n lambda^k

exactly (the parent is in the scan and was rejected, and averages of a
nonnegative field grow by at most 2^n from child to parent, a comparison
that holds exactly in floating point because cube measures are powers of
two).  Witness sets are realized as grid-cell masks

    E_{Q,k} = { cells in Q : lambda^k < M_D f < = lambda^(k+1) },

which are pairwise disjoint across generations by the value binning and
within a generation by maximality.

Generations are truncated to k with lambda^k >= max top-level average (the
finite stand-in for the decay hypothesis <f>_Q -> 0) and lambda^k < max f.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from . import grid as g
from .errors import DecayError, PreconditionError, SparseHeatError
from .quadrature import singular_box_integral, smooth_box_integral

_KERNEL_CACHE: dict = {}


# ---------------------------------------------------------------------------
# Per-level cube machinery
# ---------------------------------------------------------------------------

def _level_averages(f: g.SampledField, scan: g.CubeScan, shift: tuple, level: int):
    """(averages array over the level's index box, per-axis m_min list)."""
    ranges = scan.level_indices(shift, level)
    side = 2.0 ** (-level)
    s = -1 if level % 2 else 1
    axis_lows = [
        (3.0 * np.arange(r.start, r.stop) + s * a) * (side / 3.0)
        for r, a in zip(ranges, shift)
    ]
    grids = np.meshgrid(*axis_lows, indexing="ij")
    lows = np.stack([gr.ravel() for gr in grids], axis=-1)
    highs = lows + side
    ints = g.field_box_integrals(f, lows, highs)
    shape = tuple(len(r) for r in ranges)
    avgs = (ints / side ** f.box.dim).reshape(shape)
    return avgs, [r.start for r in ranges]


def _cell_cube_indices(box: g.Box, shift: tuple, level: int, m_mins) -> list:
    """Per-axis array mapping each cell (by center) to its cube index offset."""
    s = -1 if level % 2 else 1
    scale = 2.0 ** level
    out = []
    for a, m_min in zip(shift, m_mins):
        idx = np.floor(box.axis_centers() * scale - s * a / 3.0).astype(np.int64)
        out.append(idx - m_min)
    return out


def _gather(avgs: np.ndarray, idxs: list) -> np.ndarray:
    """avgs[np.ix_(*idxs)] with out-of-range guarded by clipping."""
    clipped = [np.clip(ix, 0, n - 1) for ix, n in zip(idxs, avgs.shape)]
    return avgs[np.ix_(*clipped)]


def dyadic_maximal(f: g.SampledField, shift: tuple, scan: g.CubeScan) -> g.SampledField:
    """M_D f = sup over scan cubes of <|f|>_Q chi_Q, realized on cell centers."""
    return fractional_maximal(f, 0.0, scan.with_shift(shift))


def fractional_maximal(f: g.SampledField, alpha: float, scan: g.CubeScan) -> g.SampledField:
    """sup_Q |Q|^(alpha/n) <|f|>_Q chi_Q over all cubes of the scan."""
    n = f.box.dim
    if not 0.0 <= alpha < n:
        raise PreconditionError(f"need 0 <= alpha < {n}, got {alpha}")
    if scan.count() == 0:
        raise PreconditionError("empty scan")
    fa = f if np.all(f.values >= 0) else f.copy_with(np.abs(f.values))
    out = np.zeros_like(f.values)
    for shift in scan.shifts:
        for level in range(scan.level_min, scan.level_max + 1):
            avgs, m_mins = _level_averages(fa, scan, shift, level)
            factor = (2.0 ** (-level * n)) ** (alpha / n)
            idxs = _cell_cube_indices(f.box, shift, level, m_mins)
            np.maximum(out, factor * _gather(avgs, idxs), out=out)
    return f.copy_with(out)


# ---------------------------------------------------------------------------
# Sparse families
# ---------------------------------------------------------------------------

@dataclass
class SparseFamily:
    """Stopping cubes of one shifted grid with their witness masks.

    cubes[i] = (cube, k) with generation index k; witnesses[i] is the
    boolean grid mask of E_{Q,k}.  eta_achieved is the smallest |E_Q|/|Q|,
    1.0 for an empty family.
    """

    shift: tuple
    lam: float
    box: g.Box
    cubes: list
    witnesses: list
    eta_achieved: float

    def __len__(self) -> int:
        return len(self.cubes)


def _descendant_slice(shift_c: int, j0: int, m0: int, j: int, m_min: int) -> slice:
    """Index slice at level j of the descendants of cube index m0 at level j0.

    The offset (s0 2^d - s_j) a/3 between the two lattices is an integer
    because 2 = -1 mod 3, so the slice is exact integer arithmetic.
    """
    d = j - j0
    s0 = -1 if j0 % 2 else 1
    sj = -1 if j % 2 else 1
    start = m0 * 2 ** d + shift_c * (s0 * 2 ** d - sj) // 3
    return slice(start - m_min, start - m_min + 2 ** d)


def build_sparse(
    f: g.SampledField,
    shift: tuple,
    lam: float,
    scan: g.CubeScan,
) -> SparseFamily:
    """Stopping-time sparse family of f on the shifted grid D^shift.

    Requires f >= 0, lambda > 2^n, and a single-shift scan matching `shift`.
    Raises DecayError when the top-level averages leave no room below the
    largest generation (the scan cannot certify decay).
    """
    n = f.box.dim
    shift = tuple(shift)
    if np.any(f.values < 0):
        raise PreconditionError("build_sparse requires a nonnegative field")
    if lam <= 2 ** n:
        raise PreconditionError(f"lambda too small: need lambda > {2**n}")
    if scan.shifts != (shift,):
        raise PreconditionError("scan must be single-shift and match `shift`")

    levels = list(range(scan.level_min, scan.level_max + 1))
    per_level = {j: _level_averages(f, scan, shift, j) for j in levels}
    max_avg = max(float(per_level[j][0].max(initial=0.0)) for j in levels)
    if max_avg <= 0.0:
        return SparseFamily(shift, lam, f.box, [], [], 1.0)
    top_avg = float(per_level[levels[0]][0].max(initial=0.0))

    k_hi = int(math.floor(math.log(max_avg) / math.log(lam))) + 1
    while lam ** k_hi >= max_avg:
        k_hi -= 1
    k_lo = int(math.ceil(math.log(top_avg) / math.log(lam))) - 1
    while lam ** k_lo < top_avg:
        k_lo += 1
    if k_lo > k_hi:
        raise DecayError(
            "no decay at scan top: largest-level averages reach the largest "
            f"generation (top {top_avg:g} vs max {max_avg:g}, lambda {lam:g})"
        )

    Mf = dyadic_maximal(f, shift, scan).values
    cubes = []
    witnesses = []
    eta = 1.0
    for k in range(k_lo, k_hi + 1):
        threshold = lam ** k
        upper = lam ** (k + 1)
        covered = {j: np.zeros(per_level[j][0].shape, dtype=bool) for j in levels}
        for j in levels:
            avgs, m_mins = per_level[j]
            cand = (avgs > threshold) & ~covered[j]
            if not np.any(cand):
                continue
            for flat in np.argwhere(cand):
                m = tuple(int(mm) + m_min for mm, m_min in zip(flat, m_mins))
                Q = g.DyadicCube(shift=shift, level=j, index=m)
                avg = float(avgs[tuple(flat)])
                if not (threshold < avg <= 2 ** n * threshold):
                    raise SparseHeatError(
                        f"stopping sandwich violated at {Q}: <f> = {avg}"
                    )
                sl = g.cell_center_slices(f.box, Q.low(), Q.high())
                mask = np.zeros(f.values.shape, dtype=bool)
                sub = (Mf[sl] > threshold) & (Mf[sl] <= upper)
                mask[sl] = sub
                cubes.append((Q, k))
                witnesses.append(mask)
                eta = min(eta, float(mask.sum()) * f.box.cell_volume / Q.measure)
                for jf in levels:
                    if jf <= j:
                        continue
                    slices = tuple(
                        _descendant_slice(c, j, mi, jf, m_min)
                        for c, mi, m_min in zip(shift, m, per_level[jf][1])
                    )
                    covered[jf][slices] = True
    return SparseFamily(shift, lam, f.box, cubes, witnesses, eta)


def sparse_apply(S: SparseFamily, gamma: float, f: g.SampledField) -> g.SampledField:
    """Fractional sparse operator sum_Q |Q|^(gamma/n) <f>_Q chi_Q on the grid.

    The endpoint gamma = n is admitted: the sum over a finite family stays
    finite there, and the geometric domination constant 1/(1 - 2^-gamma)
    does too.
    """
    n = f.box.dim
    if not 0.0 <= gamma <= n:
        raise PreconditionError(f"need 0 <= gamma <= {n}")
    out = np.zeros_like(f.values)
    for Q, _k in S.cubes:
        avg = g.cube_average(f, Q)
        sl = g.cell_center_slices(f.box, Q.low(), Q.high())
        out[sl] += Q.measure ** (gamma / n) * avg
    return f.copy_with(out)


def lambda_full_scan(
    f: g.SampledField,
    shift: tuple,
    gamma: float,
    scan: g.CubeScan,
    min_average: float = 0.0,
) -> g.SampledField:
    """sum over ALL scan cubes of one shift of |Q|^(gamma/n) <f>_Q chi_Q.

    The finite-scan counterpart of the full dyadic sum that the sparse
    family dominates up to lambda times a geometric constant.  With
    min_average = lambda^k_min of a built family the sum keeps exactly the
    cubes of the covered generations, for which the domination constant
    lambda / (1 - 2^-gamma) is sharp; sub-threshold cubes (reachable only
    because the generation range is truncated) are excluded then.
    """
    n = f.box.dim
    out = np.zeros_like(f.values)
    sub = scan.with_shift(shift)
    for level in range(sub.level_min, sub.level_max + 1):
        avgs, m_mins = _level_averages(f, sub, shift, level)
        if min_average > 0.0:
            avgs = np.where(avgs > min_average, avgs, 0.0)
        factor = (2.0 ** (-level * n)) ** (gamma / n)
        idxs = _cell_cube_indices(f.box, shift, level, m_mins)
        out += factor * _gather(avgs, idxs)
    return f.copy_with(out)


# ---------------------------------------------------------------------------
# Fractional integral
# ---------------------------------------------------------------------------

def _interval_kernel(gamma: float, h: float, N: int) -> np.ndarray:
    """1-D cell-integrated |u|^(gamma-1) kernel at offsets -(N-1)..(N-1)."""
    d = np.arange(-(N - 1), N)
    lo = (d - 0.5) * h
    hi = (d + 0.5) * h
    e = gamma  # antiderivative exponent
    F = lambda x: np.sign(x) * np.abs(x) ** e / e
    return F(hi) - F(lo)


def _cube_kernel(gamma: float, h: float, N: int, n: int) -> np.ndarray:
    """Cell-integrated |u|^(gamma-n) kernel on the offset grid, n >= 2.

    Far cells use the midpoint value; cells within 4 cells of the origin are
    integrated with the singular quadrature so the diagonal carries its true
    mass.
    """
    offs = np.arange(-(N - 1), N)
    grids = np.meshgrid(*([offs * h] * n), indexing="ij")
    r = np.sqrt(sum(gr * gr for gr in grids))
    with np.errstate(divide="ignore"):
        K = r ** (gamma - n) * h ** n
    near = max(0, N - 1 - 4), min(2 * N - 1, N + 4)
    fn = lambda pts: np.linalg.norm(pts, axis=1) ** (gamma - n)
    for idx in itertools.product(range(*near), repeat=n):
        center = np.array([offs[i] * h for i in idx])
        lo = center - h / 2.0
        hi = center + h / 2.0
        if np.all(lo <= 0.0) and np.all(hi >= 0.0):
            K[idx] = singular_box_integral(fn, lo, hi, 1e-10, gamma - n)
        else:
            K[idx] = smooth_box_integral(fn, lo, hi, 1e-10)
    return K


def fractional_integral(f: g.SampledField, gamma: float) -> g.SampledField:
    """Riesz-type potential int f(y) |x-y|^(gamma-n) dy on the grid.

    Values are the potential at cell centers; each cell of f contributes its
    average times the exact (1-D) or near-exactly integrated (n >= 2) kernel
    mass over the cell, so the singular diagonal is handled in closed form.
    """
    n = f.box.dim
    if not 0.0 < gamma < n:
        raise PreconditionError(f"need 0 < gamma < {n}")
    N = f.box.cells_per_axis
    h = f.box.cell_width
    key = (n, N, round(h, 15), round(gamma, 15))
    K = _KERNEL_CACHE.get(key)
    if K is None:
        K = _interval_kernel(gamma, h, N) if n == 1 else _cube_kernel(gamma, h, N, n)
        _KERNEL_CACHE[key] = K
    return f.copy_with(fftconvolve(f.values, K, mode="valid"))


# ---------------------------------------------------------------------------
# Heat domination
# ---------------------------------------------------------------------------

def domination_ratio(
    f: g.SampledField,
    gamma: float,
    times,
    lam: float,
    scan: g.CubeScan,
    cfg=None,
):
    """Empirical constant in the pointwise bound of the heat flow.

    Builds the sparse families of all 3^n shifts, then for each time t takes
    the grid maximum of  e^{t Lap} f / (t^(-gamma/2) sum_a Lambda^gamma_{S^a} f)
    over cells where the denominator exceeds 1e-12 of its own maximum.
    Returns (max_ratio, per_time) with per_time a list of (t, ratio).
    """
    from .heat import HeatConfig, heat_apply

    if np.any(f.values < 0):
        raise PreconditionError("domination requires a nonnegative field")
    cfg = cfg or HeatConfig()
    n = f.box.dim
    sparse_sum = np.zeros_like(f.values)
    for shift in itertools.product((0, 1, 2), repeat=n):
        S = build_sparse(f, shift, lam, scan.with_shift(shift))
        sparse_sum += sparse_apply(S, gamma, f).values
    peak = float(sparse_sum.max())
    if peak <= 0.0:
        raise PreconditionError("sparse sum vanishes on support")
    floor = 1e-12 * peak
    support = sparse_sum > floor
    per_time = []
    for t in times:
        u = heat_apply(f, float(t), cfg).values
        denom = float(t) ** (-gamma / 2.0) * sparse_sum
        ratio = float(np.max(u[support] / denom[support]))
        per_time.append((float(t), ratio))
    max_ratio = max(r for _, r in per_time)
    return max_ratio, per_time
