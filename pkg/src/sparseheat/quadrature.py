"""Adaptive quadrature over axis-parallel boxes, with origin-singularity peeling.

Weights of the form |x|^a <x>^b are smooth away from the single point x = 0,
so two routines cover everything:

* `smooth_box_integral` - recursive tensor Gauss with a split-vs-unsplit
  error estimate, for boxes whose closure avoids the origin;
* `singular_box_integral` - splits the box into orthants at the origin and
  peels dyadic corner shells toward 0.  Shell contributions of a homogeneous
  integrand of degree e decay like 2^-(n+e) per shell, so the loop terminates
  once the current shell drops below tolerance and the remaining corner is
  added as a geometric tail.
"""

from __future__ import annotations

import itertools
import math
from typing import Callable

import numpy as np

from .errors import NotLocallyIntegrableError

_GAUSS_CACHE: dict = {}

_DEFAULT_ORDER = {1: 8, 2: 5, 3: 4}

_MAX_SMOOTH_DEPTH = 26
_MAX_SHELLS = 200


def _gauss_rule(order: int):
    if order not in _GAUSS_CACHE:
        _GAUSS_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _GAUSS_CACHE[order]


def gauss_box(fn: Callable, lo: np.ndarray, hi: np.ndarray, order: int) -> float:
    """Tensor Gauss-Legendre estimate of int_[lo,hi] fn."""
    n = lo.size
    nodes, wts = _gauss_rule(order)
    axes_pts = []
    axes_wts = []
    for i in range(n):
        half = 0.5 * (hi[i] - lo[i])
        mid = 0.5 * (hi[i] + lo[i])
        axes_pts.append(mid + half * nodes)
        axes_wts.append(half * wts)
    grids = np.meshgrid(*axes_pts, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    vals = np.asarray(fn(pts), dtype=float)
    w = axes_wts[0]
    for nxt in axes_wts[1:]:
        w = np.multiply.outer(w, nxt)
    return float(np.dot(w.ravel(), vals))


def _children(lo: np.ndarray, hi: np.ndarray):
    mid = 0.5 * (lo + hi)
    n = lo.size
    for bits in itertools.product((0, 1), repeat=n):
        clo = np.where(bits, mid, lo)
        chi = np.where(bits, hi, mid)
        yield clo, chi


def smooth_box_integral(
    fn: Callable,
    lo: np.ndarray,
    hi: np.ndarray,
    tol: float,
    order: int | None = None,
    depth: int = 0,
) -> float:
    """Adaptive integral of a function smooth on the closed box."""
    n = lo.size
    q = order if order is not None else _DEFAULT_ORDER[n]
    coarse = gauss_box(fn, lo, hi, q)
    fine = sum(gauss_box(fn, clo, chi, q) for clo, chi in _children(lo, hi))
    err = abs(fine - coarse)
    if err <= tol * max(abs(fine), 1e-300) or depth >= _MAX_SMOOTH_DEPTH:
        return fine
    return sum(
        smooth_box_integral(fn, clo, chi, tol, q, depth + 1)
        for clo, chi in _children(lo, hi)
    )


def _corner_shells(
    fn: Callable,
    lo: np.ndarray,
    hi: np.ndarray,
    tol: float,
    tail_ratio: float,
    self_similar: bool = False,
) -> float:
    """Integral over a box with the origin at one corner, by dyadic peeling.

    With self_similar=True the integrand is exactly homogeneous, every shell
    is tail_ratio times the previous one, and the first shell determines the
    whole sum: shell_0 / (1 - tail_ratio).
    """
    n = lo.size
    cur_lo = lo.astype(float).copy()
    cur_hi = hi.astype(float).copy()
    # which corner is the origin: per axis, True if origin sits at lo
    at_lo = np.abs(cur_lo) <= np.abs(cur_hi)
    acc = 0.0
    acc_abs = 0.0
    shell_total = 0.0
    prev_total = None
    prev_ratio = None
    ratio = tail_ratio
    for k in range(_MAX_SHELLS):
        mid = 0.5 * (cur_lo + cur_hi)
        inner_lo = np.where(at_lo, cur_lo, mid)
        inner_hi = np.where(at_lo, mid, cur_hi)
        shell_total = 0.0
        shell_abs = 0.0
        for bits in itertools.product((0, 1), repeat=n):
            if not any(bits):
                continue  # bits==0 is the inner corner box, peeled next round
            # bit 1 -> the half away from the origin on that axis
            slo = np.where(bits, np.where(at_lo, mid, cur_lo), inner_lo)
            shi = np.where(bits, np.where(at_lo, cur_hi, mid), inner_hi)
            part = smooth_box_integral(fn, slo, shi, tol)
            shell_total += part
            shell_abs += abs(part)
        if self_similar and k == 0 and tail_ratio < 1.0:
            return shell_total / (1.0 - tail_ratio)
        acc += shell_total
        acc_abs += shell_abs
        if shell_abs <= tol * max(acc_abs, 1e-300):
            return acc + shell_total * tail_ratio / (1.0 - tail_ratio)
        # Richardson-style exit: once the shell-to-shell ratio has locked onto
        # its geometric limit, the remaining corner sums to shell*r/(1-r).
        if prev_total not in (None, 0.0):
            ratio = shell_total / prev_total
            if (
                prev_ratio is not None
                and 0.0 < ratio < 0.999
                and abs(ratio - prev_ratio) <= 1e-3 * (1.0 - ratio)
                and k >= 4
            ):
                tail = shell_total * ratio / (1.0 - ratio)
                slack = abs(ratio - prev_ratio) / (1.0 - ratio)
                if abs(tail) * slack <= tol * max(acc_abs, 1e-300):
                    return acc + tail
            prev_ratio = ratio
        prev_total = shell_total
        cur_lo, cur_hi = inner_lo, inner_hi
    return acc + shell_total * tail_ratio / (1.0 - tail_ratio)


def singular_box_integral(
    fn: Callable,
    lo: np.ndarray,
    hi: np.ndarray,
    tol: float,
    hom_exponent: float,
    self_similar: bool = False,
) -> float:
    """Integral of fn over [lo, hi] when fn behaves like |x|^hom_exponent at 0.

    Raises NotLocallyIntegrableError when the origin lies in the closed box
    and hom_exponent <= -dim.  Set self_similar when fn is exactly
    homogeneous of degree hom_exponent; the corner sums then close after a
    single shell regardless of how close the exponent sits to -dim.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    n = lo.size
    touches = bool(np.all(lo <= 0.0) and np.all(hi >= 0.0))
    if not touches:
        return smooth_box_integral(fn, lo, hi, tol)
    if hom_exponent <= -n:
        raise NotLocallyIntegrableError(
            f"weight with exponent {hom_exponent} at the origin is not "
            f"locally integrable in dimension {n}"
        )
    tail_ratio = 2.0 ** (-(n + hom_exponent))
    # split into orthants so 0 is a corner of every singular piece
    axis_splits = []
    for i in range(n):
        if lo[i] < 0.0 < hi[i]:
            axis_splits.append([(lo[i], 0.0), (0.0, hi[i])])
        else:
            axis_splits.append([(lo[i], hi[i])])
    total = 0.0
    for pieces in itertools.product(*axis_splits):
        plo = np.array([p[0] for p in pieces])
        phi = np.array([p[1] for p in pieces])
        if np.any(phi - plo <= 0.0):
            continue
        corner = bool(np.all(np.minimum(np.abs(plo), np.abs(phi)) == 0.0))
        if corner:
            total += _corner_shells(fn, plo, phi, tol, tail_ratio, self_similar)
        else:
            total += smooth_box_integral(fn, plo, phi, tol)
    return total
