"""Weight descriptors and cube-supremum constants.

A weight is described analytically when possible:

    PowerHom(a)      |x|^a
    Bracket(a)       <x>^a = (1 + |x|^2)^(a/2)
    ProductWeight    |x|^a <x>^b
    SampledWeight    piecewise-constant density from a SampledField
    PowerOf/ProductOf   lazy compositions that only evaluate pointwise

Compositions of analytic kinds canonicalize algebraically ((|x|^a)^e is
|x|^(ae), and so on); canonicalization is skipped when the collapsed form
would violate the local-integrability constructor check, so objects like
sigma^(1-p') past an admissibility boundary remain representable and their
cube integrals report divergence lazily.

Every constant here is a supremum of a cube functional.  "All cubes" is
replaced by a CubeScan, and each report carries a divergence flag from a
range-doubling test: the scan is widened (more levels on both ends, larger
box) and the constant is declared divergent when the supremum grows by more
than `GROWTH_THRESHOLD`, or when some cube functional is infinite because a
composed factor fails to be locally integrable at the origin.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np

from . import grid as g
from .errors import NotLocallyIntegrableError, PreconditionError, SparseHeatError
from .quadrature import singular_box_integral, smooth_box_integral

logger = logging.getLogger(__name__)

#: Range-doubling growth beyond which a constant is flagged divergent.
GROWTH_THRESHOLD = 1.25

DEFAULT_TOL = 1e-9


# ---------------------------------------------------------------------------
# Weight descriptors
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class WeightSpec:
    """Base class; concrete kinds implement evaluate() and origin_exponent()."""

    dim: int
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def evaluate(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def origin_exponent(self) -> float:
        """Homogeneous degree of the weight at the origin."""
        raise NotImplementedError


@dataclass(eq=False)
class PowerHom(WeightSpec):
    alpha: float = 0.0

    def __post_init__(self):
        if self.alpha <= -self.dim and self.alpha != 0.0:
            raise NotLocallyIntegrableError(
                f"|x|^{self.alpha} is not locally integrable in dimension {self.dim}"
            )

    def evaluate(self, pts: np.ndarray) -> np.ndarray:
        if self.alpha == 0.0:
            return np.ones(pts.shape[0])
        r = np.linalg.norm(pts, axis=1)
        return r ** self.alpha

    def origin_exponent(self) -> float:
        return self.alpha


@dataclass(eq=False)
class Bracket(WeightSpec):
    alpha: float = 0.0

    def evaluate(self, pts: np.ndarray) -> np.ndarray:
        r2 = np.sum(pts * pts, axis=1)
        return (1.0 + r2) ** (self.alpha / 2.0)

    def origin_exponent(self) -> float:
        return 0.0


@dataclass(eq=False)
class ProductWeight(WeightSpec):
    """|x|^alpha_hom <x>^alpha_brk."""

    alpha_hom: float = 0.0
    alpha_brk: float = 0.0

    def __post_init__(self):
        if self.alpha_hom <= -self.dim and self.alpha_hom != 0.0:
            raise NotLocallyIntegrableError(
                f"|x|^{self.alpha_hom}<x>^{self.alpha_brk} is not locally "
                f"integrable in dimension {self.dim}"
            )

    def evaluate(self, pts: np.ndarray) -> np.ndarray:
        r2 = np.sum(pts * pts, axis=1)
        out = (1.0 + r2) ** (self.alpha_brk / 2.0)
        if self.alpha_hom != 0.0:
            out = out * np.sqrt(r2) ** self.alpha_hom
        return out

    def origin_exponent(self) -> float:
        return self.alpha_hom


@dataclass(eq=False)
class SampledWeight(WeightSpec):
    """Piecewise-constant weight given by cell averages.

    Off the sampling box the weight takes `extend_value` (0 by default);
    a positive extension makes globally constant weights representable.
    """

    field_data: g.SampledField = None
    extend_value: float = 0.0

    def __post_init__(self):
        if self.field_data is None:
            raise PreconditionError("SampledWeight requires a field")
        if self.field_data.box.dim != self.dim:
            raise PreconditionError("field dimension mismatch")
        if np.any(self.field_data.values < 0) or self.extend_value < 0:
            raise PreconditionError("weights must be nonnegative")

    def evaluate(self, pts: np.ndarray) -> np.ndarray:
        box = self.field_data.box
        idx = np.floor((pts + box.halfwidth) / box.cell_width).astype(np.int64)
        inside = np.all((idx >= 0) & (idx < box.cells_per_axis), axis=1)
        out = np.full(pts.shape[0], self.extend_value)
        sel = tuple(idx[inside].T)
        out[inside] = self.field_data.values[sel]
        return out

    def origin_exponent(self) -> float:
        return 0.0


@dataclass(eq=False)
class PowerOf(WeightSpec):
    base: WeightSpec = None
    exponent: float = 1.0

    def evaluate(self, pts: np.ndarray) -> np.ndarray:
        return self.base.evaluate(pts) ** self.exponent

    def origin_exponent(self) -> float:
        return self.base.origin_exponent() * self.exponent


@dataclass(eq=False)
class ProductOf(WeightSpec):
    left: WeightSpec = None
    right: WeightSpec = None

    def evaluate(self, pts: np.ndarray) -> np.ndarray:
        return self.left.evaluate(pts) * self.right.evaluate(pts)

    def origin_exponent(self) -> float:
        return self.left.origin_exponent() + self.right.origin_exponent()


def one(dim: int) -> PowerHom:
    return PowerHom(dim, 0.0)


def weight_power(w: WeightSpec, e: float) -> WeightSpec:
    """w^e, collapsed algebraically when the result is itself a weight."""
    if e == 1.0:
        return w
    if isinstance(w, SampledWeight):
        vals = w.field_data.values
        if e < 0 and (np.any(vals == 0.0) or w.extend_value == 0.0):
            raise NotLocallyIntegrableError(
                "negative power of a sampled weight vanishing somewhere"
            )
        return SampledWeight(w.dim, w.field_data.copy_with(vals ** e),
                             w.extend_value ** e)
    if isinstance(w, ProductOf):
        return weight_product(weight_power(w.left, e), weight_power(w.right, e))
    try:
        if isinstance(w, PowerHom):
            return PowerHom(w.dim, w.alpha * e)
        if isinstance(w, Bracket):
            return Bracket(w.dim, w.alpha * e)
        if isinstance(w, ProductWeight):
            return ProductWeight(w.dim, w.alpha_hom * e, w.alpha_brk * e)
        if isinstance(w, PowerOf):
            return weight_power(w.base, w.exponent * e)
    except NotLocallyIntegrableError:
        pass  # keep the lazy form; integrals will flag it per cube
    return PowerOf(w.dim, base=w, exponent=e)


def is_homogeneous(w: WeightSpec) -> bool:
    """True when the weight is exactly |x|^e, possibly through compositions."""
    if isinstance(w, PowerHom):
        return True
    if isinstance(w, Bracket):
        return w.alpha == 0.0
    if isinstance(w, ProductWeight):
        return w.alpha_brk == 0.0
    if isinstance(w, PowerOf):
        return is_homogeneous(w.base)
    if isinstance(w, ProductOf):
        return is_homogeneous(w.left) and is_homogeneous(w.right)
    return False


def weight_product(a: WeightSpec, b: WeightSpec) -> WeightSpec:
    """a * b, collapsed algebraically when possible."""
    if a.dim != b.dim:
        raise PreconditionError("weight dimensions differ")
    if isinstance(a, PowerHom) and a.alpha == 0.0:
        return b
    if isinstance(b, PowerHom) and b.alpha == 0.0:
        return a

    def exps(w):
        if isinstance(w, PowerHom):
            return (w.alpha, 0.0)
        if isinstance(w, Bracket):
            return (0.0, w.alpha)
        if isinstance(w, ProductWeight):
            return (w.alpha_hom, w.alpha_brk)
        return None

    ea, eb = exps(a), exps(b)
    if ea is not None and eb is not None:
        hom, brk = ea[0] + eb[0], ea[1] + eb[1]
        try:
            if brk == 0.0:
                return PowerHom(a.dim, hom)
            if hom == 0.0:
                return Bracket(a.dim, brk)
            return ProductWeight(a.dim, hom, brk)
        except NotLocallyIntegrableError:
            pass
    if isinstance(a, SampledWeight) and isinstance(b, SampledWeight) \
            and a.field_data.box == b.field_data.box:
        return SampledWeight(a.dim, a.field_data.copy_with(
            a.field_data.values * b.field_data.values))
    return ProductOf(a.dim, left=a, right=b)


# ---------------------------------------------------------------------------
# Integrals
# ---------------------------------------------------------------------------

def _powerhom_interval(alpha: float, a: float, b: float) -> float:
    """int_a^b |x|^alpha dx, closed form (1-D)."""
    if alpha <= -1.0 and a <= 0.0 <= b:
        raise NotLocallyIntegrableError(
            f"|x|^{alpha} is not integrable across the origin"
        )

    def F(x: float) -> float:
        return math.copysign(abs(x) ** (alpha + 1.0), x) / (alpha + 1.0)

    return F(b) - F(a)


def box_weight_integral(w: WeightSpec, low, high, tol: float = DEFAULT_TOL) -> float:
    """int over the axis-parallel box [low, high) of the weight density."""
    low = np.asarray(low, dtype=float)
    high = np.asarray(high, dtype=float)
    key = ("box", tuple(low), tuple(high), tol)
    hit = w._cache.get(key)
    if hit is not None:
        return hit
    if isinstance(w, SampledWeight):
        val = float(g.field_box_integrals(w.field_data, low[None, :], high[None, :])[0])
        if w.extend_value != 0.0:
            L = w.field_data.box.halfwidth
            clipped = float(np.prod(np.maximum(
                np.minimum(high, L) - np.maximum(low, -L), 0.0)))
            val += w.extend_value * (float(np.prod(high - low)) - clipped)
    elif isinstance(w, PowerHom) and w.alpha == 0.0:
        val = float(np.prod(high - low))
    elif isinstance(w, PowerHom) and w.dim == 1:
        val = _powerhom_interval(w.alpha, float(low[0]), float(high[0]))
    else:
        e = w.origin_exponent()
        if e != 0.0:
            val = singular_box_integral(w.evaluate, low, high, tol, e,
                                        self_similar=is_homogeneous(w))
        else:
            val = smooth_box_integral(w.evaluate, low, high, tol)
    w._cache[key] = val
    return val


def weight_integral(w: WeightSpec, Q: g.DyadicCube, tol: float = DEFAULT_TOL) -> float:
    """w(Q) = int_Q w dx with relative accuracy tol."""
    key = ("cube", Q, tol)
    hit = w._cache.get(key)
    if hit is None:
        hit = box_weight_integral(w, Q.low(), Q.high(), tol)
        w._cache[key] = hit
    return hit


def cube_avg(w: WeightSpec, Q: g.DyadicCube, tol: float = DEFAULT_TOL) -> float:
    return weight_integral(w, Q, tol) / Q.measure


def cell_weights(w: WeightSpec, box: g.Box, tol: float = DEFAULT_TOL) -> np.ndarray:
    """w(cell) for every grid cell, as an (N,)*dim array.

    Analytic kinds are integrated with a per-cell Gauss rule; the handful of
    cells whose closure meets the origin are redone with the singular
    integrator so that weights like |x|^a with a < 0 carry their true mass.
    """
    key = ("cells", box, tol)
    hit = w._cache.get(key)
    if hit is not None:
        return hit
    if isinstance(w, SampledWeight) and w.field_data.box == box:
        vals = w.field_data.values * box.cell_volume
    elif isinstance(w, PowerHom) and w.alpha == 0.0:
        vals = np.full((box.cells_per_axis,) * box.dim, box.cell_volume)
    else:
        e = w.origin_exponent()
        if e <= -box.dim and e != 0.0:
            raise NotLocallyIntegrableError(
                f"weight with origin exponent {e} has no finite cell masses"
            )
        avg = g.field_from_function(box, w.evaluate)
        vals = avg.values * box.cell_volume
        if e != 0.0:
            # redo the cells whose closure touches the origin
            edges = g.cell_center_slices(box, [-box.cell_width * 1.01] * box.dim,
                                         [box.cell_width * 1.01] * box.dim)
            idx_ranges = [range(s.start, s.stop) for s in edges]
            h = box.cell_width
            for idx in itertools.product(*idx_ranges):
                lo = np.array([-box.halfwidth + i * h for i in idx])
                hi = lo + h
                vals[idx] = singular_box_integral(w.evaluate, lo, hi, tol, e)
    cw = vals
    w._cache[key] = cw
    return cw


def _essinf(w: WeightSpec, Q: g.DyadicCube) -> float:
    """Essential infimum over Q, exact for radially monotone kinds."""
    lo, hi = Q.low(), Q.high()
    corners = np.array(list(itertools.product(*zip(lo, hi))))
    d_min = math.sqrt(float(np.sum(np.maximum(
        np.maximum(lo, -hi), 0.0) ** 2)))
    d_max = math.sqrt(float(np.max(np.sum(corners ** 2, axis=1))))
    if isinstance(w, PowerHom):
        r = d_min if w.alpha >= 0 else d_max
        return r ** w.alpha if (r > 0 or w.alpha >= 0) else math.inf
    if isinstance(w, Bracket):
        r = d_min if w.alpha >= 0 else d_max
        return (1.0 + r * r) ** (w.alpha / 2.0)
    # generic: lattice sample minimum (approximate)
    q = 9 if w.dim == 1 else 5
    axes = [np.linspace(l + 1e-9, h_ - 1e-9, q) for l, h_ in zip(lo, hi)]
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([gr.ravel() for gr in grids], axis=-1)
    return float(np.min(w.evaluate(pts)))


def _log_average(w: WeightSpec, Q: g.DyadicCube, tol: float) -> float:
    """<log w>_Q, used by the p = infinity Muckenhoupt form."""
    if isinstance(w, SampledWeight):
        lo, hi = Q.low(), Q.high()
        box = w.field_data.box
        sl = g.cell_center_slices(box, lo, hi)
        vals = w.field_data.values[sl].ravel()
        pos = vals > 0
        if not np.all(pos):
            logger.warning("log-average skips %d cells with w = 0", int((~pos).sum()))
        if not np.any(pos):
            return -math.inf
        return float(np.mean(np.log(vals[pos])))

    def fn(pts: np.ndarray) -> np.ndarray:
        return np.log(w.evaluate(pts))

    val = singular_box_integral(fn, Q.low(), Q.high(), tol, 0.0)
    return val / Q.measure


# ---------------------------------------------------------------------------
# Scan suprema
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantReport:
    """Result of a cube-supremum scan.

    divergent is set when the widened scan grew the supremum by more than
    GROWTH_THRESHOLD, or when some cube functional was infinite.
    """

    value: float
    argmax_cube: g.DyadicCube | None
    scan: g.CubeScan
    divergent: bool
    growth_factor: float


def _sup_over(functional: Callable[[g.DyadicCube], float], scan: g.CubeScan):
    best = 0.0
    best_cube = None
    for Q in g.enumerate_cubes(scan):
        v = functional(Q)
        if v is None:
            continue
        if v > best or best_cube is None:
            best = v
            best_cube = Q
        if math.isinf(best):
            break
    return best, best_cube


def scan_supremum(
    functional: Callable[[g.DyadicCube], float],
    scan: g.CubeScan,
    growth_threshold: float = GROWTH_THRESHOLD,
) -> ConstantReport:
    """Supremum of a cube functional over the scan plus the doubling test."""
    base, arg = _sup_over(functional, scan)
    if math.isinf(base):
        return ConstantReport(base, arg, scan, True, math.inf)
    levels_out = 2 if scan.restrict_to.dim == 1 else 1
    wide = scan.extended(levels_out, 2.0)
    ext, _ = _sup_over(functional, wide)
    if base == 0.0:
        growth = math.inf if ext > 0 else 1.0
    else:
        growth = ext / base
    return ConstantReport(base, arg, scan, bool(growth > growth_threshold), growth)


def _safe_avg(w: WeightSpec, Q: g.DyadicCube, tol: float) -> float:
    try:
        return cube_avg(w, Q, tol)
    except NotLocallyIntegrableError:
        return math.inf


def ap_constant(
    w: WeightSpec,
    p: float,
    scan: g.CubeScan,
    tol: float = DEFAULT_TOL,
    growth_threshold: float = GROWTH_THRESHOLD,
) -> ConstantReport:
    """Muckenhoupt constant sup_Q <w>_Q <w^(1-p')>_Q^(p-1) over the scan.

    p = 1 uses <w>_Q / essinf_Q w and p = infinity the exp-log form.  A point
    singularity of w itself raises; one of the dual factor w^(1-p') makes the
    functional infinite and flags the report divergent.
    """
    if not 1.0 <= p:
        raise PreconditionError(f"p must satisfy 1 <= p <= inf, got {p}")
    if w.origin_exponent() <= -w.dim and w.origin_exponent() != 0.0:
        raise NotLocallyIntegrableError("weight is not locally integrable")

    if p == 1.0:
        def functional(Q):
            aw = cube_avg(w, Q, tol)
            inf_w = _essinf(w, Q)
            if inf_w == 0.0:
                return math.inf
            return aw / inf_w
    elif math.isinf(p):
        def functional(Q):
            aw = cube_avg(w, Q, tol)
            if aw == 0.0:
                return None
            return aw * math.exp(-_log_average(w, Q, tol))
    else:
        dual = weight_power(w, 1.0 - _conj(p))

        def functional(Q):
            aw = cube_avg(w, Q, tol)
            ad = _safe_avg(dual, Q, tol)
            if aw == 0.0 and ad == math.inf:
                return None  # degenerate zero weight
            return aw * ad ** (p - 1.0)

    report = scan_supremum(functional, scan, growth_threshold)
    if not report.divergent and 0.0 < report.value < 1.0 - 1e-9:
        raise SparseHeatError(
            f"internal error: A_p constant {report.value} fell below 1"
        )
    return report


def _conj(p: float) -> float:
    if math.isinf(p):
        return 1.0
    if p == 1.0:
        return math.inf
    return p / (p - 1.0)


def two_weight_constant(
    sigma: WeightSpec,
    w: WeightSpec,
    p: float,
    q: float,
    alpha: float,
    scan: g.CubeScan,
    tol: float = DEFAULT_TOL,
    growth_threshold: float = GROWTH_THRESHOLD,
) -> ConstantReport:
    """Joint constant sup_Q |Q|^(alpha/n - (1/p - 1/q)) <sigma>_Q^(1/p') <w>_Q^(1/q)."""
    if not (1.0 <= p < math.inf and 1.0 <= q < math.inf):
        raise PreconditionError("need 1 <= p, q < inf")
    n = sigma.dim
    ex = alpha / n - (1.0 / p - 1.0 / q)
    pc = _conj(p)

    def functional(Q):
        asig = _safe_avg(sigma, Q, tol)
        aw = _safe_avg(w, Q, tol)
        if asig == 0.0 or aw == 0.0:
            return 0.0
        return Q.measure ** ex * asig ** (1.0 / pc) * aw ** (1.0 / q)

    return scan_supremum(functional, scan, growth_threshold)


def morrey_norm(
    f: WeightSpec,
    p: float,
    q: float,
    scan: g.CubeScan,
    tol: float = DEFAULT_TOL,
    growth_threshold: float = GROWTH_THRESHOLD,
) -> ConstantReport:
    """sup_Q |Q|^(1/p - 1/q) ||f||_{L^q(Q)} over the scan.

    q > p is permitted but forces the 0-or-divergent outcome, since the
    space then contains only the zero function.
    """
    if q < 1.0:
        raise PreconditionError("need q >= 1")
    fq = weight_power(f, q)
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    ex = inv_p - 1.0 / q

    def functional(Q):
        try:
            intq = weight_integral(fq, Q, tol)
        except NotLocallyIntegrableError:
            return math.inf
        return Q.measure ** ex * intq ** (1.0 / q)

    return scan_supremum(functional, scan, growth_threshold)


def fujii_wilson(
    w: WeightSpec,
    scan: g.CubeScan,
    inner_scan: g.CubeScan,
    tol: float = DEFAULT_TOL,
    growth_threshold: float = GROWTH_THRESHOLD,
) -> ConstantReport:
    """sup_Q w(Q)^-1 int_Q M(chi_Q w), with M realized over inner_scan cubes.

    The maximal function at a grid cell is the best average <chi_Q w>_Q' over
    inner cubes whose interior covers the cell center, so the computed value
    is a lower bound for the true constant that stabilizes under inner-scan
    refinement.
    """
    box = inner_scan.restrict_to
    cell_vol = box.cell_volume
    shape = (box.cells_per_axis,) * box.dim
    inner_cubes = g.enumerate_cubes(inner_scan)

    def functional(Q):
        try:
            wQ = weight_integral(w, Q, tol)
        except NotLocallyIntegrableError:
            return math.inf
        if wQ == 0.0:
            return None  # vacuous cube
        if math.isinf(wQ):
            return math.inf
        qlo, qhi = Q.low(), Q.high()
        M = np.zeros(shape)
        for Qp in inner_cubes:
            plo, phi = Qp.low(), Qp.high()
            ilo = np.maximum(qlo, plo)
            ihi = np.minimum(qhi, phi)
            if np.any(ihi <= ilo):
                continue
            try:
                mass = box_weight_integral(w, ilo, ihi, tol)
            except NotLocallyIntegrableError:
                return math.inf
            val = mass / Qp.measure
            sl = g.cell_center_slices(box, plo, phi)
            region = M[sl]
            np.maximum(region, val, out=region)
        sl_q = g.cell_center_slices(box, qlo, qhi)
        integral = float(M[sl_q].sum()) * cell_vol
        return integral / wQ

    return scan_supremum(functional, scan, growth_threshold)


# ---------------------------------------------------------------------------
# Closed forms and ball estimates
# ---------------------------------------------------------------------------

def is_ap_closed_form(kind: str, alpha: float, beta: float, p: float, n: int) -> bool:
    """Power-weight A_p membership by the classical exponent inequalities.

    kind "power": |x|^alpha in A_p  iff  -n < alpha < n(p-1).
    kind "product": <x>^alpha |x|^beta in A_p if -n <= alpha + beta <= n(p-1)
    and -n < beta < n(p-1).
    """
    if not 1.0 < p < math.inf:
        raise PreconditionError("need 1 < p < inf")
    if kind == "power":
        return -n < alpha < n * (p - 1.0)
    if kind == "product":
        return (-n <= alpha + beta <= n * (p - 1.0)) and (-n < beta < n * (p - 1.0))
    raise PreconditionError(f"unknown kind {kind!r}")


def _sphere_area(n: int) -> float:
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def _ball_volume(n: int) -> float:
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def ball_norm_oracle(
    alpha: float,
    beta: float,
    center_norm: float,
    R: float,
    n: int,
    slack: float = 1.0,
) -> tuple:
    """Two-sided envelope for int_B |x|^alpha <x>^beta over B(x0, R).

    Balls with |x0| >= 3R (type I) stay inside an annulus where the weight
    varies by bounded factors; the envelope there is the weight at the
    center times the ball volume.  Type II balls (|x0| < 3R) need
    alpha > -n and scale like R^(alpha+n) for R <= 1 and 1 + R^(alpha+beta+n)
    for R > 1.  The constants are conservative closed forms; `slack` widens
    both ends once more.
    """
    if R <= 0:
        raise PreconditionError("R must be positive")
    vol = _ball_volume(n) * R ** n
    if center_norm >= 3.0 * R:
        wc = center_norm ** alpha * (1.0 + center_norm ** 2) ** (beta / 2.0)
        span = (1.5 ** abs(alpha)) * (1.5 ** abs(beta))
        lower = wc * vol / span / slack
        upper = wc * vol * span * slack
        return lower, upper
    if alpha <= -n:
        raise PreconditionError("type II ball requires alpha > -n")
    area = _sphere_area(n)
    brk_min = min(1.0, (1.0 + 16.0 * R * R) ** (beta / 2.0))
    lower = 0.5 * min(_ball_volume(n) * 4.0 ** min(alpha, 0.0),
                      area / (n + alpha)) * R ** (alpha + n) * brk_min / slack
    if R <= 1.0:
        brk_max = max(1.0, (1.0 + 16.0 * R * R) ** (beta / 2.0))
        upper = area / (n + alpha) * (4.0 * R) ** (alpha + n) * brk_max * slack
        return lower, upper
    tail_exp = n + alpha + beta
    inv = 1.0 / tail_exp if tail_exp > 0 else 1.0 / max(abs(tail_exp), 1e-3)
    C = area * 4.0 ** (n + abs(alpha) + abs(beta)) * (1.0 / (n + alpha) + abs(inv) + 1.0)
    upper = C * (1.0 + R ** tail_exp) * slack
    return lower, upper


def ball_weight_integral(
    w: WeightSpec,
    center,
    R: float,
    lattice: int = 128,
) -> float:
    """Quadrature of the weight over a Euclidean ball (dims 1 and 2).

    Midpoint lattice over the bounding box; boundary cells are weighted by a
    subsampled inside fraction, and cells at the origin use the singular
    integrator.  Accuracy is a few parts in 1e4, plenty for envelope checks.
    """
    center = np.asarray(center, dtype=float)
    n = center.size
    if n == 1:
        return box_weight_integral(w, center - R, center + R)
    if n != 2:
        raise PreconditionError("ball quadrature implemented for dim <= 2")
    delta = 2.0 * R / lattice
    edges = [center[i] - R + delta * np.arange(lattice + 1) for i in range(n)]
    cx = 0.5 * (edges[0][:-1] + edges[0][1:])
    cy = 0.5 * (edges[1][:-1] + edges[1][1:])
    CX, CY = np.meshgrid(cx, cy, indexing="ij")
    dist = np.hypot(CX - center[0], CY - center[1])
    half_diag = delta * math.sqrt(2.0) / 2.0
    inside = dist <= R - half_diag
    boundary = (dist < R + half_diag) & ~inside
    pts = np.stack([CX[inside], CY[inside]], axis=-1)
    total = float(np.sum(w.evaluate(pts))) * delta * delta

    # origin cell correction for singular weights
    e = w.origin_exponent()
    if e != 0.0:
        near0 = inside & (np.hypot(CX, CY) <= delta)
        for i, j in zip(*np.nonzero(near0)):
            lo = np.array([edges[0][i], edges[1][j]])
            hi = lo + delta
            pt = np.array([[CX[i, j], CY[i, j]]])
            total += singular_box_integral(w.evaluate, lo, hi, 1e-8, e) \
                - float(w.evaluate(pt)[0]) * delta * delta

    # boundary cells: subsampled inside fraction
    bi, bj = np.nonzero(boundary)
    if bi.size:
        sub = 4
        offs = (np.arange(sub) + 0.5) / sub
        ox, oy = np.meshgrid(offs, offs, indexing="ij")
        for i, j in zip(bi, bj):
            sx = edges[0][i] + ox.ravel() * delta
            sy = edges[1][j] + oy.ravel() * delta
            frac_mask = np.hypot(sx - center[0], sy - center[1]) <= R
            if not np.any(frac_mask):
                continue
            spts = np.stack([sx[frac_mask], sy[frac_mask]], axis=-1)
            total += float(np.sum(w.evaluate(spts))) * (delta / sub) ** 2
    return total


# ---------------------------------------------------------------------------
# Region checkers
# ---------------------------------------------------------------------------

HEAT_CASES = ("HEAT_I", "HEAT_II", "HEAT_III", "HEAT_IV")
LOCAL_CASES = ("LOCAL_I", "LOCAL_II", "LOCAL_III", "LOCAL_IV")
GLOBAL_CASES = ("GLOBAL_I", "GLOBAL_II", "GLOBAL_III", "GLOBAL_IV")
ALL_CASES = HEAT_CASES + LOCAL_CASES + GLOBAL_CASES


@dataclass(frozen=True)
class RegionQuery:
    corollary: str
    params: Mapping

    def __post_init__(self):
        if self.corollary not in ALL_CASES:
            raise PreconditionError(f"unknown corollary case {self.corollary!r}")


def _need(params: Mapping, *keys):
    out = []
    for k in keys:
        if k not in params or params[k] is None:
            raise PreconditionError(f"missing parameter {k!r}")
        out.append(float(params[k]))
    return out


_EQ_TOL = 1e-12


def check_region(query: RegionQuery):
    """Literal evaluation of one admissibility region.

    Returns (admissible, witness, violated): witness carries the derived
    exponents of the corresponding existence statement, violated lists the
    names of the failed inequalities.
    """
    case = query.corollary
    P = query.params
    conds: list = []
    witness: dict = {}

    def add(name: str, ok: bool):
        conds.append((name, bool(ok)))

    if case in HEAT_CASES:
        n, p, q, alpha, beta, gamma = _need(P, "n", "p", "q", "alpha", "beta", "gamma")
        base = n * (1.0 / p - 1.0 / q)
        add("exponents_ordered", 1.0 < p <= q < math.inf)
        add("gamma_range", base <= gamma < n)
        witness["gamma_min"] = base
        if case == "HEAT_I":
            add("beta_lower", -n / q < beta)
            add("beta_le_alpha", beta <= alpha)
            add("alpha_upper", alpha < n * (1.0 - 1.0 / p))
            req = base + (alpha - beta)
            witness["gamma_required"] = req
            add("gamma_matches", abs(gamma - req) <= _EQ_TOL)
        elif case == "HEAT_II":
            add("beta_lower", -n / q < beta)
            add("beta_le_zero", beta <= 0.0)
            add("alpha_lower", 0.0 <= alpha)
            add("alpha_upper", alpha <= n * (1.0 - 1.0 / p))
            add("gamma_lower", base - beta <= gamma)
            add("gamma_upper", gamma <= base + (alpha - beta))
        elif case == "HEAT_III":
            add("beta_lower", -n / q <= beta)
            add("beta_le_zero", beta <= 0.0)
            add("alpha_lower", 0.0 <= alpha)
            add("alpha_upper", alpha < n * (1.0 - 1.0 / p))
            add("gamma_lower", base + alpha <= gamma)
            add("gamma_upper", gamma <= base + (alpha - beta))
        else:  # HEAT_IV
            add("beta_lower", -n / q <= beta)
            add("beta_le_alpha", beta <= alpha)
            add("alpha_upper", alpha <= n * (1.0 - 1.0 / p))
            add("gamma_lower", base <= gamma)
            add("gamma_upper", gamma <= base + (alpha - beta))

    elif case in LOCAL_CASES:
        n, p, tau, alpha, gamma = _need(P, "n", "p", "tau", "alpha", "gamma")
        add("p_range", 1.0 < p < math.inf)
        add("tau_range", 1.0 <= tau < min(p, 1.0 + 2.0 * p / n))
        witness["beta"] = (n + alpha) * (tau - 1.0) / p - gamma
        witness["r"] = p / tau
        witness["ell"] = witness["beta"] - n * (tau - 1.0) / p
        if case == "LOCAL_I":
            add("alpha_lower", -n < alpha)
            add("alpha_upper", alpha < n * (p - tau))
            add("gamma_lower", alpha / p * (tau - 1.0) - n * (1.0 - tau / p) <= gamma)
            add("gamma_upper", gamma <= alpha / p * (tau - 1.0))
            add("gamma_strict",
                max((n + alpha) / p * tau - n, (n + alpha) / p * (tau - 1.0) - 2.0) < gamma)
        elif case == "LOCAL_II":
            add("alpha_lower", 0.0 <= alpha)
            add("alpha_upper", alpha <= n * (p - 1.0))
            if alpha == 0.0:
                add("gamma_lower", n / p * tau - n < gamma)
            else:
                add("gamma_lower", (n + alpha) / p * tau - n <= gamma)
            add("gamma_upper", gamma <= 0.0)
            add("gamma_strict", n / p * (tau - 1.0) - 2.0 < gamma)
        elif case == "LOCAL_III":
            if tau == 1.0:
                upper = n * (p / tau - 1.0)
            else:
                upper = min(n * (p / tau - 1.0), 2.0 * p / (tau - 1.0) - n)
            add("alpha_lower", -n < alpha)
            add("alpha_upper", alpha < upper)
            add("gamma_lower", (n + alpha) / p * tau - n <= gamma)
            add("gamma_upper", gamma <= 0.0)
            add("zero_le_term", 0.0 <= alpha / p * (tau - 1.0))
        else:  # LOCAL_IV
            add("alpha_lower", -n <= alpha)
            add("alpha_upper", alpha <= n * (p - tau))
            lowerb = max((n + alpha) / p * tau - n,
                         alpha / p * (tau - 1.0) - n * (1.0 - tau / p))
            upperb = min((n + alpha) / p * tau, alpha / p * (tau - 1.0))
            add("gamma_lower", lowerb <= gamma)
            add("gamma_upper", gamma <= upperb)
            add("gamma_strict", (n + alpha) / p * (tau - 1.0) - 2.0 < gamma)

    else:  # GLOBAL cases
        n, p, tau, alpha = _need(P, "n", "p", "tau", "alpha")
        q = float(P.get("q", p))
        q1 = float(P.get("q1", q))
        gamma = P.get("gamma")
        add("p_range", max(1.0, n / 2.0) < p < math.inf)
        add("tau_range", 2.0 < tau < 1.0 + 2.0 * p / n)
        if case == "GLOBAL_IV":
            add("q_q1_equal_p", q == p and q1 == p)
        else:
            add("q_range", p <= q < math.inf and q1 == q)

        gamma_derived = (n + alpha) / p * (tau - 1.0) - 2.0
        # exponents of the underlying two-weight conditions, homogeneous choice
        ell = alpha / p
        a_pq = n * (1.0 / p - 1.0 / q) + ell
        beta_thm = 2.0 - (a_pq + n / q) * (tau - 1.0)
        ell1 = 2.0 - (a_pq + n / q) * (tau - 2.0) - n / p
        beta1 = a_pq + beta_thm + n * (1.0 / q - 1.0 / q1)
        witness.update(
            {"ell": ell, "alpha_pq": a_pq, "beta": beta_thm, "ell1": ell1, "beta1": beta1}
        )

        if case == "GLOBAL_I":
            witness["gamma"] = gamma_derived
            add("alpha_lower", 0.0 <= alpha)
            add("alpha_upper", alpha < min(n * (p - 1.0), 2.0 * p / (tau - 1.0) - n))
            add("alpha_above", -(n - 2.0) / (tau - 2.0) * p - n < alpha)
            if gamma is not None:
                add("gamma_matches", abs(float(gamma) - gamma_derived) <= _EQ_TOL)
            add("gamma_negative", gamma_derived < 0.0)
        else:
            if gamma is None:
                raise PreconditionError("missing parameter 'gamma'")
            gamma = float(gamma)
            if case == "GLOBAL_II":
                add("alpha_lower", 0.0 <= alpha)
                add("alpha_upper", alpha <= n * (p - 1.0))
                add("gamma_lower",
                    max((n + alpha) / p - n,
                        -n * (1.0 - 1.0 / p) * (tau - 1.0) - 2.0) <= gamma)
                add("gamma_upper", gamma <= gamma_derived)
                add("tau_lower", 1.0 + 2.0 / n <= tau)
            elif case == "GLOBAL_III":
                add("dim_ge_two", n >= 2)
                add("alpha_lower", 0.0 < alpha)
                add("alpha_upper", alpha < n * (p - 1.0))
                add("alpha_bound", alpha <= 2.0 * p - n * (tau - 1.0))
                upper = (alpha / p - 2.0) / (tau - 1.0) + n / p
                add("gamma_lower", (n + alpha) / p - n <= gamma)
                add("gamma_upper", gamma <= upper)
                add("gamma_upper_nonpositive", upper <= 0.0)
                add("gamma_above", -n * (1.0 - 1.0 / p) < gamma)
            else:  # GLOBAL_IV
                add("dim_cases", n in (2, 3) or (n >= 4 and n / (n - 2.0) <= p))
                amax = min(n * (p - 1.0),
                           (2.0 * p - n) / (tau - 2.0) + p * (n - 2.0) - n,
                           2.0 * p / (tau - 1.0) + p * (n - 2.0))
                add("alpha_lower", 0.0 <= alpha)
                add("alpha_upper", alpha <= amax)
                if 2.0 < tau < 3.0:
                    add("alpha_mid", alpha <= (n * (p + 1.0) - 2.0 * p) / (3.0 - tau))
                gmax = min(gamma_derived,
                           (2.0 - alpha / p) / (tau - 2.0) - 2.0,
                           2.0 / (tau - 1.0) + n / p - 2.0,
                           (n + alpha) / p * (tau - 2.0) + n / p - 2.0)
                add("gamma_lower", (n + alpha) / p - n <= gamma)
                add("gamma_upper", gamma <= gmax)
                add("gamma_strict", gamma < n / p - 2.0 / (tau - 2.0))

    violated = [name for name, ok in conds if not ok]
    return (len(violated) == 0, witness, violated)


# ---------------------------------------------------------------------------
# Theorem constants
# ---------------------------------------------------------------------------

def theorem_constants(
    sigma: WeightSpec,
    V: WeightSpec,
    params: Mapping,
    scan: g.CubeScan,
    tol: float = DEFAULT_TOL,
) -> dict:
    """Smallness constants of the existence statements.

    mode "local" (params p, tau, beta):
        W = [sigma^(-tau/(p-tau)) V^(p/(p-tau)), sigma] in A^beta_{p/tau, p}.
    mode "global" (params p, q, q1, tau, alpha):
        W1 = [sigma^(1-p') V^p', sigma]  in A^beta_{p,p},
        W2 = [sigma^(1-p'), 1]           in A^alpha_{p,q},
        W3 = [sigma^(1-p') V^p', 1]      in A^beta1_{p,q1},
    with beta = 2 - (alpha + n/q)(tau - 1), ell = alpha - n(1/p - 1/q),
    ell1 = 2 - (alpha + n/q)(tau - 2) - n/p, beta1 = alpha + beta + n(1/q - 1/q1).
    """
    n = sigma.dim
    mode = params.get("mode")
    if mode == "local":
        p, tau, beta = (float(params[k]) for k in ("p", "tau", "beta"))
        r = p / tau
        if r <= 1.0:
            raise PreconditionError("exponent out of range: need tau < p")
        rc = _conj(r)
        first = weight_product(weight_power(sigma, 1.0 - rc),
                               weight_power(V, rc))
        W = two_weight_constant(first, sigma, r, p, beta, scan, tol)
        return {"W": W}
    if mode == "global":
        p, q, q1, tau, alpha = (
            float(params[k]) for k in ("p", "q", "q1", "tau", "alpha")
        )
        pc = _conj(p)
        beta = 2.0 - (alpha + n / q) * (tau - 1.0)
        ell1 = 2.0 - (alpha + n / q) * (tau - 2.0) - n / p
        beta1 = alpha + beta + n * (1.0 / q - 1.0 / q1)
        sv = weight_product(weight_power(sigma, 1.0 - pc), weight_power(V, pc))
        dual_sigma = weight_power(sigma, 1.0 - pc)
        return {
            "W1": two_weight_constant(sv, sigma, p, p, beta, scan, tol),
            "W2": two_weight_constant(dual_sigma, one(n), p, q, alpha, scan, tol),
            "W3": two_weight_constant(sv, one(n), p, q1, beta1, scan, tol),
            "beta": beta,
            "ell": alpha - n * (1.0 / p - 1.0 / q),
            "ell1": ell1,
            "beta1": beta1,
        }
    raise PreconditionError("params['mode'] must be 'local' or 'global'")
