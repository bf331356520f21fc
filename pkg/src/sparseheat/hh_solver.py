"""Picard construction of mild solutions to the potential-driven heat equation

    du/dt - Lap u = V u^tau,   u(0) = u0,

via the integral form u(t) = e^{t Lap} u0 + D[u](t) with

    D[u](t) = int_0^t e^{(t-s) Lap} (V u(s)^tau) ds.

The Duhamel integral is evaluated by product integration on the trajectory's
time grid: each subinterval freezes the integrand at its midpoint, and the
semigroup property turns the sum into a cheap recurrence

    D(t_{i+1}) = e^{dt Lap} D(t_i) + dt * e^{(dt/2) Lap} (V u_mid^tau).

The newest subinterval additionally carries the closed-form integral of the
singular scalar (t - s)^(-b) (b = beta/2 from the smoothing estimate in
force), i.e. a factor 1/((1-b) 2^b) relative to the bare midpoint weight;
older subintervals see that factor decay to 1 quadratically, which is within
the first-order accuracy of the scheme.  A reported node whose newest term
still dominates the accumulated integral signals an inadequate grid and
raises with the required refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import grid as g
from . import weights as wt
from .errors import (
    DivergenceError,
    NoContractionError,
    PreconditionError,
)
from .heat import HeatConfig, heat_apply, weighted_norm

_LAST_TERM_SHARE = 0.5
_GLOBAL_MAX_ITER = 60


@dataclass
class HHProblem:
    """Problem data: exponents, weights, initial datum, and mode.

    mode "local" requires beta (the smoothing exponent used throughout the
    contraction estimates); mode "global" requires (q, q1, alpha) from the
    joint-constant conditions.
    """

    p: float
    tau: float
    sigma: wt.WeightSpec
    V: wt.WeightSpec
    u0: g.SampledField
    mode: str
    beta: float | None = None
    q: float | None = None
    q1: float | None = None
    alpha: float | None = None
    nonlinearity: str = "signed_power"

    def __post_init__(self):
        n = self.u0.box.dim
        if self.sigma.dim != n or self.V.dim != n:
            raise PreconditionError("weight dimensions must match the field")
        if self.nonlinearity not in ("power", "signed_power"):
            raise PreconditionError("nonlinearity must be power or signed_power")
        if self.mode == "local":
            if self.beta is None:
                raise PreconditionError("local mode requires beta")
            if not 1.0 < self.p:
                raise PreconditionError("need p > 1")
            if not 1.0 <= self.tau < min(self.p, 1.0 + 2.0 * self.p / n):
                raise PreconditionError("tau out of the local range")
            if not (n * (self.tau - 1.0) / self.p <= self.beta
                    <= n * (1.0 - 1.0 / self.p) and self.beta < 2.0):
                raise PreconditionError("beta out of the local range")
        elif self.mode == "global":
            if self.q is None or self.alpha is None:
                raise PreconditionError("global mode requires q and alpha")
            if self.q1 is None:
                self.q1 = self.q
            if not max(1.0, n / 2.0) < self.p:
                raise PreconditionError("need p > max(1, n/2)")
            if not 2.0 < self.tau < 1.0 + 2.0 * self.p / n:
                raise PreconditionError("tau out of the global range")
            lo = n * (1.0 / self.p - 1.0 / self.q)
            hi = min(float(n), 2.0 / (self.tau - 1.0) - n / self.q)
            if not lo <= self.alpha <= hi:
                raise PreconditionError("alpha out of the global range")
        else:
            raise PreconditionError("mode must be 'local' or 'global'")

    @property
    def dim(self) -> int:
        return self.u0.box.dim

    def smoothing_b(self) -> float:
        """Exponent b of the singular factor (t-s)^(-b) in force."""
        if self.mode == "local":
            beta = self.beta
        else:
            n = self.dim
            beta = 2.0 - (self.alpha + n / self.q) * (self.tau - 1.0)
        return min(max(beta / 2.0, 0.0), 0.999)

    def xinf_exponent(self) -> float:
        if self.mode != "global":
            return 0.0
        return (self.alpha + self.dim / self.q) / 2.0


@dataclass
class Trajectory:
    """Fields on a time grid with the running norms of the fixed-point space."""

    times: np.ndarray
    fields: list
    norm_xp: float = 0.0
    norm_xinf: float = 0.0
    residual: float = float("nan")

    def field_at(self, t: float) -> g.SampledField:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-12 * max(1.0, abs(t)):
            raise PreconditionError(f"time {t} is not a trajectory node")
        return self.fields[i]


def time_grid(T: float, count: int) -> np.ndarray:
    """count uniform nodes on (0, T] prefixed by an early node T/count^2."""
    if count < 4:
        raise PreconditionError("need at least 4 time nodes")
    return np.concatenate([[T / count**2], np.arange(1, count + 1) * (T / count)])


def _nonlinearity(values: np.ndarray, tau: float, kind: str) -> np.ndarray:
    if kind == "signed_power":
        return np.sign(values) * np.abs(values) ** tau
    if tau != round(tau) and np.any(values < 0):
        raise PreconditionError(
            "power nonlinearity undefined for negative values at non-integer tau"
        )
    return values ** tau


def _duhamel_nodes(prob: HHProblem, times: np.ndarray, fields: list,
                   cfg: HeatConfig, check_share: bool = False) -> list:
    """D[u] at every node of `times` for the trajectory `fields`.

    fields[i] is u(times[i]); u(0) = u0 anchors the first subinterval.
    """
    box = prob.u0.box
    v_avg = wt.cell_weights(prob.V, box) / box.cell_volume
    b = prob.smoothing_b()
    c_last = 1.0 / ((1.0 - b) * 2.0 ** b)
    d_rec = np.zeros_like(prob.u0.values)
    out = []
    prev_t = 0.0
    prev_u = prob.u0.values
    for i, t in enumerate(times):
        dt = float(t) - prev_t
        mid = 0.5 * (prev_u + fields[i].values)
        term = dt * heat_apply(
            g.SampledField(box, v_avg * _nonlinearity(mid, prob.tau, prob.nonlinearity)),
            dt / 2.0,
            cfg,
        ).values
        if i > 0:
            d_rec = heat_apply(g.SampledField(box, d_rec), dt, cfg).values
        d_rec = d_rec + term
        reported = d_rec + (c_last - 1.0) * term
        if check_share and i >= 4:
            share_num = weighted_norm(g.SampledField(box, c_last * term), prob.p, prob.sigma)
            share_den = weighted_norm(g.SampledField(box, reported), prob.p, prob.sigma)
            if share_den > 0 and share_num / share_den > _LAST_TERM_SHARE:
                need = math.ceil(len(times) * (share_num / share_den / _LAST_TERM_SHARE)
                                 ** (1.0 / (1.0 - b)))
                raise PreconditionError(
                    f"time grid too coarse at node {i}: newest-term share "
                    f"{share_num / share_den:.2f}; use at least {need} nodes"
                )
        out.append(g.SampledField(box, reported))
        prev_t = float(t)
        prev_u = fields[i].values
    return out


def duhamel_apply(u: Trajectory, prob: HHProblem, t: float,
                  cfg: HeatConfig | None = None) -> g.SampledField:
    """D[u](t) for a trajectory node t."""
    cfg = cfg or HeatConfig()
    i = int(np.argmin(np.abs(u.times - t)))
    if abs(u.times[i] - t) > 1e-12 * max(1.0, abs(t)):
        raise PreconditionError(f"time {t} is not covered by the trajectory grid")
    nodes = _duhamel_nodes(prob, u.times[: i + 1], u.fields[: i + 1], cfg,
                           check_share=True)
    return nodes[i]


def _make_trajectory(prob: HHProblem, times: np.ndarray, fields: list) -> Trajectory:
    xp = max(weighted_norm(f, prob.p, prob.sigma) for f in fields)
    e = prob.xinf_exponent()
    xinf = max(
        float(t) ** e * float(np.abs(f.values).max())
        for t, f in zip(times, fields)
    )
    return Trajectory(times=times, fields=fields, norm_xp=xp, norm_xinf=xinf)


def _diff_norm(prob: HHProblem, times, new: list, old: list) -> float:
    """X-space distance: sup L^p(sigma) difference plus (global) the weighted
    sup-norm difference."""
    box = prob.u0.box
    d = max(
        weighted_norm(g.SampledField(box, a.values - b_.values), prob.p, prob.sigma)
        for a, b_ in zip(new, old)
    )
    if prob.mode == "global":
        e = prob.xinf_exponent()
        d += max(
            float(t) ** e * float(np.abs(a.values - b_.values).max())
            for t, a, b_ in zip(times, new, old)
        )
    return d


def _check_ap_hypotheses(prob: HHProblem, scan: g.CubeScan):
    power = prob.p if prob.mode == "global" else prob.p / prob.tau
    checks = [("sigma in A_p", prob.sigma, prob.p)]
    if float(np.abs(wt.cell_weights(prob.V, prob.u0.box)).max()) > 0.0:
        combined = wt.weight_product(prob.sigma, wt.weight_power(prob.V, -power))
        name = "sigma V^-p in A_p" if prob.mode == "global" else \
            "sigma V^(-p/tau) in A_(p/tau)"
        checks.append((name, combined, power if prob.mode == "local" else prob.p))
    for name, w, pp in checks:
        rep = wt.ap_constant(w, pp, scan)
        if rep.divergent:
            raise DivergenceError(f"hypothesis failed: {name} is divergent")


def default_hypothesis_scan(box: g.Box) -> g.CubeScan:
    """Coarse single-shift scan for the Muckenhoupt hypothesis spot checks.

    Depth is dimension-aware: cube counts grow like 2^(n levels), and the
    checks only need to separate clean divergence from finiteness.
    """
    top = -int(math.ceil(math.log2(box.halfwidth)))
    depth = 4 if box.dim == 1 else 2
    return g.CubeScan(shifts=((0,) * box.dim,), level_min=top,
                      level_max=top + depth, restrict_to=box)


def picard_local(
    prob: HHProblem,
    T: float,
    tol_fp: float = 1e-8,
    max_iter: int = 40,
    cfg: HeatConfig | None = None,
    node_count: int = 24,
    hypothesis_scan: g.CubeScan | None = None,
):
    """Fixed-point iteration for the local problem on [0, T].

    Starts from the free flow e^{t Lap} u0 and applies the integral map until
    the sup-over-grid L^p(sigma) increment drops below tol_fp.  Returns
    (trajectory, rho, converged) with rho the last contraction ratio; raises
    NoContractionError when max_iter passes left rho >= 1 (shrink T).
    """
    if prob.mode != "local":
        raise PreconditionError("picard_local requires a local-mode problem")
    cfg = cfg or HeatConfig()
    _check_ap_hypotheses(prob, hypothesis_scan or default_hypothesis_scan(prob.u0.box))
    times = time_grid(T, node_count)
    base = [heat_apply(prob.u0, float(t), cfg) for t in times]
    cur = list(base)
    box = prob.u0.box
    rho = math.nan
    prev_diff = None
    converged = False
    for _ in range(max_iter):
        dn = _duhamel_nodes(prob, times, cur, cfg, check_share=True)
        new = [g.SampledField(box, b_.values + d.values) for b_, d in zip(base, dn)]
        diff = _diff_norm(prob, times, new, cur)
        if prev_diff not in (None, 0.0):
            rho = diff / prev_diff
        prev_diff = diff
        cur = new
        if diff < tol_fp:
            converged = True
            break
    if not converged and not (rho < 1.0):
        raise NoContractionError(
            f"no contraction at this T: rho = {rho:.3g} after {max_iter} iterations"
        )
    traj = _make_trajectory(prob, times, cur)
    return traj, rho, converged


def smallness_radius(prob: HHProblem, constants: dict) -> float:
    """Largest admissible ||u0||_{L^p(sigma)} for the global contraction.

    With A = (1 + W2) ||u0|| and B = W1 + W3, the map norm obeys
    g(R) = A + B R^tau; a fixed point below the unstable branch exists for
    A <= max_R (R - B R^tau) = R0 (1 - 1/tau), R0 = (tau B)^(-1/(tau-1)).
    A safety factor 1/2 compensates the unknown absolute constants.
    """
    B = constants["W1"].value + constants["W3"].value
    W2 = constants["W2"].value
    if B <= 0.0:
        return math.inf
    R0 = (1.0 / (prob.tau * B)) ** (1.0 / (prob.tau - 1.0))
    return 0.5 * R0 * (1.0 - 1.0 / prob.tau) / (1.0 + W2)


def picard_global(
    prob: HHProblem,
    t_max: float,
    tol_fp: float = 1e-8,
    cfg: HeatConfig | None = None,
    node_count: int = 24,
    hypothesis_scan: g.CubeScan | None = None,
    constants_scan: g.CubeScan | None = None,
):
    """Small-data fixed point in the two-norm space on (0, t_max].

    Verifies the joint-constant conditions (W1, W2, W3 finite), checks the
    initial datum against the computed smallness radius, and iterates the
    integral map.  Returns (trajectory, rho, smallness_margin).
    """
    if prob.mode != "global":
        raise PreconditionError("picard_global requires a global-mode problem")
    cfg = cfg or HeatConfig()
    box = prob.u0.box
    hyp = hypothesis_scan or default_hypothesis_scan(box)
    _check_ap_hypotheses(prob, hyp)
    scan = constants_scan or hyp
    params = {"mode": "global", "p": prob.p, "q": prob.q, "q1": prob.q1,
              "tau": prob.tau, "alpha": prob.alpha}
    consts = wt.theorem_constants(prob.sigma, prob.V, params, scan)
    for name in ("W1", "W2", "W3"):
        if consts[name].divergent:
            raise DivergenceError(f"constant {name} is divergent")
    radius = smallness_radius(prob, consts)
    u0_norm = weighted_norm(prob.u0, prob.p, prob.sigma)
    if u0_norm > radius:
        raise PreconditionError(
            f"u0 too large for the global contraction: ||u0|| = {u0_norm:.3g}, "
            f"maximal admissible norm {radius:.3g}"
        )
    margin = 1.0 - (u0_norm / radius if math.isfinite(radius) else 0.0)

    times = time_grid(t_max, node_count)
    base = [heat_apply(prob.u0, float(t), cfg) for t in times]
    cur = list(base)
    rho = math.nan
    prev_diff = None
    converged = False
    for _ in range(_GLOBAL_MAX_ITER):
        dn = _duhamel_nodes(prob, times, cur, cfg, check_share=True)
        new = [g.SampledField(box, b_.values + d.values) for b_, d in zip(base, dn)]
        diff = _diff_norm(prob, times, new, cur)
        if prev_diff not in (None, 0.0):
            rho = diff / prev_diff
        prev_diff = diff
        cur = new
        if diff < tol_fp:
            converged = True
            break
    if not converged:
        raise NoContractionError(
            f"global iteration did not reach tol {tol_fp:g}; last rho {rho:.3g}"
        )
    traj = _make_trajectory(prob, times, cur)
    return traj, rho, margin


def residual(u: Trajectory, prob: HHProblem, cfg: HeatConfig | None = None) -> float:
    """Relative Duhamel defect sup_t ||u - e^{t Lap}u0 - D[u]|| / max(1, X_p)."""
    cfg = cfg or HeatConfig()
    box = prob.u0.box
    dn = _duhamel_nodes(prob, u.times, u.fields, cfg)
    worst = 0.0
    for t, f, d in zip(u.times, u.fields, dn):
        base = heat_apply(prob.u0, float(t), cfg)
        defect = g.SampledField(box, f.values - base.values - d.values)
        worst = max(worst, weighted_norm(defect, prob.p, prob.sigma))
    return worst / max(1.0, u.norm_xp)


def decay_fit(u: Trajectory, window: tuple) -> tuple:
    """Least-squares slope of log ||u(t)||_inf against log t on the window.

    Returns (slope, r_squared); requires at least 8 trajectory nodes inside
    [t_lo, t_hi].
    """
    t_lo, t_hi = window
    sel = [(t, f) for t, f in zip(u.times, u.fields) if t_lo <= t <= t_hi]
    if len(sel) < 8:
        raise PreconditionError(f"window holds {len(sel)} samples, need >= 8")
    ts = np.array([t for t, _ in sel])
    sups = np.array([float(np.abs(f.values).max()) for _, f in sel])
    if np.any(sups <= 0.0):
        raise PreconditionError("sup norms must be positive for a log fit")
    x = np.log(ts)
    y = np.log(sups)
    A = np.stack([x, np.ones_like(x)], axis=1)
    coef, res, _, _ = np.linalg.lstsq(A, y, rcond=None)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(res[0]) if res.size else float(np.sum((A @ coef - y) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), r2
