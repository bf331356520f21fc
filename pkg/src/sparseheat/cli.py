"""Batch experiment runner: every verification as a subcommand with CSV output.

Configuration is a flat key=value file (one pair per line, `#` comments)
mirrored by command-line flags; flags override file values.  Outputs are CSV
with a header row, all floats printed with 17 significant digits so reruns
of the same configuration are byte-identical.  Timings are written to stderr
(or added as a column with --timings, which sacrifices determinism).

Exit codes: 0 success, 1 internal error, 2 precondition failure,
3 divergence where a finite constant was required.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import grid as g
from . import heat as ht
from . import hh_solver as hh
from . import sparse as sp
from . import weights as wt
from .errors import (
    DivergenceError,
    NoContractionError,
    PreconditionError,
    SparseHeatError,
)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_PRECONDITION = 2
EXIT_DIVERGENT = 3

SUBCOMMANDS = (
    "check-region",
    "weight-constants",
    "theorem-constants",
    "verify-domination",
    "verify-smoothing",
    "solve-local",
    "solve-global",
    "self-test",
)


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    if isinstance(x, bool):
        return "true" if x else "false"
    return str(x)


def write_csv(path: str, header: list, rows: list):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    text = "\n".join(lines) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def read_config(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise PreconditionError(f"{path}:{lineno}: expected key=value")
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip()
    return out


# Per-subcommand schema: key -> (caster, default); REQUIRED means no default.
REQUIRED = object()

_COMMON_GRID = {
    "n": (int, 1),
    "L": (float, 8.0),
    "N": (int, 1024),
    "level_min": (int, -3),
    "level_max": (int, 4),
    "shifts": (str, "all"),
}

_FIELD_KEYS = {
    "field": (str, "bump"),
    "field_center": (float, 0.0),
    "field_width": (float, 1.0),
    "field_height": (float, 1.0),
    "field_variance": (float, 1.0),
    "field_mass": (float, 1.0),
    "field_lo": (float, 0.0),
    "field_hi": (float, 1.0),
    "field_file": (str, ""),
    "field_bumps": (int, 3),
}

_HEAT_KEYS = {
    "tail_tol": (float, 1e-8),
    "t_min": (float, 1e-3),
    "t_max": (float, 10.0),
    "t_count": (int, 17),
}

SCHEMAS = {
    "check-region": {
        "case": (str, REQUIRED),
        "n": (int, REQUIRED),
        "p": (float, REQUIRED),
        "q": (float, None),
        "q1": (float, None),
        "tau": (float, None),
        "alpha": (float, None),
        "beta": (float, None),
        "gamma": (float, None),
    },
    "weight-constants": {
        "kind": (str, "power"),
        "alpha": (float, 0.0),
        "beta": (float, 0.0),
        "p": (float, 2.0),
        "fujii": (int, 0),
        **_COMMON_GRID,
    },
    "theorem-constants": {
        "mode": (str, REQUIRED),
        "p": (float, REQUIRED),
        "q": (float, None),
        "q1": (float, None),
        "tau": (float, REQUIRED),
        "alpha": (float, None),
        "beta": (float, None),
        "sigma_kind": (str, "one"),
        "sigma_alpha": (float, 0.0),
        "v_kind": (str, "power"),
        "v_gamma": (float, 0.0),
        **_COMMON_GRID,
    },
    "verify-domination": {
        "gamma": (float, 0.0),
        "lambda": (float, None),
        **_COMMON_GRID,
        **_FIELD_KEYS,
        **_HEAT_KEYS,
    },
    "verify-smoothing": {
        "which": (str, "constant"),
        "p": (float, 2.0),
        "q": (float, 2.0),
        "gamma": (float, 0.0),
        "sigma_kind": (str, "power"),
        "sigma_alpha": (float, 0.0),
        "w_kind": (str, "power"),
        "w_alpha": (float, 0.0),
        **_COMMON_GRID,
        **_FIELD_KEYS,
        **_HEAT_KEYS,
    },
    "solve-local": {
        "p": (float, REQUIRED),
        "tau": (float, REQUIRED),
        "beta": (float, REQUIRED),
        "T": (float, REQUIRED),
        "tol_fp": (float, 1e-8),
        "max_iter": (int, 40),
        "node_count": (int, 24),
        "t_retries": (int, 3),
        "sigma_kind": (str, "one"),
        "sigma_alpha": (float, 0.0),
        "v_kind": (str, "power"),
        "v_gamma": (float, 0.0),
        "nonlinearity": (str, "signed_power"),
        **_COMMON_GRID,
        **_FIELD_KEYS,
        "tail_tol": (float, 1e-8),
    },
    "solve-global": {
        "p": (float, REQUIRED),
        "tau": (float, REQUIRED),
        "q": (float, None),
        "q1": (float, None),
        "alpha": (float, 0.0),
        "t_max": (float, REQUIRED),
        "tol_fp": (float, 1e-8),
        "node_count": (int, 24),
        "u0_scale": (float, 0.5),
        "sigma_kind": (str, "one"),
        "sigma_alpha": (float, 0.0),
        "v_kind": (str, "power"),
        "v_gamma": (float, 0.0),
        "nonlinearity": (str, "signed_power"),
        **_COMMON_GRID,
        **_FIELD_KEYS,
        "tail_tol": (float, 1e-8),
    },
    "self-test": {},
}


def _collect_params(name: str, config: dict, cli_pairs: list) -> dict:
    schema = SCHEMAS[name]
    merged = dict(config)
    for key, val in cli_pairs:
        merged[key] = val
    params = {}
    for key, raw in merged.items():
        if key in ("out", "threads", "seed", "timings", "config"):
            continue
        if key not in schema:
            raise PreconditionError(f"unknown key {key!r} for {name}")
        caster = schema[key][0]
        params[key] = caster(raw) if raw is not None else None
    for key, (caster, default) in schema.items():
        if key not in params:
            if default is REQUIRED:
                raise PreconditionError(f"missing required key {key!r} for {name}")
            params[key] = default
    return params


def _make_box(params: dict) -> g.Box:
    return g.Box(params["n"], params["L"], params["N"])


def _make_scan(params: dict, box: g.Box) -> g.CubeScan:
    if params["shifts"] == "all":
        shifts = g.CubeScan.all_shifts(box.dim)
    elif params["shifts"] == "zero":
        shifts = ((0,) * box.dim,)
    else:
        raise PreconditionError("shifts must be 'all' or 'zero'")
    return g.CubeScan(shifts=shifts, level_min=params["level_min"],
                      level_max=params["level_max"], restrict_to=box)


def _make_weight(kind: str, alpha: float, n: int, beta: float = 0.0) -> wt.WeightSpec:
    if kind == "one":
        return wt.one(n)
    if kind == "power":
        return wt.PowerHom(n, alpha)
    if kind == "bracket":
        return wt.Bracket(n, alpha)
    if kind == "product":
        return wt.ProductWeight(n, alpha, beta)
    raise PreconditionError(f"unknown weight kind {kind!r}")


def _make_field(params: dict, box: g.Box, seed: int) -> g.SampledField:
    kind = params["field"]
    n = box.dim
    if kind == "bump":
        return g.bump_field(box, center=[params["field_center"]] * n,
                            width=params["field_width"],
                            height=params["field_height"])
    if kind == "gaussian":
        return g.gaussian_field(box, variance=params["field_variance"],
                                center=[params["field_center"]] * n,
                                mass=params["field_mass"])
    if kind == "indicator":
        return g.indicator_field(box, [params["field_lo"]] * n,
                                 [params["field_hi"]] * n)
    if kind == "random":
        rng = np.random.default_rng(seed)
        vals = np.zeros((box.cells_per_axis,) * n)
        f = g.SampledField(box, vals)
        for _ in range(params["field_bumps"]):
            c = rng.uniform(-box.halfwidth / 2, box.halfwidth / 2, size=n)
            wdt = rng.uniform(0.5, 2.0)
            hgt = rng.uniform(0.5, 2.0)
            vals = vals + g.bump_field(box, center=c, width=wdt, height=hgt).values
        return g.SampledField(box, vals)
    if kind == "file":
        vals = np.load(params["field_file"])
        return g.SampledField(box, vals)
    raise PreconditionError(f"unknown field kind {kind!r}")


def _heat_cfg(params: dict) -> ht.HeatConfig:
    return ht.HeatConfig(tail_tol=params["tail_tol"], t_min=params["t_min"],
                         t_max=params["t_max"], t_count=params["t_count"])


def _report_cols(prefix: str, rep: wt.ConstantReport) -> tuple:
    header = [f"{prefix}_value", f"{prefix}_divergent", f"{prefix}_growth"]
    row = [rep.value, rep.divergent, rep.growth_factor]
    return header, row


# ---------------------------------------------------------------------------
# Subcommand handlers: return (header, rows, exit_code)
# ---------------------------------------------------------------------------

def _run_check_region(params, seed):
    query = wt.RegionQuery(params["case"], {
        k: params[k] for k in ("n", "p", "q", "q1", "tau", "alpha", "beta", "gamma")
        if params.get(k) is not None
    })
    admissible, witness, violated = wt.check_region(query)
    header = ["case", "n", "p", "q", "q1", "tau", "alpha", "beta", "gamma",
              "admissible", "violated"]
    row = [params["case"]] + [
        params[k] if params[k] is not None else "" for k in
        ("n", "p", "q", "q1", "tau", "alpha", "beta", "gamma")
    ] + [admissible, ";".join(violated)]
    for key in sorted(witness):
        header.append(f"witness_{key}")
        row.append(witness[key])
    return header, [row], EXIT_OK


def _run_weight_constants(params, seed):
    box = _make_box(params)
    scan = _make_scan(params, box)
    w = _make_weight(params["kind"], params["alpha"], box.dim, params["beta"])
    echo = [params["kind"], params["alpha"], params["beta"], params["p"],
            box.dim, box.halfwidth, box.cells_per_axis,
            scan.level_min, scan.level_max]
    header = ["kind", "alpha", "beta", "p", "n", "L", "N", "level_min",
              "level_max", "constant", "value", "divergent", "growth_factor"]
    rows = []
    code = EXIT_OK
    rep = wt.ap_constant(w, params["p"], scan)
    rows.append(echo + ["ap", rep.value, rep.divergent, rep.growth_factor])
    if rep.divergent:
        code = EXIT_DIVERGENT
    if params["fujii"]:
        inner = g.CubeScan(shifts=scan.shifts, level_min=scan.level_min,
                           level_max=scan.level_max + 2, restrict_to=box)
        fw = wt.fujii_wilson(w, scan, inner)
        rows.append(echo + ["fujii_wilson", fw.value, fw.divergent, fw.growth_factor])
        if fw.divergent:
            code = EXIT_DIVERGENT
    return header, rows, code


def _run_theorem_constants(params, seed):
    box = _make_box(params)
    scan = _make_scan(params, box)
    n = box.dim
    sigma = _make_weight(params["sigma_kind"], params["sigma_alpha"], n)
    V = _make_weight(params["v_kind"], params["v_gamma"], n)
    mode = params["mode"]
    if mode == "global":
        q = params["q"] if params["q"] is not None else params["p"]
        q1 = params["q1"] if params["q1"] is not None else q
        tp = {"mode": mode, "p": params["p"], "q": q, "q1": q1,
              "tau": params["tau"], "alpha": params["alpha"] or 0.0}
    else:
        tp = {"mode": mode, "p": params["p"], "tau": params["tau"],
              "beta": params["beta"]}
    out = wt.theorem_constants(sigma, V, tp, scan)
    header = ["mode", "n", "p", "q", "q1", "tau", "alpha", "beta",
              "constant", "value", "divergent", "growth_factor"]
    rows = []
    code = EXIT_OK
    for name in ("W", "W1", "W2", "W3"):
        if name not in out:
            continue
        rep = out[name]
        rows.append([mode, n, params["p"], tp.get("q", ""), tp.get("q1", ""),
                     params["tau"], tp.get("alpha", ""), tp.get("beta", ""),
                     name, rep.value, rep.divergent, rep.growth_factor])
        if rep.divergent:
            code = EXIT_DIVERGENT
    return header, rows, code


def _run_verify_domination(params, seed):
    box = _make_box(params)
    scan = _make_scan(params, box)
    f = _make_field(params, box, seed)
    lam = params["lambda"] if params["lambda"] is not None else 2.0 ** (box.dim + 1)
    cfg = _heat_cfg(params)
    max_ratio, per_time = sp.domination_ratio(
        f, params["gamma"], cfg.time_grid(), lam, scan, cfg)
    header = ["n", "L", "N", "gamma", "lambda", "t", "ratio", "max_ratio"]
    rows = [[box.dim, box.halfwidth, box.cells_per_axis, params["gamma"], lam,
             t, r, max_ratio] for t, r in per_time]
    return header, rows, EXIT_OK


def _run_verify_smoothing(params, seed):
    box = _make_box(params)
    scan = _make_scan(params, box)
    f = _make_field(params, box, seed)
    cfg = _heat_cfg(params)
    n = box.dim
    sigma = _make_weight(params["sigma_kind"], params["sigma_alpha"], n)
    if params["which"] == "constant":
        w = _make_weight(params["w_kind"], params["w_alpha"], n)
        sup_ratio, bound, per_time = ht.smoothing_constant_scan(
            f, sigma, w, params["p"], params["q"], params["gamma"], cfg, scan)
    elif params["which"] == "sup":
        sup_ratio, bound, per_time = ht.smoothing_sup_scan(
            f, sigma, params["p"], params["q"], params["gamma"], cfg, scan)
    else:
        raise PreconditionError("which must be 'constant' or 'sup'")
    header = ["which", "n", "p", "q", "gamma", "t", "ratio", "sup_ratio",
              "bound_value", "bound_divergent", "c_emp"]
    c_emp = sup_ratio / bound.value if bound.value > 0 else float("inf")
    rows = [[params["which"], n, params["p"], params["q"], params["gamma"],
             t, r, sup_ratio, bound.value, bound.divergent, c_emp]
            for t, r in per_time]
    code = EXIT_DIVERGENT if bound.divergent else EXIT_OK
    return header, rows, code


def _solver_common(params, seed):
    box = _make_box(params)
    n = box.dim
    sigma = _make_weight(params["sigma_kind"], params["sigma_alpha"], n)
    V = _make_weight(params["v_kind"], params["v_gamma"], n)
    u0 = _make_field(params, box, seed)
    cfg = ht.HeatConfig(tail_tol=params["tail_tol"], t_min=1e-4,
                        t_max=max(params.get("T") or 0, params.get("t_max") or 0, 1.0))
    return box, sigma, V, u0, cfg


def _trajectory_rows(traj, prob, extra_header, extra):
    header = ["t", "norm_lp_sigma", "sup_abs"] + extra_header
    rows = []
    for t, f in zip(traj.times, traj.fields):
        rows.append([float(t), ht.weighted_norm(f, prob.p, prob.sigma),
                     float(np.abs(f.values).max())] + extra)
    return header, rows


def _run_solve_local(params, seed):
    box, sigma, V, u0, cfg = _solver_common(params, seed)
    prob = hh.HHProblem(p=params["p"], tau=params["tau"], sigma=sigma, V=V,
                        u0=u0, mode="local", beta=params["beta"],
                        nonlinearity=params["nonlinearity"])
    T = params["T"]
    last_error = None
    for _ in range(params["t_retries"] + 1):
        try:
            traj, rho, converged = hh.picard_local(
                prob, T, tol_fp=params["tol_fp"], max_iter=params["max_iter"],
                cfg=cfg, node_count=params["node_count"])
            res = hh.residual(traj, prob, cfg)
            header, rows = _trajectory_rows(
                traj, prob, ["T", "rho", "converged", "residual"],
                [T, rho, converged, res])
            return header, rows, EXIT_OK
        except NoContractionError as exc:
            last_error = exc
            T = T / 2.0
    raise last_error


def _run_solve_global(params, seed):
    box, sigma, V, u0, cfg = _solver_common(params, seed)
    q = params["q"] if params["q"] is not None else params["p"]
    q1 = params["q1"] if params["q1"] is not None else q
    prob = hh.HHProblem(p=params["p"], tau=params["tau"], sigma=sigma, V=V,
                        u0=u0, mode="global", q=q, q1=q1,
                        alpha=params["alpha"],
                        nonlinearity=params["nonlinearity"])
    traj, rho, margin = hh.picard_global(
        prob, params["t_max"], tol_fp=params["tol_fp"], cfg=cfg,
        node_count=params["node_count"])
    res = hh.residual(traj, prob, cfg)
    slope, r2 = hh.decay_fit(traj, (params["t_max"] / 10.0, params["t_max"]))
    header, rows = _trajectory_rows(
        traj, prob,
        ["rho", "smallness_margin", "residual", "decay_slope", "decay_r2"],
        [rho, margin, res, slope, r2])
    return header, rows, EXIT_OK


def _run_self_test(params, seed):
    """Quick closed-form checks of every module; one CSV row per check."""
    results = []

    def check(name, fn):
        try:
            ok = bool(fn())
        except Exception:  # noqa: BLE001 - report, do not crash the battery
            ok = False
        results.append((name, ok))

    box = g.Box(1, 2.0, 256)
    f7 = g.constant_field(box, 7.0)
    Q = g.DyadicCube(shift=(0,), level=1, index=(0,))
    check("grid.cube_average_constant", lambda: abs(g.cube_average(f7, Q) - 7.0) < 1e-14)
    xs = g.SampledField(box, box.axis_centers().copy())
    Q01 = g.DyadicCube(shift=(0,), level=0, index=(0,))
    check("grid.cube_average_affine", lambda: abs(g.cube_average(xs, Q01) - 0.5) < 1e-14)
    ind = g.indicator_field(box, [0.0], [0.5])
    check("grid.cube_average_indicator", lambda: abs(g.cube_average(ind, Q01) - 0.5) < 1e-14)
    check("grid.shifted_cover_identity",
          lambda: sp and g.shifted_cover([0.0], [1.0])[1] == 1.0)
    scan0 = g.CubeScan(shifts=((0,),), level_min=0, level_max=1, restrict_to=g.Box(1, 1.0, 2))
    check("grid.enumerate_count", lambda: len(g.enumerate_cubes(scan0)) == 6)

    scan = g.CubeScan(shifts=g.CubeScan.all_shifts(1), level_min=-1, level_max=4,
                      restrict_to=box)
    check("weights.unit_integral",
          lambda: abs(wt.weight_integral(wt.one(1), Q01) - 1.0) < 1e-14)
    check("weights.abs_integral",
          lambda: abs(wt.weight_integral(wt.PowerHom(1, 1.0), Q01) - 0.5) < 1e-12)
    check("weights.ap_one", lambda: wt.ap_constant(wt.one(1), 2.0, scan).value == 1.0)
    check("weights.two_weight_unit",
          lambda: wt.two_weight_constant(wt.one(1), wt.one(1), 2.0, 2.0, 0.0, scan).value == 1.0)
    check("weights.morrey_one_divergent",
          lambda: wt.morrey_norm(wt.one(1), 2.0, 2.0, scan).divergent)
    check("weights.is_ap_trivial", lambda: wt.is_ap_closed_form("power", 0.0, 0.0, 2.0, 1))
    check("weights.ball_const", lambda: (lambda lo, up: lo <= 2.0 <= up)(
        *wt.ball_norm_oracle(0.0, 0.0, 0.0, 1.0, 1)))
    zero = wt.SampledWeight(1, g.constant_field(box, 0.0))
    check("weights.theorem_zero_V",
          lambda: wt.theorem_constants(wt.one(1), zero,
                                       {"mode": "local", "p": 3.0, "tau": 2.0,
                                        "beta": 0.9}, scan)["W"].value == 0.0)

    dbox = g.Box(1, 64.0, 512)
    chi = g.indicator_field(dbox, [0.0], [1.0])
    dscan = g.CubeScan(shifts=((0,),), level_min=-6, level_max=6, restrict_to=dbox)
    check("sparse.maximal_constant", lambda: float(np.max(np.abs(
        sp.dyadic_maximal(g.constant_field(g.Box(1, 1.0, 64), 2.0), (0,),
                          g.CubeScan(shifts=((0,),), level_min=2, level_max=6,
                                     restrict_to=g.Box(1, 1.0, 64))).values - 2.0))) < 1e-12)
    check("sparse.empty_family",
          lambda: len(sp.build_sparse(g.constant_field(dbox, 0.0), (0,), 4.0, dscan)) == 0)
    fam = sp.build_sparse(chi, (0,), 4.0, dscan)
    check("sparse.stopping_cubes", lambda: sorted(
        (k, Qc.low()[0], Qc.high()[0]) for Qc, k in fam.cubes) == [
        (-3, 0.0, 32.0), (-2, 0.0, 8.0), (-1, 0.0, 2.0)])
    check("sparse.fractional_zero", lambda: float(np.abs(
        sp.fractional_integral(g.constant_field(dbox, 0.0), 0.5).values).max()) == 0.0)

    hbox = g.Box(1, 10.0, 2048)
    cfg = ht.HeatConfig(tail_tol=1e-8, t_min=1e-2, t_max=1.0, t_count=5)
    gau = g.gaussian_field(hbox, variance=1.0)
    out = ht.heat_apply(gau, 0.5, cfg)
    tgt = g.gaussian_field(hbox, variance=2.0)
    check("heat.gaussian_closed_form",
          lambda: float(np.abs(out.values - tgt.values).max()) < 1e-6)
    cfgp = ht.HeatConfig(boundary="periodic")
    onef = g.constant_field(hbox, 1.0)
    check("heat.periodic_constant", lambda: float(np.abs(
        ht.heat_apply(onef, 1.0, cfgp).values - 1.0).max()) < 1e-8)
    check("heat.weighted_norm", lambda: abs(ht.weighted_norm(
        g.indicator_field(g.Box(1, 8.0, 4096), [0.0], [1.0]), 1.0,
        wt.PowerHom(1, 1.0)) - 0.5) < 1e-10)

    u0 = g.gaussian_field(hbox, variance=1.0)
    V0 = wt.SampledWeight(1, g.constant_field(hbox, 0.0))
    prob0 = hh.HHProblem(p=2.0, tau=1.0, sigma=wt.one(1), V=V0, u0=u0,
                         mode="local", beta=0.0)
    traj0, _, conv0 = hh.picard_local(prob0, 0.2, tol_fp=1e-10, cfg=cfg,
                                      node_count=8)
    check("hh.linear_fixed_point", lambda: conv0 and hh.residual(traj0, prob0, cfg) < 1e-9)
    times = np.geomspace(0.1, 10.0, 12)
    tr = hh.Trajectory(times=times, fields=[g.constant_field(hbox, t ** -0.75)
                                            for t in times])
    check("hh.decay_fit_synthetic",
          lambda: abs(hh.decay_fit(tr, (0.1, 10.0))[0] + 0.75) < 1e-12)

    header = ["check", "passed"]
    rows = [[name, ok] for name, ok in results]
    npass = sum(ok for _, ok in results)
    print(f"self-test: {npass}/{len(results)} passed", file=sys.stderr)
    code = EXIT_OK if npass == len(results) else EXIT_INTERNAL
    return header, rows, code


_HANDLERS = {
    "check-region": _run_check_region,
    "weight-constants": _run_weight_constants,
    "theorem-constants": _run_theorem_constants,
    "verify-domination": _run_verify_domination,
    "verify-smoothing": _run_verify_smoothing,
    "solve-local": _run_solve_local,
    "solve-global": _run_solve_global,
    "self-test": _run_self_test,
}


def run(argv) -> int:
    parser = argparse.ArgumentParser(
        prog="sparseheat",
        description="numerical verifications for weighted heat smoothing and "
                    "the potential-driven semilinear heat equation",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", default=None, help="key=value config file")
    parser.add_argument("--out", default=None, help="CSV output path ('-' for stdout)")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker cap for parallel sections")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for generated random fields")
    parser.add_argument("--timings", action="store_true",
                        help="append a wall-time column (breaks byte determinism)")
    args, rest = parser.parse_known_args(argv)

    pairs = []
    key = None
    for tok in rest:
        if tok.startswith("--"):
            if key is not None:
                raise PreconditionError(f"flag --{key} is missing a value")
            key = tok[2:].replace("-", "_")
        else:
            if key is None:
                raise PreconditionError(f"stray argument {tok!r}")
            pairs.append((key, tok))
            key = None
    if key is not None:
        raise PreconditionError(f"flag --{key} is missing a value")

    config = read_config(args.config) if args.config else {}
    params = _collect_params(args.subcommand, config, pairs)
    t0 = time.perf_counter()
    header, rows, code = _HANDLERS[args.subcommand](params, args.seed)
    elapsed = time.perf_counter() - t0
    if args.timings:
        header = header + ["seconds"]
        rows = [row + [elapsed] for row in rows]
    out_path = args.out or f"{args.subcommand}.csv"
    write_csv(out_path, header, rows)
    print(f"{args.subcommand}: wrote {len(rows)} rows to {out_path} "
          f"({elapsed:.2f}s)", file=sys.stderr)
    return code


def main() -> None:
    try:
        sys.exit(run(sys.argv[1:]))
    except DivergenceError as exc:
        print(f"divergent: {exc}", file=sys.stderr)
        sys.exit(EXIT_DIVERGENT)
    except (PreconditionError, NoContractionError) as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        sys.exit(EXIT_PRECONDITION)
    except SparseHeatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(EXIT_INTERNAL)
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {exc}", file=sys.stderr)
        sys.exit(EXIT_INTERNAL)


if __name__ == "__main__":
    main()
