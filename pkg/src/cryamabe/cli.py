"""Command line driver for the laboratory.

Subcommands
-----------
calibrate     recompute the bubble and volume normalizations, write a report
verify        run one module's invariant battery
expansion     tabulate the deformed functional on a bubble grid, fit slopes
scan          window scan of the reduced functional, classify the maximizer
cayley-check  verify the sphere push-forward of the left frame

Exit codes: 0 all checks passed (scan: interior maximizer confirmed),
1 hard failure (a check failed, a solve diverged, scan refuted), 2 usage
or configuration errors and inconclusive outcomes.

Reports embed the sha256 of the effective configuration and the library
versions, never timestamps, so re-running a command with identical
inputs reproduces the output files byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .errors import CRYamabeError, ConfigError

# tolerance registry for --tol NAME=VAL overrides
_TOL_DEFAULTS = {
    "ls": 1e-5,           # transverse solve residual target
    "calibration": 1e-9,  # spread of the bubble-constant probe ratios
    "identity": 1e-8,     # pointwise bubble identity residual
    "kappa": 1e-4,        # volume normalization mismatch
    "pushforward": 1e-7,  # sphere frame transport residual
    "structure": 1e-8,    # structure equation residuals
}

_SCHEMA = {
    "seed": "int",
    "threads": "int",
    "grid": {"half_width": "number", "nx": "int", "ny": "int",
             "nt": "int", "half_width_t": "number"},
    "quadrature": {"n_gl": "int"},
    "deformation": {
        "type": "str",
        "amplitude": "number",
        "amplitudes": "number_list",
        "centers": "point_list",
        "radii": "number_list",
        "annulus_factor": "number",
        "profile": "str",
    },
    "window": {
        "center": "point",
        "ball_radius": "number",
        "window_radius": "number",
        "alpha": "number",
        "beta": "number",
        "shape": "int_list",
        "x_fraction": "number",
        "t_fraction": "number",
    },
    "expansion": {"s_values": "number_list",
                  "lambda_values": "number_list"},
    "scan": {"n_gl": "int", "max_outer": "int"},
    "tolerances": {name: "number" for name in _TOL_DEFAULTS},
}


def _kind_ok(kind: str, val) -> bool:
    if kind == "int":
        return isinstance(val, int) and not isinstance(val, bool)
    if kind == "number":
        return isinstance(val, (int, float)) and not isinstance(val, bool)
    if kind == "str":
        return isinstance(val, str)
    if kind == "number_list":
        return (isinstance(val, list) and
                all(_kind_ok("number", v) for v in val))
    if kind == "int_list":
        return (isinstance(val, list) and
                all(_kind_ok("int", v) for v in val))
    if kind == "point":
        return _kind_ok("number_list", val) and len(val) == 3
    if kind == "point_list":
        return (isinstance(val, list) and
                all(_kind_ok("point", v) for v in val))
    raise AssertionError(kind)


def _validate(cfg: dict, schema: dict, path: str = "") -> None:
    for key, val in cfg.items():
        here = f"{path}.{key}" if path else key
        if key not in schema:
            raise ConfigError(f"unknown config key at {here}")
        want = schema[key]
        if isinstance(want, dict):
            if not isinstance(val, dict):
                raise ConfigError(f"{here}: expected an object")
            _validate(val, want, here)
        elif not _kind_ok(want, val):
            raise ConfigError(f"{here}: expected {want}")


def _load_config(args) -> tuple[dict, str]:
    cfg: dict = {}
    if args.config is not None:
        try:
            raw = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        try:
            cfg = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config root must be a JSON object")
        _validate(cfg, _SCHEMA)
    cfg.setdefault("seed", 20260817)
    cfg.setdefault("threads", 1)
    tols = dict(_TOL_DEFAULTS)
    tols.update(cfg.get("tolerances", {}))
    cfg["tolerances"] = tols
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.threads is not None:
        cfg["threads"] = args.threads
    for item in args.tol:
        name, sep, text = item.partition("=")
        if not sep:
            raise ConfigError(f"--tol expects NAME=VAL, got {item!r}")
        if name not in _TOL_DEFAULTS:
            known = ", ".join(sorted(_TOL_DEFAULTS))
            raise ConfigError(f"unknown tolerance {name!r} (known: {known})")
        try:
            tols[name] = float(text)
        except ValueError as exc:
            raise ConfigError(f"--tol {name}: {text!r} is not a number") \
                from exc
    for name, val in tols.items():
        if not val > 0:
            raise ConfigError(f"tolerances.{name} must be positive")
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return cfg, hashlib.sha256(canonical.encode()).hexdigest()


# report plumbing -----------------------------------------------------

def _versions() -> dict:
    import pyamg
    return {"package": __version__, "numpy": np.__version__,
            "scipy": scipy.__version__, "pyamg": pyamg.__version__}


def _jsonable(x):
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _write_json(path: Path, payload: dict) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2, default=_jsonable)
    path.write_text(text + "\n")


def _cell_text(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


def _write_csv(path: Path, fields: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(fields)
        for row in rows:
            wr.writerow([_cell_text(row[k]) for k in fields])


def _check(name: str, value: float, threshold: float) -> dict:
    return {"name": name, "value": float(value),
            "threshold": float(threshold),
            "passed": bool(value < threshold)}


# deformation / window / grid builders --------------------------------

def _deformation_from(cfg: dict):
    from .deform import GluingSpec, glued_deformation, rossi_deformation, \
        zero_deformation
    from .heis import HPoint
    sec = cfg.get("deformation", {})
    kind = sec.get("type", "ball")
    if kind == "none":
        return zero_deformation()
    if kind == "rossi":
        return rossi_deformation(float(sec.get("amplitude", 0.05)))
    if kind != "ball":
        raise ConfigError(
            "deformation.type must be one of ball, rossi, none")
    centers = sec.get("centers", [[0.0, 0.0, 0.0]])
    radii = sec.get("radii", [0.15])
    amps = sec.get("amplitudes")
    if amps is None:
        amps = [float(sec.get("amplitude", 0.05))] * len(centers)
    if not (len(centers) == len(radii) == len(amps)):
        raise ConfigError("deformation.centers, .radii and .amplitudes "
                          "must have matching lengths")
    spec = GluingSpec(
        centers=tuple(HPoint(*c) for c in centers),
        radii=tuple(float(r) for r in radii),
        amplitudes=tuple(float(a) for a in amps),
        annulus_factor=float(sec.get("annulus_factor", 4.0)),
        profile=sec.get("profile", "quintic"))
    return glued_deformation(spec)


def _window_from(cfg: dict):
    from .heis import HPoint
    from .reduce import ScanWindow
    sec = dict(cfg.get("window", {}))
    if "center" in sec:
        sec["center"] = HPoint(*sec["center"])
    if "shape" in sec:
        shape = sec["shape"]
        if len(shape) != 4:
            raise ConfigError("window.shape must have 4 entries")
        sec["shape"] = tuple(int(n) for n in shape)
    return ScanWindow(**sec)


def _grid_from(cfg: dict, defaults=(8.0, 45, 45, 35, None)):
    from .reduce import GridSpec
    sec = cfg.get("grid", {})
    hwt = sec.get("half_width_t", defaults[4])
    return GridSpec(half_width=float(sec.get("half_width", defaults[0])),
                    nx=int(sec.get("nx", defaults[1])),
                    ny=int(sec.get("ny", defaults[2])),
                    nt=int(sec.get("nt", defaults[3])),
                    half_width_t=None if hwt is None else float(hwt))


# the scan box is compact in xy (the pulled-back annulus needs grid
# cells more than the bubble tail needs reach) and taller in t to keep
# the parabolic reach of corner-cell supports inside
_SCAN_GRID_DEFAULTS = (3.0, 61, 61, 49, 3.5)


# calibrate ------------------------------------------------------------

def cmd_calibrate(args, cfg: dict, sha: str, outdir: Path) -> int:
    from .bubbles import calibrate_c1
    from .quad import calibrate_volume_normalization
    tol = cfg["tolerances"]
    n_gl = cfg.get("quadrature", {}).get("n_gl", 8)
    cal = calibrate_c1(seed=cfg["seed"])
    vol = calibrate_volume_normalization(n_gl=max(n_gl, 10))
    checks = [
        _check("bubble_constant_spread", cal.ratio_spread,
               tol["calibration"]),
        _check("bubble_identity_residual", cal.residual_max,
               tol["identity"]),
        _check("volume_normalization_mismatch", vol.relative_mismatch,
               tol["kappa"]),
    ]
    forced = None
    if args.force_kappa is not None:
        # negative control: a wrong normalization must fail loudly
        forced = float(args.force_kappa)
        mismatch = abs(forced * vol.lebesgue_quartic - vol.target) \
            / vol.target
        checks.append(_check("forced_kappa_mismatch", mismatch,
                             tol["kappa"]))
    payload = {
        "command": "calibrate",
        "config_sha256": sha,
        "versions": _versions(),
        "c1": cal.c1,
        "c1_probes": cal.n_probes,
        "kappa": vol.kappa,
        "forced_kappa": forced,
        "quartic_bubble_mass": vol.kappa * vol.lebesgue_quartic,
        "quartic_target": vol.target,
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
    }
    _write_json(outdir / "calibration.json", payload)
    status = "ok" if payload["passed"] else "FAILED"
    print(f"calibrate: c1 {cal.c1:.12f}, kappa {vol.kappa:g} [{status}]")
    return 0 if payload["passed"] else 1


# verify ---------------------------------------------------------------

def _suite_heis(cfg: dict) -> list[dict]:
    from .heis import HPoint, dilate
    rng = np.random.default_rng(cfg["seed"])
    arr = rng.uniform(-2.0, 2.0, size=(60, 3))
    pts = [HPoint(*row) for row in arr]
    assoc = inverse = morphism = gauge = invariance = 0.0
    lam = 1.7
    for p, q, r in zip(pts, pts[1:], pts[2:]):
        a = ((p * q) * r)
        b = (p * (q * r))
        assoc = max(assoc, abs(a.x - b.x), abs(a.y - b.y), abs(a.t - b.t))
        e = p * p.inv()
        inverse = max(inverse, abs(e.x), abs(e.y), abs(e.t))
        pq = p * q
        dp = HPoint(*dilate(lam, (p.x, p.y, p.t)))
        dq = HPoint(*dilate(lam, (q.x, q.y, q.t)))
        dpq = HPoint(*dilate(lam, (pq.x, pq.y, pq.t)))
        m = dp * dq
        morphism = max(morphism, abs(m.x - dpq.x), abs(m.y - dpq.y),
                       abs(m.t - dpq.t))
        gauge = max(gauge, abs(dp.norm() - lam * p.norm()))
        invariance = max(invariance,
                         abs(((r * p).inv() * (r * q)).norm()
                             - (p.inv() * q).norm()))
    return [
        _check("group_associativity", assoc, 1e-12),
        _check("group_inverse", inverse, 1e-12),
        _check("dilation_morphism", morphism, 1e-12),
        _check("gauge_homogeneity", gauge, 1e-10),
        _check("distance_left_invariance", invariance, 1e-10),
    ]


def _suite_jets(cfg: dict) -> list[dict]:
    from .bubbles import BubbleParams, bubble_field
    from .heis import HPoint
    from .jets import fd_frame_jet2
    rng = np.random.default_rng(cfg["seed"])
    field = bubble_field(BubbleParams(center=HPoint(0.3, -0.2, 0.5),
                                      scale=1.7))
    pts = rng.uniform(-1.5, 1.5, size=(40, 3))
    exact = field.jet2(pts)
    fd = fd_frame_jet2(field, pts)
    return [
        _check("first_jet_fd_agreement",
               float(np.max(np.abs(exact.g - fd.g))), 1e-7),
        _check("second_jet_fd_agreement",
               float(np.max(np.abs(exact.h - fd.h))), 1e-4),
    ]


def _flat_sublaplacian(J) -> np.ndarray:
    # quarter of X^2 + Y^2 assembled from coordinate second jets
    x, y = J.x, J.y
    xx = J.h[:, 0, 0] + 4.0 * y * J.h[:, 0, 2] + 4.0 * y * y * J.h[:, 2, 2]
    yy = J.h[:, 1, 1] - 4.0 * x * J.h[:, 1, 2] + 4.0 * x * x * J.h[:, 2, 2]
    return 0.25 * (xx + yy)


def _suite_bubbles(cfg: dict) -> list[dict]:
    from .bubbles import bubble_field, calibrate_c1
    rng = np.random.default_rng(cfg["seed"])
    field = bubble_field()
    pts = rng.uniform(-3.0, 3.0, size=(1000, 3))
    J = field.jet2(pts)
    u = J.v.real
    lap = _flat_sublaplacian(J).real
    residual = float(np.max(np.abs(-4.0 * lap - 2.0 * u ** 3) / u ** 3))
    cal = calibrate_c1(seed=cfg["seed"])
    return [
        _check("bubble_identity_relative", residual,
               cfg["tolerances"]["identity"]),
        _check("constant_probe_spread", cal.ratio_spread,
               cfg["tolerances"]["calibration"]),
    ]


def _suite_quad(cfg: dict) -> list[dict]:
    from .quad import calibrate_volume_normalization
    base = calibrate_volume_normalization(n_gl=8)
    fine = calibrate_volume_normalization(n_gl=16)
    return [
        _check("quartic_mass_default", base.relative_mismatch, 1e-3),
        _check("quartic_mass_refined", fine.relative_mismatch, 5e-4),
    ]


def _suite_deform(cfg: dict) -> list[dict]:
    from .deform import validate_deformation
    rng = np.random.default_rng(cfg["seed"])
    d = _deformation_from(cfg)
    if d.is_zero:
        raise ConfigError("deform suite needs a nonzero deformation")
    probes = rng.uniform(-1.0, 1.0, size=(400, 3))
    rep = validate_deformation(d, probes)
    return [
        _check("sup_f_below_one", rep.sup_f, 1.0),
        _check("support_contained", 0.0 if rep.support_ok else 1.0, 0.5),
        _check("amplitude_bound", 0.0 if rep.sup_bound_respected else 1.0,
               0.5),
        _check("validation_verdict", 0.0 if rep.passes else 1.0, 0.5),
    ]


def _suite_cayley(cfg: dict) -> list[dict]:
    from .cayley import pushforward_W_check
    from .heis import HPoint
    rng = np.random.default_rng(cfg["seed"])
    tol = cfg["tolerances"]["pushforward"]
    spurious = mismatch = 0.0
    for _ in range(100):
        p = HPoint(*rng.uniform(-2.0, 2.0, size=3))
        chk = pushforward_W_check(p)
        spurious = max(spurious, abs(chk.zbar_coeff), abs(chk.t_coeff))
        mismatch = max(mismatch, abs(chk.z_coeff - chk.z_coeff_predicted))
    return [
        _check("spurious_frame_components", spurious, tol),
        _check("pushforward_match", mismatch, tol),
    ]


def _suite_webster(cfg: dict) -> list[dict]:
    from .bubbles import bubble_field
    from .deform import rossi_deformation
    from .webster import structure_residuals, sublaplacian
    rng = np.random.default_rng(cfg["seed"])
    tol = cfg["tolerances"]["structure"]
    d = rossi_deformation(0.05)
    pts = rng.uniform(-1.5, 1.5, size=(50, 3))
    res = structure_residuals(d, pts)
    u = bubble_field()
    a = sublaplacian(d, u, pts, method="defining")
    b = sublaplacian(d, u, pts, method="closed")
    return [
        _check("structure_equations", float(res["max"]), tol),
        _check("sublaplacian_two_paths", float(np.max(np.abs(a - b))),
               tol),
    ]


def _suite_reduce(cfg: dict) -> list[dict]:
    from .bubbles import BubbleParams
    from .deform import zero_deformation
    from .heis import HPoint
    from .reduce import GridField, GridSpec, ReductionSolver, \
        solve_poisson
    rng = np.random.default_rng(cfg["seed"])
    grid = GridSpec(4.0, 25, 25, 19)
    solver = ReductionSolver(grid)
    sym = float(np.max(np.abs(
        (solver.op.matrix - solver.op.matrix.T).data))) \
        if (solver.op.matrix - solver.op.matrix.T).nnz else 0.0
    zero = solve_poisson(GridField(grid, np.zeros(grid.size)), bc=1.0,
                         operator=solver.op)
    const = float(np.max(np.abs(zero.values - 1.0)))
    state = solver.ls_solve(BubbleParams(center=HPoint(0, 0, 0),
                                         scale=1.0), zero_deformation())
    w = rng.standard_normal(grid.size)
    pw = solver.project(w)
    idem = solver.x_norm(solver.project(pw) - pw)
    eigs = np.linalg.eigvalsh(solver.gram)
    return [
        _check("operator_symmetry", sym, 1e-12),
        _check("constant_boundary_solve", const, 1e-6),
        _check("zero_deformation_fast_path", float(state.iterations), 0.5),
        _check("projector_idempotent", idem, 1e-10),
        _check("gram_positive", 0.0 if eigs.min() > 0 else 1.0, 0.5),
    ]


_SUITES = {
    "heis": _suite_heis,
    "jets": _suite_jets,
    "bubbles": _suite_bubbles,
    "quad": _suite_quad,
    "deform": _suite_deform,
    "cayley": _suite_cayley,
    "webster": _suite_webster,
    "reduce": _suite_reduce,
}


def cmd_verify(args, cfg: dict, sha: str, outdir: Path) -> int:
    checks = _SUITES[args.suite](cfg)
    payload = {
        "command": "verify",
        "suite": args.suite,
        "config_sha256": sha,
        "versions": _versions(),
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
    }
    _write_json(outdir / f"verify_{args.suite}.json", payload)
    for c in checks:
        mark = "ok " if c["passed"] else "FAIL"
        print(f"  [{mark}] {c['name']}: {c['value']:.3e} "
              f"(< {c['threshold']:.1e})")
    print(f"verify {args.suite}: "
          f"{'passed' if payload['passed'] else 'FAILED'}")
    return 0 if payload["passed"] else 1


# expansion ------------------------------------------------------------

def _fit_loglog(xs: np.ndarray, ys: np.ndarray) -> dict:
    from scipy import stats
    res = stats.linregress(np.log(xs), np.log(ys))
    half = stats.t.ppf(0.975, len(xs) - 2) * res.stderr \
        if len(xs) > 2 else float("inf")
    return {"slope": res.slope, "stderr": res.stderr,
            "ci95": [res.slope - half, res.slope + half],
            "points": int(len(xs))}


def cmd_expansion(args, cfg: dict, sha: str, outdir: Path) -> int:
    from .bubbles import BubbleParams, bubble_field
    from .deform import rossi_deformation
    from .heis import HPoint
    from .quad import product_rule
    from .reduce import J_FLAT, functional_value
    sec = cfg.get("expansion", {})
    svals = args.s_values if args.s_values is not None \
        else sec.get("s_values", [0.02, 0.04, 0.08])
    lams = args.lambda_values if args.lambda_values is not None \
        else sec.get("lambda_values", [4.0, 8.0, 16.0])
    svals = [float(s) for s in svals]
    lams = [float(l) for l in lams]
    if any(s < 0 for s in svals) or any(l <= 0 for l in lams):
        raise ConfigError("expansion needs s >= 0 and lambda > 0")
    constant_column = all(s == 0.0 for s in svals)
    if not constant_column and (len(set(svals)) < 3 or len(set(lams)) < 3):
        raise ConfigError("slope fits need at least 3 distinct points "
                          f"per axis, got {len(set(svals))} s values and "
                          f"{len(set(lams))} lambda values")
    n_gl = cfg.get("quadrature", {}).get("n_gl", 8)
    rows = []
    for s in svals:
        d = rossi_deformation(s)
        for lam in lams:
            u = bubble_field(BubbleParams(center=HPoint(0, 0, 0),
                                          scale=lam))
            rule = product_rule(n_gl=n_gl, extra_scales=(1.0 / lam,))
            val = float(functional_value(d, u, rule=rule))
            rows.append({"s": s, "lambda": lam, "value": val,
                         "gap": val - J_FLAT})
    _write_csv(outdir / "expansion.csv", ["s", "lambda", "value", "gap"],
               rows)
    payload = {
        "command": "expansion",
        "config_sha256": sha,
        "versions": _versions(),
        "flat_value": J_FLAT,
        "s_values": svals,
        "lambda_values": lams,
        "rows": rows,
    }
    if constant_column:
        spread = float(max(abs(r["gap"]) for r in rows))
        payload.update(flag="constant-column", gap_spread=spread,
                       s_slopes=None, lambda_slopes=None)
        _write_json(outdir / "expansion.json", payload)
        print(f"expansion: s = 0 only, constant column at {J_FLAT:.6f} "
              f"(spread {spread:.2e}); slopes undefined")
        return 0
    s_fits, l_fits = [], []
    skipped = 0
    for lam in lams:
        pts = [(r["s"], abs(r["gap"])) for r in rows
               if r["lambda"] == lam and r["s"] > 0 and r["gap"] != 0.0]
        skipped += sum(1 for r in rows if r["lambda"] == lam) - len(pts)
        if len(pts) >= 3:
            xs, ys = map(np.asarray, zip(*pts))
            s_fits.append({"lambda": lam, **_fit_loglog(xs, ys)})
    for s in svals:
        pts = [(r["lambda"], abs(r["gap"])) for r in rows
               if r["s"] == s and r["s"] > 0 and r["gap"] != 0.0]
        if len(pts) >= 3:
            xs, ys = map(np.asarray, zip(*pts))
            l_fits.append({"s": s, **_fit_loglog(xs, ys)})
    payload.update(s_slopes=s_fits, lambda_slopes=l_fits,
                   skipped_rows=skipped)
    _write_json(outdir / "expansion.json", payload)
    for f in s_fits:
        print(f"  lambda {f['lambda']:g}: gap ~ s^{f['slope']:.3f} "
              f"(ci [{f['ci95'][0]:.2f}, {f['ci95'][1]:.2f}])")
    for f in l_fits:
        print(f"  s {f['s']:g}: gap ~ lambda^{f['slope']:.3f} "
              f"(ci [{f['ci95'][0]:.2f}, {f['ci95'][1]:.2f}])")
    return 0


# scan -----------------------------------------------------------------

_SCAN_FIELDS = ["x", "y", "t", "lambda", "interior", "value", "residual",
                "iterations", "norm_v", "deformation_self", "cell_status"]


def cmd_scan(args, cfg: dict, sha: str, outdir: Path) -> int:
    from .reduce import default_solver, scan_window
    d = _deformation_from(cfg)
    window = _window_from(cfg)
    solver = default_solver(_grid_from(cfg, defaults=_SCAN_GRID_DEFAULTS))
    sec = cfg.get("scan", {})
    result = scan_window(window, d, solver=solver,
                         tol=cfg["tolerances"]["ls"],
                         max_outer=int(sec.get("max_outer", 12)),
                         n_gl=int(sec.get("n_gl", 5)),
                         threads=cfg["threads"])
    _write_csv(outdir / "landscape.csv", _SCAN_FIELDS, result.rows)
    payload = {
        "command": "scan",
        "config_sha256": sha,
        "versions": _versions(),
        "lambdas": list(result.lambdas),
        **result.verdict,
    }
    _write_json(outdir / "verdict.json", payload)
    label = result.verdict["verdict"]
    extra = ""
    if "margin" in result.verdict:
        extra = (f", margin {result.verdict['margin']:.3e} "
                 f"({result.verdict['margin_over_noise']:.1f}x noise), "
                 f"max_u {result.verdict['max_u']:.3f}")
    print(f"scan: {result.verdict['cells']} cells, verdict {label}{extra}")
    if label == "interior":
        return 0
    if label == "boundary":
        return 1
    return 2


# cayley-check ---------------------------------------------------------

def cmd_cayley_check(args, cfg: dict, sha: str, outdir: Path) -> int:
    from .cayley import pushforward_W_check
    from .heis import HPoint
    rng = np.random.default_rng(cfg["seed"])
    tol = cfg["tolerances"]["pushforward"]
    spurious = mismatch = 0.0
    for _ in range(args.points):
        p = HPoint(*rng.uniform(-2.0, 2.0, size=3))
        chk = pushforward_W_check(p)
        spurious = max(spurious, abs(chk.zbar_coeff), abs(chk.t_coeff))
        mismatch = max(mismatch, abs(chk.z_coeff - chk.z_coeff_predicted))
    checks = [
        _check("spurious_frame_components", spurious, tol),
        _check("pushforward_match", mismatch, tol),
    ]
    payload = {
        "command": "cayley-check",
        "config_sha256": sha,
        "versions": _versions(),
        "points": args.points,
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
    }
    _write_json(outdir / "cayley_check.json", payload)
    status = "ok" if payload["passed"] else "FAILED"
    print(f"cayley-check: spurious {spurious:.2e}, mismatch "
          f"{mismatch:.2e} over {args.points} points [{status}]")
    return 0 if payload["passed"] else 1


# entry point ----------------------------------------------------------

def _float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"expected comma separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, metavar="PATH",
                        help="JSON run configuration")
    common.add_argument("--out", type=Path, default=Path("."),
                        metavar="DIR", help="report output directory")
    common.add_argument("--tol", action="append", default=[],
                        metavar="NAME=VAL",
                        help="override a named tolerance")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads for the scan")
    common.add_argument("--seed", type=int, default=None,
                        help="seed for probe sampling")
    p = argparse.ArgumentParser(
        prog="cryamabe",
        description="numerical laboratory for the CR Yamabe problem "
                    "on the Heisenberg group")
    sub = p.add_subparsers(dest="command", required=True)
    pc = sub.add_parser("calibrate", parents=[common],
                        help="recompute normalization constants")
    pc.add_argument("--force-kappa", type=float, default=None,
                    metavar="K",
                    help="negative control: check a forced volume "
                         "normalization (a wrong value must fail)")
    pv = sub.add_parser("verify", parents=[common],
                        help="run one module's invariant battery")
    pv.add_argument("suite", choices=sorted(_SUITES))
    pe = sub.add_parser("expansion", parents=[common],
                        help="deformed functional on a bubble grid")
    pe.add_argument("--s-values", type=_float_list, default=None,
                    metavar="S1,S2,...")
    pe.add_argument("--lambda-values", type=_float_list, default=None,
                    metavar="L1,L2,...")
    ps = sub.add_parser("scan", parents=[common],
                        help="window scan of the reduced functional")
    ps.set_defaults(func=cmd_scan)
    pk = sub.add_parser("cayley-check", parents=[common],
                        help="sphere push-forward verification")
    pk.add_argument("--points", type=int, default=100)
    pc.set_defaults(func=cmd_calibrate)
    pv.set_defaults(func=cmd_verify)
    pe.set_defaults(func=cmd_expansion)
    pk.set_defaults(func=cmd_cayley_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, sha = _load_config(args)
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        return args.func(args, cfg, sha, outdir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CRYamabeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
