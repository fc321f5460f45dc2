"""Command-line entry point: ``fkppwave <command> [options]``.

Every run writes ``manifest.json`` into its output directory with the command,
parameters, tolerances, seed, package version, timestamp, input and output
paths, the status and the headline results. Exit codes: 0 when every check
passes, 1 when a scientific check fails, 2 for usage or configuration errors.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import feynman_kac as fk
from . import pde
from .model import DomainError, ModelParams
from .spectral import (
    OverstabilizationError,
    WeightSpec,
    check_assumption_region,
    energy_bound,
    essential_spectrum_curves,
    evans_contour,
    evans_winding,
    wave_evans_system,
)
from .wave import (
    BracketError,
    check_limit_relation,
    find_invading_front,
    load_profile,
    mass_balance,
    profile_from_shot,
    save_profile,
    verify_tw_properties,
)

log = logging.getLogger("fkppwave")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Bad flags, config or inputs; maps to exit code 2."""


def _version() -> str:
    try:
        from importlib.metadata import version

        return version("artifact")
    except Exception:  # pragma: no cover - running from a source tree
        return "0.0.0+local"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_manifest(out_dir: Path, command: str, *, params=None, tolerances=None, seed=None, inputs=None,
                   outputs=None, status: str, results=None) -> Path:
    man = {
        "command": command,
        "params": params or {},
        "tolerances": tolerances or {},
        "seed": seed,
        "version": _version(),
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "inputs": inputs or {},
        "outputs": sorted(str(p) for p in (outputs or [])),
        "status": status,
        "results": results or {},
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(_jsonable(man), indent=2))
    return path


def load_config(spec: str | None) -> dict:
    """Load a YAML config from a path or a built-in name such as ``fig1``."""
    if spec is None:
        return {}
    path = Path(spec)
    if not path.exists():
        name = spec if spec.endswith(".yaml") else spec + ".yaml"
        builtin = resources.files("fkppwave").joinpath("configs", name)
        if not builtin.is_file():
            raise UsageError(f"config {spec!r} is neither a file nor a built-in config")
        text = builtin.read_text()
    else:
        text = path.read_text()
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise UsageError(f"cannot parse config {spec!r}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"config {spec!r} must be a mapping")
    return data


def _params(cfg: dict) -> ModelParams:
    p = cfg.get("params")
    if not isinstance(p, dict) or not {"c", "d"} <= set(p):
        raise UsageError("config needs params with at least c and d")
    return ModelParams(float(p["c"]), float(p["d"]), float(p.get("r", 0.0)))


# ---------------------------------------------------------------------------
# wave


def _wave_one(c, d, r, K, bracket, tol):
    params = ModelParams(c, d, r)
    violation = params.admissibility_violation()
    if violation is not None:
        raise UsageError(f"inadmissible parameters (c, d, r) = ({c:g}, {d:g}, {r:g}): {violation}")
    if K is None:
        return find_invading_front(params, bracket=tuple(bracket), tol=tol)
    return profile_from_shot(K, params)


def _wave_job(args):
    try:
        return _wave_one(*args), None
    except (UsageError, DomainError, BracketError) as exc:
        return None, exc


def cmd_wave(args) -> int:
    if args.K is None and not args.find_front:
        raise UsageError("give either --K or --find-front")
    grid = [(d, r) for r in args.r for d in args.d]
    for d, r in grid:
        violation = ModelParams(args.c, d, r).admissibility_violation()
        if violation is not None:
            raise UsageError(f"inadmissible parameters (c, d, r) = ({args.c:g}, {d:g}, {r:g}): {violation}")
    jobs = [(args.c, d, r, args.K, args.bracket, args.tol) for d, r in grid]
    if args.threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            results = list(pool.map(_wave_job, jobs))
    else:
        results = [_wave_job(j) for j in jobs]
    worst = EXIT_OK
    for (d, r), (profile, err) in zip(grid, results):
        out = Path(args.out) if len(grid) == 1 else Path(args.out) / f"c{args.c:g}_d{d:g}_r{r:g}"
        params = {"c": args.c, "d": d, "r": r}
        if err is not None:
            log.error("(d, r) = (%g, %g): %s", d, r, err)
            write_manifest(out, "wave", params=params, seed=args.seed, status="error",
                           results={"error": str(err)})
            worst = max(worst, EXIT_USAGE if isinstance(err, UsageError) else EXIT_FAIL)
            continue
        csv_path, json_path = save_profile(profile, out / "profile")
        props = verify_tw_properties(profile)
        mass_res, quad_res = mass_balance(profile)
        lower_ok, upper_ok, slack = check_limit_relation(profile)
        checks = {
            "tw_properties": props.passed,
            "mass_balance": mass_res < 1e-3,
            "limit_relation": lower_ok and upper_ok,
        }
        passed = all(checks.values())
        report = {
            "K": profile.K,
            "K_star": profile.K if args.find_front else None,
            "i_plus": profile.i_plus,
            "mu_minus": profile.mu_minus,
            "mu_plus": profile.mu_plus,
            "critical": profile.critical,
            "properties": props.as_dict(),
            "mass_balance_residual": mass_res,
            "reaction_balance_residual": quad_res,
            "limit_relation_slack": slack,
            "checks": checks,
            "passed": passed,
        }
        rep_path = out / "properties.json"
        rep_path.write_text(json.dumps(_jsonable(report), indent=2))
        write_manifest(
            out, "wave", params=params, seed=args.seed,
            tolerances={"bisection_tol": args.tol, "mass_balance": 1e-3, **profile.meta},
            outputs=[csv_path, json_path, rep_path], status="pass" if passed else "fail",
            results={"K_star" if args.find_front else "K": profile.K, "i_plus": profile.i_plus, "checks": checks},
        )
        print(f"c={args.c:g} d={d:g} r={r:g}: K={profile.K:.6f} i_plus={profile.i_plus:.3e} "
              f"{'PASS' if passed else 'FAIL'}")
        if not passed:
            worst = max(worst, EXIT_FAIL)
    return worst


# ---------------------------------------------------------------------------
# spectrum


def cmd_spectrum(args) -> int:
    if not 0.0 < args.alpha_minus < 1.0:
        raise UsageError(f"alpha_minus = {args.alpha_minus:g}: α₋ < 1 required (and α₋ > 0)")
    path = Path(args.profile)
    if not path.with_suffix(".json").exists() or not path.with_suffix(".csv").exists():
        raise UsageError(f"profile {path} not found (need .csv and .json)")
    profile = load_profile(path)
    p = profile.params
    for name in ("c", "d", "r"):
        flag = getattr(args, name)
        if flag is not None and abs(flag - getattr(p, name)) > 1e-12:
            raise UsageError(f"--{name} {flag:g} does not match the profile's {name} = {getattr(p, name):g}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        curves = essential_spectrum_curves(p, WeightSpec(args.alpha_minus, 1.0), profile.i_minus, profile.i_plus)
        R = energy_bound(p)
    except OverstabilizationError as exc:
        raise UsageError(str(exc)) from exc
    curves_path = out / "essential_curves.csv"
    with open(curves_path, "w") as fh:
        fh.write("curve,re_lambda,im_lambda\n")
        for name, re, im in curves.to_rows():
            fh.write(f"{name},{re!r},{im!r}\n")
    system = wave_evans_system(profile, WeightSpec(1.0, 1.0))
    result = evans_winding(system, evans_contour(p, delta=args.delta, R=R), n_initial=args.n_points, L=args.L)
    evans_csv, evans_json = result.save(out, "evans")
    verdict = result.verdict()
    summary = {
        "params": p.as_dict(),
        "K": profile.K,
        "alpha_minus": args.alpha_minus,
        "energy_bound_R": R,
        "essential_max_real_part": curves.max_real_part,
        "closed_form_mismatch": curves.closed_form_mismatch,
        "evans": verdict,
    }
    outputs = [curves_path, evans_csv, evans_json]
    passed = verdict["winding"] == 0 and verdict["closure_residual"] < 0.1 and verdict["splitting_ok"]
    if args.assumption:
        rep = check_assumption_region(p, profile, alpha_minus=args.alpha_minus, right_result=result,
                                      n_initial=args.n_points, L=args.L)
        summary["assumption"] = rep.as_dict()
        passed = passed and rep.passed
    summary["passed"] = passed
    sum_path = out / "spectrum.json"
    sum_path.write_text(json.dumps(_jsonable(summary), indent=2))
    outputs.append(sum_path)
    write_manifest(out, "spectrum", params=p.as_dict(), seed=args.seed,
                   tolerances={"delta": args.delta, "L": args.L, "n_points": args.n_points},
                   inputs={"profile": str(path)}, outputs=outputs, status="pass" if passed else "fail",
                   results={"winding": verdict["winding"], "R": R, "min_abs_E": verdict["min_abs_E"]})
    print(f"winding={verdict['winding']} closure={verdict['closure_residual']:.2e} R={R:.6f} "
          f"{'PASS' if passed else 'FAIL'}")
    return EXIT_OK if passed else EXIT_FAIL


# ---------------------------------------------------------------------------
# simulate


def _front_profile(params: ModelParams, cfg: dict):
    src = cfg.get("profile")
    if src:
        profile = load_profile(src)
        if profile.params != params:
            raise UsageError(f"profile {src} has params {profile.params}, config says {params}")
        return profile
    return find_invading_front(params)


def _initial_state(params, grid, cfg):
    init = cfg.get("initial") or {}
    kind = init.get("type", "gaussian")
    x = grid.x
    if kind == "gaussian":
        A = float(init.get("amp", 0.5)) * np.exp(-((x / float(init.get("width", 1.0))) ** 2))
        I = np.full_like(x, float(init.get("i0", 0.0)))
        return pde.PdeState(0.0, x, A, I), None, None
    if kind == "front":
        profile = _front_profile(params, init)
        a, i = pde.profile_on_grid(profile, x)
        return pde.PdeState(0.0, x, a, i), None, profile
    if kind == "perturbed_front":
        profile = _front_profile(params, init)
        weight = WeightSpec(float(init.get("alpha_minus", 0.75)), 1.0)
        pert, base = pde.stability_initial_data(profile, grid, float(init.get("delta", 0.01)), weight)
        return pert, base, profile
    raise UsageError(f"unknown initial type {kind!r}")


def _grid(cfg) -> pde.Grid1D:
    g = cfg.get("grid")
    if not isinstance(g, dict):
        raise UsageError("config needs a grid mapping with x_min, x_max, dx")
    return pde.Grid1D.from_spacing(float(g["x_min"]), float(g["x_max"]), float(g["dx"]))


def _frame(cfg, params) -> pde.Frame:
    name = cfg.get("frame", "lab")
    if name == "lab":
        return pde.Frame.lab()
    if name == "moving":
        return pde.Frame.moving(params.c)
    raise UsageError(f"frame must be 'lab' or 'moving', got {name!r}")


def run_simulation(cfg: dict, out: Path, seed=None, save: bool = True):
    """Run one simulate config; returns ``(passed, results, outputs)``."""
    params = _params(cfg)
    grid = _grid(cfg)
    frame = _frame(cfg, params)
    t_end, dt_out = float(cfg.get("t_end", 10.0)), float(cfg.get("dt_out", 0.5))
    init, base, profile = _initial_state(params, grid, cfg)
    scenario = cfg.get("scenario", "custom")
    diag = cfg.get("diagnostics") or {}
    checks_cfg = cfg.get("checks") or {}
    level = float(diag.get("level", 0.1))
    cfl = float(cfg.get("cfl", 0.4))
    states = pde.simulate(init, params, frame, t_end, dt_out, grid=grid, cfl=cfl)
    results, checks = {"scenario": scenario}, {}
    rows = []
    ref_states = None
    if base is not None:
        ref_states = pde.simulate(base, params, frame, t_end, dt_out, grid=grid, cfl=cfl)
        weight = WeightSpec(float(cfg["initial"].get("alpha_minus", 0.75)), 1.0)
    for k, s in enumerate(states):
        front = pde.front_position(s, level)
        try:
            plateau = pde.plateau_value(s, level=level)
        except ValueError:
            plateau = math.nan
        row = {"t": s.t, "front": math.nan if front is None else front, "plateau": plateau,
               "i_at_0": float(np.interp(0.0, s.x, s.I)), "min_A": float(s.A.min()), "min_I": float(s.I.min())}
        if ref_states is not None:
            row["norm"] = pde.weighted_perturbation_norm(s, ref_states[k], weight)
        rows.append(row)
    results["min_A"] = min(r["min_A"] for r in rows)
    results["min_I"] = min(r["min_I"] for r in rows)

    if scenario == "fig1":
        win = tuple(diag.get("speed_window", (t_end / 2, t_end)))
        fit = tuple(diag.get("fit_window", win))
        raw = pde.front_speed(states, win, level)
        v, beta = pde.asymptotic_front_speed(states, fit, level)
        results.update(raw_speed=raw, asymptotic_speed=v, log_coefficient=beta, plateau=rows[-1]["plateau"])
        if "speed" in checks_cfg:
            target, tol = checks_cfg["speed"]
            checks["speed"] = abs(v - target) <= tol
        if "plateau" in checks_cfg:
            target, tol = checks_cfg["plateau"]
            checks["plateau"] = abs(rows[-1]["plateau"] - target) <= tol
        checks["positivity"] = results["min_A"] >= -1e-9 and results["min_I"] >= -1e-9
    elif scenario == "decay":
        t = np.array([r["t"] for r in rows])
        norm = np.array([r["norm"] for r in rows])
        t_min = float(diag.get("fit_t_min", 5.0))
        fit = pde.decay_exponent_fit(t, norm, t_min)
        delta = float(cfg["initial"].get("delta", 0.01))
        i0 = min(r["i_at_0"] for r in rows)
        results.update(slope=fit.slope, super_algebraic=fit.super_algebraic, initial_norm=norm[0],
                       min_i_at_0=i0, delta=delta)
        lo, hi = checks_cfg.get("slope", (-1.9, -1.1))
        checks["slope"] = lo <= fit.slope <= hi
        checks["i_at_0"] = i0 >= 1.0 + delta
    elif scenario == "steady":
        drift = max(max(np.max(np.abs(s.A - init.A)), np.max(np.abs(s.I - init.I))) for s in states)
        results["drift"] = float(drift)
        checks["drift"] = drift < float(checks_cfg.get("drift", 5e-3))
    results["checks"] = checks
    passed = all(checks.values())

    outputs = []
    if save:
        out.mkdir(parents=True, exist_ok=True)
        diag_path = out / "diagnostics.csv"
        keys = list(rows[0])
        with open(diag_path, "w") as fh:
            fh.write(",".join(keys) + "\n")
            for r in rows:
                fh.write(",".join(repr(float(r[k])) for k in keys) + "\n")
        snap_manifest = pde.save_snapshots(states, out / "snapshots",
                                           {"params": params.as_dict(), "frame": frame.name, "cfl": cfl,
                                            "seed": seed, "grid": cfg["grid"]},
                                           every=int(cfg.get("save_every", 1)))
        outputs = [diag_path, snap_manifest]
        if profile is not None:
            outputs += list(save_profile(profile, out / "profile"))
    return passed, results, outputs, states


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    for key in ("t_end", "dt_out"):
        if getattr(args, key) is not None:
            cfg[key] = getattr(args, key)
    if args.dx is not None:
        cfg.setdefault("grid", {})["dx"] = args.dx
    out = Path(args.out)
    try:
        passed, results, outputs, _ = run_simulation(cfg, out, seed=args.seed)
    except (pde.CflError, KeyError, TypeError) as exc:
        raise UsageError(f"configuration error: {exc}") from exc
    write_manifest(out, "simulate", params=cfg.get("params"), seed=args.seed,
                   tolerances={"cfl": cfg.get("cfl", 0.4), "grid": cfg.get("grid")},
                   inputs={"config": args.config, "resolved": cfg}, outputs=outputs,
                   status="pass" if passed else "fail", results=results)
    print(json.dumps(_jsonable(results)))
    return EXIT_OK if passed else EXIT_FAIL


# ---------------------------------------------------------------------------
# validate-fk


def _tail_states(tail: dict):
    if "snapshots" in tail:
        root = Path(tail["snapshots"])
        if (root / "snapshots" / "manifest.json").exists():
            root = root / "snapshots"
        if not (root / "manifest.json").exists():
            raise UsageError(f"no snapshots under {tail['snapshots']}")
        return pde.load_snapshots(root)
    cfg = {
        "scenario": "tail",
        "params": tail["params"],
        "grid": tail["grid"],
        "frame": "moving",
        "t_end": tail.get("t_end", 10.0),
        "dt_out": tail.get("dt_out", 1.0),
        "initial": {"type": "perturbed_front", "delta": tail.get("delta", 0.01),
                    "alpha_minus": tail.get("alpha_minus", 0.75), "profile": tail.get("profile")},
    }
    params, grid = _params(cfg), _grid(cfg)
    init, _, _ = _initial_state(params, grid, cfg)
    if tail.get("negative_control"):
        init = init.copy()
        init.I[init.x <= 0] = 0.5
    return pde.simulate(init, params, pde.Frame.moving(params.c), float(cfg["t_end"]), float(cfg["dt_out"]),
                        grid=grid)


def cmd_validate_fk(args) -> int:
    cfg = load_config(args.config)
    if not any(k in cfg for k in ("density", "oracle", "tail")):
        raise UsageError("config needs at least one of density, oracle, tail")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    reports, checks = {}, {}
    if "density" in cfg:
        dc = cfg["density"]
        pc = fk.PathConfig(float(dc["x0"]), float(dc["c"]), float(dc.get("dt", 1e-4)), int(dc.get("n_paths", 100000)),
                           float(dc.get("t_max", 20.0)), seed, bool(dc.get("bridge", True)))
        v = fk.validate_hitting_density(pc, density_c=dc.get("density_c"), alpha=float(dc.get("alpha", 0.01)),
                                        threads=args.threads)
        reports["density"] = {**v.as_dict(), "seed": seed}
        checks["density"] = v.passed
    if "oracle" in cfg:
        oc = cfg["oracle"]
        t, x0, c, L, M = (float(oc[k]) for k in ("t", "x0", "c", "L", "M"))
        one = lambda s: np.ones_like(np.asarray(s, dtype=float))  # noqa: E731
        prob = fk.FkProblem(L, M, one, one, bound=1.0)
        pc = fk.PathConfig(x0, c, float(oc.get("dt", 1e-4)), int(oc.get("n_paths", 20000)), t, seed + 1)
        est = fk.fk_solve(t, x0, prob, pc, threads=args.threads)
        ref = fk.fk_finite_difference(t, x0, c, L, M, one, lambda s: 1.0)
        reports["oracle"] = {"mean": est.mean, "stderr": est.stderr, "finite_difference": ref,
                             "z": (est.mean - ref) / est.stderr, "seed": seed + 1}
        checks["oracle"] = est.within(ref, 3.0)
    if "tail" in cfg:
        tc = cfg["tail"]
        states = _tail_states(tc)
        rep = fk.tail_bound_check(states, float(tc.get("delta", 0.01)), float(tc.get("mu0", 0.3)),
                                  c=float(tc.get("params", {}).get("c", 2.0)))
        reports["tail"] = rep.as_dict()
        expect = tc.get("expect", "precondition-failed" if tc.get("negative_control") else "pass")
        reports["tail"]["expected_status"] = expect
        checks["tail"] = rep.status == expect
    passed = all(checks.values())
    rep_path = out / "fk_report.json"
    rep_path.write_text(json.dumps(_jsonable({**reports, "checks": checks, "pass": passed, "seed": seed}),
                                   indent=2))
    write_manifest(out, "validate-fk", params={k: cfg[k] for k in cfg if k in ("density", "oracle", "tail")},
                   seed=seed, inputs={"config": args.config}, outputs=[rep_path],
                   status="pass" if passed else "fail", results={"checks": checks})
    for k, v in checks.items():
        print(f"{k}: {'PASS' if v else 'FAIL'}")
    return EXIT_OK if passed else EXIT_FAIL


# ---------------------------------------------------------------------------
# report


def cmd_report(args) -> int:
    root = Path(args.out)
    manifests = []
    for path in sorted(root.rglob("manifest.json")) if root.is_dir() else []:
        try:
            man = json.loads(path.read_text())
        except json.JSONDecodeError:
            continue
        if isinstance(man, dict) and "command" in man:
            man["_path"] = str(path.parent)
            manifests.append(man)
    manifests = [m for m in manifests if m["command"] != "report"]
    if not manifests:
        raise UsageError(f"no run manifests under {root}")
    table = {}
    for m in manifests:
        if m["command"] == "wave" and "K_star" in m.get("results", {}):
            p = m["params"]
            table.setdefault(float(p["r"]), {})[float(p["d"])] = m["results"]["K_star"]
    lines = ["# Run summary", ""]
    if table:
        ds = sorted({d for row in table.values() for d in row})
        lines += ["## Invading-front values K*", "", "| r \\ d | " + " | ".join(f"{d:g}" for d in ds) + " |",
                  "|---" * (len(ds) + 1) + "|"]
        for r in sorted(table):
            cells = [f"{table[r][d]:.5f}" if d in table[r] else "" for d in ds]
            lines.append(f"| {r:g} | " + " | ".join(cells) + " |")
        lines.append("")
    lines += ["## Runs", "", "| command | directory | status |", "|---|---|---|"]
    for m in manifests:
        lines.append(f"| {m['command']} | {m['_path']} | {m['status']} |")
    statuses = [m["status"] for m in manifests]
    worst = "pass" if all(s == "pass" for s in statuses) else ("error" if "error" in statuses else "fail")
    lines += ["", f"Overall: {worst}"]
    md = root / "report.md"
    md.write_text("\n".join(lines) + "\n")
    js = root / "report.json"
    js.write_text(json.dumps(_jsonable({"k_star_table": {str(r): {str(d): v for d, v in row.items()}
                                                         for r, row in table.items()},
                                        "runs": [{"command": m["command"], "dir": m["_path"],
                                                  "status": m["status"]} for m in manifests],
                                        "overall": worst}), indent=2))
    print("\n".join(lines))
    return EXIT_OK if worst == "pass" else EXIT_FAIL


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master RNG seed")
    common.add_argument("--threads", type=int, default=1, help="worker count for parallel parts")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="fkppwave", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    w = sub.add_parser("wave", parents=[common], help="shoot a wave or find the invading front")
    w.add_argument("--c", type=float, default=2.0)
    w.add_argument("--d", type=float, nargs="+", required=True)
    w.add_argument("--r", type=float, nargs="+", default=[0.0])
    g = w.add_mutually_exclusive_group()
    g.add_argument("--K", type=float, default=None, help="left limit i_-inf of a single shot")
    g.add_argument("--find-front", action="store_true", help="bisect for i_+inf = 0")
    w.add_argument("--bracket", type=float, nargs=2, default=(1.5, 2.0))
    w.add_argument("--tol", type=float, default=1e-6)
    w.set_defaults(func=cmd_wave, default_out="runs/wave")

    s = sub.add_parser("spectrum", parents=[common], help="essential spectrum and Evans winding")
    s.add_argument("--profile", required=True, help="profile path (stem of the .csv/.json pair)")
    s.add_argument("--alpha-minus", type=float, default=0.5)
    s.add_argument("--delta", type=float, default=1e-3)
    s.add_argument("--n-points", type=int, default=256)
    s.add_argument("--L", type=float, default=50.0)
    s.add_argument("--assumption", action="store_true", help="also check the wedge region")
    for name in ("c", "d", "r"):
        s.add_argument(f"--{name}", type=float, default=None, help="must match the profile if given")
    s.set_defaults(func=cmd_spectrum, default_out="runs/spectrum")

    m = sub.add_parser("simulate", parents=[common], help="run a PDE scenario from a YAML config")
    m.add_argument("config", help="YAML path or built-in name (fig1, decay, steady)")
    m.add_argument("--t-end", dest="t_end", type=float, default=None)
    m.add_argument("--dt-out", dest="dt_out", type=float, default=None)
    m.add_argument("--dx", type=float, default=None)
    m.set_defaults(func=cmd_simulate, default_out="runs/simulate")

    f = sub.add_parser("validate-fk", parents=[common], help="Monte Carlo Feynman-Kac checks")
    f.add_argument("config", nargs="?", default="fk_default", help="YAML path or built-in name")
    f.set_defaults(func=cmd_validate_fk, default_out="runs/fk")

    r = sub.add_parser("report", parents=[common], help="summarize manifests under --out")
    r.set_defaults(func=cmd_report, default_out="runs")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.out is None:
        args.out = args.default_out
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
