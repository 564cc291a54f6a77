"""Command-line harness: density tables, envelope verification, fixtures.

Verbs: density, verify, fixtures, subordinator, scaling, green.
Exit codes: 0 pass, 1 fail, 2 usage error, 3 capability error.
Identical (config, seed) runs produce byte-identical CSV/JSON data files;
the manifest (timestamps) and SVG plots are exempt.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bernstein import builtin_exponent, certify_scaling, eval_H, parse_spec_id
from .errors import ArgumentError, CapabilityError, SbmlabError
from .kernels import DensityQuery, build_density_table, free_green, gaussian_kernel
from .subordinator import SubordinatorLaw, StableSamplerConfig, dump_draws, sample_stable_T
from .envelopes import green_envelope_free
from . import experiments, fixtures, svgplot

VERIFY_CHECKS = (
    "whole-space-local",
    "whole-space-global",
    "jump-density",
    "asymptotics",
    "free-green",
    "lower-route",
    "dirichlet-bounded",
    "dirichlet-unbounded",
    "dirichlet-green",
    "spectral",
    "disconnected",
    "dual-route",
)


def _parse_grid(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise ArgumentError(f"grid {text!r} must be lo:hi:n or lo:hi:n:log")
    lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    if n < 1 or hi < lo:
        raise ArgumentError(f"grid {text!r} is empty or reversed")
    if len(parts) == 4:
        if parts[3] != "log":
            raise ArgumentError(f"grid suffix {parts[3]!r} is not 'log'")
        if lo <= 0.0:
            raise ArgumentError("log grids need a positive lower endpoint")
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, int, float, str)) or obj is None:
        return obj
    if hasattr(obj, "to_json"):
        return _jsonable(obj.to_json())
    return repr(obj)


class RunWriter:
    """Collects output files and writes the closing manifest."""

    def __init__(self, outdir: Path, config: dict):
        self.outdir = Path(outdir)
        self.outdir.mkdir(parents=True, exist_ok=True)
        self.config = config
        self.started = time.time()
        self.artifacts = []

    def path(self, name: str) -> Path:
        return self.outdir / name

    def _register(self, path: Path):
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        self.artifacts.append({"path": path.name, "sha256": digest})

    def write_json(self, name: str, payload) -> Path:
        path = self.path(name)
        with open(path, "w") as fh:
            json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
            fh.write("\n")
        self._register(path)
        return path

    def write_csv_table(self, name: str, table) -> Path:
        path = self.path(name)
        table.to_csv(path)
        self._register(path)
        return path

    def write_svg(self, name: str, fn, *args, **kwargs) -> Path:
        path = self.path(name)
        fn(path, *args, **kwargs)
        self._register(path)
        return path

    def register_file(self, path: Path):
        self._register(path)

    def close(self):
        manifest = {
            "config": _jsonable(self.config),
            "config_hash": hashlib.sha256(
                json.dumps(_jsonable(self.config), sort_keys=True).encode()
            ).hexdigest(),
            "code_version": __version__,
            "timestamps": {"started": self.started, "finished": time.time()},
            "artifacts": self.artifacts,
        }
        with open(self.path("manifest.json"), "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")


# ---------------------------------------------------------------------------
# Subcommands


def cmd_density(args) -> int:
    spec = parse_spec_id(args.spec)  # validates before any file is written
    exp = builtin_exponent(args.spec)
    ts = _parse_grid(args.t_grid)
    rs = _parse_grid(args.r_grid)
    if np.any(ts <= 0.0):
        raise ArgumentError("time grid must be positive")
    routes = ["fourier", "subordination"] if args.route == "both" else [args.route]
    config = {"cmd": "density", "spec": args.spec, "d": args.d,
              "which": args.which, "route": args.route, "t_grid": args.t_grid,
              "r_grid": args.r_grid, "seed": args.seed}
    writer = RunWriter(args.out, config)
    tables = {}
    for route in routes:
        table = build_density_table(exp, args.d, ts, rs, which=args.which,
                                    route=route, spec_id=args.spec)
        tables[route] = table
        writer.write_csv_table(f"{args.which}_{route}.csv", table)
        writer.write_json(f"{args.which}_{route}.meta.json", table.sidecar())
    summary = {"routes": routes}
    if len(routes) == 2:
        gap = np.abs(tables["fourier"].values - tables["subordination"].values)
        rel = gap / np.maximum(tables["fourier"].values, 1e-300)
        summary["max_rel_gap"] = float(rel.max())
    if spec.form == "zero" and args.which == "p":
        exact = np.array([[gaussian_kernel(DensityQuery(args.d, float(t), float(r)))
                           for r in rs] for t in ts])
        summary["gaussian_max_gap"] = float(
            np.max(np.abs(tables[routes[0]].values - exact))
        )
    writer.write_json("summary.json", summary)
    writer.close()
    print(json.dumps(_jsonable(summary)))
    return 0


def cmd_subordinator(args) -> int:
    exp = builtin_exponent(args.spec)
    ss = _parse_grid(args.s_grid)
    config = {"cmd": "subordinator", "spec": args.spec, "t": args.t,
              "s_grid": args.s_grid, "draws": args.draws, "seed": args.seed}
    writer = RunWriter(args.out, config)
    law = SubordinatorLaw(exp, args.t)
    path = writer.path("law.csv")
    with open(path, "w") as fh:
        fh.write("s,density_T,density_S,cdf_T\n")
        for s in ss:
            fh.write(f"{s!r},{law.density_T(float(s))!r},"
                     f"{law.density_S(float(s))!r},{law.cdf_T(float(s))!r}\n")
    writer.register_file(path)
    if args.draws:
        if exp.spec.form != "stable":
            raise CapabilityError("exact draws exist for the stable family only")
        draws = sample_stable_T(
            StableSamplerConfig(alpha=exp.spec.alpha, seed=args.seed,
                                count=args.draws), args.t)
        dpath = writer.path("draws.f64le")
        dump_draws(dpath, draws)
        writer.register_file(dpath)
        writer.write_json("draws.meta.json", {
            "count": args.draws, "dtype": "<f8", "t": args.t,
            "alpha": exp.spec.alpha, "seed": args.seed,
        })
    writer.close()
    print(f"law table over {len(ss)} points written to {writer.outdir}")
    return 0


def cmd_scaling(args) -> int:
    exp = builtin_exponent(args.spec)
    if args.target == "phi":
        fn = lambda lam: exp.phi(lam)
    elif args.target == "H":
        fn = lambda lam: eval_H(exp, lam)
    else:
        raise ArgumentError(f"unknown scaling target {args.target!r}")
    config = {"cmd": "scaling", "spec": args.spec, "target": args.target,
              "a": args.a}
    writer = RunWriter(args.out, config)
    witness = certify_scaling(fn, a=args.a)
    writer.write_json("witness.json", witness.to_json())
    writer.close()
    print(witness.dumps())
    return 0


def cmd_green(args) -> int:
    exp = builtin_exponent(args.spec)
    rs = _parse_grid(args.r_grid)
    config = {"cmd": "green", "spec": args.spec, "d": args.d,
              "r_grid": args.r_grid}
    writer = RunWriter(args.out, config)
    rows = []
    for r in rs:
        g = free_green(exp, args.d, float(r))
        env = green_envelope_free(exp, args.d, float(r))
        rows.append((float(r), g, env, g / env))
    path = writer.path("green.csv")
    with open(path, "w") as fh:
        fh.write("r,green,envelope,ratio\n")
        for row in rows:
            fh.write(",".join(repr(v) for v in row) + "\n")
    writer.register_file(path)
    writer.write_svg("green.svg", svgplot.line_plot_svg, rs,
                     {"green": [r[1] for r in rows],
                      "envelope": [r[2] for r in rows]},
                     title=f"free Green function, {args.spec}, d={args.d}")
    ratios = np.array([r[3] for r in rows])
    summary = {"spread": float(ratios.max() / ratios.min()),
               "band": [float(ratios.min()), float(ratios.max())]}
    writer.write_json("summary.json", summary)
    writer.close()
    print(json.dumps(_jsonable(summary)))
    return 0


def cmd_fixtures(args) -> int:
    store = Path(args.store)
    if args.action == "update":
        values = fixtures.update_store(store, qtol_scale=args.qtol_scale)
        print(f"froze {len(values)} fixtures into {store}")
        return 0
    if not store.exists():
        raise ArgumentError(f"no fixture store at {store}")
    offenders = fixtures.check_store(store, qtol_scale=args.qtol_scale)
    if offenders:
        for key, reason in offenders:
            print(f"DRIFT {key}: {reason}")
        return 1
    print(f"all {len(fixtures.FIXTURE_ORACLES)} fixtures match {store}")
    return 0


def _mc_budget(args):
    if args.budget == "full":
        return {"n_paths": 10**6, "dt": 1e-4}
    return {"n_paths": 10**5, "dt": 2e-4}


def cmd_verify(args) -> int:
    check = args.check
    config = {"cmd": "verify", "check": check, "spec": args.spec, "d": args.d,
              "seed": args.seed, "budget": args.budget}
    writer = RunWriter(args.out, config)
    ok = False
    try:
        if check == "dual-route":
            out = experiments.dual_route_check(args.spec, args.d)
            writer.write_json("report.json", {
                "max_rel_gap": out["max_rel_gap"], "ok": out["ok"]})
            ok = out["ok"]
        elif check in ("whole-space-local", "whole-space-global"):
            out = experiments.whole_space_check(
                args.spec, args.d, global_form=(check == "whole-space-global"))
            writer.write_json("report.json", {
                "reports": {k: v.to_json() for k, v in out["reports"].items()},
                "spread": out["spread"], "regime_ok": out["regime_ok"],
                "ok": out["ok"]})
            table = out["table"]
            writer.write_svg("regime.svg", svgplot.heatmap_svg, table.ts,
                             table.rs, out["regime"]["labels"],
                             title=f"regime map {args.spec} d={args.d}",
                             categorical=True)
            writer.write_csv_table("p_fourier.csv", table)
            ok = out["ok"]
        elif check == "jump-density":
            out = experiments.jump_density_check(args.spec, args.d)
            writer.write_json("report.json", {
                "reports": {k: v.to_json() for k, v in out["reports"].items()},
                "spread": out["spread"], "gauss_bound_ok": out["gauss_bound_ok"],
                "ok": out["ok"]})
            ok = out["ok"]
        elif check == "asymptotics":
            spec = args.spec
            if args.which is not None:
                spec = "log-stable-1.0" if args.which == 1 else "log-brownian"
            out = experiments.asymptotics_check(spec)
            writer.write_json("report.json", out)
            ok = out["ok"]
        elif check == "free-green":
            out = experiments.free_green_check(args.spec, max(args.d, 3))
            payload = {"band": out["band"], "spread": out["spread"],
                       "ok": out["ok"]}
            if args.spec == "log-brownian":
                shape = experiments.free_green_log_shape_check()
                payload["log_shape"] = {"spread": shape["spread"],
                                        "ok": shape["ok"]}
                payload["ok"] = bool(payload["ok"] and shape["ok"])
            writer.write_json("report.json", payload)
            writer.write_svg("green_ratio.svg", svgplot.line_plot_svg,
                             out["rs"], {"ratio": out["ratios"]},
                             title="Green/envelope ratio", logy=False)
            ok = payload["ok"]
        elif check == "lower-route":
            out = experiments.dirichlet_lower_route_check(args.spec)
            writer.write_json("report.json", out)
            ok = out["ok"]
        elif check == "dirichlet-bounded":
            budget = _mc_budget(args)
            rec = experiments.run_dirichlet_mc(args.spec, seed=args.seed,
                                               **budget)
            out = experiments.dirichlet_mc_check(rec, args.spec)
            writer.write_json("report.json", {
                "upper_constant": out["upper_constant"],
                "lower_constant": out["lower_constant"],
                "spread": out["spread"], "ok": out["ok"]})
            ok = out["ok"]
        elif check == "dirichlet-unbounded":
            out = _verify_unbounded(args)
            writer.write_json("report.json", out)
            ok = out["ok"]
        elif check == "dirichlet-green":
            budget = _mc_budget(args)
            rec = experiments.run_dirichlet_mc(args.spec, seed=args.seed,
                                               **budget)
            out = experiments.dirichlet_green_check(rec)
            writer.write_json("report.json", {
                "band": out["band"], "spread": out["spread"],
                "lambda1": out["lambda1"], "ok": out["ok"]})
            ok = out["ok"]
        elif check == "spectral":
            budget = _mc_budget(args)
            rec = experiments.run_dirichlet_mc(args.spec, seed=args.seed,
                                               **budget)
            from .montecarlo import PathConfig, simulate_paths
            from .domains import DomainSpec
            bm_cfg = PathConfig(d=1, dt=budget["dt"], horizon=0.5,
                                n_paths=budget["n_paths"], seed=args.seed + 1,
                                jump_scale=0.0)
            bm = simulate_paths(bm_cfg, DomainSpec.interval(0.0, 1.0), [0.5])
            out = experiments.lambda1_check(rec, bm)
            writer.write_json("report.json", {
                "bm_lambda1": out["bm_lambda1"], "lambda1": out["lambda1"],
                "factor_band": out["factor_band"],
                "factor_spread": out["factor_spread"], "ok": out["ok"]})
            ok = out["ok"]
        elif check == "disconnected":
            budget = _mc_budget(args)
            out = experiments.disconnected_check(args.spec,
                                                 n_paths=budget["n_paths"],
                                                 seed=args.seed)
            writer.write_json("report.json", {
                "positive": out["positive"], "band": out["band"],
                "spread": out["spread"], "ok": out["ok"]})
            ok = out["ok"]
        else:
            raise ArgumentError(f"unknown check {check!r}")
    finally:
        writer.close()
    print(f"{check}: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def _verify_unbounded(args) -> dict:
    """Half-line Monte Carlo against the unbounded-domain envelope shape."""
    from .domains import DomainSpec
    from .envelopes import EnvelopeConstants, envelope_dirichlet
    from .montecarlo import PathConfig, estimate_killed_kernel, simulate_paths

    exp = builtin_exponent(args.spec)
    if exp.spec.form != "stable":
        raise CapabilityError("Monte Carlo verification needs the stable family")
    budget = _mc_budget(args)
    dom = DomainSpec.half_space(1)
    cfg = PathConfig(alpha=exp.spec.alpha, d=1, dt=budget["dt"], horizon=0.3,
                     n_paths=budget["n_paths"], seed=args.seed,
                     jump_scale=1.0, checkpoints=(0.05, 0.1, 0.25))
    rec = simulate_paths(cfg, dom, [0.5])
    k_up = EnvelopeConstants(side="upper")
    k_lo = EnvelopeConstants(side="lower")
    lo_r, up_r = [], []
    for t in (0.05, 0.1, 0.25):
        for y in (0.2, 0.5, 1.0, 1.5):
            v, se, _ = estimate_killed_kernel(rec, t, [y])
            up_r.append((v - 3.0 * se) / envelope_dirichlet(exp, t, [0.5], [y],
                                                            dom, k_up))
            lo_r.append((v + 3.0 * se) / envelope_dirichlet(exp, t, [0.5], [y],
                                                            dom, k_lo))
    c_up, c_lo = max(up_r), min(lo_r)
    return {"upper_constant": float(c_up), "lower_constant": float(c_lo),
            "spread": float(c_up / max(c_lo, 1e-300)),
            "ok": bool(c_lo > 0.0 and c_up / c_lo <= 100.0)}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sbmlab",
                                description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON file with defaults for the flags")
    sub = p.add_subparsers(dest="cmd", required=True)

    d = sub.add_parser("density", help="exact density tables")
    d.add_argument("--spec", default="stable-0.5")
    d.add_argument("--d", type=int, default=1)
    d.add_argument("--which", choices=("p", "q"), default="p")
    d.add_argument("--route", choices=("fourier", "subordination", "both"),
                   default="fourier")
    d.add_argument("--t-grid", default="0.05:2:5")
    d.add_argument("--r-grid", default="0:5:5")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", required=True)
    d.set_defaults(fn=cmd_density)

    v = sub.add_parser("verify", help="run a certification protocol")
    v.add_argument("check", choices=VERIFY_CHECKS)
    v.add_argument("--spec", default="stable-0.5")
    v.add_argument("--d", type=int, default=1)
    v.add_argument("--which", type=int, choices=(1, 2), default=None)
    v.add_argument("--seed", type=int, default=2024)
    v.add_argument("--budget", choices=("quick", "full"), default="quick")
    v.add_argument("--out", required=True)
    v.set_defaults(fn=cmd_verify)

    f = sub.add_parser("fixtures", help="freeze or check oracle values")
    f.add_argument("action", choices=("update", "check"))
    f.add_argument("--store", default="fixtures.json")
    f.add_argument("--qtol-scale", type=float, default=1.0)
    f.set_defaults(fn=cmd_fixtures)

    s = sub.add_parser("subordinator", help="subordinator law tables and draws")
    s.add_argument("--spec", default="stable-0.5")
    s.add_argument("--t", type=float, default=1.0)
    s.add_argument("--s-grid", default="0.01:100:40:log")
    s.add_argument("--draws", type=int, default=0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_subordinator)

    c = sub.add_parser("scaling", help="certify scaling bounds")
    c.add_argument("--spec", default="stable-0.5")
    c.add_argument("--target", choices=("phi", "H"), default="H")
    c.add_argument("--a", type=float, default=0.0)
    c.add_argument("--out", required=True)
    c.set_defaults(fn=cmd_scaling)

    g = sub.add_parser("green", help="free Green function table")
    g.add_argument("--spec", default="stable-0.5")
    g.add_argument("--d", type=int, default=3)
    g.add_argument("--r-grid", default="0.05:20:12:log")
    g.add_argument("--out", required=True)
    g.set_defaults(fn=cmd_green)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    if args.config:
        with open(args.config) as fh:
            overrides = json.load(fh)
        explicit = {str(a).lstrip("-").replace("-", "_")
                    for a in argv if str(a).startswith("--")}
        for key, val in overrides.items():
            attr = key.replace("-", "_")
            if hasattr(args, attr) and attr not in explicit:
                setattr(args, attr, val)
    try:
        return args.fn(args)
    except CapabilityError as exc:
        print(f"capability error: {exc}", file=sys.stderr)
        return 3
    except (ArgumentError, OSError, json.JSONDecodeError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except SbmlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
