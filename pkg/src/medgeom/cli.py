"""Command-line front end.

    medgeom describe  --data d.csv --var PD:mediator:0:4 ...
    medgeom fit       --data d.csv --y Y --m M --x X [--control C] [--alpha .05]
    medgeom classify  --fit-json fit.json | --data d.csv --y Y --m M --x X
    medgeom reduce    --data d.csv --y Y --m M --x X
    medgeom geometry  {critical,witness,scan,boundary} --n 50 --alpha .05
    medgeom simulate  [--config sim.json] [--set key=value] --out results/

Exit status: 0 on success, 1 on usage errors, 2 on data or model errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import geometry as geo
from .dataset import VariableSpec, describe, load_csv
from .errors import MedgeomError
from .estimation import FRAMEWORKS, MediationFit, ModelSpec, fit
from .reduction import canonical_reduce, coords_to_estimates, geometry_point
from .simulation import SimulationConfig, export_report, run_study
from .typology import classify, percent_contributions

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


@dataclass
class CliConfig:
    subcommand: str
    inputs: list = field(default_factory=list)
    model: ModelSpec = None
    ranges: dict = field(default_factory=dict)
    alpha: float = 0.05
    framework: str = "LSE-F"
    seed: int = None
    as_json: bool = False
    out: str = None


def _alpha(text):
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 1), got {text}")
    return v


def _range(text):
    try:
        name, rest = text.split("=", 1)
        lo, hi = rest.split(":")
        return name, (float(lo), float(hi))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected NAME=MIN:MAX, got {text!r}") from None


def _add_model_args(p, required=True):
    p.add_argument("--data", required=required, help="CSV file with a header row")
    p.add_argument("--y", help="outcome column")
    p.add_argument("--m", help="mediator column")
    p.add_argument("--x", help="treatment column")
    p.add_argument("--control", action="append", default=[], help="control column (repeatable)")
    p.add_argument("--range", action="append", default=[], type=_range, metavar="NAME=MIN:MAX",
                   help="conceptual range; listed columns are mapped to the 0-1 scale before fitting")


def _add_common(p):
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument("--json", action="store_true", help="machine-readable JSON on stdout")
    p.add_argument("--out", help="also write the output to this file")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="medgeom", description="Mediation tests, rejection-region geometry and simulation.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("describe", help="descriptive statistics on raw and 0-1 scales")
    p.add_argument("--data", required=True)
    p.add_argument("--var", action="append", required=True, type=VariableSpec.parse,
                   metavar="NAME[:ROLE:MIN:MAX]")
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")

    p = sub.add_parser("fit", help="fit the three regressions and classify")
    _add_model_args(p)
    p.add_argument("--framework", choices=FRAMEWORKS, default="LSE-F")
    _add_common(p)

    p = sub.add_parser("classify", help="typology verdict and percent contributions")
    _add_model_args(p, required=False)
    p.add_argument("--fit-json", help="JSON of precomputed fit statistics")
    p.add_argument("--framework", choices=FRAMEWORKS)
    _add_common(p)

    p = sub.add_parser("reduce", help="canonical coordinates of a no-controls dataset")
    _add_model_args(p)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")

    g = sub.add_parser("geometry", help="rejection-region geometry")
    gsub = g.add_subparsers(dest="action", required=True, parser_class=_Parser)

    def geo_common(q):
        q.add_argument("--n", type=int, required=True)
        _add_common(q)

    q = gsub.add_parser("critical", help="critical values r_crit, p_crit, z")
    geo_common(q)
    q = gsub.add_parser("witness", help="construct a point inside a named set of regions")
    geo_common(q)
    q.add_argument("--kind", choices=("indirect-only", "competitive", "sobel-io"), default="indirect-only")
    q.add_argument("--subtype", choices=("d-plementary", "d-petitive"), default="d-plementary")
    q.add_argument("--sign-abc", type=int, choices=(-1, 1))
    q = gsub.add_parser("scan", help="grid check that Ra, Rb, Rd imply Rc when abd > 0")
    geo_common(q)
    q.add_argument("--density", type=int, default=500)
    q = gsub.add_parser("boundary", help="boundary polylines for plotting")
    geo_common(q)
    q.add_argument("--r", type=float, required=True)
    q.add_argument("--p-max", type=float, required=True)
    q.add_argument("--count", type=int, default=200)
    q.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("simulate", help="Monte Carlo study")
    p.add_argument("--config", help="JSON file or plain key = value lines")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one setting")
    p.add_argument("--replicates", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--framework", action="append", choices=FRAMEWORKS, dest="frameworks")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", choices=("json", "csv", "both"), default="json")
    p.add_argument("--quiet", action="store_true", help="no progress on stderr")
    p.add_argument("--json", action="store_true")
    return parser


def _to_config(ns) -> CliConfig:
    cfg = CliConfig(subcommand=ns.command)
    cfg.alpha = getattr(ns, "alpha", 0.05)
    cfg.framework = getattr(ns, "framework", None) or "LSE-F"
    cfg.seed = getattr(ns, "seed", None)
    cfg.as_json = getattr(ns, "json", False)
    cfg.out = getattr(ns, "out", None)
    for attr in ("data", "fit_json", "config"):
        if getattr(ns, attr, None):
            cfg.inputs.append(getattr(ns, attr))
    cfg.ranges = dict(getattr(ns, "range", []) or [])
    if getattr(ns, "y", None) or getattr(ns, "m", None) or getattr(ns, "x", None):
        if not (ns.y and ns.m and ns.x):
            raise UsageError("--y, --m and --x must be given together")
        cfg.model = ModelSpec(ns.y, ns.m, ns.x, tuple(ns.control), cfg.alpha)
    return cfg


# ------------------------------------------------------------ formatting


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if math.isnan(v) else (str(v) if math.isinf(v) else v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _fmt(v):
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.6g}"
    return str(v)


def _table(rows, title=None) -> str:
    lines = [title] if title else []
    width = max((len(str(k)) for k, _ in rows), default=0)
    lines += [f"  {str(k).ljust(width)}  {_fmt(v)}" for k, v in rows]
    return "\n".join(lines)


def _emit(cfg: CliConfig, payload: dict, text: str):
    out = json.dumps(_clean(payload), indent=2, allow_nan=False) if cfg.as_json else text
    print(out)
    if cfg.out:
        Path(cfg.out).write_text(out + "\n")


# -------------------------------------------------------------- commands


def _load_model_data(cfg: CliConfig):
    if cfg.model is None:
        raise UsageError("--y, --m and --x are required")
    specs = [VariableSpec(v) for v in cfg.model.variables]
    ds = load_csv(cfg.inputs[0], specs)
    if cfg.ranges:
        unknown = set(cfg.ranges) - set(cfg.model.variables)
        if unknown:
            raise UsageError(f"--range names unknown model column(s): {sorted(unknown)}")
        ds = ds.percentized([VariableSpec(k, "control", lo, hi) for k, (lo, hi) in cfg.ranges.items()])
    return ds


def _verdict_payload(f: MediationFit, alpha, framework):
    verdict = classify(f, alpha, framework)
    try:
        contrib = percent_contributions(f).to_dict()
    except MedgeomError as exc:
        contrib = {"error": str(exc)}
    return verdict, contrib


def cmd_describe(cfg, ns):
    ds = load_csv(ns.data, ns.var)
    summary = describe(ds, ns.var)
    if ns.json or ns.format == "json":
        text = summary.to_json()
    elif ns.format == "csv":
        text = summary.to_csv().rstrip("\n")
    else:
        head = f"{'variable':<12}{'n':>6}{'raw_mean':>11}{'raw_sd':>10}{'ps_min':>9}{'ps_max':>9}{'ps_mean':>9}{'ps_sd':>9}"
        lines = [f"n_raw = {summary.n_raw}", head]
        for r in summary.rows:
            if r.empty:
                lines.append(f"{r.variable:<12}{0:>6}  (no observations)")
                continue
            lines.append(f"{r.variable:<12}{r.n:>6}{r.raw_mean:>11.3f}{r.raw_sd:>10.3f}"
                         f"{r.ps_min:>9.2f}{r.ps_max:>9.2f}{r.ps_mean:>9.2f}{r.ps_sd:>9.2f}")
        text = "\n".join(lines)
    print(text)
    if ns.out:
        Path(ns.out).write_text(text + "\n")
    return EXIT_OK


def cmd_fit(cfg, ns):
    ds = _load_model_data(cfg)
    f = fit(ds, cfg.model, cfg.framework)
    verdict, contrib = _verdict_payload(f, cfg.alpha, cfg.framework)
    payload = {"fit": f.to_dict(), "verdict": verdict.to_dict(), "contributions": contrib}
    keys = ("a_hat", "b_hat", "d_hat", "c_hat", "p_a", "p_b", "p_d", "p_c", "sobel_S", "p_ab", "n_used")
    text = "\n".join([
        _table([(k, getattr(f, k)) for k in keys], f"{cfg.framework} fit ({cfg.model.outcome} ~ {cfg.model.mediator} + {cfg.model.treatment})"),
        _table(list(verdict.to_dict().items()), f"verdict at alpha = {cfg.alpha}"),
    ])
    _emit(cfg, payload, text)
    return EXIT_OK


def cmd_classify(cfg, ns):
    if ns.fit_json:
        f = MediationFit.from_dict(json.loads(Path(ns.fit_json).read_text()))
    elif ns.data:
        f = fit(_load_model_data(cfg), cfg.model, ns.framework or "LSE-F")
    else:
        raise UsageError("classify needs --fit-json or --data with --y/--m/--x")
    framework = ns.framework or f.framework
    verdict, contrib = _verdict_payload(f, cfg.alpha, framework)
    payload = {"verdict": verdict.to_dict(), "contributions": contrib}
    rows = list(verdict.to_dict().items())
    if "error" not in contrib:
        rows += [(k, 100.0 * contrib[k]) for k in ("cp_a", "cp_b", "cp_ab", "cp_d", "cp_c")]
    _emit(cfg, payload, _table(rows, f"{verdict.label} (contributions in %)"))
    return EXIT_OK


def cmd_reduce(cfg, ns):
    ds = _load_model_data(cfg)
    m = cfg.model
    cc = canonical_reduce(ds, m.outcome, m.mediator, m.treatment, m.controls)
    pt = geometry_point(cc)
    a, b, c, d = coords_to_estimates(cc)
    payload = {"coords": cc.to_dict(), "point": pt.to_dict(), "estimates": {"a_hat": a, "b_hat": b, "c_hat": c, "d_hat": d}}
    _emit(cfg, payload, _table(list(cc.to_dict().items()) + list(pt.to_dict().items()), "canonical coordinates"))
    return EXIT_OK


def cmd_geometry(cfg, ns):
    n, alpha = ns.n, ns.alpha
    cv = geo.critical_values(n, alpha)
    if ns.action == "critical":
        _emit(cfg, cv.to_dict(), _table(list(cv.to_dict().items()), "critical values"))
    elif ns.action == "witness":
        if ns.kind == "indirect-only":
            pt = geo.witness_indirect_only(n, alpha, ns.subtype, ns.sign_abc)
            claims = geo.INDIRECT_ONLY
        elif ns.kind == "competitive":
            pt = geo.witness_competitive(n, alpha, ns.sign_abc or 1)
            claims = geo.COMPETITIVE + ("Rab_sobel",)
        else:
            pt = geo.witness_sobel_io(n, alpha)
            claims = geo.SOBEL_INDIRECT_ONLY
        member = {c: geo.in_region(pt, c, cv) for c in claims}
        payload = {"point": pt.to_dict(), "claims": member, "critical": cv.to_dict()}
        _emit(cfg, payload, _table(list(pt.to_dict().items()) + list(member.items()), f"{ns.kind} witness"))
    elif ns.action == "scan":
        rep = geo.verify_complementary_superfluous(n, alpha, ns.density)
        d = rep.to_dict()
        _emit(cfg, d, _table([(k, d[k]) for k in ("n", "alpha", "grid_density", "points_scanned",
                                                   "points_in_ab_d", "violations", "passed")], "superfluity scan"))
    else:
        bs = geo.region_boundary_samples(n, alpha, ns.r, ns.p_max, ns.count)
        text = bs.to_json() if (ns.json or ns.format == "json") else bs.to_csv().rstrip("\n")
        print(text)
        if ns.out:
            Path(ns.out).write_text(text + "\n")
    return EXIT_OK


def _parse_value(text):
    t = text.strip()
    try:
        return json.loads(t)
    except json.JSONDecodeError:
        return t


def read_sim_config(path) -> dict:
    """JSON object, or ``key = value`` lines (``#`` comments allowed)."""
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return json.loads(text)
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise MedgeomError(f"{path}:{lineno}: expected key = value")
        k, v = line.split("=", 1)
        out[k.strip()] = _parse_value(v)
    return out


def _normalize_settings(d: dict) -> dict:
    d = dict(d)
    if isinstance(d.get("frameworks"), str):
        d["frameworks"] = [s.strip() for s in d["frameworks"].split(",") if s.strip()]
    return d


def cmd_simulate(cfg, ns):
    settings = read_sim_config(ns.config) if ns.config else {}
    for item in ns.set:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        settings[k.strip()] = _parse_value(v)
    for key in ("replicates", "seed", "workers", "frameworks"):
        val = getattr(ns, key)
        if val is not None:
            settings[key] = val
    config = SimulationConfig.from_dict(_normalize_settings(settings))

    def progress(done, total):
        if not ns.quiet:
            print(f"\rreplicates {done}/{total}", end="" if done < total else "\n", file=sys.stderr, flush=True)

    report = run_study(config, progress)
    out = Path(ns.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if ns.format in ("json", "both"):
        written += export_report(report, out / "report.json", "json")
    if ns.format in ("csv", "both"):
        written += export_report(report, out / "curves.csv", "csv")
    summary = {
        "files": [str(p) for p in written],
        "replicates": config.replicates,
        "diagnostics": report.diagnostics,
        "proportion_at_0.1": {fw: report.proportion_at(fw, "indirect_only", 0.1) for fw in config.frameworks},
    }
    rows = [("files", ", ".join(summary["files"]))]
    rows += [(f"P(p_c >= .1 | indirect-only) {fw}", v) for fw, v in summary["proportion_at_0.1"].items()]
    cfg.out = None
    _emit(cfg, summary, _table(rows, "simulation"))
    return EXIT_OK


COMMANDS = {
    "describe": cmd_describe,
    "fit": cmd_fit,
    "classify": cmd_classify,
    "reduce": cmd_reduce,
    "geometry": cmd_geometry,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        cfg = _to_config(ns)
        return COMMANDS[ns.command](cfg, ns)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (MedgeomError, OSError, json.JSONDecodeError) as exc:
        print(f"medgeom: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
