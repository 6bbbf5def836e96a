"""Monte Carlo study of total-effect test errors.

Each replicate draws ``n ~ Unif{10..100}``, ``(i_M, i_Y, a, b, d) ~
U[-1, 1]^5``, ``X ~ N(0, 1)`` and noise variances from Inv-Gamma(1, 1),
then fits the three regressions by least squares (giving the F and Sobel
frameworks) and by least absolute deviations. Curves report, over an alpha
grid, the share of replicates meeting a mediation condition whose
total-effect p-value is at least alpha.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import distributions as dist
from .dataset import Dataset
from .errors import DomainError, MedgeomError
from .estimation import FRAMEWORKS, fit_lad_columns, fit_lse_columns

SCHEMA_VERSION = 1
PARAM_NAMES = ("i_M", "i_Y", "a", "b", "d")
PVALUE_NAMES = ("p_a", "p_b", "p_d", "p_c", "p_ab")
CONDITIONS = ("indirect_only", "indirect_only_abd_pos", "indirect_only_abd_neg", "competitive")
MAX_ATTEMPTS = 100


@dataclass
class SimulationConfig:
    replicates: int = 10000
    n_min: int = 10
    n_max: int = 100
    param_lo: float = -1.0
    param_hi: float = 1.0
    seed: int = 20240601
    frameworks: tuple = FRAMEWORKS
    alpha_count: int = 1000
    alpha_lo: float = 0.01
    alpha_hi: float = 0.99
    workers: int = 1

    def __post_init__(self):
        self.frameworks = tuple(self.frameworks)
        if self.replicates < 1:
            raise DomainError("replicates must be at least 1")
        if not 2 <= self.n_min <= self.n_max:
            raise DomainError(f"need 2 <= n_min <= n_max, got {self.n_min}, {self.n_max}")
        if self.param_lo > self.param_hi:
            raise DomainError("param_lo must not exceed param_hi")
        unknown = set(self.frameworks) - set(FRAMEWORKS)
        if unknown or not self.frameworks:
            raise DomainError(f"frameworks must be a non-empty subset of {FRAMEWORKS}")
        if not 0.0 < self.alpha_lo <= self.alpha_hi < 1.0:
            raise DomainError("alpha grid must lie inside (0, 1)")
        if self.alpha_count < 1:
            raise DomainError("alpha_count must be at least 1")
        if self.workers < 1:
            raise DomainError("workers must be at least 1")

    def alpha_grid(self) -> np.ndarray:
        return np.linspace(self.alpha_lo, self.alpha_hi, self.alpha_count)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["frameworks"] = list(self.frameworks)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "SimulationConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown simulation setting(s): {sorted(unknown)}")
        return cls(**data)


@dataclass
class Replicate:
    dataset: Dataset
    n: int
    params: dict
    sigma2_M: float
    sigma2_Y: float


def generate_replicate(rng: dist.RngStream, config: SimulationConfig = None, params=None, sigma2=None) -> Replicate:
    """Draw one dataset with columns ``X, M, Y``.

    ``params`` (a mapping over ``i_M, i_Y, a, b, d``) and ``sigma2`` (a
    pair of noise variances) override the random draws; the draw sequence
    is unchanged so overrides do not shift other values.
    """
    cfg = config or SimulationConfig()
    n = dist.sample_uniform_int(cfg.n_min, cfg.n_max, rng)
    theta = dist.sample_uniform_real(cfg.param_lo, cfg.param_hi, rng, size=5)
    drawn = dict(zip(PARAM_NAMES, (float(v) for v in theta)))
    if params:
        drawn.update({k: float(v) for k, v in params.items()})
    s2 = dist.sample_inv_gamma_1_1(rng, size=2)
    s2_m, s2_y = (float(v) for v in (sigma2 if sigma2 is not None else s2))
    x = dist.sample_std_normal(rng, size=n)
    e_m = dist.sample_std_normal(rng, size=n)
    e_y = dist.sample_std_normal(rng, size=n)
    m = drawn["i_M"] + drawn["a"] * x + math.sqrt(s2_m) * e_m
    y = drawn["i_Y"] + drawn["b"] * m + drawn["d"] * x + math.sqrt(s2_y) * e_y
    return Replicate(Dataset.from_arrays(X=x, M=m, Y=y), n, drawn, s2_m, s2_y)


@dataclass
class ReplicateRecord:
    index: int
    n: int
    params: dict
    sigma2_M: float
    sigma2_Y: float
    attempts: int
    pvalues: dict
    signs: dict

    def to_dict(self) -> dict:
        return asdict(self)


def _fit_frameworks(rep: Replicate, frameworks):
    x, m, y = rep.dataset["X"], rep.dataset["M"], rep.dataset["Y"]
    ones = np.ones(rep.n)
    pvalues, signs = {}, {}
    if "LSE-F" in frameworks or "LSE-Sobel" in frameworks:
        f = fit_lse_columns(ones, x, m, y)
        for fw in ("LSE-F", "LSE-Sobel"):
            if fw in frameworks:
                pvalues[fw] = {k: float(getattr(f, k)) for k in PVALUE_NAMES}
                signs[fw] = (f.sign_abd, f.sign_abc)
    if "LAD-Z" in frameworks:
        f = fit_lad_columns(ones, x, m, y)
        pvalues["LAD-Z"] = {k: float(getattr(f, k)) for k in PVALUE_NAMES}
        signs["LAD-Z"] = (f.sign_abd, f.sign_abc)
    return pvalues, signs


def run_replicate(config: SimulationConfig, index: int, failures: dict = None) -> ReplicateRecord:
    """Generate and fit replicate ``index``; failed fits are redrawn.

    Attempt ``k > 0`` uses substream ``k`` of the replicate's stream.
    """
    base = dist.RngStream(config.seed, index)
    for attempt in range(MAX_ATTEMPTS):
        rng = base if attempt == 0 else base.substream(attempt)
        rep = generate_replicate(rng, config)
        try:
            pvalues, signs = _fit_frameworks(rep, config.frameworks)
        except MedgeomError as exc:
            if failures is not None:
                key = type(exc).__name__
                failures[key] = failures.get(key, 0) + 1
            continue
        return ReplicateRecord(index, rep.n, rep.params, rep.sigma2_M, rep.sigma2_Y, attempt + 1, pvalues, signs)
    raise MedgeomError(f"replicate {index} failed {MAX_ATTEMPTS} times")


def _run_chunk(config_dict, start, stop):
    config = SimulationConfig.from_dict(config_dict)
    failures = {}
    records = [run_replicate(config, i, failures) for i in range(start, stop)]
    return records, failures


@dataclass
class Curve:
    """Counts over the alpha grid; ``proportion`` is NaN where ``denominator`` is 0."""

    denominator: np.ndarray
    erroneous: np.ndarray

    @property
    def proportion(self) -> np.ndarray:
        den = self.denominator.astype(float)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(den > 0, self.erroneous / np.where(den > 0, den, 1.0), np.nan)


@dataclass
class SimulationReport:
    config: SimulationConfig
    alpha_grid: np.ndarray
    records: list
    curves: dict
    diagnostics: dict = field(default_factory=dict)

    def curve(self, framework, condition) -> Curve:
        return self.curves[framework][condition]

    def proportion_at(self, framework, condition, alpha) -> float:
        """Proportion at the grid point nearest ``alpha``."""
        j = int(np.argmin(np.abs(self.alpha_grid - alpha)))
        return float(self.curves[framework][condition].proportion[j])

    def pvalue_matrix(self, framework) -> dict:
        return {k: np.array([r.pvalues[framework][k] for r in self.records]) for k in PVALUE_NAMES}

    def sign_vector(self, framework, which="abd") -> np.ndarray:
        j = 0 if which == "abd" else 1
        return np.array([r.signs[framework][j] for r in self.records], dtype=int)


def condition_masks(pv: dict, sign_abd: np.ndarray, alpha: float, framework: str) -> dict:
    """Boolean masks of the study's conditions at one level."""
    if framework == "LSE-Sobel":
        ab_sig = pv["p_ab"] < alpha
    else:
        ab_sig = (pv["p_a"] < alpha) & (pv["p_b"] < alpha)
    d_sig = pv["p_d"] < alpha
    io = ab_sig & ~d_sig
    return {
        "indirect_only": io,
        "indirect_only_abd_pos": io & (sign_abd > 0),
        "indirect_only_abd_neg": io & (sign_abd < 0),
        "competitive": ab_sig & d_sig & (sign_abd < 0),
    }


def build_curves(records, alpha_grid, frameworks) -> dict:
    out = {}
    a = np.asarray(alpha_grid)[:, None]
    for fw in frameworks:
        pv = {k: np.array([r.pvalues[fw][k] for r in records])[None, :] for k in PVALUE_NAMES}
        s_abd = np.array([r.signs[fw][0] for r in records])[None, :]
        masks = condition_masks(pv, s_abd, a, fw)
        total_not_sig = pv["p_c"] >= a
        out[fw] = {
            name: Curve(mask.sum(axis=1), (mask & total_not_sig).sum(axis=1))
            for name, mask in masks.items()
        }
    return out


def run_study(config: SimulationConfig = None, progress=None) -> SimulationReport:
    """Run every replicate and aggregate the conditional curves.

    Output depends only on ``config`` minus ``workers``: replicate ``i``
    always uses stream ``(seed, i)`` and chunks are merged in index order.
    ``progress``, if given, is called with ``(done, total)``.
    """
    config = config or SimulationConfig()
    total = config.replicates
    chunk = max(1, min(500, -(-total // (4 * config.workers))))
    bounds = [(s, min(s + chunk, total)) for s in range(0, total, chunk)]
    records, failures = [], {}

    def absorb(res):
        recs, fails = res
        records.extend(recs)
        for k, v in fails.items():
            failures[k] = failures.get(k, 0) + v
        if progress:
            progress(len(records), total)

    cfg_dict = config.to_dict()
    if config.workers == 1:
        for s, e in bounds:
            absorb(_run_chunk(cfg_dict, s, e))
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            for res in pool.map(_run_chunk, [cfg_dict] * len(bounds), *zip(*bounds)):
                absorb(res)

    grid = config.alpha_grid()
    regenerated = sum(r.attempts - 1 for r in records)
    diagnostics = {
        "regenerated_replicates": int(sum(1 for r in records if r.attempts > 1)),
        "regeneration_attempts": int(regenerated),
        "failures_by_type": dict(sorted(failures.items())),
    }
    return SimulationReport(config, grid, records, build_curves(records, grid, config.frameworks), diagnostics)


def complementary_sobel_trend(report: SimulationReport, alpha: float = 0.05,
                              buckets=((10, 30), (40, 70), (80, 100))) -> list:
    """Share of ``abd > 0`` replicates in Rab_sobel, Rd and not Rc, per n bucket.

    Uses the least-squares fits (Sobel indirect test). Returns one dict per
    bucket with the count, the denominator and the proportion.
    """
    fw = "LSE-Sobel" if "LSE-Sobel" in report.config.frameworks else "LSE-F"
    pv = report.pvalue_matrix(fw)
    s_abd = report.sign_vector(fw, "abd")
    n = np.array([r.n for r in report.records])
    hit = (pv["p_ab"] < alpha) & (pv["p_d"] < alpha) & (pv["p_c"] >= alpha)
    out = []
    for lo, hi in buckets:
        sel = (n >= lo) & (n <= hi) & (s_abd > 0)
        den = int(sel.sum())
        num = int((hit & sel).sum())
        out.append({"n_lo": lo, "n_hi": hi, "count": num, "denominator": den,
                    "proportion": num / den if den else math.nan})
    return out


# ---------------------------------------------------------------- export

CURVE_COLUMNS = ("framework", "condition", "alpha", "denominator", "erroneous", "proportion")
RECORD_COLUMNS = ("index", "n", *PARAM_NAMES, "sigma2_M", "sigma2_Y", "attempts")


def _num(v):
    if isinstance(v, float) and math.isnan(v):
        return None
    return v


def report_to_dict(report: SimulationReport) -> dict:
    curves = {}
    for fw, conds in report.curves.items():
        curves[fw] = {
            name: {
                "denominator": c.denominator.tolist(),
                "erroneous": c.erroneous.tolist(),
                "proportion": [_num(float(v)) for v in c.proportion],
            }
            for name, c in conds.items()
        }
    return {
        "schema_version": SCHEMA_VERSION,
        "config": report.config.to_dict(),
        "alpha_grid": report.alpha_grid.tolist(),
        "curves": curves,
        "records": [
            {**r.to_dict(), "pvalues": {fw: {k: _num(v) for k, v in pv.items()} for fw, pv in r.pvalues.items()},
             "signs": {fw: list(s) for fw, s in r.signs.items()}}
            for r in report.records
        ],
        "diagnostics": report.diagnostics,
    }


def report_from_dict(data: dict) -> SimulationReport:
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise DomainError(f"unsupported report schema_version {version!r}")
    config = SimulationConfig.from_dict(data["config"])
    records = [
        ReplicateRecord(
            index=r["index"], n=r["n"], params=r["params"], sigma2_M=r["sigma2_M"], sigma2_Y=r["sigma2_Y"],
            attempts=r["attempts"],
            pvalues={fw: {k: (math.nan if v is None else v) for k, v in pv.items()} for fw, pv in r["pvalues"].items()},
            signs={fw: tuple(s) for fw, s in r["signs"].items()},
        )
        for r in data["records"]
    ]
    curves = {
        fw: {name: Curve(np.array(c["denominator"], dtype=np.int64), np.array(c["erroneous"], dtype=np.int64))
             for name, c in conds.items()}
        for fw, conds in data["curves"].items()
    }
    return SimulationReport(config, np.array(data["alpha_grid"], dtype=float), records, curves, data.get("diagnostics", {}))


def _csv_paths(path: Path):
    stem = path.with_suffix("")
    return path, Path(f"{stem}_records.csv"), Path(f"{stem}_meta.json")


def export_report(report: SimulationReport, path, format: str = "json") -> list:
    """Write ``report`` to ``path``; returns the files written.

    JSON is a single document. CSV writes the curves to ``path`` (one row
    per framework, condition and alpha), the records to
    ``<stem>_records.csv`` and the config and schema version to
    ``<stem>_meta.json``.
    """
    path = Path(path)
    fmt = format.lower()
    if fmt == "json":
        path.write_text(json.dumps(report_to_dict(report), indent=1, allow_nan=False))
        return [path]
    if fmt != "csv":
        raise DomainError(f"format must be 'csv' or 'json', got {format!r}")
    curves_path, records_path, meta_path = _csv_paths(path)
    with curves_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_COLUMNS)
        for fw, conds in report.curves.items():
            for name, c in conds.items():
                prop = c.proportion
                for j, a in enumerate(report.alpha_grid):
                    w.writerow([fw, name, repr(float(a)), int(c.denominator[j]), int(c.erroneous[j]),
                                "" if math.isnan(prop[j]) else repr(float(prop[j]))])
    fws = list(report.config.frameworks)
    with records_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*RECORD_COLUMNS] + [f"{fw}:{k}" for fw in fws for k in PVALUE_NAMES]
                   + [f"{fw}:{s}" for fw in fws for s in ("sign_abd", "sign_abc")])
        for r in report.records:
            row = [r.index, r.n, *(repr(r.params[k]) for k in PARAM_NAMES), repr(r.sigma2_M), repr(r.sigma2_Y), r.attempts]
            row += [repr(r.pvalues[fw][k]) for fw in fws for k in PVALUE_NAMES]
            row += [s for fw in fws for s in r.signs[fw]]
            w.writerow(row)
    meta = {"schema_version": SCHEMA_VERSION, "config": report.config.to_dict(), "diagnostics": report.diagnostics}
    meta_path.write_text(json.dumps(meta, indent=2))
    return [curves_path, records_path, meta_path]


def import_report(path, format: str = None) -> SimulationReport:
    """Read a report written by :func:`export_report`."""
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    if fmt == "json":
        return report_from_dict(json.loads(path.read_text()))
    if fmt != "csv":
        raise DomainError(f"cannot infer report format from {path}")
    curves_path, records_path, meta_path = _csv_paths(path)
    meta = json.loads(meta_path.read_text())
    if meta.get("schema_version") != SCHEMA_VERSION:
        raise DomainError(f"unsupported report schema_version {meta.get('schema_version')!r}")
    config = SimulationConfig.from_dict(meta["config"])
    grid = config.alpha_grid()
    curves = {}
    with curves_path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    for fw in config.frameworks:
        curves[fw] = {}
        for name in CONDITIONS:
            sel = [r for r in rows if r["framework"] == fw and r["condition"] == name]
            curves[fw][name] = Curve(np.array([int(r["denominator"]) for r in sel], dtype=np.int64),
                                     np.array([int(r["erroneous"]) for r in sel], dtype=np.int64))
            grid = np.array([float(r["alpha"]) for r in sel])
    records = []
    with records_path.open(newline="") as fh:
        for r in csv.DictReader(fh):
            fws = config.frameworks
            records.append(ReplicateRecord(
                index=int(r["index"]), n=int(r["n"]),
                params={k: float(r[k]) for k in PARAM_NAMES},
                sigma2_M=float(r["sigma2_M"]), sigma2_Y=float(r["sigma2_Y"]), attempts=int(r["attempts"]),
                pvalues={fw: {k: float(r[f"{fw}:{k}"]) for k in PVALUE_NAMES} for fw in fws},
                signs={fw: (int(r[f"{fw}:sign_abd"]), int(r[f"{fw}:sign_abc"])) for fw in fws},
            ))
    return SimulationReport(config, grid, records, curves, meta.get("diagnostics", {}))
