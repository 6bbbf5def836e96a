"""Tabular input: CSV loading, 0-1 percentization, descriptives and
listwise deletion."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DomainError, ParseError, SchemaError

ROLES = ("outcome", "mediator", "treatment", "control")
SUMMARY_COLUMNS = (
    "variable", "n", "raw_min", "raw_max", "raw_mean", "raw_sd",
    "ps_min", "ps_max", "ps_mean", "ps_sd",
)


@dataclass(frozen=True)
class VariableSpec:
    name: str
    role: str = "control"
    conceptual_min: float = 0.0
    conceptual_max: float = 1.0

    def __post_init__(self):
        if self.role not in ROLES:
            raise DomainError(f"unknown role {self.role!r} for {self.name}")
        if not self.conceptual_max > self.conceptual_min:
            raise DomainError(
                f"{self.name}: conceptual_max ({self.conceptual_max}) must exceed "
                f"conceptual_min ({self.conceptual_min})"
            )

    @classmethod
    def parse(cls, text: str) -> "VariableSpec":
        """Parse ``name[:role[:min:max]]``, e.g. ``PD:mediator:0:4``."""
        parts = text.split(":")
        if len(parts) == 1:
            return cls(parts[0])
        if len(parts) == 2:
            return cls(parts[0], parts[1])
        if len(parts) == 4:
            return cls(parts[0], parts[1], float(parts[2]), float(parts[3]))
        raise DomainError(f"cannot parse variable spec {text!r}")


@dataclass(frozen=True)
class Dataset:
    """Named float columns; missing entries are NaN."""

    columns: dict

    def __post_init__(self):
        cols = {k: np.asarray(v, dtype=float) for k, v in self.columns.items()}
        lengths = {len(v) for v in cols.values()}
        if len(lengths) > 1:
            raise DomainError(f"columns have unequal lengths: {sorted(lengths)}")
        for v in cols.values():
            v.setflags(write=False)
        object.__setattr__(self, "columns", cols)

    @classmethod
    def from_arrays(cls, **columns) -> "Dataset":
        return cls(dict(columns))

    @property
    def n_raw(self) -> int:
        for v in self.columns.values():
            return len(v)
        return 0

    @property
    def names(self) -> list:
        return list(self.columns)

    def __getitem__(self, name):
        try:
            return self.columns[name]
        except KeyError:
            raise SchemaError(f"dataset has no column {name!r}") from None

    def missing_mask(self, name) -> np.ndarray:
        return np.isnan(self[name])

    def select(self, names) -> "Dataset":
        return Dataset({k: self[k] for k in names})

    def percentized(self, specs) -> "Dataset":
        """Copy with each spec'd column mapped to its 0-1 conceptual scale."""
        cols = dict(self.columns)
        for s in specs:
            cols[s.name] = percentize(self[s.name], s.conceptual_min, s.conceptual_max)
        return Dataset(cols)


def _parse_cell(text, row, column):
    t = text.strip()
    if t == "" or t.upper() in ("NA", "NAN"):
        return math.nan
    try:
        return float(t)
    except ValueError:
        raise ParseError(
            f"non-numeric value {text!r} at row {row}, column {column!r}", row=row, column=column
        ) from None


def read_csv_text(text: str, specs=None) -> Dataset:
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise SchemaError("empty CSV: no header row") from None
    wanted = [s.name for s in specs] if specs else header
    missing = [w for w in wanted if w not in header]
    if missing:
        raise SchemaError(f"CSV lacks declared column(s): {', '.join(missing)}")
    index = {w: header.index(w) for w in wanted}
    values = {w: [] for w in wanted}
    # row numbers count the header as row 1, matching what a spreadsheet shows
    for rownum, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        for w, j in index.items():
            cell = row[j] if j < len(row) else ""
            values[w].append(_parse_cell(cell, rownum, w))
    return Dataset(values)


def load_csv(path, specs=None) -> Dataset:
    """Load a comma-separated UTF-8 file with a header row.

    Only the columns named in ``specs`` are read (all columns when ``specs``
    is None). Blank cells and ``NA`` become missing.
    """
    text = Path(path).read_text(encoding="utf-8-sig")
    return read_csv_text(text, specs)


def percentize(value, c_min: float, c_max: float):
    """Map a raw score onto its conceptual range: ``(value - c_min) / (c_max - c_min)``.

    Values outside ``[c_min, c_max]`` are not clamped.
    """
    if not c_max > c_min:
        raise DomainError(f"c_max ({c_max}) must exceed c_min ({c_min})")
    if np.ndim(value) == 0:
        return (float(value) - c_min) / (c_max - c_min)
    return (np.asarray(value, dtype=float) - c_min) / (c_max - c_min)


@dataclass
class VariableSummary:
    variable: str
    n: int
    raw_min: float = math.nan
    raw_max: float = math.nan
    raw_mean: float = math.nan
    raw_sd: float = math.nan
    ps_min: float = math.nan
    ps_max: float = math.nan
    ps_mean: float = math.nan
    ps_sd: float = math.nan
    empty: bool = False


@dataclass
class DescriptiveSummary:
    n_raw: int
    rows: list = field(default_factory=list)

    def __getitem__(self, name) -> VariableSummary:
        for r in self.rows:
            if r.variable == name:
                return r
        raise KeyError(name)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for r in self.rows:
            w.writerow([r.variable, r.n] + [_fmt(getattr(r, c)) for c in SUMMARY_COLUMNS[2:]])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = []
        for r in self.rows:
            d = asdict(r)
            rows.append({c: _json_num(d[c]) for c in SUMMARY_COLUMNS} | {"empty": r.empty})
        return json.dumps({"n_raw": self.n_raw, "columns": list(SUMMARY_COLUMNS), "rows": rows}, indent=2)


def _fmt(v):
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else repr(float(v))


def _json_num(v):
    if isinstance(v, float) and math.isnan(v):
        return None
    return v


def _stats(x):
    sd = float(np.std(x, ddof=1)) if len(x) > 1 else 0.0
    return float(np.min(x)), float(np.max(x)), float(np.mean(x)), sd


def describe(ds: Dataset, specs) -> DescriptiveSummary:
    """Per-variable N, min, max, mean and sample SD on raw and 0-1 scales."""
    out = DescriptiveSummary(n_raw=ds.n_raw)
    for s in specs:
        col = ds[s.name]
        x = col[~np.isnan(col)]
        if len(x) == 0:
            out.rows.append(VariableSummary(s.name, 0, empty=True))
            continue
        raw = _stats(x)
        ps = _stats(percentize(x, s.conceptual_min, s.conceptual_max))
        out.rows.append(VariableSummary(s.name, len(x), *raw, *ps))
    return out


def complete_cases(ds: Dataset, names) -> Dataset:
    """Drop every row with a missing value among ``names``; all columns kept."""
    names = list(names)
    keep = np.ones(ds.n_raw, dtype=bool)
    for name in names:
        keep &= ~np.isnan(ds[name])
    return Dataset({k: v[keep] for k, v in ds.columns.items()})


# conceptual ranges of the bundled synthetic survey extract
SURVEY_RANGES = {
    "SM": (0, 3), "PD": (0, 4), "CG": (0, 5), "Age": (0, 100), "Income": (1, 9),
    "Edu": (1, 7), "PA": (0, 500), "EM": (0, 1), "Gender": (1, 2),
}


def synthetic_survey_path() -> Path:
    """Path of the bundled 3865-row synthetic survey extract."""
    return Path(str(resources.files("medgeom") / "data" / "hints_synthetic.csv"))


def survey_specs(names=None) -> list:
    """VariableSpecs with the conceptual ranges of the bundled extract."""
    names = names or list(SURVEY_RANGES)
    return [VariableSpec(k, "control", *map(float, SURVEY_RANGES[k])) for k in names]
