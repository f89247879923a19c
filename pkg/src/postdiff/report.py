"""Table rows and their CSV / markdown / JSON renderings."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Sequence

from .analysis import MetricsSummary
from .core import ContractError
from .harness import ExperimentConfig

METRICS = ("fpr", "power", "type_s", "reward", "prop_opt", "prop_sup")
_INT_COLUMNS = {"n", "n_sims", "seed"}
_TEXT_COLUMNS = {"policy", "params"}
_MD_HEADERS = {
    "fpr": "FPR",
    "power": "Power",
    "type_s": "Type-S",
    "reward": "Reward",
    "prop_opt": "Prop. Opt.",
    "prop_sup": "Prop. Sup.",
}


@dataclass(frozen=True)
class ReportRow:
    policy: str
    params: str
    effect_size: float
    n: int
    n_sims: int
    seed: int
    fpr: float | None = None
    fpr_se: float | None = None
    power: float | None = None
    power_se: float | None = None
    type_s: float | None = None
    type_s_se: float | None = None
    reward: float | None = None
    reward_se: float | None = None
    prop_opt: float | None = None
    prop_opt_se: float | None = None
    prop_sup: float | None = None
    prop_sup_se: float | None = None

    @classmethod
    def from_summary(cls, config: ExperimentConfig, summary: MetricsSummary) -> ReportRow:
        null = summary.is_null
        return cls(
            policy=config.policy.label,
            params=config.policy.describe_params(),
            effect_size=summary.effect_size,
            n=config.n,
            n_sims=summary.n_sims,
            seed=config.base_seed,
            fpr=summary.fpr,
            fpr_se=summary.fpr_se,
            power=summary.power,
            power_se=summary.power_se,
            # wrong-sign rejections need a true sign
            type_s=None if null else summary.type_s,
            type_s_se=None if null else summary.type_s_se,
            reward=summary.reward,
            reward_se=summary.reward_se,
            prop_opt=summary.prop_opt,
            prop_opt_se=summary.prop_opt_se,
            prop_sup=summary.prop_sup,
            prop_sup_se=summary.prop_sup_se,
        )


COLUMNS = tuple(f.name for f in fields(ReportRow))


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _md_pair(value, se) -> str:
    if value is None:
        return ""
    if se is None:
        return f"{value:.3f}"
    return f"{value:.3f} ({se:.3f})"


def to_csv(rows: Sequence[ReportRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([_csv_cell(getattr(row, c)) for c in COLUMNS])
    return buf.getvalue()


def to_markdown(rows: Sequence[ReportRow]) -> str:
    header = ["Policy", "Params", "Effect size", "n", "Sims", "Seed", *(_MD_HEADERS[m] for m in METRICS)]
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    for r in rows:
        cells = [r.policy, r.params, f"{r.effect_size:g}", str(r.n), str(r.n_sims), str(r.seed)]
        cells += [_md_pair(getattr(r, m), getattr(r, f"{m}_se")) for m in METRICS]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def to_json(rows: Sequence[ReportRow]) -> str:
    return json.dumps([asdict(r) for r in rows], indent=2) + "\n"


def emit_table(rows: Sequence[ReportRow], fmt: str = "csv") -> str:
    if not rows:
        raise ContractError("emit_table needs at least one row")
    if fmt == "csv":
        return to_csv(rows)
    if fmt == "md":
        return to_markdown(rows)
    if fmt == "json":
        return to_json(rows)
    raise ContractError(f"unknown format {fmt!r}; expected csv, md or json")


def parse_csv(text: str) -> list[ReportRow]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != COLUMNS:
        raise ContractError(f"unexpected CSV header {reader.fieldnames}")
    rows = []
    for rec in reader:
        values = {}
        for col in COLUMNS:
            cell = rec[col]
            if col in _TEXT_COLUMNS:
                values[col] = cell
            elif cell == "":
                values[col] = None
            elif col in _INT_COLUMNS:
                values[col] = int(cell)
            else:
                values[col] = float(cell)
        rows.append(ReportRow(**values))
    return rows


def emit_records(columns: Sequence[str], records: Iterable[Sequence], fmt: str = "csv") -> str:
    """Plain tables (curves, sample sizes) in any of the three formats."""
    records = [list(r) for r in records]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows([[_csv_cell(v) for v in r] for r in records])
        return buf.getvalue()
    if fmt == "json":
        return json.dumps([dict(zip(columns, r)) for r in records], indent=2) + "\n"
    if fmt == "md":
        lines = ["| " + " | ".join(columns) + " |", "|" + "---|" * len(columns)]
        for r in records:
            lines.append("| " + " | ".join(f"{v:.4g}" if isinstance(v, float) else str(v) for v in r) + " |")
        return "\n".join(lines) + "\n"
    raise ContractError(f"unknown format {fmt!r}; expected csv, md or json")
