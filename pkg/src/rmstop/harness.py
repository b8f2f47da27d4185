"""Deterministic Monte Carlo replication engine, summaries and table I/O."""

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, DomainError

NESTED_RULES = ("boundary_only", "two_cond", "rm")
MISSING = "NA"


@dataclass(frozen=True, eq=False)
class Cell:
    """One grid point of a study.

    ``truth`` and ``epsilon`` drive the false-declaration column; ``params``
    holds everything the simulator needs.
    """

    labels: Tuple[Tuple[str, object], ...]
    params: Mapping[str, object]
    truth: Optional[float] = None
    epsilon: Optional[float] = None

    @property
    def scenario(self):
        return ";".join(f"{k}={v}" for k, v in self.labels)


@dataclass
class ReplicationOutcome:
    taus: Dict[str, Optional[int]]
    mle_zero: Dict[str, bool] = field(default_factory=dict)
    diagnostics: Dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class StudyConfig:
    """Declarative description of one simulation study.

    ``simulate(cell, rngs)`` returns one :class:`ReplicationOutcome` per
    generator. ``cell_extras(cell, outcomes)`` returns ``(key, value)`` pairs
    appended to every row of that cell.
    """

    study_id: int
    title: str
    cells: Tuple[Cell, ...]
    reps: int
    master_seed: int
    rules: Tuple[str, ...]
    simulate: Callable
    validate_cell: Optional[Callable] = None
    cell_extras: Optional[Callable] = None
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.reps < 1:
            raise ConfigError(f"reps must be at least 1, got {self.reps}")
        if not self.cells:
            raise ConfigError("study grid is empty")
        if not self.rules:
            raise ConfigError("no rules configured")


def replication_seed(master_seed, cell_index, replication):
    """Seed for one replication, a pure function of its coordinates."""
    return np.random.SeedSequence([int(master_seed), int(cell_index), int(replication)])


def replication_rng(master_seed, cell_index, replication):
    return np.random.Generator(np.random.PCG64(replication_seed(master_seed, cell_index, replication)))


def check_nesting(outcome: ReplicationOutcome):
    """Raise if the nested rules stop out of order on this replication."""
    present = [r for r in NESTED_RULES if r in outcome.taus]
    values = [math.inf if outcome.taus[r] is None else outcome.taus[r] for r in present]
    if any(a > b for a, b in zip(values, values[1:])):
        raise DomainError(f"rule nesting violated: {dict(zip(present, values))}")


def _run_block(args):
    config, cell_index, start, stop = args
    cell = config.cells[cell_index]
    rngs = [replication_rng(config.master_seed, cell_index, j) for j in range(start, stop)]
    outcomes = config.simulate(cell, rngs)
    if len(outcomes) != len(rngs):
        raise DomainError("simulator returned the wrong number of outcomes")
    for outcome in outcomes:
        check_nesting(outcome)
    return outcomes


def run_replications(config: StudyConfig, workers=1, block=50) -> List[List[ReplicationOutcome]]:
    """All replication outcomes, grouped by cell in grid order.

    Work is split into blocks of replications. Each replication's generator
    depends only on ``(master_seed, cell, replication)`` and results are
    reassembled in that order, so the output does not depend on ``workers``.
    """
    if config.validate_cell is not None:
        for cell in config.cells:
            config.validate_cell(cell)
    tasks = [(config, c, start, min(start + block, config.reps))
             for c in range(len(config.cells)) for start in range(0, config.reps, block)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_block, tasks))
    else:
        results = [_run_block(t) for t in tasks]
    grouped = [[] for _ in config.cells]
    for (cfg, c, _, _), outcomes in zip(tasks, results):
        grouped[c].extend(outcomes)
    return grouped


@dataclass
class SummaryRow:
    study: int
    scenario: str
    rule: str
    n_reps: int
    pct_stop: float
    mean_tau: Optional[float]
    sd_tau: Optional[float]
    median_tau: Optional[float]
    fdr_pct: Optional[float]
    pct_mle_zero: Optional[float]
    extra: str = ""

    def extras(self):
        return dict(item.split("=", 1) for item in self.extra.split(";") if item)


COLUMNS = tuple(f.name for f in fields(SummaryRow))


def _round1(x):
    return None if x is None else round(float(x), 1)


def summarize(taus: Sequence[Optional[int]], truth=None, epsilon=None, mle_zero=None, *,
              study=0, scenario="", rule="", extra="") -> SummaryRow:
    """Summary statistics for one rule over a set of replications.

    Mean, SD and median are over stopped runs only. The false-declaration
    rate equals the stop percentage when ``truth > epsilon`` and is missing
    otherwise. ``mle_zero`` flags, per replication, whether the raw estimate
    was exactly zero at the stop.
    """
    taus = list(taus)
    if not taus:
        raise DomainError("no outcomes to summarize")
    stopped = np.array([t for t in taus if t is not None], dtype=float)
    pct = 100.0 * stopped.size / len(taus)
    mean = sd = median = None
    if stopped.size:
        mean = float(stopped.mean())
        median = float(np.median(stopped))
        if stopped.size > 1:
            sd = float(stopped.std(ddof=1))
    fdr = pct if (truth is not None and epsilon is not None and truth > epsilon) else None
    mle_pct = None
    if mle_zero is not None and stopped.size:
        flags = [bool(z) for t, z in zip(taus, mle_zero) if t is not None]
        mle_pct = 100.0 * sum(flags) / len(flags)
    return SummaryRow(study=study, scenario=scenario, rule=rule, n_reps=len(taus),
                      pct_stop=_round1(pct), mean_tau=_round1(mean), sd_tau=_round1(sd),
                      median_tau=median, fdr_pct=_round1(fdr), pct_mle_zero=_round1(mle_pct),
                      extra=extra)


def _format_extra(pairs):
    return ";".join(f"{k}={v}" for k, v in pairs)


def summarize_study(config: StudyConfig, grouped) -> List[SummaryRow]:
    rows = []
    for cell, outcomes in zip(config.cells, grouped):
        extra = _format_extra(config.cell_extras(cell, outcomes)) if config.cell_extras else ""
        for rule in config.rules:
            taus = [o.taus[rule] for o in outcomes]
            flags = None
            if all(rule in o.mle_zero for o in outcomes):
                flags = [o.mle_zero[rule] for o in outcomes]
            rows.append(summarize(taus, cell.truth, cell.epsilon, flags, study=config.study_id,
                                  scenario=cell.scenario, rule=rule, extra=extra))
    return rows


def run_study(config: StudyConfig, master_seed=None, workers=1) -> List[SummaryRow]:
    """Run every cell of ``config`` and return one summary row per (cell, rule)."""
    if master_seed is not None and master_seed != config.master_seed:
        config = StudyConfig(**{**{f.name: getattr(config, f.name) for f in fields(config)},
                                "master_seed": int(master_seed)})
    return summarize_study(config, run_replications(config, workers=workers))


def _fmt(name, value):
    if value is None:
        return MISSING
    if name in ("pct_stop", "mean_tau", "sd_tau", "fdr_pct", "pct_mle_zero"):
        return f"{value:.1f}"
    if name == "median_tau":
        return f"{value:.0f}" if float(value).is_integer() else f"{value:.1f}"
    return str(value)


def _parse(name, text):
    if name in ("study", "n_reps"):
        return int(text)
    if name in ("scenario", "rule", "extra"):
        return text
    return None if text == MISSING else float(text)


def _open_for_write(path):
    path = Path(path)
    try:
        return path.open("w", newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"{path}: cannot write table ({exc.strerror or exc})") from exc


def emit_table(rows: Sequence[SummaryRow], fmt, path, metadata=None):
    """Write summary rows as CSV (fixed header) or JSON with the same schema.

    In CSV, ``metadata`` goes on leading ``#`` lines, one JSON object each.
    """
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown table format {fmt!r}")
    with _open_for_write(path) as fh:
        if fmt == "json":
            records = [{k: v for k, v in asdict(r).items()} for r in rows]
            doc = {"metadata": metadata or {}, "columns": list(COLUMNS), "rows": records}
            fh.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
            return
        for key, value in (metadata or {}).items():
            fh.write("# " + json.dumps({key: value}, sort_keys=True) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in rows:
            writer.writerow([_fmt(name, getattr(row, name)) for name in COLUMNS])


def _read_text(path):
    path = Path(path)
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"{path}: cannot read table ({exc.strerror or exc})") from exc


def load_table(path) -> List[SummaryRow]:
    """Parse a table written by :func:`emit_table` (format inferred from content)."""
    text = _read_text(path)
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        return [SummaryRow(**rec) for rec in doc["rows"]]
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None or tuple(header) != COLUMNS:
        raise ConfigError(f"{path}: unexpected table header {header}")
    return [SummaryRow(**{name: _parse(name, cell) for name, cell in zip(COLUMNS, rec)})
            for rec in reader]


def load_metadata(path) -> dict:
    text = _read_text(path)
    if text.lstrip().startswith("{"):
        return json.loads(text).get("metadata", {})
    meta = {}
    for line in text.splitlines():
        if not line.startswith("#"):
            break
        meta.update(json.loads(line[1:]))
    return meta
