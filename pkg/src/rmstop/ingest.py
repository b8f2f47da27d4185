"""Series ingestion, synthetic fallback generators and single-series monitoring."""

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .errors import ConfigError, DomainError, MissingSeriesError, SeriesParseError
from .scorecard import RuleReports, ScorecardConfig, ScoreTrace, evaluate_rules, increments
from .uncertainty import beta_quantile, gamma_quantile, normal_upper_quantile

SCHEMAS = {"ili": ("year", "week", "rate"), "bll": ("value",)}
MODELS = ("poisson_rate", "gaussian_mean", "bounded_mean")
TRACE_COLUMNS = ("n", "m", "b", "width", "r", "fired_bdy", "fired_2cond", "fired_rm")

ILI_WEEKS = 312
ILI_DEFAULT_SEED = 1
BLL_DEFAULT_SEED = 1


@dataclass(frozen=True)
class SeriesRecord:
    index: int
    value: float

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value >= 0):
            raise DomainError(f"series values must be finite and nonnegative, got {self.value!r}")


def _parse_float(text, path, line):
    try:
        value = float(text)
    except ValueError:
        raise SeriesParseError(f"not a number: {text!r}", line=line, path=path) from None
    if not math.isfinite(value):
        raise SeriesParseError(f"non-finite value {text!r}", line=line, path=path)
    return value


def _parse_int(text, path, line):
    try:
        return int(text)
    except ValueError:
        raise SeriesParseError(f"not an integer: {text!r}", line=line, path=path) from None


def load_series_csv(path, schema="ili") -> List[SeriesRecord]:
    """Read a series file with columns ``year, week, rate`` (ili) or ``value`` (bll).

    Records are indexed ``1..n`` in file order. ILI rows must have strictly
    increasing ``(year, week)``. A header-only file yields an empty list.

    Raises
    ------
    MissingSeriesError
        The file does not exist; callers may fall back to a synthetic series.
    SeriesParseError
        A header or row does not fit the schema. The message names the line.
    """
    if schema not in SCHEMAS:
        raise ConfigError(f"unknown schema {schema!r}; expected one of {sorted(SCHEMAS)}")
    path = Path(path)
    if not path.exists():
        raise MissingSeriesError(str(path))
    expected = SCHEMAS[schema]
    records = []
    last_key = None
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SeriesParseError("file is empty, expected a header", line=1, path=path)
        header = [h.strip().lower() for h in header]
        if tuple(header) != expected:
            raise SeriesParseError(f"header {header} does not match schema {list(expected)}",
                                   line=1, path=path)
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(expected):
                raise SeriesParseError(f"expected {len(expected)} fields, got {len(row)}",
                                       line=line, path=path)
            value = _parse_float(row[-1].strip(), path, line)
            if value < 0:
                raise SeriesParseError(f"negative value {value}", line=line, path=path)
            if schema == "ili":
                key = (_parse_int(row[0].strip(), path, line), _parse_int(row[1].strip(), path, line))
                if last_key is not None and key <= last_key:
                    raise SeriesParseError(f"(year, week) {key} does not follow {last_key}",
                                           line=line, path=path)
                last_key = key
            records.append(SeriesRecord(index=len(records) + 1, value=value))
    return records


def gen_ili_series(seed=ILI_DEFAULT_SEED, weeks=ILI_WEEKS, baseline=20.0, amplitude=150.0,
                   concentration=2.85, peak_week=6.0, noise_sd=0.04) -> np.ndarray:
    """Synthetic weekly ILI consultation rates per 10,000 visits.

    Each 52-week year is a baseline plus a von Mises shaped epidemic bump,
    times lognormal noise. With the defaults every year has mean near 58,
    peak near 170 and off-season trough near 20.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(weeks)
    angle = 2.0 * np.pi * (t % 52 - peak_week) / 52.0
    bump = np.exp(concentration * (np.cos(angle) - 1.0))
    noise = np.exp(noise_sd * rng.standard_normal(weeks))
    return (baseline + amplitude * bump) * noise


def gen_bll_series(n=7000, gm=0.82, gsd=2.1, floor=0.01, seed=BLL_DEFAULT_SEED) -> np.ndarray:
    """Lognormal blood-lead draws with geometric mean ``gm`` and geometric SD ``gsd``,
    floored at the detection limit."""
    if not (gm > 0 and gsd > 0):
        raise DomainError(f"gm and gsd must be positive, got gm={gm}, gsd={gsd}")
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    rng = np.random.default_rng(seed)
    draws = np.exp(math.log(gm) + math.log(gsd) * rng.standard_normal(n))
    return np.maximum(draws, floor)


@dataclass(frozen=True)
class MonitorConfig:
    """Scorecard tuning plus the observation model.

    ``log_scale`` applies to ``gaussian_mean`` only: the mean and band are
    computed for log values and mapped back with ``exp``.
    """

    model: str
    scorecard: ScorecardConfig
    log_scale: bool = False
    prior_rate: float = 1.0

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if self.log_scale and self.model != "gaussian_mean":
            raise ConfigError("log_scale is only available for gaussian_mean")
        if self.model != "bounded_mean" and self.scorecard.probability_scale:
            raise ConfigError(f"{self.model} needs a scorecard with probability_scale=False")

    def as_dict(self):
        return {"model": self.model, "log_scale": self.log_scale, "prior_rate": self.prior_rate,
                **self.scorecard.as_dict()}


def ili_config(epsilon, width_max=None, eta=0.01, n_min=30) -> MonitorConfig:
    sc = ScorecardConfig(epsilon=epsilon, width_max=epsilon if width_max is None else width_max,
                         eta=eta, n_min=n_min, n_max=ILI_WEEKS, probability_scale=False)
    return MonitorConfig("poisson_rate", sc)


def bll_config(epsilon=1.5, width_max=0.2, eta=0.01, n_min=50, n_max=7000) -> MonitorConfig:
    sc = ScorecardConfig(epsilon=epsilon, width_max=width_max, eta=eta, n_min=n_min, n_max=n_max,
                         probability_scale=False)
    return MonitorConfig("gaussian_mean", sc, log_scale=True)


@dataclass
class MonitorTrace:
    """Per-step scores, per-step rule conditions and the resulting stop reports.

    ``fired_*[i]`` is True when every condition of that rule holds at step
    ``i + 1`` inside the monitoring window. The stop time is the first such step.
    """

    scores: ScoreTrace
    fired_bdy: np.ndarray
    fired_2cond: np.ndarray
    fired_rm: np.ndarray
    reports: RuleReports
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.scores)

    def rows(self):
        s = self.scores
        for i in range(len(s)):
            yield (int(s.n[i]), float(s.m[i]), float(s.b[i]), float(s.width[i]), float(s.r[i]),
                   bool(self.fired_bdy[i]), bool(self.fired_2cond[i]), bool(self.fired_rm[i]))


def _values(series):
    if len(series) and isinstance(series[0], SeriesRecord):
        return np.array([r.value for r in series], dtype=float)
    return np.asarray(series, dtype=float)


def _poisson_scores(x, alpha, prior_rate):
    n = np.arange(1, x.size + 1, dtype=float)
    s = np.cumsum(x)
    m = (s + 0.5) / (n + prior_rate)
    width = np.array([gamma_quantile(1 - alpha / 2, si + 0.5, ni + prior_rate)
                      - gamma_quantile(alpha / 2, si + 0.5, ni + prior_rate)
                      for si, ni in zip(s, n)])
    return m, m.copy(), width


def _bounded_scores(x, alpha):
    if np.any(x > 1.0):
        raise DomainError("bounded_mean needs values in [0, 1]")
    n = np.arange(1, x.size + 1, dtype=float)
    s = np.cumsum(x)
    m = (s + 0.5) / (n + 1.0)
    width = np.array([beta_quantile(1 - alpha / 2, si + 0.5, ni - si + 0.5)
                      - beta_quantile(alpha / 2, si + 0.5, ni - si + 0.5)
                      for si, ni in zip(s, n)])
    return m, np.minimum(m, 1.0 - m), width


def _gaussian_scores(x, alpha, log_scale):
    if log_scale:
        if np.any(x <= 0):
            raise DomainError("log-scale monitoring needs positive values")
        x = np.log(x)
    n = np.arange(1, x.size + 1, dtype=float)
    mean = np.cumsum(x) / n
    sq = np.cumsum((x - x[0]) ** 2)
    centered = sq - n * (mean - x[0]) ** 2
    sd = np.full(x.size, np.inf)
    sd[1:] = np.sqrt(np.maximum(centered[1:], 0.0) / (n[1:] - 1.0))
    half = normal_upper_quantile(alpha) * sd / np.sqrt(n)
    if log_scale:
        m = np.exp(mean)
        with np.errstate(over="ignore", invalid="ignore"):
            width = np.exp(mean + half) - np.exp(mean - half)
        width[~np.isfinite(half)] = np.inf
    else:
        m = mean
        width = 2.0 * half
    return m, np.abs(m), width


def monitor_series(series: Sequence, model=None, config: Optional[MonitorConfig] = None,
                   metadata=None) -> MonitorTrace:
    """Run the three rules over one observed series.

    ``poisson_rate`` uses the Gamma(S + 1/2, n + prior_rate) posterior mean and
    band with ``B = M``. ``bounded_mean`` uses the Jeffreys Beta posterior with
    ``B = min(M, 1 - M)``. ``gaussian_mean`` uses the running mean with a
    plug-in normal band of width ``2 z s_n / sqrt(n)`` (infinite at ``n = 1``)
    and ``B = |M|``. Stability is ``r_n = |M_n - M_{n-1}|`` throughout.
    """
    if config is None:
        raise ConfigError("monitor_series needs a MonitorConfig")
    if model is not None and model != config.model:
        raise ConfigError(f"model {model!r} does not match config model {config.model!r}")
    x = _values(series)
    if x.size == 0:
        raise DomainError("empty series")
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise DomainError("series values must be finite and nonnegative")
    alpha = config.scorecard.alpha
    if config.model == "poisson_rate":
        m, b, width = _poisson_scores(x, alpha, config.prior_rate)
    elif config.model == "bounded_mean":
        m, b, width = _bounded_scores(x, alpha)
    else:
        m, b, width = _gaussian_scores(x, alpha, config.log_scale)
    n = np.arange(1, x.size + 1)
    scores = ScoreTrace(n=n, m=m, b=b, width=width, r=increments(m))
    sc = config.scorecard
    window = (n >= sc.n_min) & (n <= sc.n_max)
    bdy = window & (b <= sc.epsilon)
    two = bdy & (width <= sc.width_max)
    rm = two & (scores.r <= sc.eta)
    meta = {"config": config.as_dict(), **(metadata or {})}
    return MonitorTrace(scores, bdy, two, rm, evaluate_rules(scores, sc), meta)


def _metadata_lines(metadata):
    return ["# " + json.dumps({k: v}, sort_keys=True) for k, v in metadata.items()]


def write_trace(trace: MonitorTrace, path):
    """Write a trace as CSV. Floats use ``repr`` so reading back is exact."""
    path = Path(path)
    try:
        fh = path.open("w", newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"{path}: cannot write trace ({exc.strerror or exc})") from exc
    with fh:
        for line in _metadata_lines(trace.metadata):
            fh.write(line + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for n, m, b, w, r, f1, f2, f3 in trace.rows():
            writer.writerow([n, repr(m), repr(b), repr(w), repr(r), int(f1), int(f2), int(f3)])


def read_trace(path):
    """Inverse of :func:`write_trace`: ``(ScoreTrace, fired flags dict, metadata)``."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"{path}: cannot read trace ({exc.strerror or exc})") from exc
    meta = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            meta.update(json.loads(line[1:]))
        else:
            body.append(line)
    reader = csv.reader(body)
    header = next(reader, None)
    if header is None or tuple(header) != TRACE_COLUMNS:
        raise ConfigError(f"{path}: unexpected trace header {header}")
    rows = list(reader)
    cols = list(zip(*rows)) if rows else [()] * len(TRACE_COLUMNS)
    scores = ScoreTrace(n=np.array(cols[0], dtype=np.int64),
                        m=np.array([float(v) for v in cols[1]]),
                        b=np.array([float(v) for v in cols[2]]),
                        width=np.array([float(v) for v in cols[3]]),
                        r=np.array([float(v) for v in cols[4]]))
    fired = {name: np.array([v == "1" for v in col], dtype=bool)
             for name, col in zip(TRACE_COLUMNS[5:], cols[5:])}
    return scores, fired, meta
