"""Seeded Monte Carlo sweeps over SNR and channel draws.

Every trial owns its random streams: the channel generator is seeded from
``(seed, trial)`` and the packet generator used by the roughly quantized
baseline from ``(seed, trial, snr)``. Results therefore do not depend on the
worker count, on which curves are swept together, or on which other SNR
points are in the grid.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .channel import ChannelSet, ScenarioDims, generate_channel
from .errors import ConfigError
from .precoding import PrecoderKind, build_precoder, exclusion_svds
from .quantization import QuantizerSpec, bussgang_delta
from .rate import (
    MIN_PACKET_LEN,
    RateInputs,
    empirical_rate_roughly_quantized,
    sum_rate_cqa,
    sum_rate_full_resolution,
)

log = logging.getLogger(__name__)

__all__ = [
    "Mode",
    "SweepConfig",
    "SweepRow",
    "SweepResult",
    "DEFAULT_SNR_GRID",
    "SMALL_ARRAY_DIMS",
    "LARGE_ARRAY_DIMS",
    "parse_snr_grid",
    "channel_rng",
    "packet_rng",
    "run_algorithm_one",
    "run_sweep",
    "run_sweeps",
    "emit_csv",
    "read_csv",
    "plot_series",
    "emit_plot_data",
]

DEFAULT_SNR_GRID = tuple(float(x) for x in range(0, 21))
# Eight users with two receive antennas each.
SMALL_ARRAY_DIMS = ScenarioDims.uniform(32, 8, 2)
LARGE_ARRAY_DIMS = ScenarioDims.uniform(128, 8, 2)

CSV_HEADER = ("snr_db", "precoder", "mode", "bits", "mean_rate", "std_rate", "trials", "seed")


class Mode(str, Enum):
    CQA = "CQA"
    FR = "FR"
    RQ = "RQ"

    @classmethod
    def parse(cls, value) -> "Mode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ConfigError(f"unknown mode {value!r}; expected cqa, fr or rq") from None


def parse_snr_grid(text: str) -> tuple[float, ...]:
    """Parse ``start:step:stop`` (inclusive) or a comma list of dB values."""
    text = text.strip()
    if ":" in text:
        try:
            start, step, stop = (float(v) for v in text.split(":"))
        except ValueError:
            raise ConfigError(f"bad SNR range {text!r}; expected start:step:stop") from None
        if step <= 0 or stop < start:
            raise ConfigError(f"bad SNR range {text!r}")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 10) for i in range(count))
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"bad SNR list {text!r}") from None


@dataclass(frozen=True)
class SweepConfig:
    """One curve: a precoder, a rate mode and (except for FR) a bit depth.

    ``step`` is the normalized quantizer step; ``None`` uses the MSE-optimal
    default for ``bits``.
    """

    dims: ScenarioDims
    precoder: PrecoderKind = PrecoderKind.RBD
    mode: Mode = Mode.CQA
    bits: int | None = 2
    step: float | None = None
    snr_grid: tuple[float, ...] = DEFAULT_SNR_GRID
    trials: int = 200
    packet_len: int = 100
    seed: int = 0
    output_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "precoder", PrecoderKind.parse(self.precoder))
        object.__setattr__(self, "mode", Mode.parse(self.mode))
        object.__setattr__(self, "snr_grid", tuple(float(s) for s in self.snr_grid))
        if self.mode is Mode.FR:
            object.__setattr__(self, "bits", None)
            object.__setattr__(self, "step", None)
        elif self.bits is None or self.bits < 1:
            raise ConfigError(f"mode {self.mode.value} needs bits >= 1")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if not self.snr_grid:
            raise ConfigError("SNR grid is empty")
        if any(b <= a for a, b in zip(self.snr_grid, self.snr_grid[1:])):
            raise ConfigError("SNR grid must be strictly increasing")
        if self.mode is Mode.RQ and self.packet_len < MIN_PACKET_LEN:
            raise ConfigError(f"mode RQ needs packet_len >= {MIN_PACKET_LEN}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.step is not None and not self.step > 0:
            raise ConfigError(f"step must be positive, got {self.step}")

    @property
    def label(self) -> str:
        parts = [self.precoder.value, self.mode.value]
        if self.bits is not None:
            parts.append(f"{self.bits}b")
        return "-".join(parts)

    def quantizer(self) -> QuantizerSpec:
        return QuantizerSpec(self.bits, self.step, nb=self.dims.nb, power=float(self.dims.nu))

    def _group_key(self):
        return (self.dims, self.snr_grid, self.trials, self.packet_len, self.seed)


@dataclass(frozen=True)
class SweepRow:
    snr_db: float
    precoder: str
    mode: str
    bits: int | None
    mean_rate: float
    std_rate: float
    trials: int
    seed: int

    @property
    def stderr(self) -> float:
        return self.std_rate / np.sqrt(self.trials)


@dataclass
class SweepResult:
    rows: list[SweepRow] = field(default_factory=list)

    def curve(self, precoder, mode, bits=None) -> list[SweepRow]:
        precoder = PrecoderKind.parse(precoder).value
        mode = Mode.parse(mode).value
        return [r for r in self.rows
                if r.precoder == precoder and r.mode == mode
                and (mode == Mode.FR.value or r.bits == bits)]

    def at(self, precoder, mode, bits, snr_db: float) -> SweepRow:
        for r in self.curve(precoder, mode, bits):
            if abs(r.snr_db - snr_db) < 1e-9:
                return r
        raise KeyError((precoder, mode, bits, snr_db))


# -- random streams ----------------------------------------------------------

def _snr_key(snr_db: float) -> int:
    return int(round(snr_db * 1000)) + 10 ** 9


def channel_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, trial, 0]))


def packet_rng(seed: int, trial: int, snr_db: float) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, trial, 1, _snr_key(snr_db)]))


# -- one channel draw --------------------------------------------------------

def _rate(cfg: SweepConfig, ch: ChannelSet, pre, snr: float, rng) -> float:
    if cfg.mode is Mode.FR:
        return sum_rate_full_resolution(ch.combined @ pre.combined, snr, ch.nu)
    spec = cfg.quantizer()
    if cfg.mode is Mode.CQA:
        delta = bussgang_delta(spec).delta
        return sum_rate_cqa(RateInputs(ch.combined @ pre.combined, snr, ch.nu, delta))
    return empirical_rate_roughly_quantized(ch, pre, spec, snr, cfg.packet_len, rng)


def run_algorithm_one(ch: ChannelSet, cfg: SweepConfig, snr_db: float,
                      rng: np.random.Generator | None = None, svds=None) -> float:
    """Sum-rate of one channel draw at ``snr_db`` for the curve in ``cfg``.

    Builds the precoder user by user (exclusion SVD, stage one, effective
    channel SVD, water-filling, stage two), assembles and normalizes it, and
    evaluates the rate selected by ``cfg.mode``. ``rng`` feeds the RQ packet
    simulation and defaults to ``packet_rng(cfg.seed, 0, snr_db)``.
    """
    snr = 10.0 ** (snr_db / 10.0)
    pre = build_precoder(ch, cfg.precoder, snr, svds)
    if rng is None and cfg.mode is Mode.RQ:
        rng = packet_rng(cfg.seed, 0, snr_db)
    return _rate(cfg, ch, pre, snr, rng)


def _with_context(exc: Exception, context: str) -> Exception | None:
    try:
        return type(exc)(f"{context}: {exc}")
    except Exception:
        return None


def _run_trial(curves: Sequence[SweepConfig], trial: int) -> np.ndarray:
    """Rates of every curve at every SNR for one channel draw."""
    base = curves[0]
    out = np.empty((len(curves), len(base.snr_grid)))
    ch = generate_channel(base.dims, channel_rng(base.seed, trial))
    svds = exclusion_svds(ch)
    for i, snr_db in enumerate(base.snr_grid):
        snr = 10.0 ** (snr_db / 10.0)
        precoders = {}
        for c, cfg in enumerate(curves):
            try:
                pre = precoders.get(cfg.precoder)
                if pre is None:
                    pre = precoders[cfg.precoder] = build_precoder(ch, cfg.precoder, snr, svds)
                rng = packet_rng(cfg.seed, trial, snr_db) if cfg.mode is Mode.RQ else None
                out[c, i] = _rate(cfg, ch, pre, snr, rng)
            except Exception as exc:
                new = _with_context(exc, f"trial {trial}, {cfg.label}, {snr_db:g} dB")
                if new is None:
                    raise
                raise new from exc
    return out


def _run_group(curves: Sequence[SweepConfig], workers: int) -> np.ndarray:
    trials = curves[0].trials
    fn = partial(_run_trial, tuple(curves))
    if workers > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunk = max(1, trials // (4 * workers))
            per_trial = list(pool.map(fn, range(trials), chunksize=chunk))
    else:
        per_trial = [fn(t) for t in range(trials)]
    return np.stack(per_trial)


def run_sweeps(cfgs: Iterable[SweepConfig], workers: int = 1) -> SweepResult:
    """Run several curves, sharing channel draws and precoders where possible.

    Curves with equal scenario, grid, trial count, packet length and seed are
    evaluated on the same channels. Row order follows ``cfgs``, then the SNR
    grid.
    """
    cfgs = list(cfgs)
    groups: dict = {}
    for idx, cfg in enumerate(cfgs):
        groups.setdefault(cfg._group_key(), []).append(idx)
    stats: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for key, idxs in groups.items():
        curves = [cfgs[i] for i in idxs]
        log.info("sweeping %d curve(s) on %s, %d trials", len(curves), key[0], key[2])
        rates = _run_group(curves, workers)
        mean = rates.mean(axis=0)
        std = rates.std(axis=0, ddof=1) if rates.shape[0] > 1 else np.zeros_like(mean)
        for pos, i in enumerate(idxs):
            stats[i] = (mean[pos], std[pos])
    rows = []
    for i, cfg in enumerate(cfgs):
        mean, std = stats[i]
        for k, snr_db in enumerate(cfg.snr_grid):
            rows.append(SweepRow(snr_db, cfg.precoder.value, cfg.mode.value, cfg.bits,
                                 float(mean[k]), float(std[k]), cfg.trials, cfg.seed))
    return SweepResult(rows)


def run_sweep(cfg: SweepConfig, workers: int = 1) -> SweepResult:
    res = run_sweeps([cfg], workers)
    if cfg.output_path:
        emit_csv(res, cfg.output_path)
    return res


# -- output ------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.9g}"


def emit_csv(res: SweepResult, path) -> None:
    """Write one row per result row with 9 significant digits."""
    path = Path(path)
    lines = [",".join(CSV_HEADER)]
    for r in res.rows:
        bits = "" if r.bits is None else str(r.bits)
        lines.append(",".join([_fmt(r.snr_db), r.precoder, r.mode, bits,
                               _fmt(r.mean_rate), _fmt(r.std_rate),
                               str(r.trials), str(r.seed)]))
    try:
        with open(path, "w", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write sweep CSV: {exc.strerror}", str(path)) from exc


def read_csv(path) -> SweepResult:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ConfigError(f"{path}: unexpected header {reader.fieldnames}")
        rows = [SweepRow(float(d["snr_db"]), d["precoder"], d["mode"],
                         int(d["bits"]) if d["bits"] else None,
                         float(d["mean_rate"]), float(d["std_rate"]),
                         int(d["trials"]), int(d["seed"]))
                for d in reader]
    return SweepResult(rows)


def plot_series(res: SweepResult) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Curves keyed by label, ordered from highest to lowest average rate."""
    series: dict[str, list[SweepRow]] = {}
    for r in res.rows:
        label = f"{r.precoder}-{r.mode}" + ("" if r.bits is None else f"-{r.bits}b")
        series.setdefault(label, []).append(r)
    out = {k: (np.array([r.snr_db for r in v]), np.array([r.mean_rate for r in v]))
           for k, v in series.items()}
    return dict(sorted(out.items(), key=lambda kv: -float(np.mean(kv[1][1]))))


def emit_plot_data(res: SweepResult, path) -> Path:
    """Write the curves as an SVG at ``path`` plus ``<stem>.series.csv``.

    The CSV has an ``snr_db`` column followed by one column per series;
    series that miss an SNR point leave the cell empty. Returns the CSV path.
    """
    import matplotlib
    from matplotlib.figure import Figure

    path = Path(path)
    series = plot_series(res)
    grid = sorted({float(x) for xs, _ in series.values() for x in xs})
    data_path = path.with_suffix(".series.csv")
    lines = [",".join(["snr_db", *series])]
    for snr in grid:
        cells = [_fmt(snr)]
        for xs, ys in series.values():
            hit = np.flatnonzero(np.abs(xs - snr) < 1e-9)
            cells.append(_fmt(ys[hit[0]]) if hit.size else "")
        lines.append(",".join(cells))
    data_path.write_text("\n".join(lines) + "\n")

    with matplotlib.rc_context({"svg.hashsalt": "cqabd", "svg.fonttype": "none"}):
        fig = Figure(figsize=(6.4, 4.8))
        ax = fig.add_subplot()
        for label, (xs, ys) in series.items():
            ax.plot(xs, ys, marker="o", markersize=3, label=label)
        ax.set_xlabel("SNR (dB)")
        ax.set_ylabel("sum-rate (bits/channel use)")
        ax.grid(True, alpha=0.3)
        if series:
            ax.legend(fontsize="small")
        fig.savefig(path, format="svg", metadata={"Date": None})
    return data_path
