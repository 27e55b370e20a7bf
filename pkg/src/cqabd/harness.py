"""Monte Carlo sweep over (precoder, bits, power allocation, SNR).

One channel is drawn per trial and shared by every grid cell of that trial,
so curves are paired and can be compared with per-trial differences.
Rates depend only on the channel, hence no symbol-level simulation here.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from . import poweralloc, precoder
from .channel import ChannelSet, CsiModel, apply_csi_model, generate_iid, make_rng
from .errors import ConfigError, CqaError, MissingCurve
from .quantizer import build_quantizer
from .rates import RateInputs, exact_cqa_rate

__all__ = [
    "ScenarioConfig",
    "RateResult",
    "CurveKey",
    "run_scenario",
    "compare_hierarchy",
    "HierarchyReport",
    "horizontal_gap",
    "results_to_csv",
    "CSV_COLUMNS",
]

log = logging.getLogger(__name__)

CSV_COLUMNS = ("scenario_id", "snr_db", "precoder", "bits", "power_alloc", "trials",
               "mean_rate_bpcu", "stderr_bpcu", "failed_cells")
PRECODERS = ("ZF", "MMSE", "BD", "RBD")
POWER_ALLOCS = ("EQUAL", "WF", "MAAS")

# RNG purposes within a trial
_CHANNEL, _CSI = 0, 1


def _bits_label(b) -> str:
    return "FR" if b is None else str(int(b))


def _parse_bits(b):
    if b is None or (isinstance(b, str) and b.upper() in ("FR", "INF", "FULL")):
        return None
    b = int(b)
    if not 2 <= b <= 12:
        raise ConfigError(f"bits must be 2..12 or 'FR', got {b}")
    return b


@dataclass(frozen=True)
class ScenarioConfig:
    """Description of one sweep. JSON keys mirror the field names."""

    nb: int
    users: int
    antennas_per_user: int
    snr_db: tuple
    bits: tuple
    precoders: tuple
    power_alloc: tuple = ("EQUAL",)
    trials: int = 100
    channels_per_trial: int = 1
    seed: int = 0
    csi: CsiModel | None = None
    scenario_id: str = "scenario"

    def __post_init__(self):
        def tup(v):
            return tuple(v) if isinstance(v, (list, tuple)) else (v,)

        object.__setattr__(self, "snr_db", tuple(float(s) for s in tup(self.snr_db)))
        object.__setattr__(self, "bits", tuple(_parse_bits(b) for b in tup(self.bits)))
        object.__setattr__(self, "precoders", tuple(str(p).upper() for p in tup(self.precoders)))
        object.__setattr__(self, "power_alloc", tuple(str(p).upper() for p in tup(self.power_alloc)))
        if not self.snr_db:
            raise ConfigError("snr_db must not be empty")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.users < 1 or self.antennas_per_user < 1:
            raise ConfigError("users and antennas_per_user must be >= 1")
        if self.nb < self.users * self.antennas_per_user:
            raise ConfigError("nb must be >= users * antennas_per_user")
        for p in self.precoders:
            if p not in PRECODERS:
                raise ConfigError(f"unknown precoder {p!r}")
        for p in self.power_alloc:
            if p not in POWER_ALLOCS:
                raise ConfigError(f"unknown power allocation {p!r}")

    @property
    def nu(self) -> int:
        return self.users * self.antennas_per_user

    @property
    def partition(self) -> list[int]:
        return [self.antennas_per_user] * self.users

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        d = dict(d)
        csi = d.pop("csi", None)
        if csi is not None:
            r = csi.get("r", 0.0)
            if isinstance(r, (list, tuple)):
                r = complex(r[0], r[1])
            try:
                csi = CsiModel(r=r, sigma_e2=float(csi.get("sigma_e2", 0.0)))
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        try:
            return cls(csi=csi, **d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path) -> "ScenarioConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)


@dataclass(frozen=True)
class CurveKey:
    precoder: str
    bits: int | None
    power_alloc: str

    @property
    def label(self) -> str:
        return f"{self.precoder}-{_bits_label(self.bits)}-{self.power_alloc}"


@dataclass(frozen=True)
class RateResult:
    scenario_id: str
    snr_db: float
    precoder: str
    bits: int | None
    power_alloc: str
    mean_rate: float
    stderr: float
    n: int
    failed: int = 0
    samples: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def key(self) -> CurveKey:
        return CurveKey(self.precoder, self.bits, self.power_alloc)


def _cells(cfg: ScenarioConfig) -> list[CurveKey]:
    out = []
    for pc in cfg.precoders:
        for b in cfg.bits:
            for pa in cfg.power_alloc:
                if pc in ("ZF", "MMSE") and pa != "EQUAL":
                    continue
                out.append(CurveKey(pc, b, pa))
    return out


def _trial_channels(cfg: ScenarioConfig, trial: int, loaded=None):
    if loaded is not None:
        true = ChannelSet(H=loaded[trial], partition=cfg.partition)
    else:
        true = generate_iid(cfg.nb, cfg.partition, make_rng(cfg.seed, trial, _CHANNEL))
    est = true
    if cfg.csi is not None:
        est = apply_csi_model(true, cfg.csi, make_rng(cfg.seed, trial, _CSI))
    return true, est


def _run_trial(cfg: ScenarioConfig, cells, deltas, trial: int, loaded=None) -> np.ndarray:
    """Rates for every (cell, snr) of one trial; NaN marks a failed cell."""
    true, est = _trial_channels(cfg, trial, loaded)
    nu, p_total = cfg.nu, float(cfg.nu)
    out = np.full((len(cells), len(cfg.snr_db)), np.nan)
    cache = {}
    for s_i, snr_db in enumerate(cfg.snr_db):
        snr = 10.0 ** (snr_db / 10.0)
        n0 = nu / snr
        for c_i, cell in enumerate(cells):
            try:
                snr_free = cell.precoder in ("BD", "ZF")
                ck = (cell.precoder, None if snr_free else s_i)
                if ck not in cache:
                    cache[ck] = precoder.build(cell.precoder, est, p_total, n0)
                pre = cache[ck]
                delta = deltas[cell.bits]
                P = pre.p_matrix
                if cell.power_alloc != "EQUAL":
                    prob = poweralloc.AllocationProblem(pre.stream_gains2, nu, snr, delta, p_total)
                    if cell.power_alloc == "WF":
                        alloc = poweralloc.waterfill(prob)
                    else:
                        alloc = poweralloc.maas(prob)
                    P = precoder.set_power_loading(pre, pre.split(alloc.omega)).p_matrix
                out[c_i, s_i] = exact_cqa_rate(RateInputs(true.H, P, delta, snr, nu))
            except (CqaError, np.linalg.LinAlgError) as exc:
                log.warning("trial %d cell %s snr %.2f failed: %s", trial, cell.label, snr_db, exc)
    return out


def run_scenario(cfg: ScenarioConfig, threads: int = 1,
                 channels: Sequence[np.ndarray] | None = None) -> list[RateResult]:
    """Run the full grid and aggregate mean and standard error per cell.

    Each trial draws its channel from an RNG stream keyed by
    ``(seed, trial)``, so results do not depend on ``threads``.
    ``channels`` replaces the random draws with fixed true channels (one per
    trial).
    """
    if channels is not None and len(channels) < cfg.trials:
        raise ConfigError(f"{len(channels)} channels loaded, {cfg.trials} trials requested")
    cells = _cells(cfg)
    deltas = {b: (1.0 if b is None else build_quantizer(b, cfg.nb, float(cfg.nu)).delta)
              for b in cfg.bits}

    def work(t):
        return _run_trial(cfg, cells, deltas, t, channels)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_trial = list(pool.map(work, range(cfg.trials)))
    else:
        per_trial = [work(t) for t in range(cfg.trials)]
    cube = np.stack(per_trial)  # trials x cells x snr

    results = []
    for c_i, cell in enumerate(cells):
        for s_i, snr_db in enumerate(cfg.snr_db):
            x = cube[:, c_i, s_i]
            ok = x[np.isfinite(x)]
            n = ok.size
            mean = float(ok.mean()) if n else math.nan
            se = float(ok.std(ddof=1) / math.sqrt(n)) if n > 1 else (0.0 if n == 1 else math.nan)
            results.append(RateResult(
                scenario_id=cfg.scenario_id, snr_db=snr_db, precoder=cell.precoder,
                bits=cell.bits, power_alloc=cell.power_alloc, mean_rate=mean, stderr=se,
                n=n, failed=int(x.size - n), samples=x.copy(),
            ))
    return results


def failed_fraction(results: Iterable[RateResult]) -> float:
    results = list(results)
    if not results:
        return 0.0
    return sum(r.failed > 0 for r in results) / len(results)


def trial_channels(cfg: ScenarioConfig) -> list[np.ndarray]:
    """True channel matrices the sweep would draw, in trial order."""
    return [_trial_channels(cfg, t)[0].H for t in range(cfg.trials)]


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.6g}"
    return str(v)


def results_to_csv(results: Iterable[RateResult], out=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in results:
        w.writerow([r.scenario_id, _fmt(float(r.snr_db)), r.precoder, _bits_label(r.bits),
                    r.power_alloc, r.n + r.failed, _fmt(r.mean_rate), _fmt(r.stderr), r.failed])
    text = buf.getvalue()
    if out is not None:
        Path(out).write_text(text)
    return text


def _curves(results: Iterable[RateResult]) -> dict:
    curves: dict = {}
    for r in results:
        curves.setdefault(r.key, {})[r.snr_db] = r
    return curves


@dataclass(frozen=True)
class PairCheck:
    snr_db: float
    upper: str
    lower: str
    mean_diff: float
    p_value: float
    holds: bool
    significant: bool


@dataclass(frozen=True)
class HierarchyReport:
    checks: tuple
    alpha: float

    @property
    def violations(self) -> list[PairCheck]:
        """Pairs whose mean ordering is reversed."""
        return [c for c in self.checks if not c.holds]

    @property
    def insignificant(self) -> list[PairCheck]:
        """Pairs ordered correctly but without significance at ``alpha``."""
        return [c for c in self.checks if c.holds and not c.significant]

    def ranking(self, snr_db: float) -> list[str]:
        seen = []
        for c in self.checks:
            if c.snr_db == snr_db:
                for lab in (c.upper, c.lower):
                    if lab not in seen:
                        seen.append(lab)
        return seen


def compare_hierarchy(results: Iterable[RateResult], order: Sequence[CurveKey],
                      alpha: float = 0.05) -> HierarchyReport:
    """Check ``order[0] >= order[1] >= ...`` at every SNR with paired tests.

    For each adjacent pair the per-trial differences are tested with a
    one-sided one-sample t-test (H1: mean difference > 0). Identical curves
    give zero differences, which count as holding but not significant.
    """
    curves = _curves(results)
    for k in order:
        if k not in curves:
            raise MissingCurve(k.label)
    snrs = sorted(curves[order[0]])
    checks = []
    for snr in snrs:
        for hi, lo in zip(order[:-1], order[1:]):
            a, b = curves[hi][snr].samples, curves[lo][snr].samples
            ok = np.isfinite(a) & np.isfinite(b)
            d = a[ok] - b[ok]
            mean = float(d.mean()) if d.size else math.nan
            if d.size < 2 or np.allclose(d, d[0]):
                p = 0.0 if d.size and d[0] > 0 else 1.0
            else:
                p = float(stats.ttest_1samp(d, 0.0, alternative="greater").pvalue)
            holds = bool(d.size) and mean >= 0
            checks.append(PairCheck(snr, hi.label, lo.label, mean, p, holds, p < alpha))
    return HierarchyReport(checks=tuple(checks), alpha=alpha)


def horizontal_gap(results: Iterable[RateResult], better: CurveKey,
                   worse: CurveKey, n_levels: int = 200) -> tuple[float, float]:
    """Largest SNR saving (dB) of ``better`` over ``worse`` at equal rate.

    Both mean-rate curves are inverted by linear interpolation over the
    overlap of their rate ranges. Returns ``(gap_db, rate_at_gap)``; the gap
    is ``nan`` when the ranges do not overlap.
    """
    curves = _curves(results)
    for k in (better, worse):
        if k not in curves:
            raise MissingCurve(k.label)

    def xy(k):
        snrs = sorted(curves[k])
        rates = np.array([curves[k][s].mean_rate for s in snrs])
        # enforce monotone rates so the inverse is well-defined
        return np.maximum.accumulate(rates), np.array(snrs)

    rb, sb = xy(better)
    rw, sw = xy(worse)
    lo, hi = max(rb[0], rw[0]), min(rb[-1], rw[-1])
    if not hi > lo:
        return math.nan, math.nan
    levels = np.linspace(lo, hi, n_levels)
    gaps = np.interp(levels, rw, sw) - np.interp(levels, rb, sb)
    i = int(np.argmax(gaps))
    return float(gaps[i]), float(levels[i])
