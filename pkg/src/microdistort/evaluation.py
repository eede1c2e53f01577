"""Monte-Carlo false-positive / false-negative evaluation.

Each trial draws a window of ``n`` readings from a trace and a fresh key,
then runs the detector on the honest distorted stream (FP) and on each
forged stream (FN).  Per-trial seeds come from labeled hashes of the master
seed, so a trial's outcome depends only on its index.  Splitting trials
across workers therefore cannot change the report.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from statistics import NormalDist

import numpy as np

from . import kernels
from .detection import DetectorConfig
from .distortion import epsilon_ticks
from .keystream import derive_seed, seed_words
from .traces import SensorTrace, ticks_float

ATTACKS = ("eda", "rda")
_STREAM = {"eda": 1, "rda": 2}
_DETECTOR_CODE = {"simple": 0, "delta": 1, "filtered": 2}
_TITLES = {"simple": "Simple Mean Difference", "delta": "Delta Mean Difference",
           "filtered": "Filtered Delta Mean Difference", "lsb": "LSB Check"}
Z95 = NormalDist().inv_cdf(0.975)


def wilson(k: int, n: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for ``k`` successes in ``n`` trials, as fractions."""
    if n == 0:
        return 0.0, 1.0
    p = k / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass(frozen=True)
class TrialConfig:
    detector: str
    n: int
    trials: int
    detector_config: DetectorConfig
    attacks: tuple = ATTACKS
    master_seed: int = 0
    sampling: str = "random"
    noise_std: float = 0.0
    paired: bool = True
    max_window: int | None = None

    def validate(self, trace_len: int):
        if self.detector not in _DETECTOR_CODE:
            raise ValueError(f"run_trials supports {tuple(_DETECTOR_CODE)}, got {self.detector!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.n < 3:
            raise ValueError("window n must be >= 3")
        if self.max_window is not None and self.n > self.max_window:
            raise ValueError(f"n={self.n} exceeds the cap of {self.max_window} samples")
        if trace_len < self.n:
            raise ValueError(f"trace has {trace_len} samples, shorter than n={self.n}")
        if self.sampling not in ("random", "disjoint"):
            raise ValueError("sampling must be 'random' or 'disjoint'")
        if self.sampling == "disjoint" and self.trials * self.n > trace_len:
            raise ValueError(f"disjoint sampling needs {self.trials * self.n} samples, trace has {trace_len}")
        for a in self.attacks:
            if a not in ATTACKS:
                raise ValueError(f"unknown attack {a!r}; expected a subset of {ATTACKS}")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        self.detector_config.validate(self.detector)


@dataclass
class FpFnReport:
    detector: str
    n: int
    trials: int
    fp_pct: float
    fn_pct: dict
    fp_ci: list
    fn_ci: dict
    counts: dict
    config: dict = field(default_factory=dict)

    @property
    def fp_half_width(self) -> float:
        return (self.fp_ci[1] - self.fp_ci[0]) / 2

    def fn_half_width(self, attack: str) -> float:
        lo, hi = self.fn_ci[attack]
        return (hi - lo) / 2

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def _json_num(x):
    return None if x is None or math.isinf(x) else x


def config_echo(trace: SensorTrace, cfg: TrialConfig) -> dict:
    dc = cfg.detector_config
    return {
        "detector": cfg.detector, "n": cfg.n, "trials": cfg.trials,
        "epsilon": dc.epsilon,
        "delta_threshold": _json_num(dc.delta_threshold) if cfg.detector == "filtered" else None,
        "min_evidence": dc.min_evidence_for(cfg.n) if cfg.detector != "simple" else None,
        "band": list(dc.band_for(cfg.detector)),
        "attacks": list(cfg.attacks), "master_seed": cfg.master_seed,
        "sampling": cfg.sampling, "paired": cfg.paired, "noise_std": cfg.noise_std,
        "trace_length": len(trace), "resolution": trace.resolution, "unit": trace.unit,
    }


def _seeds(master, label, n, count):
    return seed_words(derive_seed(master, label, n), count)


def _starts(cfg: TrialConfig, trace_len: int, label: str) -> np.ndarray:
    if cfg.sampling == "disjoint":
        return np.arange(cfg.trials, dtype=np.int64) * cfg.n
    span = np.uint64(trace_len - cfg.n + 1)
    return (_seeds(cfg.master_seed, label, cfg.n, cfg.trials) % span).astype(np.int64)


def _chunks(total, jobs):
    parts = max(1, min(total, jobs * 4))
    edges = np.linspace(0, total, parts + 1).astype(int)
    return [(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _run_streams(trace, cfg, streams, prefix, jobs):
    dc = cfg.detector_config
    res = trace.resolution
    eps = epsilon_ticks(dc.epsilon, res)
    lo, hi = (ticks_float(v, res) for v in dc.band_for(cfg.detector))
    dth = ticks_float(dc.delta_threshold, res) if cfg.detector == "filtered" else math.inf
    m = dc.min_evidence_for(cfg.n)
    noise = ticks_float(cfg.noise_std, res) if cfg.noise_std else 0.0
    starts = _starts(cfg, len(trace), prefix + "window")
    key_seeds = _seeds(cfg.master_seed, prefix + "key", cfg.n, cfg.trials)
    atk_seeds = _seeds(cfg.master_seed, prefix + "attacker", cfg.n, cfg.trials)
    noise_seeds = _seeds(cfg.master_seed, prefix + "noise", cfg.n, cfg.trials)
    mask = np.array(streams, dtype=np.uint8)
    code = _DETECTOR_CODE[cfg.detector]

    def work(span):
        a, b = span
        return kernels.run_trials(trace.ticks, trace.breaks, cfg.n, starts[a:b], key_seeds[a:b],
                                  atk_seeds[a:b], noise_seeds[a:b], eps, noise, code, dth, m,
                                  lo, hi, mask)

    spans = _chunks(cfg.trials, jobs)
    if jobs <= 1 or len(spans) == 1:
        parts = [work(s) for s in spans]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(work, spans))
    reasons = np.concatenate([p[0] for p in parts])
    gauges = np.concatenate([p[1] for p in parts])
    return reasons, gauges


def trial_outcomes(trace: SensorTrace, cfg: TrialConfig, jobs: int | None = None):
    """Reason codes and gauges (physical units) per trial, shaped (T, 3).

    Columns are honest, EDA, RDA; a column for an attack not requested holds
    reason -1 and a NaN gauge.
    """
    cfg.validate(len(trace))
    jobs = default_jobs() if jobs is None else max(1, int(jobs))
    want = [1, int("eda" in cfg.attacks), int("rda" in cfg.attacks)]
    if cfg.paired:
        reasons, gauges = _run_streams(trace, cfg, want, "", jobs)
    else:
        r0, g0 = _run_streams(trace, cfg, [1, 0, 0], "", jobs)
        r1, g1 = _run_streams(trace, cfg, [0] + want[1:], "attack-", jobs)
        reasons = np.where(r0 >= 0, r0, r1)
        gauges = np.where(r0 >= 0, g0, g1)
    return reasons, gauges * trace.resolution


def default_jobs() -> int:
    return os.cpu_count() or 1


def run_trials(trace: SensorTrace, config: TrialConfig, jobs: int | None = None) -> FpFnReport:
    reasons, _ = trial_outcomes(trace, config, jobs)
    T = config.trials
    fp = int(np.count_nonzero(reasons[:, 0] != kernels.OK))
    fp_lo, fp_hi = wilson(fp, T)
    fn_pct, fn_ci, counts = {}, {}, {"fp_alarms": fp}
    for a in config.attacks:
        missed = int(np.count_nonzero(reasons[:, _STREAM[a]] == kernels.OK))
        lo, hi = wilson(missed, T)
        fn_pct[a] = 100.0 * missed / T
        fn_ci[a] = [100.0 * lo, 100.0 * hi]
        counts[f"fn_{a}_missed"] = missed
    return FpFnReport(config.detector, config.n, T, 100.0 * fp / T, fn_pct,
                      [100.0 * fp_lo, 100.0 * fp_hi], fn_ci, counts, config_echo(trace, config))


def sweep(trace: SensorTrace, base_config: TrialConfig, n_values, jobs: int | None = None) -> list:
    return [run_trials(trace, replace(base_config, n=int(n)), jobs) for n in sorted(n_values)]


def run_lsb_trials(t: int, trials: int, master_seed: int = 0, jobs: int | None = None) -> FpFnReport:
    """Two-layer LSB scheme against a coin-guessing forger.

    Only LSBs matter to this detector, so the kernel works on bits alone.
    Honest streams carry the selected key bit by construction; FP is 0.
    """
    if t < 1 or trials < 1:
        raise ValueError("t and trials must be >= 1")
    jobs = default_jobs() if jobs is None else max(1, int(jobs))
    s1, s2, s3, sa = (_seeds(master_seed, lab, t, trials) for lab in ("sk1", "sk2", "sk3", "attacker"))

    def work(span):
        a, b = span
        return kernels.lsb_trials(s1[a:b], s2[a:b], s3[a:b], sa[a:b], t)

    spans = _chunks(trials, jobs)
    if jobs <= 1:
        hits = np.concatenate([work(s) for s in spans])
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            hits = np.concatenate(list(pool.map(work, spans)))
    missed = int(hits.sum())
    lo, hi = wilson(missed, trials)
    echo = {"detector": "lsb", "t": t, "trials": trials, "master_seed": master_seed,
            "attacks": ["lsb-guess"], "scheme": "digital-two-layer"}
    return FpFnReport("lsb", t, trials, 0.0, {"lsb-guess": 100.0 * missed / trials},
                      [0.0, 100.0 * wilson(0, trials)[1]], {"lsb-guess": [100.0 * lo, 100.0 * hi]},
                      {"fp_alarms": 0, "fn_lsb-guess_missed": missed}, echo)


# --- output ------------------------------------------------------------------

FORMATS = ("json", "csv", "markdown")
CSV_HEADER = "detector,n,fp_pct,fn_eda_pct,fn_rda_pct,trials"


def _as_list(report):
    return [report] if isinstance(report, FpFnReport) else list(report)


def _pct(x):
    return "" if x is None else f"{x:.2f}"


def emit_report(report, fmt: str = "json") -> bytes:
    reports = _as_list(report)
    if fmt == "json":
        return (json.dumps([r.to_dict() for r in reports], indent=2) + "\n").encode()
    if fmt == "csv":
        lines = [CSV_HEADER]
        for r in reports:
            lines.append(",".join([r.detector, str(r.n), repr(r.fp_pct), _csv(r.fn_pct.get("eda")),
                                   _csv(r.fn_pct.get("rda")), str(r.trials)]))
        return ("\n".join(lines) + "\n").encode()
    if fmt == "markdown":
        return _markdown(reports).encode()
    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def _csv(x):
    return "" if x is None else repr(x)


def _markdown(reports) -> str:
    detectors = [d for d in ("simple", "delta", "filtered", "lsb") if any(r.detector == d for r in reports)]
    cells = {(r.detector, r.n): r for r in reports}
    ns = sorted({r.n for r in reports})
    head = ["n"]
    for d in detectors:
        head += [f"{_TITLES[d]} FP (%)", f"{_TITLES[d]} FN EDA (%)", f"{_TITLES[d]} FN RDA (%)"]
    out = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for n in ns:
        row = [str(n)]
        for d in detectors:
            r = cells.get((d, n))
            if r is None:
                row += ["", "", ""]
            else:
                row += [_pct(r.fp_pct), _pct(r.fn_pct.get("eda")), _pct(r.fn_pct.get("rda"))]
        out.append("| " + " | ".join(row) + " |")
    return "\n".join(out) + "\n"


def reports_from_json(data) -> list:
    return [FpFnReport.from_dict(d) for d in json.loads(data)]
