"""
Descriptions:
1. Finite-shot layer on top of the exact OutcomeDistributions
2. Each (seed, probe setting, repetition, stream) owns its own Philox stream, so results do not
   depend on how repetitions are scheduled across workers
3. Estimates plug empirical frequencies into protocols.invert(); stderr comes from the
   first-order delta method (default) or a multinomial bootstrap
4. bias_variance_sweep() returns a pandas table, one row per xi in grid order
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from exceptions import ConfigError, InvalidDistributionError, UndefinedEstimateError
from framework import DISCARD, OutcomeDistribution, ProbeSetting
from protocols import (
    EstimateReport,
    ProtocolSpec,
    exact_distribution,
    exact_target,
    invert,
    required_settings,
    run_exact,
)

SETTING_CODES = {ProbeSetting.X: 0, ProbeSetting.Y: 1, ProbeSetting.Z: 2}
BOOTSTRAP_STREAM = 1 << 20
DELTA_STEP = 1e-7
SWEEP_COLUMNS = [
    "protocol", "xi", "shots_x", "shots_y", "shots_z", "reps", "est_re", "est_im",
    "bias_re", "bias_im", "emp_std", "mean_stderr", "success_prob", "seed",
]


@dataclass(frozen=True)
class SamplerConfig:
    seed: int
    shots: dict
    repetitions: int = 1
    bootstrap: int = 0  # resamples; 0 selects the delta method

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}", field="seed")
        shots = {ProbeSetting(s): int(m) for s, m in self.shots.items()}
        for s, m in shots.items():
            if m <= 0:
                raise ConfigError(f"shots for setting {s.value} must be positive, got {m}", field="shots")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1", field="repetitions")
        if self.bootstrap < 0:
            raise ConfigError("bootstrap resamples must be >= 0", field="bootstrap")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "shots", shots)

    @classmethod
    def equal_split(
        cls, seed: int, total_shots: int, settings: Sequence[ProbeSetting], repetitions: int = 1, bootstrap: int = 0
    ) -> "SamplerConfig":
        base, extra = divmod(int(total_shots), len(settings))
        shots = {s: base + (1 if i < extra else 0) for i, s in enumerate(settings)}
        return cls(seed, shots, repetitions, bootstrap)

    def shots_for(self, setting: ProbeSetting) -> int:
        if setting not in self.shots:
            raise ConfigError(f"no shot budget for setting {setting.value}", field="shots")
        return self.shots[setting]

    @property
    def total_shots(self) -> int:
        return sum(self.shots.values())


@dataclass
class ShotCounts:
    counts: dict = field(default_factory=dict)

    def __getitem__(self, setting: ProbeSetting) -> dict:
        if setting not in self.counts:
            raise InvalidDistributionError(f"no counts for setting {setting.value}", field="setting")
        return self.counts[setting]

    def settings(self) -> list:
        return list(self.counts)

    def shots(self, setting: ProbeSetting) -> int:
        return int(sum(self[setting].values()))

    def frequencies(self) -> OutcomeDistribution:
        probs = {}
        for setting, counts in self.counts.items():
            m = sum(counts.values())
            probs[setting] = {label: (n / m if m else 0.0) for label, n in counts.items()}
        return OutcomeDistribution(probs)


def substream(seed: int, setting: ProbeSetting, repetition: int, stream: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed), SETTING_CODES[setting], int(repetition), int(stream)])
    return np.random.Generator(np.random.Philox(ss))


def _pvals(probs: dict) -> tuple:
    labels = list(probs)
    p = np.clip(np.array([probs[label] for label in labels], dtype=float), 0.0, None)
    return labels, p / p.sum()


def sample(
    dist: OutcomeDistribution,
    cfg: SamplerConfig,
    repetition: int = 0,
    stream: int = 0,
    settings: Iterable[ProbeSetting] | None = None,
) -> ShotCounts:
    dist.validate()
    out = {}
    for setting in settings or dist.settings():
        labels, p = _pvals(dist[setting])
        rng = substream(cfg.seed, setting, repetition, stream)
        drawn = rng.multinomial(cfg.shots_for(setting), p)
        out[setting] = {label: int(n) for label, n in zip(labels, drawn)}
    return ShotCounts(out)


# --------------------------
# Estimators
# --------------------------
def _perturbed(freqs: OutcomeDistribution, setting: ProbeSetting, label: str, h: float) -> OutcomeDistribution:
    probs = dict(freqs.probabilities)
    probs[setting] = {**probs[setting], label: probs[setting][label] + h}
    return OutcomeDistribution(probs)


def delta_method_stderr(spec: ProtocolSpec, counts: ShotCounts) -> float:
    """sqrt(Var Re + Var Im) with multinomial covariance (diag(p) - p p^T)/M per setting."""
    freqs = counts.frequencies()
    var_re = var_im = 0.0
    for setting in required_settings(spec):
        m = counts.shots(setting)
        labels = [label for label in freqs[setting] if label != DISCARD]
        p = np.array([freqs[setting][label] for label in labels] + [freqs[setting].get(DISCARD, 0.0)])
        grad = np.zeros(len(p), dtype=complex)
        for j, label in enumerate(labels):
            up, _ = invert(spec, _perturbed(freqs, setting, label, DELTA_STEP))
            down, _ = invert(spec, _perturbed(freqs, setting, label, -DELTA_STEP))
            grad[j] = (up - down) / (2 * DELTA_STEP)
        # g^T (diag(p) - p p^T) g / M
        var_re += (np.dot(p, grad.real**2) - np.dot(p, grad.real) ** 2) / m
        var_im += (np.dot(p, grad.imag**2) - np.dot(p, grad.imag) ** 2) / m
    return math.sqrt(max(var_re, 0.0) + max(var_im, 0.0))


def bootstrap_stderr(spec: ProtocolSpec, counts: ShotCounts, cfg: SamplerConfig, repetition: int = 0) -> float:
    freqs = counts.frequencies()
    resampled = {}
    for setting in required_settings(spec):
        labels, p = _pvals(freqs[setting])
        rng = substream(cfg.seed, setting, repetition, BOOTSTRAP_STREAM)
        resampled[setting] = (labels, rng.multinomial(counts.shots(setting), p, size=cfg.bootstrap))

    estimates = []
    for b in range(cfg.bootstrap):
        boot = ShotCounts({s: dict(zip(labels, map(int, draws[b]))) for s, (labels, draws) in resampled.items()})
        try:
            estimates.append(invert(spec, boot.frequencies())[0])
        except UndefinedEstimateError:
            continue
    if len(estimates) < 2:
        return float("nan")
    est = np.array(estimates)
    return math.sqrt(np.var(est.real, ddof=1) + np.var(est.imag, ddof=1))


def estimate_from_counts(
    counts: ShotCounts, spec: ProtocolSpec, cfg: SamplerConfig | None = None, repetition: int = 0, target: complex | None = None
) -> EstimateReport:
    settings = required_settings(spec)
    missing = [s.value for s in settings if s not in counts.counts]
    if missing:
        raise InvalidDistributionError(f"{spec.name} needs counts for settings {missing}", field="setting")

    freqs = counts.frequencies()
    try:
        estimate, extras = invert(spec, freqs)
    except UndefinedEstimateError as exc:
        raise UndefinedEstimateError(str(exc), counts=counts) from exc

    if cfg is not None and cfg.bootstrap > 0:
        stderr = bootstrap_stderr(spec, counts, cfg, repetition)
    else:
        stderr = delta_method_stderr(spec, counts)

    return EstimateReport(
        protocol=spec.name,
        estimate=estimate,
        exact_target=exact_target(spec) if target is None else target,
        stderr=stderr,
        success_probability=1.0 - freqs.probability(settings[0], DISCARD),
        shots_used={s: counts.shots(s) for s in settings},
        xi=spec.xi,
        extras=extras,
    )


def run_sampled(spec: ProtocolSpec, cfg: SamplerConfig, repetition: int = 0, stream: int = 0) -> EstimateReport:
    dist = exact_distribution(spec)
    counts = sample(dist, cfg, repetition, stream, required_settings(spec))
    return estimate_from_counts(counts, spec, cfg, repetition)


# --------------------------
# Sweeps
# --------------------------
def bias_variance_sweep(
    spec_family: Callable[[float], ProtocolSpec],
    xi_grid: Sequence[float],
    cfg: SamplerConfig,
    workers: int = 1,
    progress: bool = False,
) -> pd.DataFrame:
    """Repeated seeded experiments per xi; bias is measured against the analytic value."""
    if len(xi_grid) == 0:
        raise ConfigError("xi grid is empty", field="xi_grid")

    rows = []
    bar = tqdm(total=len(xi_grid) * cfg.repetitions, desc="sweep", disable=not progress)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        for g, xi in enumerate(xi_grid):
            spec = spec_family(float(xi))
            settings = required_settings(spec)
            dist = exact_distribution(spec)
            target = exact_target(spec)

            def one_rep(r: int) -> EstimateReport:
                counts = sample(dist, cfg, repetition=r, stream=g, settings=settings)
                return estimate_from_counts(counts, spec, cfg, repetition=r, target=target)

            reports = []
            for report in pool.map(one_rep, range(cfg.repetitions)):
                reports.append(report)
                bar.update(1)

            est = np.array([r.estimate for r in reports])
            mean = complex(est.mean())
            emp_std = math.sqrt(np.var(est.real, ddof=1) + np.var(est.imag, ddof=1)) if len(est) > 1 else 0.0
            rows.append({
                "protocol": spec.name,
                "xi": float(xi),
                "shots_x": cfg.shots.get(ProbeSetting.X, 0) if ProbeSetting.X in settings else 0,
                "shots_y": cfg.shots.get(ProbeSetting.Y, 0) if ProbeSetting.Y in settings else 0,
                "shots_z": cfg.shots.get(ProbeSetting.Z, 0) if ProbeSetting.Z in settings else 0,
                "reps": cfg.repetitions,
                "est_re": mean.real,
                "est_im": mean.imag,
                "bias_re": (mean - target).real,
                "bias_im": (mean - target).imag,
                "emp_std": emp_std,
                "mean_stderr": float(np.mean([r.stderr for r in reports])),
                "success_prob": float(np.mean([r.success_probability for r in reports])),
                "seed": cfg.seed,
            })
    bar.close()
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def exact_sweep(spec_family: Callable[[float], ProtocolSpec], xi_grid: Sequence[float], seed: int = 0) -> pd.DataFrame:
    """Same table from exact probabilities: zero shots, zero spread, bias of the estimator itself."""
    if len(xi_grid) == 0:
        raise ConfigError("xi grid is empty", field="xi_grid")
    rows = []
    for xi in xi_grid:
        spec = spec_family(float(xi))
        report = run_exact(spec)
        rows.append({
            "protocol": spec.name, "xi": float(xi), "shots_x": 0, "shots_y": 0, "shots_z": 0, "reps": 0,
            "est_re": report.estimate.real, "est_im": report.estimate.imag,
            "bias_re": report.bias.real, "bias_im": report.bias.imag,
            "emp_std": 0.0, "mean_stderr": 0.0, "success_prob": report.success_probability, "seed": seed,
        })
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def rmse(row: pd.Series) -> float:
    """Root mean square error of the per-rep estimates from a sweep row."""
    reps = int(row["reps"])
    spread = row["emp_std"] ** 2 * (reps - 1) / reps if reps > 1 else 0.0
    return math.sqrt(row["bias_re"] ** 2 + row["bias_im"] ** 2 + spread)
