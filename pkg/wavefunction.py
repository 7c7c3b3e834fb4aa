"""
Descriptions:
1. Direct measurement of a wavefunction psi(x) = <x|psi> on an N-point periodic grid
2. Scanning method: one weak measurement of |x><x| per grid point, post-selected on |p0>
3. Scan-free method: one transformation T0 = |p0><p0|, T1 = 1 for the whole grid, the final
   position measurement resolves every x at once:
       C(x) = P(x,+) - P(x,-) + i[P(x,+i) - P(x,-i)] = <psi|p0><p0|x><x|psi>
4. Both raw results are proportional to psi(x); recover() normalizes them
5. efficiency_compare() doubles the shot budget of each method until the median fidelity
   over seeded repetitions reaches the target

Note:
1. |p0> is the zero-momentum row of the unitary DFT, the uniform state 1/sqrt(N)
2. States with <p0|psi> = 0 cannot be measured by either method (DCNullError)
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from tqdm import tqdm

import linalg
from exceptions import (
    ConfigError,
    DCNullError,
    DimensionMismatchError,
    PhysicalityError,
    UndefinedEstimateError,
)
from framework import (
    BranchOperators,
    ControlledTransform,
    OutcomeDistribution,
    ProbeSetting,
    extract_resolved,
    resolved_probabilities,
)
from protocols import ConventionalWeak, ProtocolSpec, exact_distribution, invert
from sampling import SamplerConfig, sample

DC_TOL = 1e-10
ZERO_TOL = 1e-300
XY = (ProbeSetting.X, ProbeSetting.Y)
SCANNING = "scanning"
SCAN_FREE = "scan_free"
MAX_TOTAL_SHOTS = 2**30
GRID_COLUMNS = ["x", "c_re", "c_im", "psi_true_re", "psi_true_im", "psi_rec_re", "psi_rec_im"]
STATE_PARAMS = {
    "gaussian": {"x0", "sigma", "k"},
    "two_peak": {"x1", "x2", "sigma", "phase"},
    "random_smooth": {"seed", "cutoff"},
    "uniform": set(),
}


@dataclass(frozen=True, eq=False)
class GridState:
    amps: np.ndarray

    def __post_init__(self):
        amps = linalg.ket(self.amps)
        if not linalg.is_normalized(amps):
            raise PhysicalityError("grid state must be normalized", field="state")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @classmethod
    def from_amps(cls, amps) -> "GridState":
        return cls(linalg.ket(amps, normalize=True))

    @property
    def n(self) -> int:
        return self.amps.size


@dataclass
class DirectMeasResult:
    raw: np.ndarray
    recovered: GridState
    fidelity: float | None
    total_shots: int
    method: str

    def to_frame(self, truth: GridState) -> pd.DataFrame:
        return pd.DataFrame({
            "x": np.arange(self.recovered.n),
            "c_re": self.raw.real,
            "c_im": self.raw.imag,
            "psi_true_re": truth.amps.real,
            "psi_true_im": truth.amps.imag,
            "psi_rec_re": self.recovered.amps.real,
            "psi_rec_im": self.recovered.amps.imag,
        }, columns=GRID_COLUMNS)

    def summary(self, seed: int | None) -> dict:
        return {
            "method": self.method,
            "N": self.recovered.n,
            "shots": int(self.total_shots),
            "fidelity": self.fidelity,
            "seed": seed,
        }


# --------------------------
# Grid states
# --------------------------
def uniform_state(n: int) -> GridState:
    return GridState(np.full(n, 1.0 / math.sqrt(n), dtype=complex))


def position_state(n: int, x: int) -> GridState:
    return GridState(linalg.basis_ket(n, x))


def dc_component(psi: GridState) -> complex:
    # <p0|psi>
    return complex(psi.amps.sum() / math.sqrt(psi.n))


def require_dc(psi: GridState) -> complex:
    dc = dc_component(psi)
    if abs(dc) <= DC_TOL:
        raise DCNullError()
    return dc


def make_test_state(kind: str, n: int = 64, **params) -> GridState:
    """Normalized test wavefunctions: gaussian, two_peak, random_smooth, uniform."""
    if n < 2:
        raise ConfigError(f"grid size must be >= 2, got {n}", field="n")
    if kind not in STATE_PARAMS:
        raise ConfigError(f"unknown test state kind {kind!r}", field="kind")
    unknown = sorted(set(params) - STATE_PARAMS[kind])
    if unknown:
        raise ConfigError(f"{kind} state does not take parameters {unknown}", field="wavefunction.state.params")
    x = np.arange(n)

    if kind == "gaussian":
        x0 = params.get("x0", n / 2)
        sigma = params.get("sigma", n / 10)
        k = params.get("k", 0.0)
        amps = np.exp(-((x - x0) ** 2) / (4 * sigma**2) + 1j * k * x)
    elif kind == "two_peak":
        x1 = params.get("x1", n / 4)
        x2 = params.get("x2", 3 * n / 4)
        sigma = params.get("sigma", n / 16)
        phase = params.get("phase", 0.0)
        amps = np.exp(-((x - x1) ** 2) / (4 * sigma**2)) + np.exp(1j * phase) * np.exp(-((x - x2) ** 2) / (4 * sigma**2))
    elif kind == "random_smooth":
        rng = np.random.default_rng(params.get("seed", 0))
        cutoff = int(params.get("cutoff", 4))
        ps = np.arange(-cutoff, cutoff + 1)
        coeffs = (rng.normal(size=ps.size) + 1j * rng.normal(size=ps.size)) / (1.0 + np.abs(ps))
        # keep the zero-momentum coefficient away from zero
        coeffs[cutoff] = 1.0 + abs(coeffs[cutoff])
        amps = np.exp(2j * np.pi * np.outer(x, ps) / n) @ coeffs
    else:
        amps = np.ones(n, dtype=complex)

    psi = GridState.from_amps(amps)
    require_dc(psi)
    return psi


# --------------------------
# Recovery and scoring
# --------------------------
def recover(raw: np.ndarray) -> GridState:
    raw = np.asarray(raw, dtype=complex)
    norm = float(np.linalg.norm(raw))
    if norm <= ZERO_TOL or not math.isfinite(norm):
        raise UndefinedEstimateError("measured values are all zero", field="raw")
    return GridState(raw / norm)


def fidelity(a: GridState, b: GridState) -> float:
    if a.n != b.n:
        raise DimensionMismatchError(f"grid sizes differ: {a.n} vs {b.n}", field="state")
    return float(min(1.0, abs(np.vdot(a.amps, b.amps)) ** 2))


def _result(raw: np.ndarray, truth: GridState, total_shots: int, method: str) -> DirectMeasResult:
    recovered = recover(raw)
    return DirectMeasResult(raw, recovered, fidelity(recovered, truth), total_shots, method)


# --------------------------
# Scan-free method
# --------------------------
def scan_free_distribution(psi: GridState) -> OutcomeDistribution:
    require_dc(psi)
    p0 = uniform_state(psi.n).amps
    ct = ControlledTransform(linalg.projector(p0), linalg.identity(psi.n))
    branches = BranchOperators.from_transform(ct, linalg.projector(psi.amps))
    dist = OutcomeDistribution()
    for s in XY:
        dist = dist.merge(resolved_probabilities(branches, None, s))
    return dist


def scan_free(
    psi: GridState,
    cfg: SamplerConfig | None = None,
    repetition: int = 0,
    dist: OutcomeDistribution | None = None,
) -> DirectMeasResult:
    dist = scan_free_distribution(psi) if dist is None else dist
    if cfg is None:
        return _result(extract_resolved(dist, psi.n), psi, 0, SCAN_FREE)
    counts = sample(dist, cfg, repetition=repetition, settings=XY)
    raw = extract_resolved(counts.frequencies(), psi.n)
    return _result(raw, psi, sum(counts.shots(s) for s in XY), SCAN_FREE)


# --------------------------
# Scanning method
# --------------------------
def scan_specs(psi: GridState, xi: float) -> list:
    """(spec, exact distribution) of the weak measurement of |x><x| for every grid point."""
    if not (0 < xi <= math.pi / 2):
        raise PhysicalityError(f"scanning coupling must lie in (0, pi/2], got {xi}", field="xi")
    require_dc(psi)
    p0 = uniform_state(psi.n).amps
    out = []
    for x in range(psi.n):
        spec = ProtocolSpec(ConventionalWeak(xi), linalg.projector(linalg.basis_ket(psi.n, x)), psi.amps, p0)
        out.append((spec, exact_distribution(spec)))
    return out


def lundeen_scan(
    psi: GridState,
    xi: float,
    cfg: SamplerConfig | None = None,
    repetition: int = 0,
    prepared: list | None = None,
) -> DirectMeasResult:
    """cfg.shots is the per-point budget; total_shots = N x (shots X + shots Y)."""
    prepared = scan_specs(psi, xi) if prepared is None else prepared
    raw = np.zeros(psi.n, dtype=complex)
    total = 0
    for x, (spec, dist) in enumerate(prepared):
        if cfg is not None:
            counts = sample(dist, cfg, repetition=repetition, stream=x + 1, settings=XY)
            dist = counts.frequencies()
            total += sum(counts.shots(s) for s in XY)
        raw[x] = invert(spec, dist)[0]
    return _result(raw, psi, total, SCANNING)


# --------------------------
# Efficiency comparison
# --------------------------
@dataclass
class EfficiencyReport:
    target_fidelity: float
    xi_scan: float
    repetitions: int
    shots_scanning: int | None
    shots_scan_free: int | None
    scanning_floor: float
    scanning_unreachable: bool = False
    scan_free_unreachable: bool = False
    trace: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float | None:
        if self.shots_scanning is None or self.shots_scan_free is None:
            return None
        return self.shots_scanning / self.shots_scan_free

    def to_json_dict(self) -> dict:
        return {
            "target_fidelity": self.target_fidelity,
            "xi_scan": self.xi_scan,
            "repetitions": self.repetitions,
            "shots_scanning": self.shots_scanning,
            "shots_scan_free": self.shots_scan_free,
            "ratio": self.ratio,
            "scanning_floor": self.scanning_floor,
            "scanning_unreachable": self.scanning_unreachable,
            "scan_free_unreachable": self.scan_free_unreachable,
            "trace": {m: [[int(b), f] for b, f in pts] for m, pts in self.trace.items()},
        }


def _median_fidelity(run, reps: int, pool: ThreadPoolExecutor) -> float:
    def safe(r: int) -> float:
        try:
            return run(r).fidelity
        except UndefinedEstimateError:
            return 0.0

    return float(np.median(list(pool.map(safe, range(reps)))))


def _doubling_search(run_at_budget, start: int, target: float, max_total: int, reps: int, pool, bar) -> tuple:
    budget, trace = start, []
    while budget <= max_total:
        med = _median_fidelity(lambda r: run_at_budget(budget, r), reps, pool)
        trace.append((budget, med))
        bar.update(1)
        if med >= target:
            return budget, trace
        budget *= 2
    return None, trace


def efficiency_compare(
    psi: GridState,
    target_fidelity: float,
    xi_scan: float,
    seed: int,
    repetitions: int = 20,
    max_total_shots: int = MAX_TOTAL_SHOTS,
    workers: int = 1,
    progress: bool = False,
) -> EfficiencyReport:
    if not (0.0 <= target_fidelity < 1.0):
        raise ConfigError(f"target fidelity must lie in [0, 1), got {target_fidelity}", field="target_fidelity")
    n = psi.n
    free_dist = scan_free_distribution(psi)
    prepared = scan_specs(psi, xi_scan)
    floor = lundeen_scan(psi, xi_scan, prepared=prepared).fidelity

    def run_free(budget: int, r: int) -> DirectMeasResult:
        cfg = SamplerConfig.equal_split(seed, budget, XY)
        return scan_free(psi, cfg, repetition=r, dist=free_dist)

    def run_scan(budget: int, r: int) -> DirectMeasResult:
        cfg = SamplerConfig.equal_split(seed, budget // n, XY)
        return lundeen_scan(psi, xi_scan, cfg, repetition=r, prepared=prepared)

    bar = tqdm(desc="efficiency", disable=not progress)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        # minimum granularity: one shot per probe setting (per grid point when scanning)
        free_shots, free_trace = _doubling_search(run_free, len(XY), target_fidelity, max_total_shots, repetitions, pool, bar)
        if floor < target_fidelity:
            scan_shots, scan_trace = None, []
        else:
            scan_shots, scan_trace = _doubling_search(
                run_scan, len(XY) * n, target_fidelity, max_total_shots, repetitions, pool, bar
            )
    bar.close()

    return EfficiencyReport(
        target_fidelity=target_fidelity,
        xi_scan=xi_scan,
        repetitions=repetitions,
        shots_scanning=scan_shots,
        shots_scan_free=free_shots,
        scanning_floor=floor,
        scanning_unreachable=scan_shots is None,
        scan_free_unreachable=free_shots is None,
        trace={SCAN_FREE: free_trace, SCANNING: scan_trace},
    )
