"""
Descriptions:
1. The weak-value measurement methods as exact-probability pipelines
2. Every method is a pair: exact_distribution(spec) builds the outcome probabilities,
   invert(spec, dist) turns (exact or empirical) probabilities into the estimate
3. Shot-based runs in sampling.py reuse invert() on empirical frequencies

Methods:
- conventional_weak : weak coupling exp(-i xi A (x) sigma_y), probe starts in |0>
- modified_weak     : {T0, T1} = {1, xi A}, inverted with P(0)
- strong_projector  : {T0, T1} = {1 - P, P}
- strong_pauli      : {T0, T1} = {1, sigma_i}
- modular_protocol  : {T0, T1} = {1, exp(-i xi A)}
- expanded_hilbert  : joint state (|psi_f>|0> + |psi_i>|1>)/sqrt(2), system resolved in the A eigenbasis
- kd_protocol       : {T0, T1} = {1, |a><a|}, boundary (rho_in, |b><b|)
"""

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import ClassVar

import numpy as np

import linalg
from exceptions import (
    DimensionMismatchError,
    NonHermitianError,
    PhysicalityError,
    RealizabilityError,
    UndefinedEstimateError,
)
from framework import (
    ALL_SETTINGS,
    Boundary,
    BranchOperators,
    ControlledTransform,
    OutcomeDistribution,
    ProbeSetting,
    branch_probabilities,
    extract_complex,
    extract_resolved,
    generalized_weak_value,
    measure_all,
    modular_value,
    resolved_probabilities,
    success_probability,
    validate_density,
    validate_ket,
    weak_value,
)

DEGENERATE_TOL = 1e-12
XY = (ProbeSetting.X, ProbeSetting.Y)


# --------------------------
# Method variants
# --------------------------
@dataclass(frozen=True)
class ConventionalWeak:
    xi: float
    name: ClassVar[str] = "conventional_weak"
    settings: ClassVar[tuple] = XY


@dataclass(frozen=True)
class ModifiedWeak:
    xi: float
    name: ClassVar[str] = "modified_weak"
    settings: ClassVar[tuple] = ALL_SETTINGS


@dataclass(frozen=True)
class StrongProjector:
    name: ClassVar[str] = "strong_projector"
    settings: ClassVar[tuple] = ALL_SETTINGS


@dataclass(frozen=True)
class StrongPauli:
    axis: str = "z"
    name: ClassVar[str] = "strong_pauli"
    settings: ClassVar[tuple] = ALL_SETTINGS


@dataclass(frozen=True)
class ModularValue:
    xi: float
    name: ClassVar[str] = "modular_value"
    settings: ClassVar[tuple] = ALL_SETTINGS


@dataclass(frozen=True)
class ExpandedHilbert:
    name: ClassVar[str] = "expanded_hilbert"
    settings: ClassVar[tuple] = XY


@dataclass(frozen=True, eq=False)
class KirkwoodDirac:
    ket_a: np.ndarray
    ket_b: np.ndarray
    name: ClassVar[str] = "kirkwood_dirac"
    settings: ClassVar[tuple] = XY


VARIANTS = (ConventionalWeak, ModifiedWeak, StrongProjector, StrongPauli, ModularValue, ExpandedHilbert, KirkwoodDirac)


@dataclass(frozen=True, eq=False)
class ProtocolSpec:
    """A method plus the observable and boundary it runs on.

    Kirkwood-Dirac specs carry rho_in (and no observable or kets); every other method
    carries pure pre- and post-selected kets.
    """

    variant: object
    observable: np.ndarray | None = None
    psi_i: np.ndarray | None = None
    psi_f: np.ndarray | None = None
    rho_in: np.ndarray | None = None

    def __post_init__(self):
        v = self.variant
        if isinstance(v, KirkwoodDirac):
            rho = validate_density(self.rho_in, "rho_in")
            ket_a = validate_ket(v.ket_a, "ket_a")
            ket_b = validate_ket(v.ket_b, "ket_b")
            if not (ket_a.size == ket_b.size == rho.shape[0]):
                raise DimensionMismatchError("Kirkwood-Dirac kets must match rho_in", field="ket_a")
            object.__setattr__(self, "rho_in", rho)
            object.__setattr__(self, "variant", KirkwoodDirac(ket_a, ket_b))
            return

        if isinstance(v, StrongPauli):
            axis = v.axis.lower()
            if axis not in linalg.PAULIS:
                raise PhysicalityError(f"Pauli axis must be x, y or z, got {v.axis!r}", field="axis")
            object.__setattr__(self, "variant", StrongPauli(axis))
            object.__setattr__(self, "observable", linalg.PAULIS[axis])

        psi_i = validate_ket(self.psi_i, "psi_i")
        psi_f = validate_ket(self.psi_f, "psi_f")
        if psi_i.size != psi_f.size:
            raise DimensionMismatchError("pre- and post-selected states differ in dimension", field="psi_f")
        object.__setattr__(self, "psi_i", psi_i)
        object.__setattr__(self, "psi_f", psi_f)

        a = linalg.operator(self.observable)
        if a.shape[0] != psi_i.size:
            raise DimensionMismatchError(f"observable is {a.shape}, states have dim {psi_i.size}", field="observable")
        if not linalg.is_hermitian(a):
            raise NonHermitianError("observable must be Hermitian", field="observable")
        object.__setattr__(self, "observable", a)

        xi = getattr(v, "xi", None)
        if xi is not None and not math.isfinite(xi):
            raise PhysicalityError(f"coupling xi must be finite, got {xi}", field="xi")
        # the modular value is defined at any strength, xi = 0 included
        if xi is not None and not isinstance(v, ModularValue) and xi <= 0:
            raise PhysicalityError(f"coupling xi must be positive, got {xi}", field="xi")
        if isinstance(v, ModifiedWeak) and xi * self.a_max > 1.0 + linalg.CONTRACTION_TOL:
            raise RealizabilityError(
                f"xi * a_max = {xi * self.a_max:.6g} > 1, T1 = xi A is not a contraction", field="xi"
            )
        if isinstance(v, StrongProjector) and not linalg.is_projector(a):
            raise PhysicalityError("strong_projector needs a projector observable", field="observable")
        if isinstance(v, StrongPauli) and a.shape != (2, 2):
            raise DimensionMismatchError("strong_pauli needs a qubit system", field="psi_i")

    @property
    def name(self) -> str:
        return self.variant.name

    @property
    def xi(self) -> float | None:
        return getattr(self.variant, "xi", None)

    @cached_property
    def spectrum(self) -> tuple:
        return _spectrum(self.observable)

    @cached_property
    def a_max(self) -> float:
        values, _ = self.spectrum
        return float(np.max(np.abs(values)))

    @cached_property
    def clusters(self) -> list:
        values, _ = self.spectrum
        return linalg.eigenspace_clusters(values)

    @cached_property
    def cluster_values(self) -> np.ndarray:
        values, _ = self.spectrum
        return np.array([values[c].mean() for c in self.clusters])


def _spectrum(a: np.ndarray) -> tuple:
    # diagonal observables (position projectors, sigma_z) need no rotations
    if np.count_nonzero(a - np.diag(np.diag(a))) == 0:
        diag = np.diag(a).real
        order = np.argsort(-diag, kind="stable")
        return diag[order], np.eye(a.shape[0], dtype=complex)[:, order]
    return linalg.herm_eig(a)


@dataclass
class EstimateReport:
    protocol: str
    estimate: complex
    exact_target: complex
    bias: complex | None = None
    stderr: float = 0.0
    success_probability: float = 0.0
    shots_used: dict = field(default_factory=dict)
    xi: float | None = None
    extras: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        def pair(z):
            return None if z is None else [float(z.real), float(z.imag)]

        extras = {k: pair(v) if isinstance(v, complex) else v for k, v in self.extras.items()}
        return {
            "protocol": self.protocol,
            "xi": self.xi,
            "estimate": pair(self.estimate),
            "exact_target": pair(self.exact_target),
            "bias": pair(self.bias),
            "bias_note": "simulator affordance: measured against the analytic value",
            "stderr": float(self.stderr),
            "success_probability": float(self.success_probability),
            "shots_used": {s.value if isinstance(s, ProbeSetting) else s: int(n) for s, n in self.shots_used.items()},
            "extras": extras,
        }


# --------------------------
# Distribution builders
# --------------------------
def required_settings(spec: ProtocolSpec) -> tuple:
    return spec.variant.settings


def controlled_transform(spec: ProtocolSpec) -> ControlledTransform:
    v, a = spec.variant, spec.observable
    d = a.shape[0] if a is not None else spec.rho_in.shape[0]
    if isinstance(v, ModifiedWeak):
        return ControlledTransform(linalg.identity(d), v.xi * a)
    if isinstance(v, StrongProjector):
        return ControlledTransform(linalg.identity(d) - a, a)
    if isinstance(v, StrongPauli):
        return ControlledTransform(linalg.IDENTITY2, a)
    if isinstance(v, ModularValue):
        values, vecs = spec.spectrum
        return ControlledTransform(linalg.identity(d), (vecs * np.exp(-1j * v.xi * values)) @ linalg.dagger(vecs))
    if isinstance(v, KirkwoodDirac):
        return ControlledTransform(linalg.identity(d), linalg.projector(v.ket_a))
    raise PhysicalityError(f"{v.name} has no probe-controlled transformation", field="protocol")


def boundary(spec: ProtocolSpec) -> Boundary:
    if isinstance(spec.variant, KirkwoodDirac):
        return Boundary(spec.rho_in, linalg.projector(spec.variant.ket_b))
    return Boundary.pure(spec.psi_i, spec.psi_f)


def coupling_branches(spec: ProtocolSpec) -> BranchOperators:
    """Branch kets of exp(-i xi A (x) sigma_y)|psi_i>|0> = cos(xi A)|psi_i>|0> + sin(xi A)|psi_i>|1>."""
    xi, a = spec.xi, spec.observable
    if linalg.is_projector(a):
        # cos(xi P) = 1 + (cos xi - 1) P, sin(xi P) = sin(xi) P
        p_psi = a @ spec.psi_i
        cos_psi = spec.psi_i + (math.cos(xi) - 1.0) * p_psi
        sin_psi = math.sin(xi) * p_psi
    else:
        values, vecs = spec.spectrum
        coeffs = linalg.dagger(vecs) @ spec.psi_i
        cos_psi = vecs @ (np.cos(xi * values) * coeffs)
        sin_psi = vecs @ (np.sin(xi * values) * coeffs)
    root2 = math.sqrt(2.0)
    return BranchOperators.from_kets(root2 * cos_psi, root2 * sin_psi)


def exact_distribution(spec: ProtocolSpec) -> OutcomeDistribution:
    v = spec.variant
    if isinstance(v, ConventionalWeak):
        branches = coupling_branches(spec)
        effect = linalg.projector(spec.psi_f)
        return OutcomeDistribution({s: branch_probabilities(branches, effect, s) for s in v.settings})
    if isinstance(v, ExpandedHilbert):
        branches = BranchOperators.from_kets(spec.psi_f, spec.psi_i)
        _, vecs = spec.spectrum
        dist = OutcomeDistribution()
        for s in v.settings:
            dist = dist.merge(resolved_probabilities(branches, vecs, s, spec.clusters))
        return dist
    return measure_all(controlled_transform(spec), boundary(spec), v.settings)


# --------------------------
# Inversion
# --------------------------
def _require(denominator: float | complex, what: str, dist: OutcomeDistribution) -> None:
    if abs(denominator) <= DEGENERATE_TOL:
        raise UndefinedEstimateError(f"{what} vanishes, estimator undefined", counts=dist)


def invert(spec: ProtocolSpec, dist: OutcomeDistribution) -> tuple:
    """(estimate, extras) from a distribution holding every required setting."""
    v = spec.variant

    if isinstance(v, ExpandedHilbert):
        c_values = extract_resolved(dist, len(spec.clusters))
        total = complex(c_values.sum())
        _require(total, "sum of C_j", dist)
        estimate = complex(np.dot(spec.cluster_values, c_values)) / total
        return estimate, {"c_values": [[float(c.real), float(c.imag)] for c in c_values]}

    c = extract_complex(dist)
    if isinstance(v, KirkwoodDirac):
        return c, {}

    if isinstance(v, ConventionalWeak):
        kept = dist.probability(ProbeSetting.X, "+") + dist.probability(ProbeSetting.X, "-")
        _require(kept, "post-selection probability P(+) + P(-)", dist)
        return c / (2.0 * v.xi * kept), {"post_selection": kept}

    p0 = dist.probability(ProbeSetting.Z, "0")
    p1 = dist.probability(ProbeSetting.Z, "1")

    if isinstance(v, StrongProjector):
        den_p0 = 2.0 * p0 + c
        den_p1 = 2.0 * p1 + c.conjugate()
        route_p0 = c / den_p0 if abs(den_p0) > DEGENERATE_TOL else None
        route_p1 = 2.0 * p1 / den_p1 if abs(den_p1) > DEGENERATE_TOL else None
        _require(max(abs(den_p0), abs(den_p1)), "strong-projector denominator", dist)
        estimate = route_p0 if abs(den_p0) >= abs(den_p1) else route_p1
        return estimate, {"route_p0": route_p0, "route_p1": route_p1, "p0": p0, "p1": p1}

    _require(p0, "P(0)", dist)
    if isinstance(v, ModifiedWeak):
        return c / (2.0 * p0 * v.xi), {"p0": p0}
    # StrongPauli, ModularValue
    return c / (2.0 * p0), {"p0": p0}


def exact_target(spec: ProtocolSpec) -> complex:
    v = spec.variant
    if isinstance(v, KirkwoodDirac):
        return linalg.inner(v.ket_b, v.ket_a) * linalg.inner(v.ket_a, spec.rho_in @ v.ket_b)
    if isinstance(v, ModularValue):
        return modular_value(spec.observable, v.xi, spec.psi_i, spec.psi_f)
    return weak_value(spec.observable, spec.psi_i, spec.psi_f)


def run_exact(spec: ProtocolSpec) -> EstimateReport:
    target = exact_target(spec)
    dist = exact_distribution(spec)
    estimate, extras = invert(spec, dist)
    return EstimateReport(
        protocol=spec.name,
        estimate=estimate,
        exact_target=target,
        bias=estimate - target,
        success_probability=success_probability(dist, required_settings(spec)[0]),
        shots_used={s: 0 for s in required_settings(spec)},
        xi=spec.xi,
        extras=extras,
    )


# --------------------------
# Method entry points
# --------------------------
def conventional_weak(a: np.ndarray, xi: float, psi_i: np.ndarray, psi_f: np.ndarray) -> EstimateReport:
    return run_exact(ProtocolSpec(ConventionalWeak(xi), a, psi_i, psi_f))


def modified_weak(a: np.ndarray, xi: float, psi_i: np.ndarray, psi_f: np.ndarray) -> EstimateReport:
    return run_exact(ProtocolSpec(ModifiedWeak(xi), a, psi_i, psi_f))


def strong_projector(pi: np.ndarray, psi_i: np.ndarray, psi_f: np.ndarray) -> EstimateReport:
    report = run_exact(ProtocolSpec(StrongProjector(), pi, psi_i, psi_f))
    # P(1) = |<psi_f|psi_i>|^2 |<P>_w|^2 / 2
    overlap = abs(linalg.inner(psi_f, psi_i)) ** 2
    report.extras["p1_expected"] = overlap * abs(report.exact_target) ** 2 / 2.0
    return report


def strong_pauli(axis: str, psi_i: np.ndarray, psi_f: np.ndarray) -> EstimateReport:
    return run_exact(ProtocolSpec(StrongPauli(axis), None, psi_i, psi_f))


def modular_protocol(a: np.ndarray, xi: float, psi_i: np.ndarray, psi_f: np.ndarray) -> EstimateReport:
    return run_exact(ProtocolSpec(ModularValue(xi), a, psi_i, psi_f))


def expanded_hilbert(a: np.ndarray, psi_i: np.ndarray, psi_f: np.ndarray) -> EstimateReport:
    return run_exact(ProtocolSpec(ExpandedHilbert(), a, psi_i, psi_f))


def kd_protocol(rho_in: np.ndarray, ket_a: np.ndarray, ket_b: np.ndarray) -> complex:
    spec = ProtocolSpec(KirkwoodDirac(ket_a, ket_b), rho_in=rho_in)
    return invert(spec, exact_distribution(spec))[0]


def kd_grid_protocol(rho_in: np.ndarray, basis_a: np.ndarray, basis_b: np.ndarray) -> np.ndarray:
    d = basis_a.shape[1]
    grid = np.zeros((d, basis_b.shape[1]), dtype=complex)
    for i in range(d):
        for j in range(basis_b.shape[1]):
            grid[i, j] = kd_protocol(rho_in, basis_a[:, i], basis_b[:, j])
    return grid


def kd_weak_route(rho_in: np.ndarray, ket_a: np.ndarray, ket_b: np.ndarray) -> complex:
    """<b|a><a|rho|b> as generalized weak value of |a><a| times the post-selection probability."""
    effect = linalg.projector(ket_b)
    return generalized_weak_value(linalg.projector(ket_a), rho_in, effect) * complex(np.trace(effect @ rho_in))
