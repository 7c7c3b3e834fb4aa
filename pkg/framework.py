"""
Descriptions:
1. Probe-controlled system transformation T = T0 (x) |0><0| + T1 (x) |1><1| acting on rho_i (x) |+><+|
2. Joint probabilities of post-selection and probe outcome for the X, Y and Z probe bases
3. Complex-value extraction P(+) - P(-) + i[P(+i) - P(-i)] = tr(rho_i T0^dag rho_f T1)
4. Weak value, modular value, Kirkwood-Dirac distribution

Steps:
1. The joint state after T is written as 1/2 sum_jk G_jk (x) |j><k| (BranchOperators)
2. Every probability is a trace of a G block against the post-selection effect
3. "discard" collects the probability that T fails or the post-selection fails
"""

import cmath
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

import linalg
from exceptions import (
    DimensionMismatchError,
    InvalidDistributionError,
    NonHermitianError,
    PhysicalityError,
    RealizabilityError,
    UndefinedWeakValueError,
)

OVERLAP_TOL = 1e-12
TRACE_TOL = 1e-10
SUM_TOL = 1e-12
DISCARD = "discard"


class ProbeSetting(str, Enum):
    X = "X"  # {|+>, |->}
    Y = "Y"  # {|+i>, |-i>}
    Z = "Z"  # {|0>, |1>}


PROBE_OUTCOMES = {
    ProbeSetting.X: ("+", "-"),
    ProbeSetting.Y: ("+i", "-i"),
    ProbeSetting.Z: ("0", "1"),
}

ALL_SETTINGS = (ProbeSetting.X, ProbeSetting.Y, ProbeSetting.Z)


def resolved_label(k: int, probe_label: str) -> str:
    return f"{k}|{probe_label}"


# --------------------------
# Validation helpers
# --------------------------
def validate_density(rho: np.ndarray, field_name: str = "initial") -> np.ndarray:
    rho = linalg.operator(rho)
    if not linalg.is_hermitian(rho):
        raise NonHermitianError("density operator must be Hermitian", field=field_name)
    if abs(np.trace(rho).real - 1.0) > TRACE_TOL:
        raise PhysicalityError(f"density operator must have unit trace, got {np.trace(rho).real:.6g}", field=field_name)
    if not linalg.is_psd(rho):
        raise PhysicalityError("density operator must be positive semidefinite", field=field_name)
    return rho


def validate_effect(effect: np.ndarray, field_name: str = "final_effect") -> np.ndarray:
    effect = linalg.operator(effect)
    if not linalg.is_hermitian(effect):
        raise NonHermitianError("post-selection effect must be Hermitian", field=field_name)
    if not linalg.is_psd(effect):
        raise PhysicalityError("post-selection effect must be positive semidefinite", field=field_name)
    if not linalg.is_contraction(effect):
        raise RealizabilityError("post-selection effect must not exceed the identity", field=field_name)
    return effect


def validate_ket(psi: np.ndarray, field_name: str) -> np.ndarray:
    psi = linalg.ket(psi)
    if not linalg.is_normalized(psi):
        raise PhysicalityError("state vector must be normalized", field=field_name)
    return psi


# --------------------------
# Domain types
# --------------------------
@dataclass(frozen=True)
class ControlledTransform:
    t0: np.ndarray
    t1: np.ndarray

    def __post_init__(self):
        t0 = linalg.operator(self.t0)
        t1 = linalg.operator(self.t1)
        if t0.shape != t1.shape:
            raise DimensionMismatchError(f"T0 is {t0.shape}, T1 is {t1.shape}", field="t1")
        for name, t in (("t0", t0), ("t1", t1)):
            if not linalg.is_contraction(t):
                raise RealizabilityError(
                    f"{name} has spectral norm {linalg.spectral_norm(t):.6g} > 1, not physically realizable",
                    field=name,
                )
        object.__setattr__(self, "t0", t0)
        object.__setattr__(self, "t1", t1)

    @property
    def dim(self) -> int:
        return self.t0.shape[0]


@dataclass(frozen=True)
class Boundary:
    initial: np.ndarray
    final_effect: np.ndarray

    def __post_init__(self):
        initial = validate_density(self.initial, "initial")
        effect = validate_effect(self.final_effect, "final_effect")
        if initial.shape != effect.shape:
            raise DimensionMismatchError(f"rho_i is {initial.shape}, effect is {effect.shape}", field="final_effect")
        object.__setattr__(self, "initial", initial)
        object.__setattr__(self, "final_effect", effect)

    @classmethod
    def pure(cls, psi_i: np.ndarray, psi_f: np.ndarray) -> "Boundary":
        psi_i = validate_ket(psi_i, "psi_i")
        psi_f = validate_ket(psi_f, "psi_f")
        return cls(linalg.projector(psi_i), linalg.projector(psi_f))

    @property
    def dim(self) -> int:
        return self.initial.shape[0]


@dataclass(frozen=True)
class BranchOperators:
    """System blocks of the joint state 1/2 sum_jk G_jk (x) |j><k| after the transformation."""

    g00: np.ndarray
    g11: np.ndarray
    g10: np.ndarray

    @classmethod
    def from_transform(cls, ct: ControlledTransform, rho: np.ndarray) -> "BranchOperators":
        if ct.dim != rho.shape[0]:
            raise DimensionMismatchError(f"transform acts on dim {ct.dim}, state has dim {rho.shape[0]}", field="boundary")
        t0, t1 = ct.t0, ct.t1
        return cls(t0 @ rho @ linalg.dagger(t0), t1 @ rho @ linalg.dagger(t1), t1 @ rho @ linalg.dagger(t0))

    @classmethod
    def from_kets(cls, branch0: np.ndarray, branch1: np.ndarray) -> "BranchOperators":
        # joint state (branch0|0> + branch1|1>)/sqrt(2)
        if branch0.shape != branch1.shape:
            raise DimensionMismatchError("branch kets differ in dimension", field="boundary")
        return cls(linalg.outer(branch0, branch0), linalg.outer(branch1, branch1), linalg.outer(branch1, branch0))

    @property
    def dim(self) -> int:
        return self.g00.shape[0]


@dataclass
class OutcomeDistribution:
    probabilities: dict = field(default_factory=dict)

    def __getitem__(self, setting: ProbeSetting) -> dict:
        if setting not in self.probabilities:
            raise InvalidDistributionError(f"setting {setting.value} was not measured", field="setting")
        return self.probabilities[setting]

    def __contains__(self, setting: ProbeSetting) -> bool:
        return setting in self.probabilities

    def settings(self) -> list:
        return list(self.probabilities)

    def probability(self, setting: ProbeSetting, label: str) -> float:
        return self[setting].get(label, 0.0)

    def setting_sum(self, setting: ProbeSetting, include_discard: bool = False) -> float:
        return sum(p for label, p in self[setting].items() if include_discard or label != DISCARD)

    def merge(self, other: "OutcomeDistribution") -> "OutcomeDistribution":
        return OutcomeDistribution({**self.probabilities, **other.probabilities})

    def validate(self, tol: float = SUM_TOL) -> None:
        for setting, probs in self.probabilities.items():
            values = np.array(list(probs.values()), dtype=float)
            if not np.all(np.isfinite(values)) or np.any(values < -tol) or np.any(values > 1 + tol):
                raise InvalidDistributionError(f"setting {setting.value} has probabilities outside [0, 1]", field="distribution")
            if abs(values.sum() - 1.0) > tol:
                raise InvalidDistributionError(
                    f"setting {setting.value} sums to {values.sum():.15g}, not 1", field="distribution"
                )


# --------------------------
# Probability kernels
# --------------------------
def _probe_probabilities(g0: float, g1: float, c: complex, setting: ProbeSetting) -> tuple:
    if setting is ProbeSetting.X:
        plus, minus = 0.25 * (g0 + g1 + 2 * c.real), 0.25 * (g0 + g1 - 2 * c.real)
    elif setting is ProbeSetting.Y:
        plus, minus = 0.25 * (g0 + g1 + 2 * c.imag), 0.25 * (g0 + g1 - 2 * c.imag)
    else:
        plus, minus = 0.5 * g0, 0.5 * g1
    return max(plus, 0.0), max(minus, 0.0)


def _close_with_discard(probs: dict) -> dict:
    probs[DISCARD] = max(0.0, 1.0 - sum(probs.values()))
    return probs


def branch_probabilities(branches: BranchOperators, effect: np.ndarray, setting: ProbeSetting) -> dict:
    g0 = float(np.trace(branches.g00 @ effect).real)
    g1 = float(np.trace(branches.g11 @ effect).real)
    c = complex(np.trace(branches.g10 @ effect))
    labels = PROBE_OUTCOMES[setting]
    plus, minus = _probe_probabilities(g0, g1, c, setting)
    return _close_with_discard({labels[0]: plus, labels[1]: minus})


def joint_probabilities(ct: ControlledTransform, b: Boundary, s: ProbeSetting) -> OutcomeDistribution:
    if ct.dim != b.dim:
        raise DimensionMismatchError(f"transform acts on dim {ct.dim}, boundary has dim {b.dim}", field="boundary")
    branches = BranchOperators.from_transform(ct, b.initial)
    return OutcomeDistribution({s: branch_probabilities(branches, b.final_effect, s)})


def measure_all(ct: ControlledTransform, b: Boundary, settings: Iterable[ProbeSetting] = ALL_SETTINGS) -> OutcomeDistribution:
    dist = OutcomeDistribution()
    for s in settings:
        dist = dist.merge(joint_probabilities(ct, b, s))
    return dist


def resolved_probabilities(
    branches: BranchOperators,
    basis: np.ndarray | None,
    setting: ProbeSetting,
    clusters: Sequence[Sequence[int]] | None = None,
) -> OutcomeDistribution:
    """Probe outcome jointly with a final system measurement in an orthonormal basis.

    basis=None means the computational basis. With clusters, the columns of each cluster
    are merged into one outcome (projector onto their span).
    """
    if basis is None:
        d00 = np.diag(branches.g00).real
        d11 = np.diag(branches.g11).real
        d10 = np.diag(branches.g10)
    else:
        vh = linalg.dagger(basis)
        d00 = np.einsum("ij,ji->i", vh @ branches.g00, basis).real
        d11 = np.einsum("ij,ji->i", vh @ branches.g11, basis).real
        d10 = np.einsum("ij,ji->i", vh @ branches.g10, basis)
    if clusters is not None:
        d00 = np.array([d00[list(c)].sum() for c in clusters])
        d11 = np.array([d11[list(c)].sum() for c in clusters])
        d10 = np.array([d10[list(c)].sum() for c in clusters])

    labels = PROBE_OUTCOMES[setting]
    probs = {}
    for k in range(len(d00)):
        plus, minus = _probe_probabilities(float(d00[k]), float(d11[k]), complex(d10[k]), setting)
        probs[resolved_label(k, labels[0])] = plus
        probs[resolved_label(k, labels[1])] = minus
    return OutcomeDistribution({setting: _close_with_discard(probs)})


# --------------------------
# Complex-value extraction
# --------------------------
def probe_difference(dist: OutcomeDistribution, setting: ProbeSetting) -> float:
    labels = PROBE_OUTCOMES[setting]
    return dist.probability(setting, labels[0]) - dist.probability(setting, labels[1])


def extract_complex(dist: OutcomeDistribution) -> complex:
    return complex(probe_difference(dist, ProbeSetting.X), probe_difference(dist, ProbeSetting.Y))


def extract_resolved(dist: OutcomeDistribution, n: int) -> np.ndarray:
    x_probs, y_probs = dist[ProbeSetting.X], dist[ProbeSetting.Y]
    values = np.zeros(n, dtype=complex)
    for k in range(n):
        dx = x_probs.get(resolved_label(k, "+"), 0.0) - x_probs.get(resolved_label(k, "-"), 0.0)
        dy = y_probs.get(resolved_label(k, "+i"), 0.0) - y_probs.get(resolved_label(k, "-i"), 0.0)
        values[k] = complex(dx, dy)
    return values


def success_probability(dist: OutcomeDistribution, setting: ProbeSetting = ProbeSetting.X) -> float:
    return 1.0 - dist.probability(setting, DISCARD)


# --------------------------
# Derived quantities
# --------------------------
def _overlap(psi_i: np.ndarray, psi_f: np.ndarray) -> complex:
    if psi_i.shape != psi_f.shape:
        raise DimensionMismatchError("pre- and post-selected states differ in dimension", field="psi_f")
    overlap = linalg.inner(psi_f, psi_i)
    if abs(overlap) <= OVERLAP_TOL:
        raise UndefinedWeakValueError()
    return overlap


def weak_value(a: np.ndarray, psi_i: np.ndarray, psi_f: np.ndarray) -> complex:
    overlap = _overlap(psi_i, psi_f)
    if a.shape != (psi_i.size, psi_i.size):
        raise DimensionMismatchError(f"observable is {a.shape}, states have dim {psi_i.size}", field="observable")
    return linalg.inner(psi_f, a @ psi_i) / overlap


def modular_value(a: np.ndarray, xi: float, psi_i: np.ndarray, psi_f: np.ndarray) -> complex:
    overlap = _overlap(psi_i, psi_f)
    unitary = linalg.herm_func(a, lambda lam: cmath.exp(-1j * xi * lam))
    return linalg.inner(psi_f, unitary @ psi_i) / overlap


def generalized_weak_value(a: np.ndarray, rho_i: np.ndarray, effect: np.ndarray) -> complex:
    # tr(F A rho) / tr(F rho)
    denom = complex(np.trace(effect @ rho_i))
    if abs(denom) <= OVERLAP_TOL:
        raise UndefinedWeakValueError("post-selection probability vanishes")
    return complex(np.trace(effect @ a @ rho_i)) / denom


def kirkwood_dirac(rho_in: np.ndarray, basis_a: np.ndarray, basis_b: np.ndarray) -> np.ndarray:
    """grid[a, b] = <b|a><a|rho|b> over the columns of two orthonormal bases."""
    rho_in = validate_density(rho_in, "rho_in")
    for name, basis in (("basis_a", basis_a), ("basis_b", basis_b)):
        if basis.shape != rho_in.shape:
            raise DimensionMismatchError(f"{name} is {basis.shape}, rho_in is {rho_in.shape}", field=name)
        if not linalg.is_unitary(basis):
            raise PhysicalityError(f"{name} columns are not orthonormal", field=name)
    overlaps = (linalg.dagger(basis_b) @ basis_a).T  # [a, b] -> <b|a>
    return overlaps * (linalg.dagger(basis_a) @ rho_in @ basis_b)
