"""
Descriptions:
1. A diagram is a loop of four operators read clockwise: [state, T0^dag, effect, T1]
2. evaluate() is scale x tr(n0 n1 n2 n3)
3. Rewrites: cyclic rotation, spectral splitting of one node
4. compile() turns a diagram into a runnable framework instance plus the scale factor
   needed to get the diagram's trace back from the measured complex value

JSON format:
    {"nodes": [[[re, im], ...], ...] x 4, "scale": [re, im]}
"""

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

import linalg
from exceptions import ConfigError, DimensionMismatchError, NonHermitianError, NotCompilableError
from framework import (
    Boundary,
    ControlledTransform,
    ProbeSetting,
    extract_complex,
    measure_all,
)

NODE_COUNT = 4
STATE_SLOT, T0_SLOT, EFFECT_SLOT, T1_SLOT = range(NODE_COUNT)
TRACE_TOL = 1e-12


@dataclass(frozen=True)
class Diagram:
    nodes: tuple
    scale: complex = 1.0 + 0.0j

    def __post_init__(self):
        if len(self.nodes) != NODE_COUNT:
            raise DimensionMismatchError(f"diagram loops have exactly {NODE_COUNT} nodes, got {len(self.nodes)}", field="nodes")
        nodes = tuple(linalg.operator(n) for n in self.nodes)
        if len({n.shape for n in nodes}) != 1:
            raise DimensionMismatchError("all diagram nodes must share one dimension", field="nodes")
        for n in nodes:
            n.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "scale", complex(self.scale))

    @classmethod
    def canonical(cls, rho_i: np.ndarray, t0: np.ndarray, rho_f: np.ndarray, t1: np.ndarray) -> "Diagram":
        # slot 1 holds T0 already daggered, as it appears in the trace
        return cls((rho_i, linalg.dagger(t0), rho_f, t1))

    @property
    def dim(self) -> int:
        return self.nodes[0].shape[0]

    def replace(self, idx: int, node: np.ndarray) -> "Diagram":
        nodes = list(self.nodes)
        nodes[idx] = node
        return Diagram(tuple(nodes), self.scale)


@dataclass(frozen=True)
class FrameworkInstance:
    ct: ControlledTransform
    boundary: Boundary
    scale: complex

    def measured_value(self) -> complex:
        """scale x (P(+) - P(-) + i[P(+i) - P(-i)]) from exact probabilities."""
        dist = measure_all(self.ct, self.boundary, (ProbeSetting.X, ProbeSetting.Y))
        return self.scale * extract_complex(dist)


# --------------------------
# Evaluation and rewrites
# --------------------------
def evaluate(d: Diagram) -> complex:
    n0, n1, n2, n3 = d.nodes
    return d.scale * complex(np.trace(n0 @ n1 @ n2 @ n3))


def rotate(d: Diagram, k: int) -> Diagram:
    # node i moves to slot (i + k) mod 4
    k %= NODE_COUNT
    nodes = tuple(d.nodes[(i - k) % NODE_COUNT] for i in range(NODE_COUNT))
    return Diagram(nodes, d.scale)


def spectral_split(d: Diagram, idx: int) -> list:
    """One child per eigenvector: the node becomes |a_j><a_j|, weight a_j."""
    node = d.nodes[idx]
    if not linalg.is_hermitian(node):
        raise NonHermitianError(f"node {idx} must be Hermitian to split", field=f"slot{idx}")
    values, vecs = linalg.herm_eig(node)
    return [(float(values[j]), d.replace(idx, linalg.projector(vecs[:, j]))) for j in range(len(values))]


def recombine(children: Sequence) -> complex:
    return sum((weight * evaluate(child) for weight, child in children), 0.0 + 0.0j)


# --------------------------
# Compilation
# --------------------------
def _shrink(node: np.ndarray) -> tuple:
    norm = linalg.spectral_norm(node)
    if norm > 1.0:
        return node / norm, norm
    return node, 1.0


def compile(d: Diagram) -> FrameworkInstance:
    state, t0_dag, effect, t1 = d.nodes

    if not linalg.is_psd(state):
        raise NotCompilableError(STATE_SLOT, "state slot is not positive semidefinite")
    trace = np.trace(state).real
    if trace <= TRACE_TOL:
        raise NotCompilableError(STATE_SLOT, "state slot has zero trace")
    if not linalg.is_psd(effect):
        raise NotCompilableError(EFFECT_SLOT, "effect slot is not positive semidefinite")

    effect, effect_div = _shrink(effect)
    t0, t0_div = _shrink(linalg.dagger(t0_dag))
    t1, t1_div = _shrink(t1)

    boundary = Boundary(state / trace, effect)
    ct = ControlledTransform(t0, t1)
    return FrameworkInstance(ct, boundary, d.scale * trace * effect_div * t0_div * t1_div)


def compilable_rotations(d: Diagram) -> list:
    """(k, instance) for every rotation of d that compiles."""
    out = []
    for k in range(NODE_COUNT):
        try:
            out.append((k, compile(rotate(d, k))))
        except NotCompilableError:
            continue
    return out


# --------------------------
# JSON
# --------------------------
def _pairs(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def to_json(d: Diagram) -> str:
    doc = {"nodes": [_pairs(n) for n in d.nodes], "scale": [d.scale.real, d.scale.imag]}
    return json.dumps(doc, indent=2)


def from_json(text: str) -> Diagram:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"diagram is not valid JSON: {exc}", field="diagram") from exc
    if not isinstance(doc, dict) or "nodes" not in doc:
        raise ConfigError("diagram JSON needs a 'nodes' list", field="nodes")
    try:
        nodes = tuple(np.array([[complex(re, im) for re, im in row] for row in node], dtype=complex) for node in doc["nodes"])
        re, im = doc.get("scale", [1.0, 0.0])
        scale = complex(re, im)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"diagram entries must be [re, im] pairs: {exc}", field="nodes") from exc
    return Diagram(nodes, scale)
