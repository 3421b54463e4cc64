"""First-order Magnus segments split into symmetric Trotter steps, as gate layers.

Each Magnus segment ``k`` of width ``1/N_M`` replaces the evolution by
``exp(-i JT (a_k H0 + b_k H_I))`` with ``a_k, b_k`` the schedule integrals.
Each of the ``N_T`` Trotter steps applies half the driver, the full Ising
part, then the other half of the driver. Rotation conventions are
``R_a(theta) = exp(-i theta sigma^a / 2)`` and
``ZZ(theta) = exp(-i theta sigma^z sigma^z / 2)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linalg import propagator_step
from .model import (
    MAX_DENSE_QUBITS,
    AnnealSchedule,
    IsingModel,
    build_driver_hamiltonian,
    ising_diagonal,
    spin_values,
)


@dataclass(frozen=True)
class MagnusSegment:
    index: int
    a: float
    b: float
    delta: float


@dataclass(frozen=True)
class TrotterPlan:
    N_M: int
    N_T: int
    JT: float

    def __post_init__(self):
        if self.N_M < 1 or self.N_T < 1:
            raise ValueError("N_M and N_T must be at least 1")

    @property
    def total_steps(self) -> int:
        return self.N_M * self.N_T


@dataclass(frozen=True)
class Layer:
    """One gate layer.

    ``kind`` is ``"rx"``, ``"rz"`` or ``"zz"``. Single-qubit layers carry one
    angle per qubit in ``angles``. ZZ layers carry ``(i, j, theta)`` triples
    in ``pairs`` with no qubit repeated.
    """

    kind: str
    angles: tuple[float, ...] = ()
    pairs: tuple[tuple[int, int, float], ...] = ()

    @property
    def is_two_qubit(self) -> bool:
        return self.kind == "zz"

    def qubits(self) -> set[int]:
        if self.kind == "zz":
            return {q for i, j, _ in self.pairs for q in (i, j)}
        return {q for q, a in enumerate(self.angles) if a != 0.0}

    def to_dict(self) -> dict:
        if self.kind == "zz":
            return {"type": "zz", "pairs": [[i, j, t] for i, j, t in self.pairs]}
        return {"type": self.kind, "angles": list(self.angles)}


@dataclass(frozen=True)
class GateCircuit:
    n_qubits: int
    layers: tuple[Layer, ...] = ()

    def moments(self) -> list[list[Layer]]:
        """Group layers into hardware time slots.

        Consecutive single-qubit layers share one slot; every ZZ layer gets
        its own slot.
        """
        out: list[list[Layer]] = []
        for layer in self.layers:
            if out and not layer.is_two_qubit and not out[-1][0].is_two_qubit:
                out[-1].append(layer)
            else:
                out.append([layer])
        return out

    @property
    def depth(self) -> int:
        return len(self.moments())

    def count(self, kind: str) -> int:
        return sum(layer.kind == kind for layer in self.layers)

    def to_json(self) -> str:
        return json.dumps({"n_qubits": self.n_qubits,
                           "layers": [layer.to_dict() for layer in self.layers]})

    @classmethod
    def from_json(cls, text: str) -> "GateCircuit":
        doc = json.loads(text)
        layers = []
        for d in doc["layers"]:
            if d["type"] == "zz":
                layers.append(Layer("zz", pairs=tuple((int(i), int(j), float(t)) for i, j, t in d["pairs"])))
            else:
                layers.append(Layer(d["type"], angles=tuple(map(float, d["angles"]))))
        return cls(int(doc["n_qubits"]), tuple(layers))


def magnus_segments(schedule: AnnealSchedule, N_M: int) -> list[MagnusSegment]:
    if N_M < 1:
        raise ValueError("N_M must be at least 1")
    delta = 1.0 / N_M
    segs = []
    for k in range(1, N_M + 1):
        if schedule.kind == "linear":
            # closed forms of the integrals of 1-s and s over [(k-1)d, kd]
            a = delta + delta**2 / 2 - k * delta**2
            b = delta**2 * (2 * k - 1) / 2
        else:
            a, b = schedule.integrals((k - 1) * delta, k * delta)
        segs.append(MagnusSegment(k, a, b, delta))
    return segs


def greedy_edge_coloring(edges: Sequence[tuple[int, int]]) -> list[list[tuple[int, int]]]:
    """Partition edges into vertex-disjoint groups, highest-degree edges first."""
    deg: dict[int, int] = {}
    for i, j in edges:
        deg[i] = deg.get(i, 0) + 1
        deg[j] = deg.get(j, 0) + 1
    order = sorted(edges, key=lambda e: (-(deg[e[0]] + deg[e[1]]), e))
    colors: list[list[tuple[int, int]]] = []
    used: list[set[int]] = []
    for i, j in order:
        for c, busy in enumerate(used):
            if i not in busy and j not in busy:
                colors[c].append((i, j))
                busy.update((i, j))
                break
        else:
            colors.append([(i, j)])
            used.append({i, j})
    return [sorted(c) for c in colors]


def chromatic_index(model: IsingModel) -> int:
    return len(greedy_edge_coloring(model.edges))


def build_circuit(plan: TrotterPlan, model: IsingModel, schedule: AnnealSchedule) -> GateCircuit:
    return circuit_from_segments(magnus_segments(schedule, plan.N_M), plan.N_T, plan.JT, model)


def circuit_from_segments(segments: Sequence[MagnusSegment], N_T: int, JT: float,
                          model: IsingModel) -> GateCircuit:
    """Emit the layered circuit; RX halves of neighbouring steps are merged."""
    n, T, nt = model.n_qubits, JT, N_T
    coloring = greedy_edge_coloring(model.edges)
    layers: list[Layer] = []
    pending_rx = 0.0  # accumulated RX angle not yet emitted
    for seg in segments:
        # H0 = -sum X, so exp(-i tau H0) is R_x(-2 tau); a half step has tau = T a / (2 N_T)
        half = -T * seg.a / nt
        rz = tuple(2 * T * seg.b * model.fields.get(q, 0.0) / nt for q in range(n))
        zz = [Layer("zz", pairs=tuple((i, j, 2 * T * seg.b * model.couplings[(i, j)] / nt)
                                      for i, j in color)) for color in coloring]
        for _ in range(nt):
            layers.append(Layer("rx", angles=(pending_rx + half,) * n))
            if any(rz):
                layers.append(Layer("rz", angles=rz))
            layers.extend(zz)
            pending_rx = half
    layers.append(Layer("rx", angles=(pending_rx,) * n))
    return GateCircuit(n, tuple(layers))


_PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)


def _rx(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def layer_unitary(layer: Layer, n_qubits: int) -> np.ndarray:
    """Dense unitary of one layer (diagonal layers are returned dense too)."""
    if layer.kind == "rx":
        u = np.ones((1, 1), dtype=complex)
        for theta in layer.angles:
            u = np.kron(u, _rx(theta))
        return u
    return np.diag(layer_diagonal(layer, n_qubits))


def layer_diagonal(layer: Layer, n_qubits: int) -> np.ndarray:
    z = spin_values(n_qubits).astype(float)
    phase = np.zeros(2**n_qubits)
    if layer.kind == "rz":
        phase = z @ np.asarray(layer.angles)
    elif layer.kind == "zz":
        for i, j, theta in layer.pairs:
            phase += theta * z[:, i] * z[:, j]
    else:
        raise ValueError(f"{layer.kind} layer is not diagonal")
    return np.exp(-0.5j * phase)


def _check_size(n):
    if n > MAX_DENSE_QUBITS:
        raise ValueError(f"{n} qubits exceeds the dense limit of {MAX_DENSE_QUBITS}")


def circuit_unitary(circuit: GateCircuit) -> np.ndarray:
    n = circuit.n_qubits
    _check_size(n)
    u = np.eye(2**n, dtype=complex)
    for layer in circuit.layers:
        if layer.kind == "rx":
            u = layer_unitary(layer, n) @ u
        else:
            u = layer_diagonal(layer, n)[:, None] * u
    return u


def apply_circuit(circuit: GateCircuit, psi: np.ndarray) -> np.ndarray:
    """Apply the circuit to a state vector without forming the full unitary."""
    n = circuit.n_qubits
    psi = np.array(psi, dtype=complex)
    cache: dict[Layer, np.ndarray] = {}
    for layer in circuit.layers:
        if layer not in cache:
            cache[layer] = (layer_unitary(layer, n) if layer.kind == "rx"
                            else layer_diagonal(layer, n))
        m = cache[layer]
        psi = m @ psi if m.ndim == 2 else m * psi
    return psi


def segment_exact_unitary(model: IsingModel, JT: float, a: float, b: float) -> np.ndarray:
    """``exp(-i JT (a H0 + b H_I))`` for a single Magnus segment."""
    h = a * build_driver_hamiltonian(model.n_qubits)
    h[np.diag_indices_from(h)] += b * ising_diagonal(model)
    return propagator_step(h, JT)


def segment_circuit(model: IsingModel, JT: float, a: float, b: float, N_T: int) -> GateCircuit:
    """Circuit for a lone segment with the given integrals (used for order checks)."""
    return circuit_from_segments([MagnusSegment(1, a, b, 1.0)], N_T, JT, model)


def commutator_norms(model: IsingModel) -> tuple[float, float]:
    """Spectral norms of ``[[H0, H_I], H_I]`` and ``[[H0, H_I], H0]``."""
    h0 = build_driver_hamiltonian(model.n_qubits)
    hi = np.diag(ising_diagonal(model)).astype(complex)
    c = h0 @ hi - hi @ h0
    cbb = c @ hi - hi @ c
    cba = c @ h0 - h0 @ c
    return float(np.linalg.norm(cbb, 2)), float(np.linalg.norm(cba, 2))


def commutator_norm_constant(model: IsingModel) -> float:
    """``||[[H0,H_I],H_I]|| + 0.5 ||[[H0,H_I],H0]||`` in the spectral norm."""
    c1, c2 = commutator_norms(model)
    return c1 + 0.5 * c2


def trotter_bound_steps(JT: float, N_M: int, epsilon: float, commutator_constant,
                        schedule: AnnealSchedule | None = None) -> int:
    """Worst-case total Trotter steps for accuracy ``epsilon`` at fixed ``N_M``.

    Per segment ``i`` the error of one symmetric step of length ``t`` is
    bounded by ``t**3 / 12 * C_i`` with
    ``C_i = abar * bbar**2 * c1 + 0.5 * abar**2 * bbar * c2`` where ``abar``
    and ``bbar`` are the segment-averaged schedule values. The segment needs
    ``ceil(sqrt((JT/N_M)**3 * C_i / (12 * epsilon)))`` steps.

    Args:
        commutator_constant: either the pair ``(c1, c2)`` of nested-commutator
            norms, or a single scalar ``K`` which is split evenly between the
            two terms, ``C_i = K/2 * (abar * bbar**2 + abar**2 * bbar)``.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if np.ndim(commutator_constant) == 0:
        w_bb = w_ba = float(commutator_constant) / 2
    else:
        c1, c2 = commutator_constant
        w_bb, w_ba = float(c1), 0.5 * float(c2)
    total = 0
    for seg in magnus_segments(schedule or AnnealSchedule(), N_M):
        abar, bbar = seg.a / seg.delta, seg.b / seg.delta
        c_i = abar * bbar**2 * w_bb + abar**2 * bbar * w_ba
        total += max(1, math.ceil(math.sqrt((JT / N_M) ** 3 * c_i / (12 * epsilon))))
    return total


def trotter_state(plan: TrotterPlan, model: IsingModel, schedule: AnnealSchedule,
                  psi0: np.ndarray | None = None) -> np.ndarray:
    """Final state of the discretized evolution from step operators.

    Mathematically identical to ``apply_circuit(build_circuit(...))`` but
    builds one dense step per segment from the driver eigenbasis, which makes
    grid searches cheap.
    """
    n = model.n_qubits
    w, v = np.linalg.eigh(build_driver_hamiltonian(n))
    diag = ising_diagonal(model)
    psi = np.full(2**n, 2 ** (-n / 2), dtype=complex) if psi0 is None else np.array(psi0, complex)
    T, nt = plan.JT, plan.N_T
    for seg in magnus_segments(schedule, plan.N_M):
        half = (v * np.exp(-1j * w * T * seg.a / (2 * nt))) @ v.conj().T
        step = half @ (np.exp(-1j * T * seg.b / nt * diag)[:, None] * half)
        psi = np.linalg.matrix_power(step, nt) @ psi
    return psi
