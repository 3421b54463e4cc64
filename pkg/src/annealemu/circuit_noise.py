"""Density-matrix simulation of gate circuits under Kraus noise channels.

Channels act per hardware time slot (see :meth:`GateCircuit.moments`). After
the gates of a slot are applied, every qubit (idle or not) decoheres for the
slot duration. Depolarizing noise follows each gate on the qubits it touches,
and readout confusion is applied only when sampling the computational basis.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace
from functools import reduce
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .discretize import GateCircuit, Layer, layer_diagonal, layer_unitary

I2 = np.eye(2, dtype=complex)
PAULIS = (
    I2,
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]]),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

CHANNELS = frozenset({"dephasing", "relaxation", "depolarizing", "readout"})

# device calibration, circuit qubits 0..3 (device qubits 0, 1, 4, 2), in ns
MUMBAI_T1 = (159.87e3, 172.71e3, 95.68e3, 71.79e3)
MUMBAI_T2 = (161.23e3, 36.53e3, 69.95e3, 123.99e3)


def phase_damping_channel(T2_pure: float, dt: float) -> list[np.ndarray]:
    """Kraus pair that scales the single-qubit coherence by ``exp(-dt/T2_pure)``."""
    if T2_pure <= 0:
        raise ValueError("T2_pure must be positive")
    if dt < 0:
        raise ValueError("dt must be non-negative")
    lam = np.exp(-dt / T2_pure) if np.isfinite(T2_pure) else 1.0
    return [np.sqrt((1 + lam) / 2) * I2, np.sqrt((1 - lam) / 2) * PAULIS[3]]


def thermal_relaxation_channel(T1: float, T2: float, dt: float) -> list[np.ndarray]:
    """Amplitude damping toward ``|0>`` plus the extra dephasing needed to reach ``T2``.

    Raises:
        ValueError: if ``T2 > 2 T1`` or a time is not positive.
    """
    if T1 <= 0 or T2 <= 0:
        raise ValueError("T1 and T2 must be positive")
    if T2 > 2 * T1 * (1 + 1e-12):
        raise ValueError(f"T2={T2} exceeds 2*T1={2 * T1}")
    p = 1.0 - np.exp(-dt / T1)
    amp = [np.array([[1, 0], [0, np.sqrt(1 - p)]], dtype=complex),
           np.array([[0, np.sqrt(p)], [0, 0]], dtype=complex)]
    rate_phi = max(1.0 / T2 - 1.0 / (2 * T1), 0.0)
    if rate_phi == 0.0:
        return amp
    deph = phase_damping_channel(1.0 / rate_phi, dt)
    return [d @ a for d in deph for a in amp]


def depolarizing_channel(p: float, n_qubits: int = 1) -> list[np.ndarray]:
    """``rho -> (1 - p) rho + p I/d`` as Pauli Kraus operators."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    d2 = 4**n_qubits
    ops = []
    for idx in itertools.product(range(4), repeat=n_qubits):
        P = reduce(np.kron, (PAULIS[i] for i in idx))
        w = 1 - p * (d2 - 1) / d2 if not any(idx) else p / d2
        ops.append(np.sqrt(w) * P)
    return ops


def _embed(op: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Lift an operator on ``qubits`` (in that order) to the full register."""
    k = len(qubits)
    full = np.kron(op, np.eye(2 ** (n - k))).reshape([2] * (2 * n))
    rest = [q for q in range(n) if q not in qubits]
    order = list(qubits) + rest
    perm = np.argsort(order)
    full = full.transpose(list(perm) + [n + i for i in perm])
    return full.reshape(2**n, 2**n)


def kraus_superoperator(kraus: Sequence[np.ndarray], qubits: Sequence[int], n: int) -> np.ndarray:
    """Row-major superoperator ``sum_k K (x) K*`` of a channel embedded in ``n`` qubits."""
    out = np.zeros((4**n, 4**n), dtype=complex)
    for k in kraus:
        K = _embed(k, qubits, n)
        out += np.kron(K, K.conj())
    return out


@dataclass(frozen=True)
class CircuitNoiseModel:
    """Per-qubit noise parameters.

    Times are in ns. ``layer_duration`` is the slot length of single-qubit
    layers and ``two_qubit_layer_duration`` that of ZZ layers (defaults to
    ``layer_duration``). ``readout_confusion[q][t][m]`` is the probability of
    reading ``m`` when qubit ``q`` is in ``t``.
    """

    T1: tuple[float, ...] = ()
    T2: tuple[float, ...] = ()
    layer_duration: float = 25.0
    two_qubit_layer_duration: float | None = None
    depolarizing_1q: float = 0.0
    depolarizing_2q: float = 0.0
    readout_confusion: tuple = ()
    channels: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "channels", frozenset(self.channels))
        bad = self.channels - CHANNELS
        if bad:
            raise ValueError(f"unknown channels {sorted(bad)}")
        if not (0 <= self.depolarizing_1q <= 1 and 0 <= self.depolarizing_2q <= 1):
            raise ValueError("depolarizing probabilities must lie in [0, 1]")
        if "relaxation" in self.channels:
            for t1, t2 in zip(self.T1, self.T2):
                if t2 > 2 * t1:
                    raise ValueError(f"T2={t2} exceeds 2*T1={2 * t1}")
        for m in self.readout_confusion:
            m = np.asarray(m, float)
            if m.shape != (2, 2) or np.any(m < 0) or not np.allclose(m.sum(axis=1), 1):
                raise ValueError("each confusion matrix must be 2x2 row-stochastic")

    @property
    def duration_2q(self) -> float:
        if self.two_qubit_layer_duration is None:
            return self.layer_duration
        return self.two_qubit_layer_duration

    def idle_kraus(self, qubit: int, dt: float) -> list[np.ndarray] | None:
        if "relaxation" in self.channels:
            return thermal_relaxation_channel(self.T1[qubit], self.T2[qubit], dt)
        if "dephasing" in self.channels:
            return phase_damping_channel(self.T2[qubit], dt)
        return None

    def to_dict(self) -> dict:
        return {
            "T1": list(self.T1), "T2": list(self.T2),
            "layer_duration": self.layer_duration,
            "two_qubit_layer_duration": self.two_qubit_layer_duration,
            "depolarizing_1q": self.depolarizing_1q,
            "depolarizing_2q": self.depolarizing_2q,
            "readout_confusion": [np.asarray(m).tolist() for m in self.readout_confusion],
            "channels": sorted(self.channels),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "CircuitNoiseModel":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown noise keys: {sorted(unknown)}")
        d = dict(d)
        for key in ("T1", "T2"):
            d[key] = tuple(d.get(key, ()))
        d["readout_confusion"] = tuple(tuple(map(tuple, m)) for m in d.get("readout_confusion", ()))
        d["channels"] = frozenset(d.get("channels", ()))
        return cls(**d)


def _symmetric_confusion(eps):
    return ((1 - eps, eps), (eps, 1 - eps))


# Slot lengths of the gate-time presets: one single-qubit slot is two sx pulses
# (2 x 35.56 ns) and one ZZ slot was fitted to the dephasing-only TVD column.
GATE_TIME_1Q = 71.1
GATE_TIME_2Q = 800.0

PRESETS: dict[str, CircuitNoiseModel] = {
    "ideal": CircuitNoiseModel(),
    "mumbai-25ns": CircuitNoiseModel(MUMBAI_T1, MUMBAI_T2, channels={"dephasing"}),
    "noisy-1": CircuitNoiseModel(MUMBAI_T1, MUMBAI_T2, GATE_TIME_1Q, GATE_TIME_2Q,
                                 channels={"dephasing"}),
    "noisy-2": CircuitNoiseModel(
        MUMBAI_T1, MUMBAI_T2, GATE_TIME_1Q, GATE_TIME_2Q,
        depolarizing_1q=6e-4, depolarizing_2q=2e-2,
        readout_confusion=(_symmetric_confusion(0.02),) * 4,
        channels={"relaxation", "depolarizing", "readout"},
    ),
    "noisy-3": CircuitNoiseModel(MUMBAI_T1, MUMBAI_T2, GATE_TIME_1Q, GATE_TIME_2Q,
                                 channels={"relaxation"}),
}


def load_noise(source) -> CircuitNoiseModel:
    """Noise model from a preset name, a JSON path or a parsed dict."""
    if isinstance(source, CircuitNoiseModel):
        return source
    if isinstance(source, str) and source in PRESETS:
        return PRESETS[source]
    if isinstance(source, Mapping):
        return CircuitNoiseModel.from_dict(source)
    return CircuitNoiseModel.from_dict(json.loads(Path(source).read_text()))


class _NoisySimulator:
    def __init__(self, noise: CircuitNoiseModel, n: int):
        if noise.T2 and len(noise.T2) != n:
            raise ValueError(f"noise model covers {len(noise.T2)} qubits, circuit has {n}")
        self.noise, self.n = noise, n
        self._idle: dict[float, np.ndarray | None] = {}
        self._depol: dict[tuple, np.ndarray] = {}

    def idle(self, dt):
        if dt not in self._idle:
            ops = [self.noise.idle_kraus(q, dt) for q in range(self.n)]
            if any(o is None for o in ops):
                self._idle[dt] = None
            else:
                self._idle[dt] = reduce(
                    np.matmul, (kraus_superoperator(k, [q], self.n) for q, k in enumerate(ops)))
        return self._idle[dt]

    def depol(self, qubits, p):
        key = (tuple(qubits), p)
        if key not in self._depol:
            self._depol[key] = kraus_superoperator(depolarizing_channel(p, len(qubits)), qubits, self.n)
        return self._depol[key]

    def gate_noise(self, layer: Layer):
        if "depolarizing" not in self.noise.channels:
            return []
        if layer.kind == "zz":
            p = self.noise.depolarizing_2q
            return [self.depol((i, j), p) for i, j, _ in layer.pairs] if p else []
        p = self.noise.depolarizing_1q
        return [self.depol((q,), p) for q in sorted(layer.qubits())] if p else []


def _apply_super(S, rho):
    d = rho.shape[0]
    return (S @ rho.reshape(-1)).reshape(d, d)


def simulate_noisy_circuit(circuit: GateCircuit, noise: CircuitNoiseModel,
                           initial: np.ndarray | None = None) -> np.ndarray:
    """Final density matrix of ``circuit`` under ``noise``.

    ``initial`` defaults to the uniform superposition. Readout confusion is
    not applied here, see :func:`measure_distribution`.
    """
    n = circuit.n_qubits
    dim = 2**n
    if initial is None:
        rho = np.full((dim, dim), 1.0 / dim, dtype=complex)
    else:
        rho = np.array(initial, dtype=complex)
        if rho.ndim == 1:
            rho = np.outer(rho, rho.conj())
    if rho.shape != (dim, dim):
        raise ValueError(f"initial state has shape {rho.shape}, expected {(dim, dim)}")
    sim = _NoisySimulator(noise, n)
    for moment in circuit.moments():
        for layer in moment:
            if layer.kind == "rx":
                u = layer_unitary(layer, n)
                rho = u @ rho @ u.conj().T
            else:
                d = layer_diagonal(layer, n)
                rho = d[:, None] * rho * d.conj()[None, :]
            for S in sim.gate_noise(layer):
                rho = _apply_super(S, rho)
        dt = noise.duration_2q if moment[0].is_two_qubit else noise.layer_duration
        S = sim.idle(dt)
        if S is not None:
            rho = _apply_super(S, rho)
    return rho


def measure_distribution(rho, noise: CircuitNoiseModel | None = None) -> np.ndarray:
    """Computational-basis distribution, pushed through readout confusion if enabled."""
    rho = np.asarray(rho)
    p = np.clip(np.real(np.diag(rho)) if rho.ndim == 2 else np.abs(rho) ** 2, 0, None)
    if noise is None or "readout" not in noise.channels or not noise.readout_confusion:
        return p
    n = int(np.log2(p.size))
    t = p.reshape([2] * n)
    for q, m in enumerate(noise.readout_confusion):
        t = np.moveaxis(np.tensordot(t, np.asarray(m, float), axes=([q], [0])), -1, q)
    return t.reshape(-1)
