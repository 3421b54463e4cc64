"""Ising instances, annealing schedules and dense Hamiltonian construction.

Basis convention: qubit 0 is the most significant bit of the basis index,
bit value 0 is spin up (sigma^z = +1). Ket labels such as ``|uudu>`` are
written with qubit ``n-1`` leftmost and qubit 0 rightmost (see
:func:`ket_to_index`).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

MAX_DENSE_QUBITS = 10

_SX = np.array([[0.0, 1.0], [1.0, 0.0]])


class ModelValidationError(ValueError):
    """Raised for malformed Ising instances or schedules."""


@dataclass(frozen=True)
class IsingModel:
    """Couplings ``J_ij`` and fields ``h_i`` (rad/ns) on ``n_qubits`` spins."""

    n_qubits: int
    couplings: Mapping[tuple[int, int], float] = field(default_factory=dict)
    fields: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ModelValidationError("n_qubits must be positive")
        cpl = {}
        for (i, j), v in dict(self.couplings).items():
            i, j = int(i), int(j)
            if i == j:
                raise ModelValidationError(f"self-coupling on qubit {i}")
            if not (0 <= i < self.n_qubits and 0 <= j < self.n_qubits):
                raise ModelValidationError(f"coupling ({i},{j}) out of range")
            key = (min(i, j), max(i, j))
            if key in cpl:
                raise ModelValidationError(f"duplicate coupling {key}")
            cpl[key] = float(v)
        fld = {}
        for i, v in dict(self.fields).items():
            if not 0 <= int(i) < self.n_qubits:
                raise ModelValidationError(f"field index {i} out of range")
            fld[int(i)] = float(v)
        object.__setattr__(self, "couplings", dict(sorted(cpl.items())))
        object.__setattr__(self, "fields", dict(sorted(fld.items())))

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    @property
    def edges(self) -> list[tuple[int, int]]:
        """Edges with a nonzero coupling."""
        return [e for e, v in self.couplings.items() if v != 0.0]

    def with_parameters(self, couplings, fields) -> "IsingModel":
        return IsingModel(self.n_qubits, couplings, fields)

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "couplings": [[i, j, v] for (i, j), v in self.couplings.items()],
            "fields": [[i, v] for i, v in self.fields.items()],
        }


def t4_model() -> IsingModel:
    """The four-qubit T4 instance with six degenerate ground states."""
    return IsingModel(
        4,
        couplings={(0, 1): -1.0, (1, 2): 1.0, (1, 3): -1.0},
        fields={0: -1.0, 1: 1.0, 2: -1.0, 3: -1.0},
    )


PRESET_MODELS = {"t4": t4_model}


def _adaptive_simpson(f, a, b, tol=1e-12, max_depth=50):
    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def rec(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return rec(a, m, fa, flm, fm, left, tol / 2, depth - 1) + rec(
            m, b, fm, frm, fb, right, tol / 2, depth - 1
        )

    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return rec(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, max_depth)


@dataclass(frozen=True)
class AnnealSchedule:
    """Interpolation functions ``A(s)`` and ``B(s)`` on ``s in [0, 1]``.

    ``kind="linear"`` gives ``A = 1 - s`` and ``B = s``. ``kind="tabulated"``
    interpolates piecewise-linearly between sorted ``(s, A, B)`` knots.
    """

    kind: str = "linear"
    knots: tuple[tuple[float, float, float], ...] = ()

    def __post_init__(self):
        if self.kind == "linear":
            return
        if self.kind != "tabulated":
            raise ModelValidationError(f"unknown schedule kind {self.kind!r}")
        knots = tuple(tuple(map(float, k)) for k in self.knots)
        s = [k[0] for k in knots]
        if len(knots) < 2 or s != sorted(s) or s[0] != 0.0 or s[-1] != 1.0:
            raise ModelValidationError("tabulated knots must be sorted and span [0, 1]")
        if knots[0][1] < knots[-1][1] or knots[-1][2] < knots[0][2]:
            raise ModelValidationError("A must not grow and B must not shrink over the anneal")
        object.__setattr__(self, "knots", knots)

    def A(self, s: float) -> float:
        if self.kind == "linear":
            return 1.0 - s
        k = np.asarray(self.knots)
        return float(np.interp(s, k[:, 0], k[:, 1]))

    def B(self, s: float) -> float:
        if self.kind == "linear":
            return s
        k = np.asarray(self.knots)
        return float(np.interp(s, k[:, 0], k[:, 2]))

    def integrals(self, s0: float, s1: float) -> tuple[float, float]:
        """Return ``(int A ds, int B ds)`` over ``[s0, s1]``."""
        if self.kind == "linear":
            a = (s1 - s0) - 0.5 * (s1**2 - s0**2)
            return a, 0.5 * (s1**2 - s0**2)
        return (
            _adaptive_simpson(self.A, s0, s1),
            _adaptive_simpson(self.B, s0, s1),
        )


LINEAR = AnnealSchedule()


def _check_dense(n):
    if n > MAX_DENSE_QUBITS:
        raise ModelValidationError(
            f"{n} qubits exceeds the dense limit of {MAX_DENSE_QUBITS}"
        )


def spin_values(n_qubits: int) -> np.ndarray:
    """Array ``(2**n, n)`` of spin values +1/-1 with qubit 0 as the MSB."""
    idx = np.arange(2**n_qubits)
    bits = (idx[:, None] >> (n_qubits - 1 - np.arange(n_qubits))) & 1
    return 1 - 2 * bits


def ising_diagonal(model: IsingModel) -> np.ndarray:
    """Diagonal of the Ising Hamiltonian (real, rad/ns)."""
    _check_dense(model.n_qubits)
    z = spin_values(model.n_qubits).astype(float)
    e = np.zeros(model.dim)
    for (i, j), v in model.couplings.items():
        e += v * z[:, i] * z[:, j]
    for i, v in model.fields.items():
        e += v * z[:, i]
    return e


def build_ising_hamiltonian(model: IsingModel) -> np.ndarray:
    """Dense diagonal Ising Hamiltonian. Use :func:`ising_diagonal` for the fast path."""
    return np.diag(ising_diagonal(model)).astype(complex)


def single_qubit_operator(op: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    return np.kron(
        np.kron(np.eye(2**qubit), op), np.eye(2 ** (n_qubits - qubit - 1))
    )


def build_driver_hamiltonian(n_qubits: int) -> np.ndarray:
    """Transverse-field driver ``-sum_i sigma^x_i``."""
    if n_qubits < 1:
        raise ModelValidationError("n_qubits must be at least 1")
    _check_dense(n_qubits)
    h = np.zeros((2**n_qubits, 2**n_qubits), dtype=complex)
    for q in range(n_qubits):
        h -= single_qubit_operator(_SX, q, n_qubits)
    return h


def hamiltonian_at(s: float, schedule: AnnealSchedule, model: IsingModel,
                   h0: np.ndarray | None = None) -> np.ndarray:
    """``A(s) H0 + B(s) H_Ising`` as a dense matrix."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s={s} outside [0, 1]")
    if h0 is None:
        h0 = build_driver_hamiltonian(model.n_qubits)
    out = schedule.A(s) * h0
    out[np.diag_indices_from(out)] += schedule.B(s) * ising_diagonal(model)
    return out


def uniform_state(n_qubits: int) -> np.ndarray:
    return np.full(2**n_qubits, 2 ** (-n_qubits / 2), dtype=complex)


def ground_states(model: IsingModel, tol: float = 1e-9) -> tuple[np.ndarray, float]:
    """Indices of all Ising ground states by enumeration, and their energy."""
    e = ising_diagonal(model)
    emin = e.min()
    return np.flatnonzero(e <= emin + tol), float(emin)


def index_to_ket(index: int, n_qubits: int) -> str:
    """Label a basis index as a string of ``u``/``d``, qubit ``n-1`` first."""
    bits = [(index >> (n_qubits - 1 - q)) & 1 for q in range(n_qubits)]
    return "".join("d" if b else "u" for b in reversed(bits))


def ket_to_index(ket: str) -> int:
    """Inverse of :func:`index_to_ket`. Accepts ``u/d``, ``0/1`` or arrows."""
    table = {"u": 0, "0": 0, "↑": 0, "d": 1, "1": 1, "↓": 1}
    ket = ket.strip("|>⟩ ")
    bits = [table[c] for c in reversed(ket)]  # bits[q] is qubit q
    n = len(bits)
    return sum(b << (n - 1 - q) for q, b in enumerate(bits))


def load_model(source: str | Path | Mapping) -> tuple[IsingModel, AnnealSchedule]:
    """Load a model from a preset name, a JSON file path or a parsed document."""
    if isinstance(source, str) and source in PRESET_MODELS:
        return PRESET_MODELS[source](), LINEAR
    doc = source
    if not isinstance(source, Mapping):
        doc = json.loads(Path(source).read_text())
    unknown = set(doc) - {"n_qubits", "couplings", "fields", "schedule"}
    if unknown:
        raise ModelValidationError(f"unknown model keys: {sorted(unknown)}")
    model = IsingModel(
        int(doc["n_qubits"]),
        {(int(i), int(j)): float(v) for i, j, v in doc.get("couplings", [])},
        {int(i): float(v) for i, v in doc.get("fields", [])},
    )
    sched = doc.get("schedule", "linear")
    if sched == "linear":
        return model, LINEAR
    return model, AnnealSchedule("tabulated", tuple(map(tuple, sched["knots"])))
