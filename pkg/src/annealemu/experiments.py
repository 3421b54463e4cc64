"""Step-count searches, noise sweeps and runtime estimates."""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .circuit_noise import CircuitNoiseModel, load_noise, measure_distribution, simulate_noisy_circuit
from .discretize import TrotterPlan, build_circuit, chromatic_index, trotter_state
from .metrics import HIGH_QUALITY_TVD, fidelity, tvd
from .model import AnnealSchedule, IsingModel
from .reference import evolve_exact

DEFAULT_NM_GRID = tuple(range(1, 21)) + (25, 30, 40, 50, 60, 70, 80, 100, 125, 150, 200,
                                         250, 300, 400, 500, 660, 700, 800, 1000)
DEFAULT_NT_GRID = tuple(range(1, 7))


def config_hash(config) -> str:
    """Short SHA-256 of the canonical JSON form of ``config``."""
    text = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class SearchResult:
    JT: float
    feasible: bool
    N_M: int | None = None
    N_T: int | None = None
    tvd: float | None = None
    fidelity: float | None = None
    evaluated: int = 0

    @property
    def total_steps(self) -> int | None:
        return None if not self.feasible else self.N_M * self.N_T


def evaluate_plan(model, schedule, plan: TrotterPlan, reference_state) -> tuple[float, float]:
    """Closed-system (TVD, fidelity) of a plan against a reference state."""
    phi = trotter_state(plan, model, schedule)
    return tvd(np.abs(reference_state) ** 2, np.abs(phi) ** 2), fidelity(reference_state, phi)


def find_min_steps(model: IsingModel, schedule: AnnealSchedule, JT: float,
                   tvd_target: float = HIGH_QUALITY_TVD,
                   nm_grid: Sequence[int] = DEFAULT_NM_GRID,
                   nt_grid: Sequence[int] = DEFAULT_NT_GRID,
                   reference_state=None) -> SearchResult:
    """Cheapest grid cell with TVD below ``tvd_target``.

    Cells are visited by increasing ``N_M * N_T``, then ``N_M``, then
    ``N_T``, so the first feasible cell is the answer.
    """
    if not nm_grid or not nt_grid:
        raise ValueError("search grids must be nonempty")
    if reference_state is None:
        reference_state = evolve_exact(model, schedule, JT).final_state
    cells = sorted(((nm, nt) for nm in set(nm_grid) for nt in set(nt_grid)),
                   key=lambda c: (c[0] * c[1], c[0], c[1]))
    for count, (nm, nt) in enumerate(cells, 1):
        d, f = evaluate_plan(model, schedule, TrotterPlan(nm, nt, JT), reference_state)
        if d < tvd_target:
            return SearchResult(JT, True, nm, nt, d, f, count)
    return SearchResult(JT, False, evaluated=len(cells))


def cheaper_cells(model, schedule, JT, total_limit, max_nt=6, tvd_target=HIGH_QUALITY_TVD,
                  reference_state=None) -> list[tuple[int, int, float]]:
    """All feasible ``(N_M, N_T, tvd)`` with ``N_M * N_T < total_limit`` (exhaustive)."""
    if reference_state is None:
        reference_state = evolve_exact(model, schedule, JT).final_state
    out = []
    for nt in range(1, max_nt + 1):
        for nm in range(1, (total_limit - 1) // nt + 1):
            d, _ = evaluate_plan(model, schedule, TrotterPlan(nm, nt, JT), reference_state)
            if d < tvd_target:
                out.append((nm, nt, d))
    return sorted(out, key=lambda c: (c[0] * c[1], c[0]))


def noisy_tvd(model, schedule, plan: TrotterPlan, noise: CircuitNoiseModel, reference_pops) -> float:
    rho = simulate_noisy_circuit(build_circuit(plan, model, schedule), noise)
    return tvd(reference_pops, measure_distribution(rho, noise))


def noisy_tvd_curve(model, schedule, JT, noise, N_T=2, nm_grid=range(1, 21),
                    reference_pops=None) -> dict[int, float]:
    noise = load_noise(noise)
    if reference_pops is None:
        reference_pops = evolve_exact(model, schedule, JT).populations
    return {nm: noisy_tvd(model, schedule, TrotterPlan(nm, N_T, JT), noise, reference_pops)
            for nm in nm_grid}


def noisy_optimum_magnus(model, schedule, JT, noise, N_T=2, nm_grid=range(1, 21),
                         reference_pops=None) -> int:
    """``N_M`` minimising the noisy TVD at fixed ``N_T`` (smallest on ties)."""
    nm_grid = list(nm_grid)
    if not nm_grid:
        raise ValueError("nm_grid must be nonempty")
    curve = noisy_tvd_curve(model, schedule, JT, noise, N_T, nm_grid, reference_pops)
    return min(curve, key=lambda nm: (curve[nm], nm))


@dataclass(frozen=True)
class RuntimeModel:
    """Layer durations (ns) and chromatic index for the runtime formulas."""

    C1: float = 25.0
    C2: float = 25.0
    chi1: int = 3
    analog_energy_scale: float = 1.0

    def __post_init__(self):
        if self.C1 < 0 or self.C2 < 0 or self.analog_energy_scale <= 0:
            raise ValueError("durations must be non-negative and the energy scale positive")

    @classmethod
    def for_model(cls, model: IsingModel, **kw) -> "RuntimeModel":
        return cls(chi1=chromatic_index(model), **kw)


def estimate_circuit_runtime(N_M: int, N_T: int, rt: RuntimeModel = RuntimeModel()) -> float:
    """``N_M N_T (chi1 C2 + C1) + C1`` in ns."""
    if N_M < 1 or N_T < 1:
        raise ValueError("step counts must be positive")
    return N_M * N_T * (rt.chi1 * rt.C2 + rt.C1) + rt.C1


def estimate_analog_runtime(JT: float, rt: RuntimeModel = RuntimeModel()) -> float:
    if JT < 0:
        raise ValueError("JT must be non-negative")
    return JT / rt.analog_energy_scale


@dataclass
class SweepResult:
    """Cells keyed by their grid coordinates, each tagged with the config hash."""

    axes: dict
    cells: dict = field(default_factory=dict)
    seed: int = 0
    config_hash: str = ""

    def rows(self) -> list[dict]:
        return [dict(zip(self.axes, key)) | value for key, value in sorted(self.cells.items())]


def run_sweep(fn: Callable, axes: dict[str, Iterable], seed: int = 0, workers: int = 1,
              config=None) -> SweepResult:
    """Evaluate ``fn(**cell)`` over the product grid; ``fn`` returns a dict of metrics."""
    import itertools

    names = list(axes)
    values = [list(v) for v in axes.values()]
    keys = list(itertools.product(*values))
    h = config_hash(config if config is not None else {"axes": axes, "seed": seed})
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = pool.map(_call, [(fn, dict(zip(names, k))) for k in keys])
            out = dict(zip(keys, results))
    else:
        out = {k: fn(**dict(zip(names, k))) for k in keys}
    res = SweepResult({n: v for n, v in zip(names, values)}, seed=seed, config_hash=h)
    res.cells = {k: dict(v, config_hash=h) for k, v in out.items()}
    return res


def _call(args):
    fn, kw = args
    return fn(**kw)
