"""Spin-vector Monte Carlo: classical x-z rotors annealed with Metropolis updates.

The rotor energy is ``-A(s) sum_i sin(theta_i) + B(s) (sum_ij J_ij cos_i cos_j
+ sum_i h_i cos_i)``. Trials are simulated in fixed-size blocks, each with its
own RNG stream spawned from the master seed, so results do not depend on how
blocks are scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import AnnealSchedule, IsingModel


@dataclass(frozen=True)
class SvmcConfig:
    beta: float
    n_sweeps: int = 10001
    n_trials: int = 1000
    seed: int = 0
    block_size: int = 100

    def __post_init__(self):
        if self.n_sweeps < 1 or self.n_trials < 1 or self.block_size < 1:
            raise ValueError("n_sweeps, n_trials and block_size must be positive")

    @property
    def s_grid(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_sweeps) if self.n_sweeps > 1 else np.array([1.0])


@dataclass
class SvmcResult:
    distribution: np.ndarray
    block_distributions: np.ndarray
    block_sizes: np.ndarray


def _coupling_matrix(model: IsingModel) -> np.ndarray:
    jm = np.zeros((model.n_qubits, model.n_qubits))
    for (i, j), v in model.couplings.items():
        jm[i, j] = jm[j, i] = v
    return jm


def rotor_energy(theta, s, schedule: AnnealSchedule, model: IsingModel) -> float:
    theta = np.asarray(theta, float)
    c = np.cos(theta)
    jm = _coupling_matrix(model)
    h = np.array([model.fields.get(i, 0.0) for i in range(model.n_qubits)])
    return float(-schedule.A(s) * np.sin(theta).sum()
                 + schedule.B(s) * (0.5 * c @ jm @ c + h @ c))


def svmc_delta_e(i, theta_proposed, state, s, schedule: AnnealSchedule, model: IsingModel):
    """Energy change when rotor ``i`` moves to ``theta_proposed``.

    ``state`` may be a single rotor configuration ``(n,)`` or a batch
    ``(trials, n)`` with ``theta_proposed`` of shape ``(trials,)``.
    """
    state = np.asarray(state, float)
    jm = _coupling_matrix(model)
    old = state[..., i]
    dcos = np.cos(theta_proposed) - np.cos(old)
    local = model.fields.get(i, 0.0) + np.cos(state) @ jm[i]
    return (-schedule.A(s) * (np.sin(theta_proposed) - np.sin(old))
            + schedule.B(s) * local * dcos)


def _run_block(model, schedule, cfg, n_trials, rng):
    n = model.n_qubits
    jm = _coupling_matrix(model)
    h = np.array([model.fields.get(i, 0.0) for i in range(n)])
    theta = np.full((n_trials, n), np.pi / 2)
    for s in cfg.s_grid:
        a, b = schedule.A(s), schedule.B(s)
        for i in range(n):
            prop = rng.uniform(0.0, 2 * np.pi, n_trials)
            u = rng.random(n_trials)
            c = np.cos(theta)
            dcos = np.cos(prop) - c[:, i]
            de = -a * (np.sin(prop) - np.sin(theta[:, i])) + b * (h[i] + c @ jm[i]) * dcos
            accept = u < np.exp(-cfg.beta * np.maximum(de, 0.0))
            theta[accept, i] = prop[accept]
    c = np.cos(theta)
    down = c < 0
    ties = c == 0
    if ties.any():
        down[ties] = rng.random(int(ties.sum())) < 0.5
    idx = (down * (1 << np.arange(n - 1, -1, -1))).sum(axis=1)
    return np.bincount(idx, minlength=2**n) / n_trials


def run_svmc(model: IsingModel, schedule: AnnealSchedule, config: SvmcConfig) -> SvmcResult:
    """Anneal ``config.n_trials`` rotor systems and histogram the final spins."""
    sizes = [config.block_size] * (config.n_trials // config.block_size)
    if config.n_trials % config.block_size:
        sizes.append(config.n_trials % config.block_size)
    streams = np.random.SeedSequence(config.seed).spawn(len(sizes))
    blocks = np.array([
        _run_block(model, schedule, config, size, np.random.default_rng(ss))
        for size, ss in zip(sizes, streams)
    ])
    sizes = np.array(sizes)
    dist = (blocks * sizes[:, None]).sum(axis=0) / sizes.sum()
    return SvmcResult(dist, blocks, sizes)
