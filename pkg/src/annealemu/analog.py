"""Open-system models of the analog anneal.

Three models share the time-normalised convention ``t = s * JT`` (ns) at an
energy scale of 1 rad/ns:

* SCL: Lindblad dephasing by ``sigma^z_i`` at a fixed rate ``gamma``.
* AME: Davies-type dissipation in the instantaneous eigenbasis with Ohmic,
  KMS-consistent rates. The Lamb shift is omitted.
* PE: quasi-static Gaussian perturbations of ``J`` and ``h``, averaged over
  closed-system runs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .model import (
    AnnealSchedule,
    IsingModel,
    build_driver_hamiltonian,
    ising_diagonal,
    spin_values,
    uniform_state,
)
from .reference import ConvergenceCriteria, ConvergenceError, evolve_exact

# k_B T / hbar in rad/ns per mK (1.9643 rad/ns at 15 mK)
TEMPERATURE_SCALE = 1.9643 / 15.0
DEFAULT_CUTOFF = 8 * np.pi
CALIBRATION_GAP = 2.0
SCL_GAMMA = 5e-3


class BinningWarning(UserWarning):
    """Two Bohr frequencies lie close to the binning tolerance."""


@dataclass(frozen=True)
class OhmicBath:
    """Independent Ohmic baths on every qubit.

    Attributes:
        temperature: in mK.
        cutoff: ``omega_c`` in rad/ns.
        coupling: ``eta * g**2`` (dimensionless with hbar = 1).
    """

    temperature: float
    cutoff: float = DEFAULT_CUTOFF
    coupling: float = 1.0

    def __post_init__(self):
        if self.temperature <= 0 or self.cutoff <= 0 or self.coupling < 0:
            raise ValueError("bath parameters must be positive")

    @property
    def beta(self) -> float:
        """Inverse temperature in ns/rad."""
        return 1.0 / (TEMPERATURE_SCALE * self.temperature)


def gamma_ohmic(omega, bath: OhmicBath):
    """Ohmic rate ``2 pi eta g^2 omega exp(-|omega|/omega_c) / (1 - exp(-beta omega))``."""
    w = np.asarray(omega, dtype=float)
    out = np.empty_like(w)
    small = np.abs(w) < 1e-12
    ws = w[~small]
    pref = 2 * np.pi * bath.coupling
    out[~small] = pref * ws * np.exp(-np.abs(ws) / bath.cutoff) / -np.expm1(-bath.beta * ws)
    out[small] = pref / bath.beta
    return out if out.ndim else float(out)


def calibrate_coupling(target_dephasing: float, delta_E: float = CALIBRATION_GAP,
                       bath: OhmicBath | None = None) -> float:
    """``eta g^2`` giving single-qubit dephasing time ``target_dephasing`` (ns).

    Solves ``T = 2 / (gamma(dE) (1 + exp(-beta dE)))``; the rate is linear in
    the coupling so a unit-coupling rate is rescaled.
    """
    if target_dephasing <= 0:
        raise ValueError("target dephasing time must be positive")
    unit = replace(bath, coupling=1.0)
    g = gamma_ohmic(delta_E, unit)
    return 2.0 / (target_dephasing * g * (1 + np.exp(-unit.beta * delta_E)))


def calibrated_bath(temperature: float, target_dephasing: float = 100.0) -> OhmicBath:
    bath = OhmicBath(temperature)
    return replace(bath, coupling=calibrate_coupling(target_dephasing, bath=bath))


@dataclass
class OpenSystemResult:
    JT: float
    rho: np.ndarray
    n_steps: int
    distance: float

    @property
    def populations(self) -> np.ndarray:
        return np.clip(np.real(np.diag(self.rho)), 0.0, None)


def _rk4(rhs, rho, n_steps):
    """Classic RK4 over ``s in [0, 1]``. ``rhs(k, stage, rho)`` with stage 0, 1, 2."""
    h = 1.0 / n_steps
    for k in range(n_steps):
        k1 = rhs(k, 0, rho)
        k2 = rhs(k, 1, rho + 0.5 * h * k1)
        k3 = rhs(k, 1, rho + 0.5 * h * k2)
        k4 = rhs(k, 2, rho + h * k3)
        rho = rho + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return rho


def _initial_steps(JT, floor=64):
    n = floor
    while n < 4 * JT:
        n *= 2
    return n


def _doubling(run, JT, tol, max_refinements):
    n = _initial_steps(JT)
    with np.errstate(over="ignore", invalid="ignore"):
        prev = run(n)
        dist = np.inf
        for _ in range(max_refinements):
            n *= 2
            cur = run(n)
            diff = cur - prev
            if np.all(np.isfinite(diff)):
                dist = 0.5 * float(np.abs(np.linalg.eigvalsh(diff)).sum())
                if dist < tol:
                    return OpenSystemResult(JT, cur, n, dist)
            prev = cur
    raise ConvergenceError(f"master equation not converged (distance {dist:.3g})", l1=dist)


def _pure_initial(n):
    psi = uniform_state(n)
    return np.outer(psi, psi.conj())


def evolve_scl(model: IsingModel, schedule: AnnealSchedule, JT: float, gamma: float,
               tol: float = 1e-6, max_refinements: int = 12) -> OpenSystemResult:
    """Computational-basis dephasing ``gamma * sum_i (Z_i rho Z_i - rho)``."""
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    h0 = build_driver_hamiltonian(model.n_qubits).real
    diag = ising_diagonal(model)
    z = spin_values(model.n_qubits)
    hamming = (z[:, None, :] != z[None, :, :]).sum(-1)
    damp = -2.0 * gamma * hamming

    def run(n):
        h = 1.0 / n

        def rhs(k, stage, r):
            s = (k + 0.5 * stage) * h
            H = schedule.A(s) * h0 + np.diag(schedule.B(s) * diag)
            return JT * (-1j * (H @ r - r @ H) + damp * r)

        return _rk4(rhs, _pure_initial(model.n_qubits).astype(complex), n)

    return _doubling(run, JT, tol, max_refinements)


def _bohr_bins(w, tol):
    order = np.argsort(w)
    ws = w[order]
    gaps = np.diff(ws)
    if np.any((gaps >= tol) & (gaps < 10 * tol)):
        warnings.warn("Bohr frequencies within 10x the binning tolerance", BinningWarning, stacklevel=3)
    labels = np.empty(w.size, dtype=int)
    labels[order] = np.concatenate([[0], np.cumsum(gaps > tol)])
    return labels


class _AmeGenerator:
    """Eigenbasis pieces of the dissipator at one value of ``s``.

    With ``A_i[a, b] = <a|Z_i|b>`` and ``w[a, b] = E_b - E_a`` the jump part
    is ``sum_i sum_{(a,b),(d,c) same bin} gamma(w_ab) A_i[a,b] A_i[d,c]
    |a><b| rho |c><d|`` and the anticommutator part uses
    ``K = sum_i sum_a gamma(w_ab) A_i[a,b] A_i[a,c]`` restricted to ``E_b = E_c``.
    """

    def __init__(self, H, zdiag, bath, tol):
        E, V = np.linalg.eigh(H)
        dim = E.size
        w = (E[None, :] - E[:, None]).ravel()
        lab = _bohr_bins(w, tol)
        g = gamma_ohmic(w, bath)
        A = np.einsum("xa,ixb->iab", V, zdiag[:, :, None] * V[None]).reshape(len(zdiag), -1)
        S = ((g * A).T @ A) * (lab[:, None] == lab[None, :])
        self.S = S.reshape(dim, dim, dim, dim).transpose(0, 2, 1, 3).reshape(dim * dim, dim * dim)
        same_energy = lab.reshape(dim, dim) == lab[0]
        A3 = A.reshape(-1, dim, dim)
        self.K = np.einsum("iab,iac->bc", g.reshape(dim, dim) * A3, A3) * same_energy
        self.E, self.V = E, V

    def __call__(self, rho):
        V, E = self.V, self.E
        r = V.T @ rho @ V
        d = r.shape[0]
        out = (-1j * (E[:, None] - E[None, :]) * r
               + (self.S @ r.reshape(-1)).reshape(d, d)
               - 0.5 * (self.K @ r + r @ self.K))
        return V @ out @ V.T


def evolve_ame(model: IsingModel, schedule: AnnealSchedule, JT: float, bath: OhmicBath,
               tol: float = 1e-6, max_refinements: int = 12, bin_tol: float = 1e-13,
               endpoint_offset: float = 1e-6) -> OpenSystemResult:
    """Adiabatic master equation with Ohmic ``sigma^z`` baths.

    Args:
        bin_tol: Bohr frequencies closer than this (rad/ns) share a bin.
        endpoint_offset: the generator is evaluated at ``s`` clipped to
            ``[offset, 1 - offset]``. The spectrum is degenerate at both ends,
            where the secular binning jumps.
    """
    h0 = build_driver_hamiltonian(model.n_qubits).real
    diag = ising_diagonal(model)
    zdiag = spin_values(model.n_qubits).T.astype(float)

    def gen(s):
        s = min(max(s, endpoint_offset), 1.0 - endpoint_offset)
        H = schedule.A(s) * h0 + np.diag(schedule.B(s) * diag)
        return _AmeGenerator(H, zdiag, bath, bin_tol)

    def run(n):
        h = 1.0 / n
        cache = {}

        def rhs(k, stage, r):
            key = 2 * k + stage  # stage 2 of step k equals stage 0 of step k+1
            if key not in cache:
                cache.clear() if len(cache) > 4 else None
                cache[key] = gen(key * h / 2)
            return JT * cache[key](r)

        return _rk4(rhs, _pure_initial(model.n_qubits).astype(complex), n)

    return _doubling(run, JT, tol, max_refinements)


def ame_relax_frozen(model, schedule, s, bath, duration, bin_tol=1e-13):
    """Evolve the uniform state for ``duration`` ns under the AME generator frozen at ``s``.

    Returns the final state and ``H(s)``. The generator is exponentiated exactly.
    """
    h0 = build_driver_hamiltonian(model.n_qubits).real
    H = schedule.A(s) * h0 + np.diag(schedule.B(s) * ising_diagonal(model))
    g = _AmeGenerator(H, spin_values(model.n_qubits).T.astype(float), bath, bin_tol)
    dim = H.shape[0]
    basis = np.eye(dim * dim).reshape(dim * dim, dim, dim)
    L = np.array([g(b).reshape(-1) for b in basis]).T
    rho0 = _pure_initial(model.n_qubits).reshape(-1)
    return (expm(L * duration) @ rho0).reshape(dim, dim), H


@dataclass(frozen=True)
class ProgrammingErrorModel:
    sigma: float = 0.03
    n_realizations: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.n_realizations < 1:
            raise ValueError("need at least one realization")

    def draw(self, model: IsingModel) -> list[IsingModel]:
        """Perturbed instances; realization ``r`` uses the ``r``-th spawned seed."""
        children = np.random.SeedSequence(self.seed).spawn(self.n_realizations)
        out = []
        keys_j, keys_h = list(model.couplings), list(model.fields)
        for child in children:
            noise = np.random.default_rng(child).normal(0.0, self.sigma, len(keys_j) + len(keys_h))
            cpl = {k: model.couplings[k] + e for k, e in zip(keys_j, noise)}
            fld = {k: model.fields[k] + e for k, e in zip(keys_h, noise[len(keys_j):])}
            out.append(model.with_parameters(cpl, fld))
        return out


@dataclass
class ProgrammingErrorResult:
    distribution: np.ndarray
    samples: np.ndarray  # (n_realizations, 2**n) per-realization distributions

    def standard_error(self) -> np.ndarray:
        n = self.samples.shape[0]
        return self.samples.std(axis=0, ddof=1) / np.sqrt(n)


def _batched_schrodinger(h0, diags, schedule, JT, rtol, atol):
    R, dim = diags.shape

    def rhs(s, y):
        p = y.view(complex).reshape(R, dim)
        return (-1j * JT * (schedule.A(s) * p @ h0 + schedule.B(s) * diags * p)).ravel().view(float)

    y0 = np.tile(uniform_state(int(np.log2(dim))), (R, 1)).ravel().view(float)
    sol = solve_ivp(rhs, (0.0, 1.0), y0, method="DOP853", rtol=rtol, atol=atol, t_eval=[1.0])
    if not sol.success:
        raise ConvergenceError(sol.message)
    return sol.y[:, -1].copy().view(complex).reshape(R, dim)


def evolve_with_programming_errors(model: IsingModel, schedule: AnnealSchedule, JT: float,
                                   pe: ProgrammingErrorModel, solver: str = "batched",
                                   rtol: float = 1e-10, atol: float = 1e-12,
                                   criteria: ConvergenceCriteria = ConvergenceCriteria(),
                                   ) -> ProgrammingErrorResult:
    """Average closed-system distributions over perturbed instances.

    ``solver="batched"`` integrates all realizations together with an
    adaptive eighth-order Runge-Kutta method; ``solver="magnus"`` calls
    :func:`evolve_exact` per realization (slow, used as a cross-check).
    """
    models = pe.draw(model)
    if solver == "magnus":
        samples = np.array([evolve_exact(m, schedule, JT, criteria).populations for m in models])
    elif solver == "batched":
        h0 = build_driver_hamiltonian(model.n_qubits).real
        diags = np.array([ising_diagonal(m) for m in models])
        samples = np.abs(_batched_schrodinger(h0, diags, schedule, JT, rtol, atol)) ** 2
    else:
        raise ValueError(f"unknown solver {solver!r}")
    return ProgrammingErrorResult(samples.mean(axis=0), samples)


PRESETS = {
    "scl-100ns": {"kind": "scl", "gamma": SCL_GAMMA},
    "ame-15mK": {"kind": "ame", "temperature": 15.0, "dephasing_time": 100.0},
    "ame-2.38mK": {"kind": "ame", "temperature": 2.38, "dephasing_time": 100.0},
    "pe-0.03": {"kind": "pe", "sigma": 0.03, "n_realizations": 1000},
}


def run_analog(preset, model, schedule, JT, seed=0) -> np.ndarray:
    """Final basis distribution of ``model`` under an analog noise preset (name or dict)."""
    cfg = PRESETS[preset] if isinstance(preset, str) else dict(preset)
    kind = cfg["kind"]
    if kind == "scl":
        return evolve_scl(model, schedule, JT, cfg["gamma"]).populations
    if kind == "ame":
        bath = calibrated_bath(cfg["temperature"], cfg.get("dephasing_time", 100.0))
        return evolve_ame(model, schedule, JT, bath).populations
    if kind == "pe":
        pe = ProgrammingErrorModel(cfg["sigma"], cfg.get("n_realizations", 1000), seed)
        return evolve_with_programming_errors(model, schedule, JT, pe).distribution
    raise ValueError(f"unknown analog model kind {kind!r}")
