"""Quality measures between simulated and reference states."""

import numpy as np

HIGH_QUALITY_TVD = 0.01


def _as_density(x):
    x = np.asarray(x)
    return np.outer(x, x.conj()) if x.ndim == 1 else x


def _check_same(a, b):
    if np.shape(a)[0] != np.shape(b)[0]:
        raise ValueError(f"dimension mismatch: {np.shape(a)} vs {np.shape(b)}")


def fidelity(psi, phi) -> float:
    """Overlap fidelity. Either argument may be a density matrix if the other is pure."""
    _check_same(psi, phi)
    psi, phi = np.asarray(psi), np.asarray(phi)
    if psi.ndim == 1 and phi.ndim == 1:
        return float(abs(np.vdot(psi, phi)) ** 2)
    if psi.ndim == 2 and phi.ndim == 2:
        raise ValueError("at least one argument must be a pure state")
    pure, rho = (psi, phi) if psi.ndim == 1 else (phi, psi)
    return float(np.real(pure.conj() @ rho @ pure))


def tvd(p, q) -> float:
    _check_same(p, q)
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def trace_distance(rho, sigma) -> float:
    """Half the trace norm of ``rho - sigma``. Pure states are promoted."""
    rho, sigma = _as_density(rho), _as_density(sigma)
    _check_same(rho, sigma)
    d = rho - sigma
    if np.max(np.abs(d - d.conj().T)) > 1e-9:
        raise ValueError("trace_distance needs Hermitian inputs")
    return 0.5 * float(np.abs(np.linalg.eigvalsh(d)).sum())


def basis_distribution(state) -> np.ndarray:
    state = np.asarray(state)
    if state.ndim == 1:
        return np.abs(state) ** 2
    return np.clip(np.real(np.diag(state)), 0.0, None)


def density_diff_map(rho_a, rho_b) -> np.ndarray:
    rho_a, rho_b = _as_density(rho_a), _as_density(rho_b)
    if rho_a.shape != rho_b.shape:
        raise ValueError("dimension mismatch")
    return np.abs(rho_a - rho_b)


def is_valid_density(rho, tol=1e-9) -> bool:
    rho = np.asarray(rho)
    herm = np.max(np.abs(rho - rho.conj().T)) <= tol
    return bool(herm and abs(np.trace(rho).real - 1) <= tol
                and np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() >= -tol)
