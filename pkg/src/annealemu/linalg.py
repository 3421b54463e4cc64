"""Matrix-exponential kernel shared by the solvers and the circuit builder."""

import numpy as np

HERMITIAN_TOL = 1e-12


class NotHermitianError(ValueError):
    pass


def check_hermitian(h: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    dev = np.max(np.abs(h - h.conj().T)) if h.size else 0.0
    if dev > tol:
        raise NotHermitianError(f"matrix is not Hermitian (max deviation {dev:.3g})")


def propagator_step(h_eff: np.ndarray, dt_eff: float, check: bool = True) -> np.ndarray:
    """Return ``exp(-i * h_eff * dt_eff)`` using the eigendecomposition of ``h_eff``."""
    h_eff = np.asarray(h_eff, dtype=complex)
    if check:
        check_hermitian(h_eff)
    w, v = np.linalg.eigh(h_eff)
    return (v * np.exp(-1j * w * dt_eff)) @ v.conj().T
