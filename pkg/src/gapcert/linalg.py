"""Tensor-leg operator application, norms and random states."""

from __future__ import annotations

import logging
from typing import Callable, Sequence

import numpy as np

from .errors import ConvergenceError

logger = logging.getLogger(__name__)


def apply_local(op: np.ndarray, positions: Sequence[int], psi: np.ndarray, n: int, d: int) -> np.ndarray:
    """Apply ``op`` (acting on the tensor legs ``positions``) to ``psi``.

    ``psi`` is a vector of length d**n or a matrix whose columns are such
    vectors.  Legs are ordered as the sites of the enclosing region.
    """
    k = len(positions)
    m = 1 if psi.ndim == 1 else psi.shape[1]
    t = psi.reshape((d,) * n + (m,))
    opt = op.reshape((d,) * (2 * k))
    out = np.tensordot(opt, t, axes=(list(range(k, 2 * k)), list(positions)))
    out = np.moveaxis(out, list(range(k)), list(positions))
    return out.reshape(psi.shape)


def embed(op: np.ndarray, positions: Sequence[int], n: int, d: int, dtype=None) -> np.ndarray:
    """Dense matrix of ``op ⊗ identity`` on the full d**n space."""
    dtype = np.result_type(op, np.float64) if dtype is None else dtype
    eye = np.eye(d**n, dtype=dtype)
    return apply_local(op.astype(dtype, copy=False), positions, eye, n, d)


def random_states(dim: int, count: int, seed: int | np.random.Generator = 0) -> np.ndarray:
    """``count`` unnormalized standard complex Gaussian states as columns of a (dim, count) array."""
    rng = np.random.default_rng(seed)
    return (rng.standard_normal((dim, count)) + 1j * rng.standard_normal((dim, count))) / np.sqrt(2)


def power_iteration_norm(
    matvec: Callable[[np.ndarray], np.ndarray],
    rmatvec: Callable[[np.ndarray], np.ndarray],
    dim: int,
    *,
    tol: float = 1e-10,
    maxiter: int = 20000,
    seed: int = 0,
) -> tuple[float, np.ndarray]:
    """Largest singular value of A by power iteration on A^† A.

    Returns ``(sigma, v)`` with ``v`` the (approximate) top right singular vector.
    """
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    x /= np.linalg.norm(x)
    sigma_old = np.inf
    for it in range(maxiter):
        y = matvec(x)
        sigma = np.linalg.norm(y)
        if sigma == 0.0:
            return 0.0, x
        if abs(sigma - sigma_old) <= tol * sigma:
            logger.debug("power iteration converged after %d steps", it + 1)
            return float(sigma), x
        sigma_old = sigma
        x = rmatvec(y)
        x /= np.linalg.norm(x)
    raise ConvergenceError(f"power iteration did not converge in {maxiter} steps (last estimate {sigma_old})")


def operator_norm(a: np.ndarray) -> float:
    """Spectral norm of a dense matrix via SVD."""
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, ord=2))


def is_projector(p: np.ndarray, tol: float = 1e-12) -> bool:
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        return False
    return operator_norm(p - p.conj().T) <= tol and operator_norm(p @ p - p) <= tol
