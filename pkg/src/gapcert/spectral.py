"""Assembly of H_Λ, ground projectors, spectral gaps and the Var / E functionals."""

from __future__ import annotations

import csv
import io
import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, lobpcg

from .errors import (
    AmbiguousKernelError,
    BudgetExceededError,
    ConvergenceError,
    DimensionMismatchError,
    NotFrustrationFreeError,
)
from .lattice import Region
from .linalg import apply_local
from .models import InteractionTerm, LocalHamiltonian

DENSE_THRESHOLD = 4096
DEFAULT_BUDGET = 2**20
RESIDUAL_TOL = 1e-9


def memory_budget() -> int:
    """Largest Hilbert-space dimension gapcert will assemble (env ``GAPCERT_MAX_DIM``)."""
    return int(os.environ.get("GAPCERT_MAX_DIM", DEFAULT_BUDGET))


@dataclass(eq=False)
class AssembledOperator:
    region: Region
    local_dim: int
    terms: tuple[InteractionTerm, ...]
    dim: int
    matrix: np.ndarray | None = None  # None above the dense threshold
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return len(self.region)

    @property
    def is_dense(self) -> bool:
        return self.matrix is not None

    def positions(self, term: InteractionTerm) -> list[int]:
        idx = self.region.index
        return [idx[s] for s in term.support]

    def matvec(self, psi: np.ndarray) -> np.ndarray:
        if psi.shape[0] != self.dim:
            raise DimensionMismatchError(f"state of length {psi.shape[0]} on a {self.dim}-dimensional space")
        if self.matrix is not None:
            return self.matrix @ psi
        out = np.zeros(psi.shape, dtype=np.result_type(psi, self.dtype))
        for t in self.terms:
            out += apply_local(t.matrix, self.positions(t), psi, self.n, self.local_dim)
        return out

    @property
    def dtype(self):
        if not self.terms:
            return np.float64
        return np.result_type(*[t.matrix for t in self.terms], np.float64)

    def as_linear_operator(self) -> LinearOperator:
        return LinearOperator((self.dim, self.dim), matvec=self.matvec, dtype=self.dtype)

    @property
    def norm_bound(self) -> float:
        # each term is a projector, so ||H|| <= number of terms
        return float(len(self.terms))


def assemble(
    H: LocalHamiltonian,
    region: Region,
    *,
    dense_threshold: int = DENSE_THRESHOLD,
    budget: int | None = None,
) -> AssembledOperator:
    """H_Λ on the tensor product over ``region`` (legs in lexicographic site order)."""
    if not region.sites:
        raise DimensionMismatchError("cannot assemble on an empty region")
    budget = memory_budget() if budget is None else budget
    dim = H.local_dim ** len(region)
    if dim > budget:
        raise BudgetExceededError(f"dimension {dim} exceeds the budget {budget}")
    op = AssembledOperator(region, H.local_dim, tuple(H.restrict(region)), dim)
    if dim <= dense_threshold:
        mat = np.zeros((dim, dim), dtype=op.dtype)
        eye = np.eye(dim, dtype=op.dtype)
        for t in op.terms:
            mat += apply_local(t.matrix, op.positions(t), eye, op.n, op.local_dim)
        op.matrix = (mat + mat.conj().T) / 2
    return op


def default_tol(op: AssembledOperator) -> float:
    return 1e-10 * max(1.0, op.norm_bound)


@dataclass(eq=False)
class GroundProjector:
    """P_Λ = basis · basis^† with ``basis`` an orthonormal frame of ker H_Λ."""

    basis: np.ndarray
    region: Region
    tol_used: float

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def apply(self, psi: np.ndarray) -> np.ndarray:
        return self.basis @ (self.basis.conj().T @ psi)

    def apply_perp(self, psi: np.ndarray) -> np.ndarray:
        return psi - self.apply(psi)

    def matrix(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T


@dataclass(frozen=True)
class SpectralReport:
    gap: float
    ground_degeneracy: int
    ground_energy: float
    g: int | None = None

    @property
    def epsilon(self) -> float | None:
        """ε_Λ = (1 + λ_Λ/g²)^(-1/2), once a layer count g is supplied."""
        if self.g is None:
            return None
        return epsilon_from_gap(self.gap, self.g)


def epsilon_from_gap(gap: float, g: int) -> float:
    if math.isinf(gap):
        return 0.0
    return (1.0 + gap / g**2) ** -0.5


@dataclass(frozen=True)
class _Spectrum:
    kernel: np.ndarray
    gap: float
    ground_energy: float


def _check_ambiguous(w: np.ndarray, tol: float):
    bad = w[(w >= tol / 10) & (w <= tol)]
    if bad.size:
        raise AmbiguousKernelError(f"eigenvalue {bad[0]:.3e} within [tol/10, tol] with tol={tol:.3e}; adjust tol")


def _spectrum(op: AssembledOperator, tol: float) -> _Spectrum:
    if tol in op._cache:
        return op._cache[tol]
    if op.matrix is not None:
        w, v = np.linalg.eigh(op.matrix)
        _check_ambiguous(w, tol)
        ker = w < tol
        gap = float(w[~ker].min()) if (~ker).any() else math.inf
        spec = _Spectrum(v[:, ker], gap, float(w[0]))
    else:
        spec = _iterative_spectrum(op, tol)
    op._cache[tol] = spec
    return spec


def _iterative_spectrum(op: AssembledOperator, tol: float, block: int = 8) -> _Spectrum:
    """Kernel and gap by block LOBPCG with the found kernel passed as constraints.

    Each round asks for the ``block`` lowest eigenpairs orthogonal to the
    kernel vectors found so far; a round that returns any eigenvalue above
    ``tol`` has exhausted the kernel, and its lowest such value is the gap.
    (Plain Lanczos/ARPACK is not used: it silently drops exact zero modes
    that decouple from the start vector, e.g. the all-up state.)
    """
    block = max(1, min(block, (op.dim - 1) // 3))
    found = np.zeros((op.dim, 0), dtype=op.dtype)
    rng = np.random.default_rng(0)
    lin = op.as_linear_operator()
    ground_energy = None
    while True:
        x = rng.standard_normal((op.dim, block)).astype(op.dtype)
        w, v = _lobpcg_converged(lin, op, x, found if found.shape[1] else None)
        if ground_energy is None:
            ground_energy = float(w[0])
        _check_ambiguous(w, tol)
        ker = w < tol
        if not ker.all():
            if ker.any():
                found = _extend(found, v[:, ker])
            return _Spectrum(found, float(w[~ker].min()), ground_energy)
        found = _extend(found, v)
        if found.shape[1] + 3 * block >= op.dim:
            raise ConvergenceError("kernel too large for the iterative eigensolver; raise the dense threshold")


def _extend(found: np.ndarray, new: np.ndarray) -> np.ndarray:
    new = new - found @ (found.conj().T @ new)
    q, r = np.linalg.qr(new)
    keep = np.abs(np.diag(r)) > 1e-8
    return np.hstack([found, q[:, keep]])


def _lobpcg_converged(lin, op, x, constraints, restarts: int = 20):
    for _ in range(restarts):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            w, v = lobpcg(lin, x, Y=constraints, largest=False, tol=RESIDUAL_TOL / 10, maxiter=500)
        order = np.argsort(w)
        w, v = w[order], v[:, order]
        resid = np.linalg.norm(op.matvec(v) - v * w, axis=0)
        if resid.max() <= RESIDUAL_TOL:
            return w, v
        x = v
    raise ConvergenceError(f"LOBPCG residuals up to {resid.max():.2e} exceed {RESIDUAL_TOL}")


def ground_projector(op: AssembledOperator, tol: float | None = None) -> GroundProjector:
    """Projector onto ker H_Λ (eigenvalues below ``tol``)."""
    tol = default_tol(op) if tol is None else tol
    spec = _spectrum(op, tol)
    if spec.kernel.shape[1] == 0:
        raise NotFrustrationFreeError(f"H_Λ has no kernel: lowest eigenvalue {spec.ground_energy:.3e} > tol={tol:.1e}")
    return GroundProjector(spec.kernel, op.region, tol)


def spectral_gap(op: AssembledOperator, tol: float | None = None, g: int | None = None) -> SpectralReport:
    """Smallest eigenvalue above the kernel tolerance (inf when H_Λ = 0)."""
    tol = default_tol(op) if tol is None else tol
    spec = _spectrum(op, tol)
    return SpectralReport(spec.gap, spec.kernel.shape[1], spec.ground_energy, g)


def check_frustration_free(H: LocalHamiltonian, region: Region, tol: float = 1e-9) -> bool:
    """True iff H_Λ has a kernel and every term annihilates it (to ``tol``)."""
    op = assemble(H, region)
    spec = _spectrum(op, default_tol(op))
    if spec.ground_energy > tol or spec.kernel.shape[1] == 0:
        return False
    basis = spec.kernel
    for t in op.terms:
        hp = apply_local(t.matrix, op.positions(t), basis, op.n, op.local_dim)
        if np.linalg.norm(hp, ord=2) > tol:
            return False
    return True


def _as_columns(phi: np.ndarray, dim: int) -> np.ndarray:
    phi = np.asarray(phi)
    if phi.shape[0] != dim:
        raise DimensionMismatchError(f"state of length {phi.shape[0]} on a {dim}-dimensional space")
    return phi


def _sq(x: np.ndarray):
    out = np.sum(np.abs(x) ** 2, axis=0)
    return float(out) if np.ndim(out) == 0 else out


def variance(P: GroundProjector, phi: np.ndarray):
    """Var(φ) = <φ|φ> - <φ|P|φ>; ``phi`` may hold several states as columns."""
    phi = _as_columns(phi, P.dim)
    return _sq(phi) - _sq(P.basis.conj().T @ phi)


def dirichlet(op: AssembledOperator, phi: np.ndarray):
    """E(φ) = <φ|H_Λ|φ>."""
    phi = _as_columns(phi, op.dim)
    out = np.sum(phi.conj() * op.matvec(phi), axis=0).real
    return float(out) if np.ndim(out) == 0 else out


def spectra_csv(rows) -> str:
    """CSV with header ``region,dim,gap,degeneracy`` from (region, AssembledOperator, SpectralReport) rows."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["region", "dim", "gap", "degeneracy"])
    for region, op, rep in rows:
        w.writerow([repr(region), op.dim, repr(rep.gap), rep.ground_degeneracy])
    return buf.getvalue()
