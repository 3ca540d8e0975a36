"""The overlap functional δ(A,B) and the inequalities built on it."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    BudgetExceededError,
    DecompositionError,
    DimensionMismatchError,
    EmptyRegionError,
    NotAProjectorError,
    NotFrustrationFreeError,
    SplitError,
)
from .lattice import Region, classify_region, dist, maximal_region, overlap_size, s_decompose, side_length
from .linalg import is_projector, operator_norm, power_iteration_norm, random_states
from .models import LocalHamiltonian
from .reports import VerificationReport
from .spectral import DENSE_THRESHOLD, assemble, ground_projector, memory_budget, spectral_gap

FF_TOL = 1e-8
FORM_TOL = 1e-9
TOL = 1e-9


@dataclass(frozen=True)
class DeltaEstimate:
    value: float
    method: str  # exact-norm | exact-power | closed-form-pvbs | analytic-bound
    regions: tuple[Region, Region] | None
    overlap_size: int | None
    forms: tuple[float, float] | None = None
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"delta": self.value, "method": self.method, "overlap_size": self.overlap_size}
        if self.forms is not None:
            out["form_factored"], out["form_product"] = self.forms
        if self.regions is not None:
            out["A"], out["B"] = (r.to_json() for r in self.regions)
        return {**out, **self.info}


def _apply_sub_projector(basis: np.ndarray, positions, psi: np.ndarray, n: int, d: int) -> np.ndarray:
    """(basis basis^† ⊗ 1) psi with the projector acting on tensor legs ``positions``."""
    k = len(positions)
    m = 1 if psi.ndim == 1 else psi.shape[1]
    t = psi.reshape((d,) * n + (m,))
    t = np.moveaxis(t, list(positions), list(range(k)))
    shape = t.shape
    flat = t.reshape(d**k, -1)
    flat = basis @ (basis.conj().T @ flat)
    t = np.moveaxis(flat.reshape(shape), list(range(k)), list(positions))
    return t.reshape(psi.shape)


@dataclass(eq=False)
class _Projectors:
    """P_A, P_B, P_{A∪B} on the Hilbert space of A∪B, as bases plus leg positions."""

    union: Region
    local_dim: int
    bases: dict
    positions: dict

    @property
    def n(self) -> int:
        return len(self.union)

    @property
    def dim(self) -> int:
        return self.local_dim**self.n

    def apply(self, key: str, psi: np.ndarray) -> np.ndarray:
        return _apply_sub_projector(self.bases[key], self.positions[key], psi, self.n, self.local_dim)

    def embedded_basis(self, key: str) -> np.ndarray:
        """Orthonormal columns spanning range(P_key ⊗ 1) on the space of A∪B."""
        basis, pos = self.bases[key], self.positions[key]
        n, d, k = self.n, self.local_dim, len(pos)
        full = np.kron(basis, np.eye(d ** (n - k)))
        rest = [p for p in range(n) if p not in pos]
        t = full.reshape((d,) * n + (full.shape[1],))
        t = np.moveaxis(t, list(range(n)), list(pos) + rest)
        return t.reshape(d**n, -1)

    def matrix(self, key: str) -> np.ndarray:
        dtype = np.result_type(self.bases[key], np.float64)
        return self.apply(key, np.eye(self.dim, dtype=dtype))


def _projectors(H: LocalHamiltonian, A: Region, B: Region) -> _Projectors:
    if not A.sites or not B.sites:
        raise EmptyRegionError("δ(A,B) needs non-empty A and B")
    if A.dim != B.dim:
        raise DimensionMismatchError("A and B live in different dimensions")
    U = A | B
    budget = memory_budget()
    if H.local_dim ** len(U) > budget:
        raise BudgetExceededError(f"dimension {H.local_dim ** len(U)} of A∪B exceeds the budget {budget}")
    idx = U.index
    bases, positions = {}, {}
    cache: dict = {}
    for key, region in (("U", U), ("A", A), ("B", B)):
        if region not in cache:
            cache[region] = ground_projector(assemble(H, region)).basis
        bases[key] = cache[region]
        positions[key] = [idx[s] for s in region.sorted_sites]
    return _Projectors(U, H.local_dim, bases, positions)


def _check_ff(pr: _Projectors):
    """P_A P_U = P_U (and for B); the identity behind the product form of δ."""
    for key in ("A", "B"):
        bu = pr.bases["U"]
        err = np.linalg.norm(pr.apply(key, bu) - bu, ord=2) if bu.size else 0.0
        if err > FF_TOL:
            raise NotFrustrationFreeError(f"||P_{key} P_(A∪B) - P_(A∪B)|| = {err:.2e} > {FF_TOL}")


def delta_exact(H: LocalHamiltonian, A: Region, B: Region, *, dense_threshold: int = DENSE_THRESHOLD) -> DeltaEstimate:
    """δ(A,B) = ||(P_A - P_{A∪B})(P_B - P_{A∪B})|| = ||P_A P_B - P_{A∪B}||.

    Both forms are evaluated; dense SVD up to ``dense_threshold``, power
    iteration on the Gram operator above it.
    """
    pr = _projectors(H, A, B)
    dense = pr.dim <= dense_threshold
    _check_ff(pr)
    ov = overlap_size(A, B)
    U = pr.union
    if A == U or B == U:
        # nested regions: P_{A∪B} coincides with P_A or P_B, so the first factor vanishes
        return DeltaEstimate(0.0, "exact-norm", (A, B), ov, (0.0, 0.0), {"nested": True})
    if dense:
        f1, f2 = _subspace_forms(pr)
        method = "exact-norm"
    else:
        def prod(x):
            return pr.apply("A", pr.apply("B", x)) - pr.apply("U", x)

        def prod_adj(y):
            return pr.apply("B", pr.apply("A", y)) - pr.apply("U", y)

        def fact(x):
            x = pr.apply("B", x) - pr.apply("U", x)
            return pr.apply("A", x) - pr.apply("U", x)

        def fact_adj(y):
            y = pr.apply("A", y) - pr.apply("U", y)
            return pr.apply("B", y) - pr.apply("U", y)

        f2, _ = power_iteration_norm(prod, prod_adj, pr.dim)
        f1, _ = power_iteration_norm(fact, fact_adj, pr.dim)
        method = "exact-power"
    if abs(f1 - f2) > FORM_TOL:
        raise NotFrustrationFreeError(f"the two forms of δ disagree: {f1:.12g} vs {f2:.12g}")
    return DeltaEstimate(f2, method, (A, B), ov, (f1, f2))


def _subspace_forms(pr: _Projectors) -> tuple[float, float]:
    """Both forms of δ, compressed to Z = span(range P_A ∪ range P_B).

    Every operator involved maps into Z and vanishes on Z^⊥ (range P_U ⊆
    range P_A), so compressing to Z preserves the operator norms.
    """
    va, vb, u = pr.embedded_basis("A"), pr.embedded_basis("B"), pr.bases["U"]
    z, r = np.linalg.qr(np.hstack([va, vb]))
    z = z[:, np.abs(np.diag(r)) > 1e-10 * max(1.0, np.abs(r).max())]
    a, b, c = z.conj().T @ va, z.conj().T @ vb, z.conj().T @ u
    pa, pb, pu = a @ a.conj().T, b @ b.conj().T, c @ c.conj().T
    f1 = operator_norm((pa - pu) @ (pb - pu))
    f2 = operator_norm(pa @ pb - pu)
    return f1, f2


# -- projector inequality -------------------------------------------------


def random_projector(dim: int, rank: int, seed=0) -> np.ndarray:
    """Orthogonal projection onto a seeded random complex ``rank``-dimensional subspace."""
    q, _ = np.linalg.qr(random_states(dim, rank, seed))
    return q @ q.conj().T


def verify_projector_inequality(P: np.ndarray, Q: np.ndarray, tol: float = TOL) -> VerificationReport:
    """-{P,Q} <= 1 - P - Q <= {P^⊥,Q^⊥} via minimum eigenvalues."""
    if P.shape != Q.shape:
        raise DimensionMismatchError(f"shapes {P.shape} and {Q.shape} differ")
    for name, M in (("P", P), ("Q", Q)):
        if not is_projector(M, 1e-10):
            raise NotAProjectorError(f"{name} is not an orthogonal projection")
    one = np.eye(P.shape[0])
    Pp, Qp = one - P, one - Q
    mid = one - P - Q
    lower = mid + (P @ Q + Q @ P)
    upper = (Pp @ Qp + Qp @ Pp) - mid
    rep = VerificationReport("projector_inequality", info={"dim": P.shape[0]})
    rep.add("-{P,Q} <= 1-P-Q", _min_eig(lower), tol)
    rep.add("1-P-Q <= {Pperp,Qperp}", _min_eig(upper), tol)
    return rep


def _min_eig(m: np.ndarray) -> float:
    return float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0])


# -- quasi-factorization --------------------------------------------------


def quasi_factorization_margin(pa: np.ndarray, pb: np.ndarray, pu: np.ndarray, delta: float) -> float:
    """Minimum eigenvalue of P_A^⊥ + P_B^⊥ - (1 - 2δ) P_{A∪B}^⊥."""
    one = np.eye(pa.shape[0])
    return _min_eig((one - pa) + (one - pb) - (1 - 2 * delta) * (one - pu))


def verify_quasi_factorization(
    H: LocalHamiltonian, A: Region, B: Region, samples: int = 50, seed: int = 0
) -> VerificationReport:
    """(1 - 2δ) P_{A∪B}^⊥ <= P_A^⊥ + P_B^⊥, as an operator and on sampled states."""
    est = delta_exact(H, A, B)
    pr = _projectors(H, A, B)
    if pr.dim > DENSE_THRESHOLD:
        raise BudgetExceededError("quasi-factorization check is dense-only")
    pa, pb, pu = pr.matrix("A"), pr.matrix("B"), pr.matrix("U")
    c = 1 - 2 * est.value
    rep = VerificationReport(
        "quasi_factorization", samples=samples, seed=seed,
        info={"delta": est.value, "c": c, "vacuous": c <= 0, "dim": pr.dim},
    )
    rep.add("P_A^perp + P_B^perp - c P_AB^perp >= 0", quasi_factorization_margin(pa, pb, pu, est.value), TOL)
    one = np.eye(pr.dim)
    m = (one - pa) + (one - pb) - c * (one - pu)
    phi = random_states(pr.dim, samples, seed)
    phi = phi / np.linalg.norm(phi, axis=0)
    vals = np.sum(phi.conj() * (m @ phi), axis=0).real
    rep.add("sampled <phi|...|phi> >= 0", vals.min(), TOL)
    return rep


# -- gap implies decay of δ -----------------------------------------------


def verify_gap_to_delta(
    H: LocalHamiltonian, region: Region, A: Region, B: Region, g: int | None = None
) -> VerificationReport:
    """δ(A,B) <= (1 + λ_Λ/g²)^(-l/2) with Λ = A∪B and l = dist(Λ∖A, Λ∖B).

    ``g`` defaults to the layer count of the canonical schedule on Λ.
    """
    from .dl import layer_schedule

    if (A | B) != region:
        raise SplitError("the bound is stated for Λ = A ∪ B")
    ell = dist(region - A, region - B)
    if not math.isfinite(ell) or ell < 1:
        raise SplitError(f"l = dist(Λ∖A, Λ∖B) = {ell} must be a finite number >= 1")
    g = layer_schedule(H, region).g if g is None else g
    gap = spectral_gap(assemble(H, region)).gap
    est = delta_exact(H, A, B)
    bound = 0.0 if math.isinf(gap) else (1 + gap / g**2) ** (-ell / 2)
    if g == 0:
        bound = 0.0
    rep = VerificationReport("gap_to_delta", info={"l": ell, "g": g, "gap": gap, "delta": est.value, "bound": bound})
    rep.add("delta <= (1+gap/g^2)^(-l/2)", bound - est.value, TOL)
    return rep


# -- δ_k tables ----------------------------------------------------------


@dataclass(frozen=True)
class DeltaRow:
    k: int
    l_k: float
    s_k: int
    pair: int | None
    overlap_width: int | None
    delta: float | None
    method: str
    admissible: bool = True
    note: str = ""


@dataclass
class DeltaTable:
    rows: list[DeltaRow]
    truncated_at: int | None = None

    def levels(self) -> dict[int, float]:
        """δ_k = max over the pairs of each computed level."""
        out: dict[int, float] = {}
        for r in self.rows:
            if r.delta is not None:
                out[r.k] = max(out.get(r.k, 0.0), r.delta)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "l_k", "s_k", "pair", "overlap_width", "delta", "method", "admissible", "note"])
        for r in self.rows:
            w.writerow([
                r.k, repr(r.l_k), r.s_k, "" if r.pair is None else r.pair,
                "" if r.overlap_width is None else r.overlap_width,
                "" if r.delta is None else repr(r.delta), r.method, int(r.admissible), r.note,
            ])
        return buf.getvalue()


def delta_k_table(
    H: LocalHamiltonian,
    k_max: int,
    s_schedule: Callable[[int], int],
    *,
    k_min: int = 1,
    dense_threshold: int = DENSE_THRESHOLD,
    max_dim: int | None = None,
) -> DeltaTable:
    """δ(A_i, B_i) over the canonical s_k-decomposition of the maximal box of each level.

    Where s_k > l_k/8 (always the case for l_k < 8) the level is computed with
    s = max(1, ⌊l_k/8⌋) and flagged ``admissible=False``.  The first level whose
    Hilbert space exceeds ``max_dim`` (default: the memory budget) ends the
    table with a truncation row.
    """
    D = H.dim
    rows: list[DeltaRow] = []
    budget = memory_budget() if max_dim is None else min(max_dim, memory_budget())
    for k in range(k_min, k_max + 1):
        lk = side_length(k, D)
        region = maximal_region(k, D)
        s = int(s_schedule(k))
        if H.local_dim ** len(region) > budget:
            rows.append(DeltaRow(k, lk, s, None, None, None, "truncated", False, f"dimension exceeds budget {budget}"))
            return DeltaTable(rows, truncated_at=k)
        if classify_region(region) != k:
            rows.append(DeltaRow(k, lk, s, None, None, None, "skipped", False, "maximal box already in F_(k-1)"))
            continue
        admissible = s <= lk / 8
        s_used = s if admissible else max(1, math.floor(lk / 8))
        try:
            dec = s_decompose(region, k, s_used, enforce_s_bound=False)
        except DecompositionError as exc:
            rows.append(DeltaRow(k, lk, s_used, None, None, None, "skipped", False, str(exc)))
            continue
        for i, (A, B) in enumerate(dec.pairs, start=1):
            est = delta_exact(H, A, B, dense_threshold=dense_threshold)
            rows.append(DeltaRow(k, lk, s_used, i, est.overlap_size, est.value, est.method, admissible,
                                 "" if admissible else f"s_k={s} > l_k/8"))
    return DeltaTable(rows)


def restricted_delta_1d(
    H: LocalHamiltonian, d: int, max_sites: int, *, n_max_factor: float = 24 * math.sqrt(3)
) -> tuple[float, tuple[int, int]]:
    """sup of δ([0,n], [n-d, n-d+m]) over d < n, m <= n_max_factor·d^{3/2},
    further restricted to chains of at most ``max_sites`` sites.

    Returns the value and the maximizing (n, m).  The site cap makes this a
    lower bound on the unrestricted supremum.
    """
    if H.dim != 1:
        raise DimensionMismatchError("restricted δ(d) is defined for chains")
    cap = n_max_factor * d**1.5
    best, arg = 0.0, (None, None)
    n = d + 1
    while n <= cap and n + 1 <= max_sites:
        m = d + 1
        while m <= cap and n - d + m + 1 <= max_sites:
            v = delta_exact(H, Region.interval(0, n), Region.interval(n - d, n - d + m)).value
            if arg[0] is None or v > best:
                best, arg = v, (n, m)
            m += 1
        n += 1
    if arg[0] is None:
        raise EmptyRegionError(f"no admissible (n, m) for d={d} within {max_sites} sites")
    return best, arg
