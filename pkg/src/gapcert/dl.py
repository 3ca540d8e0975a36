"""Layer schedules, approximate ground state projectors and the detectability lemma.

An approximate ground state projector is ``L = L_1 L_2 ... L_g`` where each
layer ``L_i`` is the product of the kernel projectors ``1 - h(X)`` of
pairwise disjoint terms.  The functions here verify numerically, on finite
regions, the inequalities tying L to the spectral gap:

* detectability lemma        E(Lφ) <= g² DL(φ),  ||L P^⊥||² <= 1/(1 + λ/g²)
* converse                   DL(φ) <= 4 E(φ),     λ >= (1 - ||L P^⊥||²)/4
* sandwich                   DL(φ) <= Var(φ) <= DL(φ)/(1 - ||L P^⊥||²)
* contraction                E(Lφ) <= γ E(φ) with γ < 1  =>  λ >= (1 - γ)/4

where DL(φ) = <φ|φ> - ||Lφ||².
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import networkx as nx
import numpy as np

from .errors import BudgetExceededError, DimensionMismatchError, SplitError
from .lattice import Region, dist
from .linalg import apply_local, embed, operator_norm, power_iteration_norm, random_states
from .models import InteractionTerm, LocalHamiltonian
from .reports import VerificationReport
from .spectral import (
    DENSE_THRESHOLD,
    AssembledOperator,
    GroundProjector,
    assemble,
    dirichlet,
    epsilon_from_gap,
    ground_projector,
    spectral_gap,
    variance,
)

TOL = 1e-9


@dataclass(frozen=True)
class LayerSchedule:
    terms: tuple[InteractionTerm, ...]
    assignment: tuple[int, ...]  # layer label in 1..g for each term

    @property
    def g(self) -> int:
        return len(set(self.assignment))

    @property
    def layers(self) -> list[list[int]]:
        """Term indices of each layer, layer 1 first."""
        out = [[] for _ in range(self.g)]
        for i, lab in enumerate(self.assignment):
            out[lab - 1].append(i)
        return out


def layer_schedule(H_or_terms, region: Region | None = None) -> LayerSchedule:
    """Greedy colouring of the term conflict graph in canonical term order.

    Terms conflict when their supports intersect; each term gets the smallest
    layer not used by an earlier conflicting term.
    """
    if isinstance(H_or_terms, LocalHamiltonian):
        terms = tuple(H_or_terms.restrict(region))
    else:
        terms = tuple(H_or_terms)
    graph = nx.Graph()
    graph.add_nodes_from(range(len(terms)))
    by_site: dict = {}
    for i, t in enumerate(terms):
        for s in t.support:
            for j in by_site.get(s, ()):
                graph.add_edge(i, j)
            by_site.setdefault(s, []).append(i)
    colors = nx.greedy_color(graph, strategy=lambda G, c: range(len(terms)))
    return LayerSchedule(terms, tuple(colors[i] + 1 for i in range(len(terms))))


@dataclass(eq=False)
class DLOperator:
    """L = L_{order[0]} L_{order[1]} ... on the Hilbert space of ``region``."""

    region: Region
    local_dim: int
    schedule: LayerSchedule
    order: tuple[int, ...]
    _positions: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if sorted(self.order) != list(range(1, self.schedule.g + 1)):
            raise ValueError(f"order {self.order} is not a permutation of 1..{self.schedule.g}")
        idx = self.region.index
        self._positions = [[idx[s] for s in t.support] for t in self.schedule.terms]

    @property
    def g(self) -> int:
        return self.schedule.g

    @property
    def dim(self) -> int:
        return self.local_dim ** len(self.region)

    def _kernel_proj(self, i: int, psi: np.ndarray) -> np.ndarray:
        t = self.schedule.terms[i]
        return psi - apply_local(t.matrix, self._positions[i], psi, len(self.region), self.local_dim)

    def apply_layer(self, label: int, psi: np.ndarray) -> np.ndarray:
        for i in self.schedule.layers[label - 1]:
            psi = self._kernel_proj(i, psi)
        return psi

    def apply(self, psi: np.ndarray) -> np.ndarray:
        if psi.shape[0] != self.dim:
            raise DimensionMismatchError(f"state of length {psi.shape[0]} on a {self.dim}-dimensional space")
        for label in reversed(self.order):
            psi = self.apply_layer(label, psi)
        return psi

    def apply_adjoint(self, psi: np.ndarray) -> np.ndarray:
        for label in self.order:
            psi = self.apply_layer(label, psi)
        return psi

    def matrix(self) -> np.ndarray:
        dtype = np.result_type(*[t.matrix for t in self.schedule.terms], np.float64) if self.schedule.terms else np.float64
        return self.apply(np.eye(self.dim, dtype=dtype))

    def instances(self, q: int) -> list[tuple[int, int]]:
        """(instance, term index) pairs of L^q in left-to-right product order."""
        out = []
        for rep in range(q):
            for pos, label in enumerate(self.order):
                for i in self.schedule.layers[label - 1]:
                    out.append((rep * self.g + pos, i))
        return out


def build_dl_operator(H: LocalHamiltonian, region: Region, order: Sequence[int] | None = None) -> DLOperator:
    sched = layer_schedule(H, region)
    order = tuple(order) if order is not None else tuple(range(1, sched.g + 1))
    return DLOperator(region, H.local_dim, sched, order)


def dl_functional(L: DLOperator, phi: np.ndarray):
    """DL(φ) = <φ|φ> - ||Lφ||² (columnwise for a matrix of states)."""
    lphi = L.apply(phi)
    out = np.sum(np.abs(phi) ** 2, axis=0) - np.sum(np.abs(lphi) ** 2, axis=0)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(eq=False)
class _Setup:
    op: AssembledOperator
    P: GroundProjector
    gap: float
    L: DLOperator


def _setup(H: LocalHamiltonian, region: Region, L: DLOperator | None) -> _Setup:
    op = assemble(H, region)
    P = ground_projector(op)
    gap = spectral_gap(op).gap
    L = build_dl_operator(H, region) if L is None else L
    if L.region != region:
        raise DimensionMismatchError("DL operator was built on a different region")
    return _Setup(op, P, gap, L)


def lp_perp_norm(L: DLOperator, P: GroundProjector, *, dense_threshold: int = DENSE_THRESHOLD) -> tuple[float, np.ndarray]:
    """||L P^⊥|| and a unit vector in range(P^⊥) attaining it."""
    if L.dim <= dense_threshold:
        m = L.matrix()
        m = m - L.apply(P.matrix().astype(m.dtype))
        u, s, vh = np.linalg.svd(m)
        v = vh[0].conj()
        if s[0] <= 1e-14:
            # L P^⊥ = 0: every unit vector of range(P^⊥) attains the norm
            perp = np.eye(L.dim) - P.matrix()
            col = int(np.argmax(np.linalg.norm(perp, axis=0)))
            v = perp[:, col]
            nv = np.linalg.norm(v)
            v = v / nv if nv > 0 else v
        return float(s[0]), v
    sigma, v = power_iteration_norm(
        lambda x: L.apply(P.apply_perp(x)), lambda y: P.apply_perp(L.apply_adjoint(y)), L.dim
    )
    v = P.apply_perp(v)
    return sigma, v / np.linalg.norm(v)


def verify_dl(H: LocalHamiltonian, region: Region, L: DLOperator | None = None, samples: int = 200, seed: int = 0) -> VerificationReport:
    """E(Lφ) <= g² DL(φ) on random states, and ||L P^⊥||² <= 1/(1 + λ/g²)."""
    st = _setup(H, region, L)
    g = st.L.g
    phi = random_states(st.op.dim, samples, seed)
    e_l = np.atleast_1d(dirichlet(st.op, st.L.apply(phi)))
    dl = np.atleast_1d(dl_functional(st.L, phi))
    margins = g**2 * dl - e_l
    worst = int(np.argmin(margins))
    rep = VerificationReport("detectability_lemma", samples=samples, seed=seed)
    rep.add("E(Lphi) <= g^2 DL(phi)", margins[worst], TOL, worst_sample=worst)
    sigma, _ = lp_perp_norm(st.L, st.P)
    bound = 1.0 / (1.0 + st.gap / g**2)
    rep.add("||LP_perp||^2 <= 1/(1+gap/g^2)", bound - sigma**2, TOL, lhs=sigma**2, rhs=bound)
    rep.info.update(g=g, gap=st.gap, lp_perp_norm=sigma, dim=st.op.dim)
    return rep


def verify_converse_dl(H: LocalHamiltonian, region: Region, L: DLOperator | None = None, samples: int = 200, seed: int = 0) -> VerificationReport:
    st = _setup(H, region, L)
    phi = random_states(st.op.dim, samples, seed)
    margins = 4 * np.atleast_1d(dirichlet(st.op, phi)) - np.atleast_1d(dl_functional(st.L, phi))
    worst = int(np.argmin(margins))
    rep = VerificationReport("converse_detectability_lemma", samples=samples, seed=seed)
    rep.add("DL(phi) <= 4 E(phi)", margins[worst], TOL, worst_sample=worst)
    rep.info.update(g=st.L.g, gap=st.gap, dim=st.op.dim)
    return rep


def verify_sandwich(
    H: LocalHamiltonian,
    region: Region,
    L: DLOperator | None = None,
    samples: int = 200,
    seed: int = 0,
    tightness_tol: float = 1e-6,
) -> VerificationReport:
    """DL <= Var <= DL/(1 - ||LP^⊥||²), tightness at the top singular vector of
    L P^⊥, and the converse corollary λ >= (1 - ||LP^⊥||²)/4."""
    st = _setup(H, region, L)
    phi = random_states(st.op.dim, samples, seed)
    dl = np.atleast_1d(dl_functional(st.L, phi))
    var = np.atleast_1d(variance(st.P, phi))
    sigma, vstar = lp_perp_norm(st.L, st.P)
    c = 1.0 / (1.0 - sigma**2)
    rep = VerificationReport("dl_variance_sandwich", samples=samples, seed=seed)
    low = var - dl
    rep.add("DL(phi) <= Var(phi)", low.min(), TOL, worst_sample=int(np.argmin(low)))
    high = c * dl - var
    rep.add("Var(phi) <= DL(phi)/(1-||LP_perp||^2)", high.min(), TOL, worst_sample=int(np.argmin(high)))
    var_star = variance(st.P, vstar)
    if var_star > 0:
        rel = abs(var_star - c * dl_functional(st.L, vstar)) / var_star
        rep.add("tightness at top singular vector", tightness_tol - rel, 0.0, relative_error=rel)
    rep.add("gap >= (1-||LP_perp||^2)/4", st.gap - (1 - sigma**2) / 4, TOL, bound=(1 - sigma**2) / 4)
    rep.info.update(g=st.L.g, gap=st.gap, lp_perp_norm=sigma, dim=st.op.dim)
    return rep


def check_dl_operator(L: DLOperator, P: GroundProjector, n_max: int = 64) -> VerificationReport:
    """||L|| <= 1, LP = P, and ||L^n - P|| <= ||LP^⊥||^n for n <= n_max (dense)."""
    rep = VerificationReport("dl_operator_properties")
    lm = L.matrix()
    pm = P.matrix()
    rep.add("||L|| <= 1", 1.0 - operator_norm(lm), 1e-12)
    rep.add("LP = P", -operator_norm(lm @ pm - pm), 1e-10)
    rep.add("PL = P", -operator_norm(pm @ lm - pm), 1e-10)
    sigma = operator_norm(lm - lm @ pm)
    worst = math.inf
    power = np.eye(L.dim)
    for n in range(1, n_max + 1):
        power = lm @ power
        worst = min(worst, sigma**n - operator_norm(power - pm))
    rep.add("||L^n - P|| <= ||LP_perp||^n", worst, TOL, n_max=n_max)
    return rep


@dataclass(eq=False)
class SplitPair:
    """L^q = M_A M_B, each factor an ordered sub-product of the projectors of L^q."""

    q: int
    M_A: tuple[tuple[int, int], ...]  # (instance, term index), product order
    M_B: tuple[tuple[int, int], ...]
    support_A: Region
    support_B: Region
    epsilon: float
    report: VerificationReport
    trace: dict = field(default_factory=dict)


def _closure(instances, seeds: set, forward: bool, supports) -> set:
    """Instances causally after (forward) or before (backward) any seed term,
    where causality links overlapping terms at different layer instances."""
    seq = instances if forward else list(reversed(instances))
    cone: set = set()
    sites: set = set()
    # terms within one instance are disjoint, so sites grow per instance
    current = None
    pending: set = set()
    for inst, i in seq:
        if inst != current:
            sites |= pending
            pending = set()
            current = inst
        sup = supports[i]
        if (inst, i) in seeds or (sites & sup):
            cone.add((inst, i))
            pending |= sup
    return cone


def split_MA_MB(
    H: LocalHamiltonian,
    region: Region,
    A: Region,
    B: Region,
    q: int,
    L: DLOperator | None = None,
) -> SplitPair:
    """Split L^q into M_A (acting on A) times M_B (acting on B).

    Terms touching Λ\\A must sit in M_B together with everything in their
    forward light cone; terms touching Λ\\B must sit in M_A together with their
    backward light cone.  Of the remaining freedom, the first ⌊gq/2⌋ layer
    instances go to M_A and the last ⌈gq/2⌉ to M_B.
    """
    if not (A <= region and B <= region) or (A | B) != region:
        raise SplitError("A and B must cover the region exactly")
    out_a, out_b = region - A, region - B
    if not out_a.sites or not out_b.sites:
        raise SplitError("Λ\\A and Λ\\B must both be non-empty (the split distance is undefined otherwise)")
    ell = dist(out_a, out_b)
    if q < 1 or q > ell:
        raise SplitError(f"need 1 <= q <= l = {ell}, got q={q}")
    st = _setup(H, region, L)
    Lop = st.L
    if Lop.dim > DENSE_THRESHOLD:
        raise BudgetExceededError("split verification is dense-only")
    terms = Lop.schedule.terms
    supports = [set(t.support) for t in terms]
    inst = Lop.instances(q)
    seeds_b = {(k, i) for k, i in inst if supports[i] & out_a.sites}
    seeds_a = {(k, i) for k, i in inst if supports[i] & out_b.sites}
    cone_b = _closure(inst, seeds_b, True, supports)
    cone_a = _closure(inst, seeds_a, False, supports)
    clash = cone_a & cone_b
    if clash:
        raise SplitError(f"light cones of Λ\\A and Λ\\B collide at {len(clash)} term instances; q={q} too large for this overlap")
    n_inst = Lop.g * q
    half = n_inst // 2
    in_b = {x for x in inst if x in cone_b or (x[0] >= half and x not in cone_a)}
    ma = tuple(x for x in inst if x not in in_b)
    mb = tuple(x for x in inst if x in in_b)
    # every M_B factor must commute past the later M_A factors
    for kb, ib in mb:
        for ka, ia in ma:
            if ka > kb and supports[ia] & supports[ib]:
                raise SplitError("internal error: split violates the product order")
    sup_a = Region(frozenset().union(*(supports[i] for _, i in ma)) if ma else frozenset(), region.dim)
    sup_b = Region(frozenset().union(*(supports[i] for _, i in mb)) if mb else frozenset(), region.dim)
    if not (sup_a <= A and sup_b <= B):
        raise SplitError("split factors leak outside their regions")

    eps = epsilon_from_gap(st.gap, Lop.g)
    rep = VerificationReport("splitting_lemma", info={"q": q, "l": ell, "g": Lop.g, "gap": st.gap, "epsilon": eps})
    dtype = np.result_type(*[t.matrix for t in terms], np.float64)
    eye = np.eye(Lop.dim, dtype=dtype)

    def product(factors):
        m = eye
        for _, i in reversed(factors):
            m = Lop._kernel_proj(i, m)
        return m

    m_a, m_b = product(ma), product(mb)
    lq = eye
    for _ in range(q):
        lq = Lop.apply(lq)
    err = operator_norm(m_a @ m_b - lq)
    rep.add("M_A M_B = L^q", 1e-12 - err, 0.0, error=err)
    p_a = _embedded_projector(H, A, region)
    p_b = _embedded_projector(H, B, region)
    rep.add("||P_A - M_A|| <= eps", eps - operator_norm(p_a - m_a), TOL)
    rep.add("||(P_A - M_A) M_B|| <= eps^q", eps**q - operator_norm((p_a - m_a) @ m_b), TOL)
    rep.add("||P_B - M_B|| <= eps", eps - operator_norm(p_b - m_b), TOL)
    rep.add("||(P_B - M_B) M_A|| <= eps^q", eps**q - operator_norm((p_b - m_b) @ m_a), TOL)
    rep.info["||P_A (P_B - M_B)||"] = operator_norm(p_a @ (p_b - m_b))
    trace = {"instances": n_inst, "first_half": half, "cone_A": len(cone_a), "cone_B": len(cone_b)}
    return SplitPair(q, ma, mb, sup_a, sup_b, eps, rep, trace)


def _embedded_projector(H: LocalHamiltonian, sub: Region, region: Region) -> np.ndarray:
    P = ground_projector(assemble(H, sub)).matrix()
    idx = region.index
    return embed(P, [idx[s] for s in sub.sorted_sites], len(region), H.local_dim)


@dataclass(frozen=True)
class GammaResult:
    gamma: float
    bound: float | None  # (1 - γ)/4 when γ < 1
    gap: float

    @property
    def certified(self) -> bool:
        return self.bound is not None

    @property
    def consistent(self) -> bool:
        return self.bound is None or self.gap >= self.bound - TOL


def m2_gap_bound(gamma: float) -> float | None:
    """(1 - γ)/4, or None when γ >= 1 (no certificate)."""
    return (1.0 - gamma) / 4 if gamma < 1 else None


def gamma_contraction(H: LocalHamiltonian, region: Region, L: DLOperator | None = None) -> GammaResult:
    """γ = sup E(Lφ)/E(φ) over states with E(φ) > 0.

    Computed as the top eigenvalue of H^{+1/2} L^† H L H^{+1/2} restricted to
    supp(H), where H^{+1/2} is the pseudo-inverse square root.
    """
    st = _setup(H, region, L)
    if st.op.matrix is None:
        raise BudgetExceededError("γ pencil is dense-only")
    w, u = np.linalg.eigh(st.op.matrix)
    tol = st.P.tol_used
    keep = w >= tol
    if not keep.any():
        return GammaResult(0.0, m2_gap_bound(0.0), st.gap)
    s = u[:, keep] / np.sqrt(w[keep])
    ls = st.L.apply(s.astype(np.result_type(s, st.op.matrix)))
    pencil = ls.conj().T @ (st.op.matrix @ ls)
    gamma = float(np.linalg.eigvalsh((pencil + pencil.conj().T) / 2)[-1])
    gamma = max(gamma, 0.0)
    return GammaResult(gamma, m2_gap_bound(gamma), st.gap)
