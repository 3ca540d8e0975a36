"""Finite-range projector Hamiltonians: terms, restriction, builtins, model files.

Model file format (version 1), a JSON object::

    {"format": "gapcert-model", "version": 1,
     "dim": 1, "local_dim": 2, "range": 2,
     "builtin": {"name": "heisenberg_fm", "params": {}}}

or, instead of ``builtin``, an explicit ``terms`` list::

    "terms": [{"support": [[0], [1]],
               "matrix": [[[re, im], ...], ...],   # row-major, d^|X| x d^|X|
               "translate": true}]

A term with ``translate: true`` is a template copied to every translate of its
support.  Matrices are validated on load; Hermitian matrices that are not
projectors are shifted so their lowest eigenvalue is 0 and replaced by the
projector off their kernel (the original is kept in ``InteractionTerm.original``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatchError, ModelError
from .lattice import Region, Site, diameter
from .linalg import operator_norm

FORMAT_NAME = "gapcert-model"
FORMAT_VERSION = 1
PROJECTOR_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class InteractionTerm:
    support: tuple[Site, ...]  # sorted lexicographically; tensor-leg order of ``matrix``
    matrix: np.ndarray
    original: np.ndarray | None = None

    def sort_key(self):
        return (self.support[0], len(self.support), self.support)

    @property
    def rank(self) -> int:
        return int(round(np.trace(self.matrix).real))

    def support_region(self, dim: int) -> Region:
        return Region(frozenset(self.support), dim)

    def translated(self, shift: Sequence[int]) -> "InteractionTerm":
        sup = tuple(tuple(a + b for a, b in zip(s, shift)) for s in self.support)
        return InteractionTerm(sup, self.matrix, self.original)


def _hermitian(m: np.ndarray) -> bool:
    return operator_norm(m - m.conj().T) <= PROJECTOR_TOL * max(1.0, operator_norm(m))


def to_projector(matrix: np.ndarray, kernel_tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray | None]:
    """Return ``(projector, original)``; ``original`` is None when ``matrix`` already is one."""
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ModelError(f"interaction matrix must be square, got shape {m.shape}")
    if not _hermitian(m):
        raise ModelError("interaction matrix is not Hermitian")
    m = (m + m.conj().T) / 2
    if operator_norm(m @ m - m) <= PROJECTOR_TOL:
        return m, None
    w, v = np.linalg.eigh(m)
    w = w - w[0]
    excited = v[:, w > kernel_tol]
    if excited.shape[1] == 0:
        raise ModelError("interaction has no local gap (it is a multiple of the identity)")
    p = excited @ excited.conj().T
    if np.isrealobj(matrix):
        p = p.real
    return p, np.asarray(matrix)


class LocalHamiltonian:
    """A finite-range Hamiltonian H_Λ = Σ_{X ⊆ Λ} h(X) with projector terms.

    Terms come from translation-invariant templates (supports given relative
    to an anchor site, copied to every translate) and/or fixed terms.
    Instances are immutable after construction.
    """

    def __init__(
        self,
        dim: int,
        local_dim: int,
        range: float,
        templates: Iterable[InteractionTerm] = (),
        fixed_terms: Iterable[InteractionTerm] = (),
        name: str = "custom",
        params: dict | None = None,
    ):
        self.dim = int(dim)
        self.local_dim = int(local_dim)
        self.range = float(range)
        self.name = name
        self.params = dict(params or {})
        self._templates = tuple(self._validate(t) for t in templates)
        self._fixed = tuple(self._validate(t) for t in fixed_terms)

    def _validate(self, term: InteractionTerm) -> InteractionTerm:
        if any(len(s) != self.dim for s in term.support):
            raise DimensionMismatchError(f"term support {term.support} is not {self.dim}-dimensional")
        if len(set(term.support)) != len(term.support):
            raise ModelError(f"repeated site in support {term.support}")
        order = sorted(range(len(term.support)), key=lambda i: term.support[i])
        size = self.local_dim ** len(term.support)
        if term.matrix.shape != (size, size):
            raise ModelError(f"term on {len(term.support)} sites needs a {size}x{size} matrix, got {term.matrix.shape}")
        matrix, original = term.matrix, term.original
        if order != list(range(len(order))):
            matrix = _permute_legs(matrix, order, self.local_dim)
            if original is not None:
                original = _permute_legs(original, order, self.local_dim)
        if not (_hermitian(matrix) and operator_norm(matrix @ matrix - matrix) <= PROJECTOR_TOL):
            raise ModelError("interaction term is not an orthogonal projector")
        sup = tuple(term.support[i] for i in order)
        if diameter(Region(frozenset(sup), self.dim)) > self.range:
            raise ModelError(f"support {sup} exceeds the declared range {self.range}")
        return InteractionTerm(sup, matrix, original)

    @property
    def templates(self) -> tuple[InteractionTerm, ...]:
        return self._templates

    @property
    def fixed_terms(self) -> tuple[InteractionTerm, ...]:
        return self._fixed

    def restrict(self, region: Region) -> list[InteractionTerm]:
        """All terms whose support lies in ``region``, lexicographically ordered by support."""
        if region.dim != self.dim:
            raise DimensionMismatchError(f"model is {self.dim}D, region is {region.dim}D")
        sites = region.sites
        found = {}
        for tmpl in self._templates:
            anchor = tmpl.support[0]
            for x in region.sorted_sites:
                shift = tuple(a - b for a, b in zip(x, anchor))
                t = tmpl.translated(shift)
                if all(s in sites for s in t.support):
                    found.setdefault(t.support, []).append(t)
        for t in self._fixed:
            if all(s in sites for s in t.support):
                found.setdefault(t.support, []).append(t)
        terms = [t for group in found.values() for t in group]
        terms.sort(key=InteractionTerm.sort_key)
        return terms

    def __repr__(self) -> str:
        return f"LocalHamiltonian({self.name!r}, dim={self.dim}, d={self.local_dim}, r={self.range})"


def restrict(H: LocalHamiltonian, region: Region) -> list[InteractionTerm]:
    return H.restrict(region)


def _permute_legs(m: np.ndarray, order: Sequence[int], d: int) -> np.ndarray:
    k = len(order)
    t = m.reshape((d,) * (2 * k))
    t = t.transpose(list(order) + [k + i for i in order])
    return t.reshape(m.shape)


def spin_operators(spin: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(Sx, Sy, Sz) for the given spin, basis ordered m = S, S-1, ..., -S."""
    n = int(round(2 * spin + 1))
    m = spin - np.arange(n)
    sp = np.zeros((n, n))
    for i in range(1, n):
        sp[i - 1, i] = np.sqrt(spin * (spin + 1) - m[i] * (m[i] + 1))
    sx = (sp + sp.T) / 2
    sy = (sp - sp.T) / 2j
    return sx, sy, np.diag(m)


def _dot(spin: float) -> np.ndarray:
    sx, sy, sz = spin_operators(spin)
    out = np.kron(sx, sx) + np.kron(sy, sy) + np.kron(sz, sz)
    return out.real


def singlet_projector() -> np.ndarray:
    return np.eye(4) / 4 - _dot(0.5)


def triplet_projector() -> np.ndarray:
    return np.eye(4) - singlet_projector()


def spin2_projector() -> np.ndarray:
    """Projector onto total spin 2 in spin-1 ⊗ spin-1."""
    s = _dot(1.0)
    return np.eye(9) / 3 + s / 2 + s @ s / 6


def _bond_templates(matrix: np.ndarray, dim: int) -> list[InteractionTerm]:
    origin = (0,) * dim
    out = []
    for axis in range(dim):
        e = tuple(1 if i == axis else 0 for i in range(dim))
        out.append(InteractionTerm((origin, e), matrix))
    return out


BUILTINS = ("product", "heisenberg_fm", "aklt")


def builtin_model(name: str, params: dict | None = None, **kwargs) -> LocalHamiltonian:
    """Builtin frustration-free models on the hypercubic lattice Z^dim.

    product        |1><1| on every qubit (d=2, range 1)
    heisenberg_fm  singlet projector on each nearest-neighbour qubit bond (d=2, range 2)
    aklt           spin-2 projector on each nearest-neighbour spin-1 bond (d=3, range 2)

    The only parameter is ``dim`` (lattice dimension, default 1).
    """
    params = {**(params or {}), **kwargs}
    unknown = set(params) - {"dim"}
    if unknown:
        raise ModelError(f"unknown parameters for {name!r}: {sorted(unknown)}")
    dim = params.get("dim", 1)
    if not isinstance(dim, int) or dim < 1:
        raise ModelError(f"dim must be a positive integer, got {dim!r}")
    if name == "product":
        one = np.diag([0.0, 1.0])
        return LocalHamiltonian(dim, 2, 1, [InteractionTerm(((0,) * dim,), one)], name=name, params={"dim": dim})
    if name == "heisenberg_fm":
        return LocalHamiltonian(dim, 2, 2, _bond_templates(singlet_projector(), dim), name=name, params={"dim": dim})
    if name == "aklt":
        return LocalHamiltonian(dim, 3, 2, _bond_templates(spin2_projector(), dim), name=name, params={"dim": dim})
    raise ModelError(f"unknown builtin model {name!r}; choose from {BUILTINS}")


def _matrix_from_json(rows) -> np.ndarray:
    a = np.asarray(rows, dtype=float)
    if a.ndim != 3 or a.shape[2] != 2:
        raise ModelError("matrix must be a row-major list of rows of [re, im] pairs")
    m = a[..., 0] + 1j * a[..., 1]
    return m.real.copy() if not np.any(a[..., 1]) else m


def _matrix_to_json(m: np.ndarray):
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def model_from_dict(doc: dict) -> LocalHamiltonian:
    if doc.get("format", FORMAT_NAME) != FORMAT_NAME:
        raise ModelError(f"not a {FORMAT_NAME} document")
    if int(doc.get("version", FORMAT_VERSION)) != FORMAT_VERSION:
        raise ModelError(f"unsupported model file version {doc.get('version')}")
    if "builtin" in doc:
        b = doc["builtin"]
        H = builtin_model(b["name"], b.get("params", {}))
        for key, attr in (("dim", "dim"), ("local_dim", "local_dim")):
            if key in doc and int(doc[key]) != getattr(H, attr):
                raise ModelError(f"{key}={doc[key]} contradicts builtin {b['name']!r}")
        return H
    try:
        dim, d, r = int(doc["dim"]), int(doc["local_dim"]), float(doc["range"])
        entries = doc["terms"]
    except KeyError as exc:
        raise ModelError(f"model document missing field {exc}") from None
    templates, fixed = [], []
    for entry in entries:
        support = tuple(tuple(int(c) for c in s) for s in entry["support"])
        proj, original = to_projector(_matrix_from_json(entry["matrix"]))
        term = InteractionTerm(support, proj, original)
        (templates if entry.get("translate", False) else fixed).append(term)
    return LocalHamiltonian(dim, d, r, templates, fixed, name=doc.get("name", "custom"))


def load_model(path: str | Path) -> LocalHamiltonian:
    with open(path) as fh:
        return model_from_dict(json.load(fh))


def model_to_dict(H: LocalHamiltonian) -> dict:
    doc = {"format": FORMAT_NAME, "version": FORMAT_VERSION, "dim": H.dim, "local_dim": H.local_dim, "range": H.range}
    if H.name in BUILTINS:
        doc["builtin"] = {"name": H.name, "params": H.params}
        return doc
    doc["name"] = H.name
    doc["terms"] = [
        {"support": [list(s) for s in t.support], "matrix": _matrix_to_json(t.original if t.original is not None else t.matrix), "translate": translate}
        for translate, group in ((True, H.templates), (False, H.fixed_terms))
        for t in group
    ]
    return doc
