"""Certified gap lower bounds from the divide-and-conquer recursion.

For a schedule (s_k) with Σ 1/s_k < ∞ and per-level overlaps δ_j,

    λ_k >= λ_{k0} · C · Π_{j=k0+1}^{k} (1 - 2 δ_j),      C = Π_{j>=1} (1 + 1/s_j)^{-1}.

Both infinite products are truncated at a finite level and their tails
bounded in closed form; every multiplicative factor is rounded towards zero
("floating-point conservative", not interval arithmetic).  δ_j is obtained
from a DeltaModel evaluated at the level-j overlap width l_j/(8 s_j) - 2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DecompositionError, EmptyRegionError, ScheduleError
from .lattice import Region, side_length

SCHEMA_VERSION = 1
C_TRUNCATION = 10**6
J_CAP = 5000
TAIL_TARGET = 1e-15


def _down(x: float) -> float:
    return math.nextafter(x, -math.inf)


def _up(x: float) -> float:
    return math.nextafter(x, math.inf)


# -- schedules -----------------------------------------------------------


class Schedule:
    """An increasing integer sequence s_k with summability certificates."""

    name = "schedule"

    def __call__(self, k: int) -> int:
        raise NotImplementedError

    def inv_tail(self, J: int, dim: int) -> float:
        """Upper bound on Σ_{j>J} 1/s_j."""
        raise NotImplementedError

    def envelope(self, J: int, dim: int) -> tuple[float, float]:
        """(a, ρ) with l_j/s_j >= a ρ^{j-J} for every j >= J."""
        raise NotImplementedError

    def s_over_l_tail(self, J: int, dim: int) -> float:
        """Upper bound on Σ_{j>J} s_j/l_j."""
        raise NotImplementedError

    def values(self, J: int, dim: int) -> np.ndarray:
        return np.array([self(j) for j in range(1, J + 1)], dtype=float)

    def c_truncation(self, dim: int) -> int:
        """Truncation level used for the constant C."""
        return C_TRUNCATION

    def certificates(self, dim: int, J: int = 64) -> dict:
        vals = self.values(J, dim)
        ls = np.array([side_length(j, dim) for j in range(1, J + 1)])
        return {
            "sum_inv_s_upper": _up(float(np.sum(1 / vals)) * (1 + 1e-13) + self.inv_tail(J, dim)),
            "sum_s_over_l_upper": _up(float(np.sum(vals / ls)) * (1 + 1e-13) + self.s_over_l_tail(J, dim)),
            "certificate_truncation": J,
        }

    def to_dict(self) -> dict:
        return {"name": self.name}


@dataclass(frozen=True)
class PowerSchedule(Schedule):
    """s_k = ⌈k^p⌉ with p > 1 (p = 2 is the ``k2`` schedule)."""

    p: float

    def __post_init__(self):
        if not self.p > 1:
            raise ScheduleError(f"s_k = k^{self.p} is not summable; need p > 1")

    @property
    def name(self) -> str:
        return "k2" if self.p == 2 else f"kpow:p={self.p:g}"

    @property
    def _exact(self) -> bool:
        return float(self.p).is_integer()

    def __call__(self, k: int) -> int:
        return int(k ** int(self.p)) if self._exact else math.ceil(k**self.p)

    def values(self, J: int, dim: int) -> np.ndarray:
        k = np.arange(1, J + 1, dtype=float)
        return k**self.p if self._exact else np.ceil(k**self.p)

    def inv_tail(self, J: int, dim: int) -> float:
        # Σ_{j>J} j^{-p} <= ∫_J^∞ x^{-p} dx
        return _up(J ** (1 - self.p) / (self.p - 1))

    def envelope(self, J: int, dim: int) -> tuple[float, float]:
        beta = 1.5 ** (1 / dim)
        a = side_length(J, dim) / J**self.p
        if not self._exact:
            a /= 2  # ⌈j^p⌉ <= 2 j^p
        return _down(a), _down(beta * (J / (J + 1)) ** self.p)

    def s_over_l_tail(self, J: int, dim: int) -> float:
        beta = 1.5 ** (1 / dim)
        r = ((J + 2) / (J + 1)) ** self.p / beta
        if r >= 1:
            return math.inf
        first = 2 * (J + 1) ** self.p / side_length(J + 1, dim)
        return _up(first / (1 - r))

    def to_dict(self) -> dict:
        return {"name": self.name, "p": self.p}


@dataclass(frozen=True)
class CubeRootSchedule(Schedule):
    """s_k = ⌈l_k^{1/3}⌉."""

    _dim: int = 1
    name = "cuberoot"

    def __call__(self, k: int) -> int:
        return max(1, math.ceil(side_length(k, self._dim) ** (1 / 3) - 1e-12))

    def for_dim(self, dim: int) -> "CubeRootSchedule":
        return CubeRootSchedule(dim)

    def values(self, J: int, dim: int) -> np.ndarray:
        return np.array([self.for_dim(dim)(j) for j in range(1, J + 1)], dtype=float)

    def inv_tail(self, J: int, dim: int) -> float:
        beta = 1.5 ** (1 / dim)
        return _up(beta ** (-(J + 1) / 3) / (1 - beta ** (-1 / 3)))

    def c_truncation(self, dim: int) -> int:
        # geometric tail: stop once it is below 1e-16
        J = 1
        while self.inv_tail(J, dim) > 1e-16:
            J *= 2
        return J

    def envelope(self, J: int, dim: int) -> tuple[float, float]:
        beta = 1.5 ** (1 / dim)
        # ⌈l^{1/3}⌉ <= 2 l^{1/3} for l >= 1
        return _down(beta ** (2 * J / 3) / 2), _down(beta ** (2 / 3))

    def s_over_l_tail(self, J: int, dim: int) -> float:
        beta = 1.5 ** (1 / dim)
        return _up(2 * beta ** (-2 * (J + 1) / 3) / (1 - beta ** (-2 / 3)))


def schedule_from_name(spec: str) -> Schedule:
    """``k2``, ``kpow:p=1.5`` (s_k = k^{1+ε}) or ``cuberoot``."""
    if spec == "k2":
        return PowerSchedule(2)
    if spec.startswith("kpow"):
        params = _parse_params(spec.partition(":")[2])
        if "eps" in params:
            return PowerSchedule(1 + params["eps"])
        return PowerSchedule(params.get("p", 2.0))
    if spec == "cuberoot":
        return CubeRootSchedule()
    raise ScheduleError(f"unknown schedule {spec!r}; use k2, kpow:p=<p>, kpow:eps=<eps> or cuberoot")


def _bind(schedule: Schedule, dim: int) -> Schedule:
    return schedule.for_dim(dim) if isinstance(schedule, CubeRootSchedule) else schedule


def schedule_constant(schedule: Schedule, dim: int = 1, J: int | None = None) -> tuple[float, dict]:
    """Lower bound on C = Π_{j>=1} (1 + 1/s_j)^{-1}.

    Partial product up to J via a pairwise log-sum with explicit slack, tail
    via Π_{j>J}(1 + 1/s_j) <= exp(Σ_{j>J} 1/s_j).
    """
    J = schedule.c_truncation(dim) if J is None else J
    s = _bind(schedule, dim).values(J, dim)
    logs = np.log1p(1.0 / s)
    total = float(np.sum(logs))
    slack = 1e-13 * (1 + total)
    tail = schedule.inv_tail(J, dim)
    c = _down(math.exp(-(total + slack + tail)))
    return c, {"C_truncation": J, "C_partial_log": -total, "C_tail_inv_sum": tail}


# -- δ models ------------------------------------------------------------


@dataclass(frozen=True)
class DeltaModel:
    kind: str  # table | exponential | polynomial | pvbs
    c: float = 0.0
    alpha: float = 0.0
    lambdas: tuple[float, ...] = ()
    table: tuple[tuple[int, float], ...] = ()
    tail: "DeltaModel | None" = None

    def __post_init__(self):
        if self.kind == "exponential":
            if not (0 < self.alpha < 1) or self.c < 0:
                raise ValueError("exponential model needs c >= 0 and 0 < alpha < 1")
        elif self.kind == "polynomial":
            if not self.alpha > 0 or self.c < 0:
                raise ValueError("polynomial model needs c >= 0 and alpha > 0")
        elif self.kind == "pvbs":
            if not self.lambdas or any(not lam > 0 for lam in self.lambdas):
                raise ValueError("pvbs model needs positive lambdas")
        elif self.kind == "table":
            if any(not 0 <= v <= 1 + 1e-9 for _, v in self.table):
                raise ValueError("tabulated δ values must lie in [0, 1]")
            if self.tail is not None and self.tail.kind == "table":
                raise ValueError("a table tail must be an analytic model")
        else:
            raise ValueError(f"unknown δ model kind {self.kind!r}")

    @classmethod
    def exponential(cls, c: float, alpha: float) -> "DeltaModel":
        return cls("exponential", c=c, alpha=alpha)

    @classmethod
    def zero(cls) -> "DeltaModel":
        return cls("exponential", c=0.0, alpha=0.5)

    @classmethod
    def polynomial(cls, c: float, alpha: float) -> "DeltaModel":
        return cls("polynomial", c=c, alpha=alpha)

    @classmethod
    def pvbs(cls, lambdas: Sequence[float]) -> "DeltaModel":
        return cls("pvbs", lambdas=tuple(float(x) for x in lambdas))

    @classmethod
    def from_table(cls, values: dict[int, float], tail: "DeltaModel | None" = None) -> "DeltaModel":
        return cls("table", table=tuple(sorted((int(k), float(v)) for k, v in values.items())), tail=tail)

    @classmethod
    def from_gap(cls, gap: float, g: int) -> "DeltaModel":
        """δ(l) = (1 + λ/g²)^{-l/2}: exponential with c = 1."""
        return cls.exponential(1.0, (1 + gap / g**2) ** -0.5)

    @property
    def lambda_star(self) -> float:
        return max(min(lam, 1 / lam) for lam in self.lambdas)

    def _exp_params(self) -> tuple[float, float]:
        if self.kind == "exponential":
            return self.c, self.alpha
        ls = self.lambda_star
        if ls >= 1:
            return math.inf, 1.0
        return 1 / (1 - ls**2), ls

    def at_width(self, w: float) -> float:
        """δ at overlap width w, capped at 1 (δ is a norm of a product of contractions)."""
        if self.kind in ("exponential", "pvbs"):
            c, a = self._exp_params()
            if math.isinf(c):
                return 1.0
            return min(1.0, _up(c * a**w)) if c > 0 else 0.0
        if self.kind == "polynomial":
            if w <= 0:
                return 1.0
            return min(1.0, _up(self.c * w ** (-self.alpha))) if self.c > 0 else 0.0
        raise ValueError("tabulated models have no width law")

    def level(self, j: int, width: float) -> float | None:
        if self.kind == "table":
            d = dict(self.table)
            if j in d:
                return d[j]
            return None if self.tail is None else self.tail.at_width(width)
        return self.at_width(width)

    def tail_bound(self, a: float, rho: float) -> tuple[float, float] | None:
        """(Σ_{j>J} δ_j, sup_{j>J} δ_j) given widths w_{J+m} >= a ρ^m/8 - 2, or None."""
        if self.kind == "table":
            return None if self.tail is None else self.tail.tail_bound(a, rho)
        if rho <= 1:
            return None
        if self.kind in ("exponential", "pvbs"):
            c, alpha = self._exp_params()
            if math.isinf(c):
                return None
            if c == 0:
                return 0.0, 0.0
            w0, dw = a / 8 - 2, a * (rho - 1) / 8
            first = c * alpha ** (w0 + dw)
            return _up(first / (1 - alpha**dw)), _up(first)
        if a < 32:
            return None
        if self.c == 0:
            return 0.0, 0.0
        q = rho ** (-self.alpha)
        first = self.c * (16 / a) ** self.alpha * q
        return _up(first / (1 - q)), _up(first)

    @property
    def analytic(self) -> bool:
        return self.kind != "table" or self.tail is not None

    @property
    def table_max(self) -> int:
        return max((k for k, _ in self.table), default=0)

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind in ("exponential", "polynomial"):
            out.update(c=self.c, alpha=self.alpha)
        elif self.kind == "pvbs":
            out.update(lambdas=list(self.lambdas), lambda_star=self.lambda_star)
        else:
            out["table"] = [[k, v] for k, v in self.table]
            out["tail"] = None if self.tail is None else self.tail.to_dict()
        return out


def _parse_params(text: str) -> dict[str, float]:
    out = {}
    for part in filter(None, text.split(",")):
        key, eq, val = part.partition("=")
        if not eq:
            raise ValueError(f"expected key=value, got {part!r}")
        out[key.strip()] = float(val)
    return out


def delta_model_from_spec(spec: str) -> DeltaModel:
    """``exponential:c=1,alpha=0.5``, ``polynomial:c=1,alpha=2``, ``pvbs:0.5,2`` or ``zero``."""
    kind, _, rest = spec.partition(":")
    if kind == "zero":
        return DeltaModel.zero()
    if kind == "pvbs":
        return DeltaModel.pvbs([float(x) for x in rest.split(",") if x])
    if kind in ("exponential", "polynomial"):
        p = _parse_params(rest)
        try:
            return DeltaModel(kind, c=p["c"], alpha=p["alpha"])
        except KeyError as exc:
            raise ValueError(f"{kind} model needs parameter {exc}") from None
    raise ValueError(f"unknown δ model {spec!r}")


# -- the recursion -------------------------------------------------------


@dataclass
class CertificationResult:
    lower_bound: float
    k0: int
    lambda_k0: float
    C: float
    factors: list[dict]
    tail_bound: float
    valid: bool
    reason: str
    J: int
    schedule: dict
    delta_model: dict
    dim: int
    certificates: dict = field(default_factory=dict)
    level_bounds: list[tuple[int, float]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    offending_level: int | None = None

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "valid": self.valid,
            "reason": self.reason,
            "lower_bound": self.lower_bound,
            "k0": self.k0,
            "lambda_k0": self.lambda_k0,
            "C": self.C,
            "tail_bound": self.tail_bound,
            "truncation_level": self.J,
            "dim": self.dim,
            "offending_level": self.offending_level,
            "schedule": self.schedule,
            "delta_model": self.delta_model,
            "certificates": {k: _json_num(v) for k, v in self.certificates.items()},
            "factors": self.factors,
            "level_bounds": [[k, b] for k, b in self.level_bounds],
            "warnings": self.warnings,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _json_num(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def _width(j: int, s: int, dim: int) -> float:
    return side_length(j, dim) / (8 * s) - 2


def _first_tail_level(schedule: Schedule, model: DeltaModel, dim: int, start: int):
    """Smallest J >= start at which the δ tail can be bounded with sup δ < 1/2."""
    for J in range(max(1, start), J_CAP + 1):
        a, rho = schedule.envelope(J, dim)
        tb = model.tail_bound(a, rho)
        if tb is not None and tb[1] < 0.5:
            return J, tb
    return None, None


def default_k0(schedule: Schedule, model: DeltaModel, dim: int = 1) -> int:
    """Smallest k0 with δ_j < 1/2 for every j > k0 (evaluated on the model)."""
    sched = _bind(schedule, dim)
    start = model.table_max if model.kind == "table" else 1
    J, _ = _first_tail_level(sched, model, dim, start)
    if J is None:
        raise ScheduleError("δ tail never drops below 1/2 within the search range")
    k0 = 0
    for j in range(1, J + 1):
        d = model.level(j, _width(j, sched(j), dim))
        if d is None or d >= 0.5:
            k0 = j
    return k0


def recursion_bound(
    lambda_k0: float,
    k0: int | None,
    s_schedule: Schedule,
    delta: DeltaModel,
    dim: int = 1,
) -> CertificationResult:
    """Certified lower bound on inf_k λ_k from λ_{k0}, the schedule and a δ model."""
    if lambda_k0 < 0 or not math.isfinite(lambda_k0):
        raise ValueError("lambda_k0 must be a finite non-negative number")
    sched = _bind(s_schedule, dim)
    if k0 is None:
        k0 = default_k0(sched, delta, dim)
    if k0 < 0:
        raise ValueError("k0 must be non-negative")
    C, c_info = schedule_constant(sched, dim)
    certs = {**sched.certificates(dim), **c_info}
    warnings: list[str] = []

    start = max(k0 + 1, delta.table_max if delta.kind == "table" else 1)
    J, tb = _first_tail_level(sched, delta, dim, start) if delta.analytic else (None, None)
    finite_only = J is None
    if finite_only:
        J = max(delta.table_max, k0)
    else:
        # push the truncation further while it still shrinks the tail
        while tb[0] > TAIL_TARGET and J < J_CAP:
            a, rho = sched.envelope(J + 1, dim)
            nxt = delta.tail_bound(a, rho)
            if nxt is None:
                break
            J, tb = J + 1, nxt

    factors, level_bounds = [], [(k0, _down(lambda_k0 * C))]
    prod = 1.0
    valid, reason, offending = True, "certified", None
    for j in range(k0 + 1, J + 1):
        s = sched(j)
        w = _width(j, s, dim)
        d = delta.level(j, w)
        if d is None:
            valid, reason, offending = False, f"no δ value for level {j}", j
            break
        if s > side_length(j, dim) / 8:
            warnings.append(f"s_{j}={s} > l_{j}/8")
        f = _down(1 - 2 * d)
        factors.append({"j": j, "s_j": s, "width": w, "delta": d, "factor": f})
        if d >= 0.5:
            valid, reason, offending = False, f"delta_{j} = {d:.6g} >= 1/2", j
            break
        prod = _down(prod * f)
        level_bounds.append((j, _down(_down(lambda_k0 * C) * prod)))

    tail = 1.0
    if valid and finite_only:
        valid, reason = False, "finite table: tail beyond the last level is not certified"
    elif valid:
        total, sup = tb
        tail = _down(math.exp(-2 * total / (1 - 2 * sup))) if total > 0 else 1.0
        certs.update(delta_tail_sum=total, delta_tail_sup=sup)
    if len(warnings) > 8:
        warnings = warnings[:8] + [f"... {len(warnings) - 8} more levels with s_j > l_j/8"]
    lower = _down(_down(_down(lambda_k0 * C) * prod) * tail) if valid else 0.0
    return CertificationResult(
        lower_bound=lower, k0=k0, lambda_k0=lambda_k0, C=C, factors=factors, tail_bound=tail,
        valid=valid, reason=reason, J=J, schedule=sched.to_dict(), delta_model=delta.to_dict(),
        dim=dim, certificates=certs, level_bounds=level_bounds, warnings=warnings, offending_level=offending,
    )


def verify_recursion_step(H, k: int, s: int | None = None, *, max_dim: int = 4096) -> dict:
    """Check λ_Λ >= (1 - 2δ)/(1 + 1/s) · min_i min(λ_{A_i}, λ_{B_i}) on the maximal box of level k.

    δ is the largest δ(A_i, B_i) of the canonical decomposition.  Non-admissible
    s (s > l_k/8) is allowed; the inequality only uses that the overlaps are
    pairwise disjoint.
    """
    from .delta import delta_exact
    from .lattice import maximal_region, s_decompose
    from .spectral import assemble, spectral_gap

    region = maximal_region(k, H.dim)
    if H.local_dim ** len(region) > max_dim:
        raise DecompositionError(f"level {k} exceeds max_dim={max_dim}")
    lk = side_length(k, H.dim)
    s = max(1, math.floor(lk / 8)) if s is None else s
    dec = s_decompose(region, k, s, enforce_s_bound=False)
    gaps, deltas = [], []
    for A, B in dec.pairs:
        gaps += [spectral_gap(assemble(H, A)).gap, spectral_gap(assemble(H, B)).gap]
        deltas.append(delta_exact(H, A, B).value)
    d = max(deltas)
    lam = spectral_gap(assemble(H, region)).gap
    rhs = (1 - 2 * d) / (1 + 1 / s) * min(gaps)
    return {"k": k, "s": s, "gap": lam, "delta": d, "min_sub_gap": min(gaps), "rhs": rhs, "passed": lam >= rhs - 1e-9}


# -- thresholds ----------------------------------------------------------

TABLE1 = {
    "knabe_1d": ("1d", lambda n: 1 / (n - 1)),
    "gosset_mozgunov_1d": ("1d", lambda n: 6 / (n * (n + 1))),
    "knabe_2d_hexagonal": ("2d_hexagonal", lambda n: 1 / (3 * n - 1)),
    "gosset_mozgunov_2d_square": ("2d_square", lambda n: 8 / n**2),
}
LATTICE_KINDS = ("1d", "2d_hexagonal", "2d_square", "all")


def table1_thresholds(n: int, lattice_kind: str = "all") -> dict[str, float]:
    if n < 2:
        raise ValueError("thresholds need n >= 2")
    if lattice_kind not in LATTICE_KINDS:
        raise ValueError(f"lattice kind must be one of {LATTICE_KINDS}")
    return {name: f(n) for name, (kind, f) in TABLE1.items() if lattice_kind in ("all", kind)}


def log_threshold(n: int, C: float = 1.0, eps: float = 1.0) -> float:
    """C log(n)^{2+ε}/n (natural logarithm)."""
    return C * math.log(n) ** (2 + eps) / n


def local_gap_threshold(k: int, s_k: int, dim: int = 1, C: float = 1.0) -> float:
    """C k s_k / l_k: exceeding it for every k >= k0 implies a bulk gap."""
    return C * k * s_k / side_length(k, dim)


@dataclass
class ThresholdRow:
    n: int
    gap: float
    thresholds: dict[str, float]
    cleared: dict[str, bool]

    @property
    def clears_table1(self) -> bool:
        return all(v for k, v in self.cleared.items() if k != "log_threshold")

    @property
    def below_table1(self) -> bool:
        return not any(v for k, v in self.cleared.items() if k != "log_threshold")


def threshold_check(gaps: Sequence[tuple[int, float]], lattice_kind: str = "all", C: float = 1.0, eps: float = 1.0) -> list[ThresholdRow]:
    """Compare each (n, λ_n) with the Table 1 thresholds and with C log(n)^{2+ε}/n."""
    rows = []
    for n, gap in gaps:
        th = table1_thresholds(n, lattice_kind)
        th["log_threshold"] = log_threshold(n, C, eps)
        rows.append(ThresholdRow(n, gap, th, {k: gap > v for k, v in th.items()}))
    return rows


# -- PVBS closed forms ---------------------------------------------------


def _log_axis_sum(lo: int, hi: int, lam: float) -> float:
    """log Σ_{x=lo}^{hi} λ^{2x}."""
    if lam == 1:
        return math.log(hi - lo + 1)
    t = 2 * math.log(lam)
    # factor out the largest term for stability
    top = hi if t > 0 else lo
    r = math.exp(-abs(t))
    m = hi - lo + 1
    return t * top + math.log1p(-(r**m)) - math.log1p(-r)


def pvbs_log_normalization(X: Region, lambdas: Sequence[float]) -> float:
    """log C(X), C(X) = Σ_{x∈X} Π_j λ_j^{2 x_j}; -inf for empty X."""
    if len(lambdas) != X.dim:
        raise ValueError(f"need {X.dim} lambdas, got {len(lambdas)}")
    if not X.sites:
        return -math.inf
    if X.is_box():
        lo, hi = X.bounding_box()
        return sum(_log_axis_sum(int(a), int(b), lam) for a, b, lam in zip(lo, hi, lambdas))
    e = X.coords() @ (2 * np.log(np.asarray(lambdas, dtype=float)))
    m = e.max()
    return float(m + math.log(np.sum(np.exp(e - m))))


def pvbs_delta(A: Region, B: Region, lambdas: Sequence[float]):
    """δ(A,B)² = C(A∖B) C(B∖A) / (C(A) C(B)) for boxes A, B with box intersection."""
    from .delta import DeltaEstimate
    from .lattice import overlap_size

    if any(lam <= 0 for lam in lambdas):
        raise ValueError("PVBS parameters must be positive")
    if not A.sites or not B.sites:
        raise EmptyRegionError("A and B must be non-empty")
    for name, X in (("A", A), ("B", B), ("A∩B", A & B)):
        if X.sites and not X.is_box():
            raise DecompositionError(f"{name} must be a box for the closed form")
    la, lb = pvbs_log_normalization(A - B, lambdas), pvbs_log_normalization(B - A, lambdas)
    if la == -math.inf or lb == -math.inf:
        value = 0.0
    else:
        value = math.exp((la + lb - pvbs_log_normalization(A, lambdas) - pvbs_log_normalization(B, lambdas)) / 2)
    return DeltaEstimate(value, "closed-form-pvbs", (A, B), overlap_size(A, B), info={"lambdas": list(lambdas)})


def pvbs_bound(l: int, l_A: int, l_B: int, lam: float) -> float:
    """Two-case bound on δ along the cut axis.

    ``l_A``, ``l_B`` and ``l`` are the extents (number of sites minus one) of
    A, B and A∩B along that axis.  Returns inf for λ = 1.
    """
    if lam <= 0:
        raise ValueError("λ must be positive")
    if lam == 1:
        return math.inf
    mu = lam if lam < 1 else 1 / lam
    return mu ** (l + 1) / math.sqrt((1 - mu ** (2 * (l_A + 1))) * (1 - mu ** (2 * (l_B + 1))))


def pvbs_certify(lambdas: Sequence[float], s_schedule: Schedule, lambda_k0: float = 1.0, k0: int | None = None) -> CertificationResult:
    """Recursion with δ(l) = λ_*^l/(1 - λ_*²); no certificate when λ_* = 1.

    The lower bound is relative to ``lambda_k0`` (the gap at level k0).
    """
    model = DeltaModel.pvbs(lambdas)
    dim = len(lambdas)
    if model.lambda_star >= 1:
        sched = _bind(s_schedule, dim)
        return CertificationResult(
            lower_bound=0.0, k0=k0 or 0, lambda_k0=lambda_k0, C=schedule_constant(sched, dim)[0], factors=[],
            tail_bound=0.0, valid=False, reason="lambda_* = 1: δ(l) stays bounded away from zero", J=0,
            schedule=sched.to_dict(), delta_model=model.to_dict(), dim=dim,
        )
    return recursion_bound(lambda_k0, k0, s_schedule, model, dim)
