"""Generic subgradient engine for Lagrangian relaxation and dual decomposition.

Multipliers and subgradients are plain mappings from a constraint id (any
hashable, totally ordered key) to a float.  A missing key reads as 0.0, so
the initial multiplier vector is the empty dict.

A backend is any object exposing::

    oracle(u)           -> OracleResult(structure, dual, subgradient)
    primalize(structure) -> (solution, value) or None
    describe()          -> dict

where ``dual`` is L(u) evaluated at the oracle's own argmax and
``subgradient`` holds the constraint residuals of that argmax.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Hashable, Mapping, NamedTuple, Optional, Protocol

from .exceptions import ConfigurationError, OracleError, PreconditionError

DualVariables = dict  # ConstraintId -> float, absent keys are 0.0
SubgradientVector = dict  # ConstraintId -> residual

SCHEDULE_KINDS = ("constant", "inverse-k", "inverse-sqrt-k", "adaptive")

DEFAULT_STALL_WINDOW = 20
DEFAULT_STALL_EPS = 1e-6


class OracleResult(NamedTuple):
    structure: Any
    dual: float
    subgradient: SubgradientVector


class RelaxationBackend(Protocol):
    def oracle(self, u: Mapping[Hashable, float]) -> OracleResult: ...

    def primalize(self, structure: Any) -> Optional[tuple[Any, float]]: ...

    def describe(self) -> dict: ...


class Status(enum.Enum):
    E_CONVERGED = "e-converged"
    MAX_ITERATIONS = "max-iterations"
    STALLED = "stalled"


@dataclass(frozen=True)
class StepSizeSchedule:
    """Step-size rule.  ``adaptive`` divides ``c`` by one plus the number of
    iterations so far at which the dual went up."""

    kind: str = "adaptive"
    c: float = 1.0

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ConfigurationError(
                f"unknown schedule kind {self.kind!r}; expected one of {SCHEDULE_KINDS}"
            )
        if not (isinstance(self.c, (int, float)) and math.isfinite(self.c) and self.c > 0):
            raise ConfigurationError(f"step constant c must be positive and finite, got {self.c!r}")


def step_size(schedule: StepSizeSchedule, k: int, dual_increase_count: int = 0) -> float:
    if k < 1:
        raise PreconditionError(f"iteration index must be >= 1, got {k}")
    if dual_increase_count < 0 or dual_increase_count > k - 1:
        raise PreconditionError(
            f"dual increase count {dual_increase_count} out of range for k={k}"
        )
    c = float(schedule.c)
    if schedule.kind == "constant":
        delta = c
    elif schedule.kind == "inverse-k":
        delta = c / k
    elif schedule.kind == "inverse-sqrt-k":
        delta = c / math.sqrt(k)
    else:
        delta = c / (dual_increase_count + 1)
    if not delta > 0:
        raise ConfigurationError(f"non-positive step size {delta!r}")
    return delta


def dot(a: Mapping, b: Mapping) -> float:
    """Inner product of two sparse vectors (missing keys are zero)."""
    if len(b) < len(a):
        a, b = b, a
    return math.fsum(v * b.get(key, 0.0) for key, v in sorted(a.items()))


def sq_norm(a: Mapping) -> float:
    return math.fsum(v * v for _, v in sorted(a.items()))


def sub(a: Mapping, b: Mapping) -> dict:
    """a - b over the union of keys."""
    out = dict(a)
    for key, v in b.items():
        out[key] = out.get(key, 0.0) - v
    return out


def combine(lam: float, a: Mapping, b: Mapping) -> dict:
    """lam * a + (1 - lam) * b."""
    keys = set(a) | set(b)
    return {key: lam * a.get(key, 0.0) + (1.0 - lam) * b.get(key, 0.0) for key in keys}


def is_zero(g: Mapping) -> bool:
    # residuals are integer-valued differences of indicator counts
    return all(v == 0 for v in g.values())


@dataclass
class IterationRecord:
    k: int
    dual: float
    primal: Optional[float]
    step_size: float
    violation_count: int
    subgrad_norm_sq: float
    best_dual: float
    best_primal: Optional[float]
    multipliers: dict = field(repr=False)  # u^(k-1), the point the oracle was queried at
    structure: Any = field(default=None, repr=False)

    @property
    def gap(self) -> Optional[float]:
        if self.best_primal is None:
            return None
        return self.best_dual - self.best_primal


@dataclass
class RunTrace:
    records: list = field(default_factory=list)
    status: Status = Status.MAX_ITERATIONS
    certificate: Any = None
    certificate_value: Optional[float] = None
    converged_iteration: Optional[int] = None
    best_primal_solution: Any = None
    final_multipliers: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def best_dual(self) -> float:
        return min(r.dual for r in self.records) if self.records else math.inf

    @property
    def best_primal(self) -> Optional[float]:
        primals = [r.primal for r in self.records if r.primal is not None]
        return max(primals) if primals else None

    @property
    def certified(self) -> bool:
        return self.status is Status.E_CONVERGED

    def duals(self) -> list:
        return [r.dual for r in self.records]

    def step_sizes(self) -> list:
        return [r.step_size for r in self.records]

    def max_subgradient_norm(self) -> float:
        return math.sqrt(max((r.subgrad_norm_sq for r in self.records), default=0.0))


def run_subgradient(
    backend: RelaxationBackend,
    schedule: StepSizeSchedule,
    max_iters: int = 500,
    stall_window: int = DEFAULT_STALL_WINDOW,
    stall_eps: float = DEFAULT_STALL_EPS,
) -> RunTrace:
    """Minimize the dual of ``backend`` by subgradient descent from u = 0.

    Stops at the first iteration whose subgradient is exactly zero (the
    oracle's structure then satisfies every relaxed constraint and is optimal),
    after ``max_iters`` iterations, or once the best dual value has improved by
    less than ``stall_eps`` over the last ``stall_window`` iterations.
    """
    if max_iters < 1:
        raise ConfigurationError(f"max_iters must be >= 1, got {max_iters}")
    if stall_window < 1:
        raise ConfigurationError(f"stall_window must be >= 1, got {stall_window}")
    if not isinstance(schedule, StepSizeSchedule):
        raise ConfigurationError("schedule must be a StepSizeSchedule")

    trace = RunTrace(meta=dict(backend.describe()))
    u: dict = {}
    increases = 0
    prev_dual = None
    best_dual = math.inf
    best_primal = None
    best_duals = []

    for k in range(1, max_iters + 1):
        structure, dual, gamma = backend.oracle(u)
        dual = float(dual)
        if not math.isfinite(dual):
            raise OracleError(
                f"backend {type(backend).__name__} returned non-finite dual {dual!r} at iteration {k}"
            )
        if prev_dual is not None and dual > prev_dual:
            increases += 1
        prev_dual = dual

        primal_sol = backend.primalize(structure)
        primal = None
        if primal_sol is not None:
            primal = float(primal_sol[1])
            if best_primal is None or primal > best_primal:
                best_primal = primal
                trace.best_primal_solution = primal_sol[0]
        best_dual = min(best_dual, dual)
        best_duals.append(best_dual)

        delta = step_size(schedule, k, increases)
        trace.records.append(
            IterationRecord(
                k=k,
                dual=dual,
                primal=primal,
                step_size=delta,
                violation_count=sum(1 for v in gamma.values() if v != 0),
                subgrad_norm_sq=sq_norm(gamma),
                best_dual=best_dual,
                best_primal=best_primal,
                multipliers=dict(u),
                structure=structure,
            )
        )

        if is_zero(gamma):
            trace.status = Status.E_CONVERGED
            trace.converged_iteration = k
            if primal_sol is not None:
                trace.certificate, trace.certificate_value = primal_sol[0], float(primal_sol[1])
            else:
                trace.certificate, trace.certificate_value = structure, dual
            break

        u = dict(u)
        for key, g in gamma.items():
            if g != 0:
                u[key] = u.get(key, 0.0) - delta * g

        if k == max_iters:
            trace.status = Status.MAX_ITERATIONS
            break
        if k > stall_window and best_duals[-stall_window - 1] - best_dual < stall_eps:
            trace.status = Status.STALLED
            break

    trace.final_multipliers = u
    return trace


def duality_gap(trace: RunTrace) -> Optional[float]:
    """Best dual minus best primal; None when no primal value was observed."""
    if trace.status is Status.E_CONVERGED:
        return 0.0
    bp = trace.best_primal
    if bp is None:
        return None
    return max(trace.best_dual - bp, 0.0)


def dual_value(backend, u: Mapping) -> float:
    return float(backend.oracle(u).dual)


def verify_convergence_bound(trace: RunTrace, reference: Mapping, G: float, backend,
                             tol: float = 1e-9) -> bool:
    """Check the subgradient-method bound

        min_{i<=k} L(u_i) <= L(ref) + (|u_0 - ref|^2 + G^2 sum d_i^2) / (2 sum d_i)

    at every prefix of ``trace``.  ``G`` must bound every observed subgradient norm.
    """
    observed = trace.max_subgradient_norm()
    if G < observed - 1e-12:
        raise PreconditionError(f"G={G} is below the observed subgradient norm {observed}")
    l_ref = dual_value(backend, reference)
    dist_sq = sq_norm(reference)  # u_0 = 0
    g_sq = G * G
    steps = 0.0
    steps_sq = 0.0
    best = math.inf
    for r in trace.records:
        steps += r.step_size
        steps_sq += r.step_size ** 2
        best = min(best, r.dual)
        bound = l_ref + (dist_sq + g_sq * steps_sq) / (2.0 * steps)
        if best > bound + tol:
            return False
    return True


def check_subgradient_inequality(backend, u: Mapping, v: Mapping, tol: float = 1e-9) -> bool:
    """L(v) >= L(u) + g(u) . (v - u), with g(u) the oracle's residual vector at u."""
    res_u = backend.oracle(u)
    l_v = dual_value(backend, v)
    return l_v >= res_u.dual + dot(res_u.subgradient, sub(v, u)) - tol


def check_convexity(backend, u: Mapping, v: Mapping, lam: float, tol: float = 1e-9) -> bool:
    """L(lam u + (1-lam) v) <= lam L(u) + (1-lam) L(v)."""
    mid = dual_value(backend, combine(lam, u, v))
    return mid <= lam * dual_value(backend, u) + (1.0 - lam) * dual_value(backend, v) + tol
