"""The inductive conjugation scheme: rational approximants alpha_n = p_n/q_n,
Moebius parameters a_n, conjugacies H_n = h_1 ... h_n and the maps
f_n = H_n R_{alpha_{n+1}} H_n^-1.

Two modes.  ``strict`` certifies every schedule inequality in exact
arithmetic (and therefore stops early: the required approximation order
explodes at stage 2).  ``relaxed`` accepts small denominators and records each
schedule inequality as a pass/fail flag.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Optional

import numpy as np

from . import circle_maps as cm
from .circle_maps import CircleMapExpr, Identity, Lift, MoebiusHat, Rotation
from .errors import (
    DepthExhaustedError,
    IndeterminatePrecisionError,
    OverflowGuardError,
    ScheduleInfeasibleError,
    TruncationInsufficientError,
)
from .number_theory import (
    AlphaRepr,
    alpha_from_config,
    find_lower_convergent,
    format_rational,
    is_lower_approximation,
    lower_approximant,
    parse_rational,
)

STRICT, RELAXED = "strict", "relaxed"
DEFAULT_CAP = 256
DEFAULT_SAFETY = 4.0
COMMUTATION_GRID = 2 ** 12


# ---------------------------------------------------------------------------
# lemma constants

@dataclass(frozen=True)
class LemmaConstants:
    """Tables ``r -> C_i(r)``.  Orders beyond the table grow geometrically."""

    C1: dict
    C2: dict
    C3: dict
    provenance: str = "configured"

    def __post_init__(self):
        for name in ("C1", "C2", "C3"):
            table = {int(k): float(v) for k, v in getattr(self, name).items()}
            if not table:
                raise ValueError(f"{name} table is empty")
            object.__setattr__(self, name, table)

    @staticmethod
    def _lookup(table: dict, r: int) -> float:
        if r in table:
            return table[r]
        top = max(table)
        if r < min(table):
            return table[min(table)]
        prev = table.get(top - 1, table[top])
        ratio = max(2.0, table[top] / prev if prev > 0 else 2.0)
        return table[top] * ratio ** (r - top)

    def c1(self, r: int) -> float:
        return self._lookup(self.C1, r)

    def c2(self, r: int) -> float:
        return self._lookup(self.C2, r)

    def c3(self, r: int) -> float:
        return self._lookup(self.C3, r)

    def scaled(self, factor: float) -> "LemmaConstants":
        return LemmaConstants({k: v * factor for k, v in self.C1.items()},
                              {k: v * factor for k, v in self.C2.items()},
                              {k: v * factor for k, v in self.C3.items()}, "configured")

    def to_json(self) -> dict:
        return {
            "provenance": self.provenance,
            "C1": {str(k): v for k, v in sorted(self.C1.items())},
            "C2": {str(k): v for k, v in sorted(self.C2.items())},
            "C3": {str(k): v for k, v in sorted(self.C3.items())},
        }

    @classmethod
    def from_json(cls, d) -> "LemmaConstants":
        return cls(d["C1"], d["C2"], d["C3"], d.get("provenance", "configured"))

    @classmethod
    def builtin(cls) -> "LemmaConstants":
        """Pinned table, generated by ``estimate_constants(4, 2000, seed=0)`` and rounded up."""
        return cls(dict(BUILTIN_C1), dict(BUILTIN_C2), dict(BUILTIN_C3), "configured")


BUILTIN_C1 = {0: 2.0, 1: 4.3, 2: 2.1, 3: 2.1, 4: 2.1}
BUILTIN_C2 = {0: 4.0, 1: 2.4, 2: 2.1, 3: 2.1, 4: 2.1}
BUILTIN_C3 = {0: 2.0, 1: 1.1, 2: 1.1, 3: 1.1, 4: 1.1}


def estimate_constants(r_max: int = 4, samples: int = 1000, seed: int = 0,
                       safety: float = 2.0, grid: Optional[int] = None) -> LemmaConstants:
    """Smallest constants (times ``safety``) making the lemma inequalities hold on samples."""
    from .certify import lemma_ratios

    if samples < 100:
        raise ValueError("samples must be >= 100")
    ratios = lemma_ratios(r_max, samples, seed, grid=grid)
    tables = {}
    for name, key in (("C1", "composition"), ("C2", "conjugated_rotations"), ("C3", "moebius_radius")):
        tables[name] = {r: max(1.0, safety * float(np.max(ratios[key][r])))
                        for r in range(r_max + 1)}
    return LemmaConstants(tables["C1"], tables["C2"], tables["C3"], "empirical")


# ---------------------------------------------------------------------------
# schedule arithmetic

def schedule_N(n: int, r: int) -> int:
    return (2 * n + 3) * (n + r + 1) ** 3


def _dyadic_floor(x: Fraction, bits: int = 64) -> Fraction:
    """Largest dyadic ``<= x`` with about ``bits`` significant bits."""
    if x <= 0:
        raise ValueError("expected a positive rational")
    e = bits - (x.numerator.bit_length() - x.denominator.bit_length())
    if e >= 0:
        return Fraction((x.numerator << e) // x.denominator, 1 << e)
    return Fraction(x.numerator // (x.denominator << -e) << -e)


def delta_and_N(n: int, r: int, H_prev_norm: float, consts: LemmaConstants,
                cap: Optional[int] = DEFAULT_CAP) -> tuple[Fraction, int]:
    """Approximation order N and tolerance delta for stage ``n``.

    ``delta`` is a dyadic lower bound on the exact product of the factors;
    ``H_prev_norm`` is expected to already include the safety factor.
    """
    if n < 2:
        raise ValueError("delta_and_N applies from stage 2 on")
    if r < 1:
        raise ValueError("r must be >= 1")
    if H_prev_norm < 1:
        raise ValueError("H_prev_norm must be >= 1")
    N = schedule_N(n, r)
    if cap is not None and N > cap:
        raise OverflowGuardError(
            f"approximation order N={N} at stage n={n}, r={r} exceeds cap {cap}", N=N)
    k = n + r + 1
    # float -> Fraction is exact, so each factor enters at face value
    prod = (Fraction(2) ** k * Fraction(consts.c2(n + r)) * Fraction(consts.c1(k)) ** k
            * Fraction(consts.c3(k)) ** (k * k) * Fraction(H_prev_norm) ** (k * k))
    return _dyadic_floor(1 / prod), N


# ---------------------------------------------------------------------------
# state

@dataclass
class ScheduleStage:
    n: int
    r: int
    p: int
    q: int
    mode: str
    delta: Optional[Fraction] = None
    N: Optional[int] = None
    L_prev: float = 1.0
    H_prev_norm: Optional[float] = None
    convergent_index: Optional[int] = None
    flags: dict = field(default_factory=dict)

    @property
    def alpha_n(self) -> Fraction:
        return Fraction(self.p, self.q)

    @property
    def rho_target(self) -> Fraction:
        return Fraction(1, self.q ** (self.n + 1))

    @property
    def a_n(self) -> float:
        return cm.MoebiusHat(rho=float(self.rho_target)).a_value

    def h(self) -> CircleMapExpr:
        return stage_map(self.q, self.n)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "r": self.r,
            "p": str(self.p),
            "q": str(self.q),
            "alpha_n": format_rational(self.alpha_n),
            "a_n": self.a_n,
            "rho": format_rational(self.rho_target),
            "mode": self.mode,
            "delta": None if self.delta is None else format_rational(self.delta),
            "N": self.N,
            "L_prev": self.L_prev,
            "H_prev_norm": self.H_prev_norm,
            "convergent_index": self.convergent_index,
            "flags": dict(sorted(self.flags.items())),
            "h": cm.to_json(self.h()),
        }

    @classmethod
    def from_json(cls, d) -> "ScheduleStage":
        st = cls(n=int(d["n"]), r=int(d["r"]), p=int(d["p"]), q=int(d["q"]), mode=d["mode"],
                 delta=None if d.get("delta") is None else parse_rational(d["delta"]),
                 N=d.get("N"), L_prev=float(d["L_prev"]), H_prev_norm=d.get("H_prev_norm"),
                 convergent_index=d.get("convergent_index"), flags=dict(d.get("flags", {})))
        if "h" in d and cm.from_json(d["h"]) != st.h():
            raise ValueError(f"stored h_{st.n} does not match its stage data")
        return st


def stage_map(q: int, n: int) -> CircleMapExpr:
    """``h_n``: the normalized q-fold lift of the Moebius map with radius ``q**-(n+1)``."""
    target = Fraction(1, q ** (n + 1))
    if target > Fraction(1, 6):
        raise ScheduleInfeasibleError(
            f"q_{n}={q} gives radius {target} > 1/6; choose a larger denominator")
    return cm.lift(MoebiusHat(rho=float(target)), q)


@dataclass
class ConstructionState:
    alpha: AlphaRepr
    r: int
    mode: str
    consts: LemmaConstants
    stages: list = field(default_factory=list)
    contraction_log: list = field(default_factory=list)
    grid: int = cm.DEFAULT_GRID
    safety: float = DEFAULT_SAFETY
    cap: Optional[int] = DEFAULT_CAP

    @property
    def depth(self) -> int:
        return len(self.stages)

    @property
    def h(self) -> list:
        return [s.h() for s in self.stages]

    def stage(self, n: int) -> ScheduleStage:
        if not 1 <= n <= len(self.stages):
            raise ScheduleInfeasibleError(f"stage {n} not built (have {len(self.stages)})")
        return self.stages[n - 1]

    def H(self, n: int) -> CircleMapExpr:
        """``H_n = h_1 ... h_n`` (``H_0`` is the identity)."""
        if n > len(self.stages):
            raise ScheduleInfeasibleError(f"stage {n} not built")
        return cm.compose(*[s.h() for s in self.stages[:n]])

    def next_alpha(self, n: int) -> tuple[Fraction, bool]:
        """``alpha_{n+1}``, or the deepest convergent of alpha as a proxy."""
        if n < len(self.stages):
            return self.stages[n].alpha_n, False
        return self.alpha.approx(), True

    def f(self, n: int) -> CircleMapExpr:
        """``f_n = H_n R_{alpha_{n+1}} H_n^-1`` (structural)."""
        angle, _ = self.next_alpha(n)
        return conjugate(self.H(n), angle)

    def f_is_proxy(self, n: int) -> bool:
        return self.next_alpha(n)[1]

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "alpha": self.alpha.to_json(),
            "r": self.r,
            "mode": self.mode,
            "grid": self.grid,
            "safety": self.safety,
            "cap": self.cap,
            "constants": self.consts.to_json(),
            "stages": [s.to_json() for s in self.stages],
            "H": cm.to_json(self.H(self.depth)),
            "contraction_log": self.contraction_log,
        }

    @classmethod
    def from_json(cls, d, verify: bool = True) -> "ConstructionState":
        if d.get("schema_version") != 1:
            raise ValueError("unsupported state schema_version")
        st = cls(alpha=alpha_from_config(d["alpha"]), r=int(d["r"]), mode=d["mode"],
                 consts=LemmaConstants.from_json(d["constants"]),
                 stages=[ScheduleStage.from_json(s) for s in d["stages"]],
                 contraction_log=list(d.get("contraction_log", [])),
                 grid=int(d.get("grid", cm.DEFAULT_GRID)),
                 safety=float(d.get("safety", DEFAULT_SAFETY)), cap=d.get("cap"))
        if verify:
            bad = reverify(st)
            if bad:
                raise ValueError(f"stored flags do not re-verify: {bad}")
        return st


def conjugate(H: CircleMapExpr, angle) -> CircleMapExpr:
    if isinstance(H, Identity):
        return Rotation(angle)
    return cm.conjugate(H, angle)


# ---------------------------------------------------------------------------
# exact flag checks (shared by construction and re-verification)

def _flag_A(alpha: AlphaRepr, stage: ScheduleStage):
    bound = Fraction(1, 2 ** (stage.r + 1))
    try:
        return is_lower_approximation(alpha, stage.alpha_n, 1, bound * stage.q)
    except IndeterminatePrecisionError:
        return None


def _flag_C(alpha: AlphaRepr, stage: ScheduleStage):
    if stage.delta is None or stage.N is None:
        return None
    try:
        return is_lower_approximation(alpha, stage.alpha_n, stage.N, stage.delta)
    except IndeterminatePrecisionError:
        return None


def _flag_D(stage: ScheduleStage, safety: float):
    return stage.q > 2 ** stage.n * Fraction(stage.L_prev) * Fraction(safety)


def _flag_E(stage: ScheduleStage, q_prev: int):
    return stage.q > 2 ** (stage.n + 5) * q_prev


def _flag_B(stage: ScheduleStage):
    """Radius of the built Moebius map recovered from its multiplier."""
    m = MoebiusHat(rho=float(stage.rho_target))
    back = math.atan(math.sqrt(m.lam)) / math.pi
    return abs(back - float(stage.rho_target)) <= 1e-12 * float(stage.rho_target)


def exact_flags(state: ConstructionState, stage: ScheduleStage) -> dict:
    q_prev = state.stages[stage.n - 2].q if stage.n >= 2 else 1
    flags = {"B": _flag_B(stage), "lower": _below(state.alpha, stage.alpha_n)}
    if stage.n == 1:
        flags["A"] = _flag_A(state.alpha, stage)
    else:
        flags["C"] = _flag_C(state.alpha, stage)
        flags["D"] = _flag_D(stage, state.safety)
        flags["E"] = _flag_E(stage, q_prev)
        flags["increasing"] = stage.q > q_prev
    return flags


def _below(alpha, pq):
    try:
        return is_lower_approximation(alpha, pq, 1, Fraction(10) ** 9)
    except IndeterminatePrecisionError:
        return None


def reverify(state: ConstructionState) -> dict:
    """Recompute the exact-arithmetic flags; returns ``{n: {flag: (stored, now)}}`` mismatches."""
    bad = {}
    for st in state.stages:
        now = exact_flags(state, st)
        diff = {k: (st.flags.get(k), v) for k, v in now.items() if st.flags.get(k) != v}
        if diff:
            bad[st.n] = diff
    return bad


# ---------------------------------------------------------------------------
# building stages

def commutation_error(h: CircleMapExpr, angle: Fraction, grid: int = COMMUTATION_GRID) -> float:
    """``sup |h(x + angle) - h(x) - angle|`` on a grid (lift values)."""
    x = np.arange(grid) / grid
    a = float(angle)
    return float(np.max(np.abs(cm.lift_eval(h, x + a) - cm.lift_eval(h, x) - a)))


def _structural_checks(stage: ScheduleStage) -> dict:
    h = stage.h()
    q = stage.q
    err = commutation_error(h, stage.alpha_n)
    disp = max(cm.displacement_sup(h, grid=COMMUTATION_GRID),
               cm.displacement_sup(cm.inverse(h), grid=COMMUTATION_GRID))
    return {
        "commutes": bool(err < 1e-12),
        "displacement": bool(disp <= 0.5 / q + 1e-12),
    }


def _relaxed_q(alpha: AlphaRepr, q_prev: int) -> int:
    for m in range(1, alpha.depth + 1):
        q = alpha.convergent(m).denominator
        if q > q_prev:
            return q
    raise DepthExhaustedError(f"no convergent denominator above {q_prev}", index_reached=alpha.depth)


def _convergent_index(alpha: AlphaRepr, pq: Fraction) -> Optional[int]:
    for m in range(1, alpha.depth + 1):
        c = alpha.convergent(m)
        if c == pq:
            return m
        if c.denominator > pq.denominator:
            break
    return None


def new_state(alpha: AlphaRepr, r: int, mode: str = STRICT,
              consts: Optional[LemmaConstants] = None, grid: int = cm.DEFAULT_GRID,
              safety: float = DEFAULT_SAFETY, cap: Optional[int] = DEFAULT_CAP) -> ConstructionState:
    if mode not in (STRICT, RELAXED):
        raise ValueError(f"unknown mode {mode!r}")
    if r < 1:
        raise ValueError("r must be >= 1")
    return ConstructionState(alpha, r, mode, consts or LemmaConstants.builtin(),
                             grid=grid, safety=safety, cap=cap)


def stage_one(alpha: AlphaRepr, r: int, mode: str = STRICT, q_override: Optional[int] = None,
              consts: Optional[LemmaConstants] = None, **kw) -> ConstructionState:
    """Choose ``alpha_1`` with ``0 < alpha - alpha_1 < 2^-(r+1)`` and build ``h_1``."""
    state = new_state(alpha, r, mode, consts, **kw)
    if mode == STRICT:
        if q_override is not None:
            raise ValueError("q overrides are a relaxed-mode feature")
        top = alpha.depth - 1 if alpha.side == "lower" else alpha.depth
        for m in range(1, top + 1):
            pq = alpha.convergent(m)
            st = ScheduleStage(1, r, pq.numerator, pq.denominator, mode)
            if _flag_A(alpha, st):
                break
        else:
            raise DepthExhaustedError(f"no convergent satisfies (A) for r={r}", index_reached=top)
        st.convergent_index = _convergent_index(alpha, pq)
    else:
        q = q_override if q_override is not None else _relaxed_q(alpha, 1)
        p, q = lower_approximant(alpha, q)
        st = ScheduleStage(1, r, p, q, mode)
        st.convergent_index = _convergent_index(alpha, st.alpha_n)
    try:
        st.h()
    except ScheduleInfeasibleError as exc:
        raise ScheduleInfeasibleError(
            f"{exc}; stage 1 needs q_1 >= 3 (pick a deeper first convergent)") from None
    st.flags.update(exact_flags(state, st))
    st.flags.update(_structural_checks(st))
    if mode == STRICT and not st.flags["A"]:
        raise ScheduleInfeasibleError("condition (A) could not be certified")
    state.stages.append(st)
    _update_contraction_log(state)
    return state


def next_stage(state: ConstructionState, q_override: Optional[int] = None) -> ConstructionState:
    """Append stage ``n = depth + 1`` (mutates and returns ``state``)."""
    n = state.depth + 1
    r = state.r
    prev = state.stage(n - 1)
    H_prev = state.H(n - 1)
    L_prev = cm.derivative_sup(H_prev, grid=state.grid)
    if not math.isfinite(L_prev):
        raise ScheduleInfeasibleError(f"L_{n - 1} overflowed double precision")
    if state.mode == STRICT:
        if q_override is not None:
            raise ValueError("q overrides are a relaxed-mode feature")
        # raise on the cap before paying for the norm estimate
        if state.cap is not None and schedule_N(n, r) > state.cap:
            raise OverflowGuardError(
                f"approximation order N={schedule_N(n, r)} at stage n={n}, r={r} exceeds cap "
                f"{state.cap}", N=schedule_N(n, r))
        H_norm = cm.cr_norm(H_prev, n + r + 1, grid=state.grid) * state.safety
        delta, N = delta_and_N(n, r, H_norm, state.consts, state.cap)
        q_min = max(2 ** (n + 5) * prev.q,
                    math.floor(2 ** n * Fraction(L_prev) * Fraction(state.safety)))
        pq = find_lower_convergent(state.alpha, N, delta, q_min=q_min)
        st = ScheduleStage(n, r, pq.numerator, pq.denominator, STRICT, delta=delta, N=N,
                           L_prev=L_prev, H_prev_norm=H_norm,
                           convergent_index=_convergent_index(state.alpha, pq))
    else:
        q = q_override if q_override is not None else _relaxed_q(state.alpha, prev.q)
        if q <= prev.q:
            raise ScheduleInfeasibleError(f"q_{n}={q} must exceed q_{n - 1}={prev.q}")
        p, q = lower_approximant(state.alpha, q)
        st = ScheduleStage(n, r, p, q, RELAXED, L_prev=L_prev)
        try:
            H_norm = cm.cr_norm(H_prev, n + r + 1, grid=state.grid) * state.safety
            if math.isfinite(H_norm):
                st.delta, st.N = delta_and_N(n, r, H_norm, state.consts, cap=None)
                st.H_prev_norm = H_norm
        except (OverflowError, ValueError, ZeroDivisionError):
            pass
        st.convergent_index = _convergent_index(state.alpha, st.alpha_n)
    st.h()  # radius check
    st.flags.update(exact_flags(state, st))
    st.flags.update(_structural_checks(st))
    if st.mode == STRICT:
        failed = [k for k in ("C", "D", "E", "B", "lower") if not st.flags.get(k)]
        if failed:
            raise ScheduleInfeasibleError(f"stage {n}: conditions {failed} not certified")
    state.stages.append(st)
    _update_contraction_log(state)
    return state


def build(alpha: AlphaRepr, r: int, stages: int, mode: str = STRICT,
          q_overrides: Optional[list] = None, **kw) -> ConstructionState:
    q_overrides = list(q_overrides or [])
    q_of = lambda i: q_overrides[i] if i < len(q_overrides) else None  # noqa: E731
    state = stage_one(alpha, r, mode, q_of(0), **kw)
    for i in range(1, stages):
        next_stage(state, q_of(i))
    return state


# ---------------------------------------------------------------------------
# contraction monitor

def contraction_entry(state: ConstructionState, n: int, grid: Optional[int] = None) -> dict:
    """Measured ``d_{n+r}(f_{n-1}, f_n)`` against ``2^-(n+r+1)``."""
    grid = grid or state.grid
    r = state.r
    f_prev = state.f(n - 1)
    f_n = state.f(n)
    with np.errstate(over="ignore", invalid="ignore"):
        prof = cm.dr_profile(f_prev, f_n, n + r, grid=grid)
    measured = float(np.max(prof))
    measured_r = float(np.max(prof[:, :r + 1]))
    bound = 2.0 ** -(n + r + 1)
    return {
        "n": n,
        "order": n + r,
        "measured": measured,
        "bound": bound,
        "pass": bool(measured < bound),
        "d_r": measured_r,
        "proxy": state.f_is_proxy(n),
    }


def _update_contraction_log(state: ConstructionState):
    log = [e for e in state.contraction_log if not e.get("proxy")]
    done = {e["n"] for e in log}
    for n in range(1, state.depth + 1):
        if n not in done:
            log.append(contraction_entry(state, n))
    state.contraction_log = sorted(log, key=lambda e: e["n"])


def contraction_check(state: ConstructionState, n: int, grid: Optional[int] = None) -> dict:
    """Lemma-style contraction report for stage ``n`` plus the running sum."""
    state.stage(n)
    entry = contraction_entry(state, n, grid)
    running = sum(contraction_entry(state, m, grid)["d_r"] for m in range(1, n + 1))
    entry.update({
        "running_sum_d_r": running,
        "running_bound": 2.0 ** -(state.r + 1),
        "running_pass": bool(running <= 2.0 ** -(state.r + 1)),
    })
    return entry


# ---------------------------------------------------------------------------
# truncated limit conjugacy

class Truncation(NamedTuple):
    expr: CircleMapExpr
    tail_bound: Fraction
    unbounded: bool
    budget: Fraction

    @property
    def within_budget(self) -> bool:
        return not self.unbounded and self.tail_bound <= self.budget


def truncate_limit(state: ConstructionState, from_stage: int, extra: int) -> Truncation:
    """``h_n h_{n+1} ... h_{n+K}`` with a C^0 bound on the omitted tail.

    The tail sums ``q_i^-1 / 2`` over built stages past ``n + K``; stages not
    built are bounded geometrically when the schedule certifies the growth
    ``q_{i} > 2^(i+5) q_{i-1}`` (strict mode), otherwise ``unbounded`` is set.
    """
    n = from_stage
    last = n + extra
    if extra < 0 or n < 1 or last > state.depth:
        raise ScheduleInfeasibleError(f"stages {n}..{last} not all built (have {state.depth})")
    expr = cm.compose(*[state.stage(i).h() for i in range(n, last + 1)])
    tail = sum((Fraction(1, 2 * state.stage(i).q) for i in range(last + 1, state.depth + 1)),
               Fraction(0))
    M = state.depth
    growth = all(state.stage(i).flags.get("E") for i in range(2, M + 1))
    unbounded = True
    if state.mode == STRICT and growth:
        tail += Fraction(1, 2 * state.stage(M).q) / (2 ** (M + 6) - 1)
        unbounded = False
    budget = Fraction(1, 2 ** (n + 5) * state.stage(n).q)
    return Truncation(expr, tail, unbounded, budget)


def require_truncation(state: ConstructionState, from_stage: int, extra: int) -> Truncation:
    """Like :func:`truncate_limit`, raising in strict mode when over budget."""
    t = truncate_limit(state, from_stage, extra)
    if state.mode == STRICT and not t.within_budget:
        raise TruncationInsufficientError(
            f"tail bound {float(t.tail_bound):.3g} exceeds budget {float(t.budget):.3g}")
    return t


__all__ = [
    "LemmaConstants", "ScheduleStage", "ConstructionState", "Truncation",
    "estimate_constants", "delta_and_N", "schedule_N", "stage_map", "stage_one", "next_stage",
    "build", "contraction_check", "contraction_entry", "truncate_limit", "require_truncation",
    "commutation_error", "reverify", "exact_flags", "new_state",
]
