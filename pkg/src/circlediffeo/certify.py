"""Certificates for the open conditions (a)-(e) on q_n-periodic arc families,
the interval geometry behind them, and sampled checks of the C^r lemmas."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

import mpmath
import numpy as np

from . import circle_maps as cm
from .circle_maps import CircleMapExpr, Inverse, Lift, MoebiusHat, Rotation
from .construction import STRICT, ConstructionState, truncate_limit
from .dynamics import _to_fraction, exit_count, return_count
from .errors import (
    BudgetExceededError,
    EnclosureTooWideError,
    MalformedCertificateError,
    TruncationInsufficientError,
)
from .measure import cyclic_order_check
from .number_theory import IntervalBound, format_rational, theta_enclosure

PASS, FAIL, MARGINAL = "pass", "fail", "marginal"
DEFAULT_GUARD = 1e-10
LEMMA_GRID = 1024


def _flag(ok: bool) -> str:
    return PASS if ok else FAIL


def _dps_for(q: int, n: int) -> int:
    return max(40, int((n + 3) * math.log10(max(q, 2))) + 30)


def _num_str(x, dps: int) -> str:
    if isinstance(x, mpmath.mpf):
        return mpmath.nstr(x, dps, strip_zeros=False, min_fixed=-math.inf, max_fixed=math.inf)
    return repr(float(x))


@dataclass
class BnCertificate:
    n: int
    q_n: int
    l_n: int
    m_n: int
    c: list
    d: list
    flags: dict = field(default_factory=dict)
    margins: dict = field(default_factory=dict)
    provenance: str = "constructed"
    p_n: Optional[int] = None
    theta: Optional[IntervalBound] = None
    c2: Optional[list] = None
    d2: Optional[list] = None
    dps: int = 40
    info: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "schema_version": 1,
            "n": self.n,
            "q_n": self.q_n,
            "p_n": None if self.p_n is None else str(self.p_n),
            "l_n": self.l_n,
            "m_n": self.m_n,
            "precision_digits": self.dps,
            "provenance": self.provenance,
            "flags": dict(sorted(self.flags.items())),
            "margins": {k: _num_str(v, 12) if v is not None else None
                        for k, v in sorted(self.margins.items())},
            "theta": None if self.theta is None else {
                "lo": format_rational(self.theta.lo) if self.theta.lo.denominator < 10 ** 60
                else _num_str(mpmath.mpf(self.theta.lo.numerator) / self.theta.lo.denominator, 30),
                "hi": format_rational(self.theta.hi) if self.theta.hi.denominator < 10 ** 60
                else _num_str(mpmath.mpf(self.theta.hi.numerator) / self.theta.hi.denominator, 30),
            },
            "c": [_num_str(v, self.dps) for v in self.c],
            "d": [_num_str(v, self.dps) for v in self.d],
            "info": self.info,
        }
        if self.c2 is not None:
            out["c_preimage"] = [_num_str(v, self.dps) for v in self.c2]
            out["d_preimage"] = [_num_str(v, self.dps) for v in self.d2]
        return out

    @classmethod
    def from_json(cls, d) -> "BnCertificate":
        try:
            dps = int(d.get("precision_digits", 40))
            with mpmath.workdps(dps):
                pts = lambda key: [mpmath.mpf(s) for s in d[key]]  # noqa: E731
                c, dd = pts("c"), pts("d")
                c2 = pts("c_preimage") if "c_preimage" in d else None
                d2 = pts("d_preimage") if "d_preimage" in d else None
            if len(c) != int(d["q_n"]) or len(dd) != len(c):
                raise MalformedCertificateError("point lists do not have q_n entries")
            return cls(n=int(d["n"]), q_n=int(d["q_n"]), l_n=int(d["l_n"]), m_n=int(d["m_n"]),
                       c=c, d=dd, flags=dict(d.get("flags", {})), margins={},
                       provenance=d.get("provenance", "supplied"),
                       p_n=None if d.get("p_n") is None else int(d["p_n"]),
                       c2=c2, d2=d2, dps=dps, info=dict(d.get("info", {})))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, MalformedCertificateError):
                raise
            raise MalformedCertificateError(f"bad certificate: {exc}") from None


def supplied_certificate(n: int, q_n: int, l_n: int, c, d, m_n: int = 0) -> BnCertificate:
    return BnCertificate(n=n, q_n=q_n, l_n=l_n, m_n=m_n, c=list(c), d=list(d),
                         provenance="supplied")


# ---------------------------------------------------------------------------
# order / length conditions

def _abc_flags(n: int, q: int, c: list, d: list) -> tuple[dict, dict]:
    ok, _ = cyclic_order_check(c, d)
    flags = {"a": _flag(ok)}
    lengths = [(d[i] - c[i]) % 1 for i in range(q)]
    gaps = [(c[(i + 1) % q] - d[i]) % 1 for i in range(q)]
    max_len = max(lengths)
    min_gap = min(gaps)
    bound_b = mpmath.mpf(1) / mpmath.mpf(q) ** n
    margins = {"b": bound_b - max_len, "c": min_gap / n - max_len}
    flags["b"] = _flag(max_len < bound_b)
    flags["c"] = _flag(ok and max_len < min_gap / n)
    flags["q_gt_n"] = _flag(q > n)
    return flags, margins


# ---------------------------------------------------------------------------
# building from a construction

def build_certificate(state: ConstructionState, n: int, truncation: Optional[int] = None,
                      guard: float = DEFAULT_GUARD, dps: Optional[int] = None) -> BnCertificate:
    """Certificate for stage ``n`` of a construction, evaluated in multiprecision.

    ``c'_i, d'_i`` are the lifts of the contracting arc of the stage Moebius map;
    ``c''`` are their preimages under the truncated ``h_n ... h_{n+K}``, and
    ``c = H_{n-1} c'``.  Conditions (d) and (e) are decided in the rotation
    coordinates, where the dynamics is the rigid rotation by ``q_n alpha - p_n``.
    """
    st = state.stage(n)
    K = state.depth - n if truncation is None else truncation
    trunc = truncate_limit(state, n, K)
    if state.mode == STRICT and not trunc.within_budget:
        raise TruncationInsufficientError(
            f"tail bound {float(trunc.tail_bound):.3g} exceeds {float(trunc.budget):.3g}")
    q, p = st.q, st.p
    dps = dps or _dps_for(q, n)
    theta = theta_enclosure(state.alpha, (p, q))
    if theta.lo <= 0:
        raise EnclosureTooWideError("q_n alpha - p_n is not certified positive")
    with mpmath.workdps(dps):
        w = mpmath.mpf(1) / mpmath.mpf(q) ** (n + 2)
        centers = cm._MP.asarray(np.array([mpmath.mpf(i) / q for i in range(q)], dtype=object))
        c1 = centers - w
        d1 = centers + w
        Tinv = cm.inverse(trunc.expr)
        c2 = cm.lift_eval(Tinv, c1, backend="mp")
        d2 = cm.lift_eval(Tinv, d1, backend="mp")
        Hp = state.H(n - 1)
        c = cm.lift_eval(Hp, c1, backend="mp")
        d = cm.lift_eval(Hp, d1, backend="mp")
        c2n = np.concatenate([c2[1:], [c2[0] + 1]])
        lengths = [_to_fraction(v) for v in (d2 - c2)]
        gaps = [_to_fraction(v) for v in (c2n - d2)]
        m_i = [return_count(theta, L) for L in lengths]
        l_i = [exit_count(theta, g) for g in gaps]
        l_n, m_n = max(l_i), min(m_i)
        cm_list = [v - mpmath.floor(v) for v in c]
        dm_list = [v - (c[i] - cm_list[i]) for i, v in enumerate(d)]
        flags, margins = _abc_flags(n, q, cm_list, dm_list)

        # (d): c'' + k theta stays in (c'', d'') for k <= 2^n l_n
        reach_hi = 2 ** n * l_n * theta.hi
        reach_lo = 2 ** n * l_n * theta.lo
        min_len = min(lengths)
        margin_d = min_len - reach_hi
        if margin_d > guard:
            flags["d"] = PASS
        elif min_len <= reach_lo:
            flags["d"] = FAIL
        else:
            flags["d"] = MARGINAL
        # (e): d'' + l_n theta has left [d'', c''_{next}]
        max_gap = max(gaps)
        margin_e = l_n * theta.lo - max_gap
        if margin_e > guard and l_n * theta.hi < 1 - max(lengths):
            flags["e"] = PASS
        elif l_n * theta.hi <= max_gap:
            flags["e"] = FAIL
        else:
            flags["e"] = MARGINAL
        margins["d"] = mpmath.mpf(float(margin_d))
        margins["e"] = mpmath.mpf(float(margin_e))
        flags["counts"] = _flag(m_n >= 2 ** n * l_n)
        cert = BnCertificate(
            n=n, q_n=q, l_n=l_n, m_n=m_n, c=cm_list, d=dm_list, flags=flags, margins=margins,
            provenance="constructed", p_n=p, theta=theta, c2=list(c2), d2=list(d2), dps=dps,
            info={
                "truncation": K,
                "tail_bound": float(trunc.tail_bound),
                "tail_budget": float(trunc.budget),
                "tail_unbounded": trunc.unbounded,
                "tail_within_budget": trunc.within_budget,
                "l_range": [min(l_i), max(l_i)],
                "m_range": [min(m_i), max(m_i)],
                "theta_float": float(theta.lo),
                "mode": state.mode,
            })
    return cert


def certified_map(state: ConstructionState, n: int, truncation: Optional[int] = None) -> CircleMapExpr:
    """The map the certificate speaks about: ``H_{n+K} R_alpha H_{n+K}^-1``."""
    K = state.depth - n if truncation is None else truncation
    H = state.H(n + K)
    return cm.conjugate(H, state.alpha.approx())


# ---------------------------------------------------------------------------
# brute-force re-check

_mp_floor = np.frompyfunc(mpmath.floor, 1, 1)


def _mod1_mp(v):
    return v - _mp_floor(v)


def _as_backend(points, backend):
    if backend == "mp":
        return cm._MP.asarray(np.array(points, dtype=object))
    return np.array([float(v) for v in points])


def check_certificate(f: CircleMapExpr, cert: BnCertificate, k_budget: int = 10 ** 7,
                      guard: float = DEFAULT_GUARD, backend: str = "auto") -> BnCertificate:
    """Re-decide (a)-(e) for ``f`` by iterating ``f`` itself (no conjugacy used)."""
    q, n, l = cert.q_n, cert.n, cert.l_n  # noqa: E741
    if l < 1:
        raise MalformedCertificateError("l_n must be >= 1")
    K = 2 ** n * l
    cost = q * q * (K + l)
    if cost > k_budget:
        raise BudgetExceededError(f"brute-force check needs {cost} evaluations > budget {k_budget}")
    with mpmath.workdps(cert.dps):
        c = [mpmath.mpf(v) if not isinstance(v, mpmath.mpf) else v for v in cert.c]
        d = [mpmath.mpf(v) if not isinstance(v, mpmath.mpf) else v for v in cert.d]
        flags, margins = _abc_flags(n, q, c, d)
        lengths = [(d[i] - c[i]) % 1 for i in range(q)]
        gaps = [(c[(i + 1) % q] - d[i]) % 1 for i in range(q)]
        if backend == "auto":
            backend = "float" if float(min(lengths)) > 1e-9 and float(min(gaps)) > 1e-9 else "mp"
        g_eff = min(guard, 1e-3 * float(min(lengths)))
        frac = _mod1_mp if backend == "mp" else (lambda v: np.mod(v, 1.0))
        L = _as_backend(lengths, backend)
        G = _as_backend(gaps, backend)
        x0 = _as_backend(c, backend)
        x = x0
        status_d = PASS
        worst_d = math.inf
        for _ in range(K):
            for _ in range(q):
                x = cm.lift_eval(f, x, backend=backend)
            rel = frac(x - x0)
            inside = np.array([bool(0 < r < ln) for r, ln in zip(rel, L)])
            slack = [min(r, ln - r) if ok else -min(abs(r), abs(r - ln))
                     for r, ln, ok in zip(rel, L, inside)]
            worst_d = min(worst_d, float(min(slack)))
            if not inside.all():
                status_d = FAIL
                break
        if abs(worst_d) <= g_eff:
            status_d = MARGINAL
        y0 = _as_backend(d, backend)
        y = y0
        for _ in range(l):
            for _ in range(q):
                y = cm.lift_eval(f, y, backend=backend)
        rel = frac(y - y0)
        margin_e = float(min(r - g for r, g in zip(rel, G)))
        status_e = _flag(margin_e > 0)
        if abs(margin_e) <= g_eff:
            status_e = MARGINAL
    flags["d"] = status_d
    flags["e"] = status_e
    flags["counts"] = cert.flags.get("counts")
    margins["d"] = mpmath.mpf(worst_d)
    margins["e"] = mpmath.mpf(margin_e)
    return replace(cert, flags={k: v for k, v in flags.items() if v is not None},
                   margins=margins, provenance="checked")


# ---------------------------------------------------------------------------
# geometry

@dataclass
class GeometryReport:
    n: int
    records: list

    @property
    def all_pass(self) -> bool:
        return all(r["pass"] for r in self.records)

    def to_json(self) -> dict:
        return {"schema_version": 1, "n": self.n, "records": self.records,
                "all_pass": self.all_pass}


def _rec(name, lhs, rhs, ok, relation):
    return {"name": name, "relation": relation, "lhs": _num_str(lhs, 17),
            "rhs": _num_str(rhs, 17), "pass": bool(ok)}


def geometry_report(state: ConstructionState, n: int,
                    cert: Optional[BnCertificate] = None) -> GeometryReport:
    """Measured versions of the interval inequalities behind the certificate."""
    cert = cert or build_certificate(state, n)
    st = state.stage(n)
    q = st.q
    L = mpmath.mpf(st.L_prev)
    recs = []
    with mpmath.workdps(cert.dps):
        qq = mpmath.mpf(q)
        w = 1 / qq ** (n + 2)
        centers = cm._MP.asarray(np.array([mpmath.mpf(i) / q for i in range(q)], dtype=object))
        c1, d1 = centers - w, centers + w
        hinv = cm.inverse(st.h())
        hc = cm.lift_eval(hinv, c1, backend="mp")
        hd = cm.lift_eval(hinv, d1, backend="mp")
        hc_next = np.concatenate([hc[1:], [hc[0] + 1]])
        c2 = cm._MP.asarray(np.array(cert.c2, dtype=object))
        d2 = cm._MP.asarray(np.array(cert.d2, dtype=object))
        c2n = np.concatenate([c2[1:], [c2[0] + 1]])
        c = cert.c
        d = cert.d
        cnext = c[1:] + [c[0] + 1]

        g41 = hc_next - hd
        bound41 = 1 / (2 ** (n + 3) * qq)
        recs.append(_rec("h_inverse_gap", max(g41), bound41,
                         min(g41) > 0 and max(g41) < bound41,
                         "0 < h^-1 c'_{i+1} - h^-1 d'_i < 2^-(n+3)/q"))
        tail = 1 / (2 ** (n + 5) * qq)
        dc = max(abs(v) for v in (c2 - hc))
        dd = max(abs(v) for v in (d2 - hd))
        recs.append(_rec("c_preimage_shift", dc, tail, dc <= tail, "|c''_i - h^-1 c'_i| <= 2^-(n+5)/q"))
        recs.append(_rec("d_preimage_shift", dd, tail, dd <= tail, "|d''_i - h^-1 d'_i| <= 2^-(n+5)/q"))
        g4 = c2n - d2
        b4 = 1 / (2 ** (n + 2) * qq)
        recs.append(_rec("preimage_gap", max(g4), b4, min(g4) > 0 and max(g4) < b4,
                         "0 < c''_{i+1} - d''_i < 2^-(n+2)/q"))
        l5 = d2 - c2
        recs.append(_rec("preimage_length", min(l5), 1 / (2 * qq), min(l5) > 1 / (2 * qq),
                         "d''_i - c''_i > 1/(2q)"))
        lens = [d[i] - c[i] for i in range(q)]
        ratio43 = max(lens) / (2 * w)
        recs.append(_rec("length_ratio", ratio43, L, ratio43 <= L * (1 + mpmath.mpf(10) ** -9),
                         "(d_i - c_i) / (d'_i - c'_i) <= L_{n-1}"))
        gaps = [cnext[i] - d[i] for i in range(q)]
        ratio44 = min(gaps[i] / (c1[(i + 1) % q] + (1 if i == q - 1 else 0) - d1[i])
                      for i in range(q))
        recs.append(_rec("gap_ratio", ratio44, 1 / L, ratio44 >= (1 / L) * (1 - mpmath.mpf(10) ** -9),
                         "(c_{i+1} - d_i) / (c'_{i+1} - d'_i) >= 1/L_{n-1}"))
        lhs45 = 4 * n * L ** 2
        rhs45 = qq ** (n + 1)
        recs.append(_rec("derivative_vs_q", lhs45, rhs45, lhs45 <= rhs45, "4 n L_{n-1}^2 <= q^(n+1)"))
    return GeometryReport(n, recs)


# ---------------------------------------------------------------------------
# transport

@dataclass
class ProbeResult:
    before: BnCertificate
    after: BnCertificate

    @property
    def preserved(self) -> dict:
        return {k: self.before.flags.get(k) == self.after.flags.get(k) for k in ("a", "d", "e")}


def transport(h: CircleMapExpr, cert: BnCertificate) -> BnCertificate:
    with mpmath.workdps(cert.dps):
        c = cm.evaluate(h, cm._MP.asarray(np.array(cert.c, dtype=object)), backend="mp")
        d = cm.evaluate(h, cm._MP.asarray(np.array(cert.d, dtype=object)), backend="mp")
    return replace(cert, c=list(c), d=list(d), c2=None, d2=None, provenance="transported",
                   margins={})


def conjugation_invariance_probe(h: CircleMapExpr, f: CircleMapExpr, cert: BnCertificate,
                                 k_budget: int = 10 ** 7) -> ProbeResult:
    """Check ``cert`` against ``f`` and its transport by ``h`` against ``h f h^-1``."""
    before = check_certificate(f, cert, k_budget)
    moved = transport(h, cert)
    g = cm.compose(h, f, Inverse(h))
    after = check_certificate(g, moved, k_budget)
    return ProbeResult(before, after)


# ---------------------------------------------------------------------------
# lemma oracles

def _rand_primitive(rng: np.random.Generator) -> CircleMapExpr:
    kind = rng.integers(4)
    a = float(rng.uniform(0.5, 0.999))
    if kind == 0:
        return MoebiusHat(a=a)
    if kind == 1:
        return Inverse(MoebiusHat(a=a))
    if kind == 2:
        return Rotation(float(rng.uniform(0.0, 1.0)))
    return Lift(MoebiusHat(a=a), int(rng.integers(2, 7)))


def random_map(rng: np.random.Generator, max_depth: int = 2) -> CircleMapExpr:
    depth = int(rng.integers(1, max_depth + 1))
    return cm.compose(*[_rand_primitive(rng) for _ in range(depth)])


def _pow(x: float, k: int) -> float:
    try:
        return x ** k
    except OverflowError:
        return math.inf


def lemma_ratios(r_max: int, samples: int, seed: int, grid: Optional[int] = None) -> dict:
    """Sampled ratios lhs / (rhs without its constant), per lemma and order.

    ``covering_lift`` ratios are plain lhs/rhs (that lemma has no constant) and
    start at r = 1.
    """
    grid = grid or LEMMA_GRID
    rng = np.random.default_rng(seed)
    out = {key: {r: np.zeros(samples) for r in range(r_max + 1)}
           for key in ("composition", "conjugated_rotations", "moebius_radius")}
    out["covering_lift"] = {r: np.zeros(samples) for r in range(1, r_max + 1)}
    with np.errstate(over="ignore", invalid="ignore"):
        for s in range(samples):
            f, g = random_map(rng), random_map(rng)
            nf = cm.cr_norms_all(f, r_max, grid)
            ng = cm.cr_norms_all(g, r_max, grid)
            nfg = cm.cr_norms_all(cm.compose(f, g), r_max, grid)
            for r in range(r_max + 1):
                out["composition"][r][s] = nfg[r] / (_pow(nf[r], r) * _pow(ng[r], r))

            H = random_map(rng)
            a, b = (float(v) for v in rng.uniform(0.0, 1.0, 2))
            nH = cm.cr_norms_all(H, r_max + 1, grid)
            prof = cm.dr_profile(cm.conjugate(H, a), cm.conjugate(H, b), r_max, grid)
            dr = np.maximum.accumulate(np.max(prof, axis=0))
            for r in range(r_max + 1):
                out["conjugated_rotations"][r][s] = dr[r] / (_pow(nH[r + 1], r + 1) * abs(a - b))

            k = MoebiusHat(a=float(rng.uniform(0.5, 0.999)))
            q = int(rng.integers(1, 33))
            nk = cm.cr_norms_all(k, r_max, grid)
            nh = cm.cr_norms_all(cm.lift(k, q), r_max, grid)
            for r in range(1, r_max + 1):
                out["covering_lift"][r][s] = nh[r] / (nk[r] * q ** (r - 1))

            if s == 0:
                av = 0.5
            elif s == 1:
                av = 0.999
            else:
                av = float(rng.uniform(0.5, 0.999))
            m = MoebiusHat(a=av)
            nm = cm.cr_norms_all(m, r_max, grid)
            rho = cm.rho(av)
            for r in range(r_max + 1):
                out["moebius_radius"][r][s] = nm[r] * rho ** (2 * r)
    return out


def lemma_oracles(consts, r_max: int = 4, samples: int = 1000, seed: int = 1,
                  grid: Optional[int] = None, rel_tol: float = 1e-9) -> dict:
    """Violation counts of the four lemma inequalities with the given constants."""
    if samples < 100:
        raise ValueError("samples must be >= 100")
    ratios = lemma_ratios(r_max, samples, seed, grid)
    const_of = {"composition": consts.c1, "conjugated_rotations": consts.c2, "moebius_radius": consts.c3,
                "covering_lift": lambda r: 1.0}
    report = {"schema_version": 1, "seed": seed, "samples": samples, "r_max": r_max,
              "lemmas": {}}
    total = 0
    for key in ("composition", "conjugated_rotations", "covering_lift", "moebius_radius"):
        rows = []
        for r, vals in sorted(ratios[key].items()):
            rel = vals / const_of[key](r)
            v = int(np.sum(~(rel <= 1 + rel_tol)))
            total += v
            rows.append({"r": r, "samples": int(vals.size), "max_ratio": float(np.max(rel)),
                         "violations": v})
        report["lemmas"][key] = rows
    report["violations"] = total
    return report
