"""Explicit constants of the existence argument and the feasibility threshold.

Everything is a function of (L1, L2, rho).  The smallness conditions invoked
along the way are encoded as monomial inequalities in eps,

    sum_i a_i eps^p_i  (<= or <)  sum_j b_j eps^q_j,

and eps_star is the sup of the eps > 0 at which all of them hold.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

from .spectral import SPECIAL_MODES, TWO_PI, Domain, sigma

PI = math.pi


class NonTheoremRegimeError(ValueError):
    """The linear symbol is non-negative somewhere off the special set."""


def _sqrt(x: float) -> float:
    return math.sqrt(x) if x >= 0 else math.nan


def linear_coefficients(d: Domain) -> tuple[float, float, float, float]:
    """(eps1, eps2, B1, B2): growth rates of (1,0), (0,1) and decay rates of (2,0), (0,2)."""
    eps1, eps2 = d.growth_rates()
    B1 = (2 * TWO_PI / d.L1) ** 4 - (2 * TWO_PI / d.L1) ** 2
    B2 = (2 * TWO_PI / d.L2) ** 4 - (2 * TWO_PI / d.L2) ** 2
    return eps1, eps2, B1, B2


def m_constants(eps1, eps2, B1, B2, d: Domain) -> tuple[float, float, float, float]:
    """(M11, M12, M21, M22)."""
    del eps1, eps2  # not needed, kept for the call signature
    M11 = 12 * B1 * d.L1 ** 4 / PI ** 4
    M12 = 12 * B2 * d.L2 ** 4 / PI ** 4
    M21 = 8 * PI ** 2 * M11 / d.L1 ** 2
    M22 = 8 * PI ** 2 * M12 / d.L2 ** 2
    return M11, M12, M21, M22


def _k1_ratio(k: int, j: int, d: Domain) -> float:
    s = -sigma(k, j, d)
    if s <= 0:
        raise NonTheoremRegimeError(f"sigma({k},{j}) = {-s} >= 0 off the special set")
    return (1 + k + j) / s


def enumerate_K1(d: Domain, limit: int) -> tuple[float, tuple[int, int]]:
    """Brute-force max of (1+k+j)/(-sigma) over cosine modes with k + j <= limit, off A."""
    best, arg = -math.inf, None
    special = set(SPECIAL_MODES)
    for k in range(limit + 1):
        for j in range(limit + 1 - k):
            if (k, j) in special:
                continue
            r = _k1_ratio(k, j, d)
            if r > best:
                best, arg = r, (k, j)
    return best, arg


def compute_K1(d: Domain, search_limit: int = 12) -> float:
    """sup over (k, j) off A of (1 + |k| + |j|) / (-sigma(k, j)).

    Enumerates the shells k + j <= search_limit, then proves the rest cannot
    win: with c = min_i (2 pi / L_i)^2 / 2 one has kappa^2 >= c s^2 on the shell
    k + j = s, hence -sigma >= c^2 s^4 - c s^2 once c s^2 >= 1, and the bound
    (1 + s) / (c^2 s^4 - c s^2) is decreasing from there on.  Both facts are
    checked at s = search_limit + 1.
    """
    if search_limit < 8:
        raise ValueError("search_limit must be >= 8")
    best, _ = enumerate_K1(d, search_limit)
    c = 0.5 * min((TWO_PI / d.L1) ** 2, (TWO_PI / d.L2) ** 2)
    s = search_limit + 1
    if 3 * c * s * s <= 1 or c * s * s < 1:
        raise RuntimeError(f"tail bound not in its monotone range at shell {s}; raise search_limit")
    tail = (1 + s) / (c * c * s ** 4 - c * s * s)
    if not tail < best:
        raise RuntimeError(
            f"tail bound {tail:.3e} at shell {s} does not sit below the enumerated max {best:.3e}"
        )
    return best


def wiener_sin_norms(L: float, rho: float) -> dict[str, float]:
    """Closed-form B^0_rho norms of the four one-axis sine expressions bounded by K2."""
    e = math.exp
    return {
        # sin(s) sin(2s) = (cos s - cos 3s) / 2
        "sin1sin2": (16 * PI ** 2 / L ** 2) * (0.5 * e(rho) + 0.5 * e(3 * rho)),
        # sin^2(2s) = (1 - cos 4s) / 2
        "sin2sq": (16 * PI ** 2 / L ** 2) * (0.5 + 0.5 * e(4 * rho)),
        "sin1": (4 * PI / L) * e(rho),
        "sin2": (8 * PI / L) * e(2 * rho),
    }


def compute_K2(d: Domain, rho: float) -> float:
    norms = list(wiener_sin_norms(d.L1, rho).values()) + list(wiener_sin_norms(d.L2, rho).values())
    return max(norms)


def compute_M3_and_K(K1, K2, M11, M12, M21, M22, rho) -> tuple[float, float]:
    M3 = max(6 * K1 * (2 * _sqrt(M11) * M21 * K2), 6 * K1 * (2 * _sqrt(M12) * M22 * K2))
    c1, c2 = math.exp(rho), math.exp(2 * rho)  # ||cos(2 pi x/L)||, ||cos(4 pi x/L)||
    quotients = []
    for M1 in (M11, M12):
        for den in (c1, c2, c1, c2):
            quotients.append(3 * _sqrt(M1) * M3 * K2 / den)
    return M3, max(quotients)


# --------------------------------------------------------------------------
# smallness conditions


@dataclass(frozen=True)
class Condition:
    """lhs(eps) <= rhs(eps) (or < if strict), each side a sum of coef * eps**power."""

    name: str
    description: str
    lhs: tuple[tuple[float, float], ...]
    rhs: tuple[tuple[float, float], ...]
    strict: bool = False

    def _log_side(self, side, log_eps):
        logs = []
        for coef, power in side:
            if not coef > 0:  # also catches nan
                return math.nan if math.isnan(coef) else -math.inf
            logs.append(math.log(coef) + power * log_eps)
        top = max(logs)
        return top + math.log(math.fsum(math.exp(x - top) for x in logs))

    def log_ratio(self, eps: float) -> float:
        le = math.log(eps)
        lo, ro = self._log_side(self.lhs, le), self._log_side(self.rhs, le)
        if math.isnan(lo) or math.isnan(ro) or ro == -math.inf:
            return math.inf
        return lo - ro

    def ratio(self, eps: float) -> float:
        return math.exp(self.log_ratio(eps))

    def holds(self, eps: float) -> bool:
        r = self.log_ratio(eps)
        return r < 0 if self.strict else r <= 0

    def margin(self, eps: float) -> float:
        """1 - lhs/rhs: positive when satisfied with room to spare."""
        return 1.0 - self.ratio(eps)

    @property
    def eps_independent(self) -> bool:
        return all(p == 0 for _, p in self.lhs + self.rhs)

    @property
    def monotone(self) -> bool:
        """lhs/rhs is non-decreasing in eps (so the feasible set is an interval)."""
        return min(p for _, p in self.lhs) >= max(p for _, p in self.rhs)

    def formula(self) -> str:
        def side(terms):
            return " + ".join(f"{c:.6g}*eps^{p:g}" for c, p in terms)
        return f"{side(self.lhs)} {'<' if self.strict else '<='} {side(self.rhs)}"


@dataclass(frozen=True)
class ConditionStatus:
    name: str
    description: str
    formula: str
    satisfied_at_eps_star: bool
    margin_at_half: float


@dataclass(frozen=True)
class ConstantLedger:
    domain: Domain
    rho: float
    eps1: float
    eps2: float
    eps: float
    B1: float
    B2: float
    M11: float
    M12: float
    M21: float
    M22: float
    K1: float
    K2: float
    M3: float
    K: float
    eps_star: float = math.nan
    binding: str | None = None
    conditions: tuple[ConditionStatus, ...] = field(default=(), repr=False)
    failing: tuple[str, ...] = ()

    @property
    def theorem_regime(self) -> bool:
        return self.domain.theorem_regime and self.eps1 > 0 and self.eps2 > 0

    @property
    def certified(self) -> bool:
        """Theorem regime, eps_star > 0 and the actual eps of the domain below it."""
        return self.theorem_regime and self.eps_star > 0 and self.eps < self.eps_star

    def axis(self, i: int) -> dict[str, float]:
        """Per-axis constants for i in {1, 2}."""
        if i == 1:
            return dict(eps_i=self.eps1, B=self.B1, L=self.domain.L1, M1=self.M11, M2=self.M21)
        if i == 2:
            return dict(eps_i=self.eps2, B=self.B2, L=self.domain.L2, M1=self.M12, M2=self.M22)
        raise ValueError("axis must be 1 or 2")

    def to_dict(self) -> dict:
        names = ["rho", "eps1", "eps2", "eps", "B1", "B2", "M11", "M12", "M21", "M22",
                 "K1", "K2", "M3", "K", "eps_star", "binding"]
        out = {n: getattr(self, n) for n in names}
        out["domain"] = {"L1": self.domain.L1, "L2": self.domain.L2, "N": self.domain.N,
                         "stretch": list(self.domain.stretch) if self.domain.stretch else None}
        out["theorem_regime"] = self.theorem_regime
        out["certified"] = self.certified
        out["failing"] = list(self.failing)
        out["conditions"] = [asdict(c) for c in self.conditions]
        return out


def proof_conditions(led: ConstantLedger) -> list[Condition]:
    """Every smallness requirement used by the low-mode and inductive estimates."""
    conds = []
    for i, tag in ((1, "x"), (2, "y")):
        a = led.axis(i)
        L, B, M1, M2 = a["L"], a["B"], a["M1"], a["M2"]
        young = L ** 4 / (4 * PI ** 4)
        K = led.K
        conds += [
            Condition(f"lyapunov.young_half[{tag}]",
                      "L^4 eps^2/(4 pi^4) <= M1 eps/2 (G >= M1 eps forces a^2+b^2 >= M1 eps/6)",
                      ((young, 2),), ((M1 / 2, 1),)),
            Condition(f"lyapunov.a_sq_lower[{tag}]",
                      "L^4 eps^2/(4 pi^4) <= M1 eps/12 (small negative b forces a^2 >= M1 eps/12)",
                      ((young, 2),), ((M1 / 12, 1),)),
            Condition(f"lyapunov.upsilon2[{tag}]",
                      "4K^2 eps^3 + 16K^2 eps^4/B + 2L^2 K eps^3/pi^2 <= M1 eps^2/48",
                      ((4 * K * K, 3), (16 * K * K / B if B > 0 else math.nan, 4),
                       (2 * L * L * K / PI ** 2, 3)),
                      ((M1 / 48, 2),)),
            Condition(f"lyapunov.initial[{tag}]",
                      "L^4 eps^2/(4 pi^4) < M1 eps/4 (data with a^2+b^2 <= M1 eps/4 start below the level)",
                      ((young, 2),), ((M1 / 4, 1),), strict=True),
            Condition(f"lyapunov.final[{tag}]",
                      "L^4 eps^2/(4 pi^4) <= M1 eps (level set lies inside a^2+b^2 < 4 M1 eps)",
                      ((young, 2),), ((M1, 1),)),
            Condition(f"decay.B_gt_10[{tag}]", "B > 10", ((10.0, 0),), ((B, 0),), strict=True),
            Condition(f"decay.duhamel[{tag}]",
                      "(M2 eps + 2K eps^2)/B <= M2 eps/2 (|b(0)| <= M2 eps/2 keeps |b| <= M2 eps)",
                      ((M2 / B if B > 0 else math.nan, 1), (2 * K / B if B > 0 else math.nan, 2)),
                      ((M2 / 2, 1),)),
            Condition(f"w.phi_quadratic[{tag}]",
                      "M2^2 K2 eps^2 <= M3 eps^{3/2}/(6 K1)",
                      ((M2 * M2 * led.K2, 2),), ((led.M3 / (6 * led.K1), 1.5),)),
            Condition(f"w.phi_times_w[{tag}]",
                      "2 M1^{1/2} M3 K2 eps^2 + M2 M3 K2 eps^{5/2} <= M3 eps^{3/2}/(24 K1)",
                      ((2 * _sqrt(M1) * led.M3 * led.K2, 2), (M2 * led.M3 * led.K2, 2.5)),
                      ((led.M3 / (24 * led.K1), 1.5),)),
        ]
    conds.append(Condition("w.w_square", "M3^2 eps^3 <= M3 eps^{3/2}/(24 K1)",
                           ((led.M3 ** 2, 3),), ((led.M3 / (24 * led.K1), 1.5),)))
    rho = led.rho
    dens = {"10": math.exp(rho), "20": math.exp(2 * rho), "01": math.exp(rho), "02": math.exp(2 * rho)}
    for fam, (M1, M2) in (("x", (led.M11, led.M21)), ("y", (led.M12, led.M22))):
        for mode in ("10", "20", "01", "02"):
            den = dens[mode]
            conds.append(Condition(
                f"forcing.F{mode}{fam}",
                f"(M3^2 eps^3 + 2 M1^{{1/2}} M3 K2 eps^2 + M2 M3 K2 eps^{{5/2}})/||cos_{mode}|| <= K eps^2",
                ((led.M3 ** 2 / den, 3), (2 * _sqrt(M1) * led.M3 * led.K2 / den, 2),
                 (M2 * led.M3 * led.K2 / den, 2.5)),
                ((led.K, 2),)))
    return conds


def feasibility_epsilon_star(conditions: list[Condition], rel_tol: float = 1e-9,
                             bracket: tuple[float, float] = (1e-16, 1.0)) -> tuple[float, str | None, list[str]]:
    """(eps_star, binding condition, failing conditions).

    Bisection in log eps.  Returns (inf, None, []) without conditions and
    (0, None, failing) when no eps > 0 works.
    """
    if not conditions:
        return math.inf, None, []
    for c in conditions:
        if not c.monotone:
            raise ValueError(f"condition {c.name} is not monotone in eps")

    def feasible(e):
        return all(c.holds(e) for c in conditions)

    fixed_fail = [c.name for c in conditions if c.eps_independent and not c.holds(1.0)]
    if fixed_fail:
        return 0.0, None, fixed_fail
    lo, hi = bracket
    while not feasible(lo):
        lo *= 1e-8
        if lo < 1e-300:
            return 0.0, None, [c.name for c in conditions if not c.holds(1e-300)]
    while feasible(hi):
        hi *= 1e8
        if hi > 1e300:
            return math.inf, None, []
    hi = max(hi, lo)
    while hi / lo - 1.0 > rel_tol * 0.1:
        mid = math.sqrt(lo * hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    failing = [c for c in conditions if not c.holds(hi)]
    binding = max(failing, key=lambda c: c.log_ratio(hi)).name if failing else None
    return lo, binding, []


def build_ledger(d: Domain, rho: float = 0.1, search_limit: int = 12) -> ConstantLedger:
    """All constants, the encoded conditions and eps_star for a domain."""
    eps1, eps2, B1, B2 = linear_coefficients(d)
    M11, M12, M21, M22 = m_constants(eps1, eps2, B1, B2, d)
    try:
        K1 = compute_K1(d, search_limit)
    except NonTheoremRegimeError:
        K1 = math.nan  # propagates into every condition that needs it
    K2 = compute_K2(d, rho)
    M3, K = compute_M3_and_K(K1, K2, M11, M12, M21, M22, rho)
    led = ConstantLedger(d, rho, eps1, eps2, max(eps1, eps2), B1, B2,
                         M11, M12, M21, M22, K1, K2, M3, K)
    return with_feasibility(led)


def with_feasibility(led: ConstantLedger) -> ConstantLedger:
    conds = proof_conditions(led)
    if math.isnan(led.K1):
        conds.append(Condition("regime.sigma_negative_off_A", "sigma(k, j) < 0 for every (k, j) outside A",
                               ((1.0, 0),), ((0.0, 0),), strict=True))
    eps_star, binding, failing = feasibility_epsilon_star(conds)
    probe = eps_star / 2 if 0 < eps_star < math.inf else (1.0 if eps_star == math.inf else 1e-300)
    status = tuple(
        ConditionStatus(c.name, c.description, c.formula(),
                        bool(eps_star > 0 and eps_star < math.inf and c.holds(eps_star)),
                        c.margin(probe))
        for c in conds
    )
    return replace(led, eps_star=eps_star, binding=binding, conditions=status, failing=tuple(failing))


def stretch_for_eps(eps: float) -> float:
    """delta > 0 with -(1+delta)^-4 + (1+delta)^-2 = eps (the root near the critical length)."""
    if not 0 < eps < 0.25:
        raise ValueError("growth rate must lie in (0, 1/4)")
    root = math.sqrt(1 - 4 * eps)
    u = 2 * eps / (1 + root)  # 1 - (2 pi / L)^2
    return math.expm1(-0.5 * math.log1p(-u))


def domain_for_eps_fraction(fraction: float, rho: float = 0.1, N: int = 32,
                            eps2_ratio: float = 1.0, base_stretch: float = 1e-3,
                            iterations: int = 4) -> tuple[Domain, ConstantLedger]:
    """Near-critical domain whose eps equals ``fraction * eps_star`` (self-consistently).

    eps_star depends on the lengths only through slowly varying constants, so a
    few fixed-point sweeps settle it to rounding.
    """
    if not 0 < fraction:
        raise ValueError("fraction must be positive")
    d = Domain.near_critical(base_stretch, base_stretch * eps2_ratio, N)
    led = build_ledger(d, rho)
    for _ in range(iterations):
        target = fraction * led.eps_star
        d = Domain.near_critical(stretch_for_eps(target), stretch_for_eps(target * eps2_ratio), N)
        led = build_ledger(d, rho)
    return d, led


def k1_argmax(d: Domain, limit: int = 12) -> tuple[int, int]:
    return enumerate_K1(d, limit)[1]


__all__ = [
    "Condition", "ConditionStatus", "ConstantLedger", "NonTheoremRegimeError",
    "build_ledger", "compute_K1", "compute_K2", "compute_M3_and_K", "domain_for_eps_fraction",
    "enumerate_K1", "feasibility_epsilon_star", "linear_coefficients", "m_constants",
    "proof_conditions", "stretch_for_eps", "wiener_sin_norms", "with_feasibility",
]
