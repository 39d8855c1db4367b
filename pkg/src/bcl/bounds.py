"""Explicit constants, integer thresholds and bound curves.

Everything here is closed-form arithmetic on fitted diagnostics
(``D``, ``beta``, ``gamma``) and scenario parameters. Gate inequalities are
evaluated on the computed doubles with ``>=``: equality counts as satisfied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import DivergenceError, DomainError, EmptyRestrictionError, HypothesisError, InfeasibleError
from .estimator import LossSpec
from .geometry import DimensionTable, PriorMassProfile
from .hellinger import hellinger_distance, kl_divergence
from .models import BALL_TOL, ModelFamily, Prior, TrueDistribution

# terms below this are dropped from convergent tails
TAIL_CUTOFF = 1e-300
_LOG_CUTOFF = math.log(TAIL_CUTOFF)


# -- countable toy model ------------------------------------------------------


def shell_tail_sums(N, max_terms: int = 100_000) -> list[float]:
    """Tail sums ``T_j = sum_{l >= j} N_l exp(-l^2)`` for ``j = 1, 2, ...``.

    ``N`` is either a finite sequence (``N[0]`` is ``N_1``; later shells are
    empty) or a callable ``l -> N_l``. For a callable the series is
    truncated once terms fall below 1e-300 while decreasing; terms that fail
    to vanish raise :class:`DivergenceError`. The returned list ends with a
    tail that is zero up to the truncation.
    """
    terms: list[float] = []
    if callable(N):
        prev = math.inf
        for l in range(1, max_terms + 1):
            try:
                nl = N(l)
                lt = (math.log(nl) - l * l) if nl > 0 else -math.inf
            except (OverflowError, ValueError) as exc:
                raise DivergenceError(f"shell count at l={l} is not finite: {exc}") from None
            if lt > 700:
                raise DivergenceError(f"series terms do not vanish (log term {lt:.1f} at l={l})")
            if lt < _LOG_CUTOFF and lt <= prev:
                break
            terms.append(math.exp(lt) if lt > -math.inf else 0.0)
            prev = lt
        else:
            raise DivergenceError(f"no convergence after {max_terms} terms")
    else:
        for l, nl in enumerate(N, start=1):
            if nl < 0:
                raise DomainError("shell counts must be nonnegative")
            terms.append(nl * math.exp(-l * l))
    tails = [0.0] * (len(terms) + 1)
    # accumulate from the smallest terms upward
    acc: list[float] = []
    for j in range(len(terms) - 1, -1, -1):
        acc.append(terms[j])
        tails[j] = math.fsum(acc)
    return tails


def toy_k(N, epsilon: float, delta: float, nu_s: float) -> int:
    """Smallest ``j >= 1`` with ``sum_{l >= j} N_l exp(-l^2) <= epsilon sqrt(delta nu_s)``."""
    if not (0 < epsilon < 1 and 0 < delta < 1):
        raise DomainError("epsilon and delta must lie in (0, 1)")
    if not nu_s > 0:
        raise DomainError("nu_s must be positive")
    threshold = epsilon * math.sqrt(delta * nu_s)
    for j, tail in enumerate(shell_tail_sums(N), start=1):
        if tail <= threshold:
            return j
    raise DivergenceError("tail never drops below the threshold")  # pragma: no cover


def shell_counts(family: ModelFamily, s: int, n: int) -> list[int]:
    """``N_l = #{t : l/sqrt(n) < h(s, t) <= (l+1)/sqrt(n)}`` for ``l = 1..L``."""
    h = np.delete(family.distances[s], s) * math.sqrt(n)
    # l = ceil(h sqrt n) - 1, with a small guard for values sitting on a shell edge
    l = np.ceil(h - 1e-9).astype(int) - 1
    l = l[l >= 1]
    if l.size == 0:
        return []
    return np.bincount(l, minlength=l.max() + 1)[1:].tolist()


# -- concentration around the center ------------------------------------------


def pair_admissible(n: float, gamma: float, J1: int, J: int, D: DimensionTable, profile: PriorMassProfile) -> bool:
    lhs = 4.0 ** -(J + 3) * n
    rhs = max(gamma ** (J1 - J + 1) * profile.beta(J1) / 3.0, D.at(2.0 ** -(J + 1)))
    return lhs >= rhs


def concentration_gate_n(n: float, D: DimensionTable, profile: PriorMassProfile, gamma: float) -> float:
    """Smallest ``n`` for which some admissible ``(J1, J)`` exists."""
    return 4.0**4 * max(gamma**3 * profile.beta(3) / 3.0, D.at(0.25))


class JPair(NamedTuple):
    J1: int
    J: int
    admissible: tuple
    downward_ok: bool


def find_J_pair(n: int, D: DimensionTable, profile: PriorMassProfile, gamma: float) -> JPair:
    """Admissible ``(J1, J)`` with ``1 <= J <= J1 - 2`` maximizing ``J``, then minimizing ``J1``.

    Admissibility is ``4^-(J+3) n >= max(gamma^(J1-J+1) beta(J1)/3, D(2^-(J+1)))``,
    limited to the tabulated range of ``beta`` and ``D``. The downward
    closure (the same inequality for every ``1 <= J' <= J``) is re-checked.
    """
    if not 1.0 <= gamma <= 4.0:
        raise DomainError("gamma must lie in [1, 4]")
    need = concentration_gate_n(n, D, profile, gamma)
    if n < need:
        raise InfeasibleError(f"posterior concentration sample-size gate infeasible: n={n} < {need:.6g}")
    admissible = []
    for J1 in range(3, profile.j_max + 1):
        for J in range(1, J1 - 1):
            try:
                if pair_admissible(n, gamma, J1, J, D, profile):
                    admissible.append((J1, J))
            except DomainError:
                continue
    if not admissible:  # pragma: no cover - the gate guarantees (3, 1)
        raise InfeasibleError("no admissible (J1, J) in the tabulated range")
    J1, J = min(admissible, key=lambda p: (-p[1], p[0]))
    downward = all(pair_admissible(n, gamma, J1, Jp, D, profile) for Jp in range(1, J + 1))
    return JPair(J1, J, tuple(admissible), downward)


def theorem1_bound_curve(n: int, J: int) -> tuple[dict, float]:
    """Posterior-mass thresholds ``1 - 1.05 exp(-4^-(j+3) n)`` for ``j = 0..J`` and the failure bound."""
    thresholds = {j: 1.0 - 1.05 * math.exp(-(4.0 ** -(j + 3)) * n) for j in range(J + 1)}
    return thresholds, 1.05 * math.exp(-(4.0 ** -(J + 3)) * n)


# -- near-true model ----------------------------------------------------------


def J2(x: float, gamma: float, beta_bar: float, D_bar: float, max_j: int = 100_000) -> int:
    """Smallest ``j >= 1`` with ``4^(j-4) x^2 >= max(gamma^(j+2) beta_bar/3, D_bar, log(8/x))``."""
    if not gamma < 4:
        raise HypothesisError(f"gamma must be < 4, got {gamma!r}")
    if not x > 0:
        raise DomainError("x must be positive")
    log4, lg = math.log(4.0), math.log(gamma)
    const = max(D_bar, math.log(8.0 / x))
    for j in range(1, max_j + 1):
        lhs = (j - 4) * log4 + 2.0 * math.log(x)
        rhs = max((j + 2) * lg + math.log(beta_bar / 3.0), math.log(const))
        if lhs >= rhs:
            return j
    raise DivergenceError("J2 scan did not terminate")  # pragma: no cover


def truemodel_n_gate(n: float, c: float, gamma: float, beta_bar: float, D_bar: float) -> bool:
    """``n >= 4^4 max((16 n / c^2)^(log gamma / log 4) beta_bar/3, D_bar, log(8/c))``."""
    if not 0 < c <= 0.5:
        raise DomainError("c must lie in (0, 1/2]")
    if not gamma < 4:
        raise HypothesisError(f"gamma must be < 4, got {gamma!r}")
    expo = math.log(gamma) / math.log(4.0)
    rhs = 4.0**4 * max((16.0 * n / (c * c)) ** expo * beta_bar / 3.0, D_bar, math.log(8.0 / c))
    return n >= rhs


@dataclass(frozen=True)
class TruemodelCurve:
    radii: dict
    thresholds: dict
    budget: float

    @property
    def vacuous(self) -> bool:
        return self.budget >= 1.0


def theorem2_bound_curve(n: int, c: float, kappa: float, J2_c: int, gate: bool = True) -> TruemodelCurve:
    """Radii ``2^k c / sqrt(n)`` and thresholds ``1 - 1.05 exp(-4^(k-4) c^2)`` for ``k >= J2_c``.

    Levels are listed while the radius stays at most 1 (larger balls are
    the whole model). ``budget`` is the failure probability ``kappa + c``.
    """
    if not gate:
        raise InfeasibleError("near-true-model sample-size gate is false")
    if not 0 <= kappa < 0.5:
        raise HypothesisError(f"kappa must lie in [0, 1/2), got {kappa!r}")
    radii, thresholds = {}, {}
    k = J2_c
    while 2.0**k * c / math.sqrt(n) <= 1.0:
        radii[k] = 2.0**k * c / math.sqrt(n)
        thresholds[k] = 1.0 - 1.05 * math.exp(-(4.0 ** (k - 4)) * c * c)
        k += 1
    return TruemodelCurve(radii, thresholds, kappa + c)


# -- Bayes estimator risk -----------------------------------------------------


def delta_constant(loss: LossSpec) -> float:
    """``4 ([(5/4)(1 + a'/2)]^(1/delta) + 1)``; always exceeds 4."""
    val = 4.0 * ((1.25 * (1.0 + loss.a_prime / 2.0)) ** (1.0 / loss.delta) + 1.0)
    assert val > 4.0
    return val


def Kn(prior: Prior, family: ModelFamily, P_true: TrueDistribution, s: int, J1: int) -> float:
    """Prior-averaged ``K(P, P_t)`` over the ball ``B(s, 2^-J1)``."""
    inside = family.distances[s] <= 2.0**-J1 + BALL_TOL
    mass = math.fsum(prior.weights[inside])
    if mass <= 0:
        raise EmptyRestrictionError(f"ball of radius 2^-{J1} has zero prior mass")
    terms = []
    for t in np.flatnonzero(inside):
        w = prior.weights[t]
        if w == 0:
            continue
        k = kl_divergence(P_true.density, family.densities[t])
        if math.isinf(k):
            return math.inf
        terms.append(w * k)
    return math.fsum(terms) / mass


def risk_j1_gate(n: float, J1: int, D: DimensionTable, profile: PriorMassProfile, gamma: float) -> float:
    """Largest ``kappa`` allowed with ``J1``: ``4^-(J1+1) n``, or ``-inf`` if the other terms fail."""
    if J1 < 3:
        return -math.inf
    lhs = 4.0 ** -(J1 + 1) * n
    if lhs < max(gamma**3 * profile.beta(J1) / 3.0, D.at(2.0 ** (1 - J1))):
        return -math.inf
    return lhs


def check_risk_hypotheses(n: float, J1: int, D: DimensionTable, profile: PriorMassProfile, gamma: float,
                          loss: LossSpec) -> float:
    """Raise :class:`HypothesisError` unless the risk bound applies; return the gate ``kappa``."""
    kappa = risk_j1_gate(n, J1, D, profile, gamma)
    if not kappa > 1:
        raise HypothesisError(f"risk-bound gate fails for J1={J1}, n={n}")
    if loss.B_prime > (kappa - 1.0) / 4.0:
        raise HypothesisError(
            f"loss growth B'={loss.B_prime!r} exceeds (kappa - 1)/4 = {(kappa - 1) / 4:.6g} at J1={J1}, n={n}")
    return kappa


@dataclass(frozen=True)
class RiskTerms:
    bracket: float
    misspecification: float
    infinite: bool


def theorem3_risk_terms(J1: int, Kn_value: float, Delta: float, h_s_p: float = 0.0) -> RiskTerms:
    """``Delta^2 (4^-J1 + K_n)`` and the add-on ``2 h^2(P_s, P)``; the universal factor is not supplied."""
    if math.isinf(Kn_value):
        return RiskTerms(math.inf, 2.0 * h_s_p * h_s_p, True)
    return RiskTerms(Delta * Delta * (4.0**-J1 + Kn_value), 2.0 * h_s_p * h_s_p, False)


# -- auxiliary inequalities ---------------------------------------------------


def barron_bound(z0: float, a: float, b: float, K: float) -> float:
    """``z0 + (1 + A + sqrt(2A)) / b`` with ``A = log(1 + a exp(-b z0)) + K``."""
    if not (a > 0 and b > 0):
        raise DomainError("a and b must be positive")
    if z0 < 0 or K < 0:
        raise DomainError("z0 and K must be nonnegative")
    A = math.log1p(a * math.exp(-b * z0)) + K
    return z0 + (1.0 + A + math.sqrt(2.0 * A)) / b


def bayesconv_radius(a: float, B: float, loss: LossSpec, J: int) -> float:
    """``([(5/4)(1 + 0.4 a a')]^(1/delta) + 1) 2^-J`` after checking its three hypotheses."""
    if not B >= 2:
        raise HypothesisError(f"B >= 2 fails (B={B!r})")
    if not a > 0 or not a * math.exp(-B) <= 0.2:
        raise HypothesisError(f"a exp(-B) <= 1/5 fails (a exp(-B)={a * math.exp(-B)!r})")
    if not loss.B_prime <= (B - 1.0) / 4.0:
        raise HypothesisError(f"B' <= (B - 1)/4 fails (B'={loss.B_prime!r}, (B-1)/4={(B - 1) / 4!r})")
    if int(J) != J or J < 1:
        raise DomainError("J must be a positive integer")
    return ((1.25 * (1.0 + 0.4 * a * loss.a_prime)) ** (1.0 / loss.delta) + 1.0) * 2.0**-J


def lecam_affinity_bound(h: float, r1: float, r2: float, n: int) -> float:
    """``[1 - (h - r1 - r2)^2]^n`` for ``h > r1 + r2``."""
    if r1 < 0 or r2 < 0:
        raise DomainError("radii must be nonnegative")
    if not h > r1 + r2:
        raise HypothesisError(f"h > r1 + r2 fails (h={h!r}, r1 + r2={r1 + r2!r})")
    return (1.0 - (h - r1 - r2) ** 2) ** n


# -- plan ---------------------------------------------------------------------


@dataclass
class ConcentrationPlan:
    """All instantiated integers and constants for one scenario."""

    n: int
    gamma: float
    J1: int | None = None
    J: int | None = None
    admissible: tuple = ()
    downward_ok: bool | None = None
    gate_n: float | None = None
    J2_of_c: int | None = None
    c: float | None = None
    kappa: float | None = None
    Delta: float | None = None
    Kn: float | None = None
    risk_J1: int | None = None
    toy_k: int | None = None
    bound_curves: dict = field(default_factory=dict)

    @property
    def admissible_pair(self) -> bool:
        return self.J1 is not None and (self.J1, self.J) in self.admissible

    def rows(self) -> list[tuple[str, float]]:
        out = []
        for name in ("n", "gamma", "gate_n", "J1", "J", "J2_of_c", "c", "kappa", "Delta", "Kn", "risk_J1", "toy_k"):
            v = getattr(self, name)
            if v is not None:
                out.append((name, float(v)))
        for name, curve in sorted(self.bound_curves.items()):
            for key, v in sorted(curve.items()):
                out.append((f"{name}[{key}]", float(v)))
        return out


def make_plan(n: int, D: DimensionTable, profile: PriorMassProfile, gamma: float) -> ConcentrationPlan:
    """Plan with the concentration pair ``(J1, J)`` and its threshold curve."""
    pair = find_J_pair(n, D, profile, gamma)
    thresholds, failure = theorem1_bound_curve(n, pair.J)
    plan = ConcentrationPlan(n=n, gamma=gamma, J1=pair.J1, J=pair.J, admissible=pair.admissible,
                             downward_ok=pair.downward_ok, gate_n=concentration_gate_n(n, D, profile, gamma))
    plan.bound_curves["thm1_threshold"] = thresholds
    plan.bound_curves["thm1_failure"] = {pair.J: failure}
    return plan
