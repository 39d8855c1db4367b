"""Seeded Monte Carlo and exhaustive checks of each probabilistic statement.

Every Monte Carlo path draws replication ``r`` from the counter-based stream
``(seed, r, stream)``, so replications can run on any number of threads and
the reduction, done in replication order, is identical to a serial run.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import bounds, rng
from .errors import BoundViolation, DomainError, HypothesisError, InfeasibleError, PreconditionError
from .estimator import LossSpec, argmin_expected_loss, bayes_point_estimate
from .hellinger import (as_table, check_kl_hellinger_sandwich, hellinger_affinity, kl_divergence,
                        kl_ratio_bound, mixture_affinity)
from .models import BALL_TOL, ModelFamily, Prior, sample_iid
from .posterior import (RestrictedMixture, compute_posterior, log_mixture_from_loglik, posterior_ball_mass,
                        sample_from_restricted_mixture)
from .scenarios import MIN_REPS, Scenario

PASS_TOL = 1e-10
# guard for exact paths: rounding only, no statistical slack
EXACT_RTOL = 1e-12
ENUMERATION_LIMIT = 1 << 20


@dataclass
class VerificationReport:
    """Outcome of one check.

    ``kind`` is ``upper`` (frequency must not exceed the bound), ``lower``
    (frequency must reach the bound), ``exact`` (a deterministic quantity
    compared without slack) or ``empirical`` (a reported ratio with no
    certified bound).
    """

    statement_id: str
    quantity: str
    replications: int
    empirical_frequency: float
    theoretical_bound: float
    mc_slack: float
    passed: bool
    seed: int | None
    kind: str = "upper"
    vacuous: bool = False
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def mc_slack(p_hat: float, reps: int) -> float:
    """Three standard errors of a Bernoulli frequency."""
    return 3.0 * math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / reps)


def decide(kind: str, value: float, bound: float, slack: float) -> bool:
    if kind == "upper":
        return value <= bound + slack + PASS_TOL
    if kind == "lower":
        return value >= bound - slack - PASS_TOL
    if kind == "exact":
        return value <= bound + EXACT_RTOL * max(1.0, abs(bound))
    raise DomainError(f"unknown report kind {kind!r}")


def _frequency_report(sid, quantity, hits, bound, seed, kind="upper", **details) -> VerificationReport:
    hits = np.asarray(hits, dtype=bool)
    p = float(np.mean(hits))
    slack = mc_slack(p, hits.size)
    return VerificationReport(sid, quantity, int(hits.size), p, float(bound), slack,
                              decide(kind, p, bound, slack), seed, kind, details=details)


def check_reps(reps: int) -> int:
    if int(reps) != reps or reps < MIN_REPS:
        raise PreconditionError(f"at least {MIN_REPS} replications are required, got {reps!r}")
    return int(reps)


def map_replications(fn: Callable[[int], object], reps: int, threads: int = 1) -> list:
    """``[fn(0), ..., fn(reps - 1)]``, evaluated on ``threads`` worker threads."""
    if threads <= 1:
        return [fn(r) for r in range(reps)]
    chunks = np.array_split(np.arange(reps), 4 * threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda idx: [fn(int(r)) for r in idx], chunks))
    return [x for part in parts for x in part]


def _counts(density, n, seed, r, stream) -> np.ndarray:
    return sample_iid(density, n, seed, r, stream).counts


def _dot_seen(counts: np.ndarray, values: np.ndarray) -> float:
    seen = counts > 0
    return float(counts[seen] @ values[seen])


# -- log-likelihood ratio tail ------------------------------------------------


def verify_tail_inequality(P, Q, n: int, y_grid: Sequence[float], reps: int, seed: int, stream: int = 0,
                           threads: int = 1, statement_id: str = "lemma1_tail") -> list[VerificationReport]:
    """Frequency of ``sum_i log(q/p)(X_i) >= y`` under ``P^n`` against ``exp(-y/2) rho^n``."""
    reps = check_reps(reps)
    p, q = as_table(P), as_table(Q)
    with np.errstate(divide="ignore"):
        llr = np.log(q.weights) - np.log(np.where(p.weights > 0, p.weights, 1.0))
    rho_n = hellinger_affinity(p, q) ** n
    stats = np.array(map_replications(lambda r: _dot_seen(_counts(p, n, seed, r, stream), llr), reps, threads))
    return [_frequency_report(statement_id, f"tail_frequency[y={y:g}]", stats >= y, math.exp(-y / 2) * rho_n,
                              seed, y=float(y), rho_n=rho_n) for y in y_grid]


# -- countable toy model ------------------------------------------------------


def verify_toy_concentration(sc: Scenario, epsilon: float, delta: float, reps: int, seed: int, stream: int = 0,
                             threads: int = 1, statement_id: str = "prop1_toy") -> VerificationReport:
    """Frequency of ``posterior(B(s, k/sqrt n)) >= 1 - delta`` under ``P_s`` against ``1 - epsilon``."""
    reps = check_reps(reps)
    fam, s, n = sc.family, sc.s, sc.n
    N = bounds.shell_counts(fam, s, n)
    nu_s = float(sc.prior.weights[s])
    k = bounds.toy_k(N, epsilon, delta, nu_s)
    radius = k / math.sqrt(n)

    def good(r):
        data = sample_iid(fam.densities[s], n, seed, r, stream)
        return posterior_ball_mass(compute_posterior(sc.prior, fam, data), fam, s, radius) >= 1.0 - delta

    hits = map_replications(good, reps, threads)
    return _frequency_report(statement_id, "ball_mass_frequency", hits, 1.0 - epsilon, seed, kind="lower", k=k,
                             radius=radius, shell_counts=list(N), threshold=epsilon * math.sqrt(delta * nu_s))


# -- concentration under the ball mixture -------------------------------------


def verify_theorem1(sc: Scenario, plan: bounds.ConcentrationPlan, reps: int, seed: int, stream: int = 0,
                    threads: int = 1, statement_id: str = "thm1_concentration") -> VerificationReport:
    """Frequency, under ``P_B(J1)``, of some ``j <= J`` with posterior mass of ``B(j)`` below its threshold."""
    reps = check_reps(reps)
    fam, s, n = sc.family, sc.s, sc.n
    D, profile = sc.dimension_table, sc.profile(plan.gamma)
    if plan.J1 is None or not (1 <= plan.J <= plan.J1 - 2) or not bounds.pair_admissible(
            n, plan.gamma, plan.J1, plan.J, D, profile):
        raise PreconditionError(f"plan (J1, J)=({plan.J1}, {plan.J}) is not admissible at n={n}")
    mix = RestrictedMixture.ball(sc.prior, fam, s, 2.0**-plan.J1)
    thresholds, failure = bounds.theorem1_bound_curve(n, plan.J)
    masks = [fam.distances[s] <= 2.0**-j + BALL_TOL for j in range(plan.J + 1)]
    thr = np.array([thresholds[j] for j in range(plan.J + 1)])

    def bad(r):
        _, data = sample_from_restricted_mixture(mix, fam, n, seed, r, stream)
        w = compute_posterior(sc.prior, fam, data).weights
        return bool(np.any(np.array([math.fsum(w[m]) for m in masks]) < thr))

    hits = map_replications(bad, reps, threads)
    return _frequency_report(statement_id, "bad_event_frequency", hits, failure, seed, J1=plan.J1, J=plan.J)


# -- near-true model ----------------------------------------------------------


def verify_theorem2(sc: Scenario, c: float, reps: int, seed: int, gamma: float | None = None, stream: int = 0,
                    threads: int = 1, statement_id: str = "thm2_truemodel") -> VerificationReport:
    """Frequency under ``P^n`` of the concentration event for every listed level ``k >= J2(c)``."""
    fam, s, n = sc.family, sc.s, sc.n
    gamma = sc.gamma if gamma is None else float(gamma)
    profile = sc.profile(gamma)
    beta_bar, D_bar = profile.beta_bar, sc.dimension_table.sup
    kappa = sc.truth.kappa(n)
    if not kappa < 0.5:
        raise HypothesisError(f"kappa must lie in [0, 1/2), got {kappa!r}")
    if not bounds.truemodel_n_gate(n, c, gamma, beta_bar, D_bar):
        raise InfeasibleError(f"near-true-model sample-size gate false at n={n}, c={c}, gamma={gamma}")
    j2 = bounds.J2(c, gamma, beta_bar, D_bar)
    curve = bounds.theorem2_bound_curve(n, c, kappa, j2)
    details = {"J2": j2, "kappa": kappa, "c": c, "gamma": gamma, "levels": sorted(curve.radii)}
    target = 1.0 - curve.budget
    if curve.vacuous:
        return VerificationReport(statement_id, "event_frequency", 0, math.nan, target, 0.0, True, seed, "lower",
                                  vacuous=True, details=details)
    check_reps(reps)
    masks = [fam.distances[s] <= curve.radii[k] + BALL_TOL for k in sorted(curve.radii)]
    thr = np.array([curve.thresholds[k] for k in sorted(curve.radii)])

    def good(r):
        data = sample_iid(sc.truth.density, n, seed, r, stream)
        w = compute_posterior(sc.prior, fam, data).weights
        return bool(np.all(np.array([math.fsum(w[m]) for m in masks]) >= thr))

    hits = map_replications(good, reps, threads)
    return _frequency_report(statement_id, "event_frequency", hits, target, seed, kind="lower", **details)


# -- Bayes estimator risk -----------------------------------------------------


def verify_theorem3(sc: Scenario, J1: int, reps: int, seed: int, loss: LossSpec | None = None, stream: int = 0,
                    threads: int = 1, statement_id: str = "thm3_risk") -> VerificationReport:
    """Empirical risk ``E h^2(u, s)`` of the Bayes estimator and the ratio to ``Delta^2 (4^-J1 + K_n)``.

    No value of the universal constant is available, so the report's
    ``passed`` flag only says that the ratio is finite.
    """
    reps = check_reps(reps)
    loss = loss or sc.loss
    if loss is None:
        raise PreconditionError("a loss is required")
    fam, s, n = sc.family, sc.s, sc.n
    kappa_gate = bounds.check_risk_hypotheses(n, J1, sc.dimension_table, sc.profile(), sc.gamma, loss)
    kn = bounds.Kn(sc.prior, fam, sc.truth, s, J1)
    if math.isinf(kn):
        raise PreconditionError("K_n is infinite")
    Delta = bounds.delta_constant(loss)
    h_sp = sc.truth.kappa_over_sqrt2n
    terms = bounds.theorem3_risk_terms(J1, kn, Delta, h_sp)
    to_truth = fam.distances_to(sc.truth.density) ** 2

    def estimate(r):
        data = sample_iid(sc.truth.density, n, seed, r, stream)
        return bayes_point_estimate(compute_posterior(sc.prior, fam, data), fam, loss)

    u = np.array(map_replications(estimate, reps, threads))
    risk = fam.distances[u, s] ** 2
    mean = float(np.mean(risk))
    c_hat = mean / terms.bracket
    slack = 3.0 * float(np.std(risk)) / math.sqrt(reps)
    return VerificationReport(statement_id, "mean_h2_estimate_center", reps, mean, terms.bracket, slack,
                              math.isfinite(c_hat), seed, "empirical",
                              details={"C_hat": c_hat, "Kn": kn, "Delta": Delta, "J1": J1, "kappa_gate": kappa_gate,
                                       "mean_h2_estimate_truth": float(np.mean(to_truth[u])),
                                       "misspecification": terms.misspecification,
                                       "estimate_counts": np.bincount(u, minlength=fam.size).tolist()})


# -- minimizers of expected loss ----------------------------------------------


def check_concentration(dist: np.ndarray, Q: np.ndarray, s: int, a: float, B: float, J: int) -> list:
    """Levels ``0 <= j < J`` where ``Q[B(s, 2^(j-J))] < 1 - a exp(-B 4^j)``."""
    bad = []
    for j in range(J):
        mass = math.fsum(Q[dist[s] <= 2.0 ** (j - J) + BALL_TOL])
        if mass < 1.0 - a * math.exp(-B * 4.0**j) - EXACT_RTOL:
            bad.append(j)
    return bad


def verify_bayesconv(dist: np.ndarray, Q: np.ndarray, s: int, a: float, B: float, loss: LossSpec, J: int,
                     statement_id: str = "prop3_minimizer", label: str = "") -> VerificationReport:
    """Exhaustive minimizer of ``u -> E_Q w(d(t, u))`` against the radius bound and ``Q[B(s, 2^-J)] >= 4/5``."""
    dist = np.asarray(dist, dtype=float)
    Q = np.asarray(Q, dtype=float)
    radius = bounds.bayesconv_radius(a, B, loss, J)
    bad = check_concentration(dist, Q, s, a, B, J)
    if bad:
        raise HypothesisError(f"concentration hypothesis fails at levels {bad}")
    u = argmin_expected_loss(dist, Q, loss)
    du = float(dist[u, s])
    inner = math.fsum(Q[dist[s] <= 2.0**-J + BALL_TOL])
    passed = decide("exact", du, radius, 0.0) and inner >= 0.8 - EXACT_RTOL
    return VerificationReport(statement_id, f"minimizer_distance{label}", 0, du, radius, 0.0, passed, None, "exact",
                              details={"minimizer": u, "inner_mass": inner, "a": a, "B": B, "J": J,
                                       "size": int(dist.shape[0])})


def engineered_space(seed: int, case: int, size: int, J: int, a: float, B: float, layout: str = "ray"):
    """A finite metric space of diameter at most 1 with ``Q`` meeting the concentration hypothesis.

    Points sit on ``[0, 1]`` (``ray``) or in a 60 degree sector of the unit
    disk (``sector``) with ``s`` at the origin. The mass outside
    ``B(s, 2^(j-J))`` is a random fraction of ``a exp(-B 4^j)``, spread over
    the points of the shell ``(2^(j-1-J), 2^(j-J)]``; the rest lies in
    ``B(s, 2^-J)``. A few points carry no mass. Returns ``(dist, Q, s)``.
    """
    if size < 2 * J + 5:
        raise DomainError("size too small for the requested number of shells")
    gen = rng.stream(seed, case, 0)
    # shell 0 is the inner ball, shell j covers (2^(j-1-J), 2^(j-J)]
    per_shell = np.full(J + 1, 2)
    extra = size - 1 - per_shell.sum() - 2
    per_shell += np.bincount(gen.integers(0, J + 1, extra), minlength=J + 1)
    radii, shell = [0.0], [0]
    for j, m in enumerate(per_shell):
        lo, hi = (0.0, 2.0**-J) if j == 0 else (2.0 ** (j - 1 - J), 2.0 ** (j - J))
        radii += (lo + (hi - lo) * (1.0 - gen.random(m))).tolist()
        shell += [j] * int(m)
    # two massless candidates anywhere in the space
    radii += gen.random(2).tolist()
    shell += [-1, -1]
    radii = np.array(radii)
    shell = np.array(shell)
    if layout == "ray":
        pts = radii[:, None]
    elif layout == "sector":
        ang = gen.random(radii.size) * (math.pi / 3)
        ang[0] = 0.0
        pts = np.column_stack([radii * np.cos(ang), radii * np.sin(ang)])
    else:
        raise DomainError(f"unknown layout {layout!r}")
    dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    outside = np.minimum.accumulate(a * np.exp(-B * 4.0 ** np.arange(J)) * (0.5 + 0.5 * gen.random(J)))
    outside = np.append(outside, 0.0)
    shell_mass = np.concatenate([[1.0 - outside[0]], outside[:-1] - outside[1:]])
    Q = np.zeros(radii.size)
    for j in range(J + 1):
        idx = np.flatnonzero(shell == j)
        Q[idx] = shell_mass[j] * gen.dirichlet(np.ones(idx.size))
    return dist, Q, 0


# -- ball mixtures ------------------------------------------------------------


def enumerate_sequence_logliks(log_f: np.ndarray, n: int) -> np.ndarray:
    """``sum_i log f_t(x_i)`` for every ``t`` (rows) and every sequence in ``X^n`` (columns, lexicographic)."""
    log_f = np.asarray(log_f, dtype=float)
    m = log_f.shape[1]
    if m**n > ENUMERATION_LIMIT:
        raise DomainError(f"{m}^{n} sequences exceed the enumeration limit")
    out = np.zeros((log_f.shape[0], 1))
    for _ in range(n):
        out = (out[:, :, None] + log_f[:, None, :]).reshape(log_f.shape[0], -1)
    return out


def _log_mix(weights: np.ndarray, ll: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        terms = np.log(weights)[:, None] + ll
    top = np.max(terms, axis=0)
    safe = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(invalid="ignore"):
        return np.where(np.isfinite(top), safe + np.log(np.sum(np.exp(terms - safe), axis=0)), -np.inf)


def ball_distance(family: ModelFamily, b1: np.ndarray, b2: np.ndarray) -> float:
    """``min h(t, u)`` over ``t`` in ``b1`` and ``u`` in ``b2``."""
    return float(np.min(family.distances[np.ix_(b1, b2)]))


def _ball_pair(family, prior, c1, r1, c2, r2):
    m1 = RestrictedMixture.ball(prior, family, c1, r1)
    m2 = RestrictedMixture.ball(prior, family, c2, r2)
    b1, b2 = family.ball(c1, r1), family.ball(c2, r2)
    return m1, m2, ball_distance(family, b1, b2)


def verify_lecam(family: ModelFamily, prior: Prior, c1: int, r1: float, c2: int, r2: float, n: int,
                 y_grid: Sequence[float], reps: int | None = None, seed: int | None = None, exact: bool | None = None,
                 stream: int = 0, threads: int = 1,
                 statement_id: str = "eq18_corollary") -> list[VerificationReport]:
    """Tail of ``log(g_B2 / g_B1)`` under ``P_B1`` against ``exp(-y/2 - n h^2(B1, B2))``.

    The exact path enumerates every sequence of ``X^n`` and compares without
    slack; it runs by default on spaces with at most 12 outcomes and
    ``n <= 6``. The Monte Carlo path runs when ``reps`` is given.
    """
    m1, m2, hB = _ball_pair(family, prior, c1, r1, c2, r2)
    if not hB > 0:
        raise HypothesisError("the balls overlap: h(B1, B2) = 0")
    bounds_y = {float(y): math.exp(-y / 2 - n * hB * hB) for y in y_grid}
    reports = []
    if exact is None:
        exact = family.sample_space_size <= 12 and n <= 6
    if exact:
        ll = enumerate_sequence_logliks(family.log_densities, n)
        lg1 = _log_mix(m1.weights, ll[m1.indices])
        lg2 = _log_mix(m2.weights, ll[m2.indices])
        prob1 = np.exp(lg1)
        with np.errstate(invalid="ignore"):
            stat = np.where(np.isfinite(lg1), lg2 - lg1, -np.inf)
        rho = math.fsum(np.exp(0.5 * (lg1 + lg2)))
        for y, b in bounds_y.items():
            tail = math.fsum(prob1[stat >= y])
            mid = math.exp(-y / 2) * rho
            ok = decide("exact", tail, mid, 0.0) and decide("exact", mid, b, 0.0)
            reports.append(VerificationReport(statement_id, f"exact_tail[y={y:g}]", 0, tail, b, 0.0, ok, seed,
                                              "exact", details={"y": y, "h_balls": hB, "rho_mixtures": rho,
                                                                "affinity_bound": mid,
                                                                "sequences": int(prob1.size)}))
    if reps is not None:
        reps = check_reps(reps)
        ld = family.log_densities

        def stat_mc(r):
            _, data = sample_from_restricted_mixture(m1, family, n, seed, r, stream)
            counts = data.counts
            seen = counts > 0
            ll_all = ld[:, seen] @ counts[seen].astype(float)
            return log_mixture_from_loglik(m2, ll_all[m2.indices]) - log_mixture_from_loglik(m1, ll_all[m1.indices])

        stats = np.array(map_replications(stat_mc, reps, threads))
        for y, b in bounds_y.items():
            reports.append(_frequency_report(statement_id, f"tail_frequency[y={y:g}]", stats >= y, b, seed, y=y,
                                             h_balls=hB))
    return reports


def verify_affinity_product(family: ModelFamily, prior: Prior, c1: int, r1: float, c2: int, r2: float, n: int,
                            statement_id: str = "prop5_lecam") -> VerificationReport:
    """Exact ``rho(R1, R2)`` of the two ball mixtures of products against ``[1 - (h - r1 - r2)^2]^n``."""
    h = float(family.distances[c1, c2])
    bound = bounds.lecam_affinity_bound(h, r1, r2, n)
    m1 = RestrictedMixture.ball(prior, family, c1, r1)
    m2 = RestrictedMixture.ball(prior, family, c2, r2)
    ll = enumerate_sequence_logliks(family.log_densities, n)
    lg1 = _log_mix(m1.weights, ll[m1.indices])
    lg2 = _log_mix(m2.weights, ll[m2.indices])
    rho = math.fsum(np.exp(0.5 * (lg1 + lg2)))
    return VerificationReport(statement_id, f"mixture_affinity[n={n}]", 0, rho, bound, 0.0,
                              decide("exact", rho, bound, 0.0), None, "exact",
                              details={"h_centers": h, "r1": r1, "r2": r2})


# -- exponential moment bound -------------------------------------------------


def geometric_tail_instance(b: float, size: int) -> tuple[np.ndarray, np.ndarray]:
    """``T = 0, 1, ..., size - 1`` with ``Q[T >= k] = exp(-b k)`` exactly; the last atom takes the tail."""
    k = np.arange(size, dtype=float)
    Q = np.exp(-b * k) * (-math.expm1(-b))
    Q[-1] = math.exp(-b * (size - 1))
    return k, Q / math.fsum(Q)


def tilt(Q: np.ndarray, T: np.ndarray, lam: float) -> np.ndarray:
    """``R`` proportional to ``Q exp(lam T)``."""
    logw = np.log(Q) + lam * T
    w = np.exp(logw - logw.max())
    return w / math.fsum(w)


def tail_certificate_violations(T: np.ndarray, Q: np.ndarray, z0: float, a: float, b: float) -> list:
    """Atoms ``z >= z0`` with ``Q[T >= z] > a exp(-b z)``; the tail is a step function, so atoms suffice."""
    bad = []
    for z in np.unique(T[T >= z0]):
        tail = math.fsum(Q[T >= z])
        if tail > a * math.exp(-b * z) * (1 + EXACT_RTOL):
            bad.append(float(z))
    return bad


def verify_barron(T, Q, R, z0: float, a: float, b: float, statement_id: str = "prop4_barron",
                  label: str = "") -> VerificationReport:
    """Exact ``E_R[T]`` against ``z0 + (1 + A + sqrt(2A)) / b``."""
    T = np.asarray(T, dtype=float)
    Qt, Rt = as_table(Q), as_table(R)
    bad = tail_certificate_violations(T, Qt.weights, z0, a, b)
    if bad:
        raise HypothesisError(f"tail certificate Q[T >= z] <= a exp(-b z) fails at z={bad[:5]}")
    K = kl_divergence(Rt, Qt)
    if math.isinf(K):
        raise PreconditionError("K(R, Q) is infinite")
    mean = math.fsum(Rt.weights * T)
    bound = bounds.barron_bound(z0, a, b, K)
    return VerificationReport(statement_id, f"mean_T{label}", 0, mean, bound, 0.0, decide("exact", mean, bound, 0.0),
                              None, "exact", details={"K": K, "z0": z0, "a": a, "b": b})


# -- deterministic inequalities -----------------------------------------------


def random_table_pairs(count: int, support: int, seed: int, stream: int = 0, zeros: bool = False):
    """``count`` pairs of random tables; with ``zeros`` some entries of ``p`` are set to zero."""
    gen = rng.stream(seed, 0, stream)
    alpha = gen.uniform(0.2, 3.0, size=(count, 2, 1))
    x = gen.gamma(np.broadcast_to(alpha, (count, 2, support)))
    if zeros:
        x[:, 0, :] *= gen.random((count, support)) > 0.3
        x[np.sum(x[:, 0, :], axis=1) == 0, 0, 0] = 1.0
    x /= x.sum(axis=2, keepdims=True)
    return [(x[i, 0], x[i, 1]) for i in range(count)]


def verify_kl_sandwich(count: int = 1000, support: int = 5, seed: int = 0, stream: int = 0,
                       statement_id: str = "lemma4_kl_sandwich") -> VerificationReport:
    """Share of random pairs violating ``K >= -2 log rho >= 2 h^2`` or ``2 <= K/h^2 <= cap(M)``."""
    bad = 0
    worst = 0.0
    for p, q in random_table_pairs(count, support, seed, stream):
        rep = check_kl_hellinger_sandwich(p, q)
        bad += not rep.ok
        if math.isfinite(rep.ratio):
            worst = max(worst, rep.ratio / rep.kl_ratio_cap)
    spots = {"cap_at_0": kl_ratio_bound(0.0), "cap_at_4": kl_ratio_bound(4.0)}
    return VerificationReport(statement_id, "violation_share", count, bad / count, 0.0, 0.0, bad == 0, seed, "exact",
                              details={"max_ratio_over_cap": worst, **spots})


def verify_mixture_affinity(family: ModelFamily, prior: Prior, radii: Sequence[float],
                            statement_id: str = "lemma3_mixture") -> VerificationReport:
    """For every center and radius, the prior mixture over the ball has affinity ``>= 1 - r^2`` with the center."""
    checked = bad = 0
    slack = math.inf
    for c in range(family.size):
        for r in radii:
            idx = family.ball(c, r)
            w = prior.weights[idx]
            if math.fsum(w) <= 0:
                continue
            try:
                rho = mixture_affinity(family.densities[c], family.densities[idx], w / math.fsum(w), r)
                slack = min(slack, rho - (1.0 - r * r))
            except BoundViolation:
                bad += 1
            except PreconditionError:  # pragma: no cover - ball membership uses the same tolerance
                continue
            checked += 1
    return VerificationReport(statement_id, "violation_count", checked, float(bad), 0.0, 0.0, bad == 0, None, "exact",
                              details={"cases": checked, "min_margin": slack})
