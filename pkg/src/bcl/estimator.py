"""Loss functions ``w`` of the Hellinger distance and Bayes point estimation.

A loss carries a certificate ``(delta, a_prime, B_prime)`` for the two-sided
growth condition

    x^delta w(z) <= w(x z) <= a_prime exp(B_prime x^2) w(z),
    0 < z <= 1/2, 2 <= x <= 1/z,

with ``w(0) = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import DomainError
from .models import ModelFamily
from .posterior import Posterior


@dataclass(frozen=True)
class LossSpec:
    """A loss ``w`` on ``[0, 1]`` together with its growth certificate."""

    kind: str
    delta: float
    a_prime: float
    B_prime: float
    theta: float | None = None
    func: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("power", "exponential", "custom"):
            raise DomainError(f"unknown loss kind {self.kind!r}")
        if not (self.delta > 0 and self.a_prime > 0 and self.B_prime > 0):
            raise DomainError("delta, a_prime and B_prime must be positive")
        if self.kind == "exponential" and not (self.theta and self.theta > 0):
            raise DomainError("exponential loss needs theta > 0")
        if self.kind == "custom" and self.func is None:
            raise DomainError("custom loss needs func")

    def w(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "power":
            return z**self.delta
        if self.kind == "exponential":
            return np.expm1(self.theta * z**self.delta)
        return np.asarray(self.func(z), dtype=float)

    def log_w(self, z):
        z = np.asarray(z, dtype=float)
        with np.errstate(divide="ignore"):
            if self.kind == "power":
                return self.delta * np.log(z)
            return np.log(self.w(z))

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "delta": self.delta, "a_prime": self.a_prime, "B_prime": self.B_prime}
        if self.theta is not None:
            d["theta"] = self.theta
        return d


def make_power_loss(delta: float, B_prime: float) -> LossSpec:
    """``w(z) = z^delta`` with ``a' = sup_{x >= 2} exp(delta log x - B' x^2)`` in closed form."""
    if not (delta > 0 and B_prime > 0):
        raise DomainError("delta and B_prime must be positive")
    x_star = math.sqrt(delta / (2.0 * B_prime))
    x = x_star if x_star > 2.0 else 2.0
    a_prime = math.exp(delta * math.log(x) - B_prime * x * x)
    return LossSpec("power", delta, a_prime, B_prime)


def make_exp_loss(theta: float, delta: float) -> LossSpec:
    """``w(z) = exp(theta z^delta) - 1`` certified with ``B' = max(theta, 1)`` and ``a' = 1/B'``."""
    if not theta > 0:
        raise DomainError("theta must be positive")
    if not 0 < delta <= 2:
        raise DomainError(f"delta must lie in (0, 2] for the exponential loss, got {delta!r}")
    B_prime = max(theta, 1.0)
    return LossSpec("exponential", delta, 1.0 / B_prime, B_prime, theta=theta)


def make_loss(config: dict) -> LossSpec:
    kind = config.get("kind")
    if kind == "power":
        return make_power_loss(config["delta"], config["B_prime"])
    if kind == "exponential":
        return make_exp_loss(config["theta"], config["delta"])
    raise DomainError(f"unknown loss kind {kind!r}")


class LossViolation(NamedTuple):
    side: str
    z: float
    x: float
    lhs: float
    rhs: float


def verify_loss_condition(loss: LossSpec, grid_size: int = 10_000, x_points: int = 64,
                          rel_slack: float = 1e-12) -> list[LossViolation]:
    """Scan the growth condition on a grid; return every violation beyond ``rel_slack``.

    ``z`` runs over ``grid_size`` geometrically spaced points of
    ``[1/(2 grid_size), 1/2]``; for each ``z``, ``x`` takes ``x_points``
    geometric values in ``[2, 1/z]`` including both ends. Comparisons are made
    in log space so ``exp(B' x^2)`` never overflows. ``w(0) = 0`` and
    monotonicity on ``[0, 1]`` are checked as well.
    """
    if grid_size < 100:
        raise DomainError("grid_size must be at least 100")
    out: list[LossViolation] = []
    w0 = float(loss.w(np.array([0.0]))[0])
    if w0 != 0.0:
        out.append(LossViolation("w(0)", 0.0, 0.0, w0, 0.0))
    mono = loss.w(np.linspace(0.0, 1.0, grid_size))
    if np.any(np.diff(mono) < -rel_slack * np.abs(mono[1:])):
        k = int(np.argmax(np.diff(mono) < 0))
        out.append(LossViolation("monotone", float(k / (grid_size - 1)), 0.0, float(mono[k]), float(mono[k + 1])))
    z = np.geomspace(0.5 / grid_size, 0.5, grid_size)
    t = np.linspace(0.0, 1.0, x_points)
    # x = 2 (1/(2z))^t spans [2, 1/z]
    x = 2.0 * (0.5 / z[:, None]) ** t[None, :]
    x = np.minimum(x, 1.0 / z[:, None])
    zz = np.broadcast_to(z[:, None], x.shape)
    lw_z = loss.log_w(zz)
    lw_xz = loss.log_w(np.minimum(x * zz, 1.0))
    lower_lhs = loss.delta * np.log(x) + lw_z
    upper_rhs = math.log(loss.a_prime) + loss.B_prime * x * x + lw_z
    slack = math.log1p(rel_slack)
    for side, lhs, rhs in (("lower", lower_lhs, lw_xz), ("upper", lw_xz, upper_rhs)):
        bad = lhs > rhs + slack
        for i, j in zip(*np.nonzero(bad)):
            out.append(LossViolation(side, float(zz[i, j]), float(x[i, j]), float(lhs[i, j]), float(rhs[i, j])))
    return out


def expected_losses(dist: np.ndarray, weights: np.ndarray, loss: LossSpec, candidates=None) -> np.ndarray:
    """``sum_t weights[t] w(dist[u, t])`` for every candidate ``u`` (rows of ``dist``)."""
    dist = np.asarray(dist, dtype=float)
    rows = dist if candidates is None else dist[np.asarray(candidates, dtype=np.int64)]
    return loss.w(rows) @ np.asarray(weights, dtype=float)


def argmin_expected_loss(dist: np.ndarray, weights: np.ndarray, loss: LossSpec,
                         candidates: Sequence[int] | None = None) -> int:
    """Minimizer of the expected loss over ``candidates`` on a finite metric space; lowest index wins ties."""
    cand = np.arange(dist.shape[0]) if candidates is None else np.unique(np.asarray(candidates, dtype=np.int64))
    if cand.size == 0:
        raise DomainError("candidate set is empty")
    vals = expected_losses(dist, weights, loss, cand)
    return int(cand[int(np.argmin(vals))])


def posterior_expected_loss(post: Posterior, family: ModelFamily, u: int, loss: LossSpec) -> float:
    """``sum_t post(t) w(h(u, t))``."""
    return float(loss.w(family.distances[u]) @ post.weights)


def bayes_point_estimate(post: Posterior, family: ModelFamily, loss: LossSpec,
                         candidates: Sequence[int] | None = None) -> int:
    """Index minimizing the posterior expected loss, over all indices by default."""
    return argmin_expected_loss(family.distances, post.weights, loss, candidates)
