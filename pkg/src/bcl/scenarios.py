"""Scenario configuration: parsing, validation and the fitted objects a run needs."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .errors import BCLError, ConfigError
from .estimator import LossSpec, make_loss
from .geometry import DimensionTable, PriorMassProfile, dyadic_grid, estimate_dimension_function, estimate_prior_mass_profile
from .models import ModelFamily, Prior, TrueDistribution, build_grid_family

MIN_REPS = 10_000
DEFAULT_SEED = 20240917


@dataclass(frozen=True)
class VerificationRequest:
    id: str
    reps: int | None = None
    params: dict = field(default_factory=dict)


@dataclass(eq=False)
class Scenario:
    """A fully built scenario: family, prior, truth and diagnostics settings."""

    name: str
    family: ModelFamily
    prior: Prior
    truth: TrueDistribution
    n: int
    gamma: float = 1.5
    loss: LossSpec | None = None
    x_grid: tuple = tuple(dyadic_grid(6).tolist())
    j_max: int = 8
    seed: int = DEFAULT_SEED
    reps: int = MIN_REPS
    verifications: tuple = ()
    output_dir: str | None = None
    _profiles: dict = field(default_factory=dict, repr=False)

    @property
    def s(self) -> int:
        return self.family.center_index

    @cached_property
    def dimension_table(self) -> DimensionTable:
        return estimate_dimension_function(self.family, self.x_grid)

    def profile(self, gamma: float | None = None) -> PriorMassProfile:
        g = self.gamma if gamma is None else float(gamma)
        if g not in self._profiles:
            self._profiles[g] = estimate_prior_mass_profile(self.prior, self.family, self.s, self.j_max, g)
        return self._profiles[g]

    def with_n(self, n: int) -> Scenario:
        """Copy with another sample size; fitted diagnostics are shared."""
        other = Scenario(self.name, self.family, self.prior, self.truth, int(n), self.gamma, self.loss,
                         self.x_grid, self.j_max, self.seed, self.reps, self.verifications, self.output_dir,
                         self._profiles)
        if "dimension_table" in self.__dict__:
            other.__dict__["dimension_table"] = self.dimension_table
        return other


def _require(m: Mapping, key: str, where: str):
    if key not in m:
        raise ConfigError(f"{where}: missing required field '{key}'")
    return m[key]


def _build_prior(spec: Mapping | None, size: int) -> Prior:
    spec = {"kind": "uniform"} if spec is None else spec
    kind = spec.get("kind", "uniform")
    if kind == "uniform":
        return Prior.uniform(size)
    if kind == "point_mass":
        idx = _require(spec, "index", "prior")
        if not (isinstance(idx, int) and 0 <= idx < size):
            raise ConfigError(f"prior.index: {idx!r} is not a valid index for a family of size {size}")
        return Prior.point_mass(size, idx)
    if kind == "weights":
        w = np.asarray(_require(spec, "weights", "prior"), dtype=float)
        if w.shape != (size,):
            raise ConfigError(f"prior.weights: expected {size} weights, got {w.size}")
        return Prior(w / math.fsum(w))
    raise ConfigError(f"prior.kind: unknown prior kind {kind!r}")


def _build_truth(spec: Mapping | None, family: ModelFamily) -> TrueDistribution:
    spec = {"kind": "in_family", "index": family.center_index} if spec is None else spec
    kind = spec.get("kind", "in_family")
    if kind == "in_family":
        idx = spec.get("index", family.center_index)
        if not (isinstance(idx, int) and 0 <= idx < family.size):
            raise ConfigError(f"truth.index: {idx!r} is not a valid index")
        return TrueDistribution.relative_to(family, family.densities[idx])
    if kind == "density":
        dens = np.asarray(_require(spec, "density", "truth"), dtype=float)
        if dens.shape != (family.sample_space_size,):
            raise ConfigError(f"truth.density: expected {family.sample_space_size} entries")
        return TrueDistribution.relative_to(family, dens)
    raise ConfigError(f"truth.kind: unknown kind {kind!r}")


def build_scenario(cfg: Mapping[str, Any], known_ids=None) -> Scenario:
    """Validate a parsed config mapping and build the :class:`Scenario`."""
    if not isinstance(cfg, Mapping):
        raise ConfigError("config: top level must be an object")
    name = str(cfg.get("name", "scenario"))
    fam_spec = _require(cfg, "family", "config")
    try:
        family = build_grid_family(fam_spec)
    except (BCLError, TypeError, KeyError) as exc:
        raise ConfigError(f"family: {exc}") from None
    try:
        prior = _build_prior(cfg.get("prior"), family.size)
        truth = _build_truth(cfg.get("truth"), family)
    except ConfigError:
        raise
    except BCLError as exc:
        raise ConfigError(f"prior/truth: {exc}") from None
    n = _require(cfg, "n", "config")
    if not (isinstance(n, int) and n >= 1):
        raise ConfigError(f"n: must be a positive integer, got {n!r}")
    gamma = float(cfg.get("gamma", 1.5))
    if not 1.0 <= gamma <= 4.0:
        raise ConfigError(f"gamma: must lie in [1, 4], got {gamma!r}")
    loss = None
    if cfg.get("loss") is not None:
        try:
            loss = make_loss(cfg["loss"])
        except (BCLError, KeyError) as exc:
            raise ConfigError(f"loss: {exc}") from None
    diag = cfg.get("diagnostics", {})
    x_grid = tuple(float(x) for x in diag.get("x_grid", dyadic_grid(int(diag.get("k_max", 6))).tolist()))
    if not x_grid or any(not 0 < x <= 0.25 for x in x_grid):
        raise ConfigError("diagnostics.x_grid: values must lie in (0, 1/4]")
    j_max = int(diag.get("j_max", 8))
    if j_max < 3:
        raise ConfigError("diagnostics.j_max: must be at least 3")
    seed = cfg.get("seed", DEFAULT_SEED)
    if not (isinstance(seed, int) and 0 <= seed < 2**64):
        raise ConfigError(f"seed: must be an unsigned 64-bit integer, got {seed!r}")
    reps = cfg.get("reps", MIN_REPS)
    if not (isinstance(reps, int) and reps >= MIN_REPS):
        raise ConfigError(f"reps: must be an integer >= {MIN_REPS}, got {reps!r}")
    requests = []
    for i, v in enumerate(cfg.get("verifications", [])):
        vid = _require(v, "id", f"verifications[{i}]")
        if known_ids is not None and vid not in known_ids:
            raise ConfigError(f"verifications[{i}].id: unknown statement id {vid!r}")
        r = v.get("reps")
        if r is not None and not (isinstance(r, int) and r >= MIN_REPS):
            raise ConfigError(f"verifications[{i}].reps: must be an integer >= {MIN_REPS}")
        params = v.get("params", {})
        if not isinstance(params, Mapping):
            raise ConfigError(f"verifications[{i}].params: must be an object")
        requests.append(VerificationRequest(vid, r, dict(params)))
    return Scenario(name, family, prior, truth, n, gamma, loss, x_grid, j_max, seed, reps, tuple(requests),
                    cfg.get("output_dir"))


def load_config(path: str | Path) -> dict:
    """Parse a JSON config file; syntax errors are reported with line and column."""
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def load_scenario(path: str | Path, known_ids=None) -> Scenario:
    return build_scenario(load_config(path), known_ids)
