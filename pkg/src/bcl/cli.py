"""Scenario runner: ``bcl --config scenario.json``.

Exit status is 0 when every non-vacuous check passed, 1 when some check
failed, 2 for configuration errors and 3 when a sample-size gate makes the
scenario infeasible.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import bounds
from . import verify as V
from .errors import BCLError, ConfigError, InfeasibleError
from .estimator import make_exp_loss
from .scenarios import DEFAULT_SEED, Scenario, build_scenario, load_config

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_INFEASIBLE = 0, 1, 2, 3


@dataclass(frozen=True)
class Statement:
    id: str
    tag: str
    summary: str
    run: Callable


def _with_n(sc: Scenario, params: dict) -> Scenario:
    return sc.with_n(params["n"]) if "n" in params else sc


def _run_lemma1(sc, params, reps, seed, stream, threads):
    fam, s = sc.family, sc.s
    if "P" in params:
        P, Q = params["P"], params["Q"]
    else:
        others = [t for t in np.argsort(fam.distances[s], kind="stable") if t != s]
        q = params.get("q_index", int(others[0]) if others else s)
        P, Q = fam.densities[params.get("p_index", s)], fam.densities[q]
    return V.verify_tail_inequality(P, Q, params.get("n", sc.n), params.get("y_grid", [-2, -1, 0, 1, 2]), reps, seed,
                                    stream, threads)


def _run_prop1(sc, params, reps, seed, stream, threads):
    return [V.verify_toy_concentration(_with_n(sc, params), params.get("epsilon", 0.1), params.get("delta", 0.1),
                                       reps, seed, stream, threads)]


def _run_thm1(sc, params, reps, seed, stream, threads):
    sc = _with_n(sc, params)
    gamma = params.get("gamma", sc.gamma)
    plan = bounds.make_plan(sc.n, sc.dimension_table, sc.profile(gamma), gamma)
    return [V.verify_theorem1(sc, plan, reps, seed, stream, threads)]


def _run_thm2(sc, params, reps, seed, stream, threads):
    return [V.verify_theorem2(_with_n(sc, params), params.get("c", 0.5), reps, seed, params.get("gamma"), stream,
                              threads)]


def _run_thm3(sc, params, reps, seed, stream, threads):
    return [V.verify_theorem3(_with_n(sc, params), params.get("J1", 3), reps, seed, None, stream, threads)]


def _run_prop3(sc, params, reps, seed, stream, threads):
    loss = sc.loss or make_exp_loss(1.0, 2.0)
    cases, size = params.get("cases", 10), params.get("size", 40)
    worst, ok, count = 0.0, True, 0
    for layout in params.get("layouts", ["ray", "sector"]):
        for J in params.get("J", [1, 2, 3]):
            for case in range(cases):
                B = max(2.0, 4.0 * loss.B_prime + 1.0) + case % 3
                a = 0.2 * math.exp(B) * (0.3 + 0.07 * ((7 * case) % 10))
                dist, Q, s = V.engineered_space(seed, count, size, J, a, B, layout)
                rep = V.verify_bayesconv(dist, Q, s, a, B, loss, J)
                worst = max(worst, rep.empirical_frequency / rep.theoretical_bound)
                ok = ok and rep.passed
                count += 1
    return [V.VerificationReport("prop3_minimizer", "max_distance_over_radius", count, worst, 1.0, 0.0, ok, seed,
                                 "exact", details={"cases": count, "size": size, "loss": loss.to_dict()})]


def _run_prop4(sc, params, reps, seed, stream, threads):
    b, size = params.get("b", 1.0), params.get("size", 60)
    T, Q = V.geometric_tail_instance(b, size)
    return [V.verify_barron(T, Q, V.tilt(Q, T, lam * b), 0.0, 1.0, b, label=f"[tilt={lam:g}]")
            for lam in params.get("tilts", [0.0, 0.25, 0.5])]


def _balls(sc, params):
    s = sc.s
    far = int(np.argmax(sc.family.distances[s]))
    return (params.get("c1", s), params.get("r1", 0.0), params.get("c2", far), params.get("r2", 0.0))


def _run_prop5(sc, params, reps, seed, stream, threads):
    c1, r1, c2, r2 = _balls(sc, params)
    return [V.verify_affinity_product(sc.family, sc.prior, c1, r1, c2, r2, params.get("n", 4))]


def _run_eq18(sc, params, reps, seed, stream, threads):
    c1, r1, c2, r2 = _balls(sc, params)
    y_grid = params.get("y_grid", np.linspace(-5.0, 5.0, 21).tolist())
    return V.verify_lecam(sc.family, sc.prior, c1, r1, c2, r2, params.get("n", 4), y_grid,
                          reps if params.get("monte_carlo", True) else None, seed, params.get("exact"), stream,
                          threads)


def _run_lemma4(sc, params, reps, seed, stream, threads):
    return [V.verify_kl_sandwich(params.get("pairs", 1000), params.get("support", 5), seed, stream)]


def _run_lemma3(sc, params, reps, seed, stream, threads):
    return [V.verify_mixture_affinity(sc.family, sc.prior, params.get("radii", [0.125, 0.25, 0.5]))]


STATEMENTS = {st.id: st for st in [
    Statement("lemma1_tail", "P[sum log(q/p) >= y] <= exp(-y/2) rho^n",
              "likelihood-ratio tail under the product law", _run_lemma1),
    Statement("prop1_toy", "sum_{l>=k} N_l exp(-l^2) <= eps sqrt(delta nu(s))",
              "posterior concentration in the shell model", _run_prop1),
    Statement("thm1_concentration", "P_B(J1)[bad] <= 1.05 exp(-4^-(J+3) n)",
              "posterior concentration under the ball mixture", _run_thm1),
    Statement("thm2_truemodel", "mass B(s, 2^k c/sqrt n) >= 1 - 1.05 exp(-4^(k-4) c^2) w.p. >= 1-(kappa+c)",
              "posterior concentration near the true model", _run_thm2),
    Statement("thm3_risk", "E h^2(u, s) <= C Delta^2 (4^-J1 + K_n)",
              "risk of the Bayes estimator (ratio reported)", _run_thm3),
    Statement("prop3_minimizer", "d(u, s) <= ([1.25 (1 + 0.4 a a')]^(1/delta) + 1) 2^-J",
              "minimizers of expected loss under concentration", _run_prop3),
    Statement("prop4_barron", "E_R T <= z0 + (1 + A + sqrt(2A))/b",
              "exponential-tail moment bound under change of measure", _run_prop4),
    Statement("prop5_lecam", "rho(R1, R2) <= [1 - (h - r1 - r2)^2]^n",
              "affinity of ball mixtures of products", _run_prop5),
    Statement("lemma4_kl_sandwich", "2 h^2 <= -2 log rho <= K <= cap(M) h^2",
              "Kullback-Hellinger comparison", _run_lemma4),
    Statement("lemma3_mixture", "rho(P, P_lambda) >= 1 - r^2",
              "affinity of a mixture supported in a ball", _run_lemma3),
    Statement("eq18_corollary", "P_B1[log(g_B2/g_B1) >= y] <= exp(-y/2 - n h^2(B1, B2))",
              "likelihood-ratio tail between ball mixtures", _run_eq18),
]}
STATEMENT_IDS = tuple(STATEMENTS)


def list_statements() -> list[tuple[str, str, str]]:
    return [(st.id, st.tag, st.summary) for st in STATEMENTS.values()]


# -- output -------------------------------------------------------------------


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def diagnostics_rows(sc: Scenario, gammas) -> list:
    rows = [(sc.name, "D", x, d) for x, d in sc.dimension_table.rows()]
    for g in gammas:
        for j, m, beta in sc.profile(g).rows():
            rows.append((sc.name, f"ball_mass[gamma={g:g}]", j, m))
            if beta is not None:
                rows.append((sc.name, f"beta[gamma={g:g}]", j, beta))
    return rows


def build_plan(sc: Scenario) -> tuple[bounds.ConcentrationPlan, InfeasibleError | None]:
    """Concentration plan plus the constants of every requested statement that applies.

    When the concentration gate fails the plan carries only the required
    sample size and the error is returned alongside it.
    """
    infeasible = None
    try:
        plan = bounds.make_plan(sc.n, sc.dimension_table, sc.profile(), sc.gamma)
    except InfeasibleError as exc:
        infeasible = exc
        plan = bounds.ConcentrationPlan(sc.n, sc.gamma,
                                        gate_n=bounds.concentration_gate_n(sc.n, sc.dimension_table, sc.profile(), sc.gamma))
    plan.kappa = sc.truth.kappa(sc.n)
    if sc.loss is not None:
        plan.Delta = bounds.delta_constant(sc.loss)
        plan.risk_J1 = next((r.params.get("J1", 3) for r in sc.verifications if r.id == "thm3_risk"), plan.J1 or 3)
        plan.Kn = bounds.Kn(sc.prior, sc.family, sc.truth, sc.s, plan.risk_J1)
    for req in sc.verifications:
        if req.id == "thm2_truemodel":
            g = req.params.get("gamma", sc.gamma)
            prof = sc.profile(g)
            plan.c = req.params.get("c", 0.5)
            plan.J2_of_c = bounds.J2(plan.c, g, prof.beta_bar, sc.dimension_table.sup)
        elif req.id == "prop1_toy":
            N = bounds.shell_counts(sc.family, sc.s, sc.n)
            plan.toy_k = bounds.toy_k(N, req.params.get("epsilon", 0.1), req.params.get("delta", 0.1),
                                      float(sc.prior.weights[sc.s]))
    return plan, infeasible


# statements that need the concentration pair at the scenario's own n
NEEDS_PLAN = {"thm1_concentration"}


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")


def _passed_cell(rep: V.VerificationReport) -> str:
    return "vacuous" if rep.vacuous else fmt(bool(rep.passed))


def run_scenario(sc: Scenario, out_dir: Path, threads: int = 1, fmt_choice: str = "both", reps: int | None = None,
                 log=None) -> int:
    """Fit, plan, verify and write every report for one scenario; returns the exit status."""
    log = sys.stderr if log is None else log
    out_dir.mkdir(parents=True, exist_ok=True)
    gammas = sorted({sc.gamma} | {float(r.params["gamma"]) for r in sc.verifications if "gamma" in r.params})
    write_csv = fmt_choice in ("csv", "both")
    if write_csv:
        (out_dir / "diagnostics.csv").write_text(_csv_text(("scenario", "table", "key", "value"),
                                                           diagnostics_rows(sc, gammas)))
    plan, infeasible = build_plan(sc)
    if infeasible is not None and any(r.id in NEEDS_PLAN and "n" not in r.params for r in sc.verifications):
        print(f"infeasible: {infeasible}", file=log)
        return EXIT_INFEASIBLE
    if write_csv:
        (out_dir / "plan.csv").write_text(_csv_text(("scenario", "quantity", "value"),
                                                    [(sc.name, q, v) for q, v in plan.rows()]))
    reports: list[V.VerificationReport] = []
    for req in sc.verifications:
        st = STATEMENTS[req.id]
        n_reps = reps or req.reps or sc.reps
        try:
            reports += st.run(sc, req.params, n_reps, sc.seed, STATEMENT_IDS.index(req.id), threads)
        except InfeasibleError as exc:
            print(f"infeasible: {req.id}: {exc}", file=log)
            return EXIT_INFEASIBLE
        except BCLError as exc:
            reports.append(V.VerificationReport(req.id, "hypothesis", 0, math.nan, math.nan, 0.0, False, sc.seed,
                                                "exact", details={"error": f"{type(exc).__name__}: {exc}"}))
    rows = [(sc.name, r.statement_id, r.quantity, r.empirical_frequency, r.theoretical_bound, r.mc_slack,
             _passed_cell(r)) for r in reports]
    if write_csv:
        (out_dir / "verification.csv").write_text(
            _csv_text(("scenario", "statement_id", "quantity", "value", "bound", "slack", "passed"), rows))
    if fmt_choice in ("json", "both"):
        doc = {"scenario": sc.name, "seed": sc.seed, "reports": [r.to_dict() for r in reports]}
        (out_dir / "verification.json").write_text(json.dumps(doc, indent=2, sort_keys=True,
                                                              default=_json_default) + "\n")
    failed = [r for r in reports if not r.vacuous and not r.passed]
    for r in failed:
        print(f"FAILED {r.statement_id} {r.quantity}: value={r.empirical_frequency!r} bound={r.theoretical_bound!r}"
              f" {r.details.get('error', '')}", file=log)
    return EXIT_FAIL if failed else EXIT_OK


def _resolve_seed(cli_seed, cfg: dict) -> int:
    if cli_seed is not None:
        return cli_seed
    if "seed" in cfg:
        return cfg["seed"]
    env = os.environ.get("BCL_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"BCL_SEED: not an integer: {env!r}") from None
    return DEFAULT_SEED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bcl", description="Fit diagnostics, plan constants and verify bounds for a "
                                                        "scenario config.")
    p.add_argument("--config", type=Path, help="scenario JSON file")
    p.add_argument("--out-dir", type=Path, help="output directory (overrides the config)")
    p.add_argument("--seed", type=int, help="master seed (overrides the config and BCL_SEED)")
    p.add_argument("--reps", type=int, help="replications for every Monte Carlo check")
    p.add_argument("--threads", type=int, default=1, help="worker threads; results do not depend on it")
    p.add_argument("--format", choices=("csv", "json", "both"), default="both")
    p.add_argument("--list-statements", action="store_true", help="print the verifiable statements and exit")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.list_statements:
        for sid, tag, summary in list_statements():
            print(f"{sid}\t{tag}\t{summary}")
        return EXIT_OK
    if args.config is None:
        print("error: --config is required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        if not isinstance(cfg, dict):
            raise ConfigError("config: top level must be an object")
        cfg = dict(cfg, seed=_resolve_seed(args.seed, cfg))
        if args.reps is not None:
            cfg["reps"] = args.reps
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        sc = build_scenario(cfg, STATEMENT_IDS)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BCLError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out_dir or Path(sc.output_dir or Path("out") / sc.name)
    return run_scenario(sc, out, args.threads, args.format, args.reps)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
