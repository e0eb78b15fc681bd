"""Scenario orchestration: single runs, parameter sweeps, and the
invariant-validation suite. CSV output is deterministic byte for byte."""

import csv
import io
import json
import os
from dataclasses import dataclass

import numpy as np

from . import metrics, solver
from .config import ScenarioConfig, SweepSpec
from .errors import ConfigError, InfeasibleError
from .objective import (DeterministicObjective, chance_check, objective_gradient,
                        objective_value, std_normal_cdf, std_normal_quantile)
from .semantics import (B2mProfile, EtaModel, FeasibleSets, assign_knowledge,
                        feasible_bs_sets, sample_eta)
from .topology import Tier, compute_sinr, generate_topology

RESULTS_FIELDS = ("scenario", "seed", "method", "alpha", "tau", "sigma", "num_users",
                  "expected_stm", "fbar", "bit_throughput", "unserved")
SWEEP_FIELDS = ("variable", "value", "seed", "method", "expected_stm", "fbar", "unserved")


@dataclass(frozen=True, eq=False)
class Scenario:
    """Everything derived from (config, seed) before any method runs."""

    config: ScenarioConfig
    seed: int
    topology: object
    channel: object
    knowledge: object
    feasible: FeasibleSets
    profile: B2mProfile
    eta_model: EtaModel
    instance: solver.UaInstance


@dataclass(frozen=True, eq=False)
class MethodOutcome:
    method: str
    association: solver.Association
    allocation: solver.Allocation
    report: metrics.PerformanceReport
    iterations: int = 0
    pg_norm: float = 0.0
    relaxed: solver.RelaxedAssociation = None


def build_scenario(config, seed):
    topology = generate_topology(
        config.num_users,
        region_radius_m=config.region_radius_m,
        num_macro=config.num_macro,
        num_pico=config.num_pico,
        num_femto=config.num_femto,
        tier_powers_dbm={
            Tier.MACRO: config.macro_power_dbm,
            Tier.PICO: config.pico_power_dbm,
            Tier.FEMTO: config.femto_power_dbm,
        },
        bandwidth_budget_hz=config.bandwidth_budget_hz,
        noise_power_dbm=config.noise_power_dbm,
        seed=seed,
    )
    channel = compute_sinr(topology)
    knowledge = assign_knowledge(
        config.num_domains, config.kb_per_bs, config.needs_per_mu, topology, seed=seed
    )
    feasible = feasible_bs_sets(knowledge)
    profile = B2mProfile.uniform(config.num_users, config.msg_per_bit)
    instance = solver.make_instance(
        channel, feasible, profile, topology.budgets(), config.bit_rate_threshold_bps,
        config.tau, config.sigma, config.alpha,
    )
    return Scenario(
        config=config, seed=seed, topology=topology, channel=channel, knowledge=knowledge,
        feasible=feasible, profile=profile, eta_model=EtaModel(config.tau, config.sigma),
        instance=instance,
    )


def run_method(scenario, method, record_trace=False):
    cfg = scenario.config
    inst = scenario.instance
    if method == "two-stage":
        sol = solver.two_stage(inst, barrier=cfg.barrier, record_trace=record_trace)
        assoc, alloc = sol.association, sol.allocation
        iters, pg, relaxed = sol.relaxed.iterations, sol.relaxed.pg_norm, sol.relaxed
    elif method in ("max-sinr-wf", "max-sinr-even"):
        assoc = solver.baseline_max_sinr(
            scenario.channel, scenario.feasible, inst,
            restrict_to_feasible=cfg.baseline_respects_kb,
        )
        mode = "waterfill" if method == "max-sinr-wf" else "even"
        alloc = solver.baseline_ba(assoc, inst, scenario.channel, mode)
        iters, pg, relaxed = 0, 0.0, None
    else:
        raise ConfigError(f"unknown method {method!r}")
    report = metrics.build_report(
        assoc, alloc, scenario.profile, scenario.channel,
        cfg.tau, cfg.sigma, inst.objective.q,
    )
    return MethodOutcome(
        method=method, association=assoc, allocation=alloc, report=report,
        iterations=iters, pg_norm=pg, relaxed=relaxed,
    )


def _result_row(config, seed, outcome):
    rep = outcome.report
    return {
        "scenario": config.scenario_id,
        "seed": seed,
        "method": outcome.method,
        "alpha": config.alpha,
        "tau": config.tau,
        "sigma": config.sigma,
        "num_users": config.num_users,
        "expected_stm": rep.expected_stm,
        "fbar": rep.fbar,
        "bit_throughput": rep.bit_throughput,
        "unserved": rep.unserved,
    }


def _method_report(scenario, outcome):
    alloc_loads = np.einsum("ml,ml->l", outcome.association.x, outcome.allocation.n)
    rep = outcome.report
    return {
        "method": outcome.method,
        "expected_stm": rep.expected_stm,
        "fbar": rep.fbar,
        "bit_throughput": rep.bit_throughput,
        "served": rep.served,
        "unserved": list(outcome.association.unserved),
        "per_bs_load_hz": [float(v) for v in alloc_loads],
        "iterations": outcome.iterations,
        "kkt_residuals": {
            "relaxed_pg_norm": outcome.pg_norm,
            "allocation_rel": outcome.allocation.kkt_residual,
        },
    }


def run_scenario(config, out_dir=None, record_trace=False):
    """Run every configured (seed, method) cell and optionally write artifacts.

    Returns (rows, outcomes, reports): CSV-ready row dicts in deterministic
    (seed, method) order, the raw MethodOutcome objects, and the per-seed
    report documents.
    """
    rows = []
    outcomes = {}
    reports = []
    for seed in config.seeds:
        scenario = build_scenario(config, seed)
        per_method = {}
        for method in config.methods:
            outcome = run_method(scenario, method, record_trace=record_trace)
            per_method[method] = outcome
            rows.append(_result_row(config, seed, outcome))
        outcomes[seed] = per_method
        reports.append({
            "scenario": config.scenario_id,
            "seed": seed,
            "alpha": config.alpha,
            "tau": config.tau,
            "sigma": config.sigma,
            "num_users": config.num_users,
            "num_bs": scenario.topology.num_bs,
            "methods": [_method_report(scenario, per_method[m]) for m in config.methods],
        })
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        _write_csv(os.path.join(out_dir, "results.csv"), RESULTS_FIELDS, rows)
        with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
            json.dump(reports, fh, indent=2)
        if record_trace:
            _write_traces(out_dir, config, outcomes)
    return rows, outcomes, reports


def _write_traces(out_dir, config, outcomes):
    for seed, per_method in outcomes.items():
        out = per_method.get("two-stage")
        if out is None or out.relaxed is None:
            continue
        path = os.path.join(out_dir, f"trace_seed{seed}.csv")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(("r", "iteration", "value", "pg_norm"))
            for row in out.relaxed.trace:
                writer.writerow(row)


def _write_csv(path, fields, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def rows_to_csv_bytes(fields, rows):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue().encode("utf-8")


def apply_sweep_value(config, variable, value):
    if variable == "num_mus":
        return config.replace(num_users=int(value))
    if variable == "alpha":
        return config.replace(alpha=float(value))
    if variable == "tau":
        return config.replace(tau=float(value))
    if variable == "num_bss":
        small = int(value) - config.num_macro
        if small < 0:
            raise ConfigError("num_bss below the macro count")
        pico = round(small / 3)
        return config.replace(num_pico=pico, num_femto=small - pico)
    raise ConfigError(f"unsupported sweep variable {variable!r}")


def sweep(config, variable=None, values=None, out_dir=None):
    """Repeat run_scenario per (value, seed), holding everything else fixed.

    Emits long-format rows; identical config and seeds produce byte-identical
    CSV output.
    """
    if variable is None or values is None:
        if config.sweep is None:
            raise ConfigError("no sweep spec: pass variable/values or set config.sweep")
        variable, values = config.sweep.variable, config.sweep.values
    SweepSpec(variable=variable, values=tuple(values))  # range checks
    rows = []
    for value in values:
        cell_cfg = apply_sweep_value(config, variable, value)
        for seed in config.seeds:
            scenario = build_scenario(cell_cfg, seed)
            for method in config.methods:
                outcome = run_method(scenario, method)
                rows.append({
                    "variable": variable,
                    "value": value,
                    "seed": seed,
                    "method": method,
                    "expected_stm": outcome.report.expected_stm,
                    "fbar": outcome.report.fbar,
                    "unserved": outcome.report.unserved,
                })
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        _write_csv(os.path.join(out_dir, "sweep.csv"), SWEEP_FIELDS, rows)
    return rows


@dataclass
class Check:
    name: str
    passed: bool
    detail: str
    data: dict = None

    def __post_init__(self):
        self.passed = bool(self.passed)


def _tiny_random_instance(rng, tau, sigma, alpha):
    """Small synthetic association problem for oracle-gap measurements."""
    l = int(rng.integers(2, 4))
    m = int(rng.integers(3, 7))
    gamma = 10 ** rng.uniform(-0.3, 0.9, size=(m, l))
    se = np.log2(1.0 + gamma)
    n_t = 1e4 / se
    kappa = np.full(m, 1.0 / 1600.0)
    xi_t = kappa[:, None] * (n_t * se)
    sets = []
    for i in range(m):
        size = int(rng.integers(1, l + 1))
        sets.append(tuple(sorted(int(v) for v in rng.choice(l, size=size, replace=False))))
    feasible = FeasibleSets(num_bs=l, sets=tuple(sets))
    per_bs_users = max(1.0, m / l)
    budgets = np.full(l, float(n_t.mean() * per_bs_users * rng.uniform(1.2, 2.5)))
    obj = DeterministicObjective.for_confidence(tau, sigma, alpha, xi_t)
    return solver.UaInstance(objective=obj, feasible=feasible, budgets=budgets, n_t=n_t)


def oracle_gap_distribution(num_instances=50, seed=2024, tau=0.5, sigma=0.1, alpha=0.95):
    """Two-stage Fbar relative to the oracle optimum on tiny random instances."""
    rng = np.random.default_rng(seed)
    ratios = []
    produced = 0
    while produced < num_instances:
        inst = _tiny_random_instance(rng, tau, sigma, alpha)
        residual_scale = float(np.median(inst.budgets) / 6.0)
        quantum = max(float(inst.n_t[inst.mask()].min()), residual_scale)
        try:
            sol = solver.two_stage(inst)
        except InfeasibleError:
            continue
        oracle = metrics.oracle_enumerate(inst, quantum=quantum)
        fbar_two_stage = metrics.instance_fbar(sol.association, sol.allocation, inst)
        if oracle.fbar <= 0:
            continue
        ratios.append(fbar_two_stage / oracle.fbar)
        produced += 1
    return ratios


def validate(config, oracle_instances=50, chance_trials=100_000, eta_draws=1_000_000):
    """Run the invariant suite and return machine-readable check results."""
    checks = []
    q = std_normal_quantile(config.alpha) if 0 < config.alpha < 1 else None

    alphas = sorted({0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99, config.alpha})
    worst = max(abs(std_normal_cdf(std_normal_quantile(a)) - a) for a in alphas)
    checks.append(Check(
        "quantile_accuracy", worst < 1e-10, f"max |Phi(q)-alpha| = {worst:.3e}",
        {"max_abs_error": worst},
    ))

    rng = np.random.default_rng(7)
    worst_rel = 0.0
    for _ in range(20):
        m, l = 6, 4
        xi = rng.uniform(0.0, 10.0, size=(m, l))
        obj = DeterministicObjective(tau=config.tau, sigma=max(config.sigma, 0.0),
                                     q=q, xi_t=xi)
        x = rng.random((m, l))
        x /= x.sum(axis=1, keepdims=True)
        g = objective_gradient(obj, x)
        h = 1e-6
        for _ in range(6):
            i, j = int(rng.integers(m)), int(rng.integers(l))
            xp, xm = x.copy(), x.copy()
            xp[i, j] += h
            xm[i, j] -= h
            fd = (objective_value(obj, xp) - objective_value(obj, xm)) / (2 * h)
            denom = max(abs(fd), abs(g[i, j]), 1e-12)
            worst_rel = max(worst_rel, abs(fd - g[i, j]) / denom)
    checks.append(Check(
        "gradient_finite_difference", worst_rel < 1e-6,
        f"max relative error = {worst_rel:.3e}", {"max_rel_error": worst_rel},
    ))

    if config.sigma > 0:
        draws = eta_draws
        etas = sample_eta(EtaModel(config.tau, config.sigma), draws, seed=11, clamp=True)
        clamped = float(np.mean((etas <= 1e-9) | (etas >= 1.0 - 1e-9)))
        expected = std_normal_cdf(-config.tau / config.sigma) + 1.0 - std_normal_cdf(
            (1.0 - config.tau) / config.sigma
        )
        se = np.sqrt(max(expected * (1 - expected), 1e-12) / draws)
        ok = abs(clamped - expected) < 5 * se + 1e-6
        detail = f"clamped fraction {clamped:.2e} vs Gaussian tails {expected:.2e}"
    else:
        clamped, expected, ok, detail = 0.0, 0.0, True, "sigma = 0: no clamping"
    checks.append(Check("eta_clamp_frequency", ok, detail,
                        {"clamped": clamped, "expected": expected}))

    cal_cfg = config.replace(num_users=min(config.num_users, 80), seeds=(config.seeds[0],),
                             methods=("two-stage",), sweep=None)
    scenario = build_scenario(cal_cfg, cal_cfg.seeds[0])
    outcome = run_method(scenario, "two-stage")
    if cal_cfg.num_users == 0:
        checks.append(Check("confidence_calibration", True, "no users: vacuous", {}))
    else:
        rates = metrics.per_user_message_rate(
            outcome.association, outcome.allocation, scenario.profile, scenario.channel)
        xi_fin = scenario.profile.msg_per_bit[:, None] * (
            outcome.allocation.n * np.log2(1.0 + scenario.channel.gamma))
        obj_fin = DeterministicObjective(tau=cal_cfg.tau, sigma=cal_cfg.sigma, q=q, xi_t=xi_fin)
        fbar = metrics.confidence_bound(rates, cal_cfg.tau, cal_cfg.sigma, q)
        trials = chance_trials
        prob = chance_check(obj_fin, outcome.association.x.astype(float), fbar,
                            scenario.eta_model, trials, seed=13)
        if cal_cfg.sigma == 0:
            ok = prob == 1.0
            detail = f"sigma=0: Pr = {prob}"
        else:
            margin = 4.0 * np.sqrt(cal_cfg.alpha * (1 - cal_cfg.alpha) / trials)
            ok = abs(prob - cal_cfg.alpha) <= margin
            detail = f"Pr{{F >= Fbar}} = {prob:.4f} vs alpha = {cal_cfg.alpha}"
        checks.append(Check("confidence_calibration", ok, detail,
                            {"probability": prob, "alpha": cal_cfg.alpha}))

    ratios = oracle_gap_distribution(num_instances=oracle_instances, seed=2024,
                                     tau=config.tau, sigma=config.sigma,
                                     alpha=config.alpha)
    frac_ok = float(np.mean([r >= 0.85 for r in ratios]))
    checks.append(Check(
        "oracle_gap", frac_ok >= 0.9,
        f"Fbar ratio >= 0.85 in {frac_ok:.0%} of instances (min {min(ratios):.3f})",
        {"ratios": [float(r) for r in ratios], "fraction_above_0.85": frac_ok},
    ))

    worst_assoc, worst_budget, worst_eq = 0, 0.0, 0.0
    for method in config.methods:
        out = run_method(scenario, method)
        viol = metrics.feasibility_violations(
            out.association, out.allocation, scenario.instance,
            check_feasible_membership=(method == "two-stage" or config.baseline_respects_kb),
        )
        worst_assoc = max(worst_assoc, viol["association_defects"])
        worst_budget = max(worst_budget, viol["budget_overshoot_rel"])
        worst_eq = max(worst_eq, viol["full_allocation_gap_rel"])
    ok = worst_assoc == 0 and worst_budget <= 1e-9 and worst_eq <= 1e-9
    checks.append(Check(
        "solution_feasibility", ok,
        f"association defects {worst_assoc}, budget overshoot {worst_budget:.1e}, "
        f"allocation gap {worst_eq:.1e}",
        {"association_defects": worst_assoc, "budget_overshoot_rel": worst_budget,
         "full_allocation_gap_rel": worst_eq},
    ))
    return checks
