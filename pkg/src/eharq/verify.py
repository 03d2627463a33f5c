"""Built-in validation suite behind ``eharq verify``.

Eight independent checks cover the analytic limits, the brute-force
oracle equivalences, the model invariants, the analytic-versus-empirical
agreement, and the structural properties of the sweep outputs.  Each
check reports expected/actual/tolerance details and its runtime; three
of them also enforce a runtime budget.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from time import perf_counter

import numpy as np

from eharq.chain import (
    Policy,
    evaluate_policy,
    induced_kernel,
    stationary_distribution,
)
from eharq.config import DEFAULT_RHO_GRID, DEFAULT_TTH_GRID, ExperimentConfig
from eharq.experiments import STATUS_OK, run_sweep_tth
from eharq.model import (
    LinkParameters,
    Protocol,
    enumerate_states,
    expected_success,
    feasible_actions,
    success_probability,
    transition_distribution,
)
from eharq.optimize import (
    OccupationMeasure,
    SolveStatus,
    brute_force_best_policy,
    dinkelbach_solve,
    myopic_policy,
    solve_no_feedback,
)
from eharq.presets import reference_link, tiny_link
from eharq.simulate import SimConfig, estimate_with_ci, simulate, total_variation_distance

__all__ = ["CheckResult", "CHECK_NAMES", "RUNTIME_LIMITS", "run_check", "run_checks", "run_verify"]

KERNEL_ROW_TOL = 1e-12
MEASURE_TOL = 1e-9
IDENTITY_TOL = 1e-10
ORACLE_EQUALITY_TOL = 1e-7
DOMINANCE_TOL = 1e-9
ZERO_COST_ANALYTIC_TOL = 1e-9
ZERO_COST_LP_TOL = 1e-6
VERIFY_SEED = 20250814


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    details: str
    seconds: float


def _zero_cost_link() -> LinkParameters:
    return LinkParameters(
        max_attempts=4,
        battery_capacity=1,
        cost_sample=0,
        cost_decode=0,
        cost_feedback=0,
        eh_values=(0, 1),
        eh_probs=(0.5, 0.5),
        success_prob=success_probability(0.5, 1.0),
    )


def check_zero_cost_limits() -> tuple[bool, str]:
    """Free reception must hit the no-battery limits of the ideal receiver."""
    params = _zero_cost_link()
    p_c = params.success_prob
    miss_all = (1.0 - p_c) ** params.max_attempts

    myopic = evaluate_policy(
        myopic_policy(Protocol.NO_FEEDBACK, params), params, Protocol.NO_FEEDBACK
    )
    analytic_gap = abs(myopic.pdp - miss_all)

    unconstrained = dinkelbach_solve(params, Protocol.NON_ADAPTIVE, 0.0)
    lp_gap = abs(unconstrained.pdp - miss_all)

    at_ceiling = dinkelbach_solve(params, Protocol.NON_ADAPTIVE, p_c)
    ceiling_ok = at_ceiling.status is SolveStatus.OPTIMAL

    passed = (
        analytic_gap <= ZERO_COST_ANALYTIC_TOL
        and lp_gap <= ZERO_COST_LP_TOL
        and ceiling_ok
    )
    details = (
        f"expected pdp={miss_all:.12g}; analytic gap={analytic_gap:.3g} "
        f"(tol {ZERO_COST_ANALYTIC_TOL:g}), lp gap={lp_gap:.3g} "
        f"(tol {ZERO_COST_LP_TOL:g}); floor {p_c:.6g} "
        f"{'feasible' if ceiling_ok else 'rejected'}"
    )
    return passed, details


def check_no_feedback_enumeration() -> tuple[bool, str]:
    """Spend-at-once must match the exhaustive max-throughput search."""
    params = tiny_link(rho=0.5)
    brute = brute_force_best_policy(params, Protocol.NO_FEEDBACK, objective="max-throughput")
    myopic = evaluate_policy(
        myopic_policy(Protocol.NO_FEEDBACK, params), params, Protocol.NO_FEEDBACK
    )
    gap = abs(brute.throughput - myopic.throughput)
    passed = brute.status is SolveStatus.OPTIMAL and gap <= IDENTITY_TOL
    details = (
        f"brute throughput={brute.throughput:.12g} vs myopic={myopic.throughput:.12g}, "
        f"gap={gap:.3g} (tol {IDENTITY_TOL:g}) over {brute.iterations} policies"
    )
    return passed, details


def check_lp_vs_enumeration() -> tuple[bool, str]:
    """The LP route must match exhaustive search, and beat it under a floor."""
    params = tiny_link(rho=0.5)
    free_lp = dinkelbach_solve(params, Protocol.ADAPTIVE, 0.0)
    free_bf = brute_force_best_policy(params, Protocol.ADAPTIVE, objective="min-pdp", t_th=0.0)
    free_gap = abs(free_lp.pdp - free_bf.pdp)

    floor = 0.2
    bound_lp = dinkelbach_solve(params, Protocol.ADAPTIVE, floor)
    bound_bf = brute_force_best_policy(params, Protocol.ADAPTIVE, objective="min-pdp", t_th=floor)
    # Randomization may strictly help once the floor binds, hence one-sided.
    bound_excess = bound_lp.pdp - bound_bf.pdp

    passed = (
        free_lp.status is SolveStatus.OPTIMAL
        and free_bf.status is SolveStatus.OPTIMAL
        and free_gap <= ORACLE_EQUALITY_TOL
        and bound_lp.status is SolveStatus.OPTIMAL
        and bound_bf.status is SolveStatus.OPTIMAL
        and bound_excess <= ORACLE_EQUALITY_TOL
    )
    details = (
        f"unconstrained gap={free_gap:.3g} (tol {ORACLE_EQUALITY_TOL:g}); "
        f"floor {floor:g}: lp pdp={bound_lp.pdp:.12g} vs deterministic best "
        f"{bound_bf.pdp:.12g}, excess={bound_excess:.3g}"
    )
    return passed, details


def _invariant_combos() -> list[tuple[LinkParameters, Protocol, float]]:
    combos: list[tuple[LinkParameters, Protocol, float]] = []
    for rho in (0.2, 0.5, 0.8):
        params = tiny_link(rho=rho)
        combos.extend((params, protocol, 0.0) for protocol in Protocol)
    deeper = tiny_link(rho=0.5, max_attempts=3)
    combos.extend((deeper, protocol, 0.0) for protocol in Protocol)
    for rho in (0.4, 0.6, 0.8):
        params = reference_link(rho)
        combos.extend((params, protocol, 0.05) for protocol in Protocol)
    combos.append((reference_link(0.6), Protocol.ADAPTIVE, 0.3))
    return combos


def _policy_measure(
    policy: Policy, params: LinkParameters, protocol: Protocol
) -> OccupationMeasure:
    """State-action frequencies induced by a policy, from its stationary law."""
    pi = stationary_distribution(induced_kernel(policy, params, protocol))
    weights = {}
    for j, state in enumerate(enumerate_states(params)):
        for action, prob in policy.action_probabilities(state).items():
            weights[(state, action)] = float(pi[j]) * prob
    return OccupationMeasure(weights)


def _measure_residuals(
    measure: OccupationMeasure, params: LinkParameters, floor: float
) -> tuple[float, float, float]:
    """Max balance residual, normalization gap, and throughput shortfall."""
    outflow: dict = {}
    inflow: dict = {}
    throughput = 0.0
    for (state, action), weight in measure.weights.items():
        outflow[state] = outflow.get(state, 0.0) + weight
        throughput += weight * expected_success(state, action, params)
        for entry in transition_distribution(state, action, params):
            inflow[entry.next_state] = (
                inflow.get(entry.next_state, 0.0) + weight * entry.probability
            )
    balance = max(
        abs(outflow.get(state, 0.0) - inflow.get(state, 0.0))
        for state in enumerate_states(params)
    )
    normalization = abs(measure.total() - 1.0)
    shortfall = max(0.0, floor - throughput)
    return balance, normalization, shortfall


def check_kernel_and_measure_invariants(perturbation: float = 0.0) -> tuple[bool, str]:
    """Transition rows are distributions; solved measures satisfy the LP rows.

    ``perturbation`` shifts every kernel row sum before comparison; the
    negative-control test passes a nonzero value to prove the check can fail.
    """
    combos = _invariant_combos()
    rows_checked = 0
    worst_row_gap = 0.0
    measures_checked = 0
    worst_balance = 0.0
    worst_normalization = 0.0
    worst_shortfall = 0.0
    for params, protocol, floor in combos:
        for state in enumerate_states(params):
            for action in feasible_actions(state, protocol, params):
                entries = transition_distribution(state, action, params)
                row_sum = sum(entry.probability for entry in entries) + perturbation
                worst_row_gap = max(worst_row_gap, abs(row_sum - 1.0))
                rows_checked += 1
        if protocol is Protocol.NO_FEEDBACK:
            report = solve_no_feedback(params, floor)
            if report.status is SolveStatus.OPTIMAL:
                measure = _policy_measure(report.policy, params, protocol)
            else:
                measure = None
        else:
            report = dinkelbach_solve(params, protocol, floor)
            measure = report.occupation if report.status is SolveStatus.OPTIMAL else None
        if measure is None:
            continue
        balance, normalization, shortfall = _measure_residuals(measure, params, floor)
        worst_balance = max(worst_balance, balance)
        worst_normalization = max(worst_normalization, normalization)
        worst_shortfall = max(worst_shortfall, shortfall)
        measures_checked += 1
    passed = (
        worst_row_gap <= KERNEL_ROW_TOL
        and measures_checked >= 20
        and worst_balance <= MEASURE_TOL
        and worst_normalization <= MEASURE_TOL
        and worst_shortfall <= MEASURE_TOL
    )
    details = (
        f"{rows_checked} kernel rows, max gap={worst_row_gap:.3g} (tol {KERNEL_ROW_TOL:g}); "
        f"{measures_checked} measures (need >= 20), max balance={worst_balance:.3g}, "
        f"normalization={worst_normalization:.3g}, floor shortfall={worst_shortfall:.3g} "
        f"(tol {MEASURE_TOL:g})"
    )
    return passed, details


def check_rate_identity() -> tuple[bool, str]:
    """Started packets split exactly into drops and successes.

    Holds as an identity of stationary rates for every evaluated policy and
    as a counting identity along every simulated trajectory.
    """
    instances = (tiny_link(rho=0.5), reference_link(0.6))
    worst_rate_gap = 0.0
    rates_checked = 0
    for params in instances:
        for protocol in Protocol:
            policies = [myopic_policy(protocol, params)]
            if protocol is not Protocol.NO_FEEDBACK:
                report = dinkelbach_solve(params, protocol, 0.0)
                if report.policy is not None:
                    policies.append(report.policy)
            for policy in policies:
                point = evaluate_policy(policy, params, protocol)
                gap = abs(point.new_packet_rate - point.drop_rate - point.throughput)
                worst_rate_gap = max(worst_rate_gap, gap)
                rates_checked += 1

    worst_count_gap = 0
    trajectories = 0
    for params in instances:
        for protocol in Protocol:
            run = simulate(
                SimConfig(
                    params=params,
                    protocol=protocol,
                    policy=myopic_policy(protocol, params),
                    horizon=50_000,
                    seed=VERIFY_SEED + trajectories,
                )
            )
            worst_count_gap = max(
                worst_count_gap, abs(run.new_packets - run.drops - run.successes)
            )
            trajectories += 1
    passed = worst_rate_gap <= IDENTITY_TOL and worst_count_gap <= 1
    details = (
        f"{rates_checked} stationary identities, max gap={worst_rate_gap:.3g} "
        f"(tol {IDENTITY_TOL:g}); {trajectories} trajectories, max count gap="
        f"{worst_count_gap} (allowed 1)"
    )
    return passed, details


def check_monte_carlo_agreement() -> tuple[bool, str]:
    """Long simulations of the myopic adaptive policy match the chain analysis."""
    params = reference_link(0.6)
    policy = myopic_policy(Protocol.ADAPTIVE, params)
    analytic = evaluate_policy(policy, params, Protocol.ADAPTIVE)
    config = SimConfig(
        params=params,
        protocol=Protocol.ADAPTIVE,
        policy=policy,
        horizon=1_000_000,
        seed=VERIFY_SEED,
    )
    result = estimate_with_ci(config, n_reps=10)
    pdp_sigmas = abs(result.pdp_mean - analytic.pdp) / result.pdp_se
    throughput_sigmas = abs(result.throughput_mean - analytic.throughput) / result.throughput_se
    pi = stationary_distribution(induced_kernel(policy, params, Protocol.ADAPTIVE))
    mean_visits = np.mean([run.state_visit_freq for run in result.replications], axis=0)
    tv = total_variation_distance(mean_visits, pi)
    passed = pdp_sigmas <= 3.0 and throughput_sigmas <= 3.0 and tv <= 0.01
    details = (
        f"pdp {result.pdp_mean:.6g} vs {analytic.pdp:.6g} ({pdp_sigmas:.2f} se), "
        f"throughput {result.throughput_mean:.6g} vs {analytic.throughput:.6g} "
        f"({throughput_sigmas:.2f} se), both <= 3 se; visit tv={tv:.4g} (tol 0.01)"
    )
    return passed, details


def check_protocol_dominance() -> tuple[bool, str]:
    """More feedback freedom never hurts, and the ratio iteration behaves."""
    floor = 0.2
    violations: list[str] = []
    feasible_points = 0
    for rho in DEFAULT_RHO_GRID:
        params = reference_link(rho)
        no_fb = solve_no_feedback(params, floor)
        non_adaptive = dinkelbach_solve(params, Protocol.NON_ADAPTIVE, floor)
        adaptive = dinkelbach_solve(params, Protocol.ADAPTIVE, floor)
        for label, report in (("na", non_adaptive), ("adaptive", adaptive)):
            if report.status is not SolveStatus.OPTIMAL:
                continue
            feasible_points += 1
            if not report.converged or report.iterations > 20:
                violations.append(f"rho={rho:g} {label} not converged within budget")
            trace = report.q_trace
            if any(b >= a for a, b in zip(trace, trace[1:])):
                violations.append(f"rho={rho:g} {label} q_trace not strictly decreasing")
        for label, other in (("na", non_adaptive), ("wo", no_fb)):
            if other.status is not SolveStatus.OPTIMAL:
                continue
            if adaptive.status is not SolveStatus.OPTIMAL:
                violations.append(f"rho={rho:g} adaptive infeasible while {label} feasible")
            elif adaptive.pdp > other.pdp + DOMINANCE_TOL:
                violations.append(
                    f"rho={rho:g} adaptive pdp {adaptive.pdp:.9g} exceeds "
                    f"{label} {other.pdp:.9g}"
                )
    passed = not violations and feasible_points > 0
    details = (
        f"{len(DEFAULT_RHO_GRID)} grid points, {feasible_points} feasible solves, "
        f"dominance tol {DOMINANCE_TOL:g}"
        + ("" if not violations else "; " + "; ".join(violations[:4]))
    )
    return passed, details


def check_region_structure() -> tuple[bool, str]:
    """Floor sweeps show the no-feedback rectangle and costlier-ACK shrinkage."""
    config = ExperimentConfig(rho=0.6, ef_grid=(1, 2), tth_grid=DEFAULT_TTH_GRID)
    rows = run_sweep_tth(config)
    violations: list[str] = []

    wo_ok = [row for row in rows if row["protocol"] == "wo" and row["status"] == STATUS_OK]
    success_values = {format(row["success_prob"], ".12g") for row in wo_ok}
    if not wo_ok:
        violations.append("no feasible no-feedback rows")
    elif len(success_values) != 1:
        violations.append(f"no-feedback success varies: {sorted(success_values)}")
    for ef in config.ef_grid:
        statuses = [row["status"] for row in rows if row["protocol"] == "wo" and row["ef"] == ef]
        flags = [status == STATUS_OK for status in statuses]
        if flags != sorted(flags, reverse=True):
            violations.append(f"no-feedback feasibility not a floor prefix at ef={ef}")

    for protocol in ("na", "adaptive"):
        feasible = {
            (row["ef"], row["tth"])
            for row in rows
            if row["protocol"] == protocol and row["status"] == STATUS_OK
        }
        shrink_breaks = [tth for ef, tth in feasible if ef == 2 and (1, tth) not in feasible]
        if shrink_breaks:
            violations.append(f"{protocol}: ef=2 feasible beyond ef=1 at {shrink_breaks}")

    passed = not violations
    details = (
        f"{len(rows)} sweep rows over {len(DEFAULT_TTH_GRID)} floors x ef {config.ef_grid}; "
        f"no-feedback success levels: {sorted(success_values)}"
        + ("" if not violations else "; " + "; ".join(violations[:4]))
    )
    return passed, details


CHECKS = (
    ("zero-cost-limits", check_zero_cost_limits),
    ("no-feedback-enumeration", check_no_feedback_enumeration),
    ("lp-vs-enumeration", check_lp_vs_enumeration),
    ("kernel-and-measure-invariants", check_kernel_and_measure_invariants),
    ("rate-identity", check_rate_identity),
    ("monte-carlo-agreement", check_monte_carlo_agreement),
    ("protocol-dominance", check_protocol_dominance),
    ("region-structure", check_region_structure),
)
CHECK_NAMES = tuple(name for name, _ in CHECKS)
RUNTIME_LIMITS = {
    "zero-cost-limits": 5.0,
    "no-feedback-enumeration": 60.0,
    "monte-carlo-agreement": 30.0,
}
_CHECK_BY_NAME = dict(CHECKS)


def run_check(name: str) -> CheckResult:
    """Run one named check, folding runtime budgets and exceptions into it."""
    fn = _CHECK_BY_NAME[name]
    start = perf_counter()
    try:
        passed, details = fn()
        passed = bool(passed)  # numpy comparisons leak np.bool_, which json rejects
    except Exception as exc:  # a crashed check is a failed check
        passed, details = False, f"raised {type(exc).__name__}: {exc}"
    seconds = perf_counter() - start
    limit = RUNTIME_LIMITS.get(name)
    if limit is not None:
        details += f"; runtime {seconds:.2f}s (budget {limit:g}s)"
        if seconds >= limit:
            passed = False
    return CheckResult(name=name, passed=passed, details=details, seconds=seconds)


def run_checks(names: tuple[str, ...] = CHECK_NAMES) -> list[CheckResult]:
    return [run_check(name) for name in names]


def run_verify(out: str | None = None) -> int:
    """Run every check, print one line each, optionally write a JSON summary."""
    results = run_checks()
    for result in results:
        flag = "PASS" if result.passed else "FAIL"
        print(f"[{flag}] {result.name:30} ({result.seconds:6.2f}s) {result.details}")
    all_passed = all(result.passed for result in results)
    print(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    if out:
        summary = {"passed": all_passed, "checks": [asdict(result) for result in results]}
        Path(out).write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return 0 if all_passed else 1
