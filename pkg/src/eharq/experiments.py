"""Experiment drivers behind the CLI: solve, simulate, sweeps, CSV output.

Sweep rows keep their grid coordinates no matter what happens at a point:
an unmet throughput floor is reported as full loss (drop probability one,
equivalently zero success probability), and per-point solver errors land
in the ``status`` column instead of aborting the sweep.  Floats are
written with nine significant digits, so identical configurations produce
byte-identical CSV files.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Iterable, Sequence

from eharq.chain import MultipleRecurrentClasses, Policy, evaluate_policy
from eharq.config import ConfigError, ExperimentConfig
from eharq.linalg import NumericalTrouble, SingularSystem
from eharq.model import Action, LinkParameters, Protocol, SystemState
from eharq.optimize import (
    SolveReport,
    SolveStatus,
    dinkelbach_solve,
    myopic_policy,
    solve_no_feedback,
)
from eharq.simulate import SimConfig, estimate_with_ci, simulate

__all__ = [
    "EXIT_OK",
    "EXIT_INFEASIBLE",
    "EXIT_NUMERICAL",
    "EXIT_BAD_CONFIG",
    "STATUS_OK",
    "STATUS_INFEASIBLE",
    "STATUS_MULTICHAIN",
    "STATUS_ITERATION_LIMIT",
    "STATUS_NUMERICAL",
    "solve_protocol",
    "policy_to_records",
    "policy_from_records",
    "format_value",
    "csv_text",
    "write_csv",
    "run_solve",
    "run_simulate",
    "run_sweep_rho",
    "run_sweep_tth",
    "RHO_SWEEP_COLUMNS",
    "TTH_SWEEP_COLUMNS",
]

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_NUMERICAL = 3
EXIT_BAD_CONFIG = 4

STATUS_OK = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_MULTICHAIN = "multichain"
STATUS_ITERATION_LIMIT = "iteration-limit"
STATUS_NUMERICAL = "numerical"

RHO_SWEEP_COLUMNS = ("protocol", "policy", "rho", "status", "pdp", "throughput")
TTH_SWEEP_COLUMNS = ("protocol", "ef", "tth", "status", "success_prob", "throughput")

_STATUS_TOKEN = {
    SolveStatus.OPTIMAL: STATUS_OK,
    SolveStatus.INFEASIBLE: STATUS_INFEASIBLE,
    SolveStatus.ITERATION_LIMIT: STATUS_ITERATION_LIMIT,
}


def solve_protocol(
    params: LinkParameters,
    protocol: Protocol,
    tth: float,
    i_max: int,
    delta: float,
) -> SolveReport:
    """Route to the closed no-feedback solution or the Dinkelbach loop."""
    if protocol is Protocol.NO_FEEDBACK:
        return solve_no_feedback(params, tth)
    return dinkelbach_solve(params, protocol, tth, i_max=i_max, delta=delta)


def policy_to_records(policy: Policy) -> list[dict]:
    """Flatten a policy into sorted rows of state fields, action bits, probability."""
    records = []
    for state in sorted(policy.table):
        for action in sorted(policy.table[state]):
            probability = policy.table[state][action]
            if probability == 0.0:
                continue
            records.append(
                {
                    "battery": state.battery,
                    "attempt": state.attempt,
                    "decoded": state.decoded,
                    "sample": action.sample,
                    "feedback": action.feedback,
                    "probability": probability,
                }
            )
    return records


def policy_from_records(records: Iterable[dict]) -> Policy:
    table: dict[SystemState, dict[Action, float]] = {}
    for record in records:
        try:
            state = SystemState(
                int(record["battery"]), int(record["attempt"]), int(record["decoded"])
            )
            action = Action(int(record["sample"]), int(record["feedback"]))
            probability = float(record["probability"])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed policy record {record!r}") from exc
        table.setdefault(state, {})[action] = probability
    return Policy(table)


def format_value(value) -> str:
    """Nine significant digits for floats; everything else verbatim."""
    if isinstance(value, float):
        return format(value, ".9g")
    return str(value)


def csv_text(columns: Sequence[str], rows: Iterable[dict]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row[column]) for column in columns])
    return buffer.getvalue()


def write_csv(path: str | Path, columns: Sequence[str], rows: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(csv_text(columns, rows))


def _report_record(config: ExperimentConfig, report: SolveReport) -> dict:
    return {
        "protocol": config.protocol,
        "rho": config.rho,
        "tth": config.tth,
        "cost_feedback": config.cost_feedback,
        "status": _STATUS_TOKEN[report.status],
        "pdp": report.pdp,
        "throughput": report.throughput,
        "iterations": report.iterations,
        "converged": report.converged,
        "q_trace": list(report.q_trace),
        "policy": policy_to_records(report.policy) if report.policy else None,
    }


def run_solve(config: ExperimentConfig) -> tuple[dict, int]:
    """Solve one instance; returns the result record and an exit code."""
    params = config.link_parameters()
    report = solve_protocol(
        params, config.protocol_enum(), config.tth, config.i_max, config.delta
    )
    record = _report_record(config, report)
    if config.out:
        Path(config.out).write_text(
            json.dumps(record, indent=2) + "\n", encoding="utf-8"
        )
    if report.status is SolveStatus.INFEASIBLE:
        return record, EXIT_INFEASIBLE
    if report.status is SolveStatus.ITERATION_LIMIT:
        return record, EXIT_NUMERICAL
    return record, EXIT_OK


def _select_policy(
    config: ExperimentConfig, params: LinkParameters, protocol: Protocol
) -> tuple[Policy | None, str]:
    if config.policy_file:
        payload = json.loads(Path(config.policy_file).read_text(encoding="utf-8"))
        records = payload["policy"] if isinstance(payload, dict) else payload
        if not records:
            raise ConfigError(f"policy file {config.policy_file} holds no policy rows")
        return policy_from_records(records), f"file:{config.policy_file}"
    if config.policy_kind == "myopic":
        return myopic_policy(protocol, params), "myopic"
    report = solve_protocol(params, protocol, config.tth, config.i_max, config.delta)
    return report.policy, "optimal"


def run_simulate(config: ExperimentConfig) -> tuple[dict, int]:
    """Simulate a policy and compare against the analytic chain values."""
    params = config.link_parameters()
    protocol = config.protocol_enum()
    policy, policy_label = _select_policy(config, params, protocol)
    if policy is None:
        record = {
            "protocol": config.protocol,
            "policy": policy_label,
            "status": STATUS_INFEASIBLE,
        }
        if config.out:
            Path(config.out).write_text(
                json.dumps(record, indent=2) + "\n", encoding="utf-8"
            )
        return record, EXIT_INFEASIBLE
    analytic = evaluate_policy(policy, params, protocol)
    sim_config = SimConfig(
        params=params,
        protocol=protocol,
        policy=policy,
        horizon=config.horizon,
        seed=config.seed,
    )
    record = {
        "protocol": config.protocol,
        "policy": policy_label,
        "status": STATUS_OK,
        "rho": config.rho,
        "horizon": config.horizon,
        "seed": config.seed,
        "n_reps": config.n_reps,
        "analytic_pdp": analytic.pdp,
        "analytic_throughput": analytic.throughput,
        "analytic_new_packet_rate": analytic.new_packet_rate,
    }
    if config.n_reps == 1:
        run = simulate(sim_config)
        record.update(
            pdp_mean=run.pdp_hat,
            pdp_se=float("nan"),
            throughput_mean=run.throughput_hat,
            throughput_se=float("nan"),
            replications=[_sim_counts(run)],
        )
    else:
        result = estimate_with_ci(sim_config, config.n_reps)
        record.update(
            pdp_mean=result.pdp_mean,
            pdp_se=result.pdp_se,
            throughput_mean=result.throughput_mean,
            throughput_se=result.throughput_se,
            replications=[_sim_counts(run) for run in result.replications],
        )
    if config.out:
        Path(config.out).write_text(
            json.dumps(record, indent=2) + "\n", encoding="utf-8"
        )
    return record, EXIT_OK


def _sim_counts(run) -> dict:
    return {
        "drops": run.drops,
        "new_packets": run.new_packets,
        "successes": run.successes,
        "pdp_hat": run.pdp_hat,
        "throughput_hat": run.throughput_hat,
    }


def _rho_point(task: tuple[ExperimentConfig, str, str, float]) -> dict:
    config, protocol_name, policy_kind, rho = task
    protocol = Protocol(protocol_name)
    row = {
        "protocol": protocol_name,
        "policy": policy_kind,
        "rho": rho,
        "status": STATUS_OK,
        "pdp": float("nan"),
        "throughput": float("nan"),
    }
    try:
        params = config.link_parameters(rho=rho)
        if policy_kind == "optimal":
            report = solve_protocol(params, protocol, config.tth, config.i_max, config.delta)
            row["status"] = _STATUS_TOKEN[report.status]
            row["pdp"] = report.pdp
            row["throughput"] = report.throughput
        else:
            point = evaluate_policy(myopic_policy(protocol, params), params, protocol)
            feasible = point.throughput >= config.tth
            row["status"] = STATUS_OK if feasible else STATUS_INFEASIBLE
            row["pdp"] = point.pdp
            row["throughput"] = point.throughput
    except MultipleRecurrentClasses:
        row["status"] = STATUS_MULTICHAIN
    except (SingularSystem, NumericalTrouble):
        row["status"] = STATUS_NUMERICAL
    if row["status"] != STATUS_OK:
        # An unmet floor (or a failed point) counts as full loss.
        row["pdp"] = 1.0
    return row


def _tth_point(task: tuple[ExperimentConfig, str, int, float]) -> dict:
    config, protocol_name, ef, tth = task
    protocol = Protocol(protocol_name)
    row = {
        "protocol": protocol_name,
        "ef": ef,
        "tth": tth,
        "status": STATUS_OK,
        "success_prob": 0.0,
        "throughput": float("nan"),
    }
    try:
        params = config.link_parameters(cost_feedback=ef)
        report = solve_protocol(params, protocol, tth, config.i_max, config.delta)
        row["status"] = _STATUS_TOKEN[report.status]
        row["throughput"] = report.throughput
        if report.status is SolveStatus.OPTIMAL:
            row["success_prob"] = 1.0 - report.pdp
    except MultipleRecurrentClasses:
        row["status"] = STATUS_MULTICHAIN
    except (SingularSystem, NumericalTrouble):
        row["status"] = STATUS_NUMERICAL
    except ConfigError:
        # e.g. an ef value the battery cannot accommodate
        row["status"] = STATUS_NUMERICAL
    if row["status"] != STATUS_OK:
        row["success_prob"] = 0.0
    return row


def _run_tasks(tasks: list, worker, workers: int) -> list[dict]:
    if workers <= 1:
        return [worker(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map() yields results in submission order, so rows stay in grid order.
        return list(pool.map(worker, tasks))


def run_sweep_rho(config: ExperimentConfig) -> list[dict]:
    """One row per (protocol, policy kind, rho), in that nesting order."""
    tasks = [
        (config, protocol.value, policy_kind, rho)
        for protocol in Protocol
        for policy_kind in ("optimal", "myopic")
        for rho in config.rho_grid
    ]
    rows = _run_tasks(tasks, _rho_point, config.workers)
    if config.out:
        write_csv(config.out, RHO_SWEEP_COLUMNS, rows)
    return rows


def run_sweep_tth(config: ExperimentConfig) -> list[dict]:
    """One row per (protocol, feedback cost, throughput floor)."""
    tasks = [
        (config, protocol.value, ef, tth)
        for protocol in Protocol
        for ef in config.ef_grid
        for tth in config.tth_grid
    ]
    rows = _run_tasks(tasks, _tth_point, config.workers)
    if config.out:
        write_csv(config.out, TTH_SWEEP_COLUMNS, rows)
    return rows
