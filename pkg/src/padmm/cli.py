"""Experiment runner CLI: `padmm run | plan | validate`.

Configs are flat `key = value` text files; every key can be overridden by a
flag.  Reports are newline-delimited JSON: a config echo, one record per
(seed, round), and a summary with aggregates and the privacy accounting.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import accountant, data as data_mod, engine, svt, topology
from .metrics import error_rate, average_loss  # noqa: F401  (public surface)
from .solver import SolverConfig


@dataclass
class ExperimentConfig:
    algorithm: str = "nonprivate"  # nonprivate | pp_admm | ipp_admm
    # Data source: CSV when dataset_csv is set, otherwise synthetic blobs.
    dataset_csv: str | None = None
    label_column: str | None = None
    positive_value: str | None = None
    synthetic_n: int = 2000
    synthetic_d: int = 5
    synthetic_separation: float = 5.0
    n_agents: int = 5
    topology: str = "random"  # ring | complete | random
    edge_prob: float = 0.5
    topology_seed: int = 0
    split_seed: int = 0
    epsilon: float = 1.0
    delta: float = 1e-4
    T: int = 30
    eta: float = 0.5
    splits: float = 0.001
    beta: float = 10.0**-3.5
    c_max: int = 15
    c_loss: float = 2.0
    alpha: float = 1e-3
    svt_budget_fraction: float = 0.1
    lambda_hat: float | None = None  # None: planned floor (private) / 0.01 (nonprivate)
    max_iterations: int = 10_000
    seeds: tuple = (0,)
    test_fraction: float = 0.2
    output: str | None = None
    insecure_no_noise: bool = False


@dataclass
class RunReport:
    config: dict
    rounds: list  # one dict per (seed, round)
    summary: dict

    def to_ndjson(self) -> str:
        lines = [json.dumps({"type": "config", **self.config})]
        lines += [json.dumps({"type": "round", **record}) for record in self.rounds]
        lines.append(json.dumps({"type": "summary", **self.summary}))
        return "\n".join(lines) + "\n"


class ConfigError(ValueError):
    pass


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _coerce(name: str, raw):
    if name not in _FIELDS:
        raise ConfigError(f"unknown config key {name!r}")
    if isinstance(raw, str):
        try:
            raw = json.loads(raw)
        except json.JSONDecodeError:
            pass  # keep as string (paths, names)
    if name == "seeds":
        if isinstance(raw, (int, float)):
            raw = [int(raw)]
        return tuple(int(s) for s in raw)
    return raw


def parse_config_text(text: str) -> dict:
    """Parse `key = value` lines; '#' starts a comment."""
    values = {}
    for line_num, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_num}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        values[key] = _coerce(key, value.strip())
    return values


def load_config(path: str | None, overrides: dict) -> ExperimentConfig:
    values = {}
    if path is not None:
        with open(path) as fh:
            values.update(parse_config_text(fh.read()))
    for key, value in overrides.items():
        if value is not None:
            values.update({key: _coerce(key, value)})
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def config_echo(cfg: ExperimentConfig) -> dict:
    echo = dataclasses.asdict(cfg)
    echo["seeds"] = list(cfg.seeds)
    return echo


def build_graph(cfg: ExperimentConfig) -> topology.Graph:
    if cfg.topology == "ring":
        return topology.ring(cfg.n_agents)
    if cfg.topology == "complete":
        return topology.complete(cfg.n_agents)
    if cfg.topology == "random":
        return topology.random_connected(cfg.n_agents, cfg.edge_prob, cfg.topology_seed)
    raise ConfigError(f"unknown topology {cfg.topology!r}")


def prepare_data(cfg: ExperimentConfig):
    """Load or generate, normalize with training maxima, split and partition.

    Returns (per-agent train Datasets, test Dataset).
    """
    if cfg.dataset_csv is not None:
        if cfg.label_column is None or cfg.positive_value is None:
            raise ConfigError("CSV input needs label_column and positive_value")
        raw = data_mod.load_csv(cfg.dataset_csv, cfg.label_column, cfg.positive_value)
    else:
        raw = data_mod.synthetic_blobs(
            cfg.synthetic_n, cfg.synthetic_d, cfg.synthetic_separation, cfg.split_seed
        )
    if not 0 < cfg.test_fraction < 1:
        raise ConfigError("test_fraction must be in (0, 1)")
    n = raw.n_samples
    n_test = max(1, int(round(n * cfg.test_fraction)))
    if n - n_test < cfg.n_agents:
        raise ConfigError("not enough training samples for the agent count")
    perm = np.random.default_rng(cfg.split_seed).permutation(n)
    raw_train = raw.subset(perm[n_test:])
    raw_test = raw.subset(perm[:n_test])
    # Held-out data is normalized with the training columns' maxima.
    scales = data_mod.column_scales(raw_train)
    train = data_mod.preprocess(raw_train, scales)
    test = data_mod.preprocess(raw_test, scales)
    plan = data_mod.partition(train, cfg.n_agents, cfg.split_seed)
    return data_mod.split_by_plan(train, plan), test


def build_plan(cfg: ExperimentConfig, train_parts, graph) -> accountant.BudgetPlan | None:
    if cfg.algorithm == "nonprivate":
        return None
    sizes = {i: part.n_samples for i, part in enumerate(train_parts)}
    common = dict(
        epsilon=cfg.epsilon,
        delta=cfg.delta,
        T=cfg.T,
        splits=cfg.splits,
        dataset_sizes=sizes,
        n_agents=cfg.n_agents,
        eta=cfg.eta,
        degrees=graph.degrees(),
        beta=cfg.beta,
    )
    if cfg.algorithm == "pp_admm":
        return accountant.plan_budget(**common)
    if cfg.algorithm == "ipp_admm":
        rho_total = accountant.dp_to_zcdp(cfg.epsilon, cfg.delta)
        if not 0 < cfg.svt_budget_fraction < 1:
            raise ConfigError("svt_budget_fraction must be in (0, 1)")
        eps_svt_total = math.sqrt(2.0 * cfg.svt_budget_fraction * rho_total)
        eps_pair = svt.svt_split_ratio(cfg.c_max, eps_svt_total)
        return accountant.plan_budget(
            **common, c_broadcasts=cfg.c_max, eps_ratio_svt=eps_pair
        )
    raise ConfigError(f"unknown algorithm {cfg.algorithm!r}")


def _round_record(seed, trace):
    return {
        "seed": seed,
        "round": trace.round,
        "average_loss": trace.average_loss,
        "error_rate": trace.error_rate_test,
        "consensus_residual": trace.consensus_residual,
        "broadcasts": {str(k): v for k, v in trace.broadcasts.items()},
        "cumulative_rho": {str(k): v for k, v in trace.cumulative_rho.items()},
    }


def run_experiment(cfg: ExperimentConfig) -> RunReport:
    graph = build_graph(cfg)
    train_parts, test = prepare_data(cfg)
    plan = build_plan(cfg, train_parts, graph)
    solver_cfg = SolverConfig(beta=cfg.beta, max_iterations=cfg.max_iterations)
    if cfg.insecure_no_noise and cfg.algorithm != "nonprivate":
        print(
            "WARNING: --insecure-no-noise disables all privacy noise; "
            "this run provides NO differential privacy (epsilon = inf).",
            file=sys.stderr,
        )

    rounds = []
    per_seed_final = []
    ledger_report = None
    broadcast_counts = {}
    for seed in cfg.seeds:
        if cfg.algorithm == "nonprivate":
            lam = cfg.lambda_hat if cfg.lambda_hat is not None else 0.01
            traces = engine.run_nonprivate(
                train_parts, graph, cfg.eta, lam, cfg.T, solver_cfg, test=test
            )
            ledger = None
        elif cfg.algorithm == "pp_admm":
            traces, ledger = engine.run_pp_admm(
                train_parts, graph, plan, cfg.eta, cfg.T, solver_cfg, seed,
                lambda_hat=cfg.lambda_hat, test=test,
                noise_disabled=cfg.insecure_no_noise,
            )
        else:
            traces, ledger = engine.run_ipp_admm(
                train_parts, graph, plan, cfg.eta, cfg.T, cfg.alpha, cfg.c_max,
                cfg.c_loss, solver_cfg, seed, lambda_hat=cfg.lambda_hat,
                test=test, noise_disabled=cfg.insecure_no_noise,
            )
        rounds += [_round_record(seed, trace) for trace in traces]
        per_seed_final.append(traces[-1] if traces else None)
        if ledger is not None:
            ledger_report = ledger.report()
            if cfg.insecure_no_noise:
                ledger_report["epsilon_sufficient"] = "inf"
        if traces:
            counts = {str(i): 0 for i in range(graph.n)}
            for trace in traces:
                for i, did in trace.broadcasts.items():
                    counts[str(i)] += int(did)
            broadcast_counts[str(seed)] = counts

    summary = _summarize(cfg, rounds, ledger_report, broadcast_counts, graph)
    report = RunReport(config=config_echo(cfg), rounds=rounds, summary=summary)
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(report.to_ndjson())
    return report


def _summarize(cfg, rounds, ledger_report, broadcast_counts, graph):
    by_round = {}
    for record in rounds:
        by_round.setdefault(record["round"], []).append(record)
    mean_loss, std_loss, mean_err, std_err = [], [], [], []
    for t in sorted(by_round):
        losses = np.array([r["average_loss"] for r in by_round[t]])
        mean_loss.append(float(losses.mean()))
        std_loss.append(float(losses.std()) if len(losses) > 1 else 0.0)
        errs = [r["error_rate"] for r in by_round[t] if r["error_rate"] is not None]
        if errs:
            errs = np.array(errs)
            mean_err.append(float(errs.mean()))
            std_err.append(float(errs.std()) if len(errs) > 1 else 0.0)
    return {
        "n_seeds": len(cfg.seeds),
        "graph_edges": [list(e) for e in graph.edge_list()],
        "mean_average_loss": mean_loss,
        "std_average_loss": std_loss,
        "mean_error_rate": mean_err,
        "std_error_rate": std_err,
        "privacy": ledger_report,
        "broadcast_counts": broadcast_counts,
    }


def validate_config(cfg: ExperimentConfig) -> list:
    """Check a config's derived objects without training; returns findings."""
    notes = []
    graph = build_graph(cfg)
    notes.append(f"graph: {cfg.topology} on {graph.n} agents, {len(graph.edges)} edges")
    train_parts, test = prepare_data(cfg)
    notes.append(
        f"data: {sum(p.n_samples for p in train_parts)} train / {test.n_samples} test, "
        f"d={train_parts[0].dimension}"
    )
    plan = build_plan(cfg, train_parts, graph)
    if plan is not None:
        eps_back = accountant.zcdp_sufficient_epsilon(plan.rho_total, plan.delta_total)
        if abs(eps_back - cfg.epsilon) > 1e-9:
            raise ConfigError("budget plan does not invert to the configured epsilon")
        notes.append(
            f"plan: rho_total={plan.rho_total:.6g}, lambda_hat_floor={plan.lambda_hat_floor:.6g}"
        )
    return notes


def _plan_to_dict(plan: accountant.BudgetPlan) -> dict:
    out = dataclasses.asdict(plan)
    out["sigma_i1"] = {str(k): v for k, v in plan.sigma_i1.items()}
    out["sigma_i2"] = {str(k): v for k, v in plan.sigma_i2.items()}
    if plan.svt_eps is not None:
        out["svt_eps"] = list(plan.svt_eps)
    return out


def _add_override_args(parser):
    parser.add_argument("--config", help="flat key=value config file")
    for name, f in _FIELDS.items():
        flag = "--" + name.replace("_", "-")
        if f.type == "bool" or isinstance(f.default, bool):
            parser.add_argument(flag, dest=name, action="store_const", const="true")
        else:
            parser.add_argument(flag, dest=name)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="padmm")
    sub = parser.add_subparsers(dest="command", required=True)
    for command in ("run", "plan", "validate"):
        _add_override_args(sub.add_parser(command))
    args = parser.parse_args(argv)

    overrides = {name: getattr(args, name) for name in _FIELDS}
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "run":
            report = run_experiment(cfg)
            if not cfg.output:
                sys.stdout.write(report.to_ndjson())
            return 0
        if args.command == "plan":
            graph = build_graph(cfg)
            train_parts, _ = prepare_data(cfg)
            if cfg.algorithm == "nonprivate":
                raise ConfigError("plan requires a private algorithm")
            plan = build_plan(cfg, train_parts, graph)
            print(json.dumps(_plan_to_dict(plan), indent=2))
            return 0
        for note in validate_config(cfg):
            print(note)
        print("config OK")
        return 0
    except Exception as exc:  # CLI boundary: report and exit nonzero
        print(f"padmm: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
