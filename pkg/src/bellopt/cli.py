"""Command-line front end: `optimize` and `scan` runs driven by a JSON config
file with flag overrides, an `oracle` subcommand printing closed-form values,
and `verify` which runs the acceptance suite.

Exit codes: 0 success, 1 validation error, 2 acceptance failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from pathlib import Path

import numpy as np

from . import acceptance, oracle
from .bell import parse_inequality
from .channels import build_noise_model
from .network import build_chain, build_star
from .ansatz import make_ansatz
from .optimize import DEFAULT_STEP_SIZES, OptimizerConfig, gradient_descent, scan

DEFAULT_CONFIG = {
    "network": "chsh",
    "prep": "phi_plus",
    "meas": "local_ry",
    "inequality": None,  # defaults to the network's own inequality
    "noise": {"model": "none", "placement": "uniform", "gamma": 0.0},
    "optimizer": {
        "step_size": None,  # defaults per network
        "num_steps": 30,
        "restarts": 10,
        "gradient_method": "parameter_shift",
        "seed": 0,
    },
    "mode": {"shots": None, "seed": 0},
    "warm_start": False,
    "output_dir": ".",
}


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"config field '{field}': {message}")
        self.field = field


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def _parse_set_flag(expr: str) -> dict:
    if "=" not in expr:
        raise ConfigError(expr, "expected key.path=value")
    path, raw = expr.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    out: dict = {}
    cursor = out
    keys = path.split(".")
    for key in keys[:-1]:
        cursor[key] = {}
        cursor = cursor[key]
    cursor[keys[-1]] = value
    return out


def load_config(path: str | None, overrides: list[str]) -> dict:
    config = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        try:
            with open(path) as fh:
                config = _merge(config, json.load(fh))
        except FileNotFoundError:
            raise ConfigError("config", f"file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc}")
    for expr in overrides:
        config = _merge(config, _parse_set_flag(expr))
    return config


def _build_network(spec: str):
    spec = spec.strip().lower()
    if spec == "chsh":
        return build_star(1), "chsh"
    if spec == "bilocal":
        return build_star(2), "bilocal"
    for family, builder in (("star", build_star), ("chain", build_chain)):
        if spec.startswith(family + ":"):
            try:
                n = int(spec.split(":", 1)[1])
            except ValueError:
                raise ConfigError("network", f"bad size in {spec!r}")
            return builder(n), f"{family}:{n}"
    raise ConfigError("network", f"unknown network {spec!r}; use chsh, bilocal, star:n, or chain:n")


def _resolve_run(config: dict):
    (topo, wiring), net_id = _build_network(config["network"])
    try:
        ansatz = make_ansatz(topo, wiring, prep=config["prep"], meas=config["meas"])
    except ValueError as exc:
        raise ConfigError("prep/meas", str(exc))
    ineq_id = config["inequality"] or ("chsh" if net_id == "chsh" else net_id)
    try:
        ineq = parse_inequality(ineq_id)
    except ValueError as exc:
        raise ConfigError("inequality", str(exc))
    opt = config["optimizer"]
    step = opt["step_size"]
    if step is None:
        step = DEFAULT_STEP_SIZES.get(net_id, 0.2)
    try:
        opt_config = OptimizerConfig(
            step_size=step,
            num_steps=opt["num_steps"],
            restarts=opt["restarts"],
            gradient_method=opt["gradient_method"],
            seed=opt["seed"],
        )
    except ValueError as exc:
        raise ConfigError("optimizer", str(exc))
    return topo, wiring, ansatz, ineq, opt_config, net_id


def _gamma_values(noise_cfg: dict) -> list[float]:
    gamma = noise_cfg.get("gamma", 0.0)
    if isinstance(gamma, dict):
        try:
            start, stop, step = gamma["start"], gamma["stop"], gamma["step"]
        except KeyError as exc:
            raise ConfigError("noise.gamma", f"grid spec needs start/stop/step (missing {exc})")
        if step <= 0:
            raise ConfigError("noise.gamma", "grid step must be positive")
        values = list(np.arange(start, stop + step / 2, step))
    else:
        values = [float(gamma)]
    for g in values:
        if not 0.0 <= g <= 1.0:
            raise ConfigError("noise.gamma", f"value {g} outside [0, 1]")
    return [float(g) for g in values]


def _config_json(config: dict) -> str:
    return json.dumps(config, sort_keys=True, separators=(",", ":")).replace('"', "'")


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def cmd_optimize(config: dict) -> int:
    topo, wiring, ansatz, ineq, opt_config, net_id = _resolve_run(config)
    noise_cfg = config["noise"]
    gammas = _gamma_values(noise_cfg)
    if len(gammas) != 1:
        raise ConfigError("noise.gamma", "optimize takes a single gamma; use the scan command for grids")
    noise = build_noise_model(topo, noise_cfg["model"], noise_cfg.get("placement", "uniform"), gammas[0])
    shots = config["mode"].get("shots")
    trace = gradient_descent(ansatz, noise, ineq, opt_config,
                             shots=shots, shots_seed=config["mode"].get("seed", 0))
    outdir = Path(config["output_dir"])
    outdir.mkdir(parents=True, exist_ok=True)
    cfg_str = _config_json(config)
    trace_path = outdir / f"trace_{net_id.replace(':', '')}.csv"
    with open(trace_path, "w") as fh:
        fh.write("step,score,grad_norm,config\n")
        for i, (score, gn) in enumerate(zip(trace.scores, trace.grad_norms)):
            fh.write(f"{i},{_fmt(score)},{_fmt(gn)},\"{cfg_str}\"\n")
    best_path = outdir / f"best_settings_{net_id.replace(':', '')}.json"
    with open(best_path, "w") as fh:
        json.dump(
            {
                "network": net_id,
                "inequality": ineq.id,
                "best_score": trace.best_score,
                "settings": [float(v) for v in trace.best_settings],
                "config": config,
            },
            fh,
            indent=2,
        )
    print(f"best score {_fmt(trace.best_score)} (classical bound {ineq.classical_bound:g})")
    print(f"wrote {trace_path} and {best_path}")
    return 0


def cmd_scan(config: dict) -> int:
    topo, wiring, ansatz, ineq, opt_config, net_id = _resolve_run(config)
    noise_cfg = config["noise"]
    gammas = _gamma_values(noise_cfg)
    if len(gammas) < 1:
        raise ConfigError("noise.gamma", "empty gamma grid")
    model = noise_cfg["model"]
    placement = noise_cfg.get("placement", "uniform")
    make_noise = lambda g: build_noise_model(topo, model, placement, g)
    oracle_args = (model, net_id, placement)
    if model == "colored":
        prep = config["prep"] if isinstance(config["prep"], str) else "psi_plus"
        from .ansatz import PREPARATION_ALIASES
        prep = PREPARATION_ALIASES.get(prep, prep).replace("_state_preparation", "")
        oracle_args = oracle_args + (prep,)
    result = scan(make_noise, ansatz, ineq, gammas, opt_config,
                  warm_start=bool(config.get("warm_start", False)), oracle_args=oracle_args)
    outdir = Path(config["output_dir"])
    outdir.mkdir(parents=True, exist_ok=True)
    cfg_str = _config_json(config)
    def short(layer):
        names = [layer] if isinstance(layer, str) else list(layer)
        return "-".join(dict.fromkeys(names))

    ansatz_tag = f"{short(config['prep'])}_{short(config['meas'])}"
    stem = f"scan_{model}_{net_id.replace(':', '')}_{placement}_{ansatz_tag}"
    path = outdir / f"{stem}.csv"
    with open(path, "w") as fh:
        fh.write("gamma,best_score,oracle_score,restarts_used,config\n")
        for g, s, o, r in zip(result.gammas, result.best_scores, result.oracle_scores, result.restarts_used):
            o_str = "" if o is None else _fmt(o)
            fh.write(f"{g:.6f},{_fmt(s)},{o_str},{r},\"{cfg_str}\"\n")
    json_path = outdir / f"{stem}.json"
    with open(json_path, "w") as fh:
        json.dump(
            {
                "network": net_id,
                "inequality": ineq.id,
                "warm_start": result.warm_start,
                "gammas": result.gammas,
                "best_scores": result.best_scores,
                "oracle_scores": result.oracle_scores,
                "best_settings": [[float(v) for v in s] for s in result.best_settings],
                "config": config,
            },
            fh,
            indent=2,
        )
    print(f"wrote {path} and {json_path} ({len(result.gammas)} points, warm_start={result.warm_start})")
    return 0


ORACLE_IDS = ("classical-star", "horodecki", "curve", "ad-breaking")


def cmd_oracle(args: list[str]) -> int:
    if not args:
        print("oracle formulas: " + ", ".join(ORACLE_IDS), file=sys.stderr)
        return 1
    formula, rest = args[0], args[1:]
    kv = {}
    positional = []
    for token in rest:
        if "=" in token:
            k, v = token.split("=", 1)
            kv[k] = v
        else:
            positional.append(token)
    try:
        if formula == "classical-star":
            value = oracle.classical_source_star_score(int(kv["n"]), int(kv["k"]))
        elif formula == "horodecki":
            name = kv.get("state", "phi_plus")
            if name not in oracle.NAMED_STATES:
                raise ValueError(f"unknown state {name!r}; known: {', '.join(oracle.NAMED_STATES)}")
            value = oracle.horodecki_max_chsh(oracle.NAMED_STATES[name]())
        elif formula == "ad-breaking":
            g1 = float(kv.get("gamma1", kv.get("gamma", 0.0)))
            g2 = float(kv.get("gamma2", kv.get("gamma", 0.0)))
            print("broken" if oracle.amplitude_damping_breaking(g1, g2) else "not-broken")
            return 0
        elif formula == "curve":
            if len(positional) < 3:
                raise ValueError("usage: oracle curve <model> <network> <placement> gamma=<g> [n=<n>] [prep=<p>]")
            model, network, placement = positional[:3]
            if ":" not in network and network not in ("chsh", "bilocal"):
                network = f"{network}:{kv.get('n', 2)}"
            value = oracle.curve(model, network, placement, float(kv["gamma"]),
                                 prep=kv.get("prep", "psi_plus"))
        else:
            print(f"unknown formula {formula!r}; available: " + ", ".join(ORACLE_IDS), file=sys.stderr)
            return 1
    except (KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(_fmt(value))
    return 0


def cmd_verify(criteria: list[int] | None) -> int:
    results = acceptance.run_all(criteria)
    failed = [r for r in results if not r.passed]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} criterion-{r.id} ({r.elapsed:.1f}s): {r.details}")
    if failed:
        print(f"{len(failed)} criterion(s) failed: " + ", ".join(str(r.id) for r in failed))
        return 2
    print(f"all {len(results)} criteria passed")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="bellopt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("optimize", "scan"):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY.PATH=VALUE",
                       help="override a config entry (flags win over the file)")
        p.add_argument("--dump-config", action="store_true",
                       help="print the resolved config as JSON and exit")
    p_oracle = sub.add_parser("oracle")
    p_oracle.add_argument("args", nargs="*")
    p_verify = sub.add_parser("verify")
    p_verify.add_argument("--criteria", default=None,
                          help="comma-separated criterion ids (default: all)")
    ns = parser.parse_args(argv)

    if ns.command == "oracle":
        return cmd_oracle(ns.args)
    if ns.command == "verify":
        criteria = None
        if ns.criteria:
            criteria = [int(c) for c in ns.criteria.split(",")]
        return cmd_verify(criteria)
    try:
        config = load_config(ns.config, ns.set)
        if ns.dump_config:
            print(json.dumps(config, indent=2, sort_keys=True))
            return 0
        if ns.command == "optimize":
            return cmd_optimize(config)
        return cmd_scan(config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
