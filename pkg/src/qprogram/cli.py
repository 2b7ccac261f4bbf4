"""Command line runner: ``qprogram optimize | diamond | sweep``.

Configuration is a single JSON document (``--config``); command line flags
override the matching config fields.  Results are written as CSV/JSON data
files.  Failures print ``{"error": code, "message": text}`` on standard error
and exit with a nonzero status.

Example config for ``optimize``::

    {
      "channel": {"type": "amplitude_damping", "p": 0.5},
      "processor": {"type": "pbt", "n_ports": 2},
      "cost": {"kind": "trace"},
      "optimizer": {"method": "projected_subgradient", "iterations": 300},
      "sweep": {"param": "p", "values": [0.25, 0.5, 0.75]},
      "output_path": "out"
    }
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import costs, optim, processors, qcore, sdpsolve


class ConfigError(ValueError):
    pass


EXIT_CONFIG = 2
EXIT_NUMERIC = 3


# ---------------------------------------------------------------------------
# spec parsing


def channel_from_spec(spec: dict) -> qcore.KrausChannel:
    """Channel from ``{"type": ..., params}`` or a full Kraus JSON block."""
    if not isinstance(spec, dict):
        raise ConfigError("channel spec must be a JSON object")
    if "kraus" in spec:
        return qcore.channel_from_json(spec)
    kind = spec.get("type")
    d = int(spec.get("d", 2))
    try:
        if kind == "identity":
            return qcore.identity(d)
        if kind == "depolarizing":
            return qcore.depolarizing(float(spec["p"]), d)
        if kind == "amplitude_damping":
            return qcore.amplitude_damping(float(spec["p"]))
        if kind == "pauli":
            return qcore.pauli_channel(spec["probs"])
        if kind == "rotation":
            return qcore.rotation(float(spec["theta"]), spec.get("axis", "X"))
        if kind == "unitary":
            return qcore.channel_from_unitary(qcore.matrix_from_json(spec["matrix"]))
    except KeyError as exc:
        raise ConfigError(f"channel spec {kind!r} is missing field {exc.args[0]!r}") from None
    raise ConfigError(f"unknown channel type {kind!r}")


def processor_from_spec(spec: dict) -> processors.ProcessorMap:
    try:
        return processors.processor_from_spec(spec)
    except KeyError as exc:
        raise ConfigError(f"processor spec is missing field {exc.args[0]!r}") from None


def optimizer_config(spec: dict, seed: int) -> tuple[str, optim.OptimizerConfig]:
    spec = dict(spec)
    method = spec.pop("method", "projected_subgradient")
    if method not in optim.OPTIMIZERS:
        raise ConfigError(f"unknown optimizer {method!r}")
    allowed = {"iterations", "schedule", "a", "b", "c", "target_value", "constraint", "choi_d",
               "eta_scale", "max_samples", "early_stop", "linesearch_evals"}
    unknown = set(spec) - allowed
    if unknown:
        raise ConfigError(f"unknown optimizer fields {sorted(unknown)}")
    return method, optim.OptimizerConfig(seed=seed, **spec)


def _initial_program(kind: str, proc: processors.ProcessorMap, chi: np.ndarray):
    if kind == "maximally_mixed":
        return None
    if kind == "choi":
        n = getattr(getattr(proc, "spec", None), "n_ports", None)
        if proc.label.startswith("pbt(") and n:
            return processors.pbt_choi_program(chi, n)
        if proc.program_dim == chi.shape[0]:
            return chi
    raise ConfigError(f"initial program {kind!r} is not available for {proc.label}")


def _choi_baseline(proc, chi):
    """Cost of the natural program (channel Choi matrix) where it applies."""
    try:
        init = _initial_program("choi", proc, chi)
    except ConfigError:
        return None
    return qcore.trace_norm(chi - proc.apply(init))


def _set_path(cfg: dict, dotted: str, value):
    parts = dotted.split(".")
    if len(parts) == 1:
        parts = ["channel", parts[0]]
    node = cfg
    for key in parts[:-1]:
        node = node.setdefault(key, {})
    node[parts[-1]] = value


# ---------------------------------------------------------------------------
# commands


def run_single(cfg: dict) -> dict:
    """One optimization run; returns trace, program and bound report."""
    seed = int(cfg.get("seed", 0))
    chan = channel_from_spec(cfg.get("channel", {}))
    proc = processor_from_spec(cfg.get("processor", {"type": "teleport"}))
    if (chan.d_in, chan.d_out) != (proc.choi_d_in, proc.choi_d_out):
        raise ConfigError("channel and processor dimensions do not match")
    chi = qcore.choi_from_kraus(chan)
    cspec = cfg.get("cost", {"kind": "trace"})
    cost = costs.make_cost(cspec.get("kind", "trace"), proc, chi, mu=cspec.get("mu"), p=cspec.get("p"))
    method, ocfg = optimizer_config(cfg.get("optimizer", {}), seed)
    init = _initial_program(cfg.get("init", "maximally_mixed"), proc, chi)
    t0 = time.perf_counter()
    trace = optim.OPTIMIZERS[method](cost, init, ocfg)
    elapsed = time.perf_counter() - t0
    report = costs.bound_report(costs.trace_cost(proc, chi), trace.best_program,
                                with_diamond=bool(cfg.get("diamond", False)),
                                tol=float(cfg.get("tol", 1e-6)))
    report["best_cost"] = trace.best_cost
    report["choi_program_c1"] = _choi_baseline(proc, chi)
    return {"trace": trace, "program": trace.best_program, "report": report, "seconds": elapsed}


def _sweep_point(args):
    cfg, index = args
    out = run_single(cfg)
    return index, out["trace"].to_csv(include_time=False), out["program"], out["report"], out["seconds"]


def _write_json(path, obj):
    with open(path, "w") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def _json_safe(v):
    if isinstance(v, float) and not np.isfinite(v):
        return str(v)
    return v


def _map(fn, items, jobs):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def cmd_optimize(cfg: dict, jobs: int = 1) -> dict:
    """Run one optimization, or one per sweep value, and write the data files.

    Files: ``trace.csv``, ``program.json``, ``bounds.json`` per run (with a
    ``point_<i>_`` prefix in sweeps), ``summary.csv`` for sweeps, and
    ``metadata.json`` with wall-clock timings.
    """
    out_dir = cfg.get("output_path", "out")
    os.makedirs(out_dir, exist_ok=True)
    seed = int(cfg.get("seed", 0))
    sweep = cfg.get("sweep")
    if sweep:
        param, values = sweep.get("param"), sweep.get("values")
        if not param or not isinstance(values, list):
            raise ConfigError("sweep needs 'param' and a list of 'values'")
        points = []
        for i, v in enumerate(values):
            c = copy.deepcopy(cfg)
            c.pop("sweep")
            _set_path(c, param, v)
            c["seed"] = seed + i
            points.append((c, i))
    else:
        points = [(dict(cfg, seed=seed), 0)]
    results = _map(_sweep_point, points, jobs)
    meta = {"seconds": {}}
    rows = []
    for index, csv_text, program, report, seconds in results:
        prefix = f"point_{index}_" if sweep else ""
        with open(os.path.join(out_dir, prefix + "trace.csv"), "w", newline="") as f:
            f.write(csv_text)
        _write_json(os.path.join(out_dir, prefix + "program.json"), qcore.matrix_to_json(program))
        _write_json(os.path.join(out_dir, prefix + "bounds.json"), {k: _json_safe(v) for k, v in report.items()})
        meta["seconds"][str(index)] = seconds
        rows.append((index, report))
    if sweep:
        with open(os.path.join(out_dir, "summary.csv"), "w", newline="") as f:
            w = csv.writer(f, lineterminator="\r\n")
            w.writerow(["index", sweep["param"], "best_cost", "c1", "choi_program_c1"])
            for index, report in rows:
                base = report["choi_program_c1"]
                w.writerow([index, repr(sweep["values"][index]), repr(report["best_cost"]),
                            repr(report["c1"]), "" if base is None else repr(base)])
    _write_json(os.path.join(out_dir, "metadata.json"), meta)
    return {"output_path": out_dir, "points": len(rows),
            "best_costs": [r["best_cost"] for _, r in rows]}


def cmd_diamond(channel_a: dict, channel_b: dict, tol: float = 1e-6) -> dict:
    """Distances between two channels with the bounds that relate them."""
    a, b = channel_from_spec(channel_a), channel_from_spec(channel_b)
    if (a.d_in, a.d_out) != (b.d_in, b.d_out):
        raise ConfigError("channels have different dimensions")
    chi_a, chi_b = qcore.choi_from_kraus(a), qcore.choi_from_kraus(b)
    diff = chi_a - chi_b
    sol = sdpsolve.diamond_distance(diff, a.d_in, tol)
    c1 = qcore.trace_norm(diff)
    f = qcore.fidelity(chi_a, chi_b)
    return {
        "diamond": sol.objective,
        "diamond_gap": sol.duality_gap,
        "trace": c1,
        "fidelity": f,
        "infidelity": 1 - f * f,
        "diamond_lower": c1,
        "diamond_upper": a.d_in * c1,
        "spectral_upper": sdpsolve.spectral_diamond_upper(chi_a, chi_b, a.d_in),
        "fidelity_bound": 2 * np.sqrt(max(0.0, 1 - f * f)),
    }


def _pbt_identity_point(args):
    n, tol = args
    proc = processors.pbt_reduced_processor(n)
    phi = qcore.max_entangled_projector(2)
    choi_val = sdpsolve.diamond_distance(phi - proc.apply(phi), 2, tol).objective
    opt = sdpsolve.optimal_program_sdp(proc, phi, tol, "choi_set").objective
    return n, choi_val, opt, 4.0 / n


def cmd_sweep_pbt_identity(n_list, out_path=None, tol: float = 1e-6, jobs: int = 1) -> list:
    """Diamond error of PBT identity simulation: Choi program vs optimized Choi-set program."""
    rows = _map(_pbt_identity_point, [(int(n), tol) for n in n_list], jobs)
    text_rows = [["N", "choi_program_diamond", "optimized_diamond", "bound"]]
    text_rows += [[n, repr(a), repr(b), repr(c)] for n, a, b, c in rows]
    if out_path:
        os.makedirs(os.path.dirname(os.path.abspath(out_path)), exist_ok=True)
        with open(out_path, "w", newline="") as f:
            csv.writer(f, lineterminator="\r\n").writerows(text_rows)
    return rows


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qprogram", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output path")
        p.add_argument("--iters", type=int, help="optimizer iterations")
        p.add_argument("--tol", type=float, help="SDP duality-gap tolerance")
        p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    p = sub.add_parser("optimize", help="optimize a program state")
    common(p)
    p = sub.add_parser("diamond", help="distances between two channels")
    common(p)
    p.add_argument("--channel-a", help="channel spec JSON text")
    p.add_argument("--channel-b", help="channel spec JSON text")
    p = sub.add_parser("sweep", help="parameter sweeps")
    common(p)
    p.add_argument("kind", choices=["pbt_identity"])
    p.add_argument("--n-list", default="2,3,4,5,6", help="comma separated port numbers")
    return parser


def _load_config(path):
    if not path:
        return {}
    try:
        with open(path) as f:
            cfg = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def _fail(code, message, status):
    sys.stderr.write(json.dumps({"error": code, "message": message}) + "\n")
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.tol is not None:
            cfg["tol"] = args.tol
        if args.iters is not None:
            cfg.setdefault("optimizer", {})["iterations"] = args.iters
        if args.out is not None:
            cfg["output_path"] = args.out
        tol = float(cfg.get("tol", 1e-6))
        if args.command == "optimize":
            result = cmd_optimize(cfg, args.jobs)
        elif args.command == "diamond":
            a = json.loads(args.channel_a) if args.channel_a else cfg.get("channel_a")
            b = json.loads(args.channel_b) if args.channel_b else cfg.get("channel_b")
            if a is None or b is None:
                raise ConfigError("diamond needs two channel specs")
            result = cmd_diamond(a, b, tol)
            if cfg.get("output_path"):
                _write_json(cfg["output_path"], result)
        else:
            n_list = [int(x) for x in str(cfg.get("n_list", args.n_list)).split(",") if x.strip()]
            rows = cmd_sweep_pbt_identity(n_list, cfg.get("output_path"), tol, args.jobs)
            result = {"rows": [list(r) for r in rows]}
        sys.stdout.write(json.dumps(result, sort_keys=True) + "\n")
        return 0
    except (ConfigError, json.JSONDecodeError) as exc:
        return _fail("invalid_config", str(exc), EXIT_CONFIG)
    except sdpsolve.SdpError as exc:
        return _fail("sdp_failure", str(exc), EXIT_NUMERIC)
    except (ValueError, TypeError, RuntimeError) as exc:
        return _fail("invalid_input", str(exc), EXIT_CONFIG)


if __name__ == "__main__":
    raise SystemExit(main())
