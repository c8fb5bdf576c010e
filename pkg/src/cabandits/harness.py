"""Experiment harness: config loading, grid execution, artifacts, and fits.

Runs policy x environment x seed grids, writes one ledger JSON (and optional
trace CSV) per cell plus a summary CSV across seeds, and provides the
scaling-fit and baseline-comparison analyses.  Every artifact embeds the
config hash and the derived algorithm parameters so runs are auditable, and
(config, seed) fully determines every output byte of the summary.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
import time
try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .baselines import FlaxmanPolicy, FullInfoOgdPolicy
from .envs import Environment, best_comparator
from .geometry import ConvexBody
from .reductions import (ConvexBanditConfig, ConvexBanditPolicy,
                         LinearBanditPolicy, RunAborted, run_policy)

ALGORITHMS = ("linear_bandit", "convex_bandit", "flaxman", "full_info_ogd")


# -- config ---------------------------------------------------------------------

def load_config(path) -> dict:
    """Load an experiment config from JSON or TOML."""
    path = str(path)
    if path.endswith(".toml"):
        with open(path, "rb") as f:
            return tomllib.load(f)
    with open(path) as f:
        return json.load(f)


def config_hash(config: dict) -> str:
    return hashlib.sha256(
        json.dumps(config, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def _body_from_spec(spec):
    if spec is None:
        return None
    return ConvexBody.from_spec(spec)


def build_policy(policy_spec: dict, env: Environment, seed: int, keep_trace=True):
    """Instantiate a policy for one run from its config spec."""
    alg = policy_spec["algorithm"]
    body = _body_from_spec(policy_spec.get("body"))
    if alg == "linear_bandit":
        return LinearBanditPolicy(env.d, env.T, env.L, body=body, seed=seed,
                                  keep_trace=keep_trace)
    if alg == "convex_bandit":
        cfg = ConvexBanditConfig.preset(policy_spec["mode"], env.d, env.T, env.L,
                                        beta=env.beta, body=body)
        return ConvexBanditPolicy(cfg, seed=seed, keep_trace=keep_trace)
    if alg == "flaxman":
        return FlaxmanPolicy(env.d, env.T, env.L, body=body, seed=seed,
                             keep_trace=keep_trace)
    if alg == "full_info_ogd":
        return FullInfoOgdPolicy(env, body=body, keep_trace=keep_trace)
    raise ValueError(f"unknown algorithm {alg!r}")


def resolve_comparators(comp_spec, env: Environment, body, seed: int):
    """Materialize comparator points from a ComparatorSpec mapping."""
    if not comp_spec:
        return [np.zeros(env.d)]
    norms = comp_spec.get("norms", [0.0])
    mode = comp_spec.get("direction_mode", "best_offline")
    out = []
    for rho in norms:
        rho = float(rho)
        if rho == 0.0:
            out.append(np.zeros(env.d))
        elif mode == "best_offline":
            res = best_comparator(env, body=body, norm_target=rho, seed=seed,
                                  restarts=comp_spec.get("restarts", 10),
                                  iters=comp_spec.get("iters", 10_000))
            out.append(res.point)
        elif mode == "fixed_direction":
            direction = np.asarray(comp_spec["direction"], dtype=float)
            out.append(rho * direction / np.linalg.norm(direction))
        else:
            raise ValueError(f"unknown direction_mode {mode!r}")
    return out


# -- single cell ----------------------------------------------------------------

def run_cell(config: dict, seed: int, keep_trace=False):
    """One (policy, environment, seed) run; returns (ledger, trace)."""
    env_spec = dict(config["environment"])
    env_spec["seed"] = seed
    env = Environment.from_spec(env_spec)
    policy_spec = config["policy"]
    policy = build_policy(policy_spec, env, seed, keep_trace=keep_trace)
    body = _body_from_spec(policy_spec.get("body"))
    comparators = resolve_comparators(config.get("comparators"), env, body, seed)
    start = time.perf_counter()
    try:
        trace, ledger = run_policy(policy, env, env.T, comparators)
    except RunAborted as aborted:
        ledger, trace = aborted.ledger, aborted.partial_trace
    ledger["runtime_s"] = time.perf_counter() - start
    ledger["seed"] = seed
    ledger["algorithm"] = policy_spec["algorithm"]
    ledger["config_hash"] = config_hash(config)
    ledger["schedule_hash"] = env.schedule_hash
    ledger["environment"] = env.spec()
    if isinstance(policy, ConvexBanditPolicy):
        ledger["derived"] = policy.config.derived()
    elif isinstance(policy, LinearBanditPolicy):
        ledger["derived"] = {"v_floor": policy.v_floor,
                             "barrier_rate": policy.barrier.learning_rate,
                             "nu": policy.barrier.nu}
    elif isinstance(policy, FlaxmanPolicy):
        ledger["derived"] = policy.tuning()
    else:
        ledger["derived"] = {"step": policy.step}
    return ledger, trace


# -- artifacts ------------------------------------------------------------------

def _atomic_write(path, data: bytes):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def write_json(path, obj):
    _atomic_write(path, json.dumps(obj, sort_keys=True, indent=2).encode() + b"\n")


def write_trace_csv(path, trace, d):
    buf = io.StringIO()
    writer = csv.writer(buf)
    header = (["t", "v"] + [f"z{i}" for i in range(d)] + [f"s{i}" for i in range(d)]
              + [f"w{i}" for i in range(d)] + ["loss_value", "surrogate_grad", "ghat_norm"])
    writer.writerow(header)
    for rec in trace:
        s = rec.s if rec.s is not None else [math.nan] * d
        ghat_norm = float(np.linalg.norm(rec.ghat)) if rec.ghat is not None else math.nan
        sg = rec.surrogate_grad if rec.surrogate_grad is not None else math.nan
        writer.writerow([rec.t, repr(rec.v)] + [repr(float(x)) for x in rec.z]
                        + [repr(float(x)) for x in s] + [repr(float(x)) for x in rec.w]
                        + [repr(rec.loss_value), repr(float(sg)), repr(ghat_norm)])
    _atomic_write(path, buf.getvalue().encode())


def _cell_worker(args):
    config, seed, out_dir, keep_trace = args
    ledger, trace = run_cell(config, seed, keep_trace=keep_trace)
    if out_dir is not None:
        tag = f"{ledger['algorithm']}_{config['environment']['family']}_seed{seed}"
        write_json(os.path.join(out_dir, f"ledger_{tag}.json"), ledger)
        if keep_trace:
            write_trace_csv(os.path.join(out_dir, f"trace_{tag}.csv"),
                            trace, config["environment"]["d"])
    return ledger


def summarize(ledgers):
    """Cross-seed mean/stderr per comparator norm."""
    by_norm = {}
    for led in ledgers:
        for comp in led["comparators"]:
            by_norm.setdefault(round(comp["norm"], 12), []).append(comp["regret"])
    rows = []
    for norm in sorted(by_norm):
        regs = np.asarray(by_norm[norm], dtype=float)
        stderr = float(regs.std(ddof=1) / math.sqrt(len(regs))) if len(regs) > 1 else 0.0
        rows.append({"norm": norm, "n_seeds": len(regs),
                     "mean_regret": float(regs.mean()), "stderr_regret": stderr})
    return rows


def run_grid(config: dict, out_dir=None, workers: int = 1, keep_trace: bool = False):
    """Execute the full seed grid of a config; returns (ledgers, summary_rows).

    Writes per-seed ledgers (and traces when requested) plus a summary CSV
    under out_dir.  Raises RunAborted errors through after persisting an
    error manifest.
    """
    seeds = list(config.get("seeds", [0]))
    jobs = [(config, int(s), out_dir, keep_trace) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            ledgers = list(pool.map(_cell_worker, jobs))
    else:
        ledgers = [_cell_worker(job) for job in jobs]
    errors = [led for led in ledgers if led.get("error")]
    rows = summarize(ledgers)
    chash = config_hash(config)
    # Coupling hash covers only the realized schedules, so two policies run
    # against the same environments and seeds share it.
    coupling = hashlib.sha256(
        json.dumps(sorted(led["schedule_hash"] for led in ledgers)).encode()
    ).hexdigest()
    env_spec = config["environment"]
    meta = {"config_hash": chash, "coupling_hash": coupling,
            "algorithm": config["policy"]["algorithm"],
            "family": env_spec["family"], "d": env_spec["d"], "T": env_spec["T"]}
    if out_dir is not None:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["config_hash", "coupling_hash", "algorithm", "family", "d", "T",
                         "norm", "n_seeds", "mean_regret", "stderr_regret"])
        for row in rows:
            writer.writerow([chash, coupling, meta["algorithm"], meta["family"],
                             meta["d"], meta["T"], repr(row["norm"]), row["n_seeds"],
                             repr(row["mean_regret"]), repr(row["stderr_regret"])])
        _atomic_write(os.path.join(out_dir, "summary.csv"), buf.getvalue().encode())
        if errors:
            write_json(os.path.join(out_dir, "error_manifest.json"),
                       [{"seed": led["seed"], "error": led["error"]} for led in errors])
    return ledgers, [dict(row, **meta) for row in rows]


def total_violations(ledgers) -> int:
    total = 0
    for led in ledgers:
        total += sum(int(v) for v in led.get("violations", {}).values())
        if led.get("error"):
            total += 1
    return total


# -- analyses -------------------------------------------------------------------

@dataclass
class FitResult:
    axis: str
    value: float          # exponent for axis="T", slope for axis="norm"
    intercept: float
    r_squared: float
    flagged: bool = False
    note: str = ""


def fit_scaling(rows, axis: str) -> FitResult:
    """Power-law fit over T or affine fit over comparator norm.

    rows: mappings holding the axis value and ``mean_regret``.  Nonpositive
    regrets on the T axis skip the fit (adaptive algorithms can earn
    negative regret) and flag the result.
    """
    if axis not in ("T", "norm"):
        raise ValueError("axis must be 'T' or 'norm'")
    xs = np.asarray([float(r[axis]) for r in rows], dtype=float)
    ys = np.asarray([float(r["mean_regret"]) for r in rows], dtype=float)
    if len(xs) < 4 or len(np.unique(xs)) < 4:
        return FitResult(axis, math.nan, math.nan, math.nan, True, "degenerate grid")
    if axis == "T":
        if np.any(ys <= 0):
            return FitResult(axis, math.nan, math.nan, math.nan, True,
                             "nonpositive regret; fit skipped")
        lx, ly = np.log(xs), np.log(ys)
    else:
        lx, ly = xs, ys
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return FitResult(axis, float(slope), float(intercept), r2)


def compare_baseline(policy_rows, baseline_rows, norm: float) -> dict:
    """Head-to-head report at one comparator norm; requires coupled schedules."""
    pol = [r for r in policy_rows if math.isclose(r["norm"], norm)]
    base = [r for r in baseline_rows if math.isclose(r["norm"], norm)]
    if not pol or not base:
        raise ValueError(f"no summary rows at norm {norm}")
    pol, base = pol[0], base[0]
    if pol.get("coupling_hash") != base.get("coupling_hash"):
        raise ValueError("summaries come from different schedules (coupling hash mismatch)")
    win = (pol["mean_regret"] + pol["stderr_regret"]
           < base["mean_regret"] - base["stderr_regret"])
    ratio = (pol["mean_regret"] / base["mean_regret"]
             if base["mean_regret"] != 0 else math.inf)
    return {"norm": norm,
            "policy_mean": pol["mean_regret"], "policy_stderr": pol["stderr_regret"],
            "baseline_mean": base["mean_regret"], "baseline_stderr": base["stderr_regret"],
            "ratio": ratio, "win": bool(win)}


def read_summary_csv(path):
    rows = []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            for key in ("norm", "mean_regret", "stderr_regret"):
                row[key] = float(row[key])
            for key in ("d", "T", "n_seeds"):
                row[key] = int(row[key])
            rows.append(row)
    return rows
