"""Batch runner: ``sigmag --config run.cfg [--seed N] [--threads N] [--dump K]``.

Config files hold one ``key = value`` entry per line, the value being JSON
(``#`` starts a comment line; a value may continue over following lines until
it parses).  A file that is a single JSON object is accepted as well.

Exit status: 0 when every suite passes, 1 when a suite fails, 2 on a bad
config or argument.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import characterization as ch
from .classification import leakages
from .core import TimeGrid, total_variation, write_csv
from .generators import GENERATOR_IDS, GeneratorSpec, default_chunk_size, map_ensemble
from .pathops import balayage, cross_covariation, mult_decomposition, product, tanaka_split
from .recovery import recovery_check, supremum_identity_check

SCHEMA_VERSION = 1

SUITES = ("classify", "characterize", "tanaka", "balayage", "product", "multdecomp",
          "recovery", "supremum")

# class each generator is certified for, and the functional matching it
TARGET_CLASS = {"abs_bm": "sigma", "drawdown": "sigma", "reset": "sigma",
                "injection": "sigma_r", "sigma_g": "sigma_g",
                "absorbed_bm_martingale": "sigma_g"}
MATCHED_FUNCTIONAL = {"abs_bm": "sigma_nik", "drawdown": "sigma_nik", "reset": "sigma",
                      "injection": "sigma_r", "sigma_g": "sigma_g",
                      "absorbed_bm_martingale": "sigma_g"}
# generators whose intended zeros are stored as exact 0.0
EXACT_ZERO = {"drawdown", "reset", "injection", "sigma_g", "absorbed_bm_martingale"}

TOLERANCE_KEYS = ("zero_tol", "leakage_threshold", "z_threshold", "product_leakage_max",
                  "identity_rtol")

DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "grid": {"horizon": 1.0, "steps": 1000},
    "ensemble_size": 1000,
    "generator": {"generator_id": "sigma_g", "params": {}},
    "suites": [],
    "tolerances": {},
    "output_dir": "sigmag_out",
    "functional": None,
    "test_functions": ["poly2", "poly3", "exp"],
    "recovery": {"k": 2.0, "start": 1.0, "T": 1.0, "n_outer": 200, "n_inner": 2000,
                 "inner_dt": 0.01},
    "supremum": {"k": 2.0, "start": 1.0, "t": 1.0, "n_outer": 200, "n_inner": 2000,
                 "inner_dt": 0.01},
}


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------- config

def parse_config_text(text: str) -> dict:
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            obj = json.loads(stripped)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON config: {e}") from None
        if not isinstance(obj, dict):
            raise ConfigError("config must be an object")
        return obj
    out: dict = {}
    key, buf, start = None, "", 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if key is None:
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, _, buf = (s.strip() for s in line.partition("="))
            start = lineno
            if not key.isidentifier():
                raise ConfigError(f"line {lineno}: bad key {key!r}")
            if key in out:
                raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        else:
            buf += "\n" + raw
        try:
            out[key] = json.loads(buf)
        except json.JSONDecodeError:
            continue
        key = None
    if key is not None:
        raise ConfigError(f"line {start}: value for {key!r} is not valid JSON")
    return out


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _merge_section(name, given, allowed):
    _require(isinstance(given, dict), f"{name} must be an object")
    unknown = set(given) - set(allowed)
    _require(not unknown, f"unknown {name} keys: {sorted(unknown)}")
    return {**allowed, **given}


def effective_config(raw: dict, seed_override: int | None = None) -> dict:
    """Validate ``raw`` and fill defaults; raises ``ConfigError``."""
    unknown = set(raw) - set(DEFAULTS)
    _require(not unknown, f"unknown config keys: {sorted(unknown)}")
    cfg = {**DEFAULTS, **raw}
    if seed_override is not None:
        cfg["seed"] = seed_override
    _require(_is_int(cfg["seed"]), "seed must be an integer")
    cfg["grid"] = _merge_section("grid", cfg["grid"], DEFAULTS["grid"])
    try:
        TimeGrid(cfg["grid"]["horizon"], cfg["grid"]["steps"])
    except (ValueError, TypeError) as e:
        raise ConfigError(f"grid: {e}") from None
    _require(_is_int(cfg["ensemble_size"]) and cfg["ensemble_size"] >= 1,
             "ensemble_size must be a positive integer")
    gen = cfg["generator"]
    _require(isinstance(gen, dict), "generator must be an object")
    _require(set(gen) <= {"generator_id", "params"}, "generator takes generator_id and params")
    gen = {"params": {}, **gen}
    _require(gen.get("generator_id") in GENERATOR_IDS,
             f"generator_id must be one of {list(GENERATOR_IDS)}")
    try:
        # one throwaway member validates event times against the grid
        GeneratorSpec(gen["generator_id"], gen["params"]).generate(_grid(cfg), 0)
    except (ValueError, TypeError) as e:
        raise ConfigError(f"generator: {e}") from None
    cfg["generator"] = gen
    suites = cfg["suites"]
    _require(isinstance(suites, list) and all(s in SUITES for s in suites),
             f"suites must be a list drawn from {list(SUITES)}")
    _require(len(set(suites)) == len(suites), "duplicate suite names")
    tol = cfg["tolerances"]
    _require(isinstance(tol, dict), "tolerances must be an object")
    bad = set(tol) - set(TOLERANCE_KEYS)
    _require(not bad, f"unknown tolerance keys: {sorted(bad)}")
    _require(all(_is_num(v) and v >= 0 for v in tol.values()), "tolerances must be >= 0")
    _require(isinstance(cfg["output_dir"], str) and cfg["output_dir"], "output_dir must be a path")
    fn = cfg["functional"] or MATCHED_FUNCTIONAL[gen["generator_id"]]
    _require(fn in ch.FUNCTIONALS, f"functional must be one of {list(ch.FUNCTIONALS)}")
    cfg["functional"] = fn
    tfs = cfg["test_functions"]
    _require(isinstance(tfs, list) and tfs and all(t in ch.TEST_FUNCTIONS for t in tfs),
             f"test_functions must be a non-empty list drawn from {list(ch.TEST_FUNCTIONS)}")
    for name in ("recovery", "supremum"):
        sec = _merge_section(name, cfg[name], DEFAULTS[name])
        _require(all(_is_num(v) for v in sec.values()), f"{name} values must be numbers")
        _require(_is_int(sec["n_outer"]) and _is_int(sec["n_inner"]),
                 f"{name}: n_outer and n_inner must be integers")
        cfg[name] = sec
    return cfg


def _grid(cfg) -> TimeGrid:
    return TimeGrid(cfg["grid"]["horizon"], cfg["grid"]["steps"])


def _spec(cfg) -> GeneratorSpec:
    g = cfg["generator"]
    return GeneratorSpec(g["generator_id"], g["params"])


def _tolerances(cfg) -> dict:
    grid = _grid(cfg)
    gid = cfg["generator"]["generator_id"]
    zero_tol = 0.0 if gid in EXACT_ZERO else 2.0 * math.sqrt(grid.dt)
    base = {"zero_tol": zero_tol, "z_threshold": 4.0, "product_leakage_max": 1e-2,
            "identity_rtol": 1e-10}
    base.update(cfg["tolerances"])
    if "leakage_threshold" not in base:
        base["leakage_threshold"] = (1e-6 if base["zero_tol"] == 0
                                     else 10.0 * math.sqrt(grid.dt))
    return base


# --------------------------------------------------------------------------- suites

def _ensemble_map(cfg, threads, fn):
    return map_ensemble(_spec(cfg), _grid(cfg), cfg["seed"], cfg["ensemble_size"], fn,
                        threads=threads)


def _leak_summary(parts):
    leak = np.concatenate([p.reshape(-1, 3) for p in parts])
    worst = leak.max(axis=0)
    return {"leakage_sigma": float(worst[0]), "leakage_sigma_r": float(worst[1]),
            "leakage_sigma_g": float(worst[2]),
            "nesting_ok": bool(np.all(leak[:, 2] <= np.minimum(leak[:, 0], leak[:, 1]) + 1e-12))}


def suite_classify(cfg, tol, threads):
    parts = _ensemble_map(cfg, threads, lambda d: leakages(d, tol["zero_tol"]))
    rep = _leak_summary(parts)
    thr = tol["leakage_threshold"]
    verdicts = {c: rep[f"leakage_{c}"] <= thr for c in ("sigma", "sigma_r", "sigma_g")}
    target = TARGET_CLASS[cfg["generator"]["generator_id"]]
    return {"generator": cfg["generator"]["generator_id"], "tol": tol["zero_tol"],
            **rep, "threshold": thr, "verdicts": verdicts, "target_class": target,
            "pass": bool(verdicts[target] and rep["nesting_ok"])}


def suite_characterize(cfg, tol, threads):
    grid, spec = _grid(cfg), _spec(cfg)
    rows = []
    for tf in cfg["test_functions"]:
        try:
            rep = ch.ensemble_martingale_test(spec, grid, cfg["seed"], cfg["ensemble_size"],
                                              cfg["functional"], tf,
                                              z_threshold=tol["z_threshold"], threads=threads)
        except ValueError as e:
            rows.append({"functional": cfg["functional"], "test_function": tf,
                         "error": str(e), "pass": False})
            continue
        rows.append(rep.to_json(functional=cfg["functional"], test_function=tf))
    return {"functional": cfg["functional"], "reports": rows,
            "pass": all(r["pass"] for r in rows)}


def suite_tanaka(cfg, tol, threads):
    def fn(d):
        plus, minus = tanaka_split(d)
        exact = bool(np.array_equal(plus.X.post - minus.X.post, d.X.post)
                     and np.array_equal(plus.X.post + minus.X.post, np.abs(d.X.post)))
        add = max(plus.additivity_error(), minus.additivity_error())
        return exact, add, leakages(plus, tol["zero_tol"]), leakages(minus, tol["zero_tol"])

    parts = _ensemble_map(cfg, threads, fn)
    exact = all(p[0] for p in parts)
    add = max(p[1] for p in parts)
    lp = _leak_summary([p[2] for p in parts])
    lm = _leak_summary([p[3] for p in parts])
    thr = tol["leakage_threshold"]
    ok = (exact and add <= tol["identity_rtol"] and lp["leakage_sigma_g"] <= thr
          and lm["leakage_sigma_g"] <= thr)
    return {"parts_exact": exact, "additivity_error": add, "plus": lp, "minus": lm,
            "threshold": thr, "pass": bool(ok)}


def suite_balayage(cfg, tol, threads):
    grid = _grid(cfg)
    k = np.cos(grid.times)

    def fn(d):
        b = balayage(d, k, tol["zero_tol"])
        return b.additivity_error(), leakages(b, tol["zero_tol"]), leakages(d, tol["zero_tol"])

    parts = _ensemble_map(cfg, threads, fn)
    add = max(p[0] for p in parts)
    out = _leak_summary([p[1] for p in parts])
    inp = _leak_summary([p[2] for p in parts])
    thr = tol["leakage_threshold"]
    ok = add <= tol["identity_rtol"] and out["leakage_sigma_g"] <= max(thr, inp["leakage_sigma_g"])
    return {"weight": "cos(t)", "additivity_error": add, "input": inp, "output": out,
            "threshold": thr, "pass": bool(ok)}


def product_ensemble(spec: GeneratorSpec, grid: TimeGrid, seed: int, pairs: int, tol: float,
                     *, chunk_size: int | None = None, threads: int = 1) -> dict:
    """Multiply member ``i`` with member ``pairs + i`` for ``i < pairs``, chunk by chunk.

    Orthogonality of the martingale parts is tested across all pairs; the
    reported Σ^g leakage is pooled (charge off the zero set over total drift
    variation, summed over pairs) and also given as the worst single pair.
    """
    chunk = chunk_size or max(1, default_chunk_size(grid) // 4)
    ranges = [range(a, min(a + chunk, pairs)) for a in range(0, pairs, chunk)]

    def work(r):
        d1 = spec.generate(grid, seed, member=r)
        d2 = spec.generate(grid, seed, member=range(pairs + r.start, pairs + r.stop))
        cov = cross_covariation(d1.M, d2.M).sum(axis=-1)
        p = product(d1, d2, check=False)
        leak = leakages(p, tol)[:, 2]
        tv = np.asarray(total_variation(p.A))
        return cov, leak, tv, p.info["max_residual"]

    if threads <= 1:
        parts = [work(r) for r in ranges]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(work, ranges))
    cov = np.concatenate([q[0] for q in parts])
    leak = np.concatenate([q[1] for q in parts])
    tv = np.concatenate([q[2] for q in parts])
    se = float(cov.std(ddof=1) / math.sqrt(cov.size)) if cov.size > 1 else 0.0
    mean = float(cov.mean())
    orth = (mean == 0.0) if se == 0.0 else abs(mean) <= 3.0 * se
    return {"pairs": pairs, "tol": tol, "covariation": mean, "covariation_stderr": se,
            "orthogonal": bool(orth), "max_residual": max(q[3] for q in parts),
            "leakage_sigma_g_max": float(leak.max()),
            "leakage_sigma_g_pooled": float(np.sum(leak * tv) / max(float(tv.sum()), 1e-15))}


def suite_product(cfg, tol, threads):
    grid = _grid(cfg)
    pairs = cfg["ensemble_size"] // 2
    if pairs < 2:
        return {"error": "product suite needs ensemble_size >= 4", "pass": False}
    ptol = tol["zero_tol"] if "zero_tol" in cfg["tolerances"] else 2.0 * math.sqrt(grid.dt)
    rep = product_ensemble(_spec(cfg), grid, cfg["seed"], pairs, ptol, threads=threads)
    lim = tol["product_leakage_max"]
    rep.update(threshold=lim,
               **{"pass": bool(rep["orthogonal"] and rep["leakage_sigma_g_pooled"] <= lim)})
    return rep


def suite_multdecomp(cfg, tol, threads):
    def fn(d):
        try:
            G, W = mult_decomposition(d)
        except ValueError as e:
            return str(e), 0.0, True
        X = d.X.post
        err = np.abs(G.post * W.X.post - 1.0 - X).max(axis=-1) / (1.0 + np.abs(X).max(axis=-1))
        return None, float(err.max()), bool(np.all(W.X.post[..., 0] == 1.0))

    parts = _ensemble_map(cfg, threads, fn)
    errors = [p[0] for p in parts if p[0]]
    if errors:
        return {"error": errors[0], "pass": False}
    rt = max(p[1] for p in parts)
    w0 = all(p[2] for p in parts)
    return {"roundtrip_error": rt, "W0_is_one": w0, "pass": bool(rt <= 1e-12 and w0)}


def suite_recovery(cfg, tol, threads):
    r = cfg["recovery"]
    rep = recovery_check(r["k"], r["start"], r["T"], r["n_outer"], r["n_inner"], cfg["seed"],
                         inner_dt=r["inner_dt"], threads=threads)
    return rep.to_json()


def suite_supremum(cfg, tol, threads):
    s = cfg["supremum"]
    rep = supremum_identity_check(s["k"], s["start"], s["t"], s["n_outer"], s["n_inner"],
                                  cfg["seed"], inner_dt=s["inner_dt"], threads=threads)
    return rep.to_json()


SUITE_FUNCS = {
    "classify": suite_classify,
    "characterize": suite_characterize,
    "tanaka": suite_tanaka,
    "balayage": suite_balayage,
    "product": suite_product,
    "multdecomp": suite_multdecomp,
    "recovery": suite_recovery,
    "supremum": suite_supremum,
}


# --------------------------------------------------------------------------- output

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "+inf" if v > 0 else "-inf"
        return v
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


@dataclass
class RunResult:
    summary: dict
    reports: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return 0 if all(v == "pass" for v in self.summary.values()) else 1


def run_config(cfg: dict, threads: int = 1) -> RunResult:
    """Run the configured suites; ``cfg`` must come from ``effective_config``."""
    tol = _tolerances(cfg)
    reports, summary = {}, {}
    for name in cfg["suites"]:
        body = SUITE_FUNCS[name](cfg, tol, threads)
        reports[name] = {"schema_version": SCHEMA_VERSION, "suite": name,
                         "config": cfg, "tolerances": tol, "report": body}
        summary[name] = "pass" if body.get("pass") else "fail"
    return RunResult(summary, reports)


def write_outputs(cfg: dict, result: RunResult) -> None:
    out = cfg["output_dir"]
    os.makedirs(out, exist_ok=True)
    for name, rep in result.reports.items():
        with open(os.path.join(out, f"{name}.json"), "w") as fh:
            fh.write(canonical_json(rep))
    with open(os.path.join(out, "summary.json"), "w") as fh:
        fh.write(canonical_json({"schema_version": SCHEMA_VERSION, "summary": result.summary}))


def dump_paths(cfg: dict, members) -> list[str]:
    """Write one CSV per requested member under ``output_dir/paths``."""
    n = cfg["ensemble_size"]
    for k in members:
        _require(0 <= k < n, f"--dump index {k} outside ensemble of size {n}")
    spec, grid = _spec(cfg), _grid(cfg)
    out = os.path.join(cfg["output_dir"], "paths")
    os.makedirs(out, exist_ok=True)
    files = []
    for k in members:
        path = os.path.join(out, f"{spec.generator_id}_{k}.csv")
        write_csv(spec.generate(grid, cfg["seed"], member=k), path)
        files.append(path)
    return files


# --------------------------------------------------------------------------- entry

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sigmag", description=__doc__.splitlines()[0])
    p.add_argument("--config", required=True, help="config file (key = JSON value lines)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    p.add_argument("--dump", type=int, action="append", default=[], metavar="K",
                   help="write member K as CSV (repeatable)")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        with open(args.config) as fh:
            raw = parse_config_text(fh.read())
        cfg = effective_config(raw, args.seed)
        if args.dump:
            dump_paths(cfg, args.dump)
        result = run_config(cfg, args.threads)
    except (ConfigError, OSError) as e:
        print(f"sigmag: error: {e}", file=sys.stderr)
        return 2
    write_outputs(cfg, result)
    print(canonical_json(result.summary), end="")
    return result.exit_code


def main_exit() -> None:
    sys.exit(main())
