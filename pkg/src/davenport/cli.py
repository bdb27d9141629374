"""Command-line front end: load a scenario, run one analysis, write CSV/JSON."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import random
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import arith
from .coeffs import FiniteSupport, Hecke, family_from_json, gamma_a_estimate
from .errors import DavenportError, InvalidInputError, NumericError
from .evaluation import GridSpec, grid_csv, grid_eval, write_json
from .regularity import holder_exponent
from .sobolev import classify_sobolev, divergence_test, fourier_bound_check, sobolev_norm_estimate
from .spectrum import SpectrumPrediction, empirical_spectrum
from .transforms import fourier_map, invert_jump, jump_operator, maximal_operator, theta_a_estimate


def _number(text):
    """Parse ``1e6``, ``2**20``, ``2^20`` or ``p/q``."""
    if isinstance(text, (int, float)):
        return text
    s = str(text).strip().replace("^", "**")
    try:
        if "**" in s:
            base, exp = s.split("**", 1)
            return int(base) ** int(exp)
        if "/" in s:
            return Fraction(s)
        try:
            return int(s)
        except ValueError:
            return float(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidInputError(f"cannot parse number {text!r}") from exc


def _point(p):
    if isinstance(p, (int, float, str)):
        p = [p]
    return tuple(_number(c) for c in p)


def _resolution(text: str, d: int) -> tuple:
    parts = [int(v) for v in str(text).lower().split("x")]
    if len(parts) == 1:
        parts = parts * d
    if len(parts) != d:
        raise InvalidInputError(f"--grid {text!r} does not match dimension {d}")
    return tuple(parts)


def load_config(args) -> dict:
    cfg: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except OSError as exc:
            raise InvalidInputError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(cfg, dict):
            raise InvalidInputError("config must be a JSON object")
    for key in ("R", "N"):
        if getattr(args, key, None) is not None:
            cfg[key] = getattr(args, key)
    for key in ("R", "N", "R0", "Q_radius"):
        if key in cfg:
            cfg[key] = _number(cfg[key])
            if cfg[key] < 2:
                raise InvalidInputError(f"truncation radius {key} must be at least 2")
    return cfg


def _family(cfg: dict):
    if "family" not in cfg:
        raise InvalidInputError("config has no 'family'")
    return family_from_json(cfg["family"])


def _grid(cfg: dict, args, d: int) -> GridSpec:
    spec = dict(cfg.get("grid", {"d": d, "resolution": [256] * d}))
    spec.setdefault("d", d)
    if args.grid:
        spec["resolution"] = list(_resolution(args.grid, d))
    return GridSpec.from_json(spec)


def _out(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InvalidInputError(f"cannot create output directory: {exc}") from exc
    return out


def _write(path: Path, text: str):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# subcommands


def _symmetry(g: GridSpec, vals: np.ndarray):
    """``max |f(x) + f(-x)|`` over the grid when it tiles the unit cube."""
    if any(o != 0 for o in g.origin) or any(e != 1 for e in g.extent):
        return None
    mirror = vals
    for axis, n in enumerate(g.resolution):
        idx = (-np.arange(n)) % n
        mirror = np.take(mirror, idx, axis=axis)
    return float(np.max(np.abs(vals + mirror)))


def cmd_eval(cfg: dict, args) -> dict:
    a = _family(cfg)
    N = cfg.get("N", 2**12)
    g = _grid(cfg, args, a.d)
    vals, tail = grid_eval(a, N, g, args.threads)
    out = _out(args)
    _write(out / "eval.csv", grid_csv(g, vals, tail))
    meta = {"command": "eval", "family": a.to_json(), "family_hash": a.config_hash(),
            "N": N, "tail_bound": tail, "grid": g.to_json(), "rows": g.size,
            "odd_symmetry_residual": _symmetry(g, vals), "csv": "eval.csv"}
    write_json(meta, out / "eval.json")
    return meta


def roundtrip_residual(a, A, L_max: int) -> float:
    """Largest ``|J^{-1}(J a)_n - a_n|`` over the support inside the map's radius."""
    worst = 0.0
    for n, v in a.support(A.truncation_radius):
        worst = max(worst, abs(float(invert_jump(A, n, L_max) - v)))
    return worst


def cmd_jumps(cfg: dict, args) -> dict:
    a = _family(cfg)
    Q = cfg.get("Q_radius", cfg.get("R", 64))
    L = int(cfg.get("L_max", 64))
    A = jump_operator(a, Q, L)
    abar = maximal_operator(a, Q, L)
    theta = theta_a_estimate(a, Q, L, inner=cfg.get("inner"), A=A, abar=abar)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"q{i + 1}" for i in range(a.d)] + ["A", "abar", "tail_bound", "uncertain"])
    for q in sorted(set(A.entries) | set(abar.entries), key=lambda q: (sum(c * c for c in q), q)):
        w.writerow([str(c) for c in q] + [repr(float(A.get(q))), repr(float(abar.get(q))),
                                          repr(float(A.entry_tail(q))), int(A.is_uncertain(q))])
    out = _out(args)
    _write(out / "jumps.csv", buf.getvalue())
    meta = {"command": "jumps", "family": a.to_json(), "family_hash": a.config_hash(),
            "Q_radius": Q, "L_max": L, "A": A.to_json(), "abar": abar.to_json(),
            "theta": theta.to_json(), "roundtrip_residual": roundtrip_residual(a, A, L),
            "csv": "jumps.csv"}
    write_json(meta, out / "jumps.json")
    return meta


def cmd_exponent(cfg: dict, args) -> dict:
    a = _family(cfg)
    pts = [_point(p) for p in cfg.get("points", [])]
    if not pts:
        raise InvalidInputError("config has no 'points'")
    R = cfg.get("R", 2**20)
    emp = cfg.get("empirical", False)
    kw = dict(emp) if isinstance(emp, dict) else {}
    kw.setdefault("seed", args.seed)
    kw.setdefault("threads", args.threads)
    if "scales" in kw:
        kw["scales"] = [float(_number(s)) for s in kw["scales"]]
    records = [holder_exponent(a, p, cfg.get("R0"), R, with_empirical=bool(emp),
                               L_max=int(cfg.get("L_max", 64)), empirical_kwargs=kw).to_json()
               for p in pts]
    out = _out(args)
    meta = {"command": "exponent", "family": a.to_json(), "family_hash": a.config_hash(),
            "R": R, "seed": args.seed, "records": records}
    write_json(meta, out / "exponent.json")
    return meta


def cmd_spectrum(cfg: dict, args) -> dict:
    a = _family(cfg)
    g = _grid(cfg, args, a.d)
    opts = dict(cfg.get("spectrum", {}))
    if "R" in cfg:
        opts.setdefault("R", cfg["R"])
    opts.setdefault("osc_kwargs", {"seed": args.seed})
    sp = empirical_spectrum(a, g, **opts)
    pred = None
    if math.isfinite(sp.gamma_a) and sp.gamma_a > 0:
        pred = SpectrumPrediction(sp.gamma_a, a.d)
    out = _out(args)
    _write(out / "spectrum.csv", sp.to_csv(pred))
    meta = {"command": "spectrum", "family": a.to_json(), "family_hash": a.config_hash(),
            "spectrum": sp.to_json(), "prediction_note": pred.note_at_zero() if pred else None,
            "csv": "spectrum.csv"}
    write_json(meta, out / "spectrum.json")
    return meta


def cmd_sobolev(cfg: dict, args) -> dict:
    if args.gamma is not None:
        cfg["gamma"] = args.gamma
    if args.d is not None:
        cfg["d"] = args.d
    meta: dict = {"command": "sobolev"}
    a = _family(cfg) if "family" in cfg else None
    if "gamma" in cfg:
        gamma = float(_number(cfg["gamma"]))
    elif a is not None:
        R = cfg.get("R", 2**12)
        est = gamma_a_estimate(a, 1, R)
        # the shell infimum is biased upward by log C / log R; the intercept is not
        gamma = est.extrapolated if math.isfinite(est.extrapolated) else est.value
        meta["gamma_estimate"] = {"value": est.value, "R": R, "extrapolated": est.extrapolated,
                                  "used": gamma}
    else:
        raise InvalidInputError("sobolev needs 'gamma' or a 'family'")
    d = int(cfg.get("d", a.d if a is not None else 2))
    label = classify_sobolev(gamma, d)
    meta.update({"gamma": gamma, "d": d, "label": label.to_json()})
    if a is not None:
        meta["family"] = a.to_json()
        meta["family_hash"] = a.config_hash()
        if "norm" in cfg:
            n = cfg["norm"]
            M = _number(n.get("M", 256))
            c = fourier_map(a, M)
            s, delta = float(n.get("s", 0.0)), float(n.get("delta", 0.0))
            meta["norm"] = {"s": s, "delta": delta, "M": M,
                            "value": sobolev_norm_estimate(c, s, delta, M),
                            "doubling": divergence_test(c, s, delta, M).to_json()}
        if "bound_check_M" in cfg:
            rep = fourier_bound_check(a, cfg.get("bound_gamma", gamma), _number(cfg["bound_check_M"]))
            meta["fourier_bound"] = {k: v for k, v in rep.to_json().items() if k != "ratios"}
    out = _out(args)
    write_json(meta, out / "sobolev.json")
    print(str(label))
    return meta


# ---------------------------------------------------------------------------
# selftest


SELFTEST_POINTS = [(Fraction(1, 3), 0.3), ((math.sqrt(5) - 1) / 2, 0.3), (math.sqrt(45) % 1, 0.3)]


def _random_finite(rng: random.Random, d: int):
    entries = {}
    for _ in range(rng.randint(1, 20)):
        n = tuple(rng.randint(-32, 32) for _ in range(d))
        if any(n):
            rep, _ = arith.positive_rep(n)
            entries[rep] = Fraction(rng.randint(-1000, 1000), rng.randint(1, 1000))
    return FiniteSupport(d, list(entries.items()))


def cmd_selftest(cfg: dict, args) -> dict:
    """Small fixed scenarios; every artifact depends only on the seed."""
    out = _out(args)
    rng = random.Random(args.seed)
    checks = {}

    # jump roundtrip on random finite families, exact arithmetic
    worst = Fraction(0)
    for _ in range(20):
        a = _random_finite(rng, rng.choice((1, 2, 3)))
        R = max(2, math.ceil(a.max_norm()) + 1)
        L = R
        A = jump_operator(a, R, L)
        for n, v in a.support(R):
            worst = max(worst, abs(Fraction(invert_jump(A, n, L)) - v))
    checks["jump_roundtrip"] = {"max_residual": float(worst), "pass": worst == 0}

    # Hecke jumps against zeta(2)/q^2
    A = jump_operator(Hecke(2.0), 17, 10**5)
    err = max(abs(A.get((q,)) - math.pi**2 / 6 / q**2) for q in range(1, 17))
    checks["hecke_jumps"] = {"max_error": err, "tail_bound": A.tail_bound,
                             "pass": err <= A.tail_bound + 1e-12}

    sub = argparse.Namespace(**vars(args))
    sub.grid = None
    sub.out = str(out / "eval")
    ev = cmd_eval({"family": {"kind": "hecke", "d": 1, "beta": 2.0}, "N": 4096,
                   "grid": {"d": 1, "resolution": [1024]}}, sub)
    checks["eval_rows"] = {"rows": ev["rows"], "pass": ev["rows"] == 1024}

    lac = {"kind": "power_lacunary", "d": 2, "base": 2, "direction": [1, 0], "gamma": 0.5}
    sub.out = str(out / "exponent")
    ex = cmd_exponent({"family": lac, "R": 2**20,
                       "points": [[str(p[0]) if isinstance(p[0], Fraction) else p[0], p[1]]
                                  for p in SELFTEST_POINTS],
                       "empirical": {"scales": [2.0**-j for j in range(4, 13)],
                                     "N_cap": 2**32, "samples_per_ball": 64}}, sub)
    checks["exponent_records"] = {"count": len(ex["records"]),
                                  "validity": [r["validity"] for r in ex["records"]],
                                  "pass": len(ex["records"]) == 3}

    sub.out = str(out / "spectrum")
    sp = cmd_spectrum({"family": lac, "grid": {"d": 2, "resolution": [128, 128]}}, sub)
    dims = sp["spectrum"]["dimensions"]
    checks["spectrum_endpoints"] = {"h0": dims[0], "pass": dims[0] is not None
                                    and abs(dims[0] - 1) <= 0.4}

    rows = [(-1, 2), (0.5, 2), (1.5, 2), (2.5, 3), (3, 3), (5, 3)]
    checks["sobolev_table"] = {"labels": [str(classify_sobolev(g, d)) for g, d in rows],
                               "pass": True}

    summary = {"command": "selftest", "seed": args.seed, "checks": checks,
               "pass": all(c["pass"] for c in checks.values())}
    write_json(summary, out / "selftest.json")
    return summary


COMMANDS = {"eval": cmd_eval, "jumps": cmd_jumps, "exponent": cmd_exponent,
            "spectrum": cmd_spectrum, "sobolev": cmd_sobolev, "selftest": cmd_selftest}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario JSON file")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--R", help="truncation radius override")
    common.add_argument("--N", help="partial-sum cutoff override")
    common.add_argument("--grid", help="grid resolution override, e.g. 256 or 256x256")
    p = argparse.ArgumentParser(prog="davenport", description="Multivariate Davenport series toolkit")
    subs = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = subs.add_parser(name, parents=[common])
        if name == "sobolev":
            sp.add_argument("--gamma", type=float)
            sp.add_argument("--d", type=int)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        res = COMMANDS[args.command](cfg, args)
        if args.command == "selftest" and not res["pass"]:
            failed = [k for k, v in res["checks"].items() if not v["pass"]]
            print(f"selftest failed: {', '.join(failed)}", file=sys.stderr)
            return NumericError.exit_code
    except DavenportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return InvalidInputError.exit_code
    except OverflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return NumericError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
