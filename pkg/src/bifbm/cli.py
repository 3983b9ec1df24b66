"""Command-line entry point.

    bifbm sample    --alpha 0.5 --beta 1 --level 8 --paths 10 --seed 7 --out runs/bm
    bifbm coeffs    ...                       Schauder coefficients of sampled paths
    bifbm besov     ... --p 6 --gamma-offsets -0.05,0,0.05
    bifbm moments   --alpha 0.6 --beta 0.9 --level 6
    bifbm lln       ... --p 2
    bifbm ito-nisio --alpha 0.9 --beta 0.7 --eps 0.05 --p 40 --level 9
    bifbm holder    ... --gamma 0.5

Flags override ``key = value`` lines of an optional ``--config`` file. Exit
codes: 0 success, 2 invalid configuration, 3 numerical failure.
"""

import argparse
import os
import sys

import numpy as np

from . import __version__
from .covariance import KERNEL_KINDS, ProcessParams
from .errors import DomainError, InconsistentMoments, NotPositiveDefinite
from .experiments import run_besov_membership, run_holder_corollary, run_ito_nisio, run_lln
from .io import write_coeffs_csv, write_csv, write_json, write_matrix_csv, write_path_csv
from .moments import (
    correlation_sum_check,
    gaussian_pair_bound_check,
    lln_variance_bound,
    normalized_cov,
    second_diff_cov_matrix,
    variance_scaling_check,
)
from .sampling import DyadicGrid, sample_paths
from .schauder import besov_seq_norm, schauder_coeffs

MAX_LEVEL = 13

DEFAULTS = {
    "alpha": None,
    "beta": 1.0,
    "kernel": "bifractional",
    "level": None,
    "paths": 1,
    "seed": 0,
    "p": None,
    "gamma": None,
    "gamma_offsets": "-0.05,0,0.05",
    "eps": 0.05,
    "truncations": None,
    "holder_gamma": None,
    "out": "bifbm-out",
    "format": "csv",
    "threads": None,
    "allow_large": False,
    "jitter": False,
}
# not part of the result, so kept out of the manifest
NON_RESULT_KEYS = ("threads", "out", "config")

COMMAND_P = {"besov": 6.0, "lln": 2.0, "ito-nisio": 40.0, "moments": 2.0}


class ConfigError(Exception):
    pass


def _parser():
    parser = argparse.ArgumentParser(prog="bifbm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"bifbm {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS
    common.add_argument("--config", default=S, help="key = value file; flags take precedence")
    common.add_argument("--alpha", type=float, default=S)
    common.add_argument("--beta", type=float, default=S)
    common.add_argument("--kernel", choices=KERNEL_KINDS, default=S)
    common.add_argument("--level", type=int, default=S, help="dyadic grid level J")
    common.add_argument("--paths", type=int, default=S)
    common.add_argument("--seed", type=int, default=S)
    common.add_argument("--p", type=float, default=S)
    common.add_argument("--gamma", type=float, default=S)
    common.add_argument("--gamma-offsets", dest="gamma_offsets", default=S)
    common.add_argument("--eps", type=float, default=S)
    common.add_argument("--truncations", default=S, help="comma-separated N values")
    common.add_argument("--holder-gamma", dest="holder_gamma", type=float, default=S)
    common.add_argument("--out", default=S, help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default=S)
    common.add_argument("--threads", type=int, default=S)
    common.add_argument("--allow-large", dest="allow_large", action="store_true", default=S)
    common.add_argument("--jitter", action="store_true", default=S,
                        help="add 1e-12 to the Gram diagonal before factorizing")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("sample", "coeffs", "besov", "moments", "lln", "ito-nisio", "holder"):
        sub.add_parser(name, parents=[common])
    return parser


def _read_config(path):
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for n, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{n}: expected key = value")
                key, value = (s.strip() for s in line.split("=", 1))
                out[key.replace("-", "_")] = value
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return out


_TYPES = {"alpha": float, "beta": float, "level": int, "paths": int, "seed": int, "p": float,
          "gamma": float, "eps": float, "holder_gamma": float, "threads": int}


def _coerce(key, value):
    if key in ("allow_large", "jitter"):
        return value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes")
    if key in _TYPES and isinstance(value, str):
        try:
            return _TYPES[key](value)
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {value!r}") from None
    return value


def merge_config(args):
    flags = vars(args).copy()
    command = flags.pop("command")
    cfg = dict(DEFAULTS)
    if command in COMMAND_P:
        cfg["p"] = COMMAND_P[command]
    if "config" in flags:
        file_cfg = _read_config(flags["config"])
        unknown = set(file_cfg) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg.update(file_cfg)
    cfg.update(flags)
    cfg = {k: _coerce(k, v) for k, v in cfg.items()}
    cfg["command"] = command
    return cfg


def _floats(text, name):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{name}: expected comma-separated numbers, got {text!r}") from None


def validate(cfg):
    """Check ranges before any computation; returns ``ProcessParams``."""
    if cfg["alpha"] is None:
        raise ConfigError("--alpha is required")
    if cfg["level"] is None:
        raise ConfigError("--level is required")
    if not 0 < cfg["alpha"] < 1:
        raise ConfigError(f"alpha must lie in (0, 1), got {cfg['alpha']}")
    if not 0 < cfg["beta"] <= 1:
        raise ConfigError(f"beta must lie in (0, 1], got {cfg['beta']}")
    if cfg["level"] < 1:
        raise ConfigError(f"level must be >= 1, got {cfg['level']}")
    if cfg["level"] > MAX_LEVEL and not cfg["allow_large"]:
        raise ConfigError(f"level {cfg['level']} exceeds {MAX_LEVEL}; pass --allow-large")
    if cfg["paths"] < 1:
        raise ConfigError(f"paths must be >= 1, got {cfg['paths']}")
    if cfg["threads"] is not None and cfg["threads"] < 1:
        raise ConfigError(f"threads must be >= 1, got {cfg['threads']}")
    try:
        return ProcessParams(cfg["alpha"], cfg["beta"], cfg["kernel"])
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


def manifest(cfg, **extra):
    out = {k: v for k, v in cfg.items() if k not in NON_RESULT_KEYS}
    out["n_paths"] = cfg["paths"]
    out["version"] = __version__
    out.update(extra)
    return out


class Writer:
    def __init__(self, cfg):
        self.dir = cfg["out"]
        self.format = cfg["format"]
        os.makedirs(self.dir, exist_ok=True)

    def path(self, name):
        return os.path.join(self.dir, name)

    def table(self, name, header, rows):
        stem = os.path.splitext(name)[0]
        if self.format == "json":
            write_json(self.path(stem + ".json"), [dict(zip(header, r)) for r in rows])
        else:
            write_csv(self.path(stem + ".csv"), header, rows)

    def json(self, name, obj):
        write_json(self.path(name), obj)

    def summary(self, title, checks):
        lines = [title] + [f"{'PASS' if ok else 'FAIL'}  {text}" for text, ok in checks]
        with open(self.path("summary.txt"), "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        return all(ok for _, ok in checks)


def _report(ok, stats):
    print(("PASS " if ok else "FAIL ") + stats)


def cmd_sample(cfg, params, w):
    paths = sample_paths(params, DyadicGrid(cfg["level"]), cfg["paths"], cfg["seed"],
                         threads=cfg["threads"], jitter=cfg["jitter"])
    if w.format == "json":
        w.json("paths.json", {"t": paths[0].grid.points, "values": [s.values for s in paths]})
    else:
        for s in paths:
            write_path_csv(w.path(f"path_{s.index:05d}.csv"), s)
    w.json("manifest.json", manifest(cfg, jitter_value=1e-12 if cfg["jitter"] else 0.0))
    ok = all(s.values[0] == 0.0 for s in paths)
    w.summary(f"sample: {len(paths)} paths on level {cfg['level']}", [("value 0 at t = 0", ok)])
    _report(ok, f"{len(paths)} paths, level {cfg['level']}")


def cmd_coeffs(cfg, params, w):
    paths = sample_paths(params, DyadicGrid(cfg["level"]), cfg["paths"], cfg["seed"],
                         threads=cfg["threads"], jitter=cfg["jitter"])
    reports = []
    for s in paths:
        c = schauder_coeffs(s)
        if w.format == "json":
            w.json(f"coeffs_{s.index:05d}.json",
                   {"f0": c.f0, "f1": c.f1, "levels": [r.tolist() for r in c.levels]})
        else:
            write_coeffs_csv(w.path(f"coeffs_{s.index:05d}.csv"), c)
        if cfg["gamma"] is not None:
            p = cfg["p"] if cfg["p"] is not None else 6.0
            reports.append(besov_seq_norm(c, cfg["gamma"], p).to_dict())
    if reports:
        w.json("reports.json", reports)
    w.json("manifest.json", manifest(cfg))
    w.summary(f"coeffs: {len(paths)} paths", [("coefficients written", True)])
    _report(True, f"{len(paths)} coefficient sets, levels 0..{cfg['level'] - 1}")


def cmd_besov(cfg, params, w):
    offsets = _floats(cfg["gamma_offsets"], "gamma-offsets")
    res = run_besov_membership(params, cfg["p"], cfg["level"], cfg["paths"], cfg["seed"],
                               offsets, threads=cfg["threads"])
    for name, (header, rows) in res.tables().items():
        w.table(name, header, rows)
    w.json("report.json", [
        {"gamma": e.gamma, "p": e.p, "level_terms": e.pooled_terms,
         "seq_norm": float(np.max(e.pooled_terms)), "slope": e.slope}
        for e in res.entries
    ])
    w.json("manifest.json", manifest(cfg, **res.manifest()))
    ok = w.summary("besov membership trends", res.summary())
    _report(ok, " ".join(f"gamma={e.gamma:.4f}:slope={e.slope:+.4f}" for e in res.entries))


def cmd_moments(cfg, params, w):
    J = cfg["level"]
    p = cfg["p"]
    checks, lemma_rows = [], []
    if params.kernel_kind != "subfractional":
        err = 0.0
        for j in range(1, J + 1):
            D = second_diff_cov_matrix(params, j, "direct")
            Id = second_diff_cov_matrix(params, j, "identity")
            err = max(err, float(np.max(np.abs(Id - D) / np.maximum(1.0, np.abs(D)))))
        checks.append((f"identity vs direct oracle max relative error {err:.3e} (<= 1e-10)",
                       err <= 1e-10))
    bracket = variance_scaling_check(params, range(1, J + 1))
    bracket_ok = bracket.stable and bracket.ratio_min > 0 and bracket.j_spread <= 1e-10
    checks.append((
        f"variance bracket [{bracket.ratio_min:.6g}, {bracket.ratio_max:.6g}], "
        f"level spread {bracket.j_spread:.2e}, stable={bracket.stable}",
        bracket_ok,
    ))
    corr = correlation_sum_check(params, J)
    checks.append((f"S_j/2^j = {corr['ratio'][-1]:.6g} bounded={corr['bounded']}", corr["bounded"]))
    for j in range(1, J + 1):
        b = lln_variance_bound(params, j, p)
        lemma_rows.append(b.to_dict(lemma="lln_variance_bound", params=params.as_dict(), j=j, p=p))
    for rho in (0.0, 0.25, 0.5, 0.75, 1.0):
        b = gaussian_pair_bound_check(rho, p)
        lemma_rows.append(b.to_dict(lemma="gaussian_pair_bound", params=None, j=None, p=p, rho=rho))
    checks.append(("lemma bound checks", all(r["pass"] for r in lemma_rows)))
    lemma_rows.append({"lemma": "variance_scaling", "params": params.as_dict(), "j": J,
                       "lhs": bracket.ratio_min, "rhs": bracket.ratio_max, "pass": bracket_ok})
    lemma_rows.append({"lemma": "correlation_sum", "params": params.as_dict(), "j": J,
                       "lhs": corr["ratio"][-1], "rhs": 1.25 * corr["ratio"][min(3, J - 1)],
                       "pass": corr["bounded"]})
    w.json("lemmas.json", lemma_rows)
    mom = normalized_cov(params, J)
    if w.format == "json":
        w.json("moments.json", {"cov": mom.cov, "sigma": mom.sigma, "rho": mom.rho})
    else:
        write_matrix_csv(w.path("cov.csv"), mom.cov)
        write_matrix_csv(w.path("rho.csv"), mom.rho)
    w.table("scaling.csv", ["j", "ratio_min", "ratio_max"],
            list(zip(bracket.levels, bracket.level_min, bracket.level_max)))
    w.json("manifest.json", manifest(cfg))
    ok = w.summary(f"moments up to level {J}", checks)
    _report(ok, checks[0][0])


def cmd_lln(cfg, params, w):
    res = run_lln(params, cfg["p"], cfg["level"], cfg["paths"], cfg["seed"], threads=cfg["threads"])
    for name, (header, rows) in res.tables().items():
        w.table(name, header, rows)
    w.json("manifest.json", manifest(cfg, **res.manifest()))
    ok = w.summary("lln statistic", res.summary())
    _report(ok, f"mean={res.mean[-1]:.6f} c_p={res.target:.6f} z={res.z[-1]:+.3f}")


def _truncations(cfg):
    n = 2 ** cfg["level"]
    if cfg["truncations"] is None:
        return [2**k for k in range(max(cfg["level"] - 4, 0), cfg["level"] + 1)]
    return [int(v) for v in _floats(cfg["truncations"], "truncations")] or [n]


def cmd_ito_nisio(cfg, params, w):
    res = run_ito_nisio(params, cfg["level"], _truncations(cfg), cfg["eps"], cfg["p"],
                        cfg["paths"], cfg["seed"], holder_gamma=cfg["holder_gamma"],
                        threads=cfg["threads"])
    for name, (header, rows) in res.tables().items():
        w.table(name, header, rows)
    w.json("manifest.json", manifest(cfg, **res.manifest()))
    ok = w.summary("Ito-Nisio truncated expansion", res.summary())
    _report(ok, "median residual " + " ".join(
        f"N={N}:{m:.4g}" for N, m in zip(res.truncations, res.median_besov)))


def cmd_holder(cfg, params, w):
    gamma = cfg["gamma"] if cfg["gamma"] is not None else 0.5
    res = run_holder_corollary(params, cfg["level"], _truncations(cfg), gamma, cfg["paths"],
                               cfg["seed"], threads=cfg["threads"])
    rows = [(N, m, h.max()) for N, m, h in zip(res["truncations"], res["median"], res["norms"])]
    w.table("residuals.csv", ["N", "median_holder", "max_holder"], rows)
    w.json("manifest.json", manifest(cfg, gamma=gamma))
    ok = w.summary("Hölder corollary", [
        ("Hölder residual at full N <= 1e-10", res["full_zero"]),
        ("median Hölder residual non-increasing in N (5% slack)", res["median_nonincreasing"]),
    ])
    _report(ok, "median residual " + " ".join(f"N={N}:{m:.4g}" for N, m, _ in rows))


COMMANDS = {
    "sample": cmd_sample,
    "coeffs": cmd_coeffs,
    "besov": cmd_besov,
    "moments": cmd_moments,
    "lln": cmd_lln,
    "ito-nisio": cmd_ito_nisio,
    "holder": cmd_holder,
}


def main(argv=None):
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        cfg = merge_config(args)
        params = validate(cfg)
        cfg["params"] = params.as_dict()
        writer = Writer(cfg)
        COMMANDS[cfg["command"]](cfg, params, writer)
    except (ConfigError, DomainError) as exc:
        print(f"bifbm: error: {exc}", file=sys.stderr)
        return 2
    except (NotPositiveDefinite, InconsistentMoments, np.linalg.LinAlgError) as exc:
        print(f"bifbm: numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
