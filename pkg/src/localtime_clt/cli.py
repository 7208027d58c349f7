"""Command-line front end.

    python -m localtime_clt <command> [flags]

Commands: simulate, verify-clt, verify-cross, kac, mean-check,
scaling-check. Settings come from flags, then an optional flat
``key = value`` config file (``--config``), then built-in defaults.

Exit codes: 0 pass, 1 statistical rejection, 2 usage error (unknown flag,
missing command), 3 runtime or numerical failure, 4 type mismatch,
5 precondition violation.
"""

import argparse
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import functionals, kac, pathsim, report, verify

EXIT_PASS = 0
EXIT_REJECT = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3
EXIT_TYPE = 4
EXIT_PRECONDITION = 5

OUT_ENV = "LTCLT_OUT"
COMMANDS = ("simulate", "verify-clt", "verify-cross", "kac", "mean-check", "scaling-check")


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


# flag name -> (parser, is list)
def _bool(s):
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _int(s):
    return int(str(s).strip())


def _float(s):
    return float(str(s).strip())


PARAMS = {
    "kind": (str, False),
    "t": (_float, True),
    "h": (_float, True),
    "dt": (_float, False),
    "bin_width": (_float, True),
    "paths": (_int, False),
    "seed": (_int, False),
    "law_seed": (_int, False),
    "zeta": (_float, False),
    "zeta2": (_float, False),
    "m": (_int, False),
    "n": (_int, False),
    "target": (str, False),
    "mode": (str, False),
    "workers": (_int, False),
    "centering": (str, False),
    "out": (str, False),
    "format": (str, False),
    "plot": (_bool, False),
}

DEFAULTS = {
    "simulate": {"t": [1.0], "bin_width": [1 / 32], "paths": 1, "seed": 0, "mode": "brownian"},
    "verify-clt": {"kind": "single_t", "t": [256.0], "h": [1.0], "bin_width": [1 / 32],
                   "paths": 10_000, "seed": 7, "mode": "lattice_walk", "centering": "exact"},
    "verify-cross": {"kind": "cross_t", "t": [256.0], "h": [1.0], "bin_width": [1 / 32],
                     "paths": 10_000, "seed": 7, "mode": "lattice_walk", "centering": "exact"},
    "kac": {"target": "limit_prediction_cross", "m": 2, "zeta": 1.0},
    "mean-check": {"t": [64.0, 256.0, 1024.0], "bin_width": [1 / 16], "paths": 5000, "seed": 7,
                   "mode": "lattice_walk"},
    "scaling-check": {"t": [1.0], "h": [0.5], "bin_width": [1 / 16, 1 / 32, 1 / 64], "seed": 0,
                      "paths": 8, "mode": "brownian"},
}
COMMON = {"format": "json", "plot": False, "workers": 1}


@dataclass
class RunConfig:
    command: str
    params: dict
    output_dir: Path
    format: str = "json"
    plot: bool = False
    checked: dict = field(default_factory=dict)   # validated module configs


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(f"{self.prog}: {message}\n{self.format_usage()}", EXIT_USAGE)


def build_parser():
    p = _Parser(prog="localtime-clt", description="Local-time modulus limit-law toolkit")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    for cmd in COMMANDS:
        sp = sub.add_parser(cmd)
        for name in PARAMS:
            flag = "--" + name.replace("_", "-")
            if name == "plot":
                sp.add_argument(flag, nargs="?", const="true", default=None)
            else:
                sp.add_argument(flag, default=None)
        sp.add_argument("--config", default=None)
    return p


def read_config_file(path):
    """Flat ``key = value`` pairs; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise CliError(f"cannot read config file {path}: {e}", EXIT_USAGE) from e
    for ln, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{ln}: expected key = value", EXIT_USAGE)
        k, v = (s.strip() for s in line.split("=", 1))
        k = k.lstrip("-").replace("-", "_")
        if k not in PARAMS:
            raise CliError(f"{path}:{ln}: unknown key {k!r}", EXIT_USAGE)
        out[k] = v
    return out


def _convert(name, raw):
    conv, is_list = PARAMS[name]
    try:
        if is_list:
            vals = [conv(s) for s in str(raw).split(",") if s.strip()]
            if not vals:
                raise ValueError("empty list")
            return vals
        return conv(raw)
    except ValueError as e:
        raise CliError(f"--{name.replace('_', '-')}: invalid value {raw!r} ({e})", EXIT_TYPE) from e


def parse_and_validate(argv):
    """Parse ``argv`` into a validated :class:`RunConfig`."""
    argv = list(argv)
    parser = build_parser()
    if not argv:
        raise CliError(parser.format_help(), EXIT_USAGE)
    ns = parser.parse_args(argv)
    if ns.command is None:
        raise CliError(parser.format_help(), EXIT_USAGE)
    merged = dict(COMMON)
    merged.update(DEFAULTS[ns.command])
    raw = read_config_file(ns.config) if ns.config else {}
    raw.update({k: v for k, v in vars(ns).items() if k in PARAMS and v is not None})
    for k, v in raw.items():
        merged[k] = _convert(k, v)
    out = merged.pop("out", None) or os.environ.get(OUT_ENV) or "ltclt_out"
    fmt = merged.pop("format")
    plot = merged.pop("plot")
    if fmt not in ("csv", "json"):
        raise CliError(f"--format must be csv or json, got {fmt!r}", EXIT_PRECONDITION)
    rc = RunConfig(ns.command, merged, Path(out), fmt, plot)
    try:
        _validate(rc)
    except (ValueError, TypeError) as e:
        raise CliError(f"invalid configuration: {e}", EXIT_PRECONDITION) from e
    return rc


def _validate(rc):
    p = rc.params
    cmd = rc.command
    if p.get("workers", 1) < 1:
        raise ValueError("workers must be >= 1")
    if cmd == "simulate":
        rc.checked["sim"] = pathsim.SimConfig(p["t"][0], p["bin_width"][0], p.get("dt"), p["paths"],
                                              p["seed"], p["mode"])
    elif cmd in ("verify-clt", "verify-cross"):
        kind = p["kind"]
        if cmd == "verify-cross" and not kind.startswith("cross"):
            raise ValueError(f"verify-cross needs a cross kind, got {kind!r}")
        ladder = tuple(p["t"]) if kind.endswith("_t") else tuple(p["h"])
        law_seed = p.get("law_seed", p["seed"] + 1)
        rc.checked["verify"] = verify.VerifyConfig(
            kind=kind, ladder=ladder, t=p["t"][0], bin_width=p["bin_width"][0], mode=p["mode"],
            dt=p.get("dt"), n_paths=p["paths"], stat_seed=p["seed"], law_seed=law_seed,
            centering=p["centering"], workers=p["workers"])
        for v in ladder:
            cfg = rc.checked["verify"]
            probe = 1.0 if kind.endswith("_t") else v
            if abs(probe / cfg.bin_width - round(probe / cfg.bin_width)) > 1e-9 * probe / cfg.bin_width:
                raise ValueError(f"probe shift {probe} is not a multiple of bin width {cfg.bin_width}")
    elif cmd == "kac":
        target = p["target"]
        order = p.get("n", p.get("m")) if target in ("alpha_moment", "beta_moment") else p.get("m", 2)
        law = "exponential"
        if target == "modulus_mean" or ("t" in p and target in ("alpha_moment", "beta_moment")):
            law = "fixed_time"
        elif p.get("zeta2") is not None:
            law = "exponential_pair"
        if target == "modulus_mean":
            order = 1
        t = p["t"][0] if "t" in p else None
        h = p["h"][0] if "h" in p else None
        if target == "modulus_mean" and h is None:
            raise ValueError("modulus_mean needs --h")
        rc.checked["spec"] = kac.MomentSpec(order, target, law, p.get("zeta", 1.0), p.get("zeta2"),
                                            t, h)
    elif cmd == "mean-check":
        if len(p["t"]) < 3:
            raise ValueError("mean-check needs at least 3 horizons")
        rc.checked["sim"] = pathsim.SimConfig(max(p["t"]), p["bin_width"][0], p.get("dt"),
                                              p["paths"], p["seed"], p["mode"])
    elif cmd == "scaling-check":
        if p["mode"] == "lattice_walk" and p["h"][0] != 1.0:
            raise ValueError("lattice scaling check needs h = 1")
        # one time step for the whole ladder, so every rung bins the same paths
        dt = p.get("dt")
        if p["mode"] == "brownian" and dt is None:
            dt = (min(p["bin_width"]) * p["h"][0]) ** 2 / 4
        rc.checked["sims"] = [pathsim.SimConfig(p["t"][0], d, dt, p.get("paths", 8), p["seed"],
                                                p["mode"]) for d in p["bin_width"]]


# -- running ----------------------------------------------------------------------

def _emit(rc, name, payload_rows, columns, summary):
    """Write the report in the requested format; return the path."""
    if rc.format == "json":
        return report.write_text(rc.output_dir / f"{name}.json", report.to_json(summary))
    return report.write_text(rc.output_dir / f"{name}.csv", report.to_csv(payload_rows, columns))


REPORT_COLUMNS = ("test_kind", "statistic", "p_value", "ci_lower", "ci_upper", "n_a", "n_b",
                  "passed", "config_digest")


def _report_rows(reports):
    rows = []
    for r in reports:
        p = r.p_value_or_CI
        row = {"test_kind": r.test_kind, "statistic": float(r.statistic), "n_a": r.n_a,
               "n_b": r.n_b, "passed": r.passed, "config_digest": r.config_digest}
        if isinstance(p, tuple):
            row["ci_lower"], row["ci_upper"] = float(p[0]), float(p[1])
        else:
            row["p_value"] = float(p)
        rows.append(row)
    return rows


def _run_simulate(rc):
    cfg = rc.checked["sim"]
    rows = []
    for i in range(cfg.n_paths):
        seed = cfg.path_seed(i)
        f = pathsim.gen_local_time(cfg, seed)
        report.write_text(rc.output_dir / f"field_{i:04d}.csv", pathsim.field_to_csv(f))
        try:
            m1 = functionals.sq_modulus(f, 1.0)
        except ValueError:
            m1 = None   # unit shift not on the grid
        rows.append({"path": i, "seed": seed, "t": f.t_horizon, "bin_width": f.bin_width,
                     "occupation": f.occupation(), "alpha": functionals.alpha(f), "modulus_1": m1})
        if rc.plot and i == 0:
            report.write_text(rc.output_dir / "field_0000.svg",
                              report.svg_ladder(f.x, f.values, title="local time profile"))
    digest = report.config_digest(cfg)
    cols = ("path", "seed", "t", "bin_width", "occupation", "alpha", "modulus_1")
    path = _emit(rc, "simulate", rows, cols, {"config": cfg, "config_digest": digest, "paths": rows})
    print(f"simulated {cfg.n_paths} path(s); summary in {path}")
    for r in rows[:10]:
        m1 = "n/a" if r["modulus_1"] is None else f"{r['modulus_1']:.6g}"
        print(f"  path {r['path']}: alpha={r['alpha']:.6g}  M_1={m1}")
    return EXIT_PASS


def _run_verify(rc):
    cfg = rc.checked["verify"]
    res = verify.verify_clt(cfg)
    report.write_text(rc.output_dir / "samples.csv", res.samples_csv())
    report.write_text(rc.output_dir / "limit_law.csv", res.law.to_csv())
    path = _emit(rc, "verify_report", _report_rows(res.reports), REPORT_COLUMNS, res.summary())
    if rc.plot:
        x = res.samples[float(cfg.finest)]
        report.write_text(rc.output_dir / "histogram.svg",
                          report.svg_histogram(x, title=f"{cfg.kind} vs limit law",
                                               overlay=res.law.values))
    print(f"{cfg.kind}: ladder {list(cfg.ladder)}  N={cfg.n_paths}  digest {res.digest[:12]}")
    for r in res.reports:
        p = r.p_value_or_CI
        ptxt = f"p={p:.4g}" if not isinstance(p, tuple) else f"CI=[{p[0]:.4g}, {p[1]:.4g}]"
        extra = f" predicted={r.details['predicted']:.6g}" if "predicted" in r.details else ""
        print(f"  {r.test_kind:15s} stat={r.statistic:.6g} {ptxt}{extra}  "
              f"{'PASS' if r.passed else 'FAIL'}")
    d = res.diagnostics
    print(f"  variance {d['variance']:.5g} vs {d['variance_prediction']:.5g} "
          f"({100 * d['variance_relative_deviation']:+.2f}%)")
    if res.flags:
        print("  flags: " + ", ".join(res.flags))
    print(f"report: {path}")
    return EXIT_PASS if res.passed else EXIT_REJECT


def _run_kac(rc):
    spec = rc.checked["spec"]
    mv = kac.evaluate(spec)
    rec = kac.moment_value_record(spec, mv)
    if rc.format == "json":
        path = report.write_text(rc.output_dir / "kac.json", kac.moment_values_json([rec]))
    else:
        path = report.write_text(rc.output_dir / "kac.csv", kac.moment_values_csv([rec]))
    print(f"{spec.target} (order {spec.order}, {spec.law}): {mv.value:.10g} "
          f"+/- {mv.abs_error_estimate:.2g} [{mv.method}]")
    print(f"written: {path}")
    return EXIT_PASS


def _run_mean_check(rc):
    p = rc.params
    cfg = rc.checked["sim"]
    rep = verify.mean_check(p["t"], cfg, n_paths=cfg.n_paths, seed=cfg.master_seed,
                            workers=p["workers"])
    rows = [dict(r) for r in rep.details["rows"]]
    summary = {"config": cfg, "report": rep.to_dict(), "fitted_exponent": rep.statistic}
    path = _emit(rc, "mean_check", rows, ("t", "mean", "se", "exact", "z", "gap"), summary)
    if rc.plot:
        report.write_text(rc.output_dir / "mean_check.svg",
                          report.svg_ladder([r["t"] for r in rows], [r["z"] for r in rows],
                                            title="(MC mean - exact) / SE", reference=0.0, logx=True))
    for r in rows:
        print(f"  t={r['t']:g}: mean={r['mean']:.6g} +/- {r['se']:.3g}  exact={r['exact']:.6g}  "
              f"z={r['z']:+.2f}")
    print(f"  fitted exponent of |mean - 4t|: {rep.statistic:.3f}  {'PASS' if rep.passed else 'FAIL'}")
    print(f"report: {path}")
    return EXIT_PASS if rep.passed else EXIT_REJECT


def _run_scaling(rc):
    h = rc.params["h"][0]
    rows = []
    for cfg in rc.checked["sims"]:
        reps = [functionals.scaling_check(cfg, cfg.path_seed(i), h) for i in range(cfg.n_paths)]
        rows.append({"bin_width": cfg.bin_width, "h": h, "t": reps[0].t, "paths": cfg.n_paths,
                     "mean_direct": float(np.mean([r.direct for r in reps])),
                     "mean_rebinned": float(np.mean([r.rebinned for r in reps])),
                     "relative_deviation": float(np.mean([r.relative_deviation for r in reps])),
                     "relabel_deviation": float(np.max([r.relabel_deviation for r in reps]))})
    devs = [r["relative_deviation"] for r in rows]
    if rc.params["mode"] == "lattice_walk":
        ok = all(d == 0.0 for d in devs)
    else:
        ok = all(b < a for a, b in zip(devs, devs[1:]))
    summary = {"params": rc.params, "rows": rows, "passed": ok,
               "config_digest": report.config_digest(rc.params)}
    path = _emit(rc, "scaling_check", rows, tuple(rows[0]), summary)
    if rc.plot:
        report.write_text(rc.output_dir / "scaling_check.svg",
                          report.svg_ladder([r["bin_width"] for r in rows], devs, logx=True,
                                            title="mean relative deviation vs bin width"))
    for r in rows:
        print(f"  bin_width={r['bin_width']:g}: mean rel. deviation {r['relative_deviation']:.3e} "
              f"over {r['paths']} path(s)")
    print(f"  {'PASS' if ok else 'FAIL'}; report: {path}")
    return EXIT_PASS if ok else EXIT_REJECT


RUNNERS = {"simulate": _run_simulate, "verify-clt": _run_verify, "verify-cross": _run_verify,
           "kac": _run_kac, "mean-check": _run_mean_check, "scaling-check": _run_scaling}


def run(rc):
    try:
        return RUNNERS[rc.command](rc)
    except OSError as e:
        print(f"I/O failure at {getattr(e, 'filename', None) or rc.output_dir}: {e}; "
              "artifacts in this directory may be partial", file=sys.stderr)
        return EXIT_RUNTIME
    except (kac.QuadratureError, ArithmeticError, RuntimeError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_RUNTIME


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        rc = parse_and_validate(argv)
    except CliError as e:
        print(str(e), file=sys.stderr)
        return e.code
    np.seterr(all="ignore")
    return run(rc)


if __name__ == "__main__":
    sys.exit(main())
