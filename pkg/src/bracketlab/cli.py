"""Command-line runner.

Every subcommand resolves a flat configuration (file values, then flags),
runs, and writes a JSON report embedding that configuration.  Exit codes:
0 all checks passed, 1 a check failed, 2 configuration error, 3 runtime
error.
"""
import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import brackets as br
from . import entropy, lemmas
from . import stats as st
from .distributions import from_spec
from .errors import BracketLabError, ConfigError, NotUnimodular
from .torus import CAT_MAP, IIDProcess, TorusAutomorphism, TorusProcess, classify, sample_initial
from .torus import OrbitConfig, power_apply, write_orbits_csv

SCHEMA_VERSION = "1.0"

REQUIRED = object()

_COMMON = {"seed": 0, "out": None, "csv": None, "threads": None}
_PROCESS = {"process": "torus", "matrix": [list(r) for r in CAT_MAP], "dim": 2, "denominator_bits": 52}
_FAMILY = {"family": REQUIRED, "s": 1.0, "alpha": 1.0, "dim": 2, "D": 1, "lambda": 1.0, "mu": None, "ord": 2}
_RECT = {"type": "rectangle-indicator", "lo": [0.0, 0.0], "hi": [1 / 3, 1 / 3]}
_BALL = {"type": "ball-transition", "center": [0.5, 0.5], "r_in": 0.1, "r_out": 0.3}

DEFAULTS = {
    "classify": {"matrix": REQUIRED},
    "simulate": {**_PROCESS, "n": 1000, "replicas": 1},
    "brackets": {**_FAMILY, "eps": REQUIRED, "verify": False, "n_indices": 1000, "n_points": 1000,
                 "n_mc": 100_000, "n_gap": 200, "n_holder": 10},
    "entropy": {**_FAMILY, "delta_grid": "1e-3:1e-1:16log", "r": None, "gamma": 2.0, "a": None},
    "verify-lemmas": {"pairs": 100, "samples": 100_000, "dims": [1, 2, 3], "alphas": [0.5, 1.0],
                      "ellipsoid_pairs": 100, "cap_scale": 1.0},
    "clt-check": {**_PROCESS, "n": 10_000, "replicas": 500, "level": 0.01, "observable": _RECT,
                  "observables": None, "directions": 0},
    "mixing-check": {**_PROCESS, "n": 10_000, "replicas": 100, "observable": _BALL, "max_lag": 20,
                     "floor": 5.0, "theta_max": 0.9},
    "moment-check": {**_PROCESS, "n_grid": [1000, 3000, 10_000, 30_000], "replicas": 200,
                     "observable": _BALL, "p": 2, "slack": 0.2, "a": None},
    "torus-theorem": {"matrix": [list(r) for r in CAT_MAP], "denominator_bits": 52, "eps": 0.5,
                      "n": 2000, "replicas": 100, "level": 0.01, "directions": 4, "p": 2,
                      "n_grid": [250, 500, 1000, 2000], "max_lag": 8, "n_indices": 200, "n_points": 200,
                      "n_mc": 20_000, "n_gap": 20},
}
for _d in DEFAULTS.values():
    for _k, _v in _COMMON.items():
        _d.setdefault(_k, _v)

_JSON_KEYS = {"matrix", "mu", "observable", "observables", "n_grid", "dims", "alphas"}
_INT_KEYS = {"seed", "threads", "dim", "D", "denominator_bits", "n", "replicas", "n_indices", "n_points", "n_mc",
             "n_gap", "n_holder", "pairs", "samples", "ellipsoid_pairs", "directions", "max_lag", "p"}
_FLOAT_KEYS = {"s", "alpha", "lambda", "eps", "r", "gamma", "a", "level", "cap_scale", "floor", "theta_max", "slack"}


# ----------------------------------------------------------------------------
# configuration


def _coerce(key, value):
    if value is None:
        return None
    try:
        if key in _INT_KEYS:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError
            return int(value)
        if key in _FLOAT_KEYS:
            if isinstance(value, bool):
                raise ValueError
            return float(value)
        if key == "ord":
            return math.inf if value in ("inf", math.inf) else int(value)
        if key == "verify":
            if not isinstance(value, bool):
                raise ValueError
            return value
    except (TypeError, ValueError):
        raise ConfigError(key, f"invalid value {value!r}") from None
    return value


def _parse_flag(key, text):
    if key in _JSON_KEYS:
        try:
            return json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(key, f"malformed JSON: {err.msg}") from None
    return text


def resolve_config(command, file_values=None, flag_values=None):
    """Merge defaults, file values and flags (in that order) and validate."""
    defaults = DEFAULTS[command]
    merged = dict(defaults)
    for source in (file_values or {}, flag_values or {}):
        for key, value in source.items():
            if key not in defaults:
                raise ConfigError(key, "unknown key")
            merged[key] = value
    for key, value in merged.items():
        if value is REQUIRED:
            raise ConfigError(key, "required")
    merged = {k: _coerce(k, v) for k, v in merged.items()}
    _validate(command, merged)
    return merged


def _validate(command, cfg):
    if "matrix" in cfg and (command == "classify" or cfg.get("process", "torus") == "torus"):
        try:
            TorusAutomorphism.from_matrix(cfg["matrix"])
        except (NotUnimodular, BracketLabError, ValueError, TypeError) as err:
            raise ConfigError("matrix", str(err) or "not a unimodular integer matrix") from None
    if cfg.get("process") not in (None, "torus", "iid"):
        raise ConfigError("process", "must be 'torus' or 'iid'")
    if "family" in cfg and cfg["family"] not in br.FAMILIES:
        raise ConfigError("family", f"must be one of {', '.join(br.FAMILIES)}")
    if cfg.get("mu") is not None:
        from_spec(cfg["mu"])
    for key in ("eps", "n", "replicas", "samples", "pairs", "n_mc"):
        if key in cfg and cfg[key] is not None and not cfg[key] > 0:
            raise ConfigError(key, "must be positive")
    if "denominator_bits" in cfg and not 48 <= cfg["denominator_bits"] <= 62:
        raise ConfigError("denominator_bits", "must lie in [48, 62]")
    if "level" in cfg and not 0 < cfg["level"] < 1:
        raise ConfigError("level", "must lie in (0, 1)")
    if "delta_grid" in cfg:
        try:
            entropy.parse_delta_grid(cfg["delta_grid"])
        except ValueError as err:
            raise ConfigError("delta_grid", str(err)) from None
    for key in ("observable", "observables"):
        if cfg.get(key) is not None:
            specs = cfg[key] if key == "observables" else [cfg[key]]
            if not isinstance(specs, list):
                raise ConfigError(key, "must be a list")
            for spec in specs:
                try:
                    st.observable_from_spec(spec)
                except (ValueError, TypeError) as err:
                    if isinstance(err, ConfigError):
                        raise
                    raise ConfigError(key, str(err)) from None


# ----------------------------------------------------------------------------
# reporting


def check(name, passed, statistic=None, threshold=None, se=None, verdict=None):
    return {"name": name, "verdict": verdict or ("pass" if passed else "fail"), "statistic": statistic,
            "threshold": threshold, "se": se}


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (bool, int, str)) or value is None:
        return value
    return str(value)


def make_report(command, cfg, checks, results):
    return {"schema_version": SCHEMA_VERSION, "command": command, "config": cfg,
            "seeds": {"master_seed": cfg.get("seed", 0)}, "checks": checks, "results": results}


def dumps(report):
    return json.dumps(_jsonable(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_report(report, path):
    """Write ``report`` as JSON to ``path`` or stdout when ``path`` is None."""
    text = dumps(report)
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])


# ----------------------------------------------------------------------------
# subcommands


def _process(cfg):
    if cfg.get("process", "torus") == "iid":
        return IIDProcess(cfg["dim"])
    return TorusProcess(cfg["matrix"], cfg["denominator_bits"])


def _neutral_exponent(cfg):
    if cfg.get("process", "torus") == "iid":
        return -1
    info = classify(cfg["matrix"])
    return info.neutral_degree - 1 if info.neutral_degree else -1


def _builder(cfg):
    mu = from_spec(cfg["mu"]) if cfg["mu"] is not None else None
    dim = 1 if cfg["family"] == br.MONOTONE else cfg["dim"]
    return br.family_builder(cfg["family"], mu, cfg["s"], cfg["alpha"], dim, cfg["D"], cfg["lambda"], cfg["ord"])


def cmd_classify(cfg):
    info = classify(cfg["matrix"])
    results = {"ergodic": info.ergodic, "hyperbolic": info.hyperbolic, "neutral_degree": info.neutral_degree,
               "char_poly": list(info.char_poly)}
    return [], results


def cmd_simulate(cfg):
    n, R, seed = cfg["n"], cfg["replicas"], cfg["seed"]
    proc = _process(cfg)
    paths = np.concatenate(list(proc.paths(n, R, seed)), axis=1)
    checks = []
    results = {"process": proc.describe(), "n": n, "replicas": R, "coordinate_means": paths.mean(axis=(0, 1))}
    if isinstance(proc, TorusProcess):
        ocfg = OrbitConfig(n, R, cfg["denominator_bits"], seed)
        x0 = sample_initial(ocfg, 0, proc.dim)
        last = power_apply(proc.automorphism, x0, n - 1)
        exact = np.array(last.to_float())
        checks.append(check("final-point-matches-matrix-power", bool(np.array_equal(exact, paths[0, -1]))))
        results["denominator"] = ocfg.denominator
    if cfg["csv"]:
        write_orbits_csv(cfg["csv"], paths)
    return checks, results


def cmd_brackets(cfg):
    family = _builder(cfg)(cfg["eps"])
    results = {"family": family.describe(), "count": family.count, "claimed_A": family.cap}
    checks = []
    if cfg["verify"]:
        rep = br.verify_family(family, cfg["n_indices"], cfg["n_points"], cfg["n_mc"], cfg["seed"], cfg["n_gap"],
                               cfg["n_holder"])
        results["report"] = rep.to_dict()
        checks = [
            check("count", rep.count == rep.count_expected, rep.count, rep.count_expected),
            check("coverage", rep.coverage_violations == 0, rep.coverage_violations, 0),
            check("ordering", rep.ordering_violations == 0, rep.ordering_violations, 0),
            check("ls-gap", rep.ls_gap_violations == 0, rep.ls_gap_ratio_max, 1.0, rep.ls_gap_se),
            check("holder-cap", rep.holder_cap_violations == 0, rep.holder_max_ratio, 1.0),
        ]
    return checks, results


def cmd_entropy(cfg):
    grid = entropy.parse_delta_grid(cfg["delta_grid"])
    curve = entropy.entropy_curve(_builder(cfg), grid)
    rprime = entropy.fitted_exponent(curve)
    results = {"grid": curve.rows(), "fitted_rprime": rprime, "criterion_r_min": 2 * rprime - 1}
    sup = curve.running_sup()
    checks = [check("running-sup-monotone", all(a <= b for a, b in zip(sup, sup[1:])))]
    if cfg["r"] is not None:
        verdict = entropy.integral_condition(curve, cfg["r"], cfg["gamma"])
        results["converges"] = verdict.converges
        results["integral"] = verdict.to_dict()
        checks.append(check("integral-condition", True, cfg["r"], verdict.criterion_r_min,
                            verdict="converges" if verdict.converges else "diverges"))
        if cfg["a"] is not None:
            results["min_moment_order"] = entropy.min_moment_order(cfg["r"], cfg["gamma"], cfg["a"])
    if cfg["csv"]:
        write_csv(cfg["csv"], ["delta", "count", "cap"], [(d, n, a) for d, n, a in zip(curve.deltas, curve.counts, curve.caps)])
    return checks, results


def cmd_verify_lemmas(cfg):
    seed = cfg["seed"]
    trans = lemmas.transition_lemma_suite(cfg["pairs"], cfg["samples"], tuple(cfg["dims"]), tuple(cfg["alphas"]), seed,
                                          cfg["cap_scale"])
    gaps = lemmas.ellipsoid_gap_suite(cfg["ellipsoid_pairs"], tuple(cfg["dims"]), seed)
    hv = sum(c.holder_violations for c in trans)
    cv = sum(c.core_violations for c in trans)
    gv = sum(not c.passed for c in gaps)
    checks = [
        check("transition-holder-bound", hv == 0, hv, 0),
        check("transition-core-inequality", cv == 0, cv, 0),
        check("ellipsoid-gap", gv == 0, gv, 0),
    ]
    results = {
        "transition": {"pairs": len(trans), "max_quotient_over_bound": max(c.max_quotient / c.bound for c in trans),
                       "max_core_ratio": max(c.max_core_ratio for c in trans)},
        "ellipsoid": {"cases": len(gaps), "min_gap_over_bound": min(
            min(c.closed_form_gap, c.dense_gap, c.kernel_gap) / c.bound for c in gaps)},
        "violations": [c.to_dict() for c in trans if c.holder_violations or c.core_violations]
        + [c.to_dict() for c in gaps if not c.passed],
    }
    return checks, results


def cmd_clt_check(cfg):
    proc = _process(cfg)
    if cfg["observables"]:
        obs = [st.observable_from_spec(s) for s in cfg["observables"]]
        dirs = cfg["directions"] or 1
        diags = st.finite_dim_check(obs, proc, cfg["n"], cfg["replicas"], dirs, cfg["level"], cfg["seed"])
    else:
        obs = st.observable_from_spec(cfg["observable"])
        diags = [st.clt_check(obs, proc, cfg["n"], cfg["replicas"], cfg["level"], cfg["seed"])]
    checks = [check(f"clt-{i}", d.passed, d.p_value, d.level) for i, d in enumerate(diags)]
    return checks, {"diagnostics": [d.to_dict() for d in diags]}


def cmd_mixing_check(cfg):
    obs = st.observable_from_spec(cfg["observable"])
    est = st.covariance_decay(obs, _process(cfg), cfg["max_lag"], cfg["n"], cfg["replicas"], cfg["seed"], cfg["floor"])
    if est.status == "fitted":
        checks = [check("decay-rate", est.theta < cfg["theta_max"], est.theta, cfg["theta_max"])]
    else:
        checks = [check("decay-rate", True, None, cfg["theta_max"], verdict="below-noise-floor")]
    if cfg["csv"]:
        write_csv(cfg["csv"], ["lag", "covariance", "se"], zip(est.lags, est.covariances, est.ses))
    return checks, {"mixing": est.to_dict()}


def cmd_moment_check(cfg):
    obs = st.observable_from_spec(cfg["observable"])
    a = cfg["a"] if cfg["a"] is not None else _neutral_exponent(cfg)
    mg = st.moment_growth(obs, _process(cfg), cfg["p"], cfg["n_grid"], cfg["replicas"], cfg["seed"], cfg["slack"], a)
    if cfg["csv"]:
        write_csv(cfg["csv"], ["n", "moment", "se"], zip(mg.n_grid, mg.moments, mg.ses))
    return [check("moment-exponent", mg.passed, mg.exponent, cfg["p"] + cfg["slack"])], {"moments": mg.to_dict(), "a": a}


def cmd_torus_theorem(cfg):
    seed = cfg["seed"]
    info = classify(cfg["matrix"])
    checks = [check("ergodic", info.ergodic)]
    results = {"classification": {"ergodic": info.ergodic, "hyperbolic": info.hyperbolic,
                                  "neutral_degree": info.neutral_degree}}
    if not info.ergodic:
        return checks, results
    proc = TorusProcess(cfg["matrix"], cfg["denominator_bits"])
    mu = from_spec({"type": "uniform", "dim": proc.dim})

    family = br.build_rectangle_family(mu, cfg["eps"], 1.0, 1.0)
    rep = br.verify_family(family, cfg["n_indices"], cfg["n_points"], cfg["n_mc"], seed, cfg["n_gap"], 4)
    results["family"] = rep.to_dict()
    checks += [
        check("family-count", rep.count == rep.count_expected, rep.count, rep.count_expected),
        check("family-coverage", rep.coverage_violations == 0, rep.coverage_violations, 0),
        check("family-ls-gap", rep.ls_gap_violations == 0, rep.ls_gap_ratio_max, 1.0, rep.ls_gap_se),
        check("family-holder-cap", rep.holder_cap_violations == 0, rep.holder_max_ratio, 1.0),
    ]

    # grid observables: lower-left rectangles at the thirds
    corners = [(a, b) for a in (1 / 3, 2 / 3) for b in (1 / 3, 2 / 3)]
    grid_obs = [st.rectangle_indicator([0.0] * proc.dim, [a, b]) for a, b in corners]
    diags = st.finite_dim_check(grid_obs, proc, cfg["n"], cfg["replicas"], cfg["directions"], cfg["level"], seed)
    results["clt"] = [d.to_dict() for d in diags]
    checks += [check(f"clt-direction-{i}", d.passed, d.p_value, d.level) for i, d in enumerate(diags)]

    # bracket sandwich along one orbit: F_n(l) <= F_n(f) <= F_n(u)
    path = next(proc.paths(cfg["n"], 1, seed, block=cfg["n"]))[0]
    worst = 0.0
    for a, b in corners:
        params = (np.full(proc.dim, -np.inf), np.array([a, b]))
        bk = br.locate_bracket(family, params)
        fl, ff, fu = (float(np.mean(g(path))) for g in (bk.lower, family.member(params), bk.upper))
        worst = max(worst, fl - ff, ff - fu)
    checks.append(check("bracket-sandwich", worst <= 0.0, worst, 0.0))

    ball = st.observable_from_spec(_BALL)
    a = info.neutral_degree - 1 if info.neutral_degree else -1
    mg = st.moment_growth(ball, proc, cfg["p"], cfg["n_grid"], cfg["replicas"], seed, 0.2, a)
    results["moments"] = mg.to_dict()
    checks.append(check("moment-exponent", mg.passed, mg.exponent, cfg["p"] + 0.2))

    mix = st.covariance_decay(ball, proc, cfg["max_lag"], cfg["n"], cfg["replicas"], seed)
    results["mixing"] = mix.to_dict()
    if mix.status == "fitted":
        checks.append(check("decay-rate", mix.theta < 0.9, mix.theta, 0.9))
    else:
        checks.append(check("decay-rate", True, None, 0.9, verdict="below-noise-floor"))
    return checks, results


COMMANDS = {
    "classify": cmd_classify,
    "simulate": cmd_simulate,
    "brackets": cmd_brackets,
    "entropy": cmd_entropy,
    "verify-lemmas": cmd_verify_lemmas,
    "clt-check": cmd_clt_check,
    "mixing-check": cmd_mixing_check,
    "moment-check": cmd_moment_check,
    "torus-theorem": cmd_torus_theorem,
}

HELP = {
    "classify": "ergodicity, hyperbolicity and neutral degree of an integer matrix",
    "simulate": "exact orbits of a torus automorphism or an i.i.d. baseline",
    "brackets": "build (and optionally verify) a bracket family",
    "entropy": "bracket counts over a delta grid and the integral condition",
    "verify-lemmas": "sampled checks of the transition-function bounds and the ellipsoid gap",
    "clt-check": "Anderson-Darling normality of U_n over replicas",
    "mixing-check": "lag covariances and their decay rate",
    "moment-check": "growth exponent of centred-sum moments",
    "torus-theorem": "family verification plus CLT, moment and mixing checks on the torus",
}


def build_parser():
    parser = argparse.ArgumentParser(prog="bracketlab", description="Bracketing and empirical processes on the torus.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, defaults in DEFAULTS.items():
        p = sub.add_parser(name, help=HELP[name], argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="JSON file of configuration values; flags override it")
        p.add_argument("--emit-config", action="store_true", help="print the resolved configuration and exit")
        for key, default in defaults.items():
            flag = "--" + key.replace("_", "-")
            if key == "verify":
                p.add_argument(flag, action="store_true", dest=key)
                continue
            shown = "required" if default is REQUIRED else json.dumps(_jsonable(default))
            p.add_argument(flag, dest=key, metavar=key.upper(), help=f"default: {shown}")
    return parser


def parse_config(argv):
    """``(command, resolved config, emit flag)`` from command-line arguments."""
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config", None)
    emit = args.pop("emit_config", False)
    file_values = {}
    if config_path:
        try:
            with open(config_path) as fh:
                file_values = json.load(fh)
        except json.JSONDecodeError as err:
            raise ConfigError("config", f"malformed JSON: {err.msg}") from None
        except OSError as err:
            raise ConfigError("config", str(err)) from None
        if not isinstance(file_values, dict):
            raise ConfigError("config", "must be a JSON object")
    flags = {k: _parse_flag(k, v) if isinstance(v, str) else v for k, v in args.items()}
    if "threads" not in flags and "threads" not in file_values and os.environ.get("BRACKETLAB_THREADS"):
        flags["threads"] = os.environ["BRACKETLAB_THREADS"]
    return command, resolve_config(command, file_values, flags), emit


def run(command, cfg):
    """Run a resolved configuration; returns ``(exit code, report)``."""
    checks, results = COMMANDS[command](cfg)
    report = make_report(command, cfg, checks, results)
    code = 1 if any(c["verdict"] == "fail" for c in checks) else 0
    return code, report


def _error_report(command, cfg, kind, err):
    report = make_report(command, cfg or {}, [], {})
    report["error"] = {"kind": kind, "message": str(err)}
    return report


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    command = cfg = None
    try:
        command, cfg, emit = parse_config(argv)
        if emit:
            sys.stdout.write(dumps(cfg))
            return 0
        code, report = run(command, cfg)
        write_report(report, cfg["out"])
        return code
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2
    except (BracketLabError, OSError, ValueError, ArithmeticError) as err:
        print(f"runtime error: {err}", file=sys.stderr)
        if cfg is not None and cfg.get("out"):
            try:
                write_report(_error_report(command, cfg, type(err).__name__, err), cfg["out"])
            except OSError:
                pass
        return 3


if __name__ == "__main__":
    sys.exit(main())
