"""Command-line entry point: ``python -m mixbesov <command> ...``.

Every command writes a JSON report ``{schema_version, command, params,
results, warnings}`` and prints a short summary. Commands that produce a
field or CSV table write it to ``--out`` and the JSON report to ``--report``.

Exit codes: 0 success, 1 invalid input, 2 a suite or check that ran but failed.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .difference_norms import besov_norm_diff_terms, local_besov_norm_diff2, make_lag_grid
from .errors import MixBesovError, ValidationError
from .grid import make_grid, read_field, write_field
from .harness import SUITE_KINDS, default_corpus, run_equivalence_experiment, run_inequality_suite, she_spacetime_corpus
from .littlewood_paley import BesovParams, besov_norm_lp, build_partition, decompose
from .mixed_norms import exponent_pair
from .random_fields import (
    CovSpec,
    GaussianSampler,
    MomentReport,
    SheConfig,
    SheSampler,
    estimate_increment_moments,
    kolmogorov_check,
    regularity_fit,
    simulate_she,
)

SCHEMA_VERSION = 1


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n\n{self.format_help()}")


# --- argument helpers -------------------------------------------------------------

def _pair(text: str) -> tuple:
    parts = str(text).split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma-separated values, got {text!r}")
    return tuple(parts)


def _alpha(text: str) -> tuple:
    try:
        return tuple(float(v) for v in _pair(text))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad smoothness pair {text!r}") from exc


def _shape(text: str) -> tuple:
    try:
        a, b = str(text).lower().split("x")
        return int(a), int(b)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected AxB, got {text!r}") from exc


def _plist(text: str) -> list:
    return [float(v) for v in str(text).split(",") if v.strip()]


def _params(ns) -> BesovParams:
    return BesovParams(ns.alpha, exponent_pair(ns.p), exponent_pair(ns.q))


def _add_besov(sp, alpha="0.3,0.4", p="2,2", q="2,2"):
    sp.add_argument("--alpha", type=_alpha, default=_alpha(alpha), help="smoothness pair a1,a2")
    sp.add_argument("--p", type=_pair, default=_pair(p), help="integrability pair (use inf for infinity)")
    sp.add_argument("--q", type=_pair, default=_pair(q), help="summability pair")


def _add_common(sp):
    sp.add_argument("--config", help="JSON file whose keys mirror flag names")
    sp.add_argument("--no-timestamp", action="store_true", help="omit timestamps and timings (byte-stable output)")


# --- JSON output ------------------------------------------------------------------

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


_VOLATILE = {"runtime_seconds"}


def _strip_volatile(obj):
    if isinstance(obj, dict):
        return {k: _strip_volatile(v) for k, v in obj.items() if k not in _VOLATILE}
    if isinstance(obj, list):
        return [_strip_volatile(v) for v in obj]
    return obj


def _report(ns, results, caught) -> str:
    params = {k: v for k, v in vars(ns).items() if k not in ("config", "no_timestamp", "handler", "command")}
    rep = {
        "schema_version": SCHEMA_VERSION,
        "command": ns.command,
        "params": params,
        "results": results,
        "warnings": sorted({f"{w.category.__name__}: {w.message}" for w in caught}),
    }
    if ns.no_timestamp:
        rep = _strip_volatile(rep)
    else:
        rep["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
        rep["version"] = __version__
    return json.dumps(_clean(rep), indent=2, sort_keys=True) + "\n"


def _write(path, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as exc:
        from .errors import FieldIOError
        raise FieldIOError(str(exc)) from exc


# --- commands -----------------------------------------------------------------------

def cmd_norm(ns):
    f = read_field(ns.input)
    value = besov_norm_lp(decompose(f, build_partition()), _params(ns))
    print(f"besov_lp = {value:.12g}")
    return [{"besov_lp": value}], 0


def cmd_diffnorm(ns):
    f = read_field(ns.input)
    params = _params(ns)
    k_max = ns.k_max if ns.k_max is not None else max(3, int(math.log2(min(f.grid.shape))) - 2)
    lags = make_lag_grid(f.grid, k_max)
    if ns.domain is not None:
        if ns.variant != 2:
            raise ValidationError("the localised norm exists for variant 2 only")
        terms = local_besov_norm_diff2(f, params, ns.domain, lags, terms=True)
    else:
        terms = besov_norm_diff_terms(f, params, lags, "sup" if ns.variant == 1 else "plain")
    print(f"besov_diff (variant {ns.variant}) = {terms['total']:.12g}")
    return [{"besov_diff": terms["total"], "variant": ns.variant, "domain": ns.domain,
             "k_max": k_max, "terms": terms}], 0


def cmd_decompose(ns):
    f = read_field(ns.input)
    dec = decompose(f, build_partition())
    norms = dec.block_norms(exponent_pair(ns.p))
    lines = ["j,k,norm,truncated"]
    rows = []
    for j in dec.j_range:
        for k in dec.k_range:
            v = float(norms[j + 1, k + 1])
            trunc = (j, k) in dec.truncated
            lines.append(f"{j},{k},{v!r},{int(trunc)}")
            rows.append({"j": j, "k": k, "norm": v, "truncated": trunc})
    csv_text = "\n".join(lines) + "\n"
    if ns.out:
        _write(ns.out, csv_text)
    else:
        sys.stdout.write(csv_text)
    print(f"{len(rows)} blocks, j <= {dec.j_max}, k <= {dec.k_max}")
    return rows, 0


_COVS = {
    "sheet": (np.minimum, np.minimum),
    "sheet-bridge": (np.minimum, lambda s, t: np.minimum(s, t) - s * t / (2 * math.pi)),
}


def _gauss_sampler(ns) -> GaussianSampler:
    n1, n2 = ns.grid
    g = make_grid(n1, n2, ns.L)
    q1, q2 = _COVS[ns.cov]
    return GaussianSampler(CovSpec(q1, q2, "rectangle", ns.T), g, ns.seed)


def _indexed(path: str, i: int, n: int) -> str:
    if n == 1:
        return path
    p = Path(path)
    return str(p.with_name(f"{p.stem}_{i:04d}{p.suffix}"))


def cmd_sample_gauss(ns):
    s = _gauss_sampler(ns)
    out = []
    for i in range(ns.samples):
        f = s.draw(i)
        if ns.out:
            path = _indexed(ns.out, i, ns.samples)
            write_field(f, path)
            out.append({"index": i, "path": path, "max_abs": float(np.abs(f.values).max())})
    print(f"drew {ns.samples} sample(s) on grid {s.grid.shape}")
    return out, 0


def _she_cfg(ns) -> SheConfig:
    nt, nx = ns.grid
    return SheConfig(ns.T, ns.modes, nt, nx, ns.seed)


def cmd_simulate_she(ns):
    cfg = _she_cfg(ns)
    u = simulate_she(cfg, ns.index)
    if ns.out:
        write_field(u, ns.out)
    i0 = u.grid.n1 // 2
    last = u.values[i0 + cfg.n_time - 1]
    print(f"heat equation path: {cfg.n_time} steps of {cfg.dt:.4g}, {cfg.n_modes} modes")
    return [{"path": ns.out, "grid": list(u.grid.shape), "dt": cfg.dt,
             "final_mean_square": float(np.mean(last ** 2))}], 0


def _moment_report(ns) -> MomentReport:
    if getattr(ns, "moments", None):
        text = Path(ns.moments).read_text()
        return MomentReport.from_csv(text) if ns.moments.endswith(".csv") else MomentReport.from_json(text)
    if ns.source == "she":
        sampler = SheSampler(_she_cfg(ns))
        lags = make_lag_grid(sampler.grid, ns.k_max, 1, 2)
    else:
        sampler = _gauss_sampler(ns)
        lags = make_lag_grid(sampler.grid, ns.k_max)
    return estimate_increment_moments(sampler, lags, ns.moment_p, ns.samples)


def cmd_moments(ns):
    rep = _moment_report(ns)
    if ns.csv:
        _write(ns.csv, rep.to_csv())
    fit = regularity_fit(rep, ns.moment_p[0])
    for kind, f in fit.items():
        print(f"{kind}: slopes {', '.join(f'{s:.3f}' for s in f['slopes'])}  R^2 {f['r2']:.4f}")
    return [{"moments": rep.to_records(), "fit": fit}], 0


def cmd_kolmogorov(ns):
    rep = _moment_report(ns)
    verdict = kolmogorov_check(rep, _params(ns), ns.tolerance)
    print(f"verdict: {'pass' if verdict.passed else 'fail'}; admissible alpha up to "
          f"({verdict.admissible_alpha[0]:.3f}, {verdict.admissible_alpha[1]:.3f})")
    return [verdict.to_dict()], 0


def cmd_equivalence(ns):
    corpus = default_corpus(ns.n)
    coarse = make_grid(ns.n // 2, ns.n // 2, corpus.members[0].field.grid.L)
    k_max = ns.k_max if ns.k_max is not None else int(math.log2(ns.n // 2)) - 2
    rep = run_equivalence_experiment(corpus, _params(ns), make_lag_grid(coarse, k_max))
    print(f"ratio band [{rep.band[0]:.4g}, {rep.band[1]:.4g}], C = {rep.constant:.4g}, "
          f"max refinement change {100 * rep.max_delta:.2f}%")
    ok = rep.constant <= ns.max_constant and rep.max_delta <= ns.max_delta
    return [rep.to_dict()], 0 if ok else 2


def cmd_suite(ns):
    params = _params(ns)
    corpus = None
    if ns.kind == "multiplier" and ns.corpus == "she":
        corpus = she_spacetime_corpus()
    elif ns.kind in ("embedding", "lifting", "multiplier"):
        corpus = default_corpus(ns.n)
    rep = run_inequality_suite(ns.kind, corpus, params)
    print(f"suite {ns.kind}: {'pass' if rep.passed else 'FAIL'}; {len(rep.instances)} instances, "
          f"max constant {rep.max_constant:.4g}, violations {rep.violations}")
    return [rep.to_dict()], 0 if rep.passed else 2


# --- parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="mixbesov", description="Mixed-smoothness Besov norms of sampled fields on R x T.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", parser_class=_Parser, required=True)

    sp = sub.add_parser("norm", help="Fourier-side Besov norm of a field file")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--out", help="JSON report path")
    _add_besov(sp, "0.5,0.5")
    _add_common(sp)
    sp.set_defaults(handler=cmd_norm, report=None)

    sp = sub.add_parser("diffnorm", help="difference-characterisation norm of a field file")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--out", help="JSON report path")
    sp.add_argument("--variant", type=int, choices=(1, 2), default=2, help="1: sup over shifts, 2: plain")
    sp.add_argument("--domain", type=float, default=None, help="T for the localised norm on [0,T] x T")
    sp.add_argument("--k-max", type=int, default=None)
    _add_besov(sp, "0.5,0.5")
    _add_common(sp)
    sp.set_defaults(handler=cmd_diffnorm, report=None)

    sp = sub.add_parser("decompose", help="per-block norms as CSV")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--out", help="CSV path (stdout if omitted)")
    sp.add_argument("--report", help="JSON report path")
    sp.add_argument("--p", type=_pair, default=_pair("2,2"))
    _add_common(sp)
    sp.set_defaults(handler=cmd_decompose)

    def add_gauss(sp):
        sp.add_argument("--cov", choices=sorted(_COVS), default="sheet")
        sp.add_argument("--T", type=float, default=1.0)
        sp.add_argument("--L", type=float, default=math.pi)
        sp.add_argument("--grid", type=_shape, default=_shape("128x128"), help="N1xN2")
        sp.add_argument("--seed", type=int, default=0)

    def add_she(sp):
        sp.add_argument("--T", type=float, default=1.0)
        sp.add_argument("--modes", type=int, default=128)
        sp.add_argument("--grid", type=_shape, default=_shape("256x256"), help="time steps x space points")
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("sample-gauss", help="draw product-covariance Gaussian fields")
    add_gauss(sp)
    sp.add_argument("--samples", type=int, default=1)
    sp.add_argument("--out", help="field file (an index suffix is added for several samples)")
    sp.add_argument("--report", help="JSON report path")
    _add_common(sp)
    sp.set_defaults(handler=cmd_sample_gauss)

    sp = sub.add_parser("simulate-she", help="one path of the stochastic heat equation")
    add_she(sp)
    sp.add_argument("--index", type=int, default=0, help="sample index within the seed's stream")
    sp.add_argument("--out", help="field file")
    sp.add_argument("--report", help="JSON report path")
    _add_common(sp)
    sp.set_defaults(handler=cmd_simulate_she)

    for name, handler in (("moments", cmd_moments), ("kolmogorov", cmd_kolmogorov)):
        sp = sub.add_parser(name, help="increment moments" if name == "moments" else "Kolmogorov-type verdict")
        sp.add_argument("--source", choices=("sheet", "she"), default="sheet")
        sp.add_argument("--cov", choices=sorted(_COVS), default="sheet")
        sp.add_argument("--T", type=float, default=None)
        sp.add_argument("--L", type=float, default=math.pi)
        sp.add_argument("--grid", type=_shape, default=None)
        sp.add_argument("--modes", type=int, default=128)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--samples", type=int, default=256)
        sp.add_argument("--k-max", type=int, default=4)
        sp.add_argument("--out", help="JSON report path")
        if name == "moments":
            sp.add_argument("--moment-p", type=_plist, default=[2.0, 4.0], help="comma-separated exponents")
            sp.add_argument("--csv", help="also write the moment table as CSV")
        else:
            sp.add_argument("--moments", help="read a moment table (JSON or .csv) instead of sampling")
            sp.add_argument("--tolerance", type=float, default=0.1)
            _add_besov(sp, "0.2,0.2", "4,4", "4,4")
        _add_common(sp)
        sp.set_defaults(handler=handler, report=None)

    sp = sub.add_parser("equivalence", help="norm-equivalence experiment on the default corpus")
    sp.add_argument("--n", type=int, default=512, help="fine resolution (the coarse one is half)")
    sp.add_argument("--k-max", type=int, default=None, help="lag octaves on the coarse grid")
    sp.add_argument("--max-constant", type=float, default=50.0)
    sp.add_argument("--max-delta", type=float, default=0.25)
    sp.add_argument("--out", help="JSON report path")
    _add_besov(sp)
    _add_common(sp)
    sp.set_defaults(handler=cmd_equivalence, report=None)

    sp = sub.add_parser("suite", help="inequality suites")
    sp.add_argument("kind", choices=SUITE_KINDS)
    sp.add_argument("--n", type=int, default=256, help="corpus resolution")
    sp.add_argument("--corpus", choices=("default", "she"), default="default")
    sp.add_argument("--out", help="JSON report path")
    _add_besov(sp)
    _add_common(sp)
    sp.set_defaults(handler=cmd_suite, report=None)
    return ap


def _apply_config(ap, argv):
    """Re-parse with config-file values as defaults, so explicit flags win."""
    ns = ap.parse_args(argv)
    if not getattr(ns, "config", None):
        return ns
    try:
        cfg = json.loads(Path(ns.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {ns.config}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ValidationError("config file must hold a JSON object")
    sub = next(a for a in ap._actions if isinstance(a, argparse._SubParsersAction)).choices[ns.command]
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in cfg.items():
        dest = "input" if key == "in" else key.replace("-", "_")
        if dest not in known or dest in ("config", "help"):
            raise ValidationError(f"unknown config key {key!r} for {ns.command}")
        act = known[dest]
        if act.type is not None and not isinstance(value, bool):
            value = act.type(",".join(map(str, value)) if isinstance(value, list) else str(value))
        defaults[dest] = value
    sub.set_defaults(**defaults)
    return ap.parse_args(argv)


def _normalise(ns):
    # fill source-dependent defaults for the sampling commands
    if ns.command in ("moments", "kolmogorov"):
        if ns.T is None:
            ns.T = 8.0 if ns.source == "she" else ns.L
        if ns.grid is None:
            ns.grid = (256, 256) if ns.source == "she" else (128, 128)
    if ns.command == "kolmogorov":
        ns.moment_p = [exponent_pair(ns.p)[1]]
    return ns


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        ns = _normalise(_apply_config(ap, argv))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            results, code = ns.handler(ns)
        text = _report(ns, results, caught)
        target = ns.report if getattr(ns, "report", None) else (
            ns.out if ns.command not in ("decompose", "sample-gauss", "simulate-she") else None)
        if target:
            _write(target, text)
        return code
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (MixBesovError, ValueError, argparse.ArgumentTypeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
