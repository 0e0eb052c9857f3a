"""Command-line entry point: ``gramlab <command> ...``.

Exit status is 0 when nothing failed, 1 when a verification failed and 2
for invalid input. JSON output keeps the wall-clock timestamp in a separate
header so the rest of a report is a pure function of the configuration.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from . import asymptotics as asy
from .distance import mean_shift_distance, rho_t, rho_tensor_bound
from .gamma import check_gamma2_identity
from .gramian import gramian_table
from .inequalities import (INEQUALITY_IDS, _jsonable, hellinger_wasserstein, integrated_harnack,
                           reverse_log_sobolev, reverse_poincare, total_variation, wang_harnack,
                           with_retry)
from .model import (ModelInputError, Spectrum, check_kalman, kalman_matrix, lift_kronecker, load_model,
                    model_to_dict)
from .scaling import kolmogorov_small_time_proxy, run_scaling_study
from .semigroup import (ClosedForm, GaussHermite, MonteCarlo, SampleStream, density, make_test_function,
                        sample_exact)
from .suite import run_acceptance, verdict_table

ALIASES = {
    "poincare": "reversePoincare", "reverse-poincare": "reversePoincare",
    "logsobolev": "reverseLogSobolev", "log-sobolev": "reverseLogSobolev", "reverse-log-sobolev": "reverseLogSobolev",
    "wang": "wangHarnack", "wang-harnack": "wangHarnack",
    "tv": "totalVariation", "total-variation": "totalVariation",
    "hellinger": "hellingerWasserstein",
    "harnack": "integratedHarnack", "integrated-harnack": "integratedHarnack",
}


class InputError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    params: dict
    seed: int = 0
    tol: float = 1e-10
    out: str | None = None
    threads: int | None = None
    fmt: str = "json"

    def __post_init__(self):
        if not self.tol > 0:
            raise InputError("tolerances must be positive")


@dataclass
class RunReport:
    tool_version: str
    config: dict
    results: list = field(default_factory=list)
    table: str = ""  # CSV payload, when the command produces a grid
    counts: dict = field(default_factory=lambda: {"pass": 0, "fail": 0, "inconclusive": 0})

    def tally(self, verdict: str):
        if verdict in self.counts:
            self.counts[verdict] += 1

    @property
    def exit_code(self) -> int:
        return 1 if self.counts["fail"] else 0

    def body(self) -> dict:
        return _jsonable({"tool_version": self.tool_version, "config": self.config,
                          "results": self.results, "summary": self.counts})


# ---------------------------------------------------------------------------
# argument helpers


def _vec(text):
    if text is None:
        return None
    try:
        return np.array([float(v) for v in str(text).split(",") if v.strip()])
    except ValueError as exc:
        raise InputError(f"cannot parse vector {text!r}") from exc


def _grid(text, cast=float):
    try:
        vals = [cast(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"cannot parse grid {text!r}") from exc
    if not vals:
        raise InputError("grid is empty")
    return vals


def _model(params):
    spec = load_model(params["model"])
    if params.get("spectrum") or params.get("k"):
        if spec.kronecker is None:
            raise InputError("--spectrum/--k need a Kronecker (zoo or A_bar) model")
        km = spec.kronecker
        if params.get("spectrum"):
            km = km.with_spectrum(Spectrum.parse(params["spectrum"]))
        k = int(params.get("k") or 1)
        spec.kronecker, spec.k, spec.linear = km, k, lift_kronecker(km, k)
    return spec


def _point(text, n, name):
    v = _vec(text)
    if v is None:
        return np.zeros(n)
    if v.size != n:
        raise InputError(f"--{name} needs {n} components, got {v.size}")
    return v


def _test_function(params, n):
    extra = {}
    if params.get("v"):
        extra["v"] = _point(params["v"], n, "v")
    for key in ("b", "shift", "c", "scale"):
        if params.get(key) is not None:
            extra[key] = float(params[key])
    return make_test_function(params.get("f") or "logistic", n, **extra)


def _method(params, f, seed):
    name = params.get("method") or "auto"
    samples = int(params.get("samples") or 1_000_000)
    mc = MonteCarlo(samples, SampleStream(seed, int(params.get("stream") or 0)))
    if name == "auto":
        return mc if f is not None and f.kind == "logistic" else ClosedForm()
    if name in ("closed", "closedForm"):
        return ClosedForm()
    if name in ("gh", "gaussHermite"):
        return GaussHermite(int(params.get("order") or 40))
    if name in ("mc", "monteCarlo"):
        return mc
    raise InputError(f"unknown method {name!r}")


# ---------------------------------------------------------------------------
# commands


def cmd_model(cfg, rep):
    spec = _model(cfg.params)
    m = spec.linear
    K = kalman_matrix(m)
    rep.results.append({"model": model_to_dict(spec), "n": m.n, "A": m.A.tolist(), "sigma": m.sigma.tolist(),
                        "kalman_rank": int(np.linalg.matrix_rank(K)), "kalman": check_kalman(m)})
    if cfg.params.get("dump"):
        from .model import dump_model
        dump_model(spec, cfg.params["dump"])


def cmd_gramian(cfg, rep):
    spec = _model(cfg.params)
    rows = gramian_table(spec.linear, _grid(cfg.params.get("t") or "1"))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "lambdaMin", "lambda2Min", "condG"])
    for row in rows:
        w.writerow([repr(v) for v in row])
    rep.table = buf.getvalue()
    rep.results.extend({"t": r[0], "lambdaMin": r[1], "lambda2Min": r[2], "condG": r[3]} for r in rows)


def cmd_distance(cfg, rep):
    spec = _model(cfg.params)
    m, t = spec.linear, float(cfg.params.get("t") or 1.0)
    x, y = _point(cfg.params.get("x"), m.n, "x"), _point(cfg.params.get("y"), m.n, "y")
    out = {"t": t, "x": x, "y": y, "rho_t": rho_t(m, t, x, y), "mean_shift": mean_shift_distance(m, t, x, y)}
    if spec.kronecker is not None:
        exact, bound = rho_tensor_bound(spec.kronecker, spec.k, t, x, y)
        out["tensor_bound"] = bound
        rep.tally("pass" if exact <= bound + 1e-10 else "fail")
    rep.results.append(out)


def cmd_sample(cfg, rep):
    spec = _model(cfg.params)
    m, t = spec.linear, float(cfg.params.get("t") or 1.0)
    x = _point(cfg.params.get("x"), m.n, "x")
    count = int(cfg.params.get("count") or 1000)
    Y = sample_exact(m, t, x, count, SampleStream(cfg.seed, int(cfg.params.get("stream") or 0)))
    buf = io.StringIO()
    buf.write(f"# t={t!r} x={','.join(repr(float(v)) for v in x)} seed={cfg.seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"y{i + 1}" for i in range(m.n)])
    for row in Y:
        w.writerow([repr(float(v)) for v in row])
    rep.table = buf.getvalue()
    rep.results.append({"count": count, "sample_mean": Y.mean(axis=0)})


def cmd_density(cfg, rep):
    spec = _model(cfg.params)
    m, t = spec.linear, float(cfg.params.get("t") or 1.0)
    x, y = _point(cfg.params.get("x"), m.n, "x"), _point(cfg.params.get("y"), m.n, "y")
    rep.results.append({"t": t, "x": x, "y": y, "density": density(m, t, x, y)})


def _verify_one(cfg, ineq):
    p = cfg.params
    spec = _model(p)
    m, t = spec.linear, float(p.get("t") or 1.0)
    x, y = _point(p.get("x"), m.n, "x"), _point(p.get("y"), m.n, "y")
    if ineq == "totalVariation":
        return total_variation(m, t, x, y, cfg.tol)
    if ineq == "hellingerWasserstein":
        return hellinger_wasserstein(m, t, x, y, cfg.tol)
    if ineq == "integratedHarnack":
        meth = _method(p, None, cfg.seed)
        return integrated_harnack(m, t, float(p.get("p") or 2.0), x, y, meth, cfg.tol)
    f = _test_function(p, m.n)
    meth = _method(p, f, cfg.seed)
    if ineq == "reversePoincare":
        return with_retry(reverse_poincare, m, t, x, f, method=meth, abs_tol=cfg.tol)
    if ineq == "reverseLogSobolev":
        return with_retry(reverse_log_sobolev, m, t, x, f, method=meth, abs_tol=cfg.tol)
    alpha = float(p.get("alpha") or 2.0)
    return with_retry(wang_harnack, m, t, alpha, x, y, f, method=meth, abs_tol=cfg.tol)


def cmd_verify(cfg, rep):
    if cfg.params.get("suite"):
        return cmd_suite(cfg, rep)
    name = cfg.params.get("inequality")
    if not name:
        raise InputError("verify needs an inequality id or --suite")
    ineq = ALIASES.get(name, name)
    if ineq not in INEQUALITY_IDS:
        raise InputError(f"unknown inequality {name!r}; choose from {INEQUALITY_IDS}")
    r = _verify_one(cfg, ineq)
    rep.tally(r.verdict)
    rep.results.append(r.to_dict())


def cmd_asymptotics(cfg, rep):
    p = cfg.params
    which = p.get("which")
    rows = []
    if which == "kfp":
        regime = p.get("regime") or "large"
        for g in _grid(p.get("gamma") or "50,100,200"):
            for ts in _grid(p.get("tstar") or "1,2,3,4,5"):
                r = asy.kfp_lambda_bound(g, ts, regime)
                rows.append((f"gamma={g:g};t*={ts:g};{regime}", r.rhs, r.lhs, r.verdict))
        rep.results.append(asy.kfp_threshold_scan(regime))
    elif which == "coupled":
        for j in _grid(p.get("j") or "2,3,4,5,6,7,8", int):
            for t in _grid(p.get("t") or "1,10,100,1000"):
                r = asy.coupled_osc_bound(j, t, corrected=bool(p.get("corrected")))
                rows.append((f"j={j};t={t:g}", r.rhs, r.lhs, r.verdict))
    elif which == "damped":
        for j in _grid(p.get("j") or "3,4,5,6,7,8", int):
            for t in _grid(p.get("t") or "2,10,100"):
                r = asy.damped_osc_lambda_bound(j, t)
                rows.append((f"j={j};t={t:g}", r.rhs, r.lhs, r.verdict))
            d = asy.damped_osc_decay(j, float(p.get("tmax") or 200.0), np.eye(j)[0]).report
            rows.append((f"j={j};decay", d.rhs, d.lhs, d.verdict))
    else:
        raise InputError("asymptotics needs one of kfp, coupled, damped")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["parameter", "LHS", "RHS", "verdict"])
    for name, lhs, rhs, verdict in rows:
        w.writerow([name, repr(lhs), repr(rhs), verdict])
        rep.tally(verdict)
        rep.results.append({"parameter": name, "LHS": lhs, "RHS": rhs, "verdict": verdict})
    rep.table = buf.getvalue()


def cmd_scaling(cfg, rep):
    p = cfg.params
    spec = load_model(p["model"])
    if spec.kronecker is None:
        raise InputError("scaling needs a Kronecker model")
    km = spec.kronecker.with_spectrum(Spectrum.parse(p.get("spectrum") or "power:2"))
    kgrid = _grid(p.get("kgrid") or "", int)
    lam = None
    source = p.get("lambda") or "exact"
    if source == "cubic":
        lam, source = kolmogorov_small_time_proxy, "t^3/12 proxy"
    study = run_scaling_study(km, kgrid, lam, float(p.get("tmax") or 1e6), source)
    rep.results.append(json.loads(study.to_json()))
    rep.table = study.to_csv()
    rep.tally(study.growth.verdict)


def cmd_suite(cfg, rep):
    results = run_acceptance(cfg.seed, cfg.threads)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["criterion", "title", "instance", "verdict"])
    for row in verdict_table(results):
        w.writerow(row)
    rep.table = buf.getvalue()
    for r in results:
        rep.tally("pass" if r.passed else "fail")
        summary = {k: v for k, v in r.summary.items() if k != "seconds"}  # keep the body deterministic
        rep.results.append({"criterion": r.number, "title": r.title, "passed": r.passed, "summary": summary})
        print(r.line(), file=sys.stderr)


def cmd_gamma_check(cfg, rep):
    res = check_gamma2_identity(int(cfg.params.get("count") or 200), cfg.seed,
                                points=int(cfg.params.get("points") or 0))
    rep.tally("pass" if res.passed else "fail")
    rep.results.append(asdict(res))


COMMANDS = {"model": cmd_model, "gramian": cmd_gramian, "distance": cmd_distance, "sample": cmd_sample,
            "density": cmd_density, "verify": cmd_verify, "asymptotics": cmd_asymptotics,
            "scaling": cmd_scaling, "suite": cmd_suite, "gamma-check": cmd_gamma_check}


def run(cfg: RunConfig) -> RunReport:
    rep = RunReport(__version__, {"command": cfg.command, "seed": cfg.seed, "tol": cfg.tol,
                                  "params": {k: v for k, v in sorted(cfg.params.items()) if v is not None}})
    COMMANDS[cfg.command](cfg, rep)
    return rep


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("--out", help="write the payload to this path instead of stdout")
    common.add_argument("--threads", type=int, help="worker threads (default: GRAMLAB_THREADS or 1)")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--plot-data", action="store_true", help="emit the tidy CSV grid")

    model_args = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    model_args.add_argument("--model", required=True,
                            help="JSON model file or zoo id such as kinetic-fp:gamma=3")
    model_args.add_argument("--spectrum", help="power:P, polylog:P or explicit:a1,a2,...")
    model_args.add_argument("--k", type=int, help="number of retained noise modes")

    parser = argparse.ArgumentParser(prog="gramlab", parents=[common], allow_abbrev=False,
                                     description="Gramians, distances and inequality checks for linear diffusions")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("model", parents=[common, model_args], allow_abbrev=False)
    p.add_argument("--dump", help="write the resolved model file")
    p = sub.add_parser("gramian", parents=[common, model_args], allow_abbrev=False)
    p.add_argument("--t", default="1")
    for name in ("distance", "density"):
        p = sub.add_parser(name, parents=[common, model_args], allow_abbrev=False)
        p.add_argument("--t", default="1")
        p.add_argument("--x")
        p.add_argument("--y")
    p = sub.add_parser("sample", parents=[common, model_args], allow_abbrev=False)
    p.add_argument("--t", default="1")
    p.add_argument("--x")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--stream", type=int, default=0)

    p = sub.add_parser("verify", parents=[common], allow_abbrev=False)
    p.add_argument("inequality", nargs="?")
    p.add_argument("--suite", action="store_true")
    p.add_argument("--model")
    p.add_argument("--spectrum")
    p.add_argument("--k", type=int)
    for flag in ("--t", "--x", "--y", "--alpha", "--p", "--f", "--v", "--b", "--shift", "--c", "--scale",
                 "--method", "--order", "--samples", "--stream"):
        p.add_argument(flag)

    p = sub.add_parser("asymptotics", parents=[common], allow_abbrev=False)
    p.add_argument("which", choices=("kfp", "coupled", "damped"))
    for flag in ("--gamma", "--tstar", "--regime", "--j", "--t", "--tmax"):
        p.add_argument(flag)
    p.add_argument("--corrected", action="store_true")

    p = sub.add_parser("scaling", parents=[common], allow_abbrev=False)
    p.add_argument("--model", required=True)
    p.add_argument("--spectrum", default="power:2")
    p.add_argument("--kgrid", required=True)
    p.add_argument("--lambda", choices=("exact", "cubic"), default="exact")
    p.add_argument("--tmax")

    p = sub.add_parser("suite", parents=[common], allow_abbrev=False)
    p.add_argument("which", nargs="?", default="acceptance", choices=("acceptance",))

    p = sub.add_parser("gamma-check", parents=[common], allow_abbrev=False)
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--points", type=int, default=0)
    return parser


def _emit(rep: RunReport, fmt: str, out: str | None, seconds: float = 0.0):
    if fmt == "csv" and rep.table:
        text = rep.table
    else:
        header = {"tool": "gramlab", "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
                  "wall_clock_seconds": round(seconds, 3)}
        text = json.dumps({"header": header, "body": rep.body()}, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    globals_ = {"seed", "tol", "out", "threads", "format", "plot_data", "command"}
    params = {k: v for k, v in vars(args).items() if k not in globals_}
    if args.command == "verify" and not args.suite and not args.model:
        parser.error("verify needs --model (or --suite)")
    try:
        cfg = RunConfig(args.command, params, args.seed, args.tol, args.out, args.threads,
                        args.format or "json")
        start = time.perf_counter()
        rep = run(cfg)
    except (InputError, ModelInputError, ValueError, KeyError, OSError) as exc:
        print(f"gramlab: error: {exc}", file=sys.stderr)
        return 2
    fmt = "csv" if args.plot_data else cfg.fmt
    _emit(rep, fmt, cfg.out, time.perf_counter() - start)
    return rep.exit_code


if __name__ == "__main__":
    sys.exit(main())
