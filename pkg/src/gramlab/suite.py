"""The acceptance grid: thirteen numbered checks run as one deterministic batch."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import asymptotics as asy
from .distance import cameron_martin_sq, rho_t
from .gamma import check_gamma2_identity
from .gramian import (check_backward_ode, check_g2_bound, cov_sigma, gramian_G,
                      lambda_min)
from .inequalities import (hellinger_wasserstein, integrated_harnack, reverse_log_sobolev,
                           reverse_poincare, total_variation, wang_harnack, with_retry)
from .linalg import expm, spd_inverse
from .model import KroneckerModel, Spectrum, ZooId, default_zoo, lift_kronecker, zoo_build
from .scaling import exact_lambda, growth_condition, kolmogorov_small_time_proxy, quasi_invariance_lp
from .semigroup import (ClosedForm, ExpLinear, Halfspace, Linear, Logistic, MonteCarlo, SampleStream)

POWER2 = Spectrum("power", p=2.0)
MC_SAMPLES = 1_000_000


def thread_count(threads: int | None = None) -> int:
    if threads:
        return max(1, int(threads))
    env = os.environ.get("GRAMLAB_THREADS")
    return max(1, int(env)) if env else 1


def parallel_map(fn, items, threads: int | None = None) -> list:
    """Order-preserving map; results do not depend on the thread count."""
    items = list(items)
    n = thread_count(threads)
    if n == 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    summary: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)  # (instance id, verdict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        keys = ", ".join(f"{k}={_fmt(v)}" for k, v in self.summary.items())
        return f"[{status}] criterion {self.number}: {self.title} ({keys})"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def _rng(seed: int, criterion: int) -> np.random.Generator:
    return np.random.default_rng([seed, criterion])


def _stream(seed: int, criterion: int, index: int) -> SampleStream:
    return SampleStream(seed, criterion * 100_000 + index)


def zoo_models(k_values=(1,)) -> list:
    """Lifted zoo models: each default zoo entry at each k, noise alpha_l = l^-2."""
    out = []
    for zid in default_zoo():
        km = zoo_build(zid, POWER2)
        for k in k_values:
            out.append(lift_kronecker(km, k))
    return out


def _random_pair(rng, m, t, rho_range=(0.1, 2.0)):
    """Random (x, y) rescaled so rho_t(x, y) falls in rho_range."""
    x = rng.normal(size=m.n)
    d = rng.normal(size=m.n)
    target = rng.uniform(*rho_range)
    d *= target / rho_t(m, t, d, np.zeros(m.n))
    return x, x - d


# ---------------------------------------------------------------------------


def criterion_1(seed: int, threads=None) -> CriterionResult:
    start = time.perf_counter()
    res = check_gamma2_identity(200, seed=seed, max_n=4, max_degree=4)
    elapsed = time.perf_counter() - start
    return CriterionResult(1, "Gamma_2 identity (exact rational)", res.passed and elapsed < 10,
                           {"triples": res.count, "mismatches": res.mismatches, "seconds": elapsed},
                           [("gamma2", "pass" if res.passed else "fail")])


def kolmogorov_closed_forms(t: float) -> dict:
    G = np.array([[t, -t ** 2 / 2], [-t ** 2 / 2, t ** 3 / 3]])
    Ginv = np.array([[4 / t, 6 / t ** 2], [6 / t ** 2, 12 / t ** 3]])
    tr = t + t ** 3 / 3
    lam = t ** 4 / (6 * (tr + math.sqrt(tr * tr - t ** 4 / 3)))  # cancellation-free root
    return {"G": G, "Ginv": Ginv, "lambda": lam}


def criterion_2(seed: int, threads=None) -> CriterionResult:
    km = zoo_build(ZooId("kolmogorov"))
    worst = 0.0
    rows = []
    for t in (1e-3, 1e-1, 1.0, 10.0, 1e3):
        ref = kolmogorov_closed_forms(t)
        G = gramian_G(km, 0.0, t)
        errs = [np.max(np.abs(G - ref["G"]) / np.abs(ref["G"])),
                np.max(np.abs(spd_inverse(G) - ref["Ginv"]) / np.abs(ref["Ginv"])),
                abs(lambda_min(km, t) / ref["lambda"] - 1)]
        worst = max(worst, *errs)
        rows.append((f"t={t:g}", "pass" if max(errs) <= 1e-12 else "fail"))
    large = lambda_min(km, 1e3) / (1e3 / 4)
    small = lambda_min(km, 1e-3) / (1e-9 / 12)
    ok = worst <= 1e-12 and abs(large - 1) <= 0.01 and abs(small - 1) <= 0.01
    return CriterionResult(2, "Kolmogorov closed forms", ok,
                           {"max_rel_err": worst, "ratio_large_t": large, "ratio_small_t": small}, rows)


def criterion_3(seed: int, threads=None) -> CriterionResult:
    rng = _rng(seed, 3)
    worst_sigma = worst_add = worst_ode = 0.0
    rows = []
    for zid in default_zoo():
        m = zoo_build(zid).underlying
        for i in range(10):
            s, t = rng.uniform(0.0, 3.0, size=2)
            s, t = max(s, 1e-3), max(t, 1e-3)
            Gt, Gs, Gts = gramian_G(m, 0, t), gramian_G(m, 0, s), gramian_G(m, 0, t + s)
            F = expm(t * m.A)
            Sig = cov_sigma(m, t)
            e1 = np.linalg.norm(Sig - F @ Gt @ F.T) / np.linalg.norm(Sig)
            B = expm(-t * m.A)
            e2 = np.linalg.norm(Gts - Gt - B @ Gs @ B.T) / np.linalg.norm(Gts)
            lo, hi = sorted((s, t))
            if hi - lo < 3e-4:
                hi = lo + 1.0
            e3 = check_backward_ode(m, (lo + hi) / 2, hi, 1e-4)
            worst_sigma, worst_add, worst_ode = max(worst_sigma, e1), max(worst_add, e2), max(worst_ode, e3)
            rows.append((f"{zid.label()}#{i}", "pass" if e1 <= 1e-10 and e2 <= 1e-10 and e3 <= 1e-6 else "fail"))
    ok = worst_sigma <= 1e-10 and worst_add <= 1e-10 and worst_ode <= 1e-6
    return CriterionResult(3, "Gramian identities", ok,
                           {"sigma_identity": worst_sigma, "additivity": worst_add, "backward_ode": worst_ode},
                           rows)


def criterion_4(seed: int, threads=None, mc_samples: int = MC_SAMPLES) -> CriterionResult:
    rng = _rng(seed, 4)
    models = zoo_models((1, 2))
    jobs = []
    for i in range(100):
        m = models[i % len(models)]
        t = float(rng.uniform(0.3, 3.0))
        p = float(rng.choice([1.5, 2.0, 3.0, 5.0]))
        x, y = _random_pair(rng, m, t)
        jobs.append((m, t, p, x, y))
    reports = parallel_map(lambda j: integrated_harnack(*j), jobs, threads)
    worst = max(abs(r.slack) / r.rhs for r in reports)
    rows = [(f"closed#{i}", r.verdict) for i, r in enumerate(reports)]
    mc_z = []
    for i in range(5):
        m = models[(2 * i) % len(models)]
        x, y = _random_pair(rng, m, 1.0, (0.3, 0.8))
        closed = integrated_harnack(m, 1.0, 3.0, x, y)
        mc = integrated_harnack(m, 1.0, 3.0, x, y, method=MonteCarlo(mc_samples, _stream(seed, 4, i)))
        z = abs(mc.lhs - closed.lhs) / mc.stat_error
        mc_z.append(z)
        rows.append((f"mc#{i}", "pass" if z <= 4 else "fail"))
    ok = worst <= 1e-8 and all(r.verdict == "pass" for r in reports) and max(mc_z) <= 4
    return CriterionResult(4, "integrated Harnack saturation", ok,
                           {"instances": len(reports), "max_rel_slack": worst, "max_mc_z": max(mc_z)}, rows)


def criterion_5(seed: int, threads=None, mc_samples: int = MC_SAMPLES) -> CriterionResult:
    rng = _rng(seed, 5)
    models = zoo_models((1, 2))
    worst = 0.0
    rows = []
    for i in range(20):
        m = models[i % len(models)]
        t = float(rng.uniform(0.3, 3.0))
        r = reverse_poincare(m, t, rng.normal(size=m.n), Linear(rng.normal(size=m.n)))
        rel = abs(r.slack) / max(1.0, r.rhs)
        worst = max(worst, rel)
        rows.append((f"linear#{i}", "pass" if rel <= 1e-10 else "fail"))
    jobs = []
    for i in range(10):
        m = models[i % len(models)]
        f = Logistic(1.5 * rng.normal(size=m.n), float(rng.normal()))
        jobs.append((m, float(rng.uniform(0.5, 2.0)), 0.3 * rng.normal(size=m.n), f, i))
    reports = parallel_map(lambda j: reverse_poincare(
        j[0], j[1], j[2], j[3], method=MonteCarlo(mc_samples, _stream(seed, 5, j[4]))), jobs, threads)
    strict = [r.verdict == "pass" and r.slack > 0 for r in reports]
    rows += [(f"logistic#{i}", "pass" if s else "fail") for i, s in enumerate(strict)]
    min_z = min(r.slack / r.stat_error for r in reports)
    return CriterionResult(5, "reverse Poincare", worst <= 1e-10 and all(strict),
                           {"linear_max_rel_slack": worst, "logistic_strict": sum(strict),
                            "min_slack_over_se": min_z}, rows)


def criterion_6(seed: int, threads=None, mc_samples: int = 200_000) -> CriterionResult:
    rng = _rng(seed, 6)
    jobs = []
    for mi, m in enumerate(zoo_models((1,))):
        t = 1.0
        for fi, kind in enumerate(("logistic", "halfspace", "expLinear")):
            v = rng.normal(size=m.n)
            if kind == "logistic":
                f = Logistic(v, float(rng.normal()), shift=0.05)
            elif kind == "halfspace":
                f = Halfspace(v, float(rng.normal()), shift=0.01)
            else:
                f = ExpLinear(0.3 * v)
            method = MonteCarlo(mc_samples, _stream(seed, 6, 100 * mi + 10 * fi)) if kind == "logistic" \
                else ClosedForm()
            x, y = _random_pair(rng, m, t, (0.2, 1.5))
            for ai, alpha in enumerate((1.5, 2.0, 5.0)):
                mth = MonteCarlo(method.count, _stream(seed, 6, 100 * mi + 10 * fi + ai)) \
                    if kind == "logistic" else method
                jobs.append(("wangHarnack", m, t, alpha, x, y, f, mth))
            jobs.append(("reverseLogSobolev", m, t, None, x, None, f, method))

    def run(job, retry):
        name, m, t, alpha, x, y, f, method = job
        if name == "wangHarnack":
            fn = lambda **kw: wang_harnack(m, t, alpha, x, y, f, **kw)
        else:
            fn = lambda **kw: reverse_log_sobolev(m, t, x, f, **kw)
        return with_retry(fn, method=method) if retry else fn(method=method)

    first = parallel_map(lambda j: run(j, False), jobs, threads)
    final = parallel_map(lambda j: run(j, True), jobs, threads)
    inconclusive = sum(r.verdict == "inconclusive" for r in first)
    fails = sum(r.verdict == "fail" for r in final)
    rows = [(f"{r.inequality_id}#{i}", r.verdict) for i, r in enumerate(final)]
    frac = inconclusive / len(first)
    return CriterionResult(6, "Wang-Harnack and reverse log-Sobolev grid", fails == 0 and frac <= 0.02,
                           {"instances": len(final), "fails": fails, "inconclusive_before_retry": inconclusive},
                           rows)


def criterion_7(seed: int, threads=None) -> CriterionResult:
    rng = _rng(seed, 7)
    models = zoo_models((1, 2))
    jobs = []
    for i in range(500):
        m = models[i % len(models)]
        t = float(rng.uniform(0.2, 3.0))
        x, y = rng.normal(size=m.n), rng.normal(size=m.n)
        jobs.append((m, t, x, y))
    tv = parallel_map(lambda j: total_variation(*j), jobs, threads)
    he = parallel_map(lambda j: hellinger_wasserstein(*j), jobs, threads)
    fails = sum(r.verdict != "pass" for r in tv + he)
    capped = sum(r.lhs > min(r.rhs, 2.0) + 1e-10 for r in tv)
    rows = [(f"tv#{i}", r.verdict) for i, r in enumerate(tv)] + [(f"he#{i}", r.verdict) for i, r in enumerate(he)]
    return CriterionResult(7, "TV and Hellinger bounds", fails == 0 and capped == 0,
                           {"instances": len(jobs), "fails": fails}, rows)


def criterion_8(seed: int, threads=None) -> CriterionResult:
    rows = []
    for zid in default_zoo():
        m = zoo_build(zid).underlying
        for t in (0.5, 1.0, 2.0, 4.0):
            for frac in (0.25, 0.5, 0.75):
                *_, holds = check_g2_bound(m, frac * t, t, tol=1e-9)
                rows.append((f"{zid.label()} t={t:g} s={frac * t:g}", "pass" if holds else "fail"))
    fails = sum(v != "pass" for _, v in rows)
    return CriterionResult(8, "lambda(t) >= lambda_2(t)/t chain", fails == 0,
                           {"instances": len(rows), "fails": fails}, rows)


def criterion_9(seed: int, threads=None) -> CriterionResult:
    rows = []
    for regime, gammas in (("large", (50.0, 100.0, 200.0)), ("small", (0.001, 0.01, 0.1))):
        for g in gammas:
            for ts in asy.T_STAR_GRID:
                r = asy.kfp_lambda_bound(g, ts, regime)
                rows.append((f"{regime} gamma={g:g} t*={ts:g}", r.verdict))
    large = asy.kfp_threshold_scan("large")
    small = asy.kfp_threshold_scan("small")
    fails = sum(v != "pass" for _, v in rows)
    return CriterionResult(9, "kinetic Fokker-Planck regime bounds", fails == 0,
                           {"fails": fails, "gamma_L": large["threshold"], "gamma_s": small["threshold"]}, rows)


def criterion_10_coupled(seed: int, threads=None, corrected: bool = False) -> CriterionResult:
    rows = []
    for j in range(2, 9):
        for t in (1.0, 10.0, 100.0, 1000.0):
            r = asy.coupled_osc_bound(j, t, corrected=corrected)
            rows.append((f"j={j} t={t:g}", r.verdict))
    fails = sum(v != "pass" for _, v in rows)
    title = "coupled oscillator bound" + (" (corrected coefficient)" if corrected else "")
    return CriterionResult(10, title, fails == 0, {"instances": len(rows), "fails": fails}, rows)


def criterion_10_damped(seed: int, threads=None) -> CriterionResult:
    rng = _rng(seed, 10)
    rows = []
    for j in range(3, 9):
        starts = [np.eye(j)[0]] + [v / np.linalg.norm(v) for v in rng.normal(size=(3, j))]
        for i, x0 in enumerate(starts):
            rows.append((f"decay j={j}#{i}", asy.damped_osc_decay(j, 200.0, x0).report.verdict))
        for t in (2.0, 10.0, 100.0):
            rows.append((f"lambda j={j} t={t:g}", asy.damped_osc_lambda_bound(j, t).verdict))
    fails = sum(v != "pass" for _, v in rows)
    return CriterionResult(10, "damped oscillator decay and lambda bound", fails == 0,
                           {"instances": len(rows), "fails": fails}, rows)


def criterion_10(seed: int, threads=None) -> CriterionResult:
    coupled = criterion_10_coupled(seed, threads)
    damped = criterion_10_damped(seed, threads)
    corrected = criterion_10_coupled(seed, threads, corrected=True)
    return CriterionResult(10, "oscillator bounds", coupled.passed and damped.passed,
                           {"coupled_fails": coupled.summary["fails"], "damped_fails": damped.summary["fails"],
                            "corrected_coupled_fails": corrected.summary["fails"]},
                           [("coupled " + a, b) for a, b in coupled.rows] + [("damped " + a, b) for a, b in damped.rows])


def criterion_11(seed: int, threads=None) -> CriterionResult:
    grid = [100, 1000, 10_000, 100_000]
    proxy = growth_condition(kolmogorov_small_time_proxy, POWER2, grid, lambda_source="t^3/12 proxy")
    flat = KroneckerModel(np.zeros((1, 1)), np.ones((1, 1)), POWER2, "flat")
    counter = growth_condition(exact_lambda(flat), POWER2, grid, t_max=1e12)
    exact = growth_condition(exact_lambda(zoo_build(ZooId("kolmogorov"), POWER2)), POWER2, [10, 100, 1000],
                             t_max=1e12)
    ok = proxy.decreasing and abs(proxy.slope + 1 / 3) <= 0.05 and counter.verdict == "fail"
    rows = [(f"proxy k={r.k}", "pass") for r in proxy.records] + [("flat counterexample", counter.verdict)]
    return CriterionResult(11, "scaling study growth condition", ok,
                           {"proxy_slope": proxy.slope, "counterexample": counter.verdict,
                            "counterexample_slope": counter.slope, "exact_lambda_slope": exact.slope}, rows)


def criterion_12(seed: int, threads=None, mc_samples: int = MC_SAMPLES) -> CriterionResult:
    rng = _rng(seed, 12)
    jobs = []
    for zid in default_zoo():
        km = zoo_build(zid, POWER2)
        lam = lambda_min(km, 1.0)
        for k in (1, 2, 4):
            x0 = rng.normal(size=km.j * k)
            # scale so ||X0||_{H_Q}^2 is comparable to lambda_bar(j, 1)
            x0 *= math.sqrt(rng.uniform(0.1, 2.0) * lam / cameron_martin_sq(km, x0))
            for p in (1.5, 2.0, 5.0):
                jobs.append((km, k, 1.0, p, x0))
    reports = parallel_map(lambda j: quasi_invariance_lp(*j), jobs, threads)
    fails = sum(r.verdict != "pass" for r in reports)
    rows = [(f"closed#{i}", r.verdict) for i, r in enumerate(reports)]
    mc_z = []
    for i, zid in enumerate(default_zoo()[:3]):
        km = zoo_build(zid, POWER2)
        x0 = np.zeros(km.j * 2)
        x0[0] = 0.2
        rho = rho_t(lift_kronecker(km, 2), 1.0, x0, np.zeros_like(x0))
        x0 *= 0.5 / rho  # keep the likelihood-ratio moments light-tailed
        closed = quasi_invariance_lp(km, 2, 1.0, 2.0, x0)
        mc = quasi_invariance_lp(km, 2, 1.0, 2.0, x0, MonteCarlo(mc_samples, _stream(seed, 12, i)))
        z = abs(mc.lhs - closed.lhs) / mc.stat_error
        mc_z.append(z)
        rows.append((f"mc#{i}", "pass" if z <= 4 else "fail"))
    return CriterionResult(12, "quasi-invariance L^p bound", fails == 0 and max(mc_z) <= 4,
                           {"instances": len(reports), "fails": fails, "max_mc_z": max(mc_z)}, rows)


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
            6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
            11: criterion_11, 12: criterion_12}


def verdict_table(results) -> list:
    return [(r.number, r.title, name, verdict) for r in results for name, verdict in r.rows] + \
        [(r.number, r.title, "overall", "pass" if r.passed else "fail") for r in results]


def run_acceptance(seed: int = 0, threads=None, include=None) -> list:
    """Run criteria 1-12 (or a subset), then criterion 13 by rerunning and comparing tables."""
    numbers = sorted(include or CRITERIA)
    results = [CRITERIA[n](seed, threads) for n in numbers if n in CRITERIA]
    if include is None or 13 in include:
        results.append(criterion_13(seed, threads, results))
    return results


def criterion_13(seed: int, threads=None, first=None) -> CriterionResult:
    first = first if first is not None else [CRITERIA[n](seed, threads) for n in sorted(CRITERIA)]
    second = [CRITERIA[r.number](seed, threads) for r in first]
    same = verdict_table(first) == verdict_table(second)
    return CriterionResult(13, "determinism of the verdict table", same,
                           {"rows_compared": len(verdict_table(first))}, [("rerun", "pass" if same else "fail")])
