"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Every tolerance is pinned here at its stated value; nothing is calibrated at
run time.  Monte Carlo runs use fixed seeds and replicate budgets chosen so
sampling noise is well below the asserted tolerances, and heavy runs are
shared between criteria that examine the same configuration.

Known honest failures (the assertions are kept at their stated values and
the trend clauses demonstrate convergence; see the detail lines): the
sublinear-window regime converges slowly in several places where absolute
finite-horizon tolerances are asserted -- the uniform local-limit deviation
keeps a k-dependent floor at small k for the two-point offspring law
(criterion 4), the derivative-asymptotics band at psi = t^0.4 is wider than
[0.8, 1.2] even for the closed-form oracle (criterion 5), and the
conditional reduced-process law at t = 300 with window t^0.6 still carries a
~0.15 bias at j = 1 (criteria 7 and 8).
"""

import math
import time
from fractions import Fraction
from functools import cache

import numpy as np
import pytest

from _acceptance_report import record
from bhreduce import limits, renewal, series, stats
from bhreduce import simulate as sim
from bhreduce.models import builtin_model
from bhreduce.rng import Stream
from bhreduce.schedules import parse_schedule
from bhreduce.simulate import EventSpec, SimConfig, run_conditioned

PHI = parse_schedule("pow:0.6")
POLICY = stats.PassPolicy()  # max(3 Wilson half-widths, 0.05)

T1_SEED = 2024
T1_REPLICATES = {150: 3_000_000, 300: 10_000_000, 600: 16_000_000}
T2_SEED = 31337
T2_REPLICATES = 5_000_000


def policy_tolerance(count: int, n: int) -> float:
    return max(POLICY.z_mult * stats.wilson_halfwidth(count, n), POLICY.abs_slack)


@cache
def theorem1_run(t: int) -> sim.ConditionedSample:
    model = builtin_model("bin-lat")
    s_grid = tuple(sorted({t - y * PHI(t) for y in (0.5, 1.0)}))
    config = SimConfig(
        model=model, t=float(t), replicates=T1_REPLICATES[t], seed=T1_SEED,
        event=EventSpec("small-pop", phi=PHI), s_grid=s_grid, x_grid=(),
    )
    return run_conditioned(config).require_nonempty()


@cache
def theorem2_run() -> sim.ConditionedSample:
    model = builtin_model("geo-exp")
    t = 150.0
    config = SimConfig(
        model=model, t=t, replicates=T2_REPLICATES, seed=T2_SEED,
        event=EventSpec("survival"), s_grid=(75.0,), x_grid=(),
    )
    return run_conditioned(config).require_nonempty()


@cache
def yaglom_z_run() -> sim.ConditionedSample:
    config = SimConfig(
        model=builtin_model("bin-lat"), t=500.0, replicates=2_000_000, seed=777,
        event=EventSpec("survival"), want_mrca=False,
    )
    return run_conditioned(config).require_nonempty()


@cache
def yaglom_y_run() -> sim.ConditionedSample:
    config = SimConfig(
        model=builtin_model("geo-det"), t=500.0, replicates=5_500_000, seed=778,
        event=EventSpec("survival"), want_mrca=False, y_process=True,
    )
    return run_conditioned(config).require_nonempty()


def test_criterion_01_exact_engine_oracle(geo_det):
    """pgf_recursion matches the Galton-Watson closed form
    F_n(s) = (n - (n-1)s)/(n+1 - ns) coefficient-wise."""
    start = time.time()
    grid = series.pgf_series_grid(geo_det, range(1, 201), K=64)
    worst = 0.0
    for n in range(1, 201):
        coeffs = grid[n].coeffs
        worst = max(worst, abs(coeffs[0] - n / (n + 1)))
        for k in range(1, 51):
            closed = float(Fraction(n) ** (k - 1) / Fraction(n + 1) ** (k + 1))
            worst = max(worst, abs(coeffs[k] - closed))
    ok = worst <= 1e-12
    record(1, ok, f"max |coeff - closed form| = {worst:.2e} over n<=200, k<=50 "
                  f"(tol 1e-12; {time.time() - start:.1f}s)")
    assert ok


def test_criterion_02_enumeration_oracle(bin_lat):
    """Simulated joint law of (Z(1,t), Z(t)) matches exhaustive enumeration
    within 3 standard errors per cell at 10^6 replicates."""
    start = time.time()
    worst = 0.0
    details = []
    for t in (1, 2, 3):
        joint = sim.enumerate_exact(bin_lat, t, 1.0)
        config = SimConfig(
            model=bin_lat, t=float(t), replicates=10**6, seed=555,
            event=EventSpec("survival"), s_grid=(1.0,), want_mrca=False,
        )
        sample = run_conditioned(config)
        n = sample.n_total
        emp = {(0, 0): n - sample.n_accepted - sample.n_capped}
        for a, z in zip(sample.reduced_counts[:, 0], sample.accepted_z):
            emp[(int(a), int(z))] = emp.get((int(a), int(z)), 0) + 1
        for key, p in joint.items():
            pf = float(p)
            se = math.sqrt(pf * (1 - pf) / n)
            zscore = abs(emp.get(key, 0) / n - pf) / se if se else 0.0
            worst = max(worst, zscore)
        if t == 2:
            red = sim.marginal(joint, 0)
            assert red[1] == Fraction(11, 32)
            assert sim.marginal(joint, 1)[0] == Fraction(33, 64)
            details.append(f"P(Z(1,2)=1)=11/32, P(Z(2)=0)=33/64 exact")
    ok = worst <= 3.0
    record(2, ok, f"worst cell |z| = {worst:.2f} over t in {{1,2,3}} at 1e6 reps "
                  f"(tol 3 SE; {time.time() - start:.0f}s; {'; '.join(details)})")
    assert ok


def test_criterion_03_survival_asymptotics(bin_lat):
    """Q(t) B t in [0.9, 1.1] at t = 4096 with shrinking error over doublings."""
    start = time.time()
    B = bin_lat.constants.B
    curve = series.survival_curve(bin_lat, 4096)
    products = {t: curve[t] * B * t for t in (256, 512, 1024, 2048, 4096)}
    errors = [abs(v - 1.0) for v in products.values()]
    in_band = 0.9 <= products[4096] <= 1.1
    decreasing = all(b < a for a, b in zip(errors, errors[1:]))
    ok = in_band and decreasing
    record(3, ok, f"Q*B*t at 4096 = {products[4096]:.5f} (band [0.9, 1.1]); "
                  f"errors over doublings {['%.4f' % e for e in errors]} "
                  f"({time.time() - start:.1f}s)")
    assert ok


def test_criterion_04_local_limit(bin_lat):
    """sup_k |t^2 e^(k/Bt) P(Z(t)=k) - 1/B^2| <= 0.15/B^2 at t = 2048,
    decreasing over doublings.

    Honest failure of the absolute clause: the supremum is attained at fixed
    small k, where t^2 e^(k/Bt) P(Z(t)=k) converges to k-dependent constants
    (about 0.30/B^2 at k=1, 0.97/B^2 at k=17 for this offspring law) rather
    than to 1/B^2, so the deviation floors near 6.34 instead of vanishing.
    The trend clause holds: the sup decreases monotonically along doublings.
    """
    start = time.time()
    B = bin_lat.constants.B
    errs = series.local_limit_error_grid(bin_lat, [256, 512, 1024, 2048], C=1.0)
    values = [errs[t] for t in (256, 512, 1024, 2048)]
    tol = 0.15 / B**2
    in_tol = values[-1] <= tol
    decreasing = all(b < a for a, b in zip(values, values[1:]))
    ok = in_tol and decreasing
    record(4, ok, f"sup error at 2048 = {values[-1]:.3f} vs tol {tol:.3f} "
                  f"({'PASS' if in_tol else 'FAIL'}), doubling trend "
                  f"{['%.3f' % v for v in values]} "
                  f"({'decreasing' if decreasing else 'not decreasing'}; "
                  f"{time.time() - start:.0f}s)")
    assert ok, (
        "absolute clause unattainable: the deviation at fixed k=1 converges "
        f"to ~6.33, not 0 (measured {values[-1]:.3f} at t=2048); "
        "the doubling trend does decrease"
    )


def test_criterion_05_difference_and_derivative(bin_lat, geo_det):
    """difference_ratio(t, sqrt(t)) and derivative_ratio(t, t^0.4, k) near 1
    at t = 8192 with shrinking error; closed-form oracle matches to 1e-6.

    Honest failure of the derivative band: at psi = t^0.4 = 36.6 the
    first-order correction ~ (1 + c/(B psi))^(k+1) keeps the ratio at
    1.40-2.05 for k = 1..3 (the closed-form oracle itself sits at 1.22 for
    k = 3), outside [0.8, 1.2]; the errors do decrease along doublings and
    the oracle checks pass at 1e-6.
    """
    start = time.time()
    ts = [1024, 2048, 4096, 8192]
    diff = [series.difference_ratio(bin_lat, t, math.sqrt(t)) for t in ts]
    diff_band = 0.8 <= diff[-1] <= 1.2
    diff_err = [abs(r - 1) for r in diff]
    diff_trend = all(b < a for a, b in zip(diff_err, diff_err[1:]))

    deriv_band = True
    deriv_trend = True
    deriv_at_8192 = {}
    for k in (1, 2, 3):
        ratios = [series.derivative_ratio(bin_lat, t, t**0.4, k) for t in ts]
        deriv_at_8192[k] = ratios[-1]
        deriv_band &= 0.8 <= ratios[-1] <= 1.2
        errs = [abs(r - 1) for r in ratios]
        deriv_trend &= all(b < a for a, b in zip(errs, errs[1:]))

    t0, psi = 10**4, 100.0
    dr = series.difference_ratio(geo_det, t0, psi)
    dr_closed = t0 * t0 * (psi - 1) / (psi * (1 + t0) * (psi + t0))
    vr = series.derivative_ratio(geo_det, t0, psi, 2)
    vr_closed = (t0 * (psi + 2) / (psi * (t0 + psi + 2))) ** 3
    oracle_ok = abs(dr - dr_closed) <= 1e-6 and abs(vr - vr_closed) <= 1e-6

    ok = diff_band and diff_trend and deriv_band and deriv_trend and oracle_ok
    record(5, ok, f"difference at 8192 = {diff[-1]:.4f} (band ok={diff_band}), "
                  f"derivative at 8192 = "
                  f"{ {k: round(v, 3) for k, v in deriv_at_8192.items()} } "
                  f"(band ok={deriv_band}), trends ok={diff_trend and deriv_trend}, "
                  f"oracle diffs {abs(dr - dr_closed):.1e}/{abs(vr - vr_closed):.1e} "
                  f"({time.time() - start:.0f}s)")
    assert ok, (
        f"derivative band unattainable at psi = t^0.4: ratios {deriv_at_8192} "
        "(closed-form oracle gives 1.22 at k=3); trends and oracle checks pass"
    )


def test_criterion_06_event_probability(bin_lat, geo_exp):
    """Acceptance rates against the asymptotic predictors."""
    start = time.time()
    sample = theorem1_run(300)
    pred = limits.event_predictor(bin_lat.constants, 300.0,
                                  EventSpec("small-pop", phi=PHI))
    ratio_small = sample.acceptance_rate / pred
    ok_small = 0.5 <= ratio_small <= 2.0

    t2 = theorem2_run()
    band = EventSpec("linear-band", a=1.0)
    _, hi = band.bounds(geo_exp, 150.0)
    n_band = int(np.sum(t2.accepted_z <= hi))
    band_rate = n_band / (t2.n_total - t2.n_capped)
    pred_band = limits.event_predictor(geo_exp.constants, 150.0, band)
    ratio_band = band_rate / pred_band
    ok_band = 0.7 <= ratio_band <= 1.3

    ok = ok_small and ok_band
    record(6, ok, f"small-pop rate ratio = {ratio_small:.3f} (band [0.5, 2.0]) at 1e7; "
                  f"linear-band rate ratio = {ratio_band:.3f} (band [0.7, 1.3]) at 5e6 "
                  f"({time.time() - start:.0f}s)")
    assert ok


def _theorem1_rows():
    rows = []
    for t in (150, 300, 600):
        sample = theorem1_run(t)
        n = sample.n_accepted
        for y in (0.5, 1.0):
            s = t - y * PHI(t)
            col = sample.s_grid.index(s)
            vals = sample.reduced_counts[:, col]
            for j in (1, 2):
                count = int(np.sum(vals == j))
                rows.append({
                    "t": t, "y": y, "j": j, "count": count, "n": n,
                    "empirical": count / n,
                    "limit": limits.theorem1_limit(j, y),
                    "tolerance": policy_tolerance(count, n),
                })
    return rows


def test_criterion_07_theorem1_desk_scale():
    """Conditional reduced-process law against y P(j, 1/y) at t = 300 under
    the max(3 half-widths, 0.05) policy, bias decreasing over t doublings.

    Honest failure of the tolerance clause: at t = 300 the window t^0.6 = 30.6
    is still short, and the empirical conditional law overweights j = 1 by
    ~0.15.  The deviation decreases monotonically along t = 150, 300, 600
    (and further: ~0.069 at t = 1200, ~0.062 at t = 2400 in larger runs),
    exactly as the limit theorem predicts, so the trend clause passes.
    """
    start = time.time()
    assert limits.theorem1_limit(1, 1.0) == pytest.approx(0.63212, abs=5e-6)
    assert limits.theorem1_limit(2, 1.0) == pytest.approx(0.26424, abs=5e-6)
    rows = _theorem1_rows()
    n300 = theorem1_run(300).n_accepted
    n600 = theorem1_run(600).n_accepted
    enough = n300 >= 5000 and n600 >= 5000
    tol_rows = [r for r in rows if r["t"] == 300]
    tol_ok = all(abs(r["empirical"] - r["limit"]) <= r["tolerance"] for r in tol_rows)
    trend = [abs(r["empirical"] - r["limit"])
             for r in rows if r["j"] == 1 and r["y"] == 1.0]
    trend_ok = all(b < a for a, b in zip(trend, trend[1:]))
    ok = enough and tol_ok and trend_ok
    worst = max(tol_rows, key=lambda r: abs(r["empirical"] - r["limit"]))
    record(7, ok, f"t=300 worst dev = {abs(worst['empirical'] - worst['limit']):.3f} "
                  f"at (j={worst['j']}, y={worst['y']}) vs tol {worst['tolerance']:.3f} "
                  f"({'PASS' if tol_ok else 'FAIL'}); (j=1, y=1) deviation over "
                  f"t=150/300/600 = {['%.3f' % d for d in trend]} "
                  f"({'decreasing' if trend_ok else 'not decreasing'}); "
                  f"accepted {n300}/{n600} ({time.time() - start:.0f}s)")
    assert ok, (
        "tolerance clause unattainable at t=300 (finite-horizon bias ~0.15 at "
        f"j=1 vs tol 0.05); deviations decrease along t: {trend}"
    )


def test_criterion_08_corollary1_mrca():
    """MRCA depth law P(d(t) <= y phi(t) | conditioned) vs y(1 - e^(-1/y)).

    Honest failure, same origin as criterion 7: d(t) <= y phi(t) is the
    j = 1 event of the reduced law, so it carries the same ~0.15 bias at
    t = 300; the deviation shrinks along the t grid.
    """
    start = time.time()
    rows = []
    for t in (150, 300, 600):
        sample = theorem1_run(t)
        n = sample.n_accepted
        for y in (0.5, 1.0):
            count = int(np.sum(sample.d_values <= y * PHI(t)))
            rows.append({
                "t": t, "y": y, "empirical": count / n,
                "limit": limits.corollary1_mrca(y),
                "tolerance": policy_tolerance(count, n),
            })
    tol_rows = [r for r in rows if r["t"] == 300]
    tol_ok = all(abs(r["empirical"] - r["limit"]) <= r["tolerance"] for r in tol_rows)
    trend = [abs(r["empirical"] - r["limit"]) for r in rows if r["y"] == 1.0]
    trend_ok = all(b < a for a, b in zip(trend, trend[1:]))
    ok = tol_ok and trend_ok
    worst = max(tol_rows, key=lambda r: abs(r["empirical"] - r["limit"]))
    record(8, ok, f"t=300 worst dev = {abs(worst['empirical'] - worst['limit']):.3f} "
                  f"at y={worst['y']} vs tol {worst['tolerance']:.3f} "
                  f"({'PASS' if tol_ok else 'FAIL'}); y=1 deviations over t "
                  f"{['%.3f' % d for d in trend]} "
                  f"({'decreasing' if trend_ok else 'not decreasing'}; "
                  f"{time.time() - start:.0f}s)")
    assert ok, (
        "tolerance clause unattainable at t=300 (same finite-horizon bias as "
        f"the j=1 reduced law); deviations decrease along t: {trend}"
    )


def test_criterion_09_theorem2_desk_scale(geo_exp):
    """Linear-window conditional law, MRCA law and the intermediate
    reduced-process limit at t = 150 under the standard policy."""
    start = time.time()
    assert limits.theorem2_limit(1, 0.5, 1.0) == pytest.approx(0.68394, abs=5e-6)
    sample = theorem2_run()
    t, x, a = 150.0, 0.5, 1.0
    _, hi = EventSpec("linear-band", a=a).bounds(geo_exp, t)
    in_band = sample.accepted_z <= hi
    n_band = int(np.sum(in_band))
    n_surv = sample.n_accepted
    vals = sample.reduced_counts[:, 0]
    devs = {}
    ok = True
    for j in (1, 2, 3):
        count = int(np.sum(in_band & (vals == j)))
        dev = abs(count / n_band - limits.theorem2_limit(j, x, a))
        ok &= dev <= policy_tolerance(count, n_band)
        devs[f"T2 j={j}"] = dev
    d_count = int(np.sum(in_band & (sample.d_values <= x * t)))
    dev = abs(d_count / n_band - limits.corollary2_mrca(x, a))
    ok &= dev <= policy_tolerance(d_count, n_band)
    devs["C2"] = dev
    for j in (1, 2, 3):
        count = int(np.sum(vals == j))
        dev = abs(count / n_surv - limits.intermediate_reduced_limit(j, x))
        ok &= dev <= policy_tolerance(count, n_surv)
        devs[f"INT j={j}"] = dev
    record(9, ok, f"deviations {({k: round(v, 4) for k, v in devs.items()})} "
                  f"all within max(3 half-widths, 0.05); band n = {n_band} "
                  f"({time.time() - start:.0f}s)")
    assert ok


def test_criterion_10_yaglom(bin_lat, geo_det):
    """Scaled population sizes conditioned on survival pass the exponential
    KS test at the stated thresholds."""
    start = time.time()
    z_run = yaglom_z_run()
    ks_z = stats.ks_exponential(z_run.accepted_z / (bin_lat.constants.B * 500.0))
    y_run = yaglom_y_run()
    ks_y = stats.ks_exponential(y_run.accepted_z / (geo_det.constants.B * 500.0))
    enough = z_run.n_accepted >= 10**4 and y_run.n_accepted >= 10**4
    ok = enough and ks_z < 0.05 and ks_y < 0.05
    record(10, ok, f"KS(Z/(Bt)) = {ks_z:.4f} at n={z_run.n_accepted}, "
                   f"KS(Y/(Bt)) = {ks_y:.4f} at n={y_run.n_accepted} "
                   f"(threshold 0.05; {time.time() - start:.0f}s)")
    assert ok


def test_criterion_11_structural_invariants(bin_lat, geo_exp, geo_det):
    """10^5 random genealogies: reduced counts monotone, ancestry equivalence,
    boundary identity, pathwise survivor decomposition, and bit-identical
    results under different worker counts."""
    start = time.time()
    violations = 0
    checked = 0
    plans = [
        (bin_lat, 24.0, (0.0, 6.0, 12.0, 18.0, 24.0), (1.0, 2.5), 34000),
        (geo_exp, 12.0, (0.0, 3.0, 6.0, 9.0, 12.0), (0.8, 1.7), 33000),
        (geo_det, 20.0, (0.0, 5.0, 10.0, 15.0, 20.0), (1.0, 3.0), 33000),
    ]
    for model, t, s_grid, x_grid, n_trees in plans:
        t_ext = t + max(x_grid)
        for rep in range(n_trees):
            gen = sim.simulate_tree(model, t_ext, Stream.from_seed(1100, rep))
            obs = sim.observables(gen, t, s_grid=s_grid, x_grid=x_grid)
            counts = [obs.Z_reduced[s] for s in s_grid]
            if not all(b >= a for a, b in zip(counts, counts[1:])):
                violations += 1
            if (counts[0] >= 1) != (obs.Z_t >= 1):
                violations += 1
            if obs.Z_reduced[t] != obs.Z_t:
                violations += 1
            for x in x_grid:
                if obs.Z_star[x] != obs.Z_plus[x] - obs.Z_tilde_plus[x]:
                    violations += 1
            checked += 1

    phi = parse_schedule("pow:0.7")
    mk = lambda jobs: SimConfig(
        model=bin_lat, t=60.0, replicates=30000, seed=4321,
        event=EventSpec("small-pop", phi=phi), s_grid=(40.0,), x_grid=(1.0,),
        jobs=jobs, chunk_size=8000,
    )
    a, b = run_conditioned(mk(1)), run_conditioned(mk(2))
    deterministic = (
        np.array_equal(a.accepted_replicates, b.accepted_replicates)
        and np.array_equal(a.z_counts, b.z_counts)
        and np.array_equal(a.d_values, b.d_values)
        and np.array_equal(a.reduced_counts, b.reduced_counts)
    )
    ok = violations == 0 and checked == 10**5 and deterministic
    record(11, ok, f"{checked} trees, {violations} violations; "
                   f"parallel determinism = {deterministic} "
                   f"({time.time() - start:.0f}s)")
    assert ok


def test_criterion_12_limit_law_identities():
    """Normalization and reduction identities of the limit laws."""
    start = time.time()
    ok = True
    for y in (0.25, 1.0, 4.0):
        total = sum(limits.theorem1_limit(j, y) for j in range(1, 401))
        ok &= abs(total - 1.0) <= 1e-10
    for x in (0.3, 0.5, 0.7):
        for a in (0.5, 1.0, 2.0):
            total = sum(limits.theorem2_limit(j, x, a) for j in range(1, 401))
            ok &= abs(total - 1.0) <= 1e-10
    for y in np.linspace(0.1, 10.0, 34):
        ok &= abs(limits.theorem1_limit(1, y) - limits.corollary1_mrca(y)) <= 1e-12
    for x in np.linspace(0.05, 0.95, 19):
        for a in (0.5, 1.0, 2.0):
            ok &= abs(
                limits.theorem2_limit(1, 1.0 - x, a) - limits.corollary2_mrca(x, a)
            ) <= 1e-12
    record(12, ok, f"normalization at 1e-10 and reductions at 1e-12 over the "
                   f"parameter grids ({time.time() - start:.1f}s)")
    assert ok


def test_criterion_13_renewal_identity(bin_lat):
    """A(t, t) = 1 to 1e-10 up to t = 500; U(t) mu / t in [0.98, 1.02] at 1000."""
    start = time.time()
    table = renewal.renewal_function(bin_lat.lifetime, 1000)
    worst = max(
        abs(renewal.expected_young(bin_lat, t, t, table) - 1.0)
        for t in range(1, 501)
    )
    growth = table.U[1000] * bin_lat.lifetime.mean / 1000.0
    ok = worst <= 1e-10 and 0.98 <= growth <= 1.02
    record(13, ok, f"max |A(t,t) - 1| = {worst:.2e} for t <= 500; "
                   f"U(1000) mu/1000 = {growth:.4f} ({time.time() - start:.1f}s)")
    assert ok
