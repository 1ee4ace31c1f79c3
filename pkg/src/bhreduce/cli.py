"""Declarative experiment runner.

Subcommands bind models, schedules, the exact engine, the simulator and the
limit evaluators into reproducible runs: identical arguments and seed produce
byte-identical JSON summaries, independent of --jobs.  Exit codes: 0 pass,
1 usage/config error, 2 statistical fail, 3 insufficient sample.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import limits, renewal, series, stats
from . import simulate as sim
from .models import Model, ModelError, builtin_model, load_model
from .schedules import ScheduleError, parse_schedule

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_STAT_FAIL = 2
EXIT_INSUFFICIENT = 3

_BUILTINS = ("bin-lat", "geo-exp", "geo-det")


class Refusal(RuntimeError):
    """A verify command was pointed at a model violating the hypotheses."""


def _load_model_arg(text: str) -> Model:
    if text in _BUILTINS:
        return builtin_model(text)
    return load_model(text)


def _parse_floats(text: str) -> List[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _parse_ints(text: str) -> List[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _seed_arg(value: Optional[int]) -> int:
    if value is not None:
        return value
    env = os.environ.get("BH_SEED")
    if env is None:
        raise SystemExit("no --seed given and BH_SEED is not set")
    return int(env)


def _jsonify(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, float) and math.isnan(obj):
        return None
    return obj


def _emit_json(doc: Dict, path: Optional[str]) -> None:
    text = json.dumps(_jsonify(doc), indent=2, sort_keys=True) + "\n"
    if path:
        out = Path(path)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _emit_csv(rows: Sequence[Dict], header: Sequence[str], path: Optional[str]) -> None:
    def write(fh):
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([row[h] for h in header])

    if path:
        out = Path(path)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", newline="", encoding="utf-8") as fh:
            write(fh)
    else:
        write(sys.stdout)


def _require_lattice_theorem1(model: Model) -> None:
    if not model.lifetime.is_lattice:
        raise Refusal(
            "theorem-1 verification needs a non-degenerate span-1 lattice "
            f"lifetime; model has {model.lifetime.kind!r}"
        )
    if model.lifetime.degenerate or model.oracle_mode:
        raise Refusal(
            "theorem-1 verification refuses degenerate (oracle-mode) lifetimes: "
            "the lattice law must have at least two support atoms"
        )


def _require_nonlattice_theorem2(model: Model) -> None:
    if model.lifetime.is_lattice:
        raise Refusal(
            "theorem-2 verification needs a non-lattice lifetime distribution; "
            f"model is lattice{' (oracle mode)' if model.oracle_mode else ''}"
        )


# ---------------------------------------------------------------------------
# Subcommands


def cmd_exact(args) -> int:
    model = _load_model_arg(args.model)
    t = int(args.t)
    ser = series.pgf_recursion(model, t, K=args.K)
    k_max = args.k_max if args.k_max is not None else ser.K
    rows = [
        {"t": t, "k": k, "prob": repr(float(ser.coeffs[k])), "tail_mass": repr(ser.tail_mass)}
        for k in range(0, min(k_max, ser.K) + 1)
    ]
    _emit_csv(rows, ["t", "k", "prob", "tail_mass"], args.out)
    return EXIT_OK


def cmd_limits(args) -> int:
    rows: List[Dict] = []
    th = args.theorem
    if th == "1":
        for y in _parse_floats(args.y):
            for j in _parse_ints(args.j):
                rows.append({"theorem": "1", "j": j, "y": y, "x": "", "a": "",
                             "value": repr(limits.theorem1_limit(j, y))})
    elif th == "2":
        for x in _parse_floats(args.x):
            for a in _parse_floats(args.a):
                for j in _parse_ints(args.j):
                    rows.append({"theorem": "2", "j": j, "y": "", "x": x, "a": a,
                                 "value": repr(limits.theorem2_limit(j, x, a))})
    elif th == "c1":
        for y in _parse_floats(args.y):
            rows.append({"theorem": "c1", "j": "", "y": y, "x": "", "a": "",
                         "value": repr(limits.corollary1_mrca(y))})
    elif th == "c2":
        for x in _parse_floats(args.x):
            for a in _parse_floats(args.a):
                rows.append({"theorem": "c2", "j": "", "y": "", "x": x, "a": a,
                             "value": repr(limits.corollary2_mrca(x, a))})
    elif th == "yaglom":
        for lam in _parse_floats(args.lam):
            rows.append({"theorem": "yaglom", "j": "", "y": lam, "x": "", "a": "",
                         "value": repr(limits.yaglom_laplace(lam))})
    elif th == "intermediate":
        for x in _parse_floats(args.x):
            for j in _parse_ints(args.j):
                rows.append({"theorem": "intermediate", "j": j, "y": "", "x": x, "a": "",
                             "value": repr(limits.intermediate_reduced_limit(j, x))})
    else:  # pragma: no cover - argparse restricts choices
        raise SystemExit(f"unknown theorem {th!r}")
    for row in rows:
        print(f"{row['theorem']} j={row['j']} y={row['y']} x={row['x']} a={row['a']}"
              f" -> {row['value']}")
    if args.out:
        _emit_csv(rows, ["theorem", "j", "y", "x", "a", "value"], args.out)
    return EXIT_OK


def _event_from_args(args) -> sim.EventSpec:
    if args.event == "survival":
        return sim.EventSpec("survival")
    if args.event == "small-pop":
        if not args.phi:
            raise SystemExit("--event small-pop needs --phi")
        return sim.EventSpec("small-pop", phi=parse_schedule(args.phi))
    if args.event == "linear-band":
        if args.a is None:
            raise SystemExit("--event linear-band needs --a")
        return sim.EventSpec("linear-band", a=args.a)
    raise SystemExit(f"unknown event {args.event!r}")


def cmd_simulate(args) -> int:
    model = _load_model_arg(args.model)
    seed = _seed_arg(args.seed)
    event = _event_from_args(args)
    s_grid = tuple(_parse_floats(args.s_grid)) if args.s_grid else ()
    x_grid = tuple(_parse_floats(args.x_grid)) if args.x_grid else ()
    config = sim.SimConfig(
        model=model, t=args.t, replicates=args.replicates, seed=seed,
        event=event, s_grid=s_grid, x_grid=x_grid, cap=args.cap,
        y_process=args.y_process, jobs=args.jobs,
    )
    sample = sim.run_conditioned(config)
    z_hist = {int(k): int(c) for k, c in enumerate(sample.z_counts) if c}
    acc_hist = np.bincount(sample.accepted_z) if sample.n_accepted else np.zeros(0, np.int64)
    doc = {
        "config": sample.config_echo,
        "n_total": sample.n_total,
        "n_capped": sample.n_capped,
        "n_accepted": sample.n_accepted,
        "acceptance_rate": sample.acceptance_rate,
        "wilson_ci": list(sample.wilson),
        "histograms": {
            "z_all": z_hist,
            "z_accepted": {int(k): int(c) for k, c in enumerate(acc_hist) if c},
        },
    }
    _emit_json(doc, args.out)
    if args.csv:
        header = ["replicate", "Z_t", "d_t"] + [f"Z_s_t@{s:g}" for s in s_grid]
        rows = []
        for i in range(sample.n_accepted):
            row = {
                "replicate": int(sample.accepted_replicates[i]),
                "Z_t": int(sample.accepted_z[i]),
                "d_t": "" if sample.d_values is None or math.isnan(sample.d_values[i])
                else repr(float(sample.d_values[i])),
            }
            for jdx, s in enumerate(s_grid):
                row[f"Z_s_t@{s:g}"] = int(sample.reduced_counts[i, jdx])
            rows.append(row)
        _emit_csv(rows, header, args.csv)
    return EXIT_OK


def _policy_rows_pass(rows: Sequence[Dict]) -> bool:
    return all(r["ok"] for r in rows)


def cmd_verify_theorem1(args) -> int:
    model = _load_model_arg(args.model)
    _require_lattice_theorem1(model)
    phi = parse_schedule(args.phi)
    if not phi.sublinear:
        raise SystemExit("theorem 1 needs a sublinear window: use pow:g (g<1) or const:c")
    seed = _seed_arg(args.seed)
    t = float(args.t)
    ys = _parse_floats(args.y)
    js = _parse_ints(args.j)
    s_by_y = {y: t - y * phi(t) for y in ys}
    if any(s <= 0 for s in s_by_y.values()):
        raise SystemExit("y*phi(t) must be < t")
    config = sim.SimConfig(
        model=model, t=t, replicates=args.replicates, seed=seed,
        event=sim.EventSpec("small-pop", phi=phi),
        s_grid=tuple(sorted(set(s_by_y.values()))), x_grid=(), jobs=args.jobs,
    )
    sample = sim.run_conditioned(config)
    doc: Dict = {
        "config": sample.config_echo,
        "n_accepted": sample.n_accepted,
        "acceptance_rate": sample.acceptance_rate,
        "min_accepted": args.min_accepted,
    }
    if sample.n_accepted < args.min_accepted:
        doc["status"] = "insufficient-sample"
        _emit_json(doc, args.out)
        return EXIT_INSUFFICIENT
    policy = stats.PassPolicy()
    n = sample.n_accepted
    rows = []
    aggregates = {}
    for y in ys:
        col = sample.s_grid.index(s_by_y[y])
        vals = sample.reduced_counts[:, col]
        for j in js:
            count = int(np.sum(vals == j))
            target = limits.theorem1_limit(j, y)
            row = _comparison_row({"j": j, "y": y}, count, n, target, policy)
            rows.append(row)
        d_count = int(np.sum(sample.d_values <= y * phi(t)))
        target = limits.corollary1_mrca(y)
        row = _comparison_row({"corollary": 1, "y": y}, d_count, n, target, policy)
        rows.append(row)
        aggregates[f"y={y:g}"] = _aggregate_pmf(vals, {
            j: limits.theorem1_limit(j, y) for j in js
        }, policy)
    doc["rows"] = rows
    doc["aggregate"] = aggregates
    doc["status"] = "pass" if _policy_rows_pass(rows) else "fail"
    _emit_json(doc, args.out)
    return EXIT_OK if doc["status"] == "pass" else EXIT_STAT_FAIL


def _aggregate_pmf(values: np.ndarray, analytic: Dict, policy: stats.PassPolicy) -> Dict:
    """compare_pmf summary (pooled chi-square, total variation) of observed
    cell counts over `values` against analytic cell probabilities."""
    counts = {j: int(np.sum(values == j)) for j in analytic}
    counts["other"] = int(len(values) - sum(counts.values()))
    emp = stats.EmpiricalDist.from_counts(counts)
    report = stats.compare_pmf(emp, dict(analytic), policy)
    return {
        "chi2": report.chi2,
        "dof": report.dof,
        "chi2_pvalue": report.chi2_pvalue,
        "tv_distance": report.tv_distance,
    }


def _comparison_row(label: Dict, count: int, n: int, target: float,
                    policy: stats.PassPolicy) -> Dict:
    emp = count / n
    lo, hi = stats.wilson_interval(count, n, policy.confidence)
    tol = max(policy.z_mult * (hi - lo) / 2.0, policy.abs_slack)
    row = dict(label)
    row.update(
        count=count, n=n, empirical=emp, target=target,
        wilson=[lo, hi], tolerance=tol, deviation=emp - target,
        ok=bool(abs(emp - target) <= tol),
    )
    return row


def cmd_verify_theorem2(args) -> int:
    model = _load_model_arg(args.model)
    _require_nonlattice_theorem2(model)
    seed = _seed_arg(args.seed)
    t = float(args.t)
    a = args.a
    xs = _parse_floats(args.x)
    js = _parse_ints(args.j)
    band = sim.EventSpec("linear-band", a=a)
    lo_band, hi_band = band.bounds(model, t)
    # condition on survival and post-filter: identical trees, and the survivor
    # set also yields the section-4 intermediate ratios for free
    config = sim.SimConfig(
        model=model, t=t, replicates=args.replicates, seed=seed,
        event=sim.EventSpec("survival"),
        s_grid=tuple(sorted({x * t for x in xs})), x_grid=(), jobs=args.jobs,
    )
    sample = sim.run_conditioned(config)
    n_surv = sample.n_accepted
    doc: Dict = {
        "config": sample.config_echo,
        "band": band.describe(model, t),
        "n_survivors": n_surv,
        "min_accepted": args.min_accepted,
    }
    in_band = sample.accepted_z <= hi_band if n_surv else np.zeros(0, bool)
    n_band = int(np.sum(in_band))
    doc["n_in_band"] = n_band
    if n_band < args.min_accepted:
        doc["status"] = "insufficient-sample"
        _emit_json(doc, args.out)
        return EXIT_INSUFFICIENT
    policy = stats.PassPolicy()
    rows = []
    aggregates = {}
    for x in xs:
        col = sample.s_grid.index(x * t)
        vals = sample.reduced_counts[:, col]
        for j in js:
            count = int(np.sum(in_band & (vals == j)))
            target = limits.theorem2_limit(j, x, a)
            rows.append(_comparison_row({"j": j, "x": x, "a": a}, count, n_band, target, policy))
        d_count = int(np.sum(in_band & (sample.d_values <= x * t)))
        rows.append(_comparison_row(
            {"corollary": 2, "x": x, "a": a},
            d_count, n_band, limits.corollary2_mrca(x, a), policy,
        ))
        for j in js:
            count = int(np.sum(vals == j))
            target = limits.intermediate_reduced_limit(j, x)
            rows.append(_comparison_row(
                {"intermediate": True, "j": j, "x": x}, count, n_surv, target, policy,
            ))
        aggregates[f"x={x:g}"] = _aggregate_pmf(vals[in_band], {
            j: limits.theorem2_limit(j, x, a) for j in js
        }, policy)
    doc["rows"] = rows
    doc["aggregate"] = aggregates
    doc["status"] = "pass" if _policy_rows_pass(rows) else "fail"
    _emit_json(doc, args.out)
    return EXIT_OK if doc["status"] == "pass" else EXIT_STAT_FAIL


def cmd_verify_yaglom(args) -> int:
    model = _load_model_arg(args.model)
    seed = _seed_arg(args.seed)
    t = float(args.t)
    config = sim.SimConfig(
        model=model, t=t, replicates=args.replicates, seed=seed,
        event=sim.EventSpec("survival"), want_mrca=False,
        y_process=(args.process == "y"), jobs=args.jobs,
    )
    sample = sim.run_conditioned(config)
    doc: Dict = {"config": sample.config_echo, "n_accepted": sample.n_accepted,
                 "min_accepted": args.min_accepted}
    if sample.n_accepted < args.min_accepted:
        doc["status"] = "insufficient-sample"
        _emit_json(doc, args.out)
        return EXIT_INSUFFICIENT
    scaled = sample.accepted_z / (model.constants.B * t)
    ks = stats.ks_exponential(scaled)
    doc["ks_statistic"] = ks
    doc["ks_threshold"] = args.ks_threshold
    doc["status"] = "pass" if ks < args.ks_threshold else "fail"
    _emit_json(doc, args.out)
    return EXIT_OK if doc["status"] == "pass" else EXIT_STAT_FAIL


def cmd_check_conditions(args) -> int:
    """Itemized hypothesis report for the theorem applicable to the model:
    sublinear-window hypotheses for lattice lifetimes (criticality, span-1
    non-degeneracy, the extra moments, the window tail condition), linear-window
    hypotheses (criticality, non-lattice, vanishing t^2 tail) otherwise."""
    model = _load_model_arg(args.model)
    t_grid = _parse_ints(args.t_grid)
    off = model.offspring
    life = model.lifetime
    items = [
        {
            "condition": "critical-mean",
            "value": off.mean,
            "ok": bool(abs(off.mean - 1.0) <= 1e-9),
        },
        {
            "condition": "positive-finite-variance",
            "value": off.variance,
            "ok": bool(0.0 < off.variance < math.inf),
        },
        {
            "condition": "offspring-xi2log-moment-finite",
            "value": off.second_log_moment,
            "ok": bool(math.isfinite(off.second_log_moment)),
        },
        {
            "condition": "lifetime-third-moment-finite",
            "value": life.third_moment,
            "ok": bool(math.isfinite(life.third_moment)),
        },
    ]
    doc: Dict = {"model": model.name or args.model}
    if life.is_lattice:
        doc["applicable"] = "theorem-1 (sublinear window)"
        items.append({
            "condition": "lattice-span1-nondegenerate",
            "value": life.kind + (":degenerate" if life.degenerate else ""),
            "ok": bool(not life.degenerate),
        })
        if args.phi:
            phi = parse_schedule(args.phi)
            try:
                tail = renewal.check_tail_condition(model, phi, t_grid)
                doc["tail2"] = tail
                items.append({"condition": "tail2-vanishes", "value": str(phi),
                              "ok": bool(tail["ok"])})
            except ScheduleError as exc:
                doc["tail2"] = {"error": str(exc)}
                items.append({"condition": "tail2-vanishes", "value": str(phi),
                              "ok": False})
    else:
        doc["applicable"] = "theorem-2 (linear window)"
        t2tail = [t * t * life.sf(float(t)) for t in t_grid]
        items.append({
            "condition": "t2-lifetime-tail-vanishes",
            "value": t2tail,
            "ok": bool(t2tail and (t2tail[-1] < min(t2tail[0], 1e-3) or t2tail[-1] == 0.0)),
        })
    doc["items"] = items
    doc["all_ok"] = all(i["ok"] for i in items)
    _emit_json(doc, args.out)
    return EXIT_OK


def cmd_renewal(args) -> int:
    """Renewal table (CSV n,u,U) or the survivor-negligibility bound against
    the small-population predictor (CSV t,bound,predictor,ratio)."""
    model = _load_model_arg(args.model)
    if args.neglig:
        phi = parse_schedule(args.phi)
        t_grid = _parse_ints(args.t_grid)
        rows = []
        for t in t_grid:
            bound = renewal.neglig_bound(model, t, args.epsilon, phi)
            pred = limits.event_predictor(
                model.constants, float(t), sim.EventSpec("small-pop", phi=phi)
            )
            rows.append({
                "t": t, "bound": repr(bound), "predictor": repr(pred),
                "ratio": repr(bound / pred),
            })
        _emit_csv(rows, ["t", "bound", "predictor", "ratio"], args.out)
        return EXIT_OK
    table = renewal.renewal_function(model.lifetime, args.t_max)
    rows = [
        {"n": n, "u": repr(float(table.u[n])), "U": repr(float(table.U[n]))}
        for n in range(args.t_max + 1)
    ]
    _emit_csv(rows, ["n", "u", "U"], args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    model = _load_model_arg(args.model)
    t_grid = _parse_ints(args.t_grid)
    rows: List[Dict] = []
    entries = []
    vanishing = False
    quantity = args.quantity
    if quantity == "survival":
        curve = series.survival_curve(model, max(t_grid))
        for t in t_grid:
            value = float(curve[t])
            pred = limits.survival_predictor(model.constants, t)
            entries.append((t, value, pred))
    elif quantity == "event-rate":
        seed = _seed_arg(args.seed)
        event = _event_from_args(args)
        for t in t_grid:
            config = sim.SimConfig(
                model=model, t=float(t), replicates=args.replicates, seed=seed,
                event=event, want_mrca=False, jobs=args.jobs,
            )
            sample = sim.run_conditioned(config)
            pred = limits.event_predictor(model.constants, float(t), event)
            entries.append((t, sample.acceptance_rate, pred))
    elif quantity == "difference":
        psi = parse_schedule(args.psi)
        for t in t_grid:
            entries.append((t, series.difference_ratio(model, t, psi(t)), 1.0))
    elif quantity == "derivative":
        psi = parse_schedule(args.psi)
        for t in t_grid:
            entries.append((t, series.derivative_ratio(model, t, psi(t), args.k), 1.0))
    elif quantity == "local-limit":
        vanishing = True
        errs = series.local_limit_error_grid(model, t_grid, C=args.C)
        for t in t_grid:
            entries.append((t, errs[t], math.nan))
    elif quantity == "neglig":
        vanishing = True
        phi = parse_schedule(args.phi)
        for t in t_grid:
            bound = renewal.neglig_bound(model, t, args.epsilon, phi)
            pred = limits.event_predictor(
                model.constants, float(t), sim.EventSpec("small-pop", phi=phi)
            )
            entries.append((t, bound / pred, math.nan))
    elif quantity == "residual":
        vanishing = True
        seed = _seed_arg(args.seed)
        phi = parse_schedule(args.phi)
        for t in t_grid:
            val = sim.residual_event_rate(
                model, float(t), args.y_offset, args.epsilon, phi,
                args.replicates, seed,
            )
            entries.append((t, val, math.nan))
    elif quantity == "star":
        vanishing = True
        seed = _seed_arg(args.seed)
        for t in t_grid:
            val = sim.star_survival_ratio(model, float(t), args.epsilon,
                                          args.replicates, seed)
            entries.append((t, val, math.nan))
    else:  # pragma: no cover
        raise SystemExit(f"unknown quantity {quantity!r}")

    if vanishing:
        values = [e[1] for e in entries]
        tail = values[-min(3, len(values)):]
        ok = all(b <= a + 1e-15 for a, b in zip(tail, tail[1:])) and (
            values[-1] <= values[0] or values[-1] == 0.0
        )
        for t, v, _ in entries:
            rows.append({"t": t, "quantity": quantity, "value": repr(float(v)),
                         "predicted": repr(0.0), "ratio": ""})
    else:
        sweep = stats.convergence_sweep(entries)
        ok = sweep.converged
        for t, v, p, r in zip(sweep.t, sweep.value, sweep.predicted, sweep.ratio):
            rows.append({"t": int(t), "quantity": quantity, "value": repr(float(v)),
                         "predicted": repr(float(p)), "ratio": repr(float(r))})
    _emit_csv(rows, ["t", "quantity", "value", "predicted", "ratio"], args.out)
    return EXIT_OK if ok else EXIT_STAT_FAIL


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="bhreduce",
        description="Critical Bellman-Harris reduced-process experiments",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(q, seed_required=False):
        q.add_argument("--model", required=True,
                       help=f"model JSON path or one of {', '.join(_BUILTINS)}")
        q.add_argument("--out", default=None, help="output file (default stdout)")

    q = sub.add_parser("exact", help="population-size pmf via the series engine")
    add_common(q)
    q.add_argument("--t", type=int, required=True)
    q.add_argument("--K", type=int, default=None, help="truncation order")
    q.add_argument("--k-max", type=int, default=None, help="largest k to emit")
    q.set_defaults(func=cmd_exact)

    q = sub.add_parser("limits", help="evaluate the closed-form limit laws")
    q.add_argument("--theorem", required=True,
                   choices=["1", "2", "c1", "c2", "yaglom", "intermediate"])
    q.add_argument("--j", default="1,2,3")
    q.add_argument("--y", default="0.5,1")
    q.add_argument("--x", default="0.5")
    q.add_argument("--a", default="1")
    q.add_argument("--lam", "--lambda", dest="lam", default="0.5,1,2")
    q.add_argument("--out", default=None)
    q.set_defaults(func=cmd_limits)

    q = sub.add_parser("simulate", help="rejection-conditioned genealogy run")
    add_common(q)
    q.add_argument("--t", type=float, required=True)
    q.add_argument("--replicates", type=int, required=True)
    q.add_argument("--seed", type=int, default=None)
    q.add_argument("--event", default="survival",
                   choices=["survival", "small-pop", "linear-band"])
    q.add_argument("--phi", default=None, help='window schedule, e.g. "pow:0.6"')
    q.add_argument("--a", type=float, default=None, help="linear-band slope")
    q.add_argument("--s-grid", default=None, help="comma list of reduced-count times")
    q.add_argument("--x-grid", default=None, help="comma list of look-ahead offsets")
    q.add_argument("--cap", type=int, default=sim.DEFAULT_CAP)
    q.add_argument("--y-process", action="store_true",
                   help="start from an offspring-distributed particle count")
    q.add_argument("--jobs", type=int, default=1)
    q.add_argument("--csv", default=None, help="per-acceptance CSV path")
    q.set_defaults(func=cmd_simulate)

    q = sub.add_parser("verify-theorem1", help="sublinear-window reduced law")
    add_common(q)
    q.add_argument("--t", type=float, required=True)
    q.add_argument("--phi", default="pow:0.6")
    q.add_argument("--y", default="0.5,1")
    q.add_argument("--j", default="1,2")
    q.add_argument("--replicates", type=int, required=True)
    q.add_argument("--seed", type=int, default=None)
    q.add_argument("--min-accepted", type=int, default=1000)
    q.add_argument("--jobs", type=int, default=1)
    q.set_defaults(func=cmd_verify_theorem1)

    q = sub.add_parser("verify-theorem2", help="linear-window reduced law")
    add_common(q)
    q.add_argument("--t", type=float, required=True)
    q.add_argument("--a", type=float, default=1.0)
    q.add_argument("--x", default="0.5")
    q.add_argument("--j", default="1,2,3")
    q.add_argument("--replicates", type=int, required=True)
    q.add_argument("--seed", type=int, default=None)
    q.add_argument("--min-accepted", type=int, default=1000)
    q.add_argument("--jobs", type=int, default=1)
    q.set_defaults(func=cmd_verify_theorem2)

    q = sub.add_parser("verify-yaglom", help="exponential limit of Z(t)/(Bt) or Y(t)/(Bt)")
    add_common(q)
    q.add_argument("--t", type=float, required=True)
    q.add_argument("--replicates", type=int, required=True)
    q.add_argument("--seed", type=int, default=None)
    q.add_argument("--process", choices=["z", "y"], default="z")
    q.add_argument("--ks-threshold", type=float, default=0.05)
    q.add_argument("--min-accepted", type=int, default=10000)
    q.add_argument("--jobs", type=int, default=1)
    q.set_defaults(func=cmd_verify_yaglom)

    q = sub.add_parser("check-conditions", help="itemized hypothesis report")
    add_common(q)
    q.add_argument("--phi", default=None)
    q.add_argument("--t-grid", default="50,100,200,400")
    q.set_defaults(func=cmd_check_conditions)

    q = sub.add_parser("renewal", help="renewal table or survivor-negligibility bound")
    add_common(q)
    q.add_argument("--t-max", type=int, default=100)
    q.add_argument("--neglig", action="store_true",
                   help="emit the bound/predictor table instead of u, U")
    q.add_argument("--phi", default="pow:0.6")
    q.add_argument("--epsilon", type=float, default=0.5)
    q.add_argument("--t-grid", default="50,100,200,400")
    q.set_defaults(func=cmd_renewal)

    q = sub.add_parser("sweep", help="convergence trend of a diagnostic over t")
    add_common(q)
    q.add_argument("--quantity", required=True,
                   choices=["survival", "event-rate", "difference", "derivative",
                            "local-limit", "neglig", "residual", "star"])
    q.add_argument("--t-grid", required=True)
    q.add_argument("--phi", default="pow:0.6")
    q.add_argument("--psi", default="pow:0.5")
    q.add_argument("--k", type=int, default=1)
    q.add_argument("--C", type=float, default=1.0)
    q.add_argument("--epsilon", type=float, default=0.5)
    q.add_argument("--y-offset", type=float, default=1.0, help="y in t - y*phi(t)")
    q.add_argument("--event", default="small-pop",
                   choices=["survival", "small-pop", "linear-band"])
    q.add_argument("--a", type=float, default=1.0)
    q.add_argument("--replicates", type=int, default=200000)
    q.add_argument("--seed", type=int, default=None)
    q.add_argument("--jobs", type=int, default=1)
    q.set_defaults(func=cmd_sweep)

    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Refusal as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ModelError, ScheduleError, series.UnsupportedModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except sim.EmptySampleError as exc:
        print(f"insufficient sample: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
