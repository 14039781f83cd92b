"""Acceptance criteria, one test per criterion.

Each test prints (and records for the terminal summary) a single line of the
form ``CRITERION k: PASS|FAIL <details>``. Expensive runs are shared through
module-scoped fixtures so the elitism and determinism checks can reuse them.
Datasets that cannot be loaded make the criteria that need them fail; point
``MHDEOCT_DATA_DIR`` at a directory holding ``<name>.csv`` files to supply them.
"""

from __future__ import annotations

import time

import numpy as np
import pytest

from mhdeoct.benchmarks import load_benchmark
from mhdeoct.codec import clamp, decode, decode_population, encode, n_genes
from mhdeoct.data import DataError, build_threshold_sets, encode_and_scale, fit_scaling
from mhdeoct.estimators import DEOCTClassifier, MHDEOCTClassifier
from mhdeoct.experiment import ExperimentConfig, report_records, run_experiment
from mhdeoct.fitness import EvalConfig, evaluate_population
from mhdeoct.greedy import best_split_misclass, naive_fitness_oracle

from conftest import ACCEPTANCE_LINES, random_tree

pytestmark = pytest.mark.slow

REPS = 10
SMALL5 = ("iris", "wine", "haberman", "balance-scale", "mammographic")
OPT_SETS = ("iris", "hayes-roth", "seeds", "banknote")
# mean train accuracy of the globally optimal depth-2 tree over 10 random splits
DEPTH2_REFERENCE = {"iris": 96.25, "hayes-roth": 63.43, "banknote": 92.88, "seeds": 95.10}
GAP_SUITE = ("iris", "wine", "hayes-roth", "haberman", "tae", "glass", "new-thyroid", "balance-scale")
DEEP_SUITE = ("haberman", "glass", "balance-scale")
DEGENERATE_SUITE = ("iris", "wine", "hayes-roth", "haberman", "tae")


def report(k: int, ok: bool, details: str) -> None:
    line = f"CRITERION {k}: {'PASS' if ok else 'FAIL'} {details}"
    print(line)
    ACCEPTANCE_LINES.append(line)


def try_load(name):
    try:
        return load_benchmark(name)
    except DataError:
        return None


def full_dataset(name):
    raw = load_benchmark(name)
    return encode_and_scale(raw, fit_scaling(raw))


def experiment(name, method, depth, histories=None, **kw):
    """Run the standard 10-split protocol; collect DE histories when asked."""

    def keep(i, est):
        if histories is None:
            return
        if hasattr(est, "history_"):
            histories.append(est.history_)
        if hasattr(est, "report_"):
            histories.extend(est.report_.histories())

    cfg = ExperimentConfig(name, method=method, depth=depth, reps=REPS, **kw)
    return run_experiment(cfg, load_benchmark(name), on_fit=keep)


def without_time(rep):
    rec = report_records(rep)
    rec["rows"] = [{k: v for k, v in r.items() if k != "time_s"} for r in rec["rows"]]
    for key in ("mean", "std"):
        rec[key] = {k: v for k, v in rec[key].items() if k != "time_s"}
    return rec


# shared runs -----------------------------------------------------------------


@pytest.fixture(scope="module")
def depth1_runs():
    out = {"histories": [], "hits": {}, "missing": [], "seconds": 0.0}
    t0 = time.perf_counter()
    for name in OPT_SETS:
        if try_load(name) is None:
            out["missing"].append(name)
            continue
        ds = full_dataset(name)
        th = build_threshold_sets(ds)
        cand = best_split_misclass(ds, th)
        optimum = ds.n - int(np.bincount(ds.y).max()) if cand is None else cand.cost
        hits = 0
        for seed in range(REPS):
            est = DEOCTClassifier(max_depth=1, cart_warm_start=False, random_state=seed).fit(ds.X, ds.y)
            out["histories"].append(est.history_)
            hits += est.fitness_ == optimum
        out["hits"][name] = hits
    out["seconds"] = time.perf_counter() - t0
    return out


@pytest.fixture(scope="module")
def depth2_runs():
    out = {"exact": {}, "normal": {}, "long": {}, "histories": [], "missing": [], "seconds": 0.0}
    t0 = time.perf_counter()
    for name in OPT_SETS:
        if try_load(name) is None:
            out["missing"].append(name)
            continue
        out["exact"][name] = experiment(name, "oracle-d2", 2)
    out["seconds"] = time.perf_counter() - t0
    for name in out["exact"]:
        for mode in ("normal", "long"):
            out[mode][name] = experiment(name, "mh-deoct", 2, out["histories"], mode=mode)
    return out


@pytest.fixture(scope="module")
def gap_runs():
    t0 = time.perf_counter()
    out = {"pairs": {}, "histories": []}
    for name in GAP_SUITE:
        for depth in (3, 4):
            cart = experiment(name, "cart", depth).mean["train_acc"]
            mh = experiment(name, "mh-deoct", depth, out["histories"]).mean["train_acc"]
            out["pairs"][name, depth] = (mh, cart)
    out["seconds"] = time.perf_counter() - t0
    return out


@pytest.fixture(scope="module")
def deep_runs():
    off = (False, False, False)
    out = {"rows": {}, "histories": []}
    for name in DEEP_SUITE:
        h = out["histories"]
        out["rows"][name] = {
            "cart": experiment(name, "cart", 8).mean["train_acc"],
            "deoct_ws": experiment(name, "deoct", 8, h).mean["train_acc"],
            "deoct_cold": experiment(name, "deoct", 8, h, warm_starts=off).mean["train_acc"],
            "mh_cold": experiment(name, "mh-deoct", 8, h, warm_starts=off).mean["train_acc"],
        }
    return out


def degenerate_fits():
    out = []
    for name in DEGENERATE_SUITE:
        ds = full_dataset(name)
        for cls in (DEOCTClassifier, MHDEOCTClassifier):
            est = cls(max_depth=2, alpha=float(ds.n)).fit(ds.X, ds.y)
            expected = ds.n - int(np.bincount(ds.y).max())
            out.append((name, cls.__name__, est, expected))
    return out


@pytest.fixture(scope="module")
def degenerate_runs():
    return degenerate_fits()


# criteria --------------------------------------------------------------------


def test_criterion_01_batched_fitness_matches_oracle():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    checked, mismatches = 0, []
    for name in SMALL5:
        ds = full_dataset(name)
        assert ds.n <= 1000
        th = build_threshold_sets(ds)
        for depth in (2, 4, 8):
            sb = 2**depth - 1
            S = clamp(np.hstack([rng.uniform(0, ds.P + 1, (200, sb)), rng.random((200, sb))]), ds.P)
            expected = np.array([naive_fitness_oracle(decode(s, th), ds, 1.0, 3) for s in S])
            for stride in (1, 7, 32):
                for workers in (1, 4):
                    for backend in ("numba", "sequential"):
                        cfg = EvalConfig(depth, 1.0, 3, stride, workers, backend)
                        got = evaluate_population(S, ds, th, cfg)
                        checked += 1
                        if not np.array_equal(got, expected):
                            mismatches.append((name, depth, stride, workers, backend))
    seconds = time.perf_counter() - t0
    ok = not mismatches and seconds < 60
    report(1, ok, f"{checked} configurations, {len(mismatches)} mismatches, {seconds:.1f}s (limit 60s)")
    assert ok, mismatches[:5]


def test_criterion_02_codec_round_trip_and_totality():
    rng = np.random.default_rng(7)
    ds = full_dataset("iris")
    th = build_threshold_sets(ds)
    failures = 0
    for depth in (1, 2, 3):
        for _ in range(1000):
            tree = random_tree(rng, th, depth)
            back = decode(encode(tree, th), th)
            failures += not (np.array_equal(back.a, tree.a) and np.array_equal(back.b, tree.b))
    S = clamp(np.hstack([rng.uniform(-1, ds.P + 2, (100_000, 7)), rng.uniform(-0.5, 1.5, (100_000, 7))]), ds.P)
    A, B = decode_population(S, th)
    valid_a = bool(((A >= 0) & (A <= ds.P)).all())
    valid_b = bool((B[A == 0] == 0).all())
    valid_b &= all(np.isin(B[A == p], th[p]).all() for p in range(1, ds.P + 1))
    ok = failures == 0 and valid_a and valid_b and S.shape[1] == n_genes(3)
    report(2, ok, f"{failures}/3000 round-trip failures, decode total on 1e5 vectors: {valid_a and valid_b}")
    assert ok


def test_criterion_03_depth1_de_finds_optimum(depth1_runs):
    r = depth1_runs
    hits = ", ".join(f"{k} {v}/10" for k, v in r["hits"].items())
    ok = not r["missing"] and all(v >= 9 for v in r["hits"].values()) and r["seconds"] < 300
    missing = f"; missing data: {', '.join(r['missing'])}" if r["missing"] else ""
    report(3, ok, f"{hits}{missing}; {r['seconds']:.1f}s (limit 300s)")
    assert ok


def test_criterion_04_depth2_optimum_reproduction(depth2_runs):
    r = depth2_runs
    parts, ok = [], not r["missing"] and r["seconds"] < 600
    for name, rep in r["exact"].items():
        acc = rep.mean["train_acc"]
        diff = acc - DEPTH2_REFERENCE[name]
        ok &= abs(diff) <= 0.8
        parts.append(f"{name} {acc:.2f} vs {DEPTH2_REFERENCE[name]:.2f} ({diff:+.2f})")
    missing = f"; missing data: {', '.join(r['missing'])}" if r["missing"] else ""
    report(4, ok, f"{'; '.join(parts)}{missing}; {r['seconds']:.1f}s (limit 600s)")
    assert ok


def test_criterion_05_mh_deoct_near_optimal_at_depth2(depth2_runs):
    r = depth2_runs
    parts, ok = [], not r["missing"]
    for name, rep in r["exact"].items():
        opt = rep.mean["train_acc"]
        gap_n = opt - r["normal"][name].mean["train_acc"]
        gap_l = opt - r["long"][name].mean["train_acc"]
        ok &= gap_n <= 0.6 and gap_l <= 0.3
        parts.append(f"{name} gap normal {gap_n:.2f} long {gap_l:.2f}")
    missing = f"; missing data: {', '.join(r['missing'])}" if r["missing"] else ""
    report(5, ok, f"{'; '.join(parts)} (limits 0.6/0.3){missing}")
    assert ok


def test_criterion_06_mh_deoct_beats_cart(gap_runs):
    pairs = gap_runs["pairs"]
    wins = sum(mh >= cart for mh, cart in pairs.values())
    gain4 = np.mean([mh - cart for (name, d), (mh, cart) in pairs.items() if d == 4])
    secs = gap_runs["seconds"]
    ok = wins >= 0.9 * len(pairs) and gain4 >= 0.8 and secs < 1800
    report(6, ok, f"MH >= CART on {wins}/{len(pairs)} pairs, mean depth-4 gain {gain4:.2f} pp, {secs:.0f}s")
    if not ok:
        for key, (mh, cart) in pairs.items():
            print(f"  {key}: mh {mh:.2f} cart {cart:.2f}")
    assert ok


def test_criterion_07_warm_start_ablation_at_depth8(deep_runs):
    rows = deep_runs["rows"]
    ws_gain = np.mean([r["deoct_ws"] - r["deoct_cold"] for r in rows.values()])
    mh_gain = np.mean([r["mh_cold"] - r["cart"] for r in rows.values()])
    ok = ws_gain >= 1.0 and mh_gain > 0
    detail = "; ".join(
        f"{k} cart {r['cart']:.2f} deoct+ws {r['deoct_ws']:.2f} deoct {r['deoct_cold']:.2f} mh {r['mh_cold']:.2f}"
        for k, r in rows.items()
    )
    report(7, ok, f"warm-start gain {ws_gain:.2f} pp, cold MH over CART {mh_gain:+.2f} pp ({detail})")
    assert ok


def test_criterion_08_elitism(depth1_runs, depth2_runs, gap_runs, deep_runs, degenerate_runs):
    histories = depth1_runs["histories"] + depth2_runs["histories"] + gap_runs["histories"]
    histories += deep_runs["histories"]
    histories += [est.history_ for _, _, est, _ in degenerate_runs if hasattr(est, "history_")]
    histories += [h for _, _, est, _ in degenerate_runs if hasattr(est, "report_") for h in est.report_.histories()]
    bad = sum(bool(np.any(np.diff(h) > 0)) for h in histories)
    ok = bad == 0 and len(histories) > 0
    report(8, ok, f"{len(histories)} logged runs, {bad} with a fitness increase")
    assert ok


def test_criterion_09_alpha_degeneracy(degenerate_runs):
    bad = [
        (name, kind, est.n_active_splits_, est.fitness_, expected)
        for name, kind, est, expected in degenerate_runs
        if est.n_active_splits_ != 0 or est.fitness_ != expected
    ]
    ok = not bad
    report(9, ok, f"{len(degenerate_runs) - len(bad)}/{len(degenerate_runs)} fits with 0 splits and fitness n - max count")
    assert ok, bad


def test_criterion_10_determinism(depth2_runs, degenerate_runs):
    same = True
    for name, rep in depth2_runs["normal"].items():
        again = experiment(name, "mh-deoct", 2, mode="normal")
        same &= without_time(again) == without_time(rep)
    for (name, kind, est, _), (_, _, est2, _) in zip(degenerate_runs, degenerate_fits()):
        same &= est.tree_ == est2.tree_ and est.fitness_ == est2.fitness_
        if hasattr(est, "history_"):
            same &= np.array_equal(est.history_, est2.history_)
    report(10, same, "reruns reproduce reports (wall-clock time excluded) and fitted trees exactly")
    assert same
