"""End-to-end acceptance checks at full statistics.

The storage scan alone takes tens of minutes on one core; criteria 5, 6
and 7 share it through a session fixture.
"""
import math
import time
from pathlib import Path

import numpy as np
import pytest

from surfflo import cli
from surfflo import harness as hz
from surfflo import layout as lo
from surfflo import oracle
from surfflo import prep
from surfflo import storage as sto

PI = math.pi
STORAGE_D = [5, 9, 13, 17]
STORAGE_GRID = [k * 0.01 * PI for k in range(6, 13)]
TWIRL_GRID = [0.07 + 0.01 * k for k in range(9)]
PREP_D = [9, 15, 21]
PREP_GRID = [k * 0.01 * PI for k in range(10, 17)]
TRIALS = 50_000
BENCH_D = [9, 19, 29, 39, 49]


def settle(verdicts, k, ok, detail):
    verdicts[k] = (bool(ok), detail)
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def below_3sigma(a, sa, b, sb):
    """a is smaller than b by more than three combined standard errors."""
    return b - a > 3 * math.hypot(sa, sb)


@pytest.fixture(scope="session")
def storage_scan():
    return hz.threshold_scan("storage", STORAGE_D, STORAGE_GRID, trials=TRIALS, seed=101)


@pytest.fixture(scope="session")
def twirl_scan():
    return hz.threshold_scan("twirl", STORAGE_D, TWIRL_GRID, trials=TRIALS, seed=202)


@pytest.fixture(scope="session")
def prep_scan():
    return hz.threshold_scan("prep", PREP_D, PREP_GRID, trials=TRIALS, seed=303, phi=0.0)


def fmt_pairs(rep, unit=PI):
    return ", ".join(
        f"{p.d_small}/{p.d_large}: {'none' if p.crossing is None else f'{p.crossing / unit:.4f}'}" for p in rep.pairs
    )


# ---------------------------------------------------------------------------


def test_criterion_01_engine_matches_dense(verdicts):
    t0 = time.perf_counter()
    res = hz.engine_equivalence(seed=1, sequences=1000, max_modes=8, steps=12)
    took = time.perf_counter() - t0
    ok = res["passed"] and took < 60
    settle(
        verdicts,
        1,
        ok,
        f"{res['sequences']} sequences, {res['measurements']} measurements, max dev prob "
        f"{res['max_probability_deviation']:.1e} cov {res['max_covariance_deviation']:.1e}, {took:.1f}s",
    )


def test_criterion_02_storage_matches_dense(verdicts):
    t0 = time.perf_counter()
    # dense_storage_reference asserts input independence and the logical Z rotation for random inputs
    res = hz.storage_equivalence(seed=2, vectors=20, samples=100_000)
    took = time.perf_counter() - t0
    ok = res["passed"] and took < 600
    settle(
        verdicts,
        2,
        ok,
        f"20 angle vectors x 1e5 samples: max TV {res['max_tv']:.4f}, max angle dev "
        f"{res['max_angle_deviation']:.1e}, {took:.0f}s",
    )


def test_criterion_03_prep_matches_dense(verdicts):
    t0 = time.perf_counter()
    res = hz.prep_equivalence(seed=3, inputs=1, samples=1_000_000)
    worst_norm = 0.0
    for d in (3, 9, 19):
        lay = lo.build(d)
        rng = np.random.default_rng(d)
        sim = prep.PrepSimulator(lay, prep.PrepNoise(hz.haar_bloch(rng, lay.n)))
        for i in range(1000):
            b = sim.run_trial(hz.trial_rng(3, i, d)).bloch
            worst_norm = max(worst_norm, abs(np.linalg.norm(b) - 1.0))
    took = time.perf_counter() - t0
    ok = res["passed"] and worst_norm <= 1e-6 and took < 600
    settle(
        verdicts,
        3,
        ok,
        f"1e6 samples: TV {res['max_tv']:.4f}, max Bloch dev {res['max_bloch_deviation']:.1e}; "
        f"max |norm-1| {worst_norm:.1e} over d=3,9,19; {took:.0f}s",
    )


def test_criterion_04_trivial_cases(verdicts):
    problems = []
    for d in (3, 5, 9):
        lay = lo.build(d)
        s0 = sto.StorageSimulator(lay, sto.StorageNoise.uniform(lay, 0.0))
        s1 = sto.StorageSimulator(lay, sto.StorageNoise.uniform(lay, PI / 2))
        p0 = prep.PrepSimulator(lay, prep.PrepNoise.uniform(lay, 0.0, 0.0))
        th0 = [s0.run_trial(hz.trial_rng(4, i)) for i in range(200)]
        th1 = [s1.run_trial(hz.trial_rng(4, i)) for i in range(200)]
        if sto.estimate_storage_metrics(th0).logical_error != 0.0:
            problems.append(f"storage theta=0 d={d}")
        if any(np.any(t.syndrome != 1) or abs(t.theta - PI / 2) > 1e-9 for t in th1):
            problems.append(f"storage theta=pi/2 d={d}")
        m1 = sto.estimate_storage_metrics(th1)
        if abs(m1.logical_error - 2.0) > 1e-9:
            problems.append(f"storage P^L at pi/2 d={d}")
        pts = [p0.run_trial(hz.trial_rng(4, i)) for i in range(200)]
        if prep.estimate_prep_PL(pts).logical_error > 1e-4:  # sqrt of 1e-9 rounding
            problems.append(f"prep theta=0 d={d}")
        for phi in (0.1, 0.25 * PI, 1.0):
            sim = prep.PrepSimulator(lay, prep.PrepNoise.uniform(lay, 0.0, phi))
            for i in range(50):
                if np.abs(sim.run_trial(hz.trial_rng(4, i)).bloch - [1, 0, 0]).max() > 1e-9:
                    problems.append(f"prep bloch phi={phi:.2f} d={d}")
                    break
    settle(verdicts, 4, not problems, "all exact cases hold" if not problems else "; ".join(problems))


def test_criterion_05_storage_threshold(verdicts, storage_scan):
    thr = storage_scan.threshold
    in_window = thr is not None and 0.07 * PI <= thr <= 0.11 * PI
    y, s = zip(*(storage_scan.curve(d) for d in STORAGE_D))
    low = [(yy[0], ss[0]) for yy, ss in zip(y, s)]
    decreasing = all(below_3sigma(b[0], b[1], a[0], a[1]) for a, b in zip(low, low[1:]))
    at_006 = ", ".join(f"d={d}: {v:.4f}+-{e:.4f}" for d, (v, e) in zip(STORAGE_D, low))
    detail = (
        f"threshold (d=13/17 crossing) {'none' if thr is None else f'{thr / PI:.4f}pi'}; "
        f"pairs {fmt_pairs(storage_scan)}; P^L at 0.06pi {at_006}"
    )
    settle(verdicts, 5, in_window and decreasing, detail)


def test_criterion_06_twirl_baseline(verdicts, twirl_scan, storage_scan):
    thr = twirl_scan.threshold
    in_window = thr is not None and 0.09 <= thr <= 0.13
    lay = lo.build(13)
    coherent = next(p for p in storage_scan.points if p.distance == 13 and abs(p.x - 0.06 * PI) < 1e-12)
    twirl = hz.scan_point("twirl", lay, math.sin(0.06 * PI) ** 2, TRIALS, seed=606)
    exceeds = below_3sigma(twirl.logical_error, twirl.logical_error_se, coherent.logical_error, coherent.logical_error_se)
    detail = (
        f"twirl threshold {'none' if thr is None else f'{thr:.4f}'} (pairs {fmt_pairs(twirl_scan, 1.0)}); "
        f"d=13, 0.06pi: coherent {coherent.logical_error:.4f}+-{coherent.logical_error_se:.4f} vs "
        f"twirled {twirl.logical_error:.4f}+-{twirl.logical_error_se:.4f}"
    )
    settle(verdicts, 6, in_window and exceeds, detail)


def test_criterion_07_coherence_ratio_trend(verdicts, storage_scan):
    pts = {p.distance: p for p in storage_scan.points if abs(p.x - 0.08 * PI) < 1e-12}
    r = {d: (pts[d].extra["average_ratio"], pts[d].extra["average_ratio_se"]) for d in STORAGE_D}
    drop = below_3sigma(r[17][0], r[17][1], r[5][0], r[5][1])
    closer = abs(r[17][0] - 1) < abs(r[5][0] - 1)
    detail = ", ".join(f"d={d}: {v:.4f}+-{e:.4f}" for d, (v, e) in r.items())
    settle(verdicts, 7, drop and closer, f"average-channel ratio at 0.08pi {detail}")


def test_criterion_08_prep_threshold(verdicts, prep_scan):
    thr = prep_scan.threshold
    in_window = thr is not None and 0.11 * PI <= thr <= 0.15 * PI
    first = [(prep_scan.curve(d)[0][0], prep_scan.curve(d)[1][0]) for d in PREP_D]
    decays = all(below_3sigma(b[0], b[1], a[0], a[1]) for a, b in zip(first, first[1:]))
    at_010 = ", ".join(f"d={d}: {v:.4f}+-{e:.4f}" for d, (v, e) in zip(PREP_D, first))
    detail = (
        f"threshold (d=15/21 crossing) {'none' if thr is None else f'{thr / PI:.4f}pi'}; "
        f"pairs {fmt_pairs(prep_scan)}; P^L at 0.10pi {at_010}"
    )
    settle(verdicts, 8, in_window and decays, detail)


def test_criterion_09_performance(verdicts):
    out, ok = [], True
    limits = {"storage": 17.0, "prep": 4.0}
    for mode in ("storage", "prep"):
        res = [hz.bench(mode, d, trials=9, seed=9) for d in BENCH_D]
        slope = hz.scaling_exponent([r.qubits for r in res], [r.median_seconds for r in res])
        big = res[-1]
        peak_ok = all(r.peak_active_modes <= 8 * r.distance for r in res)
        ok &= big.median_seconds <= limits[mode] and 1.5 <= slope <= 2.5 and peak_ok
        out.append(
            f"{mode}: d=49 {big.median_seconds:.3f}s (limit {limits[mode]:.0f}s), exponent {slope:.2f}, "
            f"peak modes {max(r.peak_active_modes for r in res)} ({'ok' if peak_ok else 'over 8d'})"
        )
    settle(verdicts, 9, ok, "; ".join(out))


def test_criterion_10_thread_count_determinism(verdicts, tmp_path):
    same = []
    for mode, theta in (("storage", "0.09pi"), ("prep", "0.12pi")):
        files = []
        for threads in (1, 8):
            out = tmp_path / f"{mode}_{threads}.csv"
            rc = cli.main([mode, "-d", "7", "--theta", theta, "--trials", "3000", "--seed", "10", "--threads", str(threads), "--out", str(out)])
            assert rc == 0
            files.append(Path(out).read_bytes())
        same.append(files[0] == files[1])
    settle(verdicts, 10, all(same), f"storage identical: {same[0]}, prep identical: {same[1]}")
