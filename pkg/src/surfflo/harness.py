"""Experiment driver.

Every trial draws from its own Philox stream keyed by ``(seed, trial)``;
the stream id separates grid points of a sweep.  Trials run on a bounded
thread pool and are merged back in trial order, so outputs do not depend
on the number of workers.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import gaussian as ga
from . import layout as lo
from . import oracle
from .prep import PrepNoise, PrepSimulator, estimate_prep_PL
from .storage import (
    StorageNoise,
    StorageSimulator,
    estimate_storage_metrics,
    twirl_failures,
    twirl_summary,
)

log = logging.getLogger(__name__)

MODES = ("storage", "prep", "prep-sweep", "twirl", "oracle-check", "bench", "threshold-scan")
DEFAULT_TRIALS = 50_000
DEFAULT_SWEEP_TRIALS = 5_000
MAX_SEED = 2**64


class HarnessError(Exception):
    pass


class InvalidConfig(HarnessError):
    pass


class NotEnoughCurves(HarnessError):
    pass


# ---------------------------------------------------------------------------
# parsing


_ANGLE = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)?\s*\*?\s*(pi|π)?\s*$")


def parse_angle(text) -> float:
    """Radians from ``"0.3"``, ``"0.08pi"``, ``"0.08π"`` or ``"pi"``."""
    if isinstance(text, (int, float)):
        return float(text)
    m = _ANGLE.match(str(text))
    if not m or (m.group(1) is None and m.group(2) is None):
        raise InvalidConfig(f"cannot parse angle {text!r}")
    value = float(m.group(1)) if m.group(1) is not None else 1.0
    return value * math.pi if m.group(2) else value


def parse_grid(text: str) -> list[float]:
    """``"a:b:step"`` (inclusive) or a comma separated list of angles."""
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise InvalidConfig(f"range must be start:stop:step, got {text!r}")
        a, b, h = (parse_angle(p) for p in parts)
        if h <= 0 or b < a:
            raise InvalidConfig(f"empty or backwards range {text!r}")
        count = int(math.floor((b - a) / h + 1e-9)) + 1
        return [a + k * h for k in range(count)]
    vals = [parse_angle(p) for p in text.split(",") if p.strip()]
    if not vals:
        raise InvalidConfig("empty grid")
    return vals


def parse_distances(values) -> list[int]:
    out = []
    for v in values:
        out.extend(int(x) for x in str(v).split(",") if x.strip())
    return out


# ---------------------------------------------------------------------------
# random streams and parallel execution


def trial_rng(seed: int, trial: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for one trial; the stream sits in the counter's top word."""
    if not 0 <= seed < MAX_SEED or trial < 0 or not 0 <= stream < 2**64:
        raise InvalidConfig("seed, trial and stream must be non-negative 64-bit integers")
    return np.random.Generator(np.random.Philox(key=(seed << 64) | trial, counter=stream << 192))


def run_trials(worker: Callable[[int], object], trials: int, threads: int = 1, chunk: int = 64) -> list:
    """``[worker(i) for i in range(trials)]`` on a thread pool, in trial order."""
    if threads <= 1 or trials <= chunk:
        return [worker(i) for i in range(trials)]
    blocks = [range(a, min(a + chunk, trials)) for a in range(0, trials, chunk)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = pool.map(lambda r: [worker(i) for i in r], blocks)
        return [rec for part in parts for rec in part]


def syndrome_hash(syndrome) -> str:
    bits = np.packbits(np.asarray(syndrome) < 0).tobytes()
    return hashlib.blake2b(bits, digest_size=8).hexdigest()


# ---------------------------------------------------------------------------
# configuration


@dataclass
class ExperimentConfig:
    mode: str
    distance: int = 3
    theta: float = 0.0
    phi: float = 0.0
    epsilon: float | None = None
    angles_file: str | None = None
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    threads: int = 1
    output: str = "out"
    decoder: str | None = None
    stream: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidConfig(f"unknown mode {self.mode!r}")
        if self.distance < 3 or self.distance % 2 == 0:
            raise InvalidConfig(f"distance must be odd and at least 3, got {self.distance}")
        if self.trials < 1:
            raise InvalidConfig("trials must be at least 1")
        if self.threads < 1:
            raise InvalidConfig("threads must be at least 1")
        if not 0 <= self.seed < MAX_SEED:
            raise InvalidConfig("seed must be a non-negative 64-bit integer")
        if self.epsilon is not None and not 0.0 <= self.epsilon <= 1.0:
            raise InvalidConfig("epsilon must lie in [0, 1]")
        if self.decoder is None:
            self.decoder = "peel" if self.mode in ("prep", "prep-sweep") else "mwpm"
        if self.decoder not in ("mwpm", "peel"):
            raise InvalidConfig(f"unknown decoder {self.decoder!r}")
        for name in ("theta", "phi"):
            setattr(self, name, parse_angle(getattr(self, name)))

    def to_dict(self) -> dict:
        return asdict(self)


def load_angles(path: str, n: int, columns: int) -> np.ndarray:
    """Per-qubit angles from a whitespace separated text file, one qubit per line."""
    try:
        with open(path) as fh:
            rows = [line.split() for line in fh if line.strip() and not line.lstrip().startswith("#")]
    except OSError as exc:
        raise InvalidConfig(f"cannot read angle file: {exc}") from exc
    if len(rows) != n or any(len(r) != columns for r in rows):
        raise InvalidConfig(f"angle file must have {n} lines of {columns} value(s)")
    return np.array([[parse_angle(x) for x in r] for r in rows])


# ---------------------------------------------------------------------------
# per-trial records


class StorageRow(NamedTuple):
    trial: int
    syndrome_hash: str
    theta: float
    weight_logs: tuple[float, float, float, float]


class PrepRow(NamedTuple):
    trial: int
    syndrome_hash: str
    bloch: tuple[float, float, float]


class TwirlRow(NamedTuple):
    trial: int
    syndrome_hash: str
    failed: bool


STORAGE_COLUMNS = ("trial", "syndrome_hash", "theta_s", "sin_theta_s", "weight_logs")
PREP_COLUMNS = ("trial", "syndrome_hash", "bx", "by", "bz")
TWIRL_COLUMNS = ("trial", "syndrome_hash", "failed")
SWEEP_COLUMNS = ("theta", "phi", "logical_error", "logical_error_se", "trials")


def storage_rows(lay, eta, trials, seed, threads=1, decoder="mwpm", stream=0) -> list[StorageRow]:
    sim = StorageSimulator(lay, StorageNoise(eta), decoder)

    def one(i: int) -> StorageRow:
        t = sim.run_trial(trial_rng(seed, i, stream))
        logs = (t.log_p_plus, t.log_p_minus, t.log_q_plus, t.log_q_minus)
        return StorageRow(i, syndrome_hash(t.syndrome), t.theta, logs)

    return run_trials(one, trials, threads)


def prep_rows(lay, bloch, trials, seed, threads=1, decoder="peel", stream=0) -> list[PrepRow]:
    sim = PrepSimulator(lay, PrepNoise(bloch), decoder)

    def one(i: int) -> PrepRow:
        t = sim.run_trial(trial_rng(seed, i, stream))
        return PrepRow(i, syndrome_hash(t.syndrome), tuple(float(x) for x in t.bloch))

    return run_trials(one, trials, threads)


def twirl_rows(lay, epsilon, trials, seed, stream=0) -> list[TwirlRow]:
    errs = np.array([trial_rng(seed, i, stream).random(lay.n) < epsilon for i in range(trials)])
    fails = twirl_failures(lay, errs)
    syn = (lay._x_face_incidence @ errs.T.astype(np.int64)) % 2
    return [TwirlRow(i, syndrome_hash(-syn[:, i]), bool(fails[i])) for i in range(trials)]


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_csv(path: Path, header: Sequence[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def write_storage_csv(path, rows: Sequence[StorageRow]) -> Path:
    return _write_csv(
        path,
        STORAGE_COLUMNS,
        (
            (r.trial, r.syndrome_hash, _fmt(r.theta), _fmt(math.sin(r.theta)), ";".join(_fmt(v) for v in r.weight_logs))
            for r in rows
        ),
    )


def write_prep_csv(path, rows: Sequence[PrepRow]) -> Path:
    return _write_csv(path, PREP_COLUMNS, ((r.trial, r.syndrome_hash, *(_fmt(v) for v in r.bloch)) for r in rows))


def write_twirl_csv(path, rows: Sequence[TwirlRow]) -> Path:
    return _write_csv(path, TWIRL_COLUMNS, ((r.trial, r.syndrome_hash, int(r.failed)) for r in rows))


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


# ---------------------------------------------------------------------------
# summaries


def storage_summary(rows: Sequence[StorageRow]) -> dict:
    return estimate_storage_metrics([r.theta for r in rows]).to_dict()


def prep_summary(rows: Sequence[PrepRow]) -> dict:
    est = estimate_prep_PL([r.bloch[0] for r in rows])
    mean = np.mean([r.bloch for r in rows], axis=0)
    return {
        "trials": est.trials,
        "logical_error": est.logical_error,
        "logical_error_se": est.logical_error_se,
        "mean_bloch": mean.tolist(),
    }


def _storage_eta(cfg: ExperimentConfig, lay) -> np.ndarray:
    if cfg.angles_file:
        return load_angles(cfg.angles_file, lay.n, 1)[:, 0]
    return StorageNoise.uniform(lay, cfg.theta).eta


def _prep_bloch(cfg: ExperimentConfig, lay) -> np.ndarray:
    if cfg.angles_file:
        ang = load_angles(cfg.angles_file, lay.n, 2)
        return PrepNoise.from_angles(ang[:, 0], ang[:, 1]).bloch
    return PrepNoise.uniform(lay, cfg.theta, cfg.phi).bloch


def output_paths(output: str, mode: str) -> tuple[Path, Path]:
    """``x.csv`` names the CSV (summary beside it as ``x.json``); anything else is a directory."""
    out = Path(output)
    if out.suffix == ".csv":
        return out, out.with_suffix(".json")
    return out / f"{mode}.csv", out / "summary.json"


def run(cfg: ExperimentConfig) -> dict:
    """Execute a storage, prep or twirl experiment; returns the summary with output paths."""
    lay = lo.build(cfg.distance)
    csv_target, json_target = output_paths(cfg.output, cfg.mode)
    if cfg.mode == "storage":
        rows = storage_rows(lay, _storage_eta(cfg, lay), cfg.trials, cfg.seed, cfg.threads, cfg.decoder, cfg.stream)
        summary = storage_summary(rows)
        csv_path = write_storage_csv(csv_target, rows)
    elif cfg.mode == "prep":
        rows = prep_rows(lay, _prep_bloch(cfg, lay), cfg.trials, cfg.seed, cfg.threads, cfg.decoder, cfg.stream)
        summary = prep_summary(rows)
        csv_path = write_prep_csv(csv_target, rows)
    elif cfg.mode == "twirl":
        eps = cfg.epsilon if cfg.epsilon is not None else math.sin(cfg.theta) ** 2
        rows = twirl_rows(lay, eps, cfg.trials, cfg.seed, cfg.stream)
        summary = asdict(twirl_summary(eps, np.array([r.failed for r in rows])))
        csv_path = write_twirl_csv(csv_target, rows)
    else:
        raise InvalidConfig(f"mode {cfg.mode!r} is not a single experiment")
    summary = {"config": cfg.to_dict(), "summary": summary, "csv": str(csv_path)}
    write_json(json_target, summary)
    return summary


# ---------------------------------------------------------------------------
# sweeps and threshold scans


def prep_sweep(distance, thetas, phis, trials=DEFAULT_SWEEP_TRIALS, seed=0, threads=1, decoder="peel") -> list[dict]:
    """P^L for every (theta, phi) on a grid at one distance."""
    lay = lo.build(distance)
    out = []
    for k, (th, ph) in enumerate((t, p) for t in thetas for p in phis):
        rows = prep_rows(lay, PrepNoise.uniform(lay, th, ph).bloch, trials, seed, threads, decoder, stream=k)
        est = estimate_prep_PL([r.bloch[0] for r in rows])
        out.append(
            {"theta": th, "phi": ph, "logical_error": est.logical_error, "logical_error_se": est.logical_error_se, "trials": trials}
        )
    return out


def write_sweep_csv(path, points: Sequence[dict]) -> Path:
    return _write_csv(path, SWEEP_COLUMNS, ((_fmt(p["theta"]), _fmt(p["phi"]), _fmt(p["logical_error"]), _fmt(p["logical_error_se"]), p["trials"]) for p in points))


@dataclass
class ScanPoint:
    distance: int
    x: float
    logical_error: float
    logical_error_se: float
    trials: int
    extra: dict = field(default_factory=dict)


@dataclass
class PairCrossing:
    d_small: int
    d_large: int
    crossing: float | None
    ci_low: float | None
    ci_high: float | None
    found_fraction: float


@dataclass
class ScanReport:
    mode: str
    distances: list[int]
    grid: list[float]
    points: list[ScanPoint]
    pairs: list[PairCrossing]

    @property
    def threshold(self) -> float | None:
        """Crossing of the two largest distances, the least affected by finite size."""
        return self.pairs[-1].crossing

    def curve(self, d: int) -> tuple[np.ndarray, np.ndarray]:
        pts = [p for p in self.points if p.distance == d]
        return np.array([p.logical_error for p in pts]), np.array([p.logical_error_se for p in pts])

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "distances": self.distances,
            "grid": self.grid,
            "threshold": self.threshold,
            "points": [asdict(p) for p in self.points],
            "pairs": [asdict(p) for p in self.pairs],
        }


def find_crossing(xs, small, large) -> float | None:
    """First x where ``large - small`` turns from negative to non-negative (linear interpolation)."""
    diff = np.asarray(large, dtype=float) - np.asarray(small, dtype=float)
    for k in range(len(diff) - 1):
        if diff[k] < 0 <= diff[k + 1]:
            t = -diff[k] / (diff[k + 1] - diff[k])
            return float(xs[k] + t * (xs[k + 1] - xs[k]))
    return None


def bootstrap_crossing(xs, small, small_se, large, large_se, reps=2000, seed=0, level=0.95):
    """Percentile interval of the crossing under Gaussian resampling of each point."""
    rng = np.random.default_rng(seed)
    ys = rng.normal(small, small_se, size=(reps, len(xs)))
    yl = rng.normal(large, large_se, size=(reps, len(xs)))
    found = [c for c in (find_crossing(xs, a, b) for a, b in zip(ys, yl)) if c is not None]
    if not found:
        return None, None, 0.0
    lo_q, hi_q = np.percentile(found, [50 * (1 - level), 50 * (1 + level)])
    return float(lo_q), float(hi_q), len(found) / reps


def scan_point(mode, lay, x, trials, seed, threads=1, stream=0, phi=0.0, decoder=None) -> ScanPoint:
    if mode == "storage":
        rows = storage_rows(lay, StorageNoise.uniform(lay, x).eta, trials, seed, threads, decoder or "mwpm", stream)
        m = estimate_storage_metrics([r.theta for r in rows])
        extra = {k: v for k, v in m.to_dict().items() if k not in ("histogram", "trials")}
        return ScanPoint(lay.d, x, m.logical_error, m.logical_error_se, trials, extra)
    if mode == "prep":
        rows = prep_rows(lay, PrepNoise.uniform(lay, x, phi).bloch, trials, seed, threads, decoder or "peel", stream)
        est = estimate_prep_PL([r.bloch[0] for r in rows])
        return ScanPoint(lay.d, x, est.logical_error, est.logical_error_se, trials)
    if mode == "twirl":
        res = twirl_summary(x, np.array([r.failed for r in twirl_rows(lay, x, trials, seed, stream)]))
        return ScanPoint(lay.d, x, res.logical_error, res.logical_error_se, trials)
    raise InvalidConfig(f"threshold scans support storage, prep and twirl, not {mode!r}")


def threshold_scan(
    mode, distances, grid, trials=DEFAULT_TRIALS, seed=0, threads=1, phi=0.0, decoder=None, bootstrap=2000
) -> ScanReport:
    """P^L on a (distance, x) grid and the crossing of each adjacent pair of curves.

    ``x`` is the rotation angle for storage and prep, the flip probability
    for twirl.
    """
    distances = sorted(set(int(d) for d in distances))
    if len(distances) < 2:
        raise NotEnoughCurves("a threshold scan needs at least two distances")
    grid = [float(x) for x in grid]
    if len(grid) < 2:
        raise InvalidConfig("a threshold scan needs at least two grid points")
    points = []
    for i, d in enumerate(distances):
        lay = lo.build(d)
        for j, x in enumerate(grid):
            pt = scan_point(mode, lay, x, trials, seed, threads, stream=i * len(grid) + j, phi=phi, decoder=decoder)
            log.info("d=%d x=%.6g P^L=%.5g +- %.2g", d, x, pt.logical_error, pt.logical_error_se)
            points.append(pt)
    report = ScanReport(mode, distances, grid, points, [])
    xs = np.array(grid)
    for a, b in zip(distances, distances[1:]):
        ya, sa = report.curve(a)
        yb, sb = report.curve(b)
        c = find_crossing(xs, ya, yb)
        lo_q, hi_q, frac = bootstrap_crossing(xs, ya, sa, yb, sb, bootstrap, seed)
        report.pairs.append(PairCrossing(a, b, c, lo_q, hi_q, frac))
    return report


# ---------------------------------------------------------------------------
# benchmarks


@dataclass
class BenchResult:
    mode: str
    distance: int
    qubits: int
    trials: int
    median_seconds: float
    peak_active_modes: int


def bench(mode: str, distance: int, trials: int = 5, seed: int = 0, theta: float = 0.08 * math.pi) -> BenchResult:
    """Median wall time of one full trial (angle cache cleared each time)."""
    lay = lo.build(distance)
    if mode == "storage":
        sim = StorageSimulator(lay, StorageNoise.uniform(lay, theta))
        peak = max(p.width for p in sim.programs.values())

        def trial(rng):
            sim._angles.clear()
            sim.run_trial(rng)

    elif mode == "prep":
        sim = PrepSimulator(lay, PrepNoise.uniform(lay, theta, 0.0))
        peak = sim.program.width
        trial = sim.run_trial
    else:
        raise InvalidConfig(f"bench supports storage and prep, not {mode!r}")
    trial(trial_rng(seed, 0, 1))  # compile and warm caches
    times = []
    for i in range(trials):
        rng = trial_rng(seed, i)
        t0 = time.perf_counter()
        trial(rng)
        times.append(time.perf_counter() - t0)
    return BenchResult(mode, distance, lay.n, trials, float(np.median(times)), int(peak))


def scaling_exponent(qubits, seconds) -> float:
    """Slope of log(time) against log(n)."""
    return float(np.polyfit(np.log(qubits), np.log(seconds), 1)[0])


# ---------------------------------------------------------------------------
# oracle comparisons


def engine_equivalence(seed: int = 0, sequences: int = 1000, max_modes: int = 8, steps: int = 12) -> dict:
    """Random rotations and pair measurements, Gaussian engine against dense matrices."""
    rng = np.random.default_rng(seed)
    max_prob = max_cov = 0.0
    measured = 0
    for _ in range(sequences):
        n = 2 * int(rng.integers(1, max_modes // 2 + 1))
        labels = [int(x) for x in rng.permutation(100)[:n]]
        perm = rng.permutation(labels)
        pairs = [ga.ModePair(int(perm[2 * k]), int(perm[2 * k + 1]), int(rng.choice((-1, 1)))) for k in range(n // 2)]
        state = ga.from_pairing(pairs)
        dense = oracle.DenseMajorana(labels)
        dense.prepare_pairing([(pr.p, pr.q, pr.sign) for pr in pairs])
        for _ in range(steps):
            p, q = (int(x) for x in rng.choice(labels, 2, replace=False))
            if rng.random() < 0.6:
                gamma = float(rng.uniform(-math.pi, math.pi))
                state.rotate(p, q, gamma)
                dense.rotate(p, q, gamma)
            else:
                s = 1 if rng.random() < 0.5 else -1
                prob = state.outcome_probability(p, q, s)
                if prob < 1e-6:
                    s = -s
                    prob = state.outcome_probability(p, q, s)
                lam = state.measure(p, q, s)
                ref = dense.measure(p, q, s)
                max_prob = max(max_prob, abs(prob - ref), abs(lam - ref))
                measured += 1
            cov = state.submatrix(labels)
            max_cov = max(max_cov, float(np.abs(cov - dense.covariance()).max()))
    return {
        "suite": "engine",
        "sequences": sequences,
        "measurements": measured,
        "max_probability_deviation": max_prob,
        "max_covariance_deviation": max_cov,
        "passed": max_prob <= 1e-9 and max_cov <= 1e-9,
    }


def _angle_gap(a: float, b: float) -> float:
    g = abs(a - b) % math.pi
    return min(g, math.pi - g)


def _tv(reference: dict, counts: dict, total: int) -> float:
    keys = set(reference) | set(counts)
    return 0.5 * sum(abs(reference.get(k, 0.0) - counts.get(k, 0) / total) for k in keys)


def storage_equivalence(seed=0, vectors=20, samples=100_000, threads=1, distance=3, decoder="mwpm") -> dict:
    """Sampled syndrome frequencies and logical angles against the dense reference."""
    lay = lo.build(distance)
    rng = np.random.default_rng(seed)
    max_tv = max_gap = 0.0
    for k in range(vectors):
        eta = rng.uniform(-math.pi / 2, math.pi / 2, lay.n)
        rows = oracle.dense_storage_reference(lay, eta, decoder)
        ref = {r.syndrome: r.probability for r in rows}
        sim = StorageSimulator(lay, StorageNoise(eta), decoder)
        for r in rows:
            theta, _ = sim.logical_angle(sim.correction_of(np.array(r.syndrome)))
            max_gap = max(max_gap, _angle_gap(theta, r.theta))

        def one(i: int):
            m, _, _ = sim.sample_outcomes(trial_rng(seed, i, k).random(lay.n))
            return tuple(int(x) for x in lo.x_face_syndromes_from_vertex_outcomes(lay, m))

        counts: dict = {}
        for s in run_trials(one, samples, threads, chunk=1024):
            counts[s] = counts.get(s, 0) + 1
        max_tv = max(max_tv, _tv(ref, counts, samples))
    return {
        "suite": "storage",
        "vectors": vectors,
        "samples": samples,
        "max_tv": max_tv,
        "max_angle_deviation": max_gap,
        "passed": max_tv < 0.01 and max_gap <= 1e-7,
    }


def haar_bloch(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def prep_equivalence(seed=0, inputs=1, samples=1_000_000, threads=1, distance=3, decoder="peel") -> dict:
    """Sampled syndrome frequencies and per-syndrome Bloch vectors against the dense reference."""
    lay = lo.build(distance)
    rng = np.random.default_rng(seed)
    max_tv = max_dev = 0.0
    for k in range(inputs):
        bloch = haar_bloch(rng, lay.n)
        ref = {r.syndrome: r for r in oracle.dense_prep_reference(lay, bloch, decoder)}
        sim = PrepSimulator(lay, PrepNoise(bloch), decoder)

        def one(i: int):
            t = sim.run_trial(trial_rng(seed, i, k))
            return tuple(int(x) for x in t.syndrome), t.bloch

        counts: dict = {}
        for s, b in run_trials(one, samples, threads, chunk=1024):
            counts[s] = counts.get(s, 0) + 1
            r = ref.get(s)
            if r is None:
                max_dev = math.inf
                continue
            dev = float(np.abs(b - r.bloch).max())
            if abs(r.bloch[0]) < 1e-9:  # the sign fix is a coin toss here
                dev = min(dev, float(np.abs(b * np.array([-1, -1, 1]) - r.bloch).max()))
            max_dev = max(max_dev, dev)
        max_tv = max(max_tv, _tv({s: r.probability for s, r in ref.items()}, counts, samples))
    return {
        "suite": "prep",
        "inputs": inputs,
        "samples": samples,
        "max_tv": max_tv,
        "max_bloch_deviation": max_dev,
        "passed": max_tv < 0.01 and max_dev <= 1e-7,
    }


def oracle_check(suite: str, seed: int = 0, threads: int = 1, distance: int = 3, **kw) -> dict:
    if suite == "engine":
        return engine_equivalence(seed, **kw)
    if distance != 3:
        raise InvalidConfig("dense oracles run at distance 3")
    if suite == "storage":
        return storage_equivalence(seed, threads=threads, distance=distance, **kw)
    if suite == "prep":
        return prep_equivalence(seed, threads=threads, distance=distance, **kw)
    raise InvalidConfig(f"unknown oracle suite {suite!r}")


__all__ = [
    "MODES",
    "ExperimentConfig",
    "InvalidConfig",
    "NotEnoughCurves",
    "parse_angle",
    "parse_grid",
    "trial_rng",
    "run_trials",
    "run",
    "threshold_scan",
    "find_crossing",
    "bench",
    "scaling_exponent",
    "prep_sweep",
    "oracle_check",
]
