"""Exact sampling of a stored logical qubit under coherent Z rotations.

Each qubit ``u`` suffers ``exp(i eta_u Z_u)`` before an X-basis readout.
Outcomes are sampled one qubit at a time, column by column, from a
fermionic Gaussian state that never holds more than a few columns of
modes.  Given the outcomes and the decoder's correction, the residual
logical rotation angle ``theta_s`` follows from four unnormalised branch
weights obtained by re-running the sweep with every outcome forced to +1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import decoder as dec
from .kernels import VertexProgram, compile_vertex_program, vertex_sweep
from .layout import CodeLayout, x_face_syndromes_from_vertex_outcomes


class StorageError(ValueError):
    pass


class DegenerateWeights(StorageError):
    """Both branch weights vanished for one of the two bases."""


class EmptySample(StorageError):
    pass


@dataclass
class StorageNoise:
    """Per-qubit rotation angles ``eta`` (radians, indexed by vertex)."""

    eta: np.ndarray

    @classmethod
    def uniform(cls, lay: CodeLayout, theta: float) -> "StorageNoise":
        return cls(np.full(lay.n, float(theta)))

    def __post_init__(self):
        self.eta = np.asarray(self.eta, dtype=np.float64)
        if self.eta.ndim != 1 or not np.all(np.isfinite(self.eta)):
            raise StorageError("eta must be a finite 1-d array")


@dataclass
class StorageTrial:
    m: np.ndarray  # X outcomes per vertex
    syndrome: np.ndarray  # X-face syndrome (+-1)
    correction: np.ndarray  # Z-support of the decoder output
    theta: float
    log_p_plus: float
    log_p_minus: float
    log_q_plus: float
    log_q_minus: float
    max_prob_deviation: float = 0.0

    @property
    def p_plus(self) -> float:
        return math.exp(self.log_p_plus)

    @property
    def p_minus(self) -> float:
        return math.exp(self.log_p_minus)

    @property
    def q_plus(self) -> float:
        return math.exp(self.log_q_plus)

    @property
    def q_minus(self) -> float:
        return math.exp(self.log_q_minus)


class StorageSimulator:
    """Precompiled sweeps and an angle cache for one layout and noise."""

    def __init__(self, lay: CodeLayout, noise: StorageNoise, decoder: str = "mwpm"):
        if noise.eta.shape != (lay.n,):
            raise StorageError(f"need {lay.n} angles, got {noise.eta.shape}")
        if decoder not in ("mwpm", "peel"):
            raise StorageError(f"unknown decoder {decoder!r}")
        self.layout = lay
        self.noise = noise
        self.decoder = decoder
        self.programs: dict[str, VertexProgram] = {b: _program(lay, b) for b in ("X", "Y")}
        self.top_row = np.zeros(lay.n, dtype=bool)
        self.top_row[list(lay.logical_z_support)] = True
        self._angles: dict[bytes, tuple] = {}

    # -- sweeps -------------------------------------------------------------

    def sample_outcomes(self, uniforms: np.ndarray) -> tuple[np.ndarray, float, float]:
        """Sample X outcomes; returns (m, log weight, max |P(+)+P(-)-1|)."""
        m, logw, dev, ok = vertex_sweep(self.programs["X"], self.noise.eta, uniforms)
        if not ok:
            raise StorageError("sampled an impossible branch")
        return m, logw, dev

    def log_weight_all_plus(self, eta: np.ndarray, basis: str) -> float:
        _, logw, _, _ = vertex_sweep(self.programs[basis], eta)
        return logw

    def correction_of(self, syndrome) -> np.ndarray:
        if self.decoder == "mwpm":
            return dec._matched_support(self.layout, "X", syndrome)
        return dec._peeled_support(self.layout, "X", syndrome)

    def logical_angle(self, h: np.ndarray) -> tuple[float, tuple[float, float, float, float]]:
        """theta in [0, pi) and the four log weights for correction support ``h``."""
        h = np.asarray(h, dtype=bool)
        key = np.packbits(h).tobytes()
        hit = self._angles.get(key)
        if hit is not None:
            return hit
        shift = 0.5 * math.pi
        eta_plus = self.noise.eta + shift * h
        eta_minus = self.noise.eta + shift * (h ^ self.top_row)
        lp = self.log_weight_all_plus(eta_plus, "X")
        lm = self.log_weight_all_plus(eta_minus, "X")
        lqp = self.log_weight_all_plus(eta_plus, "Y")
        lqm = self.log_weight_all_plus(eta_minus, "Y")
        theta = angle_from_log_weights(lp, lm, lqp, lqm)
        out = (theta, (lp, lm, lqp, lqm))
        self._angles[key] = out
        return out

    def run_trial(self, rng: np.random.Generator) -> StorageTrial:
        m, _, dev = self.sample_outcomes(rng.random(self.layout.n))
        s = x_face_syndromes_from_vertex_outcomes(self.layout, m)
        h = self.correction_of(s)
        theta, (lp, lm, lqp, lqm) = self.logical_angle(h)
        return StorageTrial(m, s, np.asarray(h), theta, lp, lm, lqp, lqm, dev)


def _program(lay: CodeLayout, basis: str) -> VertexProgram:
    cache = lay.__dict__.setdefault("_programs", {})
    key = ("vertex", basis)
    if key not in cache:
        cache[key] = compile_vertex_program(lay, basis)
    return cache[key]


def _log_ratio(a: float, b: float) -> float:
    """(e^a - e^b) / (e^a + e^b), stable for large or infinite logs."""
    if a == -math.inf and b == -math.inf:
        raise DegenerateWeights("both branch weights vanish")
    if a == -math.inf:
        return -1.0
    if b == -math.inf:
        return 1.0
    return math.tanh(0.5 * (a - b))


def angle_from_log_weights(lp: float, lm: float, lqp: float, lqm: float) -> float:
    """Residual rotation angle folded into [0, pi)."""
    cos2 = _log_ratio(lp, lm)
    sin2 = _log_ratio(lqp, lqm)
    theta = 0.5 * math.atan2(sin2, cos2)
    theta %= math.pi
    return 0.0 if theta >= math.pi else theta


# -- module-level conveniences ---------------------------------------------


def _sim(lay: CodeLayout, noise: StorageNoise, decoder: str = "mwpm") -> StorageSimulator:
    return StorageSimulator(lay, noise, decoder)


def sample_outcomes(lay: CodeLayout, noise: StorageNoise, rng: np.random.Generator):
    """Sample X outcomes; returns ``(m, log_weight)``."""
    m, logw, _ = _sim(lay, noise).sample_outcomes(rng.random(lay.n))
    return m, logw


def weight_of_all_plus(lay: CodeLayout, eta, basis: str = "X") -> float:
    """Unnormalised weight of the all-plus record for angles ``eta``."""
    eta = np.asarray(eta, dtype=float)
    _, logw, _, _ = vertex_sweep(_program(lay, basis), eta)
    return math.exp(logw)


def logical_angle(lay: CodeLayout, noise: StorageNoise, h, decoder: str = "mwpm") -> float:
    return _sim(lay, noise, decoder).logical_angle(np.asarray(h, dtype=bool))[0]


def run_storage_trial(lay: CodeLayout, noise: StorageNoise, rng: np.random.Generator) -> StorageTrial:
    return _sim(lay, noise).run_trial(rng)


# -- estimators --------------------------------------------------------------


@dataclass
class StorageMetrics:
    trials: int
    logical_error: float
    logical_error_se: float
    twirled_error: float
    twirled_error_se: float
    conditional_ratio: float
    conditional_ratio_se: float
    average_ratio: float
    average_ratio_se: float
    epsilon: float
    delta: float
    flags: list[str] = field(default_factory=list)
    histogram: dict[float, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if k != "histogram"}
        out["histogram"] = [[k, v] for k, v in sorted(self.histogram.items())]
        return out


def _se(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0


def estimate_storage_metrics(thetas, histogram_decimals: int = 12) -> StorageMetrics:
    """Logical error, its twirled counterpart and the two coherence ratios.

    Standard errors of the ratios use the delta method.  A ratio whose
    denominator is zero is reported as 1 and flagged.
    """
    th = np.asarray([t.theta if isinstance(t, StorageTrial) else t for t in thetas], dtype=float)
    N = len(th)
    if N == 0:
        raise EmptySample("no trials")
    a = 2.0 * np.abs(np.sin(th))
    b = 2.0 * np.sin(th) ** 2
    e = np.sin(th) ** 2
    g = 0.5 * np.sin(2.0 * th)
    A, B = float(a.mean()), float(b.mean())
    eps, delta = float(e.mean()), float(g.mean())
    flags = []
    cov = np.cov(np.vstack([a, b])) if N > 1 else np.zeros((2, 2))
    if B > 0:
        cond = A / B
        grad = np.array([1.0 / B, -A / B**2])
        cond_se = float(math.sqrt(max(grad @ cov @ grad, 0.0) / N))
    else:
        cond, cond_se = 1.0, 0.0
        flags.append("conditional_ratio_undefined")
    if eps > 0:
        r = math.hypot(eps, delta)
        avg = r / eps
        cov2 = np.cov(np.vstack([e, g])) if N > 1 else np.zeros((2, 2))
        grad = np.array([-(delta**2) / (r * eps**2), delta / (r * eps)])
        avg_se = float(math.sqrt(max(grad @ cov2 @ grad, 0.0) / N))
    else:
        avg, avg_se = 1.0, 0.0
        flags.append("average_ratio_undefined")
    vals, counts = np.unique(np.round(th, histogram_decimals), return_counts=True)
    return StorageMetrics(
        N,
        A,
        _se(a),
        B,
        _se(b),
        cond,
        cond_se,
        avg,
        avg_se,
        eps,
        delta,
        flags,
        {float(v): int(c) for v, c in zip(vals, counts)},
    )


@dataclass
class TwirlResult:
    epsilon: float
    trials: int
    logical_error: float
    logical_error_se: float
    failures: int


def twirl_failures(lay: CodeLayout, errors: np.ndarray) -> np.ndarray:
    """Decode a batch of Z-error patterns (rows) and flag logical failures."""
    errs = np.asarray(errors, dtype=bool)
    if errs.ndim != 2 or errs.shape[1] != lay.n:
        raise StorageError(f"errors must have shape (trials, {lay.n})")
    g = dec.defect_graph(lay, "X")
    flags = ((lay._x_face_incidence @ errs.T.astype(np.int64)) % 2).T.astype(np.uint8)
    with g.lock:
        corr = g.matching.decode_batch(flags).astype(bool)
    residual = errs ^ corr
    return (np.count_nonzero(residual[:, list(lay.logical_x_support)], axis=1) % 2) == 1


def twirl_summary(epsilon: float, fails: np.ndarray) -> TwirlResult:
    f = np.asarray(fails, dtype=float)
    if f.size == 0:
        raise EmptySample("no trials")
    return TwirlResult(float(epsilon), int(f.size), float(2.0 * f.mean()), 2.0 * _se(f), int(f.sum()))


def twirl_baseline(lay: CodeLayout, epsilon: float, rng: np.random.Generator, trials: int) -> TwirlResult:
    """Stochastic Z errors with probability ``epsilon`` per qubit, decoded by MWPM.

    Reports ``2 * failure rate`` so it can be compared with the coherent
    logical error directly.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise StorageError(f"epsilon must lie in [0, 1], got {epsilon}")
    if trials <= 0:
        raise EmptySample("no trials")
    return twirl_summary(epsilon, twirl_failures(lay, rng.random((trials, lay.n)) < epsilon))
