"""Surface-code state preparation from noisy single-qubit inputs.

Every physical qubit starts in ``exp(i phi X) exp(i theta Z)|+>``.  Its
four-mode cluster state is loaded lazily while the link operators are
measured column by column.  The link outcomes give all face syndromes; the
four corner modes that remain hold the encoded qubit, read out through
three pair expectations and the sign bookkeeping of the correction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import decoder as dec
from .kernels import LinkProgram, compile_link_program, link_sweep
from .layout import CodeLayout, face_syndromes


class PrepError(ValueError):
    pass


def bloch_of_rotated_plus(theta: float, phi: float) -> np.ndarray:
    """Bloch vector of exp(i phi X) exp(i theta Z) |+>."""
    c2t, s2t = math.cos(2 * theta), math.sin(2 * theta)
    c2p, s2p = math.cos(2 * phi), math.sin(2 * phi)
    return np.array([c2t, -s2t * c2p, s2t * s2p])


@dataclass
class PrepNoise:
    """Per-qubit input Bloch vectors, shape (n, 3)."""

    bloch: np.ndarray

    def __post_init__(self):
        self.bloch = np.asarray(self.bloch, dtype=np.float64)
        if self.bloch.ndim != 2 or self.bloch.shape[1] != 3:
            raise PrepError("bloch must have shape (n, 3)")
        norms = np.linalg.norm(self.bloch, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise PrepError("input states must be pure (unit Bloch vectors)")

    @classmethod
    def uniform(cls, lay: CodeLayout, theta: float, phi: float = 0.0) -> "PrepNoise":
        return cls(np.tile(bloch_of_rotated_plus(theta, phi), (lay.n, 1)))

    @classmethod
    def from_angles(cls, theta, phi) -> "PrepNoise":
        theta = np.asarray(theta, dtype=float)
        phi = np.broadcast_to(np.asarray(phi, dtype=float), theta.shape)
        return cls(np.array([bloch_of_rotated_plus(t, p) for t, p in zip(theta, phi)]))


@dataclass
class PrepTrial:
    m: np.ndarray  # link outcomes, per edge
    syndrome: np.ndarray  # all faces, +-1
    correction: dec.Correction
    bloch: np.ndarray  # logical Bloch vector after correction and sign fix
    flipped: bool
    log_probability: float

    @property
    def logical_error(self) -> float:
        return math.sqrt(2.0) * math.sqrt(max(0.0, 1.0 - self.bloch[0]))


class PrepSimulator:
    def __init__(self, lay: CodeLayout, noise: PrepNoise, decoder: str = "peel"):
        if noise.bloch.shape[0] != lay.n:
            raise PrepError(f"need {lay.n} input states, got {noise.bloch.shape[0]}")
        if decoder not in ("peel", "mwpm"):
            raise PrepError(f"unknown decoder {decoder!r}")
        self.layout = lay
        self.noise = noise
        self.decoder = decoder
        self.program = _program(lay)
        self.left = np.asarray(lay.left_edges)
        self.top = np.asarray(lay.top_edges)

    def readout(self, m: np.ndarray, corner: np.ndarray, corr: dec.Correction) -> np.ndarray:
        """Corrected logical Bloch vector from link outcomes and the corner covariance."""
        left_sign = np.prod(m[self.left])
        top_sign = np.prod(m[self.top])
        bx = corr.lambda_x * left_sign * corner[0, 1]
        bz = corr.lambda_z * top_sign * corner[1, 2]
        by = corr.lambda_y * left_sign * top_sign * (-corner[0, 2])
        return np.array([bx, by, bz], dtype=float)

    def run_trial(self, rng: np.random.Generator) -> PrepTrial:
        lay = self.layout
        m, corner, logp = link_sweep(self.program, self.noise.bloch, rng.random(len(lay.edges)))
        s = face_syndromes(lay, m)
        corr = dec.prep_correction(lay, s, self.decoder)
        b = self.readout(m, corner, corr)
        corr2, flipped = dec.fix_sign(lay, corr, b[0])
        if flipped:
            b = b * np.array([-1.0, -1.0, 1.0])
        return PrepTrial(m, s, corr2, b, flipped, logp)


def _program(lay: CodeLayout) -> LinkProgram:
    cache = lay.__dict__.setdefault("_programs", {})
    if "link" not in cache:
        cache["link"] = compile_link_program(lay)
    return cache["link"]


def run_prep_trial(lay: CodeLayout, noise: PrepNoise, rng: np.random.Generator, decoder: str = "peel") -> PrepTrial:
    return PrepSimulator(lay, noise, decoder).run_trial(rng)


@dataclass
class PrepEstimate:
    trials: int
    logical_error: float
    logical_error_se: float
    mean_bloch: np.ndarray


def estimate_prep_PL(trials) -> PrepEstimate:
    """Mean of sqrt(2) * sqrt(1 - b_x) over trials (PrepTrial objects or x components)."""
    bx = np.asarray([t.bloch[0] if isinstance(t, PrepTrial) else t for t in trials], dtype=float)
    if bx.size == 0:
        raise PrepError("no trials")
    err = math.sqrt(2.0) * np.sqrt(np.clip(1.0 - bx, 0.0, None))
    se = float(err.std(ddof=1) / math.sqrt(len(err))) if len(err) > 1 else 0.0
    blochs = [t.bloch for t in trials if isinstance(t, PrepTrial)]
    mean_b = np.mean(blochs, axis=0) if blochs else np.array([bx.mean(), np.nan, np.nan])
    return PrepEstimate(len(err), float(err.mean()), se, mean_b)


def canonical_angles(theta: float, phi: float) -> tuple[float, float]:
    """Representative of (theta, phi) under the symmetries of the noise model."""

    def fold(x: float) -> float:
        x = x % (math.pi / 2)
        return math.pi / 2 - x if x > math.pi / 4 else x

    return fold(theta), fold(phi)


def prep_symmetry_check(theta: float, phi: float) -> tuple[float, float]:
    """Canonical (theta, phi) in [0, pi/4]^2.

    Uses invariance under theta -> theta + pi/2, phi -> phi + pi/2,
    theta -> -theta and phi -> -phi.
    """
    return canonical_angles(theta, phi)
