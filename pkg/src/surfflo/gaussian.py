"""Fermionic Gaussian states stored as real antisymmetric covariance matrices.

Modes carry stable integer labels; the matrix is indexed by position and
``mode_labels`` maps positions back to labels, so pairs of modes can be
attached and detached without renumbering anything else.

The numerical cores (``rotate_inplace`` / ``measure_inplace``) are numba
kernels operating on plain index-based arrays.  The windowed sweeps in
:mod:`surfflo.kernels` call the same functions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numba
import numpy as np

IMPOSSIBLE_TOL = 1e-12
INVARIANT_TOL = 1e-9


class EngineError(ValueError):
    pass


class DuplicateMode(EngineError):
    pass


class UnmatchedMode(EngineError):
    pass


class LabelCollision(EngineError):
    pass


class UnknownMode(EngineError):
    pass


class ImpossibleOutcome(EngineError):
    pass


class NotDecoupled(EngineError):
    pass


class NotNormalized(EngineError):
    pass


class OddSubset(EngineError):
    pass


@dataclass(frozen=True)
class ModePair:
    """The operator ``sign * i c_p c_q``."""

    p: int
    q: int
    sign: int = 1

    def __post_init__(self):
        if self.p == self.q:
            raise EngineError(f"mode pair needs two distinct modes, got {self.p} twice")
        if self.sign not in (1, -1):
            raise EngineError(f"sign must be +1 or -1, got {self.sign}")


# --------------------------------------------------------------------------
# numba cores


@numba.njit(cache=True, nogil=True)
def rotate_inplace(M, i, j, gamma):
    """Apply exp(gamma c_i c_j): M <- R M R^T with a Givens rotation by 2*gamma."""
    c = math.cos(2.0 * gamma)
    s = math.sin(2.0 * gamma)
    n = M.shape[0]
    for a in range(n):
        mi = M[i, a]
        mj = M[j, a]
        M[i, a] = c * mi + s * mj
        M[j, a] = -s * mi + c * mj
    for a in range(n):
        mi = M[a, i]
        mj = M[a, j]
        M[a, i] = c * mi + s * mj
        M[a, j] = -s * mi + c * mj


@numba.njit(cache=True, nogil=True)
def measure_inplace(M, i, j, outcome):
    """Project onto i c_i c_j = outcome.  Returns the outcome probability.

    A probability at or below IMPOSSIBLE_TOL leaves M untouched.
    """
    if outcome < 0:
        p = j
        q = i
    else:
        p = i
        q = j
    lam = 0.5 * (1.0 + M[p, q])
    if lam <= 1e-12:
        return lam
    n = M.shape[0]
    # dense rank-2 update M + (L K^T - K L^T) / (2 lam), K, L = columns p, q
    K = M[:, p].copy()
    L = M[:, q].copy()
    inv = 1.0 / (2.0 * lam)
    for a in range(n):
        ka = K[a] * inv
        la = L[a] * inv
        for b in range(n):
            v = M[a, b] + la * K[b] - ka * L[b]
            if v > 1.0:
                v = 1.0
            elif v < -1.0:
                v = -1.0
            M[a, b] = v
    for a in range(n):
        M[p, a] = 0.0
        M[a, p] = 0.0
        M[q, a] = 0.0
        M[a, q] = 0.0
    M[p, q] = 1.0
    M[q, p] = -1.0
    return lam


@numba.njit(cache=True, nogil=True)
def pair_after_measure(M, p, q, a, b):
    """Entry M[a, b] after projecting onto i c_p c_q = +1, in O(1).

    Returns (lambda, new entry).  Undefined (returns lambda, nan) when the
    projection is impossible.
    """
    lam = 0.5 * (1.0 + M[p, q])
    if lam <= 1e-12:
        return lam, np.nan
    return lam, M[a, b] - (M[a, p] * M[b, q] - M[a, q] * M[b, p]) / (2.0 * lam)


def pfaffian(A: np.ndarray) -> float:
    """Pfaffian of a real antisymmetric matrix by Parlett-Reid elimination.

    Meant for small test-sized inputs.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    if n % 2:
        return 0.0
    pf = 1.0
    for k in range(0, n - 1, 2):
        piv = k + 1 + int(np.argmax(np.abs(A[k, k + 1 :])))
        if piv != k + 1:
            A[[k + 1, piv]] = A[[piv, k + 1]]
            A[:, [k + 1, piv]] = A[:, [piv, k + 1]]
            pf = -pf
        if A[k, k + 1] == 0.0:
            return 0.0
        pf *= A[k, k + 1]
        if k + 2 < n:
            tau = A[k, k + 2 :] / A[k, k + 1]
            A[k + 2 :, k + 2 :] += np.outer(A[k + 1, k + 2 :], tau) - np.outer(
                tau, A[k + 1, k + 2 :]
            )
    return float(pf)


# --------------------------------------------------------------------------


class GaussianState:
    """Covariance matrix M_pq = Tr(i c_p c_q rho) over labelled Majorana modes.

    ``rotate``, ``measure`` and ``detach_pair`` mutate the state in place;
    use :meth:`copy` to branch.
    """

    def __init__(self, cov: np.ndarray, mode_labels: Sequence[int]):
        cov = np.ascontiguousarray(cov, dtype=float)
        labels = [int(m) for m in mode_labels]
        if cov.shape != (len(labels), len(labels)):
            raise EngineError(f"covariance shape {cov.shape} does not match {len(labels)} labels")
        if len(set(labels)) != len(labels):
            raise DuplicateMode("mode labels must be unique")
        self.cov = cov
        self.mode_labels = labels
        self._index = {m: k for k, m in enumerate(labels)}

    @property
    def num_modes(self) -> int:
        return len(self.mode_labels)

    def __repr__(self):
        return f"GaussianState(num_modes={self.num_modes})"

    def copy(self) -> "GaussianState":
        return GaussianState(self.cov.copy(), list(self.mode_labels))

    def index(self, mode: int) -> int:
        try:
            return self._index[mode]
        except KeyError:
            raise UnknownMode(f"mode {mode} is not active") from None

    def _pair_index(self, p: int, q: int) -> tuple[int, int]:
        if p == q:
            raise EngineError(f"pair operators need distinct modes, got {p} twice")
        return self.index(p), self.index(q)

    def submatrix(self, modes: Sequence[int]) -> np.ndarray:
        idx = [self.index(m) for m in modes]
        return self.cov[np.ix_(idx, idx)]

    # -- operations ---------------------------------------------------------

    def rotate(self, p: int, q: int, gamma: float) -> None:
        """Apply the unitary exp(gamma c_p c_q)."""
        i, j = self._pair_index(p, q)
        rotate_inplace(self.cov, i, j, float(gamma))

    def outcome_probability(self, p: int, q: int, outcome: int) -> float:
        i, j = self._pair_index(p, q)
        return 0.5 * (1.0 + outcome * self.cov[i, j])

    def measure(self, p: int, q: int, outcome: int) -> float:
        """Project onto i c_p c_q = outcome and renormalise; return its probability."""
        if outcome not in (1, -1):
            raise EngineError(f"outcome must be +1 or -1, got {outcome}")
        i, j = self._pair_index(p, q)
        lam = measure_inplace(self.cov, i, j, outcome)
        if lam <= IMPOSSIBLE_TOL:
            raise ImpossibleOutcome(
                f"outcome {outcome} for i c_{p} c_{q} has probability {lam:.3g}"
            )
        return lam

    def expectation_pair(self, p: int, q: int) -> float:
        i, j = self._pair_index(p, q)
        return float(self.cov[i, j])

    def wick_expectation(self, modes: Sequence[int]) -> float:
        """Tr(i^{k/2} c_{m1} ... c_{mk} rho) as the Pfaffian of the sub-covariance."""
        if len(modes) % 2:
            raise OddSubset(f"need an even number of modes, got {len(modes)}")
        if len(set(modes)) != len(modes):
            raise DuplicateMode("modes in a Wick product must be distinct")
        if not modes:
            return 1.0
        return pfaffian(self.submatrix(modes))

    def attach_modes(self, pairs: Iterable[ModePair]) -> None:
        other = from_pairing(pairs)
        merged = tensor(self, other)
        self.cov, self.mode_labels, self._index = merged.cov, merged.mode_labels, merged._index

    def detach_pair(self, p: int, q: int) -> None:
        """Drop two modes that are decoupled from everything else."""
        i, j = self._pair_index(p, q)
        M = self.cov
        rest = [k for k in range(self.num_modes) if k not in (i, j)]
        if rest and (
            np.abs(M[np.ix_([i, j], rest)]).max() > INVARIANT_TOL
            or np.abs(M[np.ix_(rest, [i, j])]).max() > INVARIANT_TOL
        ):
            raise NotDecoupled(f"modes {p}, {q} are still correlated with other modes")
        if abs(abs(M[i, j]) - 1.0) > INVARIANT_TOL:
            raise NotDecoupled(f"modes {p}, {q} are not in a pair eigenstate (M={M[i, j]:.3g})")
        self.cov = np.ascontiguousarray(M[np.ix_(rest, rest)])
        self.mode_labels = [self.mode_labels[k] for k in rest]
        self._index = {m: k for k, m in enumerate(self.mode_labels)}

    # -- checks -------------------------------------------------------------

    def check_invariants(self, pure: bool = False, tol: float = INVARIANT_TOL) -> None:
        M = self.cov
        if not np.allclose(M, -M.T, atol=1e-12, rtol=0):
            raise AssertionError("covariance is not antisymmetric")
        if M.size and np.abs(M).max() > 1 + 1e-12:
            raise AssertionError("covariance entry exceeds 1 in magnitude")
        if pure and not np.allclose(M @ M.T, np.eye(self.num_modes), atol=tol, rtol=0):
            raise AssertionError("state is not pure: M M^T != I")


def empty_state() -> GaussianState:
    return GaussianState(np.zeros((0, 0)), [])


def from_pairing(pairs: Iterable[ModePair], modes: Sequence[int] | None = None) -> GaussianState:
    """The unique pure state with sign * i c_p c_q = +1 on every pair.

    If ``modes`` is given, the pairing must cover exactly that set.
    """
    pairs = [p if isinstance(p, ModePair) else ModePair(*p) for p in pairs]
    labels: list[int] = []
    seen: set[int] = set()
    for pr in pairs:
        for m in (pr.p, pr.q):
            if m in seen:
                raise DuplicateMode(f"mode {m} appears in more than one pair")
            seen.add(m)
            labels.append(m)
    if modes is not None:
        missing = set(modes) - seen
        if missing:
            raise UnmatchedMode(f"modes without a partner: {sorted(missing)}")
        extra = seen - set(modes)
        if extra:
            raise UnknownMode(f"modes outside the declared set: {sorted(extra)}")
    M = np.zeros((len(labels), len(labels)))
    for k, pr in enumerate(pairs):
        M[2 * k, 2 * k + 1] = pr.sign
        M[2 * k + 1, 2 * k] = -pr.sign
    return GaussianState(M, labels)


def c4_covariance(bx: float, by: float, bz: float) -> np.ndarray:
    return np.array(
        [
            [0.0, bx, -by, bz],
            [-bx, 0.0, bz, by],
            [by, -bz, 0.0, bx],
            [-bz, -by, -bx, 0.0],
        ]
    )


def from_bloch_c4(
    bx: float, by: float, bz: float, modes: Sequence[int] = (1, 2, 3, 4)
) -> GaussianState:
    """Four-mode encoding of a pure qubit state with Bloch vector (bx, by, bz).

    ``modes`` lists the cluster in its c1..c4 order.
    """
    norm = math.sqrt(bx * bx + by * by + bz * bz)
    if abs(norm - 1.0) > INVARIANT_TOL:
        raise NotNormalized(f"Bloch vector has norm {norm!r}, expected 1")
    return GaussianState(c4_covariance(bx, by, bz), list(modes))


def tensor(a: GaussianState, b: GaussianState) -> GaussianState:
    clash = set(a.mode_labels) & set(b.mode_labels)
    if clash:
        raise LabelCollision(f"modes present in both states: {sorted(clash)}")
    na, nb = a.num_modes, b.num_modes
    M = np.zeros((na + nb, na + nb))
    M[:na, :na] = a.cov
    M[na:, na:] = b.cov
    return GaussianState(M, a.mode_labels + b.mode_labels)


# functional forms -----------------------------------------------------------


def rotate(state: GaussianState, p: int, q: int, gamma: float) -> GaussianState:
    out = state.copy()
    out.rotate(p, q, gamma)
    return out


def measure_pair(state: GaussianState, p: int, q: int, outcome: int) -> tuple[float, GaussianState]:
    out = state.copy()
    lam = out.measure(p, q, outcome)
    return lam, out


def expectation_pair(state: GaussianState, p: int, q: int) -> float:
    return state.expectation_pair(p, q)


def wick_expectation(state: GaussianState, modes: Sequence[int]) -> float:
    return state.wick_expectation(modes)


def attach_modes(state: GaussianState, pairs: Iterable[ModePair]) -> GaussianState:
    out = state.copy()
    out.attach_modes(pairs)
    return out


def detach_pair(state: GaussianState, p: int, q: int) -> GaussianState:
    out = state.copy()
    out.detach_pair(p, q)
    return out
