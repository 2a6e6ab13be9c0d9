"""Dense state-vector references.

Two independent checks of the Gaussian machinery:

* :class:`DenseMajorana` builds Majorana operators by a Jordan-Wigner
  mapping on a handful of modes and applies rotations and pair projections
  as plain matrices.
* The ``dense_*`` functions treat a distance-3 code as nine qubits
  (512 amplitudes) and enumerate syndromes exactly.

Qubit ``u`` is bit ``u`` of the basis index.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import decoder as dec
from .layout import CodeLayout

_I = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class OracleError(ValueError):
    pass


def _kron(mats) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


class DenseMajorana:
    """Majorana operators on ``len(labels)`` modes (even, at most 12)."""

    def __init__(self, labels):
        labels = list(labels)
        if len(labels) % 2 or not 0 < len(labels) <= 12:
            raise OracleError("need an even number of modes, at most 12")
        self.labels = labels
        self.pos = {m: i for i, m in enumerate(labels)}
        nq = len(labels) // 2
        self.dim = 2**nq
        ops = []
        for j in range(nq):
            for P in (_Y, _X):
                ops.append(_kron([_Z] * j + [P] + [_I] * (nq - j - 1)))
        self.ops = ops
        self.psi = np.zeros(self.dim, dtype=complex)
        self.psi[0] = 1.0

    def c(self, m) -> np.ndarray:
        return self.ops[self.pos[m]]

    def pair(self, p, q) -> np.ndarray:
        """i c_p c_q."""
        return 1j * self.c(p) @ self.c(q)

    def prepare(self, projectors, seed: int = 0) -> None:
        """Set psi to the unique state fixed by the given projectors."""
        P = np.eye(self.dim, dtype=complex)
        for Q in projectors:
            P = Q @ P
        rng = np.random.default_rng(seed)
        v = P @ (rng.normal(size=self.dim) + 1j * rng.normal(size=self.dim))
        nrm = np.linalg.norm(v)
        if nrm < 1e-9:
            raise OracleError("projectors annihilate the state")
        if np.linalg.matrix_rank(P, tol=1e-9) != 1:
            raise OracleError("projectors do not fix a unique state")
        self.psi = v / nrm

    def prepare_pairing(self, pairs) -> None:
        """pairs: iterable of (p, q, sign) with i c_p c_q = sign."""
        self.prepare([(np.eye(self.dim) + s * self.pair(p, q)) / 2 for p, q, s in pairs])

    def prepare_c4(self, blocks) -> None:
        """blocks: iterable of ((m1, m2, m3, m4), (bx, by, bz))."""
        projs = []
        for (m1, m2, m3, m4), (bx, by, bz) in blocks:
            S = -self.c(m1) @ self.c(m2) @ self.c(m3) @ self.c(m4)
            X = self.pair(m1, m2)
            Y = -1j * self.c(m1) @ self.c(m3)
            Z = self.pair(m2, m3)
            projs.append((np.eye(self.dim) + S) / 2)
            projs.append((np.eye(self.dim) + bx * X + by * Y + bz * Z) / 2)
        self.prepare(projs)

    def rotate(self, p, q, gamma: float) -> None:
        self.psi = (math.cos(gamma) * np.eye(self.dim) + math.sin(gamma) * self.c(p) @ self.c(q)) @ self.psi

    def measure(self, p, q, outcome: int) -> float:
        v = (np.eye(self.dim) + outcome * self.pair(p, q)) / 2 @ self.psi
        lam = float(np.real(np.vdot(v, v)))
        if lam > 1e-14:
            self.psi = v / math.sqrt(lam)
        return lam

    def expectation(self, op: np.ndarray) -> complex:
        return complex(np.vdot(self.psi, op @ self.psi))

    def covariance(self) -> np.ndarray:
        n = len(self.labels)
        M = np.zeros((n, n))
        for a in range(n):
            for b in range(n):
                if a != b:
                    M[a, b] = np.real(self.expectation(self.pair(self.labels[a], self.labels[b])))
        return M


# ----------------------------------------------------------------------------
# qubit-level references


def _x_mask(psi: np.ndarray, mask: int) -> np.ndarray:
    idx = np.arange(len(psi))
    return psi[idx ^ mask]


def _z_phase(dim: int, mask: int) -> np.ndarray:
    idx = np.arange(dim)
    par = np.zeros(dim, dtype=np.int64)
    m = idx & mask
    while np.any(m):
        par ^= m & 1
        m >>= 1
    return 1 - 2 * par


def _mask(qubits) -> int:
    out = 0
    for u in qubits:
        out |= 1 << int(u)
    return out


class DenseCode:
    """Stabilisers and logicals of a small code as dense operators on states."""

    def __init__(self, lay: CodeLayout):
        if lay.n > 12:
            raise OracleError("dense references are limited to 12 qubits")
        self.layout = lay
        self.dim = 2**lay.n
        self.zsign = {}

    def apply_x(self, psi, qubits):
        return _x_mask(psi, _mask(qubits))

    def apply_z(self, psi, qubits):
        key = _mask(qubits)
        if key not in self.zsign:
            self.zsign[key] = _z_phase(self.dim, key)
        return self.zsign[key] * psi

    def stabilizer(self, psi, face: int):
        f = self.layout.faces[face]
        return self.apply_x(psi, f.vertices) if f.pauli == "X" else self.apply_z(psi, f.vertices)

    def logical_plus(self) -> np.ndarray:
        """|+_L>: |+>^n projected onto the Z-face stabiliser space."""
        psi = np.full(self.dim, 1 / math.sqrt(self.dim), dtype=complex)
        for f in self.layout.z_faces:
            psi = 0.5 * (psi + self.stabilizer(psi, f))
        return psi / np.linalg.norm(psi)

    def logical_state(self, bloch) -> np.ndarray:
        """Encoded state with the given Bloch vector (X_L on the left column, Z_L on the top row)."""
        plus = self.logical_plus()
        minus = self.apply_z(plus, self.layout.logical_z_support)
        zero, one = (plus + minus) / math.sqrt(2), (plus - minus) / math.sqrt(2)
        a, b = _bloch_to_amplitudes(bloch)
        return a * zero + b * one

    def logical_bloch(self, psi) -> np.ndarray:
        L = self.layout
        xs, zs = L.logical_x_support, L.logical_z_support
        bx = np.vdot(psi, self.apply_x(psi, xs)).real
        bz = np.vdot(psi, self.apply_z(psi, zs)).real
        # Y_L = i X_L Z_L, qubits shared by both supports pick up the local phase
        yl = 1j * self.apply_x(self.apply_z(psi, zs), xs)
        by = np.vdot(psi, yl).real
        return np.array([bx, by, bz])

    def branches(self, psi, faces):
        """Split psi by the eigenvalues of the given faces; yields (syndrome, branch)."""
        stack = [((), psi)]
        for f in faces:
            nxt = []
            for s, v in stack:
                w = self.stabilizer(v, f)
                nxt.append((s + (1,), 0.5 * (v + w)))
                nxt.append((s + (-1,), 0.5 * (v - w)))
            stack = nxt
        return stack


def _bloch_to_amplitudes(bloch) -> tuple[complex, complex]:
    bx, by, bz = bloch
    th = math.acos(max(-1.0, min(1.0, bz)))
    ph = math.atan2(by, bx)
    return math.cos(th / 2), complex(math.cos(ph), math.sin(ph)) * math.sin(th / 2)


def single_qubit_bloch(theta: float, phi: float) -> np.ndarray:
    """Bloch vector of exp(i phi X) exp(i theta Z) |+>, from the state vector."""
    plus = np.array([1, 1], dtype=complex) / math.sqrt(2)
    ez = np.diag([np.exp(1j * theta), np.exp(-1j * theta)])
    ex = math.cos(phi) * _I + 1j * math.sin(phi) * _X
    v = ex @ ez @ plus
    return np.array([np.vdot(v, P @ v).real for P in (_X, _Y, _Z)])


def product_state(vectors) -> np.ndarray:
    """Tensor product with vectors[u] on bit u."""
    out = np.ones(1, dtype=complex)
    for v in vectors:
        out = np.kron(np.asarray(v, dtype=complex), out)
    return out


def qubit_from_bloch(bloch) -> np.ndarray:
    a, b = _bloch_to_amplitudes(bloch)
    return np.array([a, b], dtype=complex)


def dense_syndrome_distribution(lay: CodeLayout, psi, faces=None) -> dict[tuple[int, ...], float]:
    """Exact p(s) for every syndrome of the chosen faces (default: all)."""
    code = DenseCode(lay)
    faces = list(range(len(lay.faces))) if faces is None else list(faces)
    return {s: float(np.vdot(v, v).real) for s, v in code.branches(np.asarray(psi, dtype=complex), faces)}


@dataclass
class DenseStorageRow:
    syndrome: tuple[int, ...]
    probability: float
    theta: float
    correction: np.ndarray


def dense_storage_reference(lay: CodeLayout, eta, decoder: str = "mwpm", check_states: int = 2, tol: float = 1e-9):
    """Exact syndrome distribution and logical angles of the storage experiment.

    For every X-face syndrome the corrected branch of ``|+_L>`` is compared
    with ``|+_L>`` to read off the angle, and for ``check_states`` random
    logical inputs the corrected branch is checked to be that same logical
    Z rotation with an input-independent probability.
    """
    code = DenseCode(lay)
    eta = np.asarray(eta, dtype=float)
    phase = np.ones(code.dim, dtype=complex)
    for u in range(lay.n):
        phase = phase * np.exp(1j * eta[u] * code.apply_z(np.ones(code.dim), [u]))
    plus = code.logical_plus()
    minus = code.apply_z(plus, lay.logical_z_support)
    rng = np.random.default_rng(1234)
    inputs = []
    for _ in range(check_states):
        v = rng.normal(size=3)
        inputs.append(code.logical_state(v / np.linalg.norm(v)))
    rows = []
    faces = list(lay.x_faces)
    branch_inputs = [code.branches(phase * p, faces) for p in [plus] + inputs]
    for k, (s, v) in enumerate(branch_inputs[0]):
        p = float(np.vdot(v, v).real)
        if p < 1e-14:
            continue
        h = dec._matched_support(lay, "X", np.array(s)) if decoder == "mwpm" else dec._peeled_support(
            lay, "X", np.array(s)
        )
        hq = np.flatnonzero(h)
        phi = code.apply_z(v, hq) / math.sqrt(p)
        a_plus = np.vdot(plus, phi)
        a_minus = np.vdot(minus, phi)
        theta = 0.5 * math.atan2(2 * (a_minus * np.conj(a_plus)).imag, abs(a_plus) ** 2 - abs(a_minus) ** 2)
        theta %= math.pi
        for j, psi_in in enumerate(inputs):
            w = branch_inputs[j + 1][k][1]
            pw = float(np.vdot(w, w).real)
            if abs(pw - p) > tol:
                raise OracleError(f"syndrome probability depends on the input state ({pw} vs {p})")
            got = code.apply_z(w, hq) / math.sqrt(pw)
            want = math.cos(theta) * psi_in + 1j * math.sin(theta) * code.apply_z(psi_in, lay.logical_z_support)
            if abs(abs(np.vdot(want, got)) - 1.0) > 1e-7:
                raise OracleError("corrected branch is not a logical Z rotation")
        rows.append(DenseStorageRow(tuple(int(x) for x in s), p, theta, h))
    return rows


@dataclass
class DensePrepRow:
    syndrome: tuple[int, ...]
    probability: float
    bloch: np.ndarray
    flipped: bool


def dense_prep_reference(lay: CodeLayout, qubit_blochs, decoder: str = "peel", min_probability: float = 0.0):
    """Exact preparation outcome per full face syndrome for a product input state.

    The input qubits are projected onto each syndrome, corrected with the
    same decoder the simulator uses, and read out in the logical basis
    (after the sign fix).
    """
    code = DenseCode(lay)
    psi = product_state([qubit_from_bloch(b) for b in qubit_blochs])
    rows = []
    for s, v in code.branches(psi, range(len(lay.faces))):
        p = float(np.vdot(v, v).real)
        if p <= min_probability or p < 1e-14:
            continue
        corr = dec.prep_correction(lay, np.array(s), decoder)
        w = code.apply_z(code.apply_x(v, np.flatnonzero(corr.x_support)), np.flatnonzero(corr.z_support))
        b = code.logical_bloch(w / math.sqrt(p))
        flipped = bool(b[0] < 0)
        if flipped:
            b = b * np.array([-1.0, -1.0, 1.0])
        rows.append(DensePrepRow(tuple(int(x) for x in s), p, b, flipped))
    return rows


def enumerate_bitstrings(n: int):
    return itertools.product((0, 1), repeat=n)


def coset_storage_reference(lay: CodeLayout, eta, decoder: str = "mwpm", chunk: int = 1 << 20):
    """Exact storage results from a sum over Z-error patterns.

    ``prod_u (cos eta_u + i sin eta_u Z_u)`` expands into Z errors ``E``
    with amplitude ``prod (i sin)^{|E|} cos^{n-|E|}``.  On ``|+_L>`` each
    ``Z(E)`` only depends on its X-face syndrome and on whether it crosses
    the left column an odd number of times, so two amplitudes per syndrome
    give the probability and the residual angle.  Cost ``2^n``; meant for
    d <= 5.
    """
    n = lay.n
    if n > 25:
        raise OracleError("coset enumeration is limited to 25 qubits")
    eta = np.asarray(eta, dtype=float)
    H = lay.face_vertex_matrix[list(lay.x_faces)].astype(np.int64)
    nf = H.shape[0]
    face_bits = (H * (1 << np.arange(n))).sum(axis=1)  # qubit mask per face
    left_mask = _mask(lay.logical_x_support)
    s_ = np.sin(eta)
    acc = np.zeros((1 << nf, 2), dtype=complex)
    for start in range(0, 1 << n, chunk):
        E = np.arange(start, min(start + chunk, 1 << n), dtype=np.int64)
        amp = np.ones(len(E), dtype=complex)
        for u in range(n):
            bit = (E >> u) & 1
            amp *= np.where(bit == 1, 1j * s_[u], np.cos(eta[u]))
        syn = np.zeros(len(E), dtype=np.int64)
        for k in range(nf):
            syn |= (_popcount_parity(E & int(face_bits[k]))) << k
        par = _popcount_parity(E & left_mask)
        np.add.at(acc, (syn, par), amp)
    rows = []
    for key in range(1 << nf):
        a0, a1 = acc[key]
        p = abs(a0) ** 2 + abs(a1) ** 2
        if p < 1e-14:
            continue
        s = np.array([-1 if (key >> k) & 1 else 1 for k in range(nf)])
        if decoder == "mwpm":
            h = dec._matched_support(lay, "X", s)
        else:
            h = dec._peeled_support(lay, "X", s)
        if np.count_nonzero(h[list(lay.logical_x_support)]) % 2:
            a0, a1 = a1, a0
        theta = 0.5 * math.atan2(2 * (a1 * np.conj(a0)).imag, abs(a0) ** 2 - abs(a1) ** 2) % math.pi
        rows.append(DenseStorageRow(tuple(int(x) for x in s), float(p), theta, h))
    return rows


_PARITY16 = np.zeros(1 << 16, dtype=np.int64)
for _b in range(16):
    _PARITY16 ^= (np.arange(1 << 16) >> _b) & 1


def _popcount_parity(x: np.ndarray) -> np.ndarray:
    """Bit parity of non-negative integers below 2^32."""
    return _PARITY16[x & 0xFFFF] ^ _PARITY16[(x >> 16) & 0xFFFF]
