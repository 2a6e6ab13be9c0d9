"""Syndrome decoders for the rotated surface code.

Defects live on faces.  Two faces of the same Pauli type are adjacent when
they share a qubit; a qubit covered by a single face of that type links the
face to the open boundary.  A correction is a set of qubits: Z-type paths
between X-face defects, X-type paths between Z-face defects.

``mwpm_decode`` pairs X-face defects by minimum-weight perfect matching,
``prep_correction`` peels each defect to the boundary along a fixed path.
Matching runs on PyMatching by default; a networkx blossom on the defect
graph is kept as an independent second implementation.
"""
from __future__ import annotations

import itertools
import threading
from collections import OrderedDict
from dataclasses import dataclass

import networkx as nx
import numpy as np
import pymatching
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .layout import CodeLayout


class DecoderError(ValueError):
    pass


class SyndromeShapeError(DecoderError):
    pass


@dataclass(frozen=True)
class Correction:
    """Pauli correction Z(z_support) X(x_support), boolean masks over qubits.

    ``lambda_x``, ``lambda_y``, ``lambda_z`` are the signs picked up by the
    logical operators when commuted through the correction.
    """

    z_support: np.ndarray
    x_support: np.ndarray
    lambda_x: int
    lambda_y: int
    lambda_z: int

    @classmethod
    def from_supports(cls, lay: CodeLayout, z_support, x_support=None) -> "Correction":
        z = np.zeros(lay.n, dtype=bool) if z_support is None else np.asarray(z_support, dtype=bool).copy()
        x = np.zeros(lay.n, dtype=bool) if x_support is None else np.asarray(x_support, dtype=bool).copy()
        lx, ly, lz = commutation_signs(lay, z, x)
        return cls(z, x, lx, ly, lz)

    @property
    def weight(self) -> int:
        return int(np.count_nonzero(self.z_support | self.x_support))


def commutation_signs(lay: CodeLayout, z_support, x_support) -> tuple[int, int, int]:
    """(lambda_X, lambda_Y, lambda_Z) with C X_L = lambda_X X_L C, etc.

    X_L acts on the left column and anticommutes with every Z it meets;
    Z_L acts on the top row and anticommutes with every X it meets.
    """
    z = np.asarray(z_support, dtype=bool)
    x = np.asarray(x_support, dtype=bool)
    lx = -1 if np.count_nonzero(z[list(lay.logical_x_support)]) % 2 else 1
    lz = -1 if np.count_nonzero(x[list(lay.logical_z_support)]) % 2 else 1
    return lx, lx * lz, lz


# ----------------------------------------------------------------------------
# defect graphs


class DefectGraph:
    """Face adjacency graph for one Pauli type plus a boundary node.

    Node ``k`` (``k = len(faces)``) is the boundary.  ``dist`` and
    ``pred`` come from an unweighted all-pairs BFS.
    """

    def __init__(self, lay: CodeLayout, pauli: str):
        self.pauli = pauli
        self._n = lay.n
        self.faces = lay.x_faces if pauli == "X" else lay.z_faces
        local = {f: i for i, f in enumerate(self.faces)}
        k = len(self.faces)
        self.boundary = k
        owners: dict[int, list[int]] = {u: [] for u in range(lay.n)}
        for f in self.faces:
            for u in lay.faces[f].vertices:
                owners[u].append(local[f])
        self.edge_qubit: dict[tuple[int, int], int] = {}
        for u in range(lay.n):
            fs = owners[u]
            if len(fs) == 1:
                a, b = fs[0], k
            elif len(fs) == 2:
                a, b = sorted(fs)
            else:
                raise AssertionError(f"qubit {u} lies in {len(fs)} {pauli} faces")
            self.edge_qubit.setdefault((a, b), u)
            self.edge_qubit.setdefault((b, a), u)
        rows = [a for a, _ in self.edge_qubit]
        cols = [b for _, b in self.edge_qubit]
        adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(k + 1, k + 1))
        self.dist, self.pred = shortest_path(adj, unweighted=True, directed=False, return_predecessors=True)
        self.dist = self.dist.astype(np.int64)
        self._cache: OrderedDict[tuple, np.ndarray] = OrderedDict()
        self.cache_size = 1 << 16
        H = lay.face_vertex_matrix[list(self.faces)]
        self.matching = pymatching.Matching.from_check_matrix(H)
        # the matcher and the cache are shared between trial threads
        self.lock = threading.RLock()

    def path_qubits(self, a: int, b: int) -> list[int]:
        """Qubits along the stored shortest path from node a to node b."""
        out = []
        cur = b
        while cur != a:
            prev = int(self.pred[a, cur])
            if prev < 0:
                raise AssertionError("disconnected defect graph")
            out.append(self.edge_qubit[(prev, cur)])
            cur = prev
        return out

    @property
    def boundary_paths(self) -> np.ndarray:
        """Row a: qubit mask of the fixed path from face a to the boundary."""
        if not hasattr(self, "_boundary_paths"):
            P = np.zeros((len(self.faces), self._n), dtype=np.uint8)
            for a in range(len(self.faces)):
                P[a, self.path_qubits(a, self.boundary)] = 1
            self._boundary_paths = P
        return self._boundary_paths

    def boundary_distance(self, a: int) -> int:
        return int(self.dist[a, self.boundary])


_BUILD_LOCK = threading.Lock()


def defect_graph(lay: CodeLayout, pauli: str) -> DefectGraph:
    cache = lay.__dict__.setdefault("_decoder_cache", {})
    if pauli not in cache:
        with _BUILD_LOCK:
            if pauli not in cache:
                cache[pauli] = DefectGraph(lay, pauli)
    return cache[pauli]


def _defects(syndrome, expected: int) -> np.ndarray:
    s = np.asarray(syndrome)
    if s.shape != (expected,):
        raise SyndromeShapeError(f"expected {expected} syndrome bits, got shape {s.shape}")
    if not np.all((s == 1) | (s == -1)):
        raise SyndromeShapeError("syndrome entries must be +1 or -1")
    return np.flatnonzero(s < 0)


def match_defects(g: DefectGraph, defects) -> tuple[list[tuple[int, int]], list[int], int]:
    """Minimum-weight matching of defects, each either paired or sent to the boundary.

    Solved as a maximum-weight matching on the defects alone: pairing a and
    b saves ``bd(a) + bd(b) - dist(a, b)`` over sending both to the
    boundary, so only pairs with a positive saving are offered.  Returns
    ``(pairs, to_boundary, total_weight)``.
    """
    defects = [int(x) for x in defects]
    G = nx.Graph()
    G.add_nodes_from(defects)
    bd = {a: g.boundary_distance(a) for a in defects}
    for a, b in itertools.combinations(defects, 2):
        gain = bd[a] + bd[b] - int(g.dist[a, b])
        if gain > 0:
            G.add_edge(a, b, weight=gain)
    mate = nx.max_weight_matching(G, maxcardinality=False)
    pairs = sorted(tuple(sorted(e)) for e in mate)
    matched = {x for e in pairs for x in e}
    lone = [a for a in defects if a not in matched]
    total = sum(int(g.dist[a, b]) for a, b in pairs) + sum(bd[a] for a in lone)
    return pairs, lone, total


def exhaustive_matching_weight(g: DefectGraph, defects) -> int:
    """Brute-force minimum matching weight (boundary allowed), for small defect sets."""
    defects = tuple(int(x) for x in defects)
    if len(defects) > 10:
        raise DecoderError("exhaustive matching limited to 10 defects")

    def best(rest: tuple[int, ...]) -> int:
        if not rest:
            return 0
        a, tail = rest[0], rest[1:]
        w = g.boundary_distance(a) + best(tail)
        for i, b in enumerate(tail):
            w = min(w, int(g.dist[a, b]) + best(tail[:i] + tail[i + 1 :]))
        return w

    return best(defects)


def _support_from_pairs(lay: CodeLayout, g: DefectGraph, pairs, lone) -> np.ndarray:
    sup = np.zeros(lay.n, dtype=bool)
    for a, b in pairs:
        for u in g.path_qubits(a, b):
            sup[u] ^= True
    for a in lone:
        for u in g.path_qubits(a, g.boundary):
            sup[u] ^= True
    return sup


BACKENDS = ("pymatching", "networkx")


def _matched_support(lay: CodeLayout, pauli: str, syndrome, backend: str = "pymatching") -> np.ndarray:
    if backend not in BACKENDS:
        raise DecoderError(f"unknown matching backend {backend!r}")
    g = defect_graph(lay, pauli)
    defects = _defects(syndrome, len(g.faces))
    key = (backend, np.packbits(np.asarray(syndrome) < 0).tobytes())
    with g.lock:
        hit = g._cache.get(key)
        if hit is not None:
            g._cache.move_to_end(key)
            return hit
        if backend == "pymatching":
            flags = np.zeros(len(g.faces), dtype=np.uint8)
            flags[defects] = 1
            sup = g.matching.decode(flags).astype(bool)
        else:
            pairs, lone, _ = match_defects(g, defects)
            sup = _support_from_pairs(lay, g, pairs, lone)
        sup.setflags(write=False)
        g._cache[key] = sup
        if len(g._cache) > g.cache_size:
            g._cache.popitem(last=False)
        return sup


def _peeled_support(lay: CodeLayout, pauli: str, syndrome) -> np.ndarray:
    g = defect_graph(lay, pauli)
    defects = _defects(syndrome, len(g.faces))
    return (g.boundary_paths[defects].sum(axis=0) % 2).astype(bool)


def mwpm_decode(lay: CodeLayout, x_syndrome, backend: str = "pymatching") -> Correction:
    """Z correction from the X-face syndrome (+-1, ordered like ``lay.x_faces``)."""
    return Correction.from_supports(lay, _matched_support(lay, "X", x_syndrome, backend))


def peel_decode(lay: CodeLayout, x_syndrome) -> Correction:
    """Z correction sending every X-face defect straight to the boundary."""
    return Correction.from_supports(lay, _peeled_support(lay, "X", x_syndrome))


def split_syndrome(lay: CodeLayout, syndrome) -> tuple[np.ndarray, np.ndarray]:
    """Split a full face syndrome into (X-face part, Z-face part)."""
    s = np.asarray(syndrome)
    if s.shape != (len(lay.faces),):
        raise SyndromeShapeError(f"expected {len(lay.faces)} face syndromes, got shape {s.shape}")
    return s[list(lay.x_faces)], s[list(lay.z_faces)]


def prep_correction(lay: CodeLayout, syndrome, method: str = "peel") -> Correction:
    """Correction for a full face syndrome.

    X-face defects are removed with Z strings and Z-face defects with X
    strings.  ``method`` is ``"peel"`` (fixed path to the boundary) or
    ``"mwpm"``.
    """
    sx, sz = split_syndrome(lay, syndrome)
    if method == "peel":
        z = _peeled_support(lay, "X", sx)
        x = _peeled_support(lay, "Z", sz)
    elif method == "mwpm":
        z = _matched_support(lay, "X", sx)
        x = _matched_support(lay, "Z", sz)
    else:
        raise DecoderError(f"unknown decoder {method!r}")
    return Correction.from_supports(lay, z, x)


def fix_sign(lay: CodeLayout, corr: Correction, bx: float) -> tuple[Correction, bool]:
    """Fold in Z_L when the corrected X expectation is negative.

    Returns the (possibly) updated correction and whether Z_L was absorbed.
    ``bx == 0`` keeps the correction unchanged.
    """
    if not bx < 0:
        return corr, False
    z = corr.z_support.copy()
    z[list(lay.logical_z_support)] ^= True
    return Correction.from_supports(lay, z, corr.x_support), True


def syndrome_of_z_error(lay: CodeLayout, z_support) -> np.ndarray:
    """X-face syndrome (+-1) caused by a Z error on the given qubits."""
    H = lay.face_vertex_matrix[list(lay.x_faces)].astype(np.int64)
    return 1 - 2 * ((H @ np.asarray(z_support, dtype=np.int64)) % 2)


def syndrome_of_x_error(lay: CodeLayout, x_support) -> np.ndarray:
    H = lay.face_vertex_matrix[list(lay.z_faces)].astype(np.int64)
    return 1 - 2 * ((H @ np.asarray(x_support, dtype=np.int64)) % 2)
