"""Rotated distance-d surface code and its four-Majorana-per-qubit layout.

Geometry
--------
Qubit ``(r, c)`` sits at row ``r`` (top = 0) and column ``c``.  Vertex
indices run column by column, ``index = c * d + r``.  Plaquette ``(i, j)``
has corners ``(i, j), (i, j+1), (i+1, j), (i+1, j+1)`` for
``-1 <= i, j <= d-1``; it is X-type iff ``i + j`` is odd.  Interior
plaquettes are weight-4 faces.  Boundary plaquettes of the right colour
(X on top/bottom, Z on left/right) become weight-2 faces bounded by a grid
edge and a parallel "digon" edge.

Every vertex owns four Majorana modes, one per compass slot N/E/S/W.  Grid
edges join E-W or S-N slots, digon edges join the outward slots of two
neighbouring boundary qubits, and the four slots left over are the unpaired
corner modes c1 (bottom-left), c2 (top-left), c3 (top-right), c4
(bottom-right).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import sparse

from .gaussian import ModePair


class LayoutError(ValueError):
    pass


class InvalidDistance(LayoutError):
    pass


class UnknownVertex(LayoutError):
    pass


SLOTS = ("N", "E", "S", "W")
_OFFSET = {"N": (0.0, 0.25), "S": (0.0, -0.25), "E": (0.25, 0.0), "W": (-0.25, 0.0)}

# Cluster position (1..4) of each slot.  Which table applies depends on the
# type of the vertex's north-east quadrant.
_CLUSTER_NE_Z = {"N": 2, "E": 3, "S": 4, "W": 1}
_CLUSTER_NE_X = {"N": 3, "E": 4, "S": 1, "W": 2}

# (tail, head) cluster positions of the four pair operators
ENCODING = {"X": (1, 2), "Z": (2, 3), "XS": (3, 4), "ZS": (1, 4)}
_PAIR_OP = {frozenset(v): v for v in ENCODING.values()}


@dataclass(frozen=True)
class Edge:
    index: int
    u: int
    v: int
    tail: int
    head: int
    kind: str  # "h", "v" or "digon"

    @property
    def pair(self) -> ModePair:
        return ModePair(self.tail, self.head, 1)


@dataclass(frozen=True)
class Face:
    index: int
    pauli: str
    vertices: tuple[int, ...]
    edges: tuple[int, ...]
    plaquette: tuple[int, int]


@dataclass(frozen=True)
class LogicalFace:
    name: str
    virtual_edge: tuple[int, int]  # (tail, head) of the added corner link
    vertices: tuple[int, ...]
    edges: tuple[int, ...]


@dataclass
class CodeLayout:
    d: int
    coords: list[tuple[int, int]]
    clusters: list[tuple[int, int, int, int]]
    slots: list[dict[str, int]]
    edges: list[Edge]
    faces: list[Face]
    corners: tuple[int, int, int, int]
    logical_faces: dict[str, LogicalFace]
    _mode_pos: dict[int, tuple[float, float]] = field(repr=False, default_factory=dict)

    # -- sizes ---------------------------------------------------------------

    @property
    def n(self) -> int:
        return self.d * self.d

    @property
    def num_modes(self) -> int:
        return 4 * self.n

    def vertex(self, r: int, c: int) -> int:
        return c * self.d + r

    @cached_property
    def left_edges(self) -> tuple[int, ...]:
        return self.logical_faces["left"].edges

    @cached_property
    def top_edges(self) -> tuple[int, ...]:
        return self.logical_faces["top"].edges

    @cached_property
    def logical_z_support(self) -> tuple[int, ...]:
        return tuple(self.vertex(0, c) for c in range(self.d))

    @cached_property
    def logical_x_support(self) -> tuple[int, ...]:
        return tuple(self.vertex(r, 0) for r in range(self.d))

    @cached_property
    def x_faces(self) -> tuple[int, ...]:
        return tuple(f.index for f in self.faces if f.pauli == "X")

    @cached_property
    def z_faces(self) -> tuple[int, ...]:
        return tuple(f.index for f in self.faces if f.pauli == "Z")

    @cached_property
    def mode_owner(self) -> dict[int, int]:
        return {m: u for u, cl in enumerate(self.clusters) for m in cl}

    @cached_property
    def edge_of_mode(self) -> dict[int, Edge]:
        out = {}
        for e in self.edges:
            out[e.tail] = e
            out[e.head] = e
        return out

    @cached_property
    def face_vertex_matrix(self) -> np.ndarray:
        """0/1 incidence matrix, faces x vertices."""
        H = np.zeros((len(self.faces), self.n), dtype=np.uint8)
        for f in self.faces:
            H[f.index, list(f.vertices)] = 1
        return H

    @cached_property
    def face_edge_matrix(self) -> np.ndarray:
        H = np.zeros((len(self.faces), len(self.edges)), dtype=np.uint8)
        for f in self.faces:
            H[f.index, list(f.edges)] = 1
        return H

    @cached_property
    def _x_face_incidence(self):
        return sparse.csr_matrix(self.face_vertex_matrix[list(self.x_faces)].astype(np.int64))

    @cached_property
    def _face_edge_incidence(self):
        return sparse.csr_matrix(self.face_edge_matrix.astype(np.int64))

    def cluster(self, u: int) -> tuple[int, int, int, int]:
        if not 0 <= u < self.n:
            raise UnknownVertex(f"vertex {u} not in a distance-{self.d} layout")
        return self.clusters[u]

    # -- serialisation --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "vertices": [
                {"index": u, "row": r, "col": c, "cluster": list(self.clusters[u]), "slots": self.slots[u]}
                for u, (r, c) in enumerate(self.coords)
            ],
            "edges": [
                {"index": e.index, "u": e.u, "v": e.v, "tail": e.tail, "head": e.head, "kind": e.kind}
                for e in self.edges
            ],
            "faces": [
                {
                    "index": f.index,
                    "pauli": f.pauli,
                    "vertices": list(f.vertices),
                    "edges": list(f.edges),
                    "plaquette": list(f.plaquette),
                }
                for f in self.faces
            ],
            "corners": list(self.corners),
            "logical_faces": {
                k: {"virtual_edge": list(lf.virtual_edge), "vertices": list(lf.vertices), "edges": list(lf.edges)}
                for k, lf in self.logical_faces.items()
            },
            "left_edges": list(self.left_edges),
            "top_edges": list(self.top_edges),
            "logical_x_support": list(self.logical_x_support),
            "logical_z_support": list(self.logical_z_support),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data: dict) -> "CodeLayout":
        verts = sorted(data["vertices"], key=lambda v: v["index"])
        lay = cls(
            d=int(data["d"]),
            coords=[(v["row"], v["col"]) for v in verts],
            clusters=[tuple(v["cluster"]) for v in verts],
            slots=[dict(v["slots"]) for v in verts],
            edges=[Edge(e["index"], e["u"], e["v"], e["tail"], e["head"], e["kind"]) for e in data["edges"]],
            faces=[
                Face(f["index"], f["pauli"], tuple(f["vertices"]), tuple(f["edges"]), tuple(f["plaquette"]))
                for f in data["faces"]
            ],
            corners=tuple(data["corners"]),
            logical_faces={
                k: LogicalFace(k, tuple(v["virtual_edge"]), tuple(v["vertices"]), tuple(v["edges"]))
                for k, v in data["logical_faces"].items()
            },
        )
        lay._mode_pos = _mode_positions(lay)
        return lay

    @classmethod
    def from_json(cls, text: str) -> "CodeLayout":
        return cls.from_dict(json.loads(text))


# ----------------------------------------------------------------------------


def _plaquette_is_x(i: int, j: int) -> bool:
    return (i + j) % 2 == 1


def _mode_positions(lay: CodeLayout) -> dict[int, tuple[float, float]]:
    pos = {}
    for u, (r, c) in enumerate(lay.coords):
        for slot, m in lay.slots[u].items():
            dx, dy = _OFFSET[slot]
            pos[m] = (c + dx, -r + dy)
    return pos


def build(d: int) -> CodeLayout:
    """Construct the distance-``d`` layout (``d`` odd, at least 3)."""
    if not isinstance(d, (int, np.integer)) or d < 3 or d % 2 == 0:
        raise InvalidDistance(f"distance must be an odd integer >= 3, got {d!r}")
    d = int(d)
    n = d * d
    vid = lambda r, c: c * d + r  # noqa: E731
    coords = [(u % d, u // d) for u in range(n)]

    # (slot_a, slot_b) per edge, oriented tail -> head; slot = (r, c, dir)
    raw: list[tuple[tuple, tuple, str]] = []
    for r in range(d):
        for c in range(d - 1):
            raw.append(((r, c, "E"), (r, c + 1, "W"), "h"))
    for r in range(d - 1):
        for c in range(d):
            a, b = (r, c, "S"), (r + 1, c, "N")
            # vertical edges point up from even-parity sites, down from odd ones
            raw.append((b, a, "v") if (r + c) % 2 == 0 else (a, b, "v"))
    for j in range(0, d - 1, 2):
        raw.append(((0, j, "N"), (0, j + 1, "N"), "digon"))
    for j in range(1, d - 1, 2):
        raw.append(((d - 1, j, "S"), (d - 1, j + 1, "S"), "digon"))
    for i in range(1, d - 1, 2):
        raw.append(((i + 1, 0, "W"), (i, 0, "W"), "digon"))
    for i in range(0, d - 1, 2):
        raw.append(((i, d - 1, "E"), (i + 1, d - 1, "E"), "digon"))

    slot_mode: dict[tuple, int] = {}
    edges: list[Edge] = []
    for k, (a, b, kind) in enumerate(raw):
        # endpoint modes numbered by (edge index, endpoint); endpoint 0 is
        # the lower vertex index
        ua, ub = vid(a[0], a[1]), vid(b[0], b[1])
        first, second = (a, b) if ua < ub else (b, a)
        slot_mode[first] = 5 + 2 * k
        slot_mode[second] = 6 + 2 * k
        edges.append(Edge(k, min(ua, ub), max(ua, ub), slot_mode[a], slot_mode[b], kind))

    corner_slots = [(d - 1, 0, "S"), (0, 0, "W"), (0, d - 1, "N"), (d - 1, d - 1, "E")]
    for k, s in enumerate(corner_slots):
        if s in slot_mode:
            raise AssertionError("corner slot unexpectedly paired")
        slot_mode[s] = k + 1
    corners = (1, 2, 3, 4)

    slots: list[dict[str, int]] = []
    clusters: list[tuple[int, int, int, int]] = []
    for u, (r, c) in enumerate(coords):
        table = _CLUSTER_NE_X if _plaquette_is_x(r - 1, c) else _CLUSTER_NE_Z
        sl = {s: slot_mode[(r, c, s)] for s in SLOTS}
        slots.append(sl)
        cl = [0, 0, 0, 0]
        for s in SLOTS:
            cl[table[s] - 1] = sl[s]
        clusters.append(tuple(cl))
    if len(slot_mode) != 4 * n:
        raise AssertionError("mode count mismatch")

    edge_by_modes = {frozenset((e.tail, e.head)): e.index for e in edges}

    def E(a, b):
        return edge_by_modes[frozenset((slot_mode[a], slot_mode[b]))]

    faces: list[Face] = []

    def add_face(i, j, verts, edge_ids):
        faces.append(
            Face(len(faces), "X" if _plaquette_is_x(i, j) else "Z", tuple(sorted(verts)), tuple(edge_ids), (i, j))
        )

    for i in range(d - 1):
        for j in range(d - 1):
            add_face(
                i,
                j,
                [vid(i, j), vid(i, j + 1), vid(i + 1, j), vid(i + 1, j + 1)],
                [
                    E((i, j, "E"), (i, j + 1, "W")),
                    E((i, j + 1, "S"), (i + 1, j + 1, "N")),
                    E((i + 1, j, "E"), (i + 1, j + 1, "W")),
                    E((i, j, "S"), (i + 1, j, "N")),
                ],
            )
    for j in range(0, d - 1, 2):
        add_face(-1, j, [vid(0, j), vid(0, j + 1)], [E((0, j, "E"), (0, j + 1, "W")), E((0, j, "N"), (0, j + 1, "N"))])
    for j in range(1, d - 1, 2):
        add_face(
            d - 1,
            j,
            [vid(d - 1, j), vid(d - 1, j + 1)],
            [E((d - 1, j, "E"), (d - 1, j + 1, "W")), E((d - 1, j, "S"), (d - 1, j + 1, "S"))],
        )
    for i in range(1, d - 1, 2):
        add_face(i, -1, [vid(i, 0), vid(i + 1, 0)], [E((i, 0, "S"), (i + 1, 0, "N")), E((i, 0, "W"), (i + 1, 0, "W"))])
    for i in range(0, d - 1, 2):
        add_face(
            i,
            d - 1,
            [vid(i, d - 1), vid(i + 1, d - 1)],
            [E((i, d - 1, "S"), (i + 1, d - 1, "N")), E((i, d - 1, "E"), (i + 1, d - 1, "E"))],
        )

    # logical faces: one boundary edge per segment, digon where present
    top = [E((0, j, "N"), (0, j + 1, "N")) if j % 2 == 0 else E((0, j, "E"), (0, j + 1, "W")) for j in range(d - 1)]
    bottom = [
        E((d - 1, j, "S"), (d - 1, j + 1, "S")) if j % 2 == 1 else E((d - 1, j, "E"), (d - 1, j + 1, "W"))
        for j in range(d - 1)
    ]
    left = [E((i, 0, "W"), (i + 1, 0, "W")) if i % 2 == 1 else E((i, 0, "S"), (i + 1, 0, "N")) for i in range(d - 1)]
    right = [
        E((i, d - 1, "E"), (i + 1, d - 1, "E")) if i % 2 == 0 else E((i, d - 1, "S"), (i + 1, d - 1, "N"))
        for i in range(d - 1)
    ]
    c1, c2, c3, c4 = corners
    logical_faces = {
        "left": LogicalFace("left", (c1, c2), tuple(vid(r, 0) for r in range(d)), tuple(left)),
        "top": LogicalFace("top", (c2, c3), tuple(vid(0, c) for c in range(d)), tuple(top)),
        "right": LogicalFace("right", (c3, c4), tuple(vid(r, d - 1) for r in range(d)), tuple(right)),
        "bottom": LogicalFace("bottom", (c1, c4), tuple(vid(d - 1, c) for c in range(d)), tuple(bottom)),
    }

    lay = CodeLayout(d, coords, clusters, slots, edges, faces, corners, logical_faces)
    lay._mode_pos = _mode_positions(lay)
    return lay


# ----------------------------------------------------------------------------
# orientation checks


def _face_boundary(lay: CodeLayout, face) -> tuple[list[tuple[int, int]], list[tuple[int, int]], tuple[float, float]]:
    """Link arrows, vertex arrows and a reference centre for a real or logical face."""
    if isinstance(face, LogicalFace):
        links = [(lay.edges[e].tail, lay.edges[e].head) for e in face.edges] + [face.virtual_edge]
        d = lay.d
        mid = (d - 1) / 2
        centre = {
            "top": (mid, float(d)),
            "bottom": (mid, -(d - 1) - float(d)),
            "left": (-float(d), -mid),
            "right": ((d - 1) + float(d), -mid),
        }[face.name]
    else:
        links = [(lay.edges[e].tail, lay.edges[e].head) for e in face.edges]
        centre = None
    boundary_modes = {m for arrow in links for m in arrow}
    arrows = []
    for u in face.vertices:
        cl = lay.clusters[u]
        local = [k + 1 for k, m in enumerate(cl) if m in boundary_modes]
        if len(local) != 2:
            raise LayoutError(f"vertex {u} meets face {face} in {len(local)} modes")
        op = _PAIR_OP.get(frozenset(local))
        if op is None:
            raise LayoutError(f"vertex {u}: modes {local} are not a logical pair")
        arrows.append((cl[op[0] - 1], cl[op[1] - 1]))
    if centre is None:
        pts = np.array([lay._mode_pos[m] for m in boundary_modes])
        centre = tuple(pts.mean(axis=0))
    return links, arrows, centre


def face_omega(lay: CodeLayout, face) -> int:
    """Product over boundary arrows of -1 for each arrow running clockwise."""
    links, arrows, (cx, cy) = _face_boundary(lay, face)
    modes = sorted({m for a in links for m in a})
    ang = {m: math.atan2(lay._mode_pos[m][1] - cy, lay._mode_pos[m][0] - cx) for m in modes}
    cyc = sorted(modes, key=lambda m: -ang[m])  # clockwise order
    nxt = {cyc[k]: cyc[(k + 1) % len(cyc)] for k in range(len(cyc))}
    omega = 1
    for p, q in links + arrows:
        if nxt[p] == q:
            omega = -omega
        elif nxt[q] != p:
            raise LayoutError(f"arrow {p}->{q} does not join neighbouring boundary modes")
    return omega


def _perm_sign(seq: Sequence[int]) -> int:
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def face_sign(lay: CodeLayout, face) -> int:
    """sigma with prod(link operators) = sigma * prod(vertex pair operators).

    Both sides are products of the same Majorana modes with the same power
    of i, so sigma is the relative parity of the two orderings.
    """
    links, arrows, _ = _face_boundary(lay, face)
    lhs = [m for a in links for m in a]
    rhs = [m for a in arrows for m in a]
    rank = {m: k for k, m in enumerate(sorted(lhs))}
    return _perm_sign([rank[m] for m in lhs]) * _perm_sign([rank[m] for m in rhs])


@dataclass
class OrientationReport:
    omegas: dict[str, int]

    @property
    def failures(self) -> list[str]:
        return [k for k, w in self.omegas.items() if w != -1]

    @property
    def ok(self) -> bool:
        return not self.failures


def check_orientations(lay: CodeLayout) -> OrientationReport:
    """Compute omega_f for every face and the four logical faces; each must be -1."""
    omegas = {f"face{f.index}": face_omega(lay, f) for f in lay.faces}
    for name, lf in lay.logical_faces.items():
        omegas[f"logical_{name}"] = face_omega(lay, lf)
    return OrientationReport(omegas)


def with_flipped_edge(lay: CodeLayout, edge_index: int) -> CodeLayout:
    """Copy of the layout with one edge's arrow reversed (for diagnostics)."""
    data = lay.to_dict()
    e = data["edges"][edge_index]
    e["tail"], e["head"] = e["head"], e["tail"]
    return CodeLayout.from_dict(data)


# ----------------------------------------------------------------------------
# syndromes and encodings


def face_syndromes(lay: CodeLayout, m: Sequence[int]) -> np.ndarray:
    """s_f = prod over boundary edges of m_e, for +-1 link outcomes."""
    m = np.asarray(m)
    if m.shape != (len(lay.edges),):
        raise LayoutError(f"need {len(lay.edges)} link outcomes, got shape {m.shape}")
    flips = (lay._face_edge_incidence @ (m < 0).astype(np.int64)) % 2
    return 1 - 2 * flips


def x_face_syndromes_from_vertex_outcomes(lay: CodeLayout, m: Sequence[int]) -> np.ndarray:
    """s_f = prod over f's qubits of m_u, for X faces (in layout.x_faces order)."""
    m = np.asarray(m)
    if m.shape != (lay.n,):
        raise LayoutError(f"need {lay.n} vertex outcomes, got shape {m.shape}")
    return 1 - 2 * ((lay._x_face_incidence @ (m < 0).astype(np.int64)) % 2)


def encoding_pairs(lay: CodeLayout, u: int, op: str) -> ModePair:
    """Mode pair (p, q, +1) with i c_p c_q equal to the requested operator on qubit u."""
    if op not in ENCODING:
        raise LayoutError(f"unknown operator {op!r}; expected one of {sorted(ENCODING)}")
    cl = lay.cluster(u)
    a, b = ENCODING[op]
    return ModePair(cl[a - 1], cl[b - 1], 1)


# ----------------------------------------------------------------------------
# schedules


@dataclass(frozen=True)
class Step:
    """One step of a windowed sweep.

    ``load`` lists qubits whose four-mode cluster state enters the window,
    ``attach`` lists pair states entering it, ``measure`` holds the pair
    operators projected at this step (the outcome is decided at run time),
    ``detach`` the pairs that leave afterwards.
    """

    vertex: int | None = None
    load: tuple[int, ...] = ()
    attach: tuple[ModePair, ...] = ()
    rotate: tuple[int, int] | None = None
    measure: tuple[ModePair, ...] = ()
    detach: tuple[tuple[int, int], ...] = ()


@dataclass
class Schedule:
    flavor: str
    basis: str | None
    steps: list[Step]
    peak_active: int
    final_modes: tuple[int, ...]


def corner_pairs(lay: CodeLayout, basis: str) -> tuple[ModePair, ModePair]:
    c1, c2, c3, c4 = lay.corners
    if basis == "X":
        return ModePair(c1, c2, 1), ModePair(c3, c4, 1)
    if basis == "Y":
        return ModePair(c1, c3, -1), ModePair(c2, c4, 1)
    raise LayoutError(f"basis must be 'X' or 'Y', got {basis!r}")


def vertex_order(lay: CodeLayout) -> list[int]:
    """Column by column, top to bottom (vertex indices are already in this order)."""
    return list(range(lay.n))


def link_order(lay: CodeLayout) -> list[int]:
    def key(e: Edge):
        (r1, c1), (r2, c2) = lay.coords[e.u], lay.coords[e.v]
        return (min(c1, c2), max(c1, c2), min(r1, r2), max(r1, r2), e.index)

    return [e.index for e in sorted(lay.edges, key=key)]


def measurement_schedule(lay: CodeLayout, flavor: str, basis: str = "X") -> Schedule:
    if flavor == "links_by_column":
        return _link_schedule(lay)
    if flavor == "vertices_by_column":
        return _vertex_schedule(lay, basis)
    raise LayoutError(f"unknown schedule flavor {flavor!r}")


def _link_schedule(lay: CodeLayout) -> Schedule:
    loaded: set[int] = set()
    active = 0
    peak = 0
    steps = []
    for k in link_order(lay):
        e = lay.edges[k]
        load = tuple(u for u in (e.u, e.v) if u not in loaded)
        loaded.update(load)
        active += 4 * len(load)
        peak = max(peak, active)
        steps.append(Step(load=load, measure=(e.pair,), detach=((e.tail, e.head),)))
        active -= 2
    return Schedule("links_by_column", None, steps, peak, tuple(lay.corners))


def _vertex_schedule(lay: CodeLayout, basis: str) -> Schedule:
    partner: dict[int, ModePair] = {}
    for e in lay.edges:
        partner[e.tail] = partner[e.head] = e.pair
    for pr in corner_pairs(lay, basis):
        partner[pr.p] = partner[pr.q] = pr
    attached: set[ModePair] = set()
    active = 0
    peak = 0
    steps = []
    for u in vertex_order(lay):
        cl = lay.clusters[u]
        attach = []
        for m in cl:
            pr = partner[m]
            if pr not in attached:
                attached.add(pr)
                attach.append(pr)
        active += 2 * len(attach)
        peak = max(peak, active)
        x = ModePair(cl[0], cl[1], 1)
        xs = ModePair(cl[2], cl[3], 1)
        steps.append(
            Step(
                vertex=u,
                attach=tuple(attach),
                rotate=(cl[1], cl[2]),
                measure=(x, xs),
                detach=((x.p, x.q), (xs.p, xs.q)),
            )
        )
        active -= 4
    return Schedule("vertices_by_column", basis, steps, peak, ())
