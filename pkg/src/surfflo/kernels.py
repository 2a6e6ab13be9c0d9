"""Windowed sweeps compiled from a :class:`~surfflo.layout.Schedule`.

Each active mode lives in a slot of a fixed ``W x W`` covariance buffer.
Slots are assigned once per schedule, so the compiled loops only see small
integer arrays.  The per-operation updates are the same numba functions
that back :class:`~surfflo.gaussian.GaussianState`.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numba
import numpy as np

from .gaussian import c4_covariance, measure_inplace, pair_after_measure, rotate_inplace
from .layout import CodeLayout, Schedule, measurement_schedule

TOL = 1e-12


class _SlotPool:
    def __init__(self):
        self.free: list[int] = []
        self.size = 0
        self.slot: dict[int, int] = {}

    def take(self, mode: int) -> int:
        s = heapq.heappop(self.free) if self.free else self._grow()
        self.slot[mode] = s
        return s

    def _grow(self) -> int:
        self.size += 1
        return self.size - 1

    def release(self, mode: int) -> None:
        heapq.heappush(self.free, self.slot.pop(mode))


@dataclass
class VertexProgram:
    """Compiled vertices_by_column schedule (storage sweeps)."""

    width: int
    vertex: np.ndarray  # (n,) vertex processed at each step
    att_ptr: np.ndarray
    att_a: np.ndarray
    att_b: np.ndarray
    att_sign: np.ndarray
    cl: np.ndarray  # (n, 4) slots of the cluster modes


@dataclass
class LinkProgram:
    """Compiled links_by_column schedule (preparation sweeps)."""

    width: int
    edge: np.ndarray  # (E,) edge measured at each step
    load_ptr: np.ndarray
    load_vertex: np.ndarray
    load_slots: np.ndarray  # (n, 4)
    tail: np.ndarray
    head: np.ndarray
    corner_slots: np.ndarray  # (4,)


def compile_vertex_program(lay: CodeLayout, basis: str = "X", schedule: Schedule | None = None) -> VertexProgram:
    sched = schedule or measurement_schedule(lay, "vertices_by_column", basis)
    pool = _SlotPool()
    att_ptr = [0]
    att_a, att_b, att_sign = [], [], []
    cl_slots = []
    verts = []
    for st in sched.steps:
        for pr in st.attach:
            att_a.append(pool.take(pr.p))
            att_b.append(pool.take(pr.q))
            att_sign.append(pr.sign)
        att_ptr.append(len(att_a))
        cl = lay.clusters[st.vertex]
        cl_slots.append([pool.slot[m] for m in cl])
        verts.append(st.vertex)
        for p, q in st.detach:
            pool.release(p)
            pool.release(q)
    i64 = lambda x: np.asarray(x, dtype=np.int64)  # noqa: E731
    return VertexProgram(
        pool.size,
        i64(verts),
        i64(att_ptr),
        i64(att_a),
        i64(att_b),
        np.asarray(att_sign, dtype=np.float64),
        i64(cl_slots).reshape(-1, 4),
    )


def compile_link_program(lay: CodeLayout, schedule: Schedule | None = None) -> LinkProgram:
    sched = schedule or measurement_schedule(lay, "links_by_column")
    pool = _SlotPool()
    load_ptr = [0]
    load_vertex, load_slots, tail, head, edge = [], [], [], [], []
    edge_of = {(e.tail, e.head): e.index for e in lay.edges}
    for st in sched.steps:
        for u in st.load:
            load_vertex.append(u)
            load_slots.append([pool.take(m) for m in lay.clusters[u]])
        load_ptr.append(len(load_vertex))
        (pr,) = st.measure
        tail.append(pool.slot[pr.p])
        head.append(pool.slot[pr.q])
        edge.append(edge_of[(pr.p, pr.q)])
        for p, q in st.detach:
            pool.release(p)
            pool.release(q)
    corner_slots = [pool.slot[m] for m in lay.corners]
    i64 = lambda x: np.asarray(x, dtype=np.int64)  # noqa: E731
    return LinkProgram(
        pool.size,
        i64(edge),
        i64(load_ptr),
        i64(load_vertex),
        i64(load_slots).reshape(-1, 4),
        i64(tail),
        i64(head),
        i64(corner_slots),
    )


@numba.njit(cache=True, nogil=True)
def _vertex_sweep(width, att_ptr, att_a, att_b, att_sign, cl, eta, uniforms, sample, m_out):
    """Returns (log weight, max |P(+)+P(-)-1|, ok)."""
    M = np.zeros((width, width))
    n = cl.shape[0]
    logw = 0.0
    dev = 0.0
    for t in range(n):
        for k in range(att_ptr[t], att_ptr[t + 1]):
            a = att_a[k]
            b = att_b[k]
            M[a, b] = att_sign[k]
            M[b, a] = -att_sign[k]
        s1 = cl[t, 0]
        s2 = cl[t, 1]
        s3 = cl[t, 2]
        s4 = cl[t, 3]
        # exp(i eta Zbar) with Zbar = i c2 c3 is exp(-eta c2 c3)
        rotate_inplace(M, s2, s3, -eta[t])
        mt = 1
        if sample:
            kappa = 2.0 if t < n - 1 else 1.0
            l1p, x34 = pair_after_measure(M, s1, s2, s3, s4)
            pp = 0.0
            if l1p > 1e-12:
                pp = kappa * l1p * 0.5 * (1.0 + x34)
            l1m, y34 = pair_after_measure(M, s2, s1, s3, s4)
            pm = 0.0
            if l1m > 1e-12:
                pm = kappa * l1m * 0.5 * (1.0 - y34)
            dev = max(dev, abs(pp + pm - 1.0))
            if uniforms[t] >= pp / (pp + pm):
                mt = -1
        m_out[t] = mt
        l1 = measure_inplace(M, s1, s2, mt)
        if l1 <= 1e-12:
            return -np.inf, dev, False
        l2 = measure_inplace(M, s3, s4, mt)
        if l2 <= 1e-12:
            return -np.inf, dev, False
        logw += math.log(l1) + math.log(l2)
        M[s1, s2] = 0.0
        M[s2, s1] = 0.0
        M[s3, s4] = 0.0
        M[s4, s3] = 0.0
    return logw, dev, True


@numba.njit(cache=True, nogil=True)
def _link_sweep(width, load_ptr, load_vertex, load_slots, tail, head, corner_slots, bloch, uniforms, m_out, corner_out):
    """Returns the log probability of the sampled outcomes."""
    M = np.zeros((width, width))
    E = tail.shape[0]
    logp = 0.0
    for t in range(E):
        for k in range(load_ptr[t], load_ptr[t + 1]):
            u = load_vertex[k]
            bx = bloch[u, 0]
            by = bloch[u, 1]
            bz = bloch[u, 2]
            blk = np.array(
                [
                    [0.0, bx, -by, bz],
                    [-bx, 0.0, bz, by],
                    [by, -bz, 0.0, bx],
                    [-bz, -by, -bx, 0.0],
                ]
            )
            for i in range(4):
                for j in range(4):
                    M[load_slots[k, i], load_slots[k, j]] = blk[i, j]
        p = tail[t]
        q = head[t]
        lp = 0.5 * (1.0 + M[p, q])
        mt = 1 if uniforms[t] < lp else -1
        if mt == 1 and lp <= 1e-12:
            mt = -1
        elif mt == -1 and 1.0 - lp <= 1e-12:
            mt = 1
        lam = measure_inplace(M, p, q, mt)
        logp += math.log(lam)
        m_out[t] = mt
        M[p, q] = 0.0
        M[q, p] = 0.0
    for i in range(4):
        for j in range(4):
            corner_out[i, j] = M[corner_slots[i], corner_slots[j]]
    return logp


def vertex_sweep(prog: VertexProgram, eta: np.ndarray, uniforms: np.ndarray | None = None):
    """Run a storage sweep.

    ``eta`` is indexed by vertex.  With ``uniforms`` the X outcomes are
    sampled; without, every outcome is forced to +1.  Returns
    ``(m, log_weight, max_prob_deviation, ok)`` with ``m`` indexed by vertex.
    """
    n = prog.cl.shape[0]
    eta_steps = np.ascontiguousarray(np.asarray(eta, dtype=np.float64)[prog.vertex])
    sample = uniforms is not None
    u = np.ascontiguousarray(uniforms, dtype=np.float64) if sample else np.zeros(n)
    m_steps = np.empty(n, dtype=np.int64)
    logw, dev, ok = _vertex_sweep(
        prog.width, prog.att_ptr, prog.att_a, prog.att_b, prog.att_sign, prog.cl, eta_steps, u, sample, m_steps
    )
    m = np.empty(n, dtype=np.int64)
    m[prog.vertex] = m_steps
    return m, logw, dev, ok


def link_sweep(prog: LinkProgram, bloch: np.ndarray, uniforms: np.ndarray):
    """Run a preparation sweep.

    Returns ``(m, corner_cov, log_prob)`` with ``m`` indexed by edge and
    ``corner_cov`` the 4x4 covariance of (c1, c2, c3, c4).
    """
    E = prog.tail.shape[0]
    m_steps = np.empty(E, dtype=np.int64)
    corner = np.empty((4, 4))
    logp = _link_sweep(
        prog.width,
        prog.load_ptr,
        prog.load_vertex,
        prog.load_slots,
        prog.tail,
        prog.head,
        prog.corner_slots,
        np.ascontiguousarray(bloch, dtype=np.float64),
        np.ascontiguousarray(uniforms, dtype=np.float64),
        m_steps,
        corner,
    )
    m = np.empty(E, dtype=np.int64)
    m[prog.edge] = m_steps
    return m, corner, logp


__all__ = [
    "VertexProgram",
    "LinkProgram",
    "compile_vertex_program",
    "compile_link_program",
    "vertex_sweep",
    "link_sweep",
    "c4_covariance",
]
