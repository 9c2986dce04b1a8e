"""Numerical extremal length on square complexes.

Three layers:

* ``modulus_resistance`` - modulus of an annulus as the effective resistance
  of the unit-conductance cell network between its two boundaries (exact for
  flat cylinders at every refinement).
* ``shortest_cycle`` - minimum-weight closed walk in a homology class, found
  by unrolling the mesh into a finite window of its homology cover and
  running Dijkstra from a lift to its deck translate.
* ``discrete_ext_length`` - the variational sup of L^2/A over edge metrics,
  solved as a cutting-plane quadratic program with the cycle oracle as
  separation; ``multicurve_ext`` runs the disjoint-annuli program for
  weighted curve systems on top of it.

Edge weights model rho * (edge length); the area functional is
sum c_e rho_e^2 with c_e = 1 on glued edges and 1/2 on boundary edges (each
cell spreads its area over the sides it touches), which makes flat cylinders
exactly solvable at every refinement.

Everything is deterministic: fixed iteration orders, direct sparse solves,
no randomness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra
from scipy.sparse.linalg import spsolve

from .mesh import EdgeCycle, MeshError, QuadMesh


class SolverError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# annulus modulus via the cell network


def _electrode_sides(mesh: QuadMesh, name_or_sides):
    if isinstance(name_or_sides, str):
        if name_or_sides not in mesh.boundaries:
            raise SolverError(f"unknown boundary set {name_or_sides!r}")
        return mesh.boundaries[name_or_sides]
    return list(name_or_sides)


def modulus_resistance(mesh: QuadMesh, source=None, sink=None) -> float:
    """Effective resistance between two boundary pieces of the cell network.

    Cells are nodes joined by unit conductances across glued sides; each
    boundary side ties its cell to an electrode through conductance 2 (half a
    cell).  Defaults to the mesh's two named boundary sets when there are
    exactly two.
    """
    if source is None and sink is None:
        names = sorted(mesh.boundaries)
        if len(names) != 2:
            raise SolverError(
                f"mesh has {len(names)} named boundary sets; pass source/sink explicitly"
            )
        source, sink = names
    src = _electrode_sides(mesh, source)
    snk = _electrode_sides(mesh, sink)
    if not src or not snk:
        raise SolverError("electrodes must be nonempty")
    if set(src) & set(snk):
        raise SolverError("electrodes overlap")

    n = mesh.n_faces
    diag = np.zeros(n)
    rows, cols, vals = [], [], []
    for sides in mesh.edge_sides:
        if len(sides) == 2:
            (f1, _), (f2, _) = sides
            rows.extend((f1, f2))
            cols.extend((f2, f1))
            vals.extend((-1.0, -1.0))
            diag[f1] += 1.0
            diag[f2] += 1.0
    rhs = np.zeros(n)
    for f, _s in src:
        diag[f] += 2.0
        rhs[f] += 2.0  # source electrode held at potential 1
    for f, _s in snk:
        diag[f] += 2.0
    rows.extend(range(n))
    cols.extend(range(n))
    vals.extend(diag)
    lap = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    u = spsolve(lap.tocsc(), rhs)
    if not np.all(np.isfinite(u)):
        raise SolverError("singular network: are the electrodes connected through the mesh?")
    current = float(sum(2.0 * (1.0 - u[f]) for f, _s in src))
    if current <= 1e-300:
        raise SolverError("no current flows; electrodes are disconnected")
    return 1.0 / current


# ---------------------------------------------------------------------------
# shortest cycle in a homology class


def _edge_shifts(mesh: QuadMesh):
    """Per-edge homology shift vectors from the mesh cocycle basis."""
    cocycles = mesh.cocycles()
    dim = len(cocycles)
    shifts = {}
    for axis, u in enumerate(cocycles):
        for e, v in u.items():
            vec = shifts.setdefault(e, [0] * dim)
            vec[axis] = v
    return {e: tuple(v) for e, v in shifts.items()}, dim


def _cycle_skeleton(mesh: QuadMesh, cycle: EdgeCycle):
    """Partial homology shifts along the cycle: the unrolling skeleton."""
    shifts, dim = _edge_shifts(mesh)
    zero = (0,) * dim
    cur = zero
    skel = {cur}
    for e, sg in cycle.steps:
        sigma = shifts.get(e, zero)
        cur = tuple(a + sg * b for a, b in zip(cur, sigma))
        skel.add(cur)
    return tuple(sorted(skel)), cur


def _sheet_window(skeleton, target, padding):
    """Shift vectors within L1 distance ``padding`` of the unrolling skeleton.

    The skeleton holds the partial shifts of the class cycle plus the straight
    segment from 0 to the class, so the window covers both the cycle's own
    shape and direct representatives.
    """
    dim = len(target)
    steps = sum(abs(t) for t in target)
    hull = set(skeleton) | {(0,) * dim, tuple(target)}
    for j in range(1, max(steps, 1)):
        hull.add(tuple(int(round(t * j / steps)) for t in target))
    window = set(hull)
    frontier = set(hull)
    for _ in range(padding):
        nxt = set()
        for pt in frontier:
            for i in range(dim):
                for d in (-1, 1):
                    q = pt[:i] + (pt[i] + d,) + pt[i + 1:]
                    if q not in window:
                        nxt.add(q)
        window |= nxt
        frontier = nxt
    return sorted(window)


class _CoverGraph:
    """Sparsity pattern of the homology-cover window; weights plug in per solve."""

    def __init__(self, mesh: QuadMesh, skeleton, target, padding):
        self.mesh = mesh
        self.n_base = mesh.n_vertices
        window = _sheet_window(skeleton, target, padding)
        self.sheets = {sh: i for i, sh in enumerate(window)}
        self.shift_list = window
        self.n_nodes = len(window) * self.n_base

        shifts, dim = _edge_shifts(mesh)
        zero = (0,) * dim
        groups = {}
        for e in range(mesh.n_edges):
            groups.setdefault(shifts.get(e, zero), []).append(e)

        tails = np.asarray(mesh.edge_tail, dtype=np.int64)
        heads = np.asarray(mesh.edge_head, dtype=np.int64)
        row_parts, col_parts, eid_parts = [], [], []
        self.lookup = {}
        for sigma in sorted(groups):
            eidx = np.asarray(groups[sigma], dtype=np.int64)
            t, h = tails[eidx], heads[eidx]
            for e in groups[sigma]:
                self.lookup.setdefault((mesh.edge_tail[e], mesh.edge_head[e], sigma), []).append((e, 1))
                nsig = tuple(-x for x in sigma)
                self.lookup.setdefault((mesh.edge_head[e], mesh.edge_tail[e], nsig), []).append((e, -1))
            for sh, si in self.sheets.items():
                sh2 = tuple(a + b for a, b in zip(sh, sigma))
                sj = self.sheets.get(sh2)
                if sj is None:
                    continue
                a = si * self.n_base + t
                b = sj * self.n_base + h
                row_parts.extend((a, b))
                col_parts.extend((b, a))
                eid_parts.extend((eidx, eidx))
        self.rows = np.concatenate(row_parts)
        self.cols = np.concatenate(col_parts)
        self.eids = np.concatenate(eid_parts)
        for key in self.lookup:
            self.lookup[key].sort()

    def graph(self, weights):
        vals = np.asarray(weights, dtype=float)[self.eids]
        return sp.csr_matrix((vals, (self.rows, self.cols)), shape=(self.n_nodes, self.n_nodes))

    def node(self, shift, vertex):
        return self.sheets[shift] * self.n_base + vertex

    def reconstruct(self, preds, start, goal):
        chain = [goal]
        node = goal
        while node != start:
            node = int(preds[node])
            if node < 0:
                raise SolverError("broken predecessor chain in the cover")
            chain.append(node)
        chain.reverse()
        steps = []
        for a, b in zip(chain, chain[1:]):
            sa, va = divmod(a, self.n_base)
            sb, vb = divmod(b, self.n_base)
            dshift = tuple(x - y for x, y in zip(self.shift_list[sb], self.shift_list[sa]))
            cands = self.lookup.get((va, vb, dshift))
            if not cands:
                raise SolverError("no base edge matches a cover step")
            e, sg = cands[0]
            steps.append((e, sg))
        return EdgeCycle(self.mesh, steps)


def _cover_graph(mesh: QuadMesh, skeleton, target, padding) -> _CoverGraph:
    cache = getattr(mesh, "_cover_cache", None)
    if cache is None:
        cache = {}
        setattr(mesh, "_cover_cache", cache)
    key = (skeleton, tuple(target), int(padding))
    if key not in cache:
        cache[key] = _CoverGraph(mesh, skeleton, target, padding)
    return cache[key]


def _seam_vertices(mesh: QuadMesh, target):
    """Anchor vertices every cycle in the class must visit: endpoints of the
    smallest-support cocycle among axes the class pairs nontrivially with."""
    shifts, dim = _edge_shifts(mesh)
    axes = [i for i in range(dim) if target[i] != 0]
    best = None
    for axis in axes:
        verts = set()
        for e, sigma in shifts.items():
            if sigma[axis] != 0:
                verts.add(mesh.edge_tail[e])
        if best is None or len(verts) < len(best):
            best = verts
    return sorted(best)


def _translate_cycles(mesh, weights, skeleton, target, padding, sources, limit):
    """Dijkstra from each source lift to its deck translate.

    Returns (best length, {source: (length, EdgeCycle)}) for lengths < limit.
    """
    cover = _cover_graph(mesh, skeleton, target, padding)
    graph = cover.graph(weights)
    zero = (0,) * len(target)
    tgt = tuple(target)
    best = math.inf
    found = {}
    for v in sources:
        start = cover.node(zero, v)
        goal = cover.node(tgt, v)
        dist, preds = dijkstra(
            graph, directed=True, indices=start, return_predecessors=True, limit=limit
        )
        d = float(dist[goal])
        if not math.isfinite(d):
            continue
        found[v] = (d, cover.reconstruct(preds, start, goal))
        best = min(best, d)
    return best, found


def shortest_cycle(
    mesh: QuadMesh,
    weights,
    cycle: EdgeCycle,
    padding: int = 2,
    max_padding: int = 8,
    check_stability: bool = True,
):
    """Minimum-weight closed walk in the homology class of ``cycle``.

    The mesh is unrolled along the class: vertices lift to (vertex, shift)
    pairs in an L1 window of radius ``padding`` around the segment from 0 to
    the class, and the minimum cycle is the shortest path from a lift to its
    deck translate, minimized over seam anchors.  The length is nonincreasing
    in the padding; stability is asserted by re-solving at padding + 2, and
    the window grows until stable or ``max_padding`` is exceeded (error).

    Returns (length, EdgeCycle).
    """
    skeleton, target = _cycle_skeleton(mesh, cycle)
    if not any(target):
        raise MeshError("cycle is not essential: zero homology class")
    if len(weights) != mesh.n_edges:
        raise SolverError("metric does not match the mesh")
    sources = _seam_vertices(mesh, target)
    w = padding
    best, found = _translate_cycles(mesh, weights, skeleton, target, w, sources, math.inf)
    if not found:
        raise SolverError("no representative found inside the cover window")
    while check_stability:
        best2, found2 = _translate_cycles(mesh, weights, skeleton, target, w + 2, sources, math.inf)
        if best2 >= best - 1e-9 * max(1.0, best):
            break
        w += 2
        best, found = best2, found2
        if w > max_padding:
            raise SolverError(f"shortest cycle still improving at padding {w}: {best2} < {best}")
    length, geod = min(found.values(), key=lambda lc: (lc[0], lc[1].canonical_key()))
    return length, geod


# ---------------------------------------------------------------------------
# cutting-plane extremal length


def _hildreth_sweeps_py(indptr, indices, data, b, gii_half, c_inv, lam, rho, n_sweeps):
    m = len(b)
    for _ in range(n_sweeps):
        for i in range(m):
            li = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                li += data[k] * rho[indices[k]]
            new = lam[i] + (b[i] - li) / gii_half[i]
            if new < 0.0:
                new = 0.0
            d = new - lam[i]
            if d != 0.0:
                lam[i] = new
                half = 0.5 * d
                for k in range(indptr[i], indptr[i + 1]):
                    e = indices[k]
                    rho[e] += half * data[k] * c_inv[e]
    return n_sweeps


try:  # jitted sweep kernel; the pure-python loop is the fallback
    from numba import njit

    _hildreth_sweeps = njit(cache=True)(_hildreth_sweeps_py)
except Exception:  # pragma: no cover
    _hildreth_sweeps = _hildreth_sweeps_py


class _MetricQP:
    """min sum c_e rho_e^2  s.t.  row_i . rho >= rhs_i.

    Solved through the dual  max_{lam >= 0} rhs.lam - (1/4) |C^T lam|^2_{1/c}
    by Hildreth's cyclic coordinate ascent, warm-started across cutting-plane
    rounds (constraint rows are nonnegative, so the primal reconstruction
    rho = diag(1/(2c)) C^T lam is automatically a metric).  The solve may be
    slightly inexact: any lam >= 0 certifies the upper bound 1/dual_value and
    any metric certifies the lower bound, so the bounds stay rigorous.
    """

    def __init__(self, area_coeff, tol=1e-8, max_sweeps=40_000):
        self.c = np.asarray(area_coeff, dtype=float)
        self.c_inv = 1.0 / self.c
        self.tol = tol
        self.max_sweeps = max_sweeps
        self._rows_e = []
        self._rows_cnt = []
        self.rhs = []
        self.lam = np.zeros(0)
        self._mat = None

    @property
    def n_rows(self):
        return len(self.rhs)

    def add_row(self, row: dict, rhs: float):
        es = sorted(row)
        self._rows_e.append(np.asarray(es, dtype=np.int64))
        self._rows_cnt.append(np.asarray([row[e] for e in es], dtype=float))
        self.rhs.append(float(rhs))
        self.lam = np.append(self.lam, 0.0)
        self._mat = None

    def _matrix(self):
        if self._mat is None:
            indptr = np.zeros(self.n_rows + 1, dtype=np.int64)
            np.cumsum([len(e) for e in self._rows_e], out=indptr[1:])
            indices = np.concatenate(self._rows_e) if self._rows_e else np.zeros(0, dtype=np.int64)
            data = np.concatenate(self._rows_cnt) if self._rows_cnt else np.zeros(0)
            self._mat = sp.csr_matrix(
                (data, indices, indptr), shape=(self.n_rows, len(self.c))
            )
        return self._mat

    def row_lengths(self, rho):
        return self._matrix() @ rho

    def dual_value(self, lam=None):
        lam = self.lam if lam is None else lam
        mat = self._matrix()
        load = mat.T @ lam
        return float(np.dot(self.rhs, lam) - 0.25 * np.dot(load * load, self.c_inv))

    def _polish(self, mat, b, lam):
        """Newton step on the bindingly-active rows; adopted only if it helps."""
        act = np.flatnonzero(lam > 1e-12 * max(1.0, float(np.max(lam))))
        if act.size == 0 or act.size > 1500:
            return None
        sub = mat[act]
        gram = (sub.multiply(self.c_inv) @ sub.T).toarray()
        ridge = 1e-13 * max(1.0, float(np.max(np.diag(gram))))
        gram[np.diag_indices_from(gram)] += ridge
        try:
            sol = np.linalg.solve(gram, 2.0 * b[act])
        except np.linalg.LinAlgError:
            return None
        cand = np.zeros_like(lam)
        cand[act] = np.maximum(sol, 0.0)
        return cand

    def solve(self):
        mat = self._matrix()
        b = np.asarray(self.rhs)
        gii_half = 0.5 * np.asarray(
            [float(np.dot(cnt * cnt, self.c_inv[es])) for es, cnt in zip(self._rows_e, self._rows_cnt)]
        )
        lam = self.lam.copy()
        rho = np.maximum(0.5 * self.c_inv * (mat.T @ lam), 0.0)

        def feasibility(v):
            return float(np.min(mat @ v - b)) if len(b) else 0.0

        chunk = 25
        done = 0
        since_polish = 0
        while done < self.max_sweeps:
            _hildreth_sweeps(
                mat.indptr, mat.indices, mat.data, b, gii_half, self.c_inv, lam, rho, chunk
            )
            done += chunk
            since_polish += chunk
            worst = feasibility(np.maximum(rho, 0.0))
            if worst > -self.tol:
                break
            if since_polish >= 100:
                since_polish = 0
                cand = self._polish(mat, b, lam)
                if cand is not None:
                    cand_rho = np.maximum(0.5 * self.c_inv * (mat.T @ cand), 0.0)
                    if feasibility(cand_rho) > worst:
                        lam = cand
                        rho = cand_rho
                        if feasibility(cand_rho) > -self.tol:
                            break
        self.lam = lam
        rho = np.maximum(0.5 * self.c_inv * (mat.T @ lam), 0.0)
        area = float(np.sum(self.c * rho * rho))
        return rho, area


def _solve_metric_qp(rows, rhs, area_coeff):
    qp = _MetricQP(area_coeff)
    for row, r in zip(rows, rhs):
        qp.add_row(row, r)
    return qp.solve()


def _class_flow_metric(mesh: QuadMesh, cycle: EdgeCycle):
    """Warm-start metric from the minimum-energy circulation in the class.

    The energy minimizer over divergence-free flows with the cycle's homology
    fluxes is the harmonic shape of the extremal metric; |F| seeds the oracle
    so the first constraint batches already contain near-binding geodesics.
    Falls back to the uniform metric if the linear solve misbehaves.
    """
    try:
        from scipy.sparse.linalg import lsqr

        n_e, n_v = mesh.n_edges, mesh.n_vertices
        theta = np.asarray(cycle.homology(), dtype=float)
        c = np.asarray(mesh.edge_area_coeff)
        rows, cols, vals = [], [], []
        for e in range(n_e):
            rows.extend((mesh.edge_tail[e], mesh.edge_head[e]))
            cols.extend((e, e))
            vals.extend((-1.0, 1.0))
        inc = sp.csr_matrix((vals, (rows, cols)), shape=(n_v, n_e))
        rows, cols, vals = [], [], []
        for i, u in enumerate(mesh.cocycles()):
            for e, v in u.items():
                rows.append(i)
                cols.append(e)
                vals.append(float(v))
        coc = sp.csr_matrix((vals, (rows, cols)), shape=(len(mesh.cocycles()), n_e))
        a = sp.vstack([inc, coc]).tocsr()
        m = (a @ sp.diags(c) @ a.T).tocsr()
        rhs = np.concatenate([np.zeros(n_v), theta])
        y = lsqr(m, rhs, atol=1e-12, btol=1e-12, iter_lim=8 * (n_v + n_e))[0]
        flow = c * (a.T @ y)
        rho = np.abs(flow)
        if not np.all(np.isfinite(rho)) or float(np.max(rho)) <= 0.0:
            raise ValueError("degenerate flow")
        return rho
    except Exception:
        return np.ones(mesh.n_edges)


@dataclass
class ExtResult:
    """Certified output of the discrete extremal-length program.

    ``value`` is L^2/A of the final admissible metric (a lower bound for the
    discrete sup); ``upper`` is 1/A of the relaxed program; the gap closes as
    the oracle tolerance does.
    """

    value: float
    lower: float
    upper: float
    shortest: float
    area: float
    rounds: int
    metric: np.ndarray = field(repr=False)

    def __float__(self):
        return self.value

    @property
    def gap(self):
        return self.upper - self.lower


def discrete_ext_length(
    mesh: QuadMesh,
    cycle: EdgeCycle,
    tol: float = 1e-6,
    max_rounds: int = 600,
    stall_rounds: int = 50,
    padding: int = 1,
    batch: int = 64,
) -> ExtResult:
    """sup of L^2/A over edge metrics for the homology class of ``cycle``.

    Cutting planes: keep a set of constraint cycles, minimize the area
    subject to all kept cycles having length >= 1, then ask the translate
    oracle for violated cycles; finish when nothing is shorter than 1 - tol
    (certified against a widened cover window).  The first constraint batch
    comes from geodesics of the harmonic class-flow metric, which seeds the
    near-binding family.  No progress over ``stall_rounds`` raises with the
    best bound pair in the message.
    """
    if not cycle.is_essential():
        raise MeshError("cycle is not essential: zero homology class")
    skeleton, target = _cycle_skeleton(mesh, cycle)
    sources = _seam_vertices(mesh, target)
    coarse = sources[:: max(1, (len(sources) + 7) // 8)]

    tight = min(1e-7, 0.1 * tol)
    qp = _MetricQP(mesh.edge_area_coeff, tol=1e-3)
    keys = {cycle.canonical_key()}
    qp.add_row(cycle.edge_multiplicities(), 1.0)
    seed_metric = _class_flow_metric(mesh, cycle)
    _b0, found0 = _translate_cycles(mesh, seed_metric, skeleton, target, padding, sources, math.inf)
    for _v, (_d, cyc) in sorted(found0.items()):
        key = cyc.canonical_key()
        if key not in keys:
            keys.add(key)
            qp.add_row(cyc.edge_multiplicities(), 1.0)
    rho, area = qp.solve()

    srcs = coarse
    rounds = 0
    floor_best = -math.inf
    since_progress = 0
    while True:
        rounds += 1
        if rounds > max_rounds:
            raise SolverError(
                f"no convergence in {max_rounds} rounds: bounds "
                f"[{(1.0 - tol) ** 2 / area}, {1.0 / area}]"
            )
        best, found = _translate_cycles(mesh, rho, skeleton, target, padding, srcs, limit=1.0)
        violated = {v: dc for v, dc in found.items() if dc[0] < 1.0 - tol}
        if not violated:
            if srcs != sources:
                srcs = sources
                continue
            best, found2 = _translate_cycles(
                mesh, rho, skeleton, target, padding + 2, sources, limit=1.0
            )
            violated = {v: dc for v, dc in found2.items() if dc[0] < 1.0 - tol}
            if not violated:
                break
        floor = min(d for d, _c in violated.values())
        if floor > floor_best + 1e-12:
            floor_best = floor
            since_progress = 0
        else:
            since_progress += 1
        added = 0
        for _v, (d, cyc) in sorted(violated.items()):
            key = cyc.canonical_key()
            if key in keys:
                continue
            keys.add(key)
            qp.add_row(cyc.edge_multiplicities(), 1.0)
            added += 1
            if added >= batch:
                break
        if added == 0 and qp.tol > tight:
            # known rows are the violation: the inner solve was too loose
            qp.tol = max(tight, 0.03 * (1.0 - floor))
            rho, area = qp.solve()
            srcs = coarse
            continue
        if added == 0 or since_progress > stall_rounds:
            raise SolverError(
                "cutting plane stalled: bounds "
                f"[{floor * floor / area}, {1.0 / area}] after {rounds} rounds"
            )
        qp.tol = min(1e-3, max(0.3 * (1.0 - floor_best), tight))
        rho, area = qp.solve()
        srcs = coarse

    best, _found = _translate_cycles(mesh, rho, skeleton, target, padding + 2, sources, limit=1.5)
    shortest = min(best, 1.5)
    lower = shortest * shortest / area
    dual = qp.dual_value()
    upper = 1.0 / dual if dual > 0.0 else math.inf
    return ExtResult(
        value=lower,
        lower=lower,
        upper=max(upper, lower),
        shortest=shortest,
        area=area,
        rounds=rounds,
        metric=rho,
    )


# ---------------------------------------------------------------------------
# disjoint-annuli program for multicurves


def _incident_faces(mesh: QuadMesh, cycle: EdgeCycle):
    faces = set()
    for e, _sg in cycle.steps:
        for f, _s in mesh.edge_sides[e]:
            faces.add(f)
    return faces


def _neighbours(mesh: QuadMesh, f):
    out = []
    for s in range(4):
        partner = mesh.gluings.get((f, s))
        if partner is not None:
            out.append(partner[0])
    return out


def _cell_partition(mesh: QuadMesh, seed_sets):
    """Label cells by multi-source BFS; ties resolve to the lower label."""
    n = mesh.n_faces
    label = [-1] * n
    frontier = []
    for idx, seeds in enumerate(seed_sets):
        for f in sorted(seeds):
            if label[f] == -1:
                label[f] = idx
                frontier.append(f)
    while frontier:
        nxt = []
        for f in frontier:
            for g in sorted(_neighbours(mesh, f)):
                if label[g] == -1:
                    label[g] = label[f]
                    nxt.append(g)
        frontier = nxt
    return label


def _submesh(mesh: QuadMesh, faces, cycle: EdgeCycle):
    """Sub-mesh on a face subset with the induced copy of ``cycle``.

    Gluings to cells outside the subset are severed and become boundary.
    """
    faces = sorted(faces)
    fmap = {f: i for i, f in enumerate(faces)}
    gluings = {}
    for (f, s), (f2, s2) in mesh.gluings.items():
        if f in fmap and f2 in fmap:
            gluings[(fmap[f], s)] = (fmap[f2], s2)
    sub = QuadMesh(len(faces), gluings)
    steps = []
    for e, sg in cycle.steps:
        eid = None
        for f, s in mesh.edge_sides[e]:
            if f in fmap:
                eid = sub.side_edge[(fmap[f], s)]
                break
        if eid is None:
            raise SolverError("curve leaves its partition piece")
        steps.append((eid, sg))
    return sub, EdgeCycle(sub, steps)


@dataclass
class MulticurveResult:
    """Upper-bound value of the disjoint-annuli program plus its certificate.

    ``value`` = sum w_i^2 * Ext(core_i within piece_i), i.e. the reciprocal
    moduli of the best annuli the pieces contain; ``lower_bound`` is the
    single-metric certificate (sum w_i L_i)^2 / A, always <= value.
    """

    value: float
    lower_bound: float
    upper: float
    piece_values: list
    labels: list = field(repr=False)

    def __float__(self):
        return self.value


def multicurve_ext(
    mesh: QuadMesh,
    cycles,
    weights,
    tol: float = 1e-6,
    improve_rounds: int = 2,
) -> MulticurveResult:
    """Disjoint-annuli value for a weighted system of disjoint curve classes.

    Cells are partitioned into neighbourhoods of the curves (combinatorial
    Voronoi, then greedy wall moves while the objective decreases); each
    piece contributes weight^2 times the extremal length of its core inside
    the piece.  Zero weights drop their class.
    """
    pairs = [(c, w) for c, w in zip(cycles, weights) if w != 0.0]
    if not pairs:
        raise SolverError("all weights vanish")
    if any(w < 0 for _c, w in pairs):
        raise SolverError("weights must be positive")
    cycles = [c for c, _w in pairs]
    ws = [float(w) for _c, w in pairs]
    vsets = [set(c.vertices()) for c in cycles]
    for i in range(len(cycles)):
        for j in range(i + 1, len(cycles)):
            if vsets[i] & vsets[j]:
                raise SolverError("curve classes intersect; annuli cannot be made disjoint")

    seeds = [_incident_faces(mesh, c) for c in cycles]
    labels = _cell_partition(mesh, seeds)
    if any(l < 0 for l in labels):
        raise SolverError("partition does not cover the mesh")

    def evaluate(lbls):
        total = upper = 0.0
        pieces = []
        for idx, (cyc, w) in enumerate(zip(cycles, ws)):
            faces = [f for f in range(mesh.n_faces) if lbls[f] == idx]
            sub, subcyc = _submesh(mesh, faces, cyc)
            res = discrete_ext_length(sub, subcyc, tol=tol)
            pieces.append(res)
            total += w * w * res.value
            upper += w * w * res.upper
        return total, upper, pieces

    value, upper, pieces = evaluate(labels)
    for _ in range(improve_rounds if len(cycles) > 1 else 0):
        improved = False
        for i in range(len(cycles)):
            for j in range(len(cycles)):
                if i == j:
                    continue
                wall = sorted(
                    f
                    for f in range(mesh.n_faces)
                    if labels[f] == i
                    and f not in seeds[i]
                    and any(labels[g] == j for g in _neighbours(mesh, f))
                )
                if not wall:
                    continue
                trial = list(labels)
                for f in wall:
                    trial[f] = j
                try:
                    tv, tu, tp = evaluate(trial)
                except (SolverError, MeshError):
                    continue
                if tv < value - 1e-12:
                    labels, value, upper, pieces = trial, tv, tu, tp
                    improved = True
        if not improved:
            break

    cert = _multicurve_certificate(mesh, cycles, ws, tol)
    if cert > value + 1e-9 * max(1.0, value):
        raise SolverError(f"certificate {cert} exceeds the annuli value {value}")
    return MulticurveResult(
        value=value,
        lower_bound=cert,
        upper=upper,
        piece_values=[p.value for p in pieces],
        labels=labels,
    )


def _multicurve_certificate(mesh, cycles, ws, tol, padding=2, max_rounds=60, batch=64):
    """(sum w_i L_i)^2 / A for one jointly optimized admissible metric.

    Any admissible metric certifies; the loop just tightens it by batched
    cutting planes with unit targets per class, so an early exit still
    returns a valid (merely looser) bound.
    """
    rows = [c.edge_multiplicities() for c in cycles]
    rhs = [1.0] * len(cycles)
    keys = {c.canonical_key() for c in cycles}
    area_coeff = mesh.edge_area_coeff
    skels = [_cycle_skeleton(mesh, c) for c in cycles]
    srcs = [_seam_vertices(mesh, target) for _skel, target in skels]
    rho, area = _solve_metric_qp(rows, rhs, area_coeff)
    for _ in range(max_rounds):
        added = 0
        for (skel, target), sources in zip(skels, srcs):
            _b, found = _translate_cycles(mesh, rho, skel, target, padding, sources, limit=1.0)
            for _v, (d, cyc) in sorted(found.items()):
                if d >= 1.0 - tol:
                    continue
                key = cyc.canonical_key()
                if key in keys:
                    continue
                keys.add(key)
                rows.append(cyc.edge_multiplicities())
                rhs.append(1.0)
                added += 1
                if added >= batch:
                    break
        if added == 0:
            break
        rho, area = _solve_metric_qp(rows, rhs, area_coeff)
    if area <= 0.0:
        return 0.0
    total = 0.0
    for cyc, w in zip(cycles, ws):
        d, _g = shortest_cycle(mesh, rho, cyc, check_stability=False)
        total += w * d
    return total * total / area


# ---------------------------------------------------------------------------
# refinement reporting


def refinement_sweep(build, cycle_name, refinements=(16, 32, 64), **kwargs):
    """Extremal length across refinements; [(refinement, ExtResult), ...].

    ``build`` maps a refinement to a mesh carrying the named mark.
    """
    out = []
    for r in refinements:
        m = build(r)
        out.append((r, discrete_ext_length(m, m.cycle(cycle_name), **kwargs)))
    return out


def richardson_extrapolate(values):
    """Extrapolated limit and observed order from three doubling refinements.

    Returns (limit, order); order is NaN when the differences do not shrink
    geometrically, in which case the last value is returned unextrapolated.
    """
    v1, v2, v3 = values
    d1, d2 = v2 - v1, v3 - v2
    if d1 == 0.0 or d2 == 0.0 or d1 * d2 <= 0.0 or abs(d2) >= abs(d1):
        return v3, float("nan")
    rate = abs(d1 / d2)
    return v3 + d2 / (rate - 1.0), math.log2(rate)
