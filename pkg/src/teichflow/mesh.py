"""Glued unit-square complexes.

A mesh is a set of unit squares with translation gluings between opposite
sides (S<->N, E<->W).  From that we derive the vertex graph curves live on,
the cell graph the resistance solver runs on, boundary loops, and an integer
cocycle basis (tree-cotree) that assigns every closed edge walk its homology
class.  Meshes refine by subdividing each square into k x k squares, and
round-trip through a small JSON interchange format (schema version "1").
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import jsonschema

# sides
S, E, N, W = 0, 1, 2, 3
OPPOSITE = (N, W, S, E)
SIDE_NAMES = ("S", "E", "N", "W")

# corners 0=SW 1=SE 2=NE 3=NW; per side, (tail, head) in canonical +x/+y order
_SIDE_CORNERS = ((0, 1), (1, 2), (3, 2), (0, 3))

# sign of traversing a side in the face's ccw boundary direction relative to
# the canonical (+x for S/N, +y for E/W) edge orientation
_CCW_SIGN = (1, 1, -1, -1)

MESH_SCHEMA_VERSION = "1"

MESH_JSON_SCHEMA = {
    "type": "object",
    "properties": {
        "schema_version": {"const": MESH_SCHEMA_VERSION},
        "squares": {"type": "integer", "minimum": 1},
        "gluings": {
            "type": "array",
            "items": {
                "type": "array",
                "items": {"type": "integer", "minimum": 0},
                "minItems": 4,
                "maxItems": 4,
            },
        },
        "marks": {
            "type": "object",
            "additionalProperties": {
                "type": "array",
                "items": {
                    "type": "array",
                    "items": {"type": "integer", "minimum": 0},
                    "minItems": 2,
                    "maxItems": 2,
                },
                "minItems": 1,
            },
        },
        "boundaries": {
            "type": "object",
            "additionalProperties": {
                "type": "array",
                "items": {
                    "type": "array",
                    "items": {"type": "integer", "minimum": 0},
                    "minItems": 2,
                    "maxItems": 2,
                },
            },
        },
    },
    "required": ["schema_version", "squares", "gluings"],
    "additionalProperties": False,
}


class MeshError(ValueError):
    pass


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


class QuadMesh:
    """Unit-square complex with translation gluings.

    ``gluings`` maps (face, side) -> (face, side) involutively, always pairing
    a side with the opposite side of the partner.  Unglued sides are boundary.
    ``marks`` are named closed edge walks given as (face, side) steps, each
    step traversed in the face's ccw boundary direction.
    """

    def __init__(self, n_faces, gluings, marks=None, boundaries=None, refinement=1):
        self.n_faces = int(n_faces)
        if self.n_faces < 1:
            raise MeshError("mesh needs at least one face")
        self.refinement = int(refinement)
        self.gluings = {}
        for (f, s), (f2, s2) in gluings.items():
            self._check_side(f, s)
            self._check_side(f2, s2)
            if s2 != OPPOSITE[s]:
                raise MeshError(f"gluing {(f, s)}<->{(f2, s2)} does not pair opposite sides")
            if (f, s) in self.gluings and self.gluings[(f, s)] != (f2, s2):
                raise MeshError(f"side {(f, s)} glued twice")
            self.gluings[(f, s)] = (f2, s2)
            self.gluings[(f2, s2)] = (f, s)
        self.marks = {name: list(steps) for name, steps in (marks or {}).items()}
        self.boundaries = {name: list(sides) for name, sides in (boundaries or {}).items()}
        self._build()
        for name, steps in self.marks.items():
            self.cycle(name)  # validates closedness
        for name, sides in self.boundaries.items():
            for f, s in sides:
                if (f, s) in self.gluings:
                    raise MeshError(f"boundary set {name!r} contains glued side {(f, s)}")

    def _check_side(self, f, s):
        if not (0 <= f < self.n_faces) or not (0 <= s < 4):
            raise MeshError(f"invalid side reference ({f}, {s})")

    # -- derived structure --------------------------------------------------

    def _build(self):
        uf = _UnionFind(4 * self.n_faces)
        for (f, s), (f2, s2) in self.gluings.items():
            if (f, s) > (f2, s2):
                continue
            ca, cb = _SIDE_CORNERS[s], _SIDE_CORNERS[s2]
            uf.union(4 * f + ca[0], 4 * f2 + cb[0])
            uf.union(4 * f + ca[1], 4 * f2 + cb[1])

        roots = {}
        self.corner_vertex = [0] * (4 * self.n_faces)
        for c in range(4 * self.n_faces):
            r = uf.find(c)
            if r not in roots:
                roots[r] = len(roots)
            self.corner_vertex[c] = roots[r]
        self.n_vertices = len(roots)

        # one edge per glued side pair or boundary side
        self.side_edge = {}
        self.edge_tail = []
        self.edge_head = []
        self.edge_sides = []
        self.edge_area_coeff = []
        for f in range(self.n_faces):
            for s in range(4):
                if (f, s) in self.side_edge:
                    continue
                partner = self.gluings.get((f, s))
                eid = len(self.edge_tail)
                tail_c, head_c = _SIDE_CORNERS[s]
                self.edge_tail.append(self.corner_vertex[4 * f + tail_c])
                self.edge_head.append(self.corner_vertex[4 * f + head_c])
                sides = [(f, s)]
                self.side_edge[(f, s)] = eid
                if partner is not None:
                    sides.append(partner)
                    self.side_edge[partner] = eid
                self.edge_sides.append(tuple(sides))
                self.edge_area_coeff.append(1.0 if partner is not None else 0.5)
        self.n_edges = len(self.edge_tail)
        self._cocycles = None

    @property
    def n_glued(self):
        return sum(1 for sides in self.edge_sides if len(sides) == 2)

    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_faces

    def boundary_sides(self):
        return [sides[0] for sides in self.edge_sides if len(sides) == 1]

    def step_edge(self, f, s):
        """(edge id, sign) of traversing side s of face f in ccw direction."""
        return self.side_edge[(f, s)], _CCW_SIGN[s]

    def edge_faces(self, eid):
        """(left face, right face) across the canonical direction; None = outside."""
        left = right = None
        for f, s in self.edge_sides[eid]:
            if s in (S, E):
                left = f
            else:
                right = f
        return left, right

    # -- boundary loops ------------------------------------------------------

    def boundary_loops(self):
        """Boundary edge ids grouped into closed loops.

        Requires every boundary vertex to meet exactly two boundary edges.
        """
        incident = {}
        b_edges = [e for e in range(self.n_edges) if len(self.edge_sides[e]) == 1]
        for e in b_edges:
            for v in (self.edge_tail[e], self.edge_head[e]):
                incident.setdefault(v, []).append(e)
        for v, es in incident.items():
            if len(es) != 2:
                raise MeshError(f"boundary vertex {v} has {len(es)} boundary edges")
        loops = []
        seen = set()
        for start in b_edges:
            if start in seen:
                continue
            loop = [start]
            seen.add(start)
            v = self.edge_head[start]
            while True:
                nxt = [e for e in incident[v] if e not in seen]
                if not nxt:
                    break
                e = nxt[0]
                seen.add(e)
                loop.append(e)
                v = self.edge_head[e] if self.edge_tail[e] == v else self.edge_tail[e]
            loops.append(loop)
        return loops

    # -- homology ------------------------------------------------------------

    def cocycles(self):
        """Integer cocycle basis via a tree-cotree decomposition.

        Returns a list of dicts edge -> +-1.  Summing sign * value over the
        steps of a closed walk gives its homology coordinates; the basis has
        rank 2g + max(0, b - 1) + (components - 1) pieces of which the
        boundary-free part detects essential cycles.
        """
        if self._cocycles is not None:
            return self._cocycles

        # primal spanning forest (BFS over vertices, deterministic edge order)
        adj = [[] for _ in range(self.n_vertices)]
        for e in range(self.n_edges):
            adj[self.edge_tail[e]].append((e, self.edge_head[e]))
            adj[self.edge_head[e]].append((e, self.edge_tail[e]))
        in_tree = [False] * self.n_edges
        seen_v = [False] * self.n_vertices
        for root in range(self.n_vertices):
            if seen_v[root]:
                continue
            seen_v[root] = True
            queue = [root]
            while queue:
                v = queue.pop(0)
                for e, w_ in sorted(adj[v]):
                    if not seen_v[w_]:
                        seen_v[w_] = True
                        in_tree[e] = True
                        queue.append(w_)

        # dual forest over faces plus one outside node, avoiding tree edges
        outside = self.n_faces
        has_boundary = any(len(sides) == 1 for sides in self.edge_sides)
        n_dual = self.n_faces + (1 if has_boundary else 0)
        dual_adj = [[] for _ in range(n_dual)]
        for e in range(self.n_edges):
            if in_tree[e]:
                continue
            lf, rf = self.edge_faces(e)
            a = lf if lf is not None else outside
            b = rf if rf is not None else outside
            dual_adj[a].append((e, b))
            dual_adj[b].append((e, a))
        dual_parent = [None] * n_dual  # (via edge, from node)
        seen_f = [False] * n_dual
        in_cotree = [False] * self.n_edges
        for root in range(n_dual):
            if seen_f[root]:
                continue
            seen_f[root] = True
            queue = [root]
            while queue:
                a = queue.pop(0)
                for e, b in sorted(dual_adj[a]):
                    if not seen_f[b]:
                        seen_f[b] = True
                        in_cotree[e] = True
                        dual_parent[b] = (e, a)
                        queue.append(b)

        def dual_path(a):
            # node -> list of (edge, from, to) back to its root
            out = []
            while dual_parent[a] is not None:
                e, frm = dual_parent[a]
                out.append((e, a, frm))
                a = frm
            return out, a

        def crossing_sign(e, frm, to):
            lf, rf = self.edge_faces(e)
            a = lf if lf is not None else outside
            return 1 if frm == a else -1

        cocycles = []
        for x in range(self.n_edges):
            if in_tree[x] or in_cotree[x]:
                continue
            lf, rf = self.edge_faces(x)
            a = lf if lf is not None else outside
            b = rf if rf is not None else outside
            u = {x: crossing_sign(x, a, b)}
            path_b, root_b = dual_path(b)
            path_a, root_a = dual_path(a)
            if root_a != root_b:
                raise MeshError("dual forest disagrees with leftover edge")
            for e, frm, to in path_b:
                u[e] = u.get(e, 0) + crossing_sign(e, frm, to)
            for e, frm, to in path_a:
                u[e] = u.get(e, 0) - crossing_sign(e, frm, to)
            cocycles.append({e: v for e, v in u.items() if v != 0})
        self._cocycles = cocycles
        return cocycles

    def homology_rank(self):
        return len(self.cocycles())

    # -- cycles ----------------------------------------------------------------

    def cycle(self, name_or_steps, multiplicity=1):
        steps = self.marks[name_or_steps] if isinstance(name_or_steps, str) else name_or_steps
        signed = [self.step_edge(f, s) for f, s in steps]
        return EdgeCycle(self, tuple(signed), multiplicity)

    # -- refinement --------------------------------------------------------------

    def refine(self, k):
        """Subdivide every square into k x k squares, preserving gluings and marks."""
        k = int(k)
        if k < 1:
            raise MeshError("refinement factor must be >= 1")
        if k == 1:
            return self

        def sub(f, i, j):
            return f * k * k + j * k + i

        gluings = {}

        def glue(a, b):
            gluings[a] = b
            gluings[b] = a

        for f in range(self.n_faces):
            for j in range(k):
                for i in range(k):
                    if i + 1 < k:
                        glue((sub(f, i, j), E), (sub(f, i + 1, j), W))
                    if j + 1 < k:
                        glue((sub(f, i, j), N), (sub(f, i, j + 1), S))
        for (f, s), (f2, s2) in self.gluings.items():
            if (f, s) > (f2, s2):
                continue
            for t in range(k):
                a = self._sub_side(f, s, t, k, sub)
                b = self._sub_side(f2, s2, t, k, sub)
                glue(a, b)

        marks = {
            name: [st for f, s in steps for st in self._refined_steps(f, s, k, sub)]
            for name, steps in self.marks.items()
        }
        boundaries = {
            name: [self._sub_side(f, s, t, k, sub) for f, s in sides for t in range(k)]
            for name, sides in self.boundaries.items()
        }
        return QuadMesh(self.n_faces * k * k, gluings, marks, boundaries,
                        refinement=self.refinement * k)

    @staticmethod
    def _sub_side(f, s, t, k, sub):
        # t runs in the canonical (+x/+y) direction along the side
        if s == S:
            return (sub(f, t, 0), S)
        if s == N:
            return (sub(f, t, k - 1), N)
        if s == E:
            return (sub(f, k - 1, t), E)
        return (sub(f, 0, t), W)

    @staticmethod
    def _refined_steps(f, s, k, sub):
        rng = range(k) if _CCW_SIGN[s] > 0 else range(k - 1, -1, -1)
        return [QuadMesh._sub_side(f, s, t, k, sub) for t in rng]

    # -- JSON interchange ----------------------------------------------------------

    def to_json_dict(self):
        pairs = sorted({tuple(sorted(((f, s), p))) for (f, s), p in self.gluings.items()})
        return {
            "schema_version": MESH_SCHEMA_VERSION,
            "squares": self.n_faces,
            "gluings": [[a[0], a[1], b[0], b[1]] for a, b in pairs],
            "marks": {name: [[f, s] for f, s in steps] for name, steps in sorted(self.marks.items())},
            "boundaries": {
                name: [[f, s] for f, s in sides] for name, sides in sorted(self.boundaries.items())
            },
        }

    def save_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True, indent=1)
            fh.write("\n")


def validate_mesh_dict(data):
    """Schema-check a mesh dict; raises MeshError carrying a JSON-pointer path."""
    try:
        jsonschema.validate(data, MESH_JSON_SCHEMA)
    except jsonschema.ValidationError as err:
        pointer = "/" + "/".join(str(p) for p in err.absolute_path)
        raise MeshError(f"mesh schema violation at {pointer}: {err.message}") from err


def mesh_from_json_dict(data):
    validate_mesh_dict(data)
    gluings = {}
    for f, s, f2, s2 in data["gluings"]:
        gluings[(f, s)] = (f2, s2)
        gluings[(f2, s2)] = (f, s)
    marks = {name: [tuple(st) for st in steps] for name, steps in data.get("marks", {}).items()}
    boundaries = {name: [tuple(sd) for sd in sides] for name, sides in data.get("boundaries", {}).items()}
    return QuadMesh(data["squares"], gluings, marks, boundaries)


def load_mesh(path):
    with open(path) as fh:
        data = json.load(fh)
    return mesh_from_json_dict(data)


class EdgeCycle:
    """Closed combinatorial loop as signed edge steps on a mesh."""

    def __init__(self, mesh, steps, multiplicity=1):
        if multiplicity < 1:
            raise MeshError("multiplicity must be a positive integer")
        if not steps:
            raise MeshError("empty edge cycle")
        self.mesh = mesh
        self.steps = tuple((int(e), int(sg)) for e, sg in steps)
        self.multiplicity = int(multiplicity)
        for (e, sg), (e2, sg2) in zip(self.steps, self.steps[1:] + self.steps[:1]):
            head = mesh.edge_head[e] if sg > 0 else mesh.edge_tail[e]
            tail = mesh.edge_tail[e2] if sg2 > 0 else mesh.edge_head[e2]
            if head != tail:
                raise MeshError("edge steps do not chain into a closed loop")

    def __len__(self):
        return len(self.steps)

    def vertices(self):
        return [self.mesh.edge_tail[e] if sg > 0 else self.mesh.edge_head[e] for e, sg in self.steps]

    def homology(self):
        """Coordinates against the mesh cocycle basis."""
        cocycles = self.mesh.cocycles()
        out = []
        for u in cocycles:
            total = 0
            for e, sg in self.steps:
                total += sg * u.get(e, 0)
            out.append(total)
        return tuple(out)

    def is_essential(self):
        return any(self.homology())

    def length(self, weights):
        return float(sum(weights[e] for e, _ in self.steps))

    def edge_multiplicities(self):
        counts = {}
        for e, _ in self.steps:
            counts[e] = counts.get(e, 0) + 1
        return counts

    def canonical_key(self):
        n = len(self.steps)
        best = min(self.steps[i:] + self.steps[:i] for i in range(n))
        return best


# ---------------------------------------------------------------------------
# builders


def _grid_gluings(width, height, wrap_x, wrap_y, face=None):
    if face is None:
        face = lambda i, j: j * width + i
    gluings = {}

    def glue(a, b):
        gluings[a] = b
        gluings[b] = a

    for j in range(height):
        for i in range(width):
            if i + 1 < width:
                glue((face(i, j), E), (face(i + 1, j), W))
            elif wrap_x:
                glue((face(i, j), E), (face(0, j), W))
            if j + 1 < height:
                glue((face(i, j), N), (face(i, j + 1), S))
            elif wrap_y:
                glue((face(i, j), N), (face(i, 0), S))
    return gluings


def grid_walk_steps(width, height, moves, start=(0, 0)):
    """(face, side) steps of a lattice walk on a width x height grid torus.

    ``moves`` is a string over R/L/U/D.  Faces are indexed j*width + i.
    """
    x, y = start
    steps = []
    for mv in moves:
        if mv == "R":
            steps.append(((y % height) * width + (x % width), S))
            x += 1
        elif mv == "L":
            steps.append((((y - 1) % height) * width + ((x - 1) % width), N))
            x -= 1
        elif mv == "U":
            steps.append(((y % height) * width + ((x - 1) % width), E))
            y += 1
        elif mv == "D":
            steps.append((((y - 1) % height) * width + (x % width), W))
            y -= 1
        else:
            raise MeshError(f"unknown move {mv!r}")
    return steps


def slope_moves(p, q, width, height):
    """Monotone staircase move string winding (p, q) on the grid torus."""
    if p == 0 and q == 0:
        raise MeshError("slope (0,0) has no cycle")
    px, py = p * width, q * height
    hx = "R" if px >= 0 else "L"
    hy = "U" if py >= 0 else "D"
    ax, ay = abs(px), abs(py)
    moves = []
    x = y = 0
    while x < ax or y < ay:
        # follow the straight segment to (ax, ay): midpoint comparison
        if y * ax >= x * ay and x < ax:
            moves.append(hx)
            x += 1
        else:
            moves.append(hy)
            y += 1
    return "".join(moves)


def torus_mesh(width, height=None):
    """Grid torus, width x height cells; marks 'h' (row 0) and 'v' (column 0)."""
    height = width if height is None else height
    gluings = _grid_gluings(width, height, True, True)
    marks = {
        "h": grid_walk_steps(width, height, "R" * width),
        "v": grid_walk_steps(width, height, "U" * height),
    }
    return QuadMesh(width * height, gluings, marks)


def torus_slope_cycle(mesh_width, mesh_height, p, q):
    """Steps of a primitive (p, q) staircase cycle on torus_mesh(width, height)."""
    moves = slope_moves(p, q, mesh_width, mesh_height)
    return grid_walk_steps(mesh_width, mesh_height, moves)


def cylinder_mesh(width, height):
    """Flat cylinder, periodic in x; boundaries 'bottom'/'top', mark 'core'."""
    gluings = _grid_gluings(width, height, True, False)
    marks = {"core": grid_walk_steps(width, height, "R" * width, start=(0, height // 2))}
    boundaries = {
        "bottom": [(i, S) for i in range(width)],
        "top": [((height - 1) * width + i, N) for i in range(width)],
    }
    return QuadMesh(width * height, gluings, marks, boundaries)


def rectangle_mesh(width, height):
    """Plain rectangle; boundary sets 'left', 'right', 'bottom', 'top'."""
    gluings = _grid_gluings(width, height, False, False)
    boundaries = {
        "bottom": [(i, S) for i in range(width)],
        "top": [((height - 1) * width + i, N) for i in range(width)],
        "left": [(j * width, W) for j in range(height)],
        "right": [(j * width + width - 1, E) for j in range(height)],
    }
    return QuadMesh(width * height, gluings, {}, boundaries)


def slit_square_mesh(k, slit_cells, slit_row=None, slit_start=None):
    """Unit square with an interior horizontal slit; an annulus.

    The slit runs along vertex row ``slit_row`` (default k//2) from column
    ``slit_start`` (default centred) over ``slit_cells`` edges.  Boundary sets:
    'outer' (the square's boundary) and 'slit' (both banks).
    """
    if not (1 <= slit_cells <= k - 1):
        raise MeshError("slit length must use 1..k-1 cells at this refinement")
    r0 = k // 2 if slit_row is None else slit_row
    x0 = (k - slit_cells) // 2 if slit_start is None else slit_start
    if not (0 < r0 < k):
        raise MeshError("slit row must be interior")
    gluings = _grid_gluings(k, k, False, False)
    face = lambda i, j: j * k + i
    slit_sides = []
    for i in range(x0, x0 + slit_cells):
        a, b = (face(i, r0 - 1), N), (face(i, r0), S)
        del gluings[a]
        del gluings[b]
        slit_sides.extend([a, b])
    boundaries = {
        "outer": [(face(i, 0), S) for i in range(k)]
        + [(face(k - 1, j), E) for j in range(k)]
        + [(face(i, k - 1), N) for i in range(k)]
        + [(face(0, j), W) for j in range(k)],
        "slit": slit_sides,
    }
    return QuadMesh(k * k, gluings, {}, boundaries)


def genus_from_characteristic(chi, n_boundary):
    g2 = 2 - chi - n_boundary
    if g2 % 2:
        raise MeshError("odd genus defect; mesh is not an orientable surface complex")
    return g2 // 2
