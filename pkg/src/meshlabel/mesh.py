"""Triangle-mesh utilities: validation, subdivision, and primitive builders.

All meshes here are closed, oriented 2-manifolds represented as a float64
vertex array (V, 3) and an int array of CCW-outward triangles (F, 3). The
quad-surface builder keeps those guarantees by construction (box plus face
extrusions), which is what makes the procedural humanoid safe to feed into
the cotangent Laplacian.
"""

from collections import defaultdict

import numpy as np

from .errors import MeshTopologyError


def face_areas(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Triangle areas, shape (F,)."""
    p = vertices[faces]
    cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    return 0.5 * np.linalg.norm(cross, axis=1)


def unique_edges(faces: np.ndarray) -> np.ndarray:
    """Undirected edges as sorted index pairs, shape (E, 2)."""
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    e = np.sort(e, axis=1)
    return np.unique(e, axis=0)


def euler_characteristic(vertices: np.ndarray, faces: np.ndarray) -> int:
    return len(vertices) - len(unique_edges(faces)) + len(faces)


def validate_closed_manifold(
    vertices: np.ndarray,
    faces: np.ndarray,
    min_area: float = 1e-12,
) -> None:
    """Check that (vertices, faces) is a closed, connected, oriented 2-manifold.

    Raises MeshTopologyError naming the offending faces/edges/vertices.
    Checks, in order: index bounds, degenerate faces (repeated index or area
    below ``min_area``), directed-edge pairing (each undirected edge used by
    exactly two faces with opposite orientation), vertex fans (the faces
    around each vertex form a single closed cycle), and connectivity.
    """
    vertices = np.asarray(vertices, dtype=np.float64)
    faces = np.asarray(faces)
    if faces.ndim != 2 or faces.shape[1] != 3:
        raise MeshTopologyError("faces must be an (F, 3) index array")
    if faces.size and (faces.min() < 0 or faces.max() >= len(vertices)):
        bad = np.nonzero((faces < 0).any(axis=1) | (faces >= len(vertices)).any(axis=1))[0]
        raise MeshTopologyError("face indices out of range", bad.tolist())

    repeated = np.nonzero(
        (faces[:, 0] == faces[:, 1]) | (faces[:, 1] == faces[:, 2]) | (faces[:, 0] == faces[:, 2])
    )[0]
    if len(repeated):
        raise MeshTopologyError("faces with repeated vertex indices", repeated.tolist())

    small = np.nonzero(face_areas(vertices, faces) <= min_area)[0]
    if len(small):
        raise MeshTopologyError(
            f"degenerate faces with area <= {min_area:g}", small.tolist()
        )

    directed: dict[tuple[int, int], int] = {}
    for f, (a, b, c) in enumerate(faces):
        for u, v in ((a, b), (b, c), (c, a)):
            key = (int(u), int(v))
            if key in directed:
                raise MeshTopologyError(
                    f"directed edge {key} used twice (inconsistent orientation or "
                    f"non-manifold edge), faces {directed[key]} and {f}",
                    [directed[key], f],
                )
            directed[key] = f
    unmatched = [e for e in directed if (e[1], e[0]) not in directed]
    if unmatched:
        raise MeshTopologyError(
            f"boundary or non-manifold edges, e.g. {unmatched[:5]}",
            [directed[e] for e in unmatched[:5]],
        )

    # Vertex-manifold: outgoing edges around each vertex must chain into one cycle.
    nxt: dict[int, dict[int, int]] = defaultdict(dict)
    for a, b, c in faces:
        nxt[int(a)][int(b)] = int(c)
        nxt[int(b)][int(c)] = int(a)
        nxt[int(c)][int(a)] = int(b)
    for v, ring in nxt.items():
        start = next(iter(ring))
        cur, seen = start, 0
        while True:
            cur = ring[cur]
            seen += 1
            if cur == start:
                break
            if seen > len(ring):
                raise MeshTopologyError(f"broken fan around vertex {v}", [v])
        if seen != len(ring):
            raise MeshTopologyError(f"non-manifold vertex {v} (multiple fans)", [v])

    if len(nxt) != len(vertices):
        isolated = sorted(set(range(len(vertices))) - set(nxt))
        raise MeshTopologyError("isolated vertices", isolated[:5])

    # Connectivity over the edge graph.
    seen_v = np.zeros(len(vertices), dtype=bool)
    stack = [0]
    seen_v[0] = True
    while stack:
        v = stack.pop()
        for w in nxt[v]:
            if not seen_v[w]:
                seen_v[w] = True
                stack.append(w)
    if not seen_v.all():
        raise MeshTopologyError(
            "mesh is disconnected", np.nonzero(~seen_v)[0][:5].tolist()
        )


def _edge_midpoint_index(
    faces: np.ndarray, base: int
) -> tuple[dict[tuple[int, int], int], np.ndarray]:
    """Assign one new vertex index per undirected edge, starting at ``base``."""
    index: dict[tuple[int, int], int] = {}
    for a, b, c in faces:
        for u, v in ((a, b), (b, c), (c, a)):
            key = (int(min(u, v)), int(max(u, v)))
            if key not in index:
                index[key] = base + len(index)
    edges = np.array(sorted(index, key=index.get), dtype=np.int64)
    return index, edges


def _subdivided_faces(
    faces: np.ndarray, index: dict[tuple[int, int], int]
) -> np.ndarray:
    out = np.empty((4 * len(faces), 3), dtype=np.int64)
    for f, (a, b, c) in enumerate(faces):
        ab = index[(int(min(a, b)), int(max(a, b)))]
        bc = index[(int(min(b, c)), int(max(b, c)))]
        ca = index[(int(min(c, a)), int(max(c, a)))]
        out[4 * f + 0] = (a, ab, ca)
        out[4 * f + 1] = (ab, b, bc)
        out[4 * f + 2] = (ca, bc, c)
        out[4 * f + 3] = (ab, bc, ca)
    return out


def subdivide_midpoint(
    vertices: np.ndarray, faces: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """1-to-4 subdivision with new vertices at edge midpoints (no smoothing)."""
    vertices = np.asarray(vertices, dtype=np.float64)
    index, edges = _edge_midpoint_index(faces, len(vertices))
    mids = 0.5 * (vertices[edges[:, 0]] + vertices[edges[:, 1]])
    return np.vstack([vertices, mids]), _subdivided_faces(faces, index)


def subdivide_loop(
    vertices: np.ndarray, faces: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """One round of Loop subdivision on a closed triangle manifold.

    Odd (edge) vertices use the 3/8-3/8-1/8-1/8 stencil; even vertices use
    Loop's original valence-dependent beta. Face count exactly quadruples.
    """
    vertices = np.asarray(vertices, dtype=np.float64)
    nv = len(vertices)
    index, edges = _edge_midpoint_index(faces, nv)

    # Opposite vertices of each edge's two incident faces.
    opposite: dict[tuple[int, int], list[int]] = defaultdict(list)
    for a, b, c in faces:
        for u, v, w in ((a, b, c), (b, c, a), (c, a, b)):
            opposite[(int(min(u, v)), int(max(u, v)))].append(int(w))

    mids = np.empty((len(edges), 3))
    for k, (u, v) in enumerate(edges):
        opp = opposite[(int(u), int(v))]
        mids[k] = 0.375 * (vertices[u] + vertices[v]) + 0.125 * (
            vertices[opp[0]] + vertices[opp[1]]
        )

    neighbors: dict[int, set[int]] = defaultdict(set)
    for u, v in edges:
        neighbors[int(u)].add(int(v))
        neighbors[int(v)].add(int(u))

    even = np.empty_like(vertices)
    for v in range(nv):
        ring = sorted(neighbors[v])
        n = len(ring)
        beta = (0.625 - (0.375 + 0.25 * np.cos(2.0 * np.pi / n)) ** 2) / n
        even[v] = (1.0 - n * beta) * vertices[v] + beta * vertices[ring].sum(axis=0)

    return np.vstack([even, mids]), _subdivided_faces(faces, index)


def regular_tetrahedron(edge: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Regular tetrahedron with the given edge length, centered at the origin."""
    v = np.array(
        [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]]
    )
    v *= edge / np.sqrt(8.0)
    f = np.array([[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]], dtype=np.int64)
    return v, f


def icosphere(subdivisions: int = 2, radius: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Icosahedron subdivided ``subdivisions`` times, vertices pushed to the sphere."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    v = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=np.float64,
    )
    f = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    for _ in range(subdivisions):
        v, f = subdivide_midpoint(v, f)
    v *= radius / np.linalg.norm(v, axis=1, keepdims=True)
    return v, f


class QuadSurface:
    """Closed quad surface built by box modeling.

    Starts from a grid-subdivided box and grows by face extrusion; both
    operations preserve closedness, manifoldness, and outward orientation,
    so any modeling sequence triangulates into a valid genus-0 mesh.
    """

    def __init__(self):
        self.vertices: list[np.ndarray] = []
        self.quads: list[tuple[int, int, int, int] | None] = []
        self._lookup: dict[tuple[float, float, float], int] = {}

    def _vertex(self, p) -> int:
        key = (float(p[0]), float(p[1]), float(p[2]))
        if key not in self._lookup:
            self._lookup[key] = len(self.vertices)
            self.vertices.append(np.asarray(p, dtype=np.float64))
        return self._lookup[key]

    def add_box(self, center, size, segments=(1, 1, 1)) -> None:
        """Add a grid-subdivided axis-aligned box (CCW-outward quads)."""
        center = np.asarray(center, dtype=np.float64)
        size = np.asarray(size, dtype=np.float64)
        lo = center - 0.5 * size
        segs = tuple(int(s) for s in segments)

        def grid_point(axis, side, i, j, ni, nj):
            # (u, v) sweep the two in-plane axes; the fixed axis sits at lo/hi.
            p = np.empty(3)
            p[axis] = lo[axis] + side * size[axis]
            a, b = [k for k in range(3) if k != axis]
            p[a] = lo[a] + size[a] * (i / ni)
            p[b] = lo[b] + size[b] * (j / nj)
            return p

        for axis in range(3):
            a, b = [k for k in range(3) if k != axis]
            ni, nj = segs[a], segs[b]
            for side in (0, 1):
                for i in range(ni):
                    for j in range(nj):
                        q = [
                            self._vertex(grid_point(axis, side, i, j, ni, nj)),
                            self._vertex(grid_point(axis, side, i + 1, j, ni, nj)),
                            self._vertex(grid_point(axis, side, i + 1, j + 1, ni, nj)),
                            self._vertex(grid_point(axis, side, i, j + 1, ni, nj)),
                        ]
                        # Outward orientation flips between the two sides;
                        # whether (u, v, normal) is right-handed depends on axis.
                        flip = (side == 0) ^ (axis == 1)
                        if flip:
                            q = q[::-1]
                        self.quads.append(tuple(q))

    def face_centroid(self, face_id: int) -> np.ndarray:
        q = self.quads[face_id]
        return np.mean([self.vertices[i] for i in q], axis=0)

    def face_nearest(self, point) -> int:
        """Live face whose centroid is nearest to ``point``."""
        point = np.asarray(point, dtype=np.float64)
        best, best_d = -1, np.inf
        for fid, q in enumerate(self.quads):
            if q is None:
                continue
            d = float(np.linalg.norm(self.face_centroid(fid) - point))
            if d < best_d:
                best, best_d = fid, d
        return best

    def extrude(self, face_id: int, offset, scale: float = 1.0) -> int:
        """Extrude a quad: translate a scaled copy by ``offset``, stitch sides.

        Returns the new cap face id (chainable for limb segments).
        """
        quad = self.quads[face_id]
        if quad is None:
            raise ValueError(f"face {face_id} was already consumed by an extrusion")
        offset = np.asarray(offset, dtype=np.float64)
        centroid = self.face_centroid(face_id)
        new = []
        for i in quad:
            p = centroid + scale * (self.vertices[i] - centroid) + offset
            self.vertices.append(p)
            new.append(len(self.vertices) - 1)
        self.quads[face_id] = None
        a, b, c, d = quad
        a2, b2, c2, d2 = new
        for side in ((a, b, b2, a2), (b, c, c2, b2), (c, d, d2, c2), (d, a, a2, d2)):
            self.quads.append(side)
        self.quads.append((a2, b2, c2, d2))
        return len(self.quads) - 1

    def triangulate(self) -> tuple[np.ndarray, np.ndarray]:
        """Split each live quad along the (0, 2) diagonal."""
        tris = []
        for q in self.quads:
            if q is None:
                continue
            a, b, c, d = q
            tris.append((a, b, c))
            tris.append((a, c, d))
        return np.array(self.vertices, dtype=np.float64), np.array(tris, dtype=np.int64)
