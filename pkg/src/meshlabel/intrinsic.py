"""Intrinsic mesh colors from low-frequency Laplacian eigenfunctions.

The discrete Laplace operator uses cotangent edge weights with barycentric
lumped vertex areas as the mass. The three non-constant eigenvectors of
smallest eigenvalue, min-max normalized per channel after a deterministic
sign fix, give each vertex an RGB triple that depends only on the surface
geometry, not on the pose the mesh is later driven into. Colors are meant
to be computed once per subject on the shaped rest-pose mesh and reused
for every frame.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .body import PosedMesh
from .errors import ConvergenceError, MeshTopologyError
from .mesh import validate_closed_manifold

log = logging.getLogger(__name__)

# Meshes below this size (or too small for Lanczos) are solved densely.
DENSE_CUTOFF = 500

# Eigenvalues closer than this relative gap get flagged: the basis inside a
# near-degenerate eigenspace is solver-order dependent.
DEGENERACY_GAP = 1e-9


@dataclass(frozen=True, eq=False)
class EigenBasis:
    """k smallest non-trivial eigenpairs of L phi = lambda M phi.

    eigenvalues ascend and are strictly positive; eigenvectors (columns of
    a (V, k) array) are unit-normalized and pairwise orthogonal in the mass
    inner product, and each is mass-orthogonal to the constant vector.
    """

    eigenvalues: np.ndarray   # (k,)
    eigenvectors: np.ndarray  # (V, k)
    mass: np.ndarray          # (V,) lumped vertex areas, m^2


def cotangent_laplacian(
    mesh: PosedMesh, validate: bool = True
) -> tuple[scipy.sparse.csr_matrix, np.ndarray]:
    """Cotangent Laplacian and barycentric lumped mass of a closed mesh.

    Off-diagonal L[i, j] = -(cot(alpha_ij) + cot(beta_ij)) / 2 over the two
    angles opposite edge (i, j); diagonals make rows sum to zero; mass[v] is
    one third of the area of v's incident triangles. L is symmetric
    positive semi-definite with the constant vector in its kernel.
    """
    vertices = np.asarray(mesh.vertices, dtype=np.float64)
    faces = np.asarray(mesh.faces)
    if validate:
        validate_closed_manifold(vertices, faces)

    p = vertices[faces]                      # (F, 3, 3)
    cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    double_area = np.linalg.norm(cross, axis=1)
    bad = np.nonzero(0.5 * double_area <= 1e-12)[0]
    if len(bad):
        raise MeshTopologyError("degenerate triangles (area <= 1e-12 m^2)", bad.tolist())

    n = len(vertices)
    rows, cols, vals = [], [], []
    for corner in range(3):
        a = faces[:, (corner + 1) % 3]
        b = faces[:, (corner + 2) % 3]
        u = vertices[a] - vertices[faces[:, corner]]
        v = vertices[b] - vertices[faces[:, corner]]
        # cot of the corner angle = dot / |cross|; |cross| is twice the area,
        # identical for all three corners of the triangle.
        cot = np.einsum("fd,fd->f", u, v) / double_area
        half = 0.5 * cot
        rows.extend([a, b, a, b])
        cols.extend([b, a, a, b])
        vals.extend([-half, -half, half, half])

    laplacian = scipy.sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()

    mass = np.zeros(n)
    third = double_area / 6.0
    for corner in range(3):
        np.add.at(mass, faces[:, corner], third)
    return laplacian, mass


def smallest_nontrivial_eigvecs(
    laplacian: scipy.sparse.spmatrix,
    mass: np.ndarray,
    k: int = 3,
    method: str = "auto",
) -> EigenBasis:
    """k smallest-eigenvalue non-constant solutions of L phi = lambda M phi.

    method is "auto" (dense below DENSE_CUTOFF vertices, else shift-invert
    Lanczos), "dense", or "sparse". The trivial constant mode (eigenvalue
    zero) is discarded. Each returned eigenvector has residual
    ||L phi - lambda M phi|| / ||M phi|| below 1e-6 and its largest-magnitude
    entry positive (ties broken toward the lowest vertex index), so repeated
    runs are bit-identical.
    """
    n = laplacian.shape[0]
    mass = np.asarray(mass, dtype=np.float64)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k + 1 > n:
        raise ConvergenceError(f"mesh has {n} vertices, fewer than the k+1={k + 1} modes requested")

    if method not in ("auto", "dense", "sparse"):
        raise ValueError(f"unknown method {method!r}")
    use_dense = method == "dense" or (method == "auto" and n < DENSE_CUTOFF)
    if method == "sparse" and k + 1 >= n:
        raise ConvergenceError(f"Lanczos needs k+1 < n, got k+1={k + 1}, n={n}")

    if use_dense:
        vals, vecs = scipy.linalg.eigh(laplacian.toarray(), np.diag(mass))
        vals, vecs = vals[: k + 1], vecs[:, : k + 1]
    else:
        m = scipy.sparse.diags(mass).tocsc()
        rng = np.random.RandomState(0)
        v0 = rng.uniform(-1.0, 1.0, size=n)
        try:
            vals, vecs = scipy.sparse.linalg.eigsh(
                laplacian.tocsc(), k=k + 1, M=m, sigma=-1e-3, which="LM", v0=v0
            )
        except scipy.sparse.linalg.ArpackNoConvergence as exc:
            raise ConvergenceError(
                f"Lanczos did not converge: {len(exc.eigenvalues)}/{k + 1} modes "
                f"after the ARPACK iteration limit on a {n}-vertex mesh"
            ) from exc
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]

    # The first mode must be the constant kernel vector; anything else means
    # the mesh is disconnected or the solve went wrong.
    if vals[1] <= 0 or vals[0] > 1e-6 * vals[1]:
        raise ConvergenceError(
            f"no clean zero mode (lambda0={vals[0]:.3e}, lambda1={vals[1]:.3e}); "
            "mesh may be disconnected"
        )
    vals, vecs = vals[1:], vecs[:, 1:]

    # Exact mass-normalization plus the deterministic sign convention.
    norms = np.sqrt(np.einsum("vk,v,vk->k", vecs, mass, vecs))
    vecs = vecs / norms
    vecs = fix_signs(vecs)

    residuals = []
    for i in range(k):
        lhs = laplacian @ vecs[:, i] - vals[i] * (mass * vecs[:, i])
        residuals.append(float(np.linalg.norm(lhs) / np.linalg.norm(mass * vecs[:, i])))
    worst = max(residuals)
    if worst > 1e-6:
        raise ConvergenceError(
            f"eigenpair residual {worst:.3e} exceeds 1e-6 (per-pair: {residuals})"
        )

    for i in range(k - 1):
        if abs(vals[i + 1] - vals[i]) < DEGENERACY_GAP * abs(vals[i + 1]):
            log.warning(
                "near-degenerate eigenvalues %d/%d (%.12g, %.12g): basis within the "
                "eigenspace is solver-order dependent", i, i + 1, vals[i], vals[i + 1]
            )

    return EigenBasis(eigenvalues=vals.copy(), eigenvectors=vecs, mass=mass)


def fix_signs(eigenvectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive.

    argmax on the absolute values breaks ties toward the lowest vertex
    index, making the convention deterministic.
    """
    vecs = np.array(eigenvectors, dtype=np.float64, copy=True)
    for i in range(vecs.shape[1]):
        peak = int(np.argmax(np.abs(vecs[:, i])))
        if vecs[peak, i] < 0:
            vecs[:, i] = -vecs[:, i]
    return vecs


def eigvecs_to_colors(basis: EigenBasis) -> np.ndarray:
    """Min-max normalize each (sign-fixed) eigenvector into an RGB channel.

    Returns (V, 3) values in [0, 1]; channel c attains 0 and 1 exactly at
    the extremal vertices of eigenvector c. Invariant under sign flips of
    the solver output.
    """
    vecs = fix_signs(basis.eigenvectors[:, :3])
    lo = vecs.min(axis=0)
    hi = vecs.max(axis=0)
    span = hi - lo
    if (span <= 0).any():
        raise ValueError("constant eigenvector has no range to normalize")
    return (vecs - lo) / span


def subject_colors(template, beta, method: str = "auto") -> tuple[np.ndarray, EigenBasis]:
    """Per-vertex intrinsic colors of a subject's shaped rest-pose mesh.

    Convenience composition used by the pipeline: shape the template,
    build the Laplacian, solve, and normalize to colors. The colors are
    valid for every posed frame of the subject because connectivity never
    changes.
    """
    from .body import apply_shape

    rest = apply_shape(template, beta)
    laplacian, mass = cotangent_laplacian(rest)
    basis = smallest_nontrivial_eigvecs(laplacian, mass, k=3, method=method)
    return eigvecs_to_colors(basis), basis
