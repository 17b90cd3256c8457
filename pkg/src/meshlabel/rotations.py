"""Axis-angle rotations via the Rodrigues formula."""

import numpy as np

# Axis-angle vectors shorter than this are treated as the identity rotation.
DEGENERATE_ANGLE = 1e-12


def axis_angle_to_matrix(axis_angle: np.ndarray) -> np.ndarray:
    """Convert one axis-angle vector (3,) to a rotation matrix (3, 3).

    The vector's direction is the rotation axis, its norm the angle in
    radians. Norms below DEGENERATE_ANGLE yield the exact identity.
    """
    v = np.asarray(axis_angle, dtype=np.float64)
    angle = float(np.linalg.norm(v))
    if angle < DEGENERATE_ANGLE:
        return np.eye(3)
    x, y, z = v / angle
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def axis_angles_to_matrices(axis_angles: np.ndarray) -> np.ndarray:
    """Convert a stack (J, 3) of axis-angle vectors to matrices (J, 3, 3)."""
    aa = np.asarray(axis_angles, dtype=np.float64)
    return np.stack([axis_angle_to_matrix(row) for row in aa])
