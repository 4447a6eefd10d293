"""Quaternion helpers.

Convention: ``q = [w, x, y, z]``, Hamilton product, rotating body-frame
vectors into NED (``v_ned = R(q) @ v_body``).  The functions are plain
numpy so numba can compile them inside the filter kernels.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def quat_multiply(q, p):
    w1, x1, y1, z1 = q[0], q[1], q[2], q[3]
    w2, x2, y2, z2 = p[0], p[1], p[2], p[3]
    out = np.empty(4)
    out[0] = w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2
    out[1] = w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2
    out[2] = w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2
    out[3] = w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2
    return out


@njit(cache=True)
def quat_to_dcm(q):
    """Body-to-NED rotation matrix. Not renormalized: R scales with |q|^2."""
    w, x, y, z = q[0], q[1], q[2], q[3]
    R = np.empty((3, 3))
    R[0, 0] = w * w + x * x - y * y - z * z
    R[0, 1] = 2.0 * (x * y - w * z)
    R[0, 2] = 2.0 * (x * z + w * y)
    R[1, 0] = 2.0 * (x * y + w * z)
    R[1, 1] = w * w - x * x + y * y - z * z
    R[1, 2] = 2.0 * (y * z - w * x)
    R[2, 0] = 2.0 * (x * z - w * y)
    R[2, 1] = 2.0 * (y * z + w * x)
    R[2, 2] = w * w - x * x - y * y + z * z
    return R


@njit(cache=True)
def dcm_vec_jacobian(q, u):
    """d(R(q) u)/dq as a 3x4 matrix, consistent with :func:`quat_to_dcm`."""
    w, x, y, z = q[0], q[1], q[2], q[3]
    u1, u2, u3 = u[0], u[1], u[2]
    J = np.empty((3, 4))
    J[0, 0] = 2.0 * (w * u1 - z * u2 + y * u3)
    J[0, 1] = 2.0 * (x * u1 + y * u2 + z * u3)
    J[0, 2] = 2.0 * (-y * u1 + x * u2 + w * u3)
    J[0, 3] = 2.0 * (-z * u1 - w * u2 + x * u3)
    J[1, 0] = 2.0 * (z * u1 + w * u2 - x * u3)
    J[1, 1] = 2.0 * (y * u1 - x * u2 - w * u3)
    J[1, 2] = 2.0 * (x * u1 + y * u2 + z * u3)
    J[1, 3] = 2.0 * (w * u1 - z * u2 + y * u3)
    J[2, 0] = 2.0 * (-y * u1 + x * u2 + w * u3)
    J[2, 1] = 2.0 * (z * u1 + w * u2 - x * u3)
    J[2, 2] = 2.0 * (-w * u1 + z * u2 - y * u3)
    J[2, 3] = 2.0 * (x * u1 + y * u2 + z * u3)
    return J


@njit(cache=True)
def quat_left_matrix(q):
    """Matrix L(q) with ``q (x) p == L(q) @ p``."""
    w, x, y, z = q[0], q[1], q[2], q[3]
    L = np.empty((4, 4))
    L[0, 0], L[0, 1], L[0, 2], L[0, 3] = w, -x, -y, -z
    L[1, 0], L[1, 1], L[1, 2], L[1, 3] = x, w, -z, y
    L[2, 0], L[2, 1], L[2, 2], L[2, 3] = y, z, w, -x
    L[3, 0], L[3, 1], L[3, 2], L[3, 3] = z, -y, x, w
    return L


@njit(cache=True)
def quat_right_matrix(p):
    """Matrix M(p) with ``q (x) p == M(p) @ q``."""
    w, x, y, z = p[0], p[1], p[2], p[3]
    M = np.empty((4, 4))
    M[0, 0], M[0, 1], M[0, 2], M[0, 3] = w, -x, -y, -z
    M[1, 0], M[1, 1], M[1, 2], M[1, 3] = x, w, z, -y
    M[2, 0], M[2, 1], M[2, 2], M[2, 3] = y, -z, w, x
    M[3, 0], M[3, 1], M[3, 2], M[3, 3] = z, y, -x, w
    return M


def quat_from_yaw(yaw):
    """Quaternion(s) for a pure yaw rotation; accepts scalars or arrays."""
    half = 0.5 * np.asarray(yaw, dtype=float)
    out = np.zeros(half.shape + (4,))
    out[..., 0] = np.cos(half)
    out[..., 3] = np.sin(half)
    return out


def yaw_from_quat(q):
    q = np.asarray(q, dtype=float)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    return np.arctan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))


def rotate_to_body(q, v_ned):
    """Apply R(q)^T to NED vector(s); broadcasts over leading axes."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v_ned, dtype=float)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    # rows of R^T are columns of R
    r00 = w * w + x * x - y * y - z * z
    r10 = 2.0 * (x * y + w * z)
    r20 = 2.0 * (x * z - w * y)
    r01 = 2.0 * (x * y - w * z)
    r11 = w * w - x * x + y * y - z * z
    r21 = 2.0 * (y * z + w * x)
    r02 = 2.0 * (x * z + w * y)
    r12 = 2.0 * (y * z - w * x)
    r22 = w * w - x * x - y * y + z * z
    vx, vy, vz = v[..., 0], v[..., 1], v[..., 2]
    return np.stack(
        [
            r00 * vx + r10 * vy + r20 * vz,
            r01 * vx + r11 * vy + r21 * vz,
            r02 * vx + r12 * vy + r22 * vz,
        ],
        axis=-1,
    )
