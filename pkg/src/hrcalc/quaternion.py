"""Scalar quaternion algebra on numpy arrays.

A quaternion is stored as a float array whose trailing axis has length 4 and
holds the components ``(r, i, j, k)``. Every function broadcasts over leading
axes, so a batch of quaternions is simply an array of shape ``(..., 4)``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, QuaternionDomainError

ONE = np.array([1.0, 0.0, 0.0, 0.0])
I = np.array([0.0, 1.0, 0.0, 0.0])
J = np.array([0.0, 0.0, 1.0, 0.0])
K = np.array([0.0, 0.0, 0.0, 1.0])
UNITS = np.stack([ONE, I, J, K])

# tolerance used to decide whether a quaternion is pure / unit
PURE_TOL = 1e-10


def quat(r=0.0, i=0.0, j=0.0, k=0.0):
    """Build a quaternion array from its four components (broadcasting)."""
    r, i, j, k = np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in (r, i, j, k)))
    return np.stack([r, i, j, k], axis=-1)


def asquat(q):
    """Return ``q`` as a float array with a trailing axis of length 4."""
    q = np.asarray(q, dtype=float)
    if q.ndim == 0 or q.shape[-1] != 4:
        raise DimensionError(f"expected trailing axis of length 4, got shape {q.shape}")
    return q


def from_real(x):
    """Embed real numbers as quaternions with zero imaginary part."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape + (4,))
    out[..., 0] = x
    return out


def pure(v):
    """Build pure quaternions from 3-vectors."""
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (4,))
    out[..., 1:] = v
    return out


def mul(a, b):
    """Hamilton product ``a b`` (non-commutative), broadcasting over leading axes."""
    a = asquat(a)
    b = asquat(b)
    a0, a1, a2, a3 = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    b0, b1, b2, b3 = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack([
        a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
        a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
        a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
        a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
    ], axis=-1)


def mul3(a, b, c):
    """Triple product ``a b c``."""
    return mul(mul(a, b), c)


def conj(q):
    """Quaternion conjugate: real part kept, imaginary part negated."""
    q = asquat(q)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def norm(q):
    """Euclidean norm of each quaternion."""
    return np.linalg.norm(asquat(q), axis=-1)


def inv(q):
    """Multiplicative inverse ``conj(q) / |q|^2``.

    Raises
    ------
    QuaternionDomainError
        If any input has zero norm.
    """
    q = asquat(q)
    n2 = np.sum(q * q, axis=-1)
    if np.any(n2 == 0.0):
        raise QuaternionDomainError("zero quaternion has no inverse")
    return conj(q) / n2[..., None]


def real(q):
    return asquat(q)[..., 0]


def imag(q):
    """Pure part of ``q`` (as a quaternion)."""
    out = np.array(asquat(q), copy=True)
    out[..., 0] = 0.0
    return out


def is_pure(q, tol=PURE_TOL):
    return np.all(np.abs(real(q)) <= tol)


def involution(q, axis):
    """Rotate ``q`` by the pure, nonzero ``axis``: ``axis q axis^-1``.

    For the imaginary units this is the usual quaternion involution, e.g.
    ``involution(q, I)`` keeps the real and ``i`` parts and flips ``j`` and ``k``.
    """
    axis = asquat(axis)
    if not is_pure(axis) or np.any(norm(axis) == 0.0):
        raise QuaternionDomainError("involution axis must be a nonzero pure quaternion")
    return mul3(axis, q, inv(axis))


def similarity(q, mu):
    """``mu q mu^-1`` for any nonzero quaternion ``mu``.

    This generalises :func:`involution` to non-pure rotating quaternions, which
    the derivative rules need for axes such as ``conj(f) xi``.
    """
    return mul3(mu, q, inv(mu))


def conj_from_involutions(q):
    """Conjugate assembled from the three involutions, ``(q^i + q^j + q^k - q) / 2``."""
    return 0.5 * (involution(q, I) + involution(q, J) + involution(q, K) - q)


@dataclass
class PolarForm:
    """``q = magnitude * (cos(angle) + axis sin(angle))`` with unit pure ``axis``."""
    magnitude: np.ndarray
    axis: np.ndarray
    angle: np.ndarray


def to_polar(q):
    """Polar decomposition of ``q``.

    The angle lies in ``[0, pi]``. When the imaginary part vanishes the axis
    is undefined; ``I`` is returned so that the result stays deterministic.

    Raises
    ------
    QuaternionDomainError
        For the zero quaternion.
    """
    q = asquat(q)
    mag = norm(q)
    if np.any(mag == 0.0):
        raise QuaternionDomainError("the zero quaternion has no polar form")
    vnorm = np.linalg.norm(q[..., 1:], axis=-1)
    angle = np.arctan2(vnorm, q[..., 0])
    safe = np.where(vnorm > 0.0, vnorm, 1.0)
    axis = imag(q) / safe[..., None]
    axis = np.where((vnorm > 0.0)[..., None], axis, I)
    return PolarForm(mag, axis, angle)


def from_polar(p):
    """Inverse of :func:`to_polar`."""
    c = np.cos(p.angle)[..., None]
    s = np.sin(p.angle)[..., None]
    return np.asarray(p.magnitude)[..., None] * (c * ONE + s * p.axis)


def qexp(v):
    """Exponential of a pure quaternion, ``cos|v| + v/|v| sin|v|``."""
    v = asquat(v)
    if not is_pure(v):
        raise QuaternionDomainError("qexp is defined here for pure quaternions only")
    theta = np.linalg.norm(v[..., 1:], axis=-1)
    out = np.zeros(v.shape)
    out[..., 0] = np.cos(theta)
    # sin(t)/t -> 1 as t -> 0
    out[..., 1:] = v[..., 1:] * np.sinc(theta / np.pi)[..., None]
    return out


def axis_angle(axis, angle):
    """Unit quaternion ``cos(angle) + axis sin(angle)`` for a unit pure axis."""
    axis = asquat(axis)
    angle = np.asarray(angle, dtype=float)
    return np.cos(angle)[..., None] * ONE + np.sin(angle)[..., None] * axis


def rotate(q_pre, axis, angle):
    """Rotate the 3-vector ``q_pre`` by ``angle`` about ``axis``.

    Computes ``mu q_pre mu^-1`` with ``mu = cos(angle/2) + axis sin(angle/2)``.

    Parameters
    ----------
    q_pre : array_like, shape (..., 4)
        Pure quaternion to rotate.
    axis : array_like, shape (..., 4)
        Unit pure quaternion.
    angle : float or array_like
        Rotation angle in radians (right-hand rule).
    """
    q_pre = asquat(q_pre)
    axis = asquat(axis)
    if not is_pure(q_pre, 1e-9):
        raise QuaternionDomainError("only pure quaternions can be rotated")
    if not is_pure(axis) or np.any(np.abs(norm(axis) - 1.0) > 1e-9):
        raise QuaternionDomainError("rotation axis must be a unit pure quaternion")
    mu = axis_angle(axis, 0.5 * np.asarray(angle, dtype=float))
    return mul3(mu, q_pre, conj(mu))


def qubit_to_quaternion(theta, phi):
    """Bloch-sphere angles to the unit pure quaternion
    ``i sin(theta)cos(phi) + j sin(theta)sin(phi) + k cos(theta)``."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return quat(0.0 * st, st * np.cos(phi), st * np.sin(phi), np.cos(theta))


# entry (row, col) of the dual is _DUAL_SIGN * q[_DUAL_INDEX]
_DUAL_INDEX = np.array([[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]])
_DUAL_SIGN = np.array([
    [1.0, -1.0, -1.0, 1.0],
    [1.0, 1.0, -1.0, -1.0],
    [1.0, 1.0, 1.0, 1.0],
    [-1.0, 1.0, -1.0, 1.0],
])


def matrix_dual(q):
    """Real 4x4 matrix representation of ``q``.

    The map is an algebra homomorphism: ``matrix_dual(a b) ==
    matrix_dual(a) @ matrix_dual(b)`` and ``matrix_dual(conj(q))`` is the
    transpose of ``matrix_dual(q)``. Rows read
    ``[r, -i, -j, k], [i, r, -k, -j], [j, k, r, i], [-k, j, -i, r]``.
    """
    q = asquat(q)
    return q[..., _DUAL_INDEX] * _DUAL_SIGN


def dual_to_quaternion(m, tol=1e-8):
    """Recover ``q`` from ``matrix_dual(q)``; raise if ``m`` lacks the structure."""
    from .errors import StructureError

    m = np.asarray(m, dtype=float)
    if m.shape[-2:] != (4, 4):
        raise DimensionError(f"expected (..., 4, 4), got {m.shape}")
    q = np.stack([m[..., 0, 0], m[..., 1, 0], m[..., 2, 0], -m[..., 3, 0]], axis=-1)
    if tol is not None:
        dev = np.max(np.abs(matrix_dual(q) - m), initial=0.0)
        if dev > tol:
            raise StructureError(f"matrix is not a quaternion dual (deviation {dev:.3g})", dev)
    return q


def product_components(f, g):
    """Product ``f g`` written as scalar/vector parts.

    Uses ``r_f r_g - <v_f, v_g> + r_f v_g + r_g v_f + v_f x v_g`` and serves as
    an independent route to :func:`mul` in tests.
    """
    f = asquat(f)
    g = asquat(g)
    rf, vf = f[..., 0], f[..., 1:]
    rg, vg = g[..., 0], g[..., 1:]
    out = np.empty(np.broadcast_shapes(f.shape, g.shape))
    out[..., 0] = rf * rg - np.sum(vf * vg, axis=-1)
    out[..., 1:] = rf[..., None] * vg + rg[..., None] * vf + np.cross(vf, vg)
    return out


def random_quaternion(rng, size=(), scale=1.0):
    """Standard-normal quaternions of the given batch shape."""
    size = (size,) if np.isscalar(size) else tuple(size)
    return scale * rng.standard_normal(size + (4,))


def random_unit(rng, size=()):
    q = random_quaternion(rng, size)
    return q / norm(q)[..., None]


def random_unit_pure(rng, size=()):
    q = imag(random_quaternion(rng, size))
    return q / norm(q)[..., None]
