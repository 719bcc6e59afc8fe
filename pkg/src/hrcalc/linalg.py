"""Quaternion vectors and matrices, the augmented basis and real embeddings.

Layout conventions
------------------
* A quaternion vector of length ``M`` is an array of shape ``(M, 4)``.
* A quaternion matrix is an array of shape ``(m, n, 4)``.
* The augmented vector of ``q`` stacks ``q, q^i, q^j, q^k`` into ``(4M, 4)``.

Leading batch axes broadcast in :func:`qmatmul` and :func:`qmatvec`.
"""

from dataclasses import dataclass
import functools

import numpy as np

from . import quaternion as qt
from .errors import DimensionError, NumericError, StructureError

# component sign patterns of the three involutions q^i, q^j, q^k
INVOLUTION_SIGNS = np.array([
    [1.0, 1.0, 1.0, 1.0],
    [1.0, 1.0, -1.0, -1.0],
    [1.0, -1.0, 1.0, -1.0],
    [1.0, -1.0, -1.0, 1.0],
])

# test hook: added to every entry of the augmentation matrix when nonzero
_AUGMENTATION_PERTURBATION = 0.0

CONDITION_LIMIT = 1e12


def involute(x, index):
    """Entry-wise involution of a quaternion array.

    ``index`` selects 0: identity, 1: ``q^i``, 2: ``q^j``, 3: ``q^k``.
    """
    return np.asarray(x, dtype=float) * INVOLUTION_SIGNS[index]


def qeye(n):
    out = np.zeros((n, n, 4))
    out[np.arange(n), np.arange(n), 0] = 1.0
    return out


def qzeros(m, n=None):
    return np.zeros((m, 4)) if n is None else np.zeros((m, n, 4))


def from_real_matrix(a):
    """Quaternion matrix with the given real entries."""
    return qt.from_real(a)


def _check_matrix(a, name="matrix"):
    a = np.asarray(a, dtype=float)
    if a.ndim < 3 or a.shape[-1] != 4:
        raise DimensionError(f"{name} must have shape (..., m, n, 4), got {a.shape}")
    return a


def _structure_constants():
    # STRUCT[a, b] holds the components of unit_a * unit_b
    out = np.zeros((4, 4, 4))
    for a in range(4):
        for b in range(4):
            out[a, b] = qt.mul(qt.UNITS[a], qt.UNITS[b])
    return out


STRUCT = _structure_constants()


def qmatmul(a, b):
    """Quaternion matrix product; leading axes broadcast."""
    a = _check_matrix(a, "left operand")
    b = _check_matrix(b, "right operand")
    if a.shape[-2] != b.shape[-3]:
        raise DimensionError(f"inner dimensions differ: {a.shape} @ {b.shape}")
    rank = max(a.ndim, b.ndim)
    a = a.reshape((1,) * (rank - a.ndim) + a.shape)
    b = b.reshape((1,) * (rank - b.ndim) + b.shape)
    at = np.moveaxis(a, -1, 0)[:, None]
    bt = np.moveaxis(b, -1, 0)[None]
    products = np.matmul(at, bt)  # (4, 4, ..., m, p): component pairs
    return np.tensordot(products, STRUCT, axes=([0, 1], [0, 1]))


def qmatvec(a, x):
    """Matrix-vector product ``a x`` for ``a`` of shape (..., m, n, 4), ``x`` (..., n, 4)."""
    x = np.asarray(x, dtype=float)
    if x.ndim < 2 or x.shape[-1] != 4:
        raise DimensionError(f"vector must have shape (..., n, 4), got {x.shape}")
    return qmatmul(a, x[..., :, None, :])[..., 0, :]


def qadd(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return a + b


def hermitian(a):
    """Conjugate transpose of a quaternion matrix (or column vector)."""
    a = np.asarray(a, dtype=float)
    if a.ndim == 2:
        a = a[:, None, :]
    return qt.conj(np.swapaxes(a, -3, -2))


def qouter(x, y):
    """Outer product ``x y^H`` of two quaternion vectors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return qt.mul(x[..., :, None, :], qt.conj(y)[..., None, :, :])


def qdot(x, y):
    """``x^T y`` without conjugation: sum of ``x_m y_m``."""
    return np.sum(qt.mul(x, y), axis=-2)


def symmetrize(a):
    """Hermitian part ``(a + a^H) / 2``."""
    return 0.5 * (a + hermitian(a))


# -- augmented basis -------------------------------------------------------

def augment(v):
    """Stack ``v, v^i, v^j, v^k`` into an augmented vector of shape (4M, 4)."""
    v = np.asarray(v, dtype=float)
    if v.ndim < 2 or v.shape[-1] != 4:
        raise DimensionError(f"vector must have shape (..., M, 4), got {v.shape}")
    return np.concatenate([v * INVOLUTION_SIGNS[z] for z in range(4)], axis=-2)


def deaugment(va, strict=True, tol=1e-8):
    """Return the base block of an augmented vector.

    With ``strict`` the three involution blocks must agree with the base
    block within ``tol``; otherwise :class:`StructureError` is raised.
    """
    va = np.asarray(va, dtype=float)
    n = va.shape[-2]
    if n % 4:
        raise DimensionError(f"augmented length must be a multiple of 4, got {n}")
    m = n // 4
    base = va[..., :m, :]
    if strict:
        dev = np.max(np.abs(augment(base) - va), initial=0.0)
        if dev > tol:
            raise StructureError(f"not an augmented vector (deviation {dev:.3g})", dev)
    return base


def build_augmentation_matrix(m):
    """Quaternion matrix ``A`` of shape (4m, 4m, 4) mapping real components to augmented form.

    ``A @ [q_r; q_i; q_j; q_k] == augment(q)`` and ``A^-1 = A^H / 4``.
    """
    return _augmentation_matrix(m, _AUGMENTATION_PERTURBATION).copy()


@functools.lru_cache(maxsize=64)
def _augmentation_matrix(m, perturbation):
    """Quaternion matrix ``A`` of shape (4m, 4m, 4) mapping real components to augmented form.

    ``A @ [q_r; q_i; q_j; q_k] == augment(q)`` and ``A^-1 = A^H / 4``.
    """
    units = np.stack([qt.ONE, qt.I, qt.J, qt.K])
    out = np.zeros((4 * m, 4 * m, 4))
    eye = np.arange(m)
    for row in range(4):
        for col in range(4):
            entry = units[col] * INVOLUTION_SIGNS[row]
            out[row * m + eye, col * m + eye] = entry
    if perturbation:
        out = out + perturbation
    return out


def real_components(v):
    """Stack component-major reals ``[q_r; q_i; q_j; q_k]`` of a quaternion vector."""
    v = np.asarray(v, dtype=float)
    return np.concatenate([v[..., c] for c in range(4)], axis=-1)


def from_real_components(x):
    x = np.asarray(x, dtype=float)
    m = x.shape[-1] // 4
    return np.stack([x[..., c * m:(c + 1) * m] for c in range(4)], axis=-1)


def augmentation_real_map(m):
    """Real matrix of the map ``real_components(q) -> real_components(augment(q))``."""
    signs = INVOLUTION_SIGNS
    out = np.zeros((16 * m, 4 * m))
    for z in range(4):
        for c in range(4):
            rows = (c * 4 * m) + z * m + np.arange(m)
            out[rows, c * m + np.arange(m)] = signs[z, c]
    return out


def augmented_covariance(c_real):
    """Augmented covariance ``A C A^H`` of a vector whose real components
    (component-major order) have covariance ``c_real``."""
    c_real = np.asarray(c_real, dtype=float)
    m = c_real.shape[0] // 4
    a = build_augmentation_matrix(m)
    return qmatmul(qmatmul(a, qt.from_real(c_real)), hermitian(a))


def augment_matrix(f):
    """Augmented form ``diag(F, F^i, F^j, F^k)`` of a strictly linear map."""
    f = _check_matrix(f)
    m, n = f.shape[-3:-1]
    out = np.zeros((4 * m, 4 * n, 4))
    for z in range(4):
        out[z * m:(z + 1) * m, z * n:(z + 1) * n] = involute(f, z)
    return out


# index of q^(a) composed with q^(b): the involutions form a Klein four-group
_KLEIN = np.array([[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]])


def widely_linear_matrix(f0, fi, fj, fk):
    """Augmented matrix of ``y = f0 x + fi x^i + fj x^j + fk x^k``."""
    blocks = [_check_matrix(b) for b in (f0, fi, fj, fk)]
    m, n = blocks[0].shape[-3:-1]
    out = np.zeros((4 * m, 4 * n, 4))
    for row in range(4):
        for z in range(4):
            col = _KLEIN[z, row]
            out[row * m:(row + 1) * m, col * n:(col + 1) * n] = involute(blocks[z], row)
    return out


# -- real embedding --------------------------------------------------------

def real_embed(a):
    """Replace each entry of a quaternion matrix by its real 4x4 dual.

    Vectors of shape (n, 4) are treated as n x 1 matrices.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim == 2:
        a = a[:, None, :]
    a = _check_matrix(a)
    d = qt.matrix_dual(a)  # (..., m, n, 4, 4)
    m, n = a.shape[-3:-1]
    d = np.swapaxes(d, -3, -2)  # (..., m, 4, n, 4)
    return d.reshape(a.shape[:-3] + (4 * m, 4 * n))


def real_unembed(e, strict=True, tol=1e-8):
    """Inverse of :func:`real_embed`; validates block structure when ``strict``."""
    e = np.asarray(e, dtype=float)
    rows, cols = e.shape[-2:]
    if rows % 4 or cols % 4:
        raise DimensionError(f"embedding must have 4-divisible shape, got {e.shape}")
    m, n = rows // 4, cols // 4
    blocks = np.swapaxes(e.reshape(e.shape[:-2] + (m, 4, n, 4)), -3, -2)
    return qt.dual_to_quaternion(blocks, tol if strict else None)


def qinverse(a):
    """Inverse of a square quaternion matrix via its real embedding.

    Leading axes are treated as a batch.

    Raises
    ------
    NumericError
        If the 1-norm condition number of the embedding exceeds 1e12.
    """
    a = _check_matrix(a)
    if a.shape[-3] != a.shape[-2]:
        raise DimensionError(f"matrix must be square, got {a.shape}")
    e = real_embed(a)
    try:
        einv = np.linalg.inv(e)
    except np.linalg.LinAlgError as exc:
        raise NumericError("singular quaternion matrix", np.inf) from exc
    cond = np.max(np.abs(e).sum(axis=-2), axis=-1) * np.max(np.abs(einv).sum(axis=-2), axis=-1)
    worst = float(np.max(cond))
    if not np.isfinite(worst) or worst > CONDITION_LIMIT:
        raise NumericError(f"ill-conditioned quaternion matrix (cond {worst:.3g})", worst)
    return real_unembed(einv, strict=False)


def spectral_radius(a):
    """Largest eigenvalue modulus, computed on the real embedding."""
    return float(np.max(np.abs(np.linalg.eigvals(real_embed(a)))))


def is_hermitian(a, tol=1e-10):
    return bool(np.max(np.abs(a - hermitian(a)), initial=0.0) <= tol)


def min_eigenvalue(a):
    """Smallest eigenvalue of a Hermitian quaternion matrix (via embedding)."""
    e = real_embed(a)
    return float(np.min(np.linalg.eigvalsh(0.5 * (e + e.T))))


def trace_real(a):
    """Real part of the trace."""
    return float(np.trace(np.asarray(a)[..., 0], axis1=-2, axis2=-1))


# -- second-order statistics ----------------------------------------------

@dataclass
class SampleStats:
    """Sample mean and augmented covariance (1/N normalisation)."""
    mean: np.ndarray
    aug_cov: np.ndarray
    n_samples: int


def sample_stats(samples):
    """Sample mean (augmented) and augmented covariance ``E[(q-m)^a (q-m)^aH]``.

    Parameters
    ----------
    samples : ndarray, shape (N, M, 4)
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 2:
        samples = samples[:, None, :]
    n = samples.shape[0]
    if n == 0:
        raise DimensionError("need at least one sample")
    mean = samples.mean(axis=0)
    centred = augment(samples - mean)
    cov = qouter(centred, centred).mean(axis=0)
    return SampleStats(augment(mean), cov, n)


def aqcf_eval(samples, s, xi):
    """Empirical augmented quaternion characteristic function.

    Averages ``exp(xi * Re(s^H q))`` over the samples for a unit pure ``xi``.
    ``Re(s^H q)`` is the Euclidean inner product of the real components.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 2:
        samples = samples[:, None, :]
    s = np.asarray(s, dtype=float)
    xi = qt.asquat(xi)
    t = np.einsum("nmc,...mc->...n", samples, s)
    return np.mean(np.cos(t), axis=-1)[..., None] * qt.ONE + \
        np.mean(np.sin(t), axis=-1)[..., None] * xi
