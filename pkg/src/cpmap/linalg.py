"""Dense complex linear algebra kernel shared by all other modules.

Operators are plain ``numpy.ndarray`` values with dtype complex128. The
tensor-product convention throughout the package is *system slow*: the joint
index of a system level ``s`` and an environment level ``e`` is ``s * dim_e + e``.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

# Relative tolerances (Frobenius), with an absolute floor for tiny matrices.
HERMITIAN_TOL = 1e-9
UNITARY_TOL = 1e-9
EIG_TOL = 1e-10
ABS_FLOOR = 1e-12

# Eigenvalue gap below which two eigenvalues are treated as degenerate.
DEGENERACY_GAP = 1e-8


def as_matrix(data) -> np.ndarray:
    """Coerce ``data`` to a 2-D complex128 array, rejecting NaN/Inf entries."""
    m = np.asarray(data, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got array of shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite (no NaN/Inf)")
    return m


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    bound = max(tol * np.linalg.norm(m), ABS_FLOOR)
    return bool(np.linalg.norm(m - m.conj().T) <= bound)


def is_unitary(m: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    eye = np.eye(m.shape[0])
    bound = max(tol * np.sqrt(m.shape[0]), ABS_FLOOR)
    return bool(np.linalg.norm(m.conj().T @ m - eye) <= bound)


def _require_square(m: np.ndarray, what: str) -> None:
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{what} must be square, got shape {m.shape}")


def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with ``a`` on the slow (left) index."""
    return np.kron(as_matrix(a), as_matrix(b))


def partial_trace_env(m: np.ndarray, dim_s: int, dim_e: int) -> np.ndarray:
    """Trace out the environment of a joint operator in system-slow ordering.

    Returns the ``dim_s x dim_s`` matrix with entries sum_e <s,e|m|s',e>.
    """
    m = as_matrix(m)
    n = dim_s * dim_e
    if m.shape != (n, n):
        raise ValueError(
            f"joint operator must be {n}x{n} for dims {dim_s}x{dim_e}, got {m.shape}"
        )
    return np.einsum("iaja->ij", m.reshape(dim_s, dim_e, dim_s, dim_e))


class HermitianEigenResult(NamedTuple):
    """Spectral decomposition: real eigenvalues descending, orthonormal columns."""

    values: np.ndarray
    vectors: np.ndarray


def hermitian_eig(m: np.ndarray) -> HermitianEigenResult:
    """Eigendecompose a Hermitian matrix, eigenvalues sorted descending.

    Ties within a degenerate cluster keep the order produced by the
    underlying solver, which is unspecified.
    """
    m = as_matrix(m)
    _require_square(m, "matrix")
    if not is_hermitian(m):
        raise ValueError("matrix is not Hermitian within tolerance")
    w, v = np.linalg.eigh(m)
    return HermitianEigenResult(w[::-1].copy(), v[:, ::-1].copy())


def degenerate_clusters(values: np.ndarray, gap_tol: float = DEGENERACY_GAP) -> list[range]:
    """Group sorted eigenvalues into clusters separated by gaps larger than ``gap_tol``."""
    clusters: list[range] = []
    start = 0
    for k in range(1, len(values) + 1):
        if k == len(values) or abs(values[k] - values[k - 1]) > gap_tol:
            clusters.append(range(start, k))
            start = k
    return clusters


def rotate_eigenbasis_within_clusters(
    eig: HermitianEigenResult, seed, gap_tol: float = DEGENERACY_GAP
) -> HermitianEigenResult:
    """Mix the eigenvectors of each degenerate cluster by a Haar-random unitary.

    The rotated basis is an equally valid spectral decomposition of the same
    operator; nondegenerate eigenvectors are left untouched.
    """
    rng = np.random.default_rng(seed)
    vectors = eig.vectors.copy()
    for cluster in degenerate_clusters(eig.values, gap_tol):
        if len(cluster) > 1:
            w = haar_random_unitary(len(cluster), rng)
            cols = slice(cluster.start, cluster.stop)
            vectors[:, cols] = vectors[:, cols] @ w
    return HermitianEigenResult(eig.values.copy(), vectors)


def matrix_exp_skew_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    """exp(-i*h*t) for Hermitian ``h``, computed by eigendecomposition."""
    h = as_matrix(h)
    _require_square(h, "generator")
    if not is_hermitian(h):
        raise ValueError("generator is not Hermitian within tolerance")
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def haar_random_unitary(dim: int, seed) -> np.ndarray:
    """Haar-distributed random unitary.

    QR of a complex Ginibre matrix with the diagonal of R rephased to be
    real positive, which makes the distribution exactly Haar. ``seed`` may be
    an integer or a ``numpy.random.Generator``.
    """
    if dim < 1:
        raise ValueError("dimension must be >= 1")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z / np.sqrt(2))
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_density(dim: int, seed) -> np.ndarray:
    """Random density operator from the Ginibre ensemble: G G† / Tr(G G†)."""
    if dim < 1:
        raise ValueError("dimension must be >= 1")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = g @ g.conj().T
    return m / np.trace(m).real


def validate_density(m: np.ndarray, what: str = "density operator") -> np.ndarray:
    """Check Hermiticity, positivity (eigenvalue floor -1e-10) and unit trace."""
    m = as_matrix(m)
    _require_square(m, what)
    if not is_hermitian(m):
        raise ValueError(f"{what} is not Hermitian")
    trace = np.trace(m).real
    if abs(trace - 1.0) > 1e-9:
        raise ValueError(f"{what} has trace {trace:.12g}, expected 1")
    low = np.linalg.eigvalsh(m)[0]
    if low < -1e-10:
        raise ValueError(f"{what} is not positive semidefinite (min eigenvalue {low:.3e})")
    return m


def frobenius_distance(a: np.ndarray, b: np.ndarray) -> float:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """(1/2) sum |eig(a - b)|; requires the difference to be Hermitian."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    if not is_hermitian(diff):
        raise ValueError("trace distance requires a Hermitian difference")
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))


def matrix_to_json(m: np.ndarray) -> list:
    """Encode a matrix as a JSON array of rows, each entry a [re, im] pair."""
    m = as_matrix(m)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(rows) -> np.ndarray:
    """Decode the array-of-rows [re, im] matrix format."""
    if not isinstance(rows, list) or not rows:
        raise ValueError("matrix must be a non-empty JSON array of rows")
    data = []
    width = None
    for i, row in enumerate(rows):
        if not isinstance(row, list) or (width is not None and len(row) != width):
            raise ValueError(f"matrix row {i} is not a list of length {width}")
        width = len(row)
        entries = []
        for j, entry in enumerate(row):
            if (
                not isinstance(entry, list)
                or len(entry) != 2
                or not all(isinstance(x, (int, float)) for x in entry)
            ):
                raise ValueError(f"matrix entry ({i},{j}) must be a [re, im] pair")
            entries.append(complex(entry[0], entry[1]))
        data.append(entries)
    return as_matrix(data)


def vector_from_json(entries) -> np.ndarray:
    """Decode a JSON list of [re, im] pairs into a complex vector."""
    if not isinstance(entries, list) or not entries:
        raise ValueError("vector must be a non-empty JSON array of [re, im] pairs")
    out = []
    for j, entry in enumerate(entries):
        if (
            not isinstance(entry, list)
            or len(entry) != 2
            or not all(isinstance(x, (int, float)) for x in entry)
        ):
            raise ValueError(f"vector entry {j} must be a [re, im] pair")
        out.append(complex(entry[0], entry[1]))
    v = np.asarray(out, dtype=np.complex128)
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    return v
