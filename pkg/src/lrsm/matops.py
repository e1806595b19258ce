"""Dense/sparse matrix primitives shared by the solvers and estimators.

Everything here treats a dense matrix as a plain 2-D ``numpy.ndarray`` of
finite floats (validated by :func:`as_dense`).  Structured values get small
dataclasses: :class:`FactoredLowRank` for thin factorizations and
:class:`SparseEntrySet` for coordinate-form sparse matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import NumericError

ORTHO_TOL = 1e-8
SIGN_DEFICIENCY_RTOL = 1e-12

__all__ = [
    "FactoredLowRank",
    "SparseEntrySet",
    "IncoherenceReading",
    "MatrixNorms",
    "SeparationReading",
    "as_dense",
    "thin_svd",
    "incoherence",
    "hard_threshold",
    "matrix_sign",
    "matrix_sign_info",
    "project_simplex",
    "project_rows_incoherent",
    "norms",
    "separation_ratio",
    "adversarial_pair",
    "save_dense_csv",
    "load_dense_csv",
    "save_sparse_csv",
    "load_sparse_csv",
]


def as_dense(M, name: str = "matrix") -> np.ndarray:
    """Validate and return ``M`` as a 2-D float array with finite entries."""
    A = np.asarray(M, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got ndim={A.ndim}")
    if A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"{name} must have positive dimensions, got {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


def _check_frame(U: np.ndarray, tol: float, name: str) -> None:
    gram = U.T @ U
    dev = np.max(np.abs(gram - np.eye(U.shape[1])))
    if dev > tol:
        raise ValueError(f"{name} columns are not orthonormal (max Gram deviation {dev:.3e} > {tol:g})")


@dataclass(frozen=True)
class FactoredLowRank:
    """Thin factorization ``U @ diag(sigma) @ V.T`` with orthonormal frames.

    ``sigma`` is nonnegative and sorted nonincreasing; both frames satisfy
    ``max|F.T F - I| <= 1e-8``.
    """

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "U", as_dense(self.U, "U"))
        object.__setattr__(self, "V", as_dense(self.V, "V"))
        sig = np.asarray(self.sigma, dtype=float).ravel()
        object.__setattr__(self, "sigma", sig)
        if self.U.shape[1] != sig.size or self.V.shape[1] != sig.size:
            raise ValueError("frame widths must match the number of singular values")
        _check_frame(self.U, ORTHO_TOL, "U")
        _check_frame(self.V, ORTHO_TOL, "V")
        if np.any(sig < 0):
            raise ValueError("sigma must be nonnegative")
        if np.any(np.diff(sig) > 0):
            raise ValueError("sigma must be sorted nonincreasing")

    @property
    def rank(self) -> int:
        return self.sigma.size

    @property
    def shape(self) -> tuple[int, int]:
        return (self.U.shape[0], self.V.shape[0])

    def to_dense(self) -> np.ndarray:
        return (self.U * self.sigma) @ self.V.T


@dataclass(frozen=True)
class SparseEntrySet:
    """Coordinate-form sparse matrix with explicit support and nonzero values."""

    rows: int
    cols: int
    row_idx: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    col_idx: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    values: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=float))

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("rows and cols must be positive")
        ri = np.asarray(self.row_idx, dtype=np.int64).ravel()
        ci = np.asarray(self.col_idx, dtype=np.int64).ravel()
        vals = np.asarray(self.values, dtype=float).ravel()
        if not (ri.size == ci.size == vals.size):
            raise ValueError("row_idx, col_idx, values must have equal length")
        if ri.size > self.rows * self.cols:
            raise ValueError("support exceeds matrix size")
        if ri.size:
            if ri.min() < 0 or ri.max() >= self.rows or ci.min() < 0 or ci.max() >= self.cols:
                raise ValueError("support coordinates out of range")
            if not np.all(np.isfinite(vals)):
                raise ValueError("support values must be finite")
            if np.any(vals == 0):
                raise ValueError("support values must be nonzero")
            flat = ri * self.cols + ci
            if np.unique(flat).size != flat.size:
                raise ValueError("support coordinates must be distinct")
        object.__setattr__(self, "row_idx", ri)
        object.__setattr__(self, "col_idx", ci)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_triples(cls, rows: int, cols: int, triples) -> "SparseEntrySet":
        triples = list(triples)
        if triples:
            ri, ci, vals = map(np.asarray, zip(*triples))
        else:
            ri = ci = vals = np.empty(0)
        return cls(rows, cols, ri, ci, vals)

    @property
    def nnz(self) -> int:
        return self.values.size

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def support(self) -> list[tuple[int, int, float]]:
        return [(int(i), int(j), float(v))
                for i, j, v in zip(self.row_idx, self.col_idx, self.values)]

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols))
        out[self.row_idx, self.col_idx] = self.values
        return out


@dataclass(frozen=True)
class IncoherenceReading:
    """Measured incoherence ``mu = (rows/rank) * max_row_norm**2`` of a frame."""

    mu: float
    max_row_norm: float


@dataclass(frozen=True)
class MatrixNorms:
    fro: float
    spectral: float
    max: float
    l1: float


@dataclass(frozen=True)
class SeparationReading:
    """Max-to-Frobenius energy ratio of a difference of two factored matrices."""

    ratio: float
    scaled: float


def thin_svd(M, rank: int) -> FactoredLowRank:
    """Best rank-``rank`` factorization of ``M`` by singular value truncation.

    Parameters
    ----------
    M : array_like, shape (p, q)
    rank : int
        Number of singular triplets to keep; must satisfy ``1 <= rank <= min(p, q)``.

    Returns
    -------
    FactoredLowRank
        Frames and singular values of the Frobenius-optimal rank-``rank``
        approximation, singular values nonincreasing.
    """
    A = as_dense(M)
    if not (1 <= rank <= min(A.shape)):
        raise ValueError(f"rank must be in [1, {min(A.shape)}], got {rank}")
    try:
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK rarely fails
        raise NumericError(f"SVD did not converge: {exc}") from exc
    return FactoredLowRank(U[:, :rank], s[:rank], Vt[:rank, :].T)


def incoherence(U) -> IncoherenceReading:
    """Incoherence of an orthonormal-column frame.

    ``mu = (p/r) * max_i ||row_i||^2`` for a p-by-r frame; the frame is
    mu-incoherent for every bound at or above the returned value.
    """
    A = as_dense(U, "frame")
    _check_frame(A, 1e-6, "frame")
    row_sq = np.sum(A * A, axis=1)
    max_sq = float(np.max(row_sq))
    p, r = A.shape
    return IncoherenceReading(mu=p / r * max_sq, max_row_norm=float(np.sqrt(max_sq)))


def hard_threshold(M, s: int) -> SparseEntrySet:
    """Keep the ``s`` largest-magnitude entries of ``M``.

    Exactly ``min(s, nnz(M))`` entries are kept.  Ties at the cutoff are
    broken by row-major coordinate order (smallest flat index wins), which
    makes the operator deterministic.
    """
    A = as_dense(M)
    if s < 0 or s > A.size:
        raise ValueError(f"s must be in [0, {A.size}], got {s}")
    flat = A.ravel()
    if s == 0:
        return SparseEntrySet(*A.shape)
    absv = np.abs(flat)
    # lexsort uses the last key as primary: |value| descending, then flat index.
    order = np.lexsort((np.arange(flat.size), -absv))
    keep = order[:s]
    keep = keep[absv[keep] > 0]
    keep.sort()
    return SparseEntrySet(A.shape[0], A.shape[1],
                          keep // A.shape[1], keep % A.shape[1], flat[keep])


def _complement_columns(G: np.ndarray, count: int) -> np.ndarray:
    """Deterministic orthonormal basis (``count`` columns) of span(G)'s complement."""
    p = G.shape[0]
    proj = np.eye(p) - G @ G.T if G.size else np.eye(p)
    Q, _, _ = scipy.linalg.qr(proj, pivoting=True)
    return Q[:, :count]


def matrix_sign_info(M) -> tuple[np.ndarray, np.ndarray]:
    """Matrix sign (polar frame) plus the indices of deficient directions.

    Returns ``U_X @ V_X.T`` from the thin SVD of ``M``.  Singular values below
    ``1e-12 * sigma_1`` are treated as zero; those directions are completed by
    a deterministic orthonormal complement (column-pivoted QR) and reported in
    the second return value rather than raising mid-computation.
    """
    A = as_dense(M)
    try:
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericError(f"SVD did not converge: {exc}") from exc
    top = s[0] if s.size else 0.0
    deficient = np.flatnonzero(s <= SIGN_DEFICIENCY_RTOL * top)
    if deficient.size:
        good = np.setdiff1d(np.arange(s.size), deficient)
        U = U.copy()
        V = Vt.T.copy()
        U[:, deficient] = _complement_columns(U[:, good], deficient.size)
        V[:, deficient] = _complement_columns(V[:, good], deficient.size)
        Vt = V.T
    return U @ Vt, deficient


def matrix_sign(M) -> np.ndarray:
    """Nearest orthonormal-column matrix to ``M`` in Frobenius distance."""
    Q, _ = matrix_sign_info(M)
    return Q


def _project_vector_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of a vector onto {x >= 0, sum(x) = 1}."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, v.size + 1)
    k = ks[u - css / ks > 0][-1]
    tau = css[k - 1] / k
    return np.maximum(v - tau, 0.0)


def project_simplex(M, mode: str = "global") -> np.ndarray:
    """Project onto a frequency-matrix constraint set.

    mode='global'
        Euclidean projection of all entries jointly onto
        ``{F >= 0, sum(F) = 1}`` (water-filling threshold on the sorted
        entries).
    mode='rowwise'
        Each row is projected onto ``{x >= 0, sum(x) = 1}`` independently,
        which reduces to a uniform shift when the row already is nonnegative
        with sum below one, and to a threshold ``t_i`` otherwise.

    The two modes satisfy different constraints (total sum one versus every
    row summing to one) and are intentionally both available.
    """
    A = as_dense(M)
    if mode == "global":
        return _project_vector_to_simplex(A.ravel()).reshape(A.shape)
    if mode == "rowwise":
        return np.vstack([_project_vector_to_simplex(row) for row in A])
    raise ValueError(f"mode must be 'global' or 'rowwise', got {mode!r}")


def _clip_rows(X: np.ndarray, bound: float) -> np.ndarray:
    nrm = np.linalg.norm(X, axis=1)
    scale = np.ones_like(nrm)
    over = nrm > bound
    scale[over] = bound / nrm[over]
    return X * scale[:, None]


def _balance_rows(X: np.ndarray, bound: float) -> np.ndarray:
    """Rotate heavy rows against light ones until all row norms fit the bound.

    Left rotations preserve column orthonormality exactly, so this repairs
    row-norm violations without disturbing the frame property.
    """
    X = X.copy()
    p = X.shape[0]
    target_sq = bound * bound * (1.0 + 1e-12)
    for _ in range(200 * p):
        nrm_sq = np.sum(X * X, axis=1)
        i = int(np.argmax(nrm_sq))
        if nrm_sq[i] <= target_sq:
            return X
        k = int(np.argmin(nrm_sq))
        a, b = X[i], X[k]
        A = nrm_sq[i] - nrm_sq[k]
        B = 2.0 * float(a @ b)
        theta = 0.5 * np.arctan2(-A, B)
        c, sn = np.cos(theta), np.sin(theta)
        X[i], X[k] = c * a + sn * b, -sn * a + c * b
    raise NumericError("row balancing did not reach the requested bound")


def project_rows_incoherent(U, bound: float, max_rounds: int = 50,
                            stall_tol: float = 1e-10) -> np.ndarray:
    """Return an orthonormal frame whose rows all have 2-norm at most ``bound``.

    Alternates (a) row clipping onto the 2,inf ball with (b)
    re-orthonormalization via :func:`matrix_sign`, for at most ``max_rounds``
    rounds or until the iterate moves less than ``stall_tol`` in max norm.
    If the alternation stalls at an infeasible point (possible for spiky
    inputs, where clip and sign undo each other), a deterministic sequence of
    row rotations balances the remaining violations exactly.
    """
    X = as_dense(U, "frame")
    p, r = X.shape
    if bound < np.sqrt(r / p) - 1e-12:
        raise ValueError(
            f"bound {bound:g} below sqrt(rank/rows)={np.sqrt(r / p):g}: constraint set is empty")
    for _ in range(max_rounds):
        Q, _ = matrix_sign_info(_clip_rows(X, bound))
        moved = np.max(np.abs(Q - X))
        X = Q
        if moved < stall_tol:
            break
    if np.max(np.linalg.norm(X, axis=1)) > bound + 1e-9:
        X = _balance_rows(X, bound)
    return X


_POWER_ITER_SEED = 0x5EED_1E55
_POWER_ITER_MAX = 10_000
_POWER_ITER_RTOL = 1e-10
_SMALL_SVD_DIM = 64


def _spectral_norm(A: np.ndarray) -> float:
    if min(A.shape) <= _SMALL_SVD_DIM:
        return float(np.linalg.svd(A, compute_uv=False)[0])
    rng = np.random.default_rng(_POWER_ITER_SEED)
    v = rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(_POWER_ITER_MAX):
        w = A @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = A.T @ (w / nw)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return 0.0
        v /= nv
        if abs(nv - sigma) <= _POWER_ITER_RTOL * max(nv, 1e-300):
            return float(nv)
        sigma = nv
    return float(sigma)


def norms(M) -> MatrixNorms:
    """Frobenius, spectral, elementwise-max and elementwise-l1 norms of ``M``."""
    A = as_dense(M)
    return MatrixNorms(
        fro=float(np.linalg.norm(A)),
        spectral=_spectral_norm(A),
        max=float(np.max(np.abs(A))),
        l1=float(np.sum(np.abs(A))),
    )


def separation_ratio(P: FactoredLowRank, Q: FactoredLowRank) -> SeparationReading:
    """Energy-concentration ratio of ``P - Q`` and its dimension-scaled form.

    ``ratio = max(Delta)^2 / ||Delta||_F^2`` (0 when the difference vanishes)
    and ``scaled = ratio * max(p, q) / (mu * r^4)`` where ``mu`` is the worst
    measured incoherence of the four frames and ``r`` the larger rank.
    """
    if P.shape != Q.shape:
        raise ValueError(f"shape mismatch: {P.shape} vs {Q.shape}")
    delta = P.to_dense() - Q.to_dense()
    fro_sq = float(np.sum(delta * delta))
    if fro_sq == 0.0:
        return SeparationReading(ratio=0.0, scaled=0.0)
    ratio = float(np.max(np.abs(delta))) ** 2 / fro_sq
    mu = max(incoherence(F).mu for F in (P.U, P.V, Q.U, Q.V))
    r = max(P.rank, Q.rank)
    scaled = ratio * max(P.shape) / (mu * r ** 4)
    return SeparationReading(ratio=ratio, scaled=scaled)


def adversarial_pair(p: int, eps: float) -> tuple[FactoredLowRank, FactoredLowRank]:
    """Rank-1 pair whose difference concentrates on 2p entries.

    ``u`` is the flat unit vector; ``v = u + (eps/sqrt(p)) (e_{p-1} - e_p)``.
    Returns ``P = u u^T`` and ``Q = u v^T`` (the latter with ``v`` normalized
    into the frame and its length carried in sigma).  Both sides are
    ``(1+eps)^2``-incoherent or better and the difference has exactly ``2p``
    nonzero entries.
    """
    if p < 3:
        raise ValueError(f"p must be at least 3, got {p}")
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    u = np.full((p, 1), 1.0 / np.sqrt(p))
    v = u.copy()
    v[p - 2, 0] += eps / np.sqrt(p)
    v[p - 1, 0] -= eps / np.sqrt(p)
    vn = float(np.linalg.norm(v))
    P = FactoredLowRank(u, np.array([1.0]), u)
    Q = FactoredLowRank(u, np.array([vn]), v / vn)
    return P, Q


# -- CSV wire formats --------------------------------------------------------

def save_dense_csv(path, M) -> None:
    """Write a dense matrix: header line ``rows,cols``, the two sizes, then row-major lines."""
    A = as_dense(M)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("rows,cols\n")
        fh.write(f"{A.shape[0]},{A.shape[1]}\n")
        for row in A:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def load_dense_csv(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != "rows,cols":
        raise ValueError(f"{path}: expected 'rows,cols' header")
    try:
        rows, cols = (int(tok) for tok in lines[1].split(","))
    except (IndexError, ValueError) as exc:
        raise ValueError(f"{path}: malformed size line") from exc
    if len(lines) != 2 + rows:
        raise ValueError(f"{path}: expected {rows} data lines, found {len(lines) - 2}")
    data = [[float(tok) for tok in ln.split(",")] for ln in lines[2:]]
    A = np.asarray(data)
    if A.shape != (rows, cols):
        raise ValueError(f"{path}: data shape {A.shape} does not match header ({rows},{cols})")
    return as_dense(A, str(path))


def save_sparse_csv(path, S: SparseEntrySet) -> None:
    """Write sparse triples ``i,j,value`` (0-based indices) under that header."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("i,j,value\n")
        for i, j, v in zip(S.row_idx, S.col_idx, S.values):
            fh.write(f"{i},{j},{repr(float(v))}\n")


def load_sparse_csv(path, rows: int | None = None, cols: int | None = None) -> SparseEntrySet:
    """Read sparse triples; the shape is inferred from the support when not given."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != "i,j,value":
        raise ValueError(f"{path}: expected 'i,j,value' header")
    triples = []
    for ln in lines[1:]:
        toks = ln.split(",")
        if len(toks) != 3:
            raise ValueError(f"{path}: malformed triple line {ln!r}")
        triples.append((int(toks[0]), int(toks[1]), float(toks[2])))
    if rows is None:
        rows = 1 + max((t[0] for t in triples), default=0)
    if cols is None:
        cols = 1 + max((t[1] for t in triples), default=0)
    return SparseEntrySet.from_triples(rows, cols, triples)
