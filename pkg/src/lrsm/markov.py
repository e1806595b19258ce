"""Markov-chain machinery and the transition-kernel estimation pipeline.

Transition matrices are row-stochastic square arrays; frequency matrices are
nonnegative square arrays whose entries sum to one (the long-run pair-visit
probabilities ``F = diag(pi) P``).  Both are carried as plain ndarrays and
validated at operation boundaries.
"""

from __future__ import annotations

from math import gcd

import numpy as np
import scipy.sparse
import scipy.sparse.csgraph

from .errors import NumericError, StructureError
from .matops import as_dense, project_simplex, thin_svd
from .solver import SolverConfig, SolverReport, solve

__all__ = [
    "check_transition_matrix",
    "check_frequency_matrix",
    "ergodicity_failure",
    "simulate_chain",
    "empirical_frequency",
    "estimate_from_frequency",
    "estimate_transition",
    "frequency_to_transition",
    "stationary_distribution",
    "mixing_time",
    "pair_chain",
    "conditional_mean",
    "spectral_baseline",
    "save_trajectory",
    "load_trajectory",
]

ROW_SUM_TOL = 1e-10


def check_transition_matrix(P) -> np.ndarray:
    """Validate a row-stochastic square matrix and return it as an ndarray."""
    A = as_dense(P, "transition matrix")
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"transition matrix must be square, got {A.shape}")
    if np.min(A) < 0 or np.max(A) > 1 + ROW_SUM_TOL:
        raise ValueError("transition matrix entries must lie in [0, 1]")
    dev = np.max(np.abs(A.sum(axis=1) - 1.0))
    if dev > ROW_SUM_TOL:
        raise ValueError(f"transition matrix rows must sum to 1 (max deviation {dev:.3e})")
    return A


def check_frequency_matrix(F) -> np.ndarray:
    """Validate a nonnegative square matrix with total sum one."""
    A = as_dense(F, "frequency matrix")
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"frequency matrix must be square, got {A.shape}")
    if np.min(A) < 0:
        raise ValueError("frequency matrix entries must be nonnegative")
    dev = abs(float(A.sum()) - 1.0)
    if dev > ROW_SUM_TOL:
        raise ValueError(f"frequency matrix entries must sum to 1 (deviation {dev:.3e})")
    return A


def _period(support: np.ndarray) -> int:
    """Period of a strongly connected directed graph via BFS level differences."""
    p = support.shape[0]
    dist = np.full(p, -1)
    dist[0] = 0
    frontier = [0]
    adj = [np.flatnonzero(support[i]) for i in range(p)]
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    g = 0
    for u in range(p):
        for v in adj[u]:
            g = gcd(g, dist[u] + 1 - dist[v])
    return abs(g) if g else 0


def ergodicity_failure(P) -> str | None:
    """Return a description of why ``P`` is not ergodic, or ``None`` if it is."""
    A = check_transition_matrix(P)
    support = A > 0
    graph = scipy.sparse.csr_matrix(support)
    n_comp, _ = scipy.sparse.csgraph.connected_components(graph, directed=True,
                                                          connection="strong")
    if n_comp > 1:
        return f"not irreducible: support graph has {n_comp} strongly connected components"
    g = _period(support)
    if g != 1:
        return f"periodic: support graph has period {g}"
    return None


def _require_ergodic(P) -> np.ndarray:
    A = check_transition_matrix(P)
    failure = ergodicity_failure(A)
    if failure is not None:
        raise StructureError(failure)
    return A


def stationary_distribution(P) -> np.ndarray:
    """Unique stationary row vector of an ergodic chain.

    Solves ``pi P = pi`` with the normalization ``sum(pi) = 1`` appended as an
    extra equation; the residual ``||pi P - pi||_1`` is checked against 1e-10.
    """
    A = _require_ergodic(P)
    p = A.shape[0]
    lhs = np.vstack([A.T - np.eye(p), np.ones((1, p))])
    rhs = np.zeros(p + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    residual = float(np.sum(np.abs(pi @ A - pi)))
    if residual > 1e-10:
        raise NumericError(f"stationary solve residual {residual:.3e} exceeds 1e-10")
    return pi


def simulate_chain(P, n: int, init="stationary", seed: int = 0) -> np.ndarray:
    """Sample a trajectory ``X_0..X_n`` (n transitions) from the chain.

    ``init`` is ``"stationary"``, a fixed state index, or a custom initial
    distribution.  Deterministic given the seed.
    """
    A = check_transition_matrix(P)
    p = A.shape[0]
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    if isinstance(init, str):
        if init != "stationary":
            raise ValueError(f"unknown init {init!r}")
        start = stationary_distribution(A)
    elif np.isscalar(init):
        state = int(init)
        if not 0 <= state < p:
            raise ValueError(f"init state {state} out of range [0, {p})")
        start = np.zeros(p)
        start[state] = 1.0
    else:
        start = np.asarray(init, dtype=float).ravel()
        if start.size != p or np.min(start) < 0 or abs(start.sum() - 1.0) > 1e-9:
            raise ValueError("init distribution must be a length-p probability vector")
    cum_rows = np.cumsum(A, axis=1)
    u = rng.random(n + 1)
    x = np.empty(n + 1, dtype=np.int64)
    x[0] = min(int(np.searchsorted(np.cumsum(start), u[0], side="right")), p - 1)
    for k in range(n):
        x[k + 1] = min(int(np.searchsorted(cum_rows[x[k]], u[k + 1], side="right")), p - 1)
    return x


def empirical_frequency(traj, p: int) -> np.ndarray:
    """Normalized pair-visit counts of consecutive states.

    With ``n = len(traj) - 1`` transitions, entry ``(i, j)`` is the fraction
    of steps moving from ``i`` to ``j``; the entries sum to one.
    """
    x = np.asarray(traj, dtype=np.int64).ravel()
    if x.size < 2:
        raise ValueError("trajectory must contain at least one transition")
    if x.min() < 0 or x.max() >= p:
        raise ValueError(f"states must lie in [0, {p}), got range [{x.min()}, {x.max()}]")
    n = x.size - 1
    flat = x[:-1] * p + x[1:]
    counts = np.bincount(flat, minlength=p * p).astype(float)
    return (counts / n).reshape(p, p)


def frequency_to_transition(F) -> np.ndarray:
    """Row normalization of a frequency matrix; all-zero rows become uniform."""
    A = check_frequency_matrix(F)
    return check_transition_matrix(_normalize_rows(A))


def estimate_from_frequency(F_tilde, config: SolverConfig,
                            projection_mode: str = "global",
                            ) -> tuple[np.ndarray, np.ndarray, SolverReport]:
    """Structured estimation given an (empirical) frequency matrix.

    Low-rank-plus-sparse fit, entrywise truncation to [0, 1], projection onto
    the frequency-matrix set (mode ``global`` or ``rowwise``), then row
    normalization into a transition matrix.
    """
    A = as_dense(F_tilde, "frequency matrix")
    L, S, report = solve(A, config)
    F0 = L.to_dense() + S.to_dense()
    F1 = np.clip(F0, 0.0, 1.0)
    F_hat = project_simplex(F1, mode=projection_mode)
    P_hat = _normalize_rows(F_hat)
    return F_hat, P_hat, report


def estimate_transition(traj, p: int, config: SolverConfig,
                        projection_mode: str = "global",
                        ) -> tuple[np.ndarray, np.ndarray, SolverReport]:
    """Structured transition estimation from a single trajectory.

    Computes the empirical frequency matrix and runs
    :func:`estimate_from_frequency`.  Returns ``(F_hat, P_hat, report)``.
    """
    return estimate_from_frequency(empirical_frequency(traj, p), config, projection_mode)


def _normalize_rows(F: np.ndarray) -> np.ndarray:
    sums = F.sum(axis=1, keepdims=True)
    P = np.where(sums > 0, F / np.where(sums == 0, 1.0, sums), 1.0 / F.shape[1])
    # exact row sums: renormalize once more to absorb float accumulation
    return P / P.sum(axis=1, keepdims=True)


def mixing_time(P, eps: float, cap: int = 10 ** 6) -> int:
    """Smallest ``k`` with ``max_i 0.5 * ||e_i P^k - pi||_1 <= eps``.

    Uses exact incremental matrix powers, so it is intended for modest state
    spaces (p <= 64).
    """
    if not 0 < eps < 1:
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    A = _require_ergodic(P)
    pi = stationary_distribution(A)
    M = A.copy()
    for k in range(1, cap + 1):
        worst = 0.5 * float(np.max(np.sum(np.abs(M - pi), axis=1)))
        if worst <= eps:
            return k
        M = M @ A
    raise NumericError(f"mixing time exceeds cap of {cap} steps")


def pair_chain(P) -> tuple[list[tuple[int, int]], np.ndarray, np.ndarray]:
    """Chain over consecutive state pairs ``(X_k, X_{k+1})``.

    The state space keeps only pairs with positive transition probability.
    Returns the pair list (row-major order), the pair-chain transition matrix
    ``Q[(i,j),(k,l)] = 1{j=k} P[k,l]``, and its stationary vector
    ``mu[(k,l)] = pi_k P[k,l]``.
    """
    A = _require_ergodic(P)
    pi = stationary_distribution(A)
    p = A.shape[0]
    pairs = [(i, j) for i in range(p) for j in range(p) if A[i, j] > 0]
    index = {pair: m for m, pair in enumerate(pairs)}
    m = len(pairs)
    Q = np.zeros((m, m))
    mu = np.empty(m)
    for a, (i, j) in enumerate(pairs):
        mu[a] = pi[i] * A[i, j]
        for l in range(p):
            if A[j, l] > 0:
                Q[a, index[(j, l)]] = A[j, l]
    return pairs, Q, mu


def conditional_mean(P, v) -> np.ndarray:
    """Expected next-step value ``P v`` for a value vector ``v``."""
    A = check_transition_matrix(P)
    vec = np.asarray(v, dtype=float).ravel()
    if vec.size != A.shape[1]:
        raise ValueError(f"value vector length {vec.size} does not match p={A.shape[1]}")
    return A @ vec


def spectral_baseline(F_tilde, rank: int, projection_mode: str = "global",
                      ) -> tuple[np.ndarray, np.ndarray]:
    """Rank-``rank`` truncated SVD of the empirical frequency matrix.

    Applies the same truncation, projection and row normalization as
    :func:`estimate_transition` so the comparison isolates the estimator, not
    the post-processing.
    """
    A = as_dense(F_tilde, "frequency matrix")
    L = thin_svd(A, rank)
    F1 = np.clip(L.to_dense(), 0.0, 1.0)
    F_hat = project_simplex(F1, mode=projection_mode)
    return F_hat, _normalize_rows(F_hat)


def save_trajectory(path, traj) -> None:
    x = np.asarray(traj, dtype=np.int64).ravel()
    with open(path, "w", encoding="utf-8") as fh:
        for state in x:
            fh.write(f"{int(state)}\n")


def load_trajectory(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        states = [int(ln.strip()) for ln in fh if ln.strip()]
    if not states:
        raise ValueError(f"{path}: empty trajectory")
    return np.asarray(states, dtype=np.int64)
