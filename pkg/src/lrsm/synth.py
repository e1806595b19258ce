"""Seeded generators for synthetic experiment instances.

All generators are pure functions of their spec and seed, driven by numpy's
``default_rng`` (PCG64).  Draw order is part of the contract: factors A, D, B
first, then the sparse support, then the sparse values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import NumericError
from .matops import FactoredLowRank, SparseEntrySet, hard_threshold, thin_svd
from .markov import ergodicity_failure, stationary_distribution

__all__ = [
    "InstanceSpec",
    "gen_lowrank_sparse",
    "gen_transition",
    "noise_gaussian",
    "noise_empirical_prob",
    "random_incoherent_pair",
]

NOISE_KINDS = ("none", "gaussian", "empirical_prob")

_SPEC_FIELDS = ("p", "r", "s", "t", "sigma_noise", "noise_kind", "n_noise", "seed")


@dataclass(frozen=True)
class InstanceSpec:
    """Parameters of one synthetic ground truth plus its noise model."""

    p: int
    r: int
    s: int
    t: float = 0.0
    sigma_noise: float = 0.0
    noise_kind: str = "none"
    n_noise: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.p < 1 or self.r < 1 or self.s < 0:
            raise ValueError("p, r must be positive and s nonnegative")
        if self.r > self.p:
            raise ValueError(f"r={self.r} exceeds p={self.p}")
        if self.s > self.p * self.p:
            raise ValueError(f"s={self.s} exceeds p^2={self.p * self.p}")
        if self.t < 0 or self.sigma_noise < 0:
            raise ValueError("t and sigma_noise must be nonnegative")
        if self.noise_kind not in NOISE_KINDS:
            raise ValueError(f"noise_kind must be one of {NOISE_KINDS}")
        if self.n_noise < 1:
            raise ValueError("n_noise must be positive")

    @classmethod
    def from_json(cls, text: str) -> "InstanceSpec":
        doc = json.loads(text)
        unknown = set(doc) - set(_SPEC_FIELDS)
        if unknown:
            raise ValueError(f"unknown instance spec fields: {sorted(unknown)}")
        return cls(**doc)

    def to_json(self) -> str:
        return json.dumps({f: getattr(self, f) for f in _SPEC_FIELDS}, sort_keys=True)


def _draw_parts(rng: np.random.Generator, p: int, r: int, s: int):
    A = rng.uniform(size=(p, r))
    D = rng.uniform(size=r)
    B = rng.uniform(size=(r, p))
    support = rng.choice(p * p, size=s, replace=False) if s else np.empty(0, dtype=np.int64)
    values = rng.uniform(size=s)
    S_dense = np.zeros(p * p)
    S_dense[support] = values
    return A @ np.diag(D) @ B, S_dense.reshape(p, p)


def gen_lowrank_sparse(spec: InstanceSpec) -> tuple[FactoredLowRank, SparseEntrySet, np.ndarray]:
    """Ground truth ``M = A D B + S`` with uniform factors and sparse values.

    Factors and sparse values are i.i.d. Uniform[0, 1]; the support is drawn
    uniformly without replacement.  Returns the low-rank part as the thin SVD
    of ``A D B``, the sparse part, and the dense sum.
    """
    rng = np.random.default_rng(spec.seed)
    ADB, S_dense = _draw_parts(rng, spec.p, spec.r, spec.s)
    L = thin_svd(ADB, spec.r)
    S = hard_threshold(S_dense, spec.s)
    return L, S, ADB + S_dense


def gen_transition(spec: InstanceSpec,
                   ) -> tuple[np.ndarray, np.ndarray, FactoredLowRank, SparseEntrySet]:
    """Structured transition kernel ``P`` from ``P0 = |t*ADB + S|`` row-normalized.

    Degenerate draws (a zero row in ``P0`` or a non-ergodic chain) trigger a
    regeneration from the next seeded substream, up to 100 attempts.  Returns
    ``(P, F, L_star, S_star)`` where ``F = diag(pi) P`` and the ground-truth
    split of ``F`` is its best rank-``r`` approximation plus the hard
    threshold of the remainder at sparsity ``s`` (the split is reported for
    error decomposition; the total error in ``F`` does not depend on it).
    """
    for attempt in range(100):
        rng = np.random.default_rng([spec.seed, attempt])
        ADB, S_dense = _draw_parts(rng, spec.p, spec.r, spec.s)
        P0 = np.abs(spec.t * ADB + S_dense)
        row_sums = P0.sum(axis=1)
        if np.any(row_sums == 0):
            continue
        P = P0 / row_sums[:, None]
        if ergodicity_failure(P) is not None:
            continue
        pi = stationary_distribution(P)
        F = pi[:, None] * P
        L_star = thin_svd(F, spec.r)
        S_star = hard_threshold(F - L_star.to_dense(), spec.s)
        return P, F, L_star, S_star
    raise NumericError("could not generate an ergodic transition kernel in 100 attempts")


def noise_gaussian(p: int, q: int, sigma: float, seed: int = 0) -> np.ndarray:
    """i.i.d. centered Gaussian noise with standard deviation ``sigma``."""
    if p < 1 or q < 1:
        raise ValueError("p and q must be positive")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    rng = np.random.default_rng(seed)
    if sigma == 0:
        return np.zeros((p, q))
    return rng.normal(0.0, sigma, size=(p, q))


def noise_empirical_prob(p: int, n: int, seed: int = 0) -> np.ndarray:
    """Rows of empirical-minus-true probabilities of the uniform law on p cells.

    Each row is an independent ``counts/n - 1/p`` with counts multinomial on
    ``n`` uniform draws, so every row sums to zero (up to the rounding of the
    ``k/n - 1/p`` terms) and no entry goes below ``-1/p``.
    """
    if p < 1:
        raise ValueError("p must be positive")
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(n, np.full(p, 1.0 / p), size=p)
    return counts / n - 1.0 / p


def random_incoherent_pair(p: int, r: int, seed: int = 0,
                           ) -> tuple[FactoredLowRank, FactoredLowRank]:
    """Two seeded rank-``r`` matrices with Haar frames and uniform spectra.

    Haar-distributed frames spread mass across rows, so the pair is incoherent
    with high probability; used by the separation-ratio panels.
    """
    if r < 1 or r > p:
        raise ValueError(f"need 1 <= r <= p, got r={r}, p={p}")
    rng = np.random.default_rng(seed)

    def _one() -> FactoredLowRank:
        U, _ = np.linalg.qr(rng.standard_normal((p, r)))
        V, _ = np.linalg.qr(rng.standard_normal((p, r)))
        sigma = np.sort(rng.uniform(size=r))[::-1]
        return FactoredLowRank(U, sigma, V)

    return _one(), _one()
