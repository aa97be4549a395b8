"""Statistical primitives: correlations, sign-flip permutation tests, FDR.

Everything here is pure and deterministic. The permutation machinery keeps
the observed statistic and the identity assignment on the same accumulation
path (both reduce with np.sum over the last axis), so the identity row ties
the observed value bitwise and exact p-values can never be 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    AllTied,
    ConstantInput,
    InvalidP,
    InvalidParameter,
    LengthMismatch,
    NonFiniteValue,
    TooFewSubjects,
)

__all__ = [
    "PermutationScheme",
    "default_scheme",
    "pearson",
    "spearman",
    "average_ranks",
    "sign_flip_test",
    "paired_difference_test",
    "fdr_bh",
    "sem",
]

EXACT_MAX_SUBJECTS = 20
EXACT_AUTO_MAX = 12
DEFAULT_MC_SAMPLES = 10_000
_ENUM_CHUNK = 1 << 14


@dataclass(frozen=True)
class PermutationScheme:
    """How sign-flip null distributions are generated.

    exact enumerates all 2^n assignments (n <= 20); monte_carlo draws
    n_samples random assignments from the given seed and adds the identity.
    """

    mode: str
    n_samples: int = DEFAULT_MC_SAMPLES
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("exact", "monte_carlo"):
            raise InvalidParameter(f"unknown permutation mode {self.mode!r}")
        if self.mode == "monte_carlo" and self.n_samples < 1000:
            raise InvalidParameter(
                f"monte_carlo needs n_samples >= 1000, got {self.n_samples}"
            )
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidParameter("seed must fit in 64 unsigned bits")


def default_scheme(n_subjects: int, seed: int = 0) -> PermutationScheme:
    """Exact enumeration for small groups, Monte-Carlo beyond 12 subjects."""
    if n_subjects <= EXACT_AUTO_MAX:
        return PermutationScheme(mode="exact", seed=seed)
    return PermutationScheme(mode="monte_carlo", n_samples=DEFAULT_MC_SAMPLES, seed=seed)


def _as_vector(x, name: str) -> np.ndarray:
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise LengthMismatch(f"{name} must be 1-d, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue(f"{name} contains non-finite values")
    return arr


def pearson(a, b) -> float:
    """Product-moment correlation, two-pass, clamped to [-1, 1].

    Bitwise-equal inputs return exactly 1.0 and exact negations exactly
    -1.0, so downstream identities (self-comparison ceilings) hold without
    tolerance.
    """
    a, b = _as_vector(a, "a"), _as_vector(b, "b")
    if a.size != b.size:
        raise LengthMismatch(f"length mismatch: {a.size} vs {b.size}")
    if a.size < 2:
        raise TooFewSubjects(f"need >= 2 points, got {a.size}")
    if np.all(a == a[0]) or np.all(b == b[0]):
        raise ConstantInput("pearson undefined for a constant vector")
    if np.array_equal(a, b):
        return 1.0
    if np.array_equal(a, -b):
        return -1.0
    ca, cb = a - a.mean(), b - b.mean()
    sxy = float(np.dot(ca, cb))
    sxx = float(np.dot(ca, ca))
    syy = float(np.dot(cb, cb))
    r = sxy / np.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, r)))


def average_ranks(x) -> np.ndarray:
    """Fractional ranks (1-based); tied values share the mean of their span."""
    x = _as_vector(x, "x")
    order = np.argsort(x, kind="stable")
    sx = x[order]
    n = x.size
    starts = np.flatnonzero(np.r_[True, sx[1:] != sx[:-1]])
    ends = np.r_[starts[1:], n]
    group_rank = (starts + ends + 1) / 2.0  # mean of 1-based positions start+1 .. end
    ranks = np.empty(n, dtype=np.float64)
    ranks[order] = np.repeat(group_rank, ends - starts)
    return ranks


def spearman(a, b) -> float:
    """Rank correlation with average-tie handling."""
    a, b = _as_vector(a, "a"), _as_vector(b, "b")
    if a.size != b.size:
        raise LengthMismatch(f"length mismatch: {a.size} vs {b.size}")
    if a.size < 3:
        raise TooFewSubjects(f"need >= 3 points, got {a.size}")
    ra, rb = average_ranks(a), average_ranks(b)
    if np.all(ra == ra[0]) or np.all(rb == rb[0]):
        raise AllTied("spearman undefined when one vector is entirely tied")
    return pearson(ra, rb)


def _validate_scheme_for_n(scheme: PermutationScheme, n: int) -> None:
    if scheme.mode == "exact" and n > EXACT_MAX_SUBJECTS:
        raise InvalidParameter(
            f"exact enumeration limited to {EXACT_MAX_SUBJECTS} subjects, got {n}"
        )


def _count_at_least(
    values: np.ndarray, signs: np.ndarray, observed: float, alternative: str
) -> int:
    stats = np.sum(signs * values[None, :], axis=1) / values.size
    if alternative == "greater":
        return int(np.count_nonzero(stats >= observed))
    return int(np.count_nonzero(np.abs(stats) >= abs(observed)))


def sign_flip_test(values, alternative: str = "greater", scheme: PermutationScheme | None = None) -> float:
    """Permutation p-value for mean(values) under random sign flips.

    The null distribution flips the sign of each subject's value
    independently. ``greater`` counts assignments whose mean reaches the
    observed mean; ``two_sided`` compares absolute means. The identity
    assignment is always in the reference set, so p > 0.
    """
    values = _as_vector(values, "values")
    n = values.size
    if n < 2:
        raise TooFewSubjects(f"need >= 2 subjects, got {n}")
    if alternative not in ("greater", "two_sided"):
        raise InvalidParameter(f"unknown alternative {alternative!r}")
    if scheme is None:
        scheme = default_scheme(n)
    _validate_scheme_for_n(scheme, n)
    observed = float(np.sum(values) / n)

    if scheme.mode == "exact":
        total = 1 << n
        count = 0
        bit_positions = np.arange(n, dtype=np.uint64)
        for start in range(0, total, _ENUM_CHUNK):
            codes = np.arange(start, min(start + _ENUM_CHUNK, total), dtype=np.uint64)
            bits = (codes[:, None] >> bit_positions[None, :]) & np.uint64(1)
            signs = 1.0 - 2.0 * bits.astype(np.float64)
            count += _count_at_least(values, signs, observed, alternative)
        return count / total

    rng = np.random.default_rng(scheme.seed)
    signs = rng.integers(0, 2, size=(scheme.n_samples, n)).astype(np.float64) * 2.0 - 1.0
    count = _count_at_least(values, signs, observed, alternative)
    return (1 + count) / (scheme.n_samples + 1)


def paired_difference_test(a, b, scheme: PermutationScheme | None = None) -> float:
    """Two-sided sign-flip test on per-subject differences a - b."""
    a, b = _as_vector(a, "a"), _as_vector(b, "b")
    if a.size != b.size:
        raise LengthMismatch(f"length mismatch: {a.size} vs {b.size}")
    if a.size < 2:
        raise TooFewSubjects(f"need >= 2 subjects, got {a.size}")
    return sign_flip_test(a - b, alternative="two_sided", scheme=scheme)


def fdr_bh(p_values, q: float = 0.05) -> np.ndarray:
    """Benjamini-Hochberg step-up; returns a reject mask in input order."""
    p = _as_vector(p_values, "p_values")
    if p.size == 0:
        return np.zeros(0, dtype=bool)
    if np.any(p <= 0.0) or np.any(p > 1.0):
        bad = p[(p <= 0.0) | (p > 1.0)][0]
        raise InvalidP(f"p-values must lie in (0, 1], got {bad!r}")
    if not 0.0 < q < 1.0:
        raise InvalidParameter(f"q must lie in (0, 1), got {q!r}")
    m = p.size
    order = np.argsort(p, kind="stable")
    sorted_p = p[order]
    thresholds = q * np.arange(1, m + 1) / m
    passing = np.flatnonzero(sorted_p <= thresholds)
    if passing.size == 0:
        return np.zeros(m, dtype=bool)
    cutoff = sorted_p[passing[-1]]
    return p <= cutoff


def sem(values) -> float:
    """Standard error of the mean: sd(n-1 denominator) / sqrt(n)."""
    v = _as_vector(values, "values")
    if v.size < 2:
        raise TooFewSubjects(f"need >= 2 values, got {v.size}")
    return float(np.std(v, ddof=1) / np.sqrt(v.size))
