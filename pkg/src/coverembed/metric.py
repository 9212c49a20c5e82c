"""Finite pseudometric spaces: construction, validation, comparison.

A space is a dense n x n matrix of nonnegative distances with zero diagonal.
Distinct points at distance zero are allowed (pseudometric); the triangle
inequality is enforced only in strict mode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

SYMMETRY_TOL = 1e-12
TRIANGLE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class PseudometricSpace:
    """Immutable finite pseudometric space (distance matrix + optional labels)."""

    d: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        self.d.flags.writeable = False
        if self.labels is not None and len(self.labels) != self.n:
            raise ValidationError(
                f"got {len(self.labels)} labels for {self.n} points"
            )

    @property
    def n(self) -> int:
        return self.d.shape[0]

    def distance(self, i: int, j: int) -> float:
        return float(self.d[i, j])

    def permuted(self, perm) -> "PseudometricSpace":
        """Space with points reordered so new index t is old index perm[t]."""
        perm = np.asarray(perm, dtype=int)
        labels = None
        if self.labels is not None:
            labels = tuple(self.labels[p] for p in perm)
        return PseudometricSpace(self.d[np.ix_(perm, perm)].copy(), labels)

    def shifted(self, eps: float) -> "PseudometricSpace":
        """Space with every off-diagonal distance increased by eps >= 0."""
        if eps < 0:
            raise ValidationError("shift must be nonnegative")
        d = self.d + eps
        np.fill_diagonal(d, 0.0)
        return PseudometricSpace(d, self.labels)


def _first_triangle_violation(d: np.ndarray, tol: float):
    """Lexicographically smallest (i, k, j) with d[i,k] > d[i,j] + d[j,k] + tol."""
    n = d.shape[0]
    best = None
    for j in range(n):
        viol = d > d[:, j, None] + d[None, j, :] + tol
        viol[:, j] = False
        viol[j, :] = False
        if viol.any():
            i, k = np.argwhere(viol)[0]
            cand = (int(i), int(k), j)
            if best is None or cand < best:
                best = cand
    return best


def from_matrix(raw, strict: bool = False, labels=None) -> PseudometricSpace:
    """Validate a raw square matrix as a pseudometric space.

    Asymmetry beyond 1e-12 is rejected; smaller asymmetry is absorbed by
    symmetrizing d <- (d + d^T)/2. Strict mode additionally checks the
    triangle inequality (absolute slack 1e-9).
    """
    d = np.array(raw, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValidationError(f"distance matrix must be square, got shape {d.shape}")
    if not np.isfinite(d).all():
        i, j = np.argwhere(~np.isfinite(d))[0]
        raise ValidationError(f"non-finite distance at ({i}, {j})")
    asym = np.abs(d - d.T)
    if asym.max(initial=0.0) > SYMMETRY_TOL:
        i, j = np.argwhere(asym > SYMMETRY_TOL)[0]
        raise ValidationError(
            f"asymmetric distances at ({i}, {j}): {d[i, j]!r} vs {d[j, i]!r}"
        )
    d = (d + d.T) / 2.0
    if d.min(initial=0.0) < 0:
        i, j = np.argwhere(d < 0)[0]
        raise ValidationError(f"negative distance at ({i}, {j}): {d[i, j]!r}")
    diag = np.abs(np.diagonal(d))
    if diag.max(initial=0.0) > 0:
        i = int(np.argmax(diag > 0))
        raise ValidationError(f"nonzero diagonal at ({i}, {i}): {d[i, i]!r}")
    if strict:
        bad = _first_triangle_violation(d, TRIANGLE_TOL)
        if bad is not None:
            i, k, j = bad
            raise ValidationError(
                f"triangle violation at ({i}, {k}, {j}): "
                f"{d[i, k]!r} > {d[i, j]!r} + {d[j, k]!r}"
            )
    if labels is not None:
        labels = tuple(str(x) for x in labels)
    return PseudometricSpace(d, labels)


def from_points_euclidean(points, labels=None) -> PseudometricSpace:
    """Euclidean distance matrix of an n x k point array (rows are points)."""
    p = np.atleast_2d(np.array(points, dtype=float))
    if p.ndim != 2:
        raise ValidationError(f"points must form an n x k array, got shape {p.shape}")
    if p.shape[0] < 1:
        raise ValidationError("need at least one point")
    diff = p[:, None, :] - p[None, :, :]
    d = np.sqrt((diff * diff).sum(axis=-1))
    np.fill_diagonal(d, 0.0)
    if labels is not None:
        labels = tuple(str(x) for x in labels)
    return PseudometricSpace(d, labels)


def from_sequences_hamming(seqs, labels=None) -> PseudometricSpace:
    """Hamming distance matrix of equal-length strings (integer-valued)."""
    seqs = list(seqs)
    if not seqs:
        raise ValidationError("need at least one sequence")
    length = len(seqs[0])
    for t, s in enumerate(seqs):
        if len(s) != length:
            raise ValidationError(
                f"sequence {t} has length {len(s)}, expected {length}"
            )
    codes = np.frombuffer("".join(seqs).encode("utf-8"), dtype=np.uint8)
    codes = codes.reshape(len(seqs), length)
    d = hamming_matrix(codes)
    if labels is not None:
        labels = tuple(str(x) for x in labels)
    return PseudometricSpace(d, labels)


def hamming_matrix(codes: np.ndarray, chunk: int = 64) -> np.ndarray:
    """Pairwise Hamming distances between rows of a 2-d code array."""
    n = codes.shape[0]
    d = np.empty((n, n), dtype=float)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        block = codes[start:stop, None, :] != codes[None, :, :]
        d[start:stop] = block.sum(axis=-1, dtype=np.int64)
    np.fill_diagonal(d, 0.0)
    return d


def isometry_epsilon(x: PseudometricSpace, y: PseudometricSpace) -> float:
    """Least eps making both identity maps non-expansive into the (+eps) shift.

    Equals max_{i,j} |d_X[i,j] - d_Y[i,j]| for identically indexed spaces.
    """
    if x.n != y.n:
        raise ValidationError(f"size mismatch: {x.n} vs {y.n}")
    return float(np.abs(x.d - y.d).max(initial=0.0))
