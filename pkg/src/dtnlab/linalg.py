"""Dense symmetric kernels: inertia, eigenpairs, Schur complements, solves.

The inertia routine is a blocked Bunch-Kaufman LDL^T factorization written
against numpy; it is the Morse-index engine for every other module.  The
eigensolver wraps LAPACK (via numpy) and serves as the independent oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ASingular, EigenFailure, Indeterminate

DEFAULT_ZERO_TOL = 1e-9

# Bunch-Kaufman growth constant (1 + sqrt(17)) / 8
_ALPHA = (1.0 + math.sqrt(17.0)) / 8.0
_PANEL = 48


@dataclass(frozen=True)
class Inertia:
    """Sign counts (negative, zero, positive) of a symmetric matrix."""

    n_minus: int
    n_zero: int
    n_plus: int
    zero_tol: float = DEFAULT_ZERO_TOL
    min_abs_nonzero: float = math.inf

    @property
    def order(self) -> int:
        return self.n_minus + self.n_zero + self.n_plus

    @property
    def mor(self) -> int:
        return self.n_minus

    @property
    def mor0(self) -> int:
        return self.n_minus + self.n_zero

    def __add__(self, other: "Inertia") -> "Inertia":
        return Inertia(
            self.n_minus + other.n_minus,
            self.n_zero + other.n_zero,
            self.n_plus + other.n_plus,
            max(self.zero_tol, other.zero_tol),
            min(self.min_abs_nonzero, other.min_abs_nonzero),
        )

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.n_minus, self.n_zero, self.n_plus)


def _scale(m: np.ndarray) -> float:
    return float(np.max(np.abs(m))) if m.size else 0.0


def classify(values, zero_tol: float, scale: float, *, strict: bool = True) -> Inertia:
    """Count signs of ``values``; |v| <= zero_tol*scale is zero.

    With ``strict`` a value in the gray band (zero_tol*scale, 10*zero_tol*scale)
    raises Indeterminate.
    """
    values = np.asarray(values, dtype=float)
    thresh = zero_tol * scale
    mags = np.abs(values)
    zero = mags <= thresh
    if strict and scale > 0:
        gray = (~zero) & (mags < 10.0 * thresh)
        if np.any(gray):
            raise Indeterminate(
                f"{int(gray.sum())} value(s) within a decade of the zero threshold "
                f"{thresh:.3e} (smallest {float(mags[gray].min()):.3e})"
            )
    nonzero = mags[~zero]
    return Inertia(
        n_minus=int(np.sum((values < 0) & ~zero)),
        n_zero=int(np.sum(zero)),
        n_plus=int(np.sum((values > 0) & ~zero)),
        zero_tol=zero_tol,
        min_abs_nonzero=float(nonzero.min()) if nonzero.size else math.inf,
    )


def _swap(a: np.ndarray, p: int, q: int) -> None:
    if p == q:
        return
    a[[p, q], :] = a[[q, p], :]
    a[:, [p, q]] = a[:, [q, p]]


def ldlt_pivots(m: np.ndarray, zero_tol: float = DEFAULT_ZERO_TOL, scale: float = 0.0) -> list[np.ndarray]:
    """Block-diagonal factor D of a Bunch-Kaufman LDL^T factorization.

    Returns the list of 1x1 / 2x2 pivot blocks.  Columns whose updated
    entries all fall below ``zero_tol * max(max|m|, scale)`` are recorded as
    zero pivots without elimination.
    """
    a = np.array(m, dtype=float, copy=True)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    thresh = zero_tol * max(_scale(a), scale)
    blocks: list[np.ndarray] = []

    k0 = 0
    while k0 < n:
        # panel rows/cols k0..; L and W = L D are kept only for the panel
        size = n - k0
        width = min(_PANEL, size)
        lpan = np.zeros((size, width + 1))
        wpan = np.zeros((size, width + 1))
        sub = a[k0:, k0:]  # view: swaps below act on the trailing block
        j = 0  # panel column counter
        k = 0  # local pivot row
        while k < size and j < width:
            colk = sub[k:, k] - lpan[k:, :j] @ wpan[k, :j]
            absakk = abs(colk[0])
            if size - k > 1:
                imax_rel = int(np.argmax(np.abs(colk[1:]))) + 1
                colmax = abs(colk[imax_rel])
            else:
                imax_rel, colmax = 0, 0.0

            if max(absakk, colmax) <= thresh:
                blocks.append(np.array([[0.0]]))
                wpan[k:, j] = 0.0
                lpan[k:, j] = 0.0
                lpan[k, j] = 1.0
                j += 1
                k += 1
                continue

            step, swap_to = 1, k
            coli = None
            if absakk < _ALPHA * colmax:
                imax = k + imax_rel
                coli = sub[k:, imax] - lpan[k:, :j] @ wpan[imax, :j]
                others = np.abs(coli).copy()
                others[imax_rel] = 0.0
                rowmax = float(others.max())
                if absakk * rowmax >= _ALPHA * colmax * colmax:
                    coli = None
                elif abs(coli[imax_rel]) >= _ALPHA * rowmax:
                    swap_to = imax
                    colk = coli
                    coli = None
                else:
                    step, swap_to = 2, imax

            kk = k + step - 1
            if swap_to != kk:
                _swap(sub, kk, swap_to)
                lpan[[kk, swap_to], :] = lpan[[swap_to, kk], :]
                wpan[[kk, swap_to], :] = wpan[[swap_to, kk], :]
                p, q = kk - k, swap_to - k
                colk[[p, q]] = colk[[q, p]]
                if coli is not None:
                    coli[[p, q]] = coli[[q, p]]

            if step == 1:
                d = colk[0]
                blocks.append(np.array([[d]]))
                wpan[k:, j] = colk
                lpan[k:, j] = colk / d
                j += 1
                k += 1
            else:
                c1, c2 = colk, coli
                dblk = np.array([[c1[0], c1[1]], [c1[1], c2[1]]])
                blocks.append(dblk)
                wpan[k:, j] = c1
                wpan[k:, j + 1] = c2
                lpan[k:, j:j + 2] = np.column_stack([c1, c2]) @ np.linalg.inv(dblk)
                lpan[k, j:j + 2] = (1.0, 0.0)
                lpan[k + 1, j:j + 2] = (0.0, 1.0)
                j += 2
                k += 2

        if k < size:
            sub[k:, k:] -= lpan[k:, :j] @ wpan[k:, :j].T
        k0 += k
    return blocks


def ldlt_inertia(m: np.ndarray, zero_tol: float = DEFAULT_ZERO_TOL, scale: float = 0.0) -> Inertia:
    """Inertia via symmetric-pivoted LDL^T and Sylvester's law of inertia.

    ``scale`` floors the magnitude the zero tolerance is relative to; pass the
    size of the operator a Schur complement came from, since cancellation can
    leave the complement itself tiny.
    """
    m = np.asarray(m, dtype=float)
    if m.shape[0] == 0:
        return Inertia(0, 0, 0, zero_tol)
    scale = max(_scale(m), scale)
    values = []
    for blk in ldlt_pivots(m, zero_tol, scale):
        if blk.shape[0] == 1:
            values.append(blk[0, 0])
        else:
            values.extend(np.linalg.eigvalsh(blk))
    return classify(values, zero_tol, scale)


def eig_inertia(m: np.ndarray, zero_tol: float = DEFAULT_ZERO_TOL, *, strict: bool = False) -> Inertia:
    """Sign counts of the eigenvalues of ``m`` at the same relative tolerance."""
    m = np.asarray(m, dtype=float)
    if m.shape[0] == 0:
        return Inertia(0, 0, 0, zero_tol)
    return classify(eigs(m), zero_tol, _scale(m), strict=strict)


def eigs(m: np.ndarray, vectors: bool = False):
    """Ascending eigenvalues (and orthonormal eigenvectors) of a symmetric matrix."""
    m = np.asarray(m, dtype=float)
    try:
        if not vectors:
            return np.linalg.eigvalsh(m)
        w, v = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    if m.size:
        norm = np.linalg.norm(m, 2) if m.shape[0] <= 64 else np.abs(m).sum(axis=0).max()
        resid = np.abs(m @ v - v * w).max(initial=0.0)
        if resid > 1e-8 * max(norm, 1e-300):
            raise EigenFailure(f"eigenpair residual {resid:.3e} exceeds bound")
    return w, v


def schur_complement(a: np.ndarray, b: np.ndarray, d: np.ndarray,
                     zero_tol: float = DEFAULT_ZERO_TOL) -> np.ndarray:
    """D - B^T A^{-1} B, symmetrized.  Raises ASingular if A has a kernel."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = np.asarray(d, dtype=float)
    if a.shape[0] == 0:
        return 0.5 * (d + d.T)
    inert = ldlt_inertia(a, zero_tol)
    if inert.n_zero:
        raise ASingular(f"eliminated block has a {inert.n_zero}-dimensional kernel")
    s = d - b.T @ solve(a, b)
    return 0.5 * (s + s.T)


def solve(a: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    try:
        x = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError as exc:
        raise ASingular(str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise ASingular("solution is not finite")
    return x


def spectral_norm(m: np.ndarray, rtol: float = 1e-8, max_iter: int = 200_000) -> float:
    """Largest singular value by power iteration on m^T m."""
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return 0.0
    gram = m.T @ m
    rng = np.random.default_rng(12345)
    x = rng.standard_normal(gram.shape[0])
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(max_iter):
        y = gram @ x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        new = float(x @ y)
        x = y / ny
        if abs(new - est) <= rtol * abs(new):
            est = new
            break
        est = new
    return math.sqrt(max(est, 0.0))
