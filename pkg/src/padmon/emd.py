"""Empirical mode decomposition of bogie segments.

Classic sifting with cubic-spline envelopes. The decomposition is exact by
construction: summing the returned IMFs and the residue reproduces the
input to floating-point precision.
"""

from __future__ import annotations

import csv
import logging

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, DecompositionError
from .ingest import BogieSegment

logger = logging.getLogger(__name__)

#: Cauchy-style sifting threshold: sifting stops once the normalised
#: squared change between consecutive candidates drops below this.
SD_STOP = 0.2

MAX_SIFT = 30
MAX_IMFS = 6


class ImfSet:
    """Ordered intrinsic mode functions plus the final residue.

    A proper IMF's extrema and zero-crossing counts differ by at most one;
    finite-length sifting under the default stopping rule can leave a few
    riding waves in the slow modes, so the check tolerates 5% of the
    extrema count and complains in the log instead of failing.
    """

    def __init__(
        self,
        imfs: list[np.ndarray],
        residue: np.ndarray,
        sift_counts: list[int],
    ) -> None:
        self.imfs = [np.asarray(m, dtype=float) for m in imfs]
        self.residue = np.asarray(residue, dtype=float)
        self.sift_counts = list(sift_counts)
        if len(self.imfs) != len(self.sift_counts):
            raise DecompositionError("one sift count per IMF required")
        for i, m in enumerate(self.imfs):
            maxima, minima = local_extrema(m)
            n_ext = maxima.size + minima.size
            n_zc = int(np.sum(np.signbit(m[:-1]) != np.signbit(m[1:])))
            if abs(n_ext - n_zc) > 1 + 0.05 * n_ext:
                logger.warning(
                    "imf %d has %d extrema but %d zero crossings", i + 1,
                    n_ext, n_zc,
                )

    @property
    def n_imfs(self) -> int:
        return len(self.imfs)

    def reconstruct(self) -> np.ndarray:
        out = self.residue.copy()
        for m in self.imfs:
            out += m
        return out


def local_extrema(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Indices of strict local maxima and minima.

    Plateau runs contribute a single extremum at their left edge.
    """
    x = np.asarray(x, dtype=float)
    if x.size < 3:
        return np.empty(0, dtype=int), np.empty(0, dtype=int)
    d = np.diff(x)
    s = np.sign(d)
    nz = np.nonzero(s)[0]
    if nz.size < 2:
        return np.empty(0, dtype=int), np.empty(0, dtype=int)
    # Collapse flat runs: carry the last non-zero slope sign forward.
    filled = s[nz]
    flips = np.nonzero(filled[1:] != filled[:-1])[0]
    idx = nz[flips] + 1
    maxima = idx[filled[flips] > 0]
    minima = idx[filled[flips] < 0]
    return maxima, minima


def _envelope(x: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Cubic-spline envelope through the extrema at ``idx``.

    End behaviour matters more than the interior: the first and last two
    extrema are mirrored past the signal ends so the spline does not splay.
    """
    n = x.size
    t = idx.astype(float)
    v = x[idx]
    k = min(2, t.size)
    left_t = (-t[:k])[::-1]
    left_v = v[:k][::-1]
    right_t = (2.0 * (n - 1) - t[-k:])[::-1]
    right_v = v[-k:][::-1]
    lm = left_t < t[0]
    rm = right_t > t[-1]
    t_ext = np.concatenate([left_t[lm], t, right_t[rm]])
    v_ext = np.concatenate([left_v[lm], v, right_v[rm]])
    grid = np.arange(n, dtype=float)
    if t_ext.size < 4:
        return np.interp(grid, t_ext, v_ext)
    return CubicSpline(t_ext, v_ext)(grid)


def _sift(x: np.ndarray, sd_stop: float, max_sift: int) -> tuple[np.ndarray, int] | None:
    """Extract one IMF from ``x``, or None if too few extrema remain."""
    h = x.copy()
    for count in range(1, max_sift + 1):
        maxima, minima = local_extrema(h)
        if maxima.size < 2 or minima.size < 2:
            return None if count == 1 else (h, count - 1)
        mean = 0.5 * (_envelope(h, maxima) + _envelope(h, minima))
        h_new = h - mean
        denom = float(np.sum(h * h))
        if denom == 0.0:
            return h_new, count
        sd = float(np.sum((h - h_new) ** 2)) / denom
        h = h_new
        if sd < sd_stop:
            return h, count
    return h, max_sift


def decompose(
    segment: BogieSegment | np.ndarray,
    max_imfs: int = MAX_IMFS,
    sd_stop: float = SD_STOP,
    max_sift: int = MAX_SIFT,
) -> ImfSet:
    """Decompose a segment into IMFs ordered fast to slow.

    Stops when ``max_imfs`` have been extracted or the residue has fewer
    than three extrema left.
    """
    if max_imfs < 2:
        raise ConfigError("at least two IMFs must be allowed")
    if sd_stop <= 0 or max_sift < 1:
        raise ConfigError("sifting controls must be positive")
    x = segment.samples if isinstance(segment, BogieSegment) else segment
    x = np.asarray(x, dtype=float)
    if x.size < 8:
        raise DecompositionError(f"signal too short to decompose ({x.size} samples)")

    imfs: list[np.ndarray] = []
    counts: list[int] = []
    residue = x.copy()
    while len(imfs) < max_imfs:
        maxima, minima = local_extrema(residue)
        if maxima.size + minima.size < 3:
            break
        result = _sift(residue, sd_stop, max_sift)
        if result is None:
            if not imfs:
                raise DecompositionError(
                    "fewer than two maxima or two minima; nothing to sift"
                )
            break
        imf, count = result
        imfs.append(imf)
        counts.append(count)
        residue = residue - imf
    if not imfs:
        raise DecompositionError("signal has too few extrema to decompose")
    return ImfSet(imfs=imfs, residue=residue, sift_counts=counts)


def select_imf2(imf_set: ImfSet) -> np.ndarray:
    """Return the second IMF, the band where the pad resonance lands."""
    if imf_set.n_imfs < 2:
        raise DecompositionError(
            f"need at least two IMFs, decomposition produced {imf_set.n_imfs}"
        )
    return imf_set.imfs[1]


def dump_imfs(imf_set: ImfSet, path: str) -> None:
    """Write IMFs and residue as CSV columns for offline inspection."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        header = [f"imf{i + 1}" for i in range(imf_set.n_imfs)] + ["residue"]
        w.writerow(header)
        cols = imf_set.imfs + [imf_set.residue]
        for row in zip(*cols):
            w.writerow([repr(float(v)) for v in row])


__all__ = [
    "ImfSet",
    "SD_STOP",
    "MAX_SIFT",
    "MAX_IMFS",
    "local_extrema",
    "decompose",
    "select_imf2",
    "dump_imfs",
]
