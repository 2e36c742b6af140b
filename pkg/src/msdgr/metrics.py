"""Verification and identification metrics over similarity scores.

A pair is accepted when ``score >= threshold``. The EER is read off the
convex hull of the (FAR, FRR) operating points (the ROCCH convention), where
the hull crosses FAR = FRR; the crossing is computed in exact rational
arithmetic from the integer error counts.
"""

import csv
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import FormatError, MetricError, ProtocolError


@dataclass
class ScoreSet:
    genuine: np.ndarray
    imposter: np.ndarray

    def __post_init__(self):
        self.genuine = np.asarray(self.genuine, dtype=np.float64).reshape(-1)
        self.imposter = np.asarray(self.imposter, dtype=np.float64).reshape(-1)

    def check(self):
        if self.genuine.size == 0 or self.imposter.size == 0:
            raise MetricError("both genuine and imposter scores are required")
        return self


@dataclass(frozen=True)
class DETPoint:
    threshold: float
    far: float
    frr: float


@dataclass(frozen=True)
class FrrAtFar:
    frr: float
    threshold: float
    far: float
    warning: str = ""


def error_counts(scores, thresholds):
    """Integer false-accept and false-reject counts at each threshold."""
    g = np.sort(scores.genuine)
    i = np.sort(scores.imposter)
    t = np.asarray(thresholds, dtype=np.float64)
    n_fa = i.size - np.searchsorted(i, t, side="left")
    n_fr = np.searchsorted(g, t, side="left")
    return n_fa, n_fr


def far_frr(scores, threshold):
    scores.check()
    n_fa, n_fr = error_counts(scores, [threshold])
    return int(n_fa[0]) / scores.imposter.size, int(n_fr[0]) / scores.genuine.size


def sweep_thresholds(scores):
    """Distinct scores in ascending order, then +inf (reject everything)."""
    return np.append(np.unique(np.concatenate([scores.genuine, scores.imposter])), np.inf)


def det_curve(scores):
    scores.check()
    t = sweep_thresholds(scores)
    n_fa, n_fr = error_counts(scores, t)
    return [DETPoint(float(th), int(a) / scores.imposter.size, int(r) / scores.genuine.size)
            for th, a, r in zip(t, n_fa, n_fr)]


def _cross(p, q):
    """Value where the segment p-q meets the line far == frr (exact)."""
    (x0, y0), (x1, y1) = p, q
    d0, d1 = x0 - y0, x1 - y1
    if d0 == d1:
        return x0
    lam = d0 / (d0 - d1)
    return x0 + lam * (x1 - x0)


def eer(scores):
    """Equal error rate and the threshold of the nearest hull vertex."""
    scores.check()
    t = sweep_thresholds(scores)
    n_fa, n_fr = error_counts(scores, t)
    nn, npos = scores.imposter.size, scores.genuine.size
    # ascending far: walk thresholds from high to low
    pts = [(Fraction(int(a), nn), Fraction(int(r), npos), float(th))
           for a, r, th in zip(n_fa[::-1], n_fr[::-1], t[::-1])]
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (ax, ay, _), (bx, by, _) = hull[-2], hull[-1]
            if (bx - ax) * (p[1] - ay) - (by - ay) * (p[0] - ax) <= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    for k, (x, y, th) in enumerate(hull):
        if x - y >= 0:
            if x == y or k == 0:
                return float(x if x == y else max(x, y)), th
            px, py, pth = hull[k - 1]
            value = _cross((px, py), (x, y))
            near = pth if abs(px - py) <= abs(x - y) else th
            return float(value), near
    raise MetricError("DET curve never reaches far >= frr")  # unreachable: last point has far=1


def frr_at_far(scores, far_target):
    """FRR at the smallest threshold whose FAR does not exceed ``far_target``."""
    scores.check()
    if not 0 < far_target <= 1:
        raise MetricError(f"FAR target must lie in (0, 1], got {far_target}")
    t = sweep_thresholds(scores)
    n_fa, n_fr = error_counts(scores, t)
    far = n_fa / scores.imposter.size
    k = int(np.flatnonzero(far <= far_target)[0])
    warning = ""
    if scores.imposter.size < 1.0 / far_target:
        warning = (f"only {scores.imposter.size} imposter scores; FAR resolution "
                   f"{1 / scores.imposter.size:.3g} is coarser than target {far_target:.3g}")
    return FrrAtFar(int(n_fr[k]) / scores.genuine.size, float(t[k]), float(far[k]), warning)


def rank_n(score_matrix, probe_labels, gallery_labels, ns=(1, 5, 10)):
    """Rank-n identification rates.

    A probe's rank is one plus the number of gallery entries scoring strictly
    higher than its best same-label gallery entry.
    """
    S = np.asarray(score_matrix, dtype=np.float64)
    probe_labels = list(probe_labels)
    gallery_labels = np.asarray(list(gallery_labels), dtype=object)
    if S.shape != (len(probe_labels), len(gallery_labels)):
        raise ProtocolError(f"score matrix {S.shape} does not match label counts")
    if not probe_labels:
        raise ProtocolError("no probes")
    ranks = np.empty(len(probe_labels), dtype=np.int64)
    for p, lab in enumerate(probe_labels):
        same = gallery_labels == lab
        if not same.any():
            raise ProtocolError(f"probe label {lab!r} has no gallery entry")
        best = S[p, same].max()
        ranks[p] = 1 + int(np.count_nonzero(S[p] > best))
    return {n: float(np.mean(ranks <= n)) for n in ns}


# -- score files -----------------------------------------------------------

SCORE_COLUMNS = ("label_a", "label_b", "score", "genuine_flag")


def read_scores_csv(path, column="score"):
    """Parse a score CSV into a list of row dicts; ``#`` lines are comments."""
    rows = []
    with open(path, newline="") as fh:
        lines = [(n, line) for n, line in enumerate(fh, 1) if not line.startswith("#")]
    if not lines:
        raise FormatError(f"{path}: empty score file")
    reader = csv.reader([line for _, line in lines])
    header = next(reader)
    missing = [c for c in SCORE_COLUMNS if c not in header]
    if missing or column not in header:
        raise FormatError(f"{path}:{lines[0][0]}: header lacks {missing or [column]}")
    idx = {c: header.index(c) for c in header}
    for (lineno, _), row in zip(lines[1:], reader):
        if not row:
            continue
        try:
            if len(row) != len(header):
                raise ValueError("column count")
            rec = {c: row[i] for c, i in idx.items()}
            rec["score"] = float(row[idx[column]])
            if not math.isfinite(rec["score"]):
                raise ValueError("score")
            flag = row[idx["genuine_flag"]].strip()
            if flag not in ("0", "1"):
                raise ValueError("flag")
            rec["genuine_flag"] = flag == "1"
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: malformed row ({exc})") from None
        rows.append(rec)
    return rows


def write_det_csv(fh, points):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["threshold", "far", "frr"])
    for p in points:
        w.writerow([repr(p.threshold), repr(p.far), repr(p.frr)])
