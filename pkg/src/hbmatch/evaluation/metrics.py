"""Empirical verification metrics: TAR at fixed FAR and EER.

Acceptance rule everywhere: a comparison is accepted when score >= theta.
No interpolation between observed operating points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import UsageError

FAR_TARGETS = {"1%": 1e-2, "0.1%": 1e-3, "0.01%": 1e-4}


@dataclass
class ScoreSet:
    genuine: list  # (probe id, gallery subject, similarity)
    impostor: list
    config: dict = field(default_factory=dict)

    def genuine_scores(self) -> np.ndarray:
        return np.array([s for *_, s in self.genuine], dtype=np.float64)

    def impostor_scores(self) -> np.ndarray:
        return np.array([s for *_, s in self.impostor], dtype=np.float64)

    def validate(self):
        g = {(p, s) for p, s, _ in self.genuine}
        i = {(p, s) for p, s, _ in self.impostor}
        if g & i:
            raise UsageError("a pair appears in both genuine and impostor lists")
        for arr in (self.genuine_scores(), self.impostor_scores()):
            if arr.size and not np.all(np.isfinite(arr)):
                raise UsageError("non-finite similarity")


def _arrays(scores) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(scores, ScoreSet):
        g, i = scores.genuine_scores(), scores.impostor_scores()
    else:
        g, i = (np.asarray(x, dtype=np.float64) for x in scores)
    if g.size == 0 or i.size == 0:
        raise UsageError("genuine and impostor score lists must be non-empty")
    return np.sort(g), np.sort(i)


def _rates(g: np.ndarray, i: np.ndarray, thetas: np.ndarray):
    # FAR = share of impostors >= theta, FRR = share of genuine < theta
    far = (i.size - np.searchsorted(i, thetas, side="left")) / i.size
    frr = np.searchsorted(g, thetas, side="left") / g.size
    return far, frr


def far_threshold(scores, far_target: float) -> float:
    """Smallest observed score theta with FAR(theta) <= far_target (inf if none)."""
    g, i = _arrays(scores)
    thetas = np.unique(np.concatenate((g, i, [np.inf])))
    far, _ = _rates(g, i, thetas)
    ok = np.nonzero(far <= far_target)[0]
    return float(thetas[ok[0]])


def tar_at_far(scores, far_target: float) -> float:
    g, i = _arrays(scores)
    theta = far_threshold((g, i), far_target)
    return float((g.size - np.searchsorted(g, theta, side="left")) / g.size)


def eer(scores) -> float:
    """Midpoint of FAR and FRR where |FAR - FRR| is smallest over observed thresholds."""
    g, i = _arrays(scores)
    thetas = np.unique(np.concatenate((g, i, [np.inf])))
    far, frr = _rates(g, i, thetas)
    k = int(np.argmin(np.abs(far - frr)))
    return float((far[k] + frr[k]) / 2)


@dataclass
class RocReport:
    tar: dict
    thresholds: dict
    eer: float
    n_genuine: int
    n_impostor: int

    def as_dict(self) -> dict:
        return {
            "tar_at_far": dict(self.tar),
            "thresholds": dict(self.thresholds),
            "eer": self.eer,
            "n_genuine": self.n_genuine,
            "n_impostor": self.n_impostor,
        }


def roc_report(scores: ScoreSet) -> RocReport:
    g, i = _arrays(scores)
    tar, th = {}, {}
    for name, far in FAR_TARGETS.items():
        t = far_threshold((g, i), far)
        th[name] = None if np.isinf(t) else t
        tar[name] = tar_at_far((g, i), far)
    return RocReport(tar, th, eer((g, i)), int(g.size), int(i.size))
