"""Synthetic labeled distributions on the line with exact risk functionals.

Two representations cover everything the experiments need: piecewise
distributions whose marginal is a mixture of uniform or one-sided power-law
segments, and discrete distributions over a finite support.  Both expose
exact expected risk, Bayes risk, and disagreement mass, plus seeded sampling
with a fixed two-uniforms-per-draw stream layout so that samples are
reproducible across label-law changes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .classifiers import BoundaryHypothesis, TabularHypothesis

_EDGE_TOL = 1e-12


@dataclass(frozen=True)
class Uniform:
    kind: str = field(default="uniform", init=False)


@dataclass(frozen=True)
class PowerLaw:
    """Density proportional to |x - anchor|**(exponent - 1) on the segment.

    The anchor may sit anywhere, including strictly inside the segment;
    exponent 1 recovers the uniform shape.
    """

    anchor: float
    exponent: float
    kind: str = field(default="power", init=False)

    def __post_init__(self):
        if self.exponent <= 0:
            raise ValueError("exponent must be positive")


def _power_antideriv(t: np.ndarray, anchor: float, p: float) -> np.ndarray:
    d = np.asarray(t, dtype=float) - anchor
    return np.sign(d) * np.abs(d) ** p / p


@dataclass(frozen=True)
class Deterministic:
    label: int
    kind: str = field(default="det", init=False)

    def __post_init__(self):
        if self.label not in (-1, 1):
            raise ValueError("label must be -1 or +1")


@dataclass(frozen=True)
class Bernoulli:
    """P[Y = +1 | X in segment] = q."""

    q: float
    kind: str = field(default="bern", init=False)

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ValueError("q must lie in [0, 1]")


def _label_error(sign: int, law) -> float:
    """P[Y != sign] under the segment's label law."""
    if isinstance(law, Deterministic):
        return 0.0 if sign == law.label else 1.0
    return 1.0 - law.q if sign == 1 else law.q


def _label_bayes(law) -> float:
    if isinstance(law, Deterministic):
        return 0.0
    return min(law.q, 1.0 - law.q)


@dataclass(frozen=True)
class Segment:
    lo: float
    hi: float
    mass: float
    shape: Uniform | PowerLaw = Uniform()
    label_law: Deterministic | Bernoulli = Deterministic(1)

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("need lo < hi")
        if self.mass < 0:
            raise ValueError("mass must be nonnegative")

    def _norm(self) -> float:
        if isinstance(self.shape, Uniform):
            return self.hi - self.lo
        g = _power_antideriv(np.asarray([self.lo, self.hi]), self.shape.anchor, self.shape.exponent)
        return float(g[1] - g[0])

    def sub_mass(self, x1: float, x2: float) -> float:
        """Probability mass of [x1, x2] intersected with the segment."""
        a = max(self.lo, min(x1, x2))
        b = min(self.hi, max(x1, x2))
        if b <= a:
            return 0.0
        if isinstance(self.shape, Uniform):
            frac = (b - a) / (self.hi - self.lo)
        else:
            g = _power_antideriv(np.asarray([a, b]), self.shape.anchor, self.shape.exponent)
            frac = float(g[1] - g[0]) / self._norm()
        return self.mass * frac

    def quantile(self, u: np.ndarray) -> np.ndarray:
        """Inverse CDF of the normalized segment at u in [0, 1]."""
        u = np.asarray(u, dtype=float)
        if isinstance(self.shape, Uniform):
            return self.lo + u * (self.hi - self.lo)
        v, p = self.shape.anchor, self.shape.exponent
        g_lo = float(_power_antideriv(np.asarray([self.lo]), v, p)[0])
        y = g_lo + u * self._norm()
        x = v + np.sign(y) * (p * np.abs(y)) ** (1.0 / p)
        return np.clip(x, self.lo, self.hi)


@dataclass(frozen=True)
class LabeledSample:
    """Point sample with labels, stored sorted by (x, y) for canonical order."""

    xs: np.ndarray
    ys: np.ndarray
    seed: int | None = None
    source_tag: str = ""

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=np.int8)
        if xs.shape != ys.shape or xs.ndim != 1:
            raise ValueError("xs and ys must be 1-D arrays of equal length")
        order = np.lexsort((ys, xs))
        object.__setattr__(self, "xs", xs[order])
        object.__setattr__(self, "ys", ys[order])

    def __len__(self) -> int:
        return int(self.xs.shape[0])


class PiecewiseDistribution:
    """Mixture of disjoint segments; total mass must be 1 up to 1e-9."""

    def __init__(self, segments):
        segs = sorted(segments, key=lambda s: (s.lo, s.hi))
        for a, b in zip(segs, segs[1:]):
            if b.lo < a.hi - _EDGE_TOL:
                raise ValueError(f"segments overlap: {a.lo}..{a.hi} and {b.lo}..{b.hi}")
        total = sum(s.mass for s in segs)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"segment masses sum to {total}, expected 1")
        self.segments: tuple[Segment, ...] = tuple(segs)
        self._cum = np.concatenate([[0.0], np.cumsum([s.mass for s in segs])])
        self._cum[-1] = 1.0

    @property
    def support(self) -> tuple[float, float]:
        return self.segments[0].lo, self.segments[-1].hi

    def sample(self, n: int, rng: np.random.Generator, seed: int | None = None,
               source_tag: str = "") -> LabeledSample:
        u = rng.random((n, 2))
        if n == 0:
            return LabeledSample(np.empty(0), np.empty(0, dtype=np.int8), seed, source_tag)
        idx = np.searchsorted(self._cum, u[:, 0], side="right") - 1
        idx = np.clip(idx, 0, len(self.segments) - 1)
        xs = np.empty(n)
        ys = np.empty(n, dtype=np.int8)
        for i, seg in enumerate(self.segments):
            pick = idx == i
            if not np.any(pick):
                continue
            local = (u[pick, 0] - self._cum[i]) / max(seg.mass, _EDGE_TOL)
            xs[pick] = seg.quantile(np.clip(local, 0.0, 1.0))
            if isinstance(seg.label_law, Deterministic):
                ys[pick] = seg.label_law.label
            else:
                ys[pick] = np.where(u[pick, 1] < seg.label_law.q, 1, -1)
        return LabeledSample(xs, ys, seed, source_tag)

    def _pieces_with_sign(self, h: BoundaryHypothesis):
        """Yield (x1, x2, sign) covering the support, split at h's boundaries."""
        lo, hi = self.support
        cuts = [lo] + [b for b in h.boundaries if lo < b < hi] + [hi]
        for x1, x2 in zip(cuts, cuts[1:]):
            yield x1, x2, h.sign_on_interval_right_of(x1)

    def expected_risk(self, h: BoundaryHypothesis) -> float:
        total = 0.0
        for x1, x2, sign in self._pieces_with_sign(h):
            for seg in self.segments:
                m = seg.sub_mass(x1, x2)
                if m > 0.0:
                    total += m * _label_error(sign, seg.label_law)
        return total

    def bayes_risk(self) -> float:
        return sum(s.mass * _label_bayes(s.label_law) for s in self.segments)

    def excess_risk(self, h: BoundaryHypothesis) -> float:
        return self.expected_risk(h) - self.bayes_risk()

    def disagreement_mass(self, h1: BoundaryHypothesis, h2: BoundaryHypothesis) -> float:
        lo, hi = self.support
        cuts = sorted({lo, hi} | {b for b in h1.boundaries if lo < b < hi}
                      | {b for b in h2.boundaries if lo < b < hi})
        total = 0.0
        for x1, x2 in zip(cuts, cuts[1:]):
            if h1.sign_on_interval_right_of(x1) != h2.sign_on_interval_right_of(x1):
                for seg in self.segments:
                    total += seg.sub_mass(x1, x2)
        return total

    def to_dict(self) -> dict:
        segs = []
        for s in self.segments:
            d = {"lo": s.lo, "hi": s.hi, "mass": s.mass}
            if isinstance(s.shape, Uniform):
                d["shape"] = {"kind": "uniform"}
            else:
                d["shape"] = {"kind": "power", "anchor": s.shape.anchor,
                              "exponent": s.shape.exponent}
            if isinstance(s.label_law, Deterministic):
                d["label_law"] = {"kind": "det", "label": s.label_law.label}
            else:
                d["label_law"] = {"kind": "bern", "q": s.label_law.q}
            segs.append(d)
        return {"kind": "piecewise", "segments": segs}


class DiscreteDistribution:
    """Distribution over a finite support; pos_probs[i] = P[Y=+1 | X=points[i]]."""

    def __init__(self, points, masses, pos_probs):
        pts = tuple(float(x) for x in points)
        ms = tuple(float(m) for m in masses)
        qs = tuple(float(q) for q in pos_probs)
        if not len(pts) == len(ms) == len(qs):
            raise ValueError("points, masses, pos_probs must have equal length")
        if len(set(pts)) != len(pts):
            raise ValueError("support points must be distinct")
        if any(m < 0 for m in ms):
            raise ValueError("masses must be nonnegative")
        if abs(sum(ms) - 1.0) > 1e-9:
            raise ValueError(f"masses sum to {sum(ms)}, expected 1")
        if any(not 0.0 <= q <= 1.0 for q in qs):
            raise ValueError("pos_probs must lie in [0, 1]")
        order = np.argsort(pts)
        self.points = tuple(pts[i] for i in order)
        self.masses = tuple(ms[i] for i in order)
        self.pos_probs = tuple(qs[i] for i in order)
        self._cum = np.concatenate([[0.0], np.cumsum(self.masses)])
        self._cum[-1] = 1.0

    def sample(self, n: int, rng: np.random.Generator, seed: int | None = None,
               source_tag: str = "") -> LabeledSample:
        u = rng.random((n, 2))
        if n == 0:
            return LabeledSample(np.empty(0), np.empty(0, dtype=np.int8), seed, source_tag)
        idx = np.searchsorted(self._cum, u[:, 0], side="right") - 1
        idx = np.clip(idx, 0, len(self.points) - 1)
        xs = np.asarray(self.points)[idx]
        qs = np.asarray(self.pos_probs)[idx]
        ys = np.where(u[:, 1] < qs, 1, -1)
        return LabeledSample(xs, ys, seed, source_tag)

    def _point_labels(self, h) -> np.ndarray:
        if isinstance(h, TabularHypothesis):
            return np.asarray([h.evaluate(x) for x in self.points])
        return h.evaluate_many(np.asarray(self.points))

    def expected_risk(self, h) -> float:
        signs = self._point_labels(h)
        total = 0.0
        for m, q, s in zip(self.masses, self.pos_probs, signs):
            total += m * ((1.0 - q) if s == 1 else q)
        return total

    def bayes_risk(self) -> float:
        return sum(m * min(q, 1.0 - q) for m, q in zip(self.masses, self.pos_probs))

    def excess_risk(self, h) -> float:
        return self.expected_risk(h) - self.bayes_risk()

    def disagreement_mass(self, h1, h2) -> float:
        s1 = self._point_labels(h1)
        s2 = self._point_labels(h2)
        return float(sum(m for m, a, b in zip(self.masses, s1, s2) if a != b))

    def to_dict(self) -> dict:
        return {"kind": "discrete", "points": list(self.points),
                "masses": list(self.masses), "pos_probs": list(self.pos_probs)}


def distribution_from_dict(d: dict):
    if d["kind"] == "discrete":
        return DiscreteDistribution(d["points"], d["masses"], d["pos_probs"])
    if d["kind"] != "piecewise":
        raise ValueError(f"unknown distribution kind {d['kind']!r}")
    segs = []
    for sd in d["segments"]:
        shape = (Uniform() if sd["shape"]["kind"] == "uniform"
                 else PowerLaw(anchor=sd["shape"]["anchor"], exponent=sd["shape"]["exponent"]))
        law = (Deterministic(label=sd["label_law"]["label"]) if sd["label_law"]["kind"] == "det"
               else Bernoulli(q=sd["label_law"]["q"]))
        segs.append(Segment(lo=sd["lo"], hi=sd["hi"], mass=sd["mass"],
                            shape=shape, label_law=law))
    return PiecewiseDistribution(segs)


def distribution_to_json(dist) -> str:
    return json.dumps(dist.to_dict(), sort_keys=True)


def distribution_from_json(text: str):
    return distribution_from_dict(json.loads(text))
