"""Charted symplectic surfaces, lifts to the universal cover and winding classes.

Every chart has unit circumference in each periodic direction and the form
dp^dq (summed over coordinate pairs).  Phase-space states are stored as flat
vectors ``(q_1..q_n, p_1..p_n)`` with q (and, on tori, p) kept in lifted,
unwrapped form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonContinuousLoop, OutOfChart

CHART_KINDS = ("annulus", "torus2", "strip", "product_torus")
JUMP_LIMIT = 0.5


@dataclass(frozen=True)
class Chart:
    kind: str
    width: float = 1.0
    p_min: float = 0.0
    half_width: float | None = None
    n: int = 1

    def __post_init__(self):
        if self.kind not in CHART_KINDS:
            raise ValueError(f"unknown chart kind {self.kind!r}")
        if self.kind == "annulus" and not self.width > 0:
            raise ValueError("annulus width must be positive")
        if self.kind == "strip" and self.half_width is not None and not self.half_width > 0:
            raise ValueError("strip half-width must be positive")
        if self.kind == "product_torus" and self.n < 1:
            raise ValueError("product torus needs n >= 1")
        if self.kind != "product_torus" and self.n != 1:
            raise ValueError(f"{self.kind} charts are two-dimensional (n=1)")

    @classmethod
    def annulus(cls, width: float, p_min: float = 0.0) -> "Chart":
        return cls("annulus", width=width, p_min=p_min)

    @classmethod
    def torus2(cls) -> "Chart":
        return cls("torus2")

    @classmethod
    def strip(cls, half_width: float | None = None) -> "Chart":
        return cls("strip", half_width=half_width)

    @classmethod
    def product_torus(cls, n: int) -> "Chart":
        return cls("product_torus", n=n)

    @property
    def dim(self) -> int:
        """Number of (q, p) pairs."""
        return self.n

    @property
    def periodic(self) -> np.ndarray:
        """Boolean mask over the 2n state coordinates marking circle directions."""
        q = np.ones(self.n, dtype=bool)
        p = np.full(self.n, self.kind in ("torus2", "product_torus"))
        return np.concatenate([q, p])

    @property
    def n_periodic(self) -> int:
        return int(self.periodic.sum())

    @property
    def p_bounds(self) -> tuple[float, float]:
        if self.kind == "annulus":
            return (self.p_min, self.p_min + self.width)
        if self.kind == "strip":
            if self.half_width is None:
                return (-np.inf, np.inf)
            return (-self.half_width, self.half_width)
        return (0.0, 1.0)

    @property
    def p_bounded(self) -> bool:
        lo, hi = self.p_bounds
        return self.kind in ("annulus", "strip") and np.isfinite(lo) and np.isfinite(hi)

    def contains_p(self, p, slack: float = 0.0) -> np.ndarray:
        if not self.p_bounded:
            return np.ones(np.shape(p)[:-1] if np.ndim(p) > 1 else np.shape(p), dtype=bool)
        lo, hi = self.p_bounds
        p = np.asarray(p)
        inside = (p >= lo - slack) & (p <= hi + slack)
        return inside.all(axis=-1) if p.ndim > 1 else inside

    def displacement(self, cls: "HomotopyClass") -> np.ndarray:
        """Full 2n-vector lift displacement realizing a winding class."""
        if len(cls.winding) != self.n_periodic:
            raise ValueError(
                f"class {cls.winding} has {len(cls.winding)} entries, chart has {self.n_periodic} periodic coordinates"
            )
        out = np.zeros(2 * self.n)
        out[self.periodic] = np.asarray(cls.winding, dtype=float)
        return out

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "annulus":
            d.update(width=self.width, p_min=self.p_min)
        elif self.kind == "strip":
            d["half_width"] = self.half_width
        elif self.kind == "product_torus":
            d["n"] = self.n
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Chart":
        kind = d["kind"]
        if kind == "annulus":
            return cls.annulus(float(d["width"]), float(d.get("p_min", 0.0)))
        if kind == "torus2":
            return cls.torus2()
        if kind == "strip":
            hw = d.get("half_width")
            return cls.strip(None if hw is None else float(hw))
        if kind == "product_torus":
            return cls.product_torus(int(d["n"]))
        raise ValueError(f"unknown chart kind {kind!r}")


@dataclass(frozen=True)
class HomotopyClass:
    winding: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "winding", tuple(int(w) for w in self.winding))

    @property
    def is_trivial(self) -> bool:
        return all(w == 0 for w in self.winding)

    @classmethod
    def loop_class(cls, chart: Chart, r: int) -> "HomotopyClass":
        """The class [l0]^{-r}: winding -r along the first q circle, zero elsewhere."""
        w = [0] * chart.n_periodic
        w[0] = -int(r)
        return cls(tuple(w))


@dataclass(frozen=True)
class PhasePoint:
    q_lift: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q_lift", np.atleast_1d(np.asarray(self.q_lift, dtype=float)))
        object.__setattr__(self, "p", np.atleast_1d(np.asarray(self.p, dtype=float)))

    @property
    def state(self) -> np.ndarray:
        return np.concatenate([self.q_lift, self.p])

    @classmethod
    def from_state(cls, x) -> "PhasePoint":
        x = np.asarray(x, dtype=float)
        n = x.size // 2
        return cls(x[:n], x[n:])


@dataclass(frozen=True)
class LiftedLoop:
    """Samples x(t_0), ..., x(t_N) of a loop, lifted to the universal cover, t_N = t_0 + 1."""

    chart: Chart
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        s = np.atleast_2d(np.asarray(self.samples, dtype=float))
        if s.shape[1] != 2 * self.chart.n:
            raise ValueError(f"samples need {2 * self.chart.n} columns, got {s.shape[1]}")
        object.__setattr__(self, "samples", s)

    @classmethod
    def from_wrapped(cls, chart: Chart, samples) -> "LiftedLoop":
        """Lift samples given modulo 1 in the periodic coordinates."""
        s = np.atleast_2d(np.asarray(samples, dtype=float)).copy()
        per = chart.periodic
        s[:, per] = np.unwrap(s[:, per], period=1.0, axis=0)
        return cls(chart, s)


def winding_class(loop: LiftedLoop, tol: float = 1e-6) -> HomotopyClass:
    s = loop.samples
    per = loop.chart.periodic
    if len(s) > 1:
        jumps = np.abs(np.diff(s[:, per], axis=0))
        if jumps.size and jumps.max() >= JUMP_LIMIT:
            i = int(np.argmax(jumps.max(axis=1)))
            raise NonContinuousLoop(f"lift jumps by {jumps.max():.3f} between samples {i} and {i + 1}")
    disp = s[-1, per] - s[0, per]
    w = np.rint(disp)
    if np.abs(disp - w).max(initial=0.0) > tol:
        raise NonContinuousLoop(f"loop does not close: displacement {disp} is not integral")
    return HomotopyClass(tuple(int(v) for v in w))


def annulus_area(chart: Chart, p0: float, p1: float) -> float:
    """Symplectic area between the level loops {p = p0} and {p = p1}.

    On the torus this is the least positive area of a homotopy from the
    first loop to the second one.
    """
    if chart.kind == "torus2":
        return float((p1 - p0) % 1.0)
    lo, hi = chart.p_bounds
    for v in (p0, p1):
        if not lo <= v <= hi:
            raise OutOfChart(f"p={v} outside chart range [{lo}, {hi}]")
    return float(p1 - p0)


def project(point: PhasePoint, chart: Chart) -> PhasePoint:
    q = np.mod(point.q_lift, 1.0)
    p = np.mod(point.p, 1.0) if chart.kind in ("torus2", "product_torus") else point.p.copy()
    return PhasePoint(q, p)


def lift(point: PhasePoint, base: PhasePoint, chart: Chart) -> PhasePoint:
    """Lift of ``point`` nearest to ``base`` in every periodic coordinate."""
    q = point.q_lift + np.rint(base.q_lift - point.q_lift)
    if chart.kind in ("torus2", "product_torus"):
        p = point.p + np.rint(base.p - point.p)
    else:
        p = point.p.copy()
    return PhasePoint(q, p)


def lift_states(states, chart: Chart) -> np.ndarray:
    """Unwrap a sampled path of full states along axis 0."""
    s = np.array(states, dtype=float)
    per = chart.periodic
    s[:, per] = np.unwrap(s[:, per], period=1.0, axis=0)
    return s


@dataclass(frozen=True)
class ReferenceLoop:
    """z(t) = (-r t, 0) in the first (q, p) pair, zero in the others."""

    chart: Chart
    r: int
    n_samples: int = 256

    @property
    def winding(self) -> HomotopyClass:
        return HomotopyClass.loop_class(self.chart, self.r)

    @property
    def samples(self) -> np.ndarray:
        t = np.linspace(0.0, 1.0, self.n_samples + 1)
        s = np.zeros((t.size, 2 * self.chart.n))
        s[:, 0] = -self.r * t
        return s

    def p_dq(self) -> float:
        s = self.samples
        n = self.chart.n
        return float(loop_p_dq(s, n))


def loop_p_dq(samples, n: int) -> float:
    """Trapezoid value of sum_i \\oint p_i dq_i over lifted samples."""
    s = np.asarray(samples)
    q = s[:, :n]
    p = s[:, n:]
    return float(np.sum(0.5 * (p[1:] + p[:-1]) * np.diff(q, axis=0)))
