"""Capacity estimates by bisection over Hamiltonian families, and rotation vectors.

At each gap value c the family member is searched for orbits in the class.
"No orbit" is an empirical statement (grid density, Newton basins) unless the
family supplies an analytic certificate for that member.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import BadParams, BracketInvalid
from .geometry import Chart, HomotopyClass
from .orbits import PeriodicOrbit, find_orbits
from .profiles import CutoffRamp, PresetHamiltonian, ProfileHamiltonian
from .profiles.constructions import counterexample_annulus, counterexample_lagrangian


@dataclass
class HamiltonianFamily:
    name: str
    builder: Callable[[float], object]
    gap: Callable[[float], float]
    chart: Chart
    alpha: HomotopyClass
    X: dict
    Y: dict | None
    p_range: tuple[float, float] | None = None
    grid: int = 32
    search: dict = field(default_factory=dict)

    def member(self, c: float):
        return self.builder(c)


@dataclass
class CapacityEstimate:
    lower: float
    upper: float
    tol: float
    witnesses: list[PeriodicOrbit]
    search_log: list[dict]
    grid_density: int
    certificates: list[dict] = field(default_factory=list)
    runtime: float = 0.0

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper if math.isfinite(self.upper) else None,
            "tol": self.tol,
            "grid_density": self.grid_density,
            "witnesses": [
                {"start": [float(v) for v in o.start], "action": float(o.action), "class": list(o.cls.winding)}
                for o in self.witnesses
            ],
            "certificates": self.certificates,
            "search_log": self.search_log,
        }


def annulus_family(r: int, R: float = 0.6, grid: int = 32, plateau: float = 0.0) -> HamiltonianFamily:
    """Profiles H_c(q, p) = f_c(p) on an annulus with X = {p = 0}, Y = {p = R}; gap(c) = c.

    Below c = rR the member is the slope-limited counterexample (no orbit in
    class -r, with an analytic certificate).  From rR on it is a ramp of height
    c falling to 0 over [0, R] with steepest slope -4c/(3R) < -r, so orbits exist.
    ``plateau`` widens X to [-plateau, 0].
    """
    if int(r) < 1 or not R > 0:
        raise BadParams("need r >= 1 and R > 0")
    r = int(r)
    tau = R / 4.0
    C = r * R

    def build(c):
        if not c > 0:
            raise BadParams("family parameter must be positive")
        if c < C:
            h = counterexample_annulus(C, C - c, r, tau)
            if plateau:
                prof = h.inner.profile
                prof = CutoffRamp(prof.height, prof.fall_end, prof.eta, prof.rise, plateau)
                cert = h.certificate
                h = PresetHamiltonian(ProfileHamiltonian(prof), {"kind": "profile", "profile": prof.to_dict()})
                h.certificate = cert
            return h
        prof = CutoffRamp(height=c, fall_end=R, eta=R / 4.0, rise=tau / 2.0, plateau=plateau)
        h = PresetHamiltonian(ProfileHamiltonian(prof), {"kind": "profile", "profile": prof.to_dict()})
        h.certificate = None
        return h

    chart = Chart.annulus(R + 2 * tau + plateau, -tau - plateau)
    return HamiltonianFamily(
        name=f"annulus r={r} R={R:g}",
        builder=build,
        gap=lambda c: float(c),
        chart=chart,
        alpha=HomotopyClass.loop_class(chart, r),
        X={"p": [-plateau, 0.0]},
        Y={"p": [R, R]},
        grid=grid,
    )


def lagrangian_family(w=(0.5, 0.0), alpha=(0, 1, 0, 0), grid: int = 8) -> HamiltonianFamily:
    """Counterexample family on the product torus: member c has gap c and no orbit in alpha.

    X = {p = 0} and Y = {p = w}; ``alpha`` is the full winding vector (q part, then p part).
    """
    w = tuple(float(v) for v in w)
    n = len(w)
    chart = Chart.product_torus(n)
    alpha = tuple(int(a) for a in alpha)

    def build(c):
        return counterexample_lagrangian(n, w, c, alpha=list(alpha))

    return HamiltonianFamily(
        name=f"lagrangian w={w}",
        builder=build,
        gap=lambda c: float(c),
        chart=chart,
        alpha=HomotopyClass(alpha),
        X={"p": [0.0] * n},
        Y={"p": list(w)},
        grid=grid,
    )


def _probe(fam: HamiltonianFamily, c: float, search_kw: dict):
    H = fam.member(c)
    cert = getattr(H, "certificate", None)
    kw = {"grid": fam.grid, "p_range": fam.p_range, **fam.search, **search_kw}
    orbits = find_orbits(H, fam.alpha, fam.chart, **kw)
    entry = {"c": float(c), "gap": fam.gap(c), "orbits": len(orbits)}
    if cert is not None:
        entry["certificate"] = cert
        if cert.get("holds") and orbits:
            raise RuntimeError(f"orbits found at c={c} despite an analytic no-orbit certificate")
    return orbits, entry


def estimate_capacity(
    fam: HamiltonianFamily,
    bracket: tuple[float, float],
    tol: float = 0.01,
    allow_unbounded: bool = False,
    **search_kw,
) -> CapacityEstimate:
    """Bisection for the smallest gap with an orbit in the family's class.

    Requires no orbit at ``bracket[0]`` and an orbit at ``bracket[1]``.  With
    ``allow_unbounded`` a missing witness at the upper end returns
    upper = inf instead of raising.
    """
    t0 = time.perf_counter()
    lo, hi = float(bracket[0]), float(bracket[1])
    if hi < lo:
        raise BracketInvalid("bracket must satisfy c_lo <= c_hi")
    log = []
    certs = []
    hi_orbits, e = _probe(fam, hi, search_kw)
    log.append(e)
    if lo == hi:
        if hi_orbits:
            return CapacityEstimate(lo, hi, tol, hi_orbits, log, fam.grid, certs, time.perf_counter() - t0)
        raise BracketInvalid(f"no orbit at c = {hi}")
    if not hi_orbits:
        if allow_unbounded:
            if "certificate" in e:
                certs.append(e["certificate"])
            return CapacityEstimate(hi, math.inf, tol, [], log, fam.grid, certs, time.perf_counter() - t0)
        raise BracketInvalid(f"no orbit at the upper end c = {hi}")
    lo_orbits, e = _probe(fam, lo, search_kw)
    log.append(e)
    if lo_orbits:
        raise BracketInvalid(f"orbits already exist at the lower end c = {lo}")
    if "certificate" in e:
        certs.append(e["certificate"])
    witnesses = hi_orbits
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        orbits, e = _probe(fam, mid, search_kw)
        log.append(e)
        if orbits:
            hi, witnesses = mid, orbits
        else:
            lo = mid
            if "certificate" in e:
                certs.append(e["certificate"])
    return CapacityEstimate(lo, hi, tol, witnesses, log, fam.grid, certs, time.perf_counter() - t0)


def bps_capacity(fam: HamiltonianFamily, bracket, tol: float = 0.01, **search_kw) -> CapacityEstimate:
    """The Y-free variant: the gap is inf_X H, so the family is used with Y ignored."""
    if fam.alpha.is_trivial:
        raise BadParams("the BPS capacity is defined for nontrivial classes only")
    bps = HamiltonianFamily(
        name=fam.name + " (BPS)",
        builder=fam.builder,
        gap=fam.gap,
        chart=fam.chart,
        alpha=fam.alpha,
        X=fam.X,
        Y=None,
        p_range=fam.p_range,
        grid=fam.grid,
        search=fam.search,
    )
    return estimate_capacity(bps, bracket, tol, **search_kw)


@dataclass
class RotationVector:
    components: np.ndarray
    labels: tuple[str, ...]

    def pairing(self, form) -> float:
        return float(np.dot(np.asarray(form, dtype=float), self.components))

    def to_dict(self) -> dict:
        return dict(zip(self.labels, (float(v) for v in self.components)))


def rotation_vector(H, path, T: float | None = None, birkhoff: bool = False) -> RotationVector:
    """Time average of (dq, dp)(X_H) along a trajectory or orbit over [0, T].

    For an orbit this is its displacement per unit time.  With ``birkhoff``
    the vector field is averaged at sample midpoints instead.
    """
    traj = path.trajectory if isinstance(path, PeriodicOrbit) else path
    n = traj.n
    if T is None:
        T = float(traj.times[-1] - traj.times[0])
    end = int(np.searchsorted(traj.times, traj.times[0] + T - 1e-12))
    if end >= len(traj.times):
        raise ValueError("trajectory shorter than the averaging time")
    states = traj.states[: end + 1]
    times = traj.times[: end + 1]
    if birkhoff:
        from .dynamics import vector_field

        mids = 0.5 * (states[1:] + states[:-1])
        tm = 0.5 * (times[1:] + times[:-1])
        v = np.stack([vector_field(H, t, m) for t, m in zip(tm, mids)])
        comps = (v * np.diff(times)[:, None]).sum(axis=0) / (times[-1] - times[0])
    else:
        comps = (states[-1] - states[0]) / (times[-1] - times[0])
    labels = tuple(f"dq{i + 1}" for i in range(n)) + tuple(f"dp{i + 1}" for i in range(n))
    return RotationVector(comps, labels)


def cp_comparison(H_of_c, estimate: CapacityEstimate, alpha: HomotopyClass, chart: Chart, samples=(), **search_kw) -> dict:
    """Rotation-vector check at the witness orbits and at further gap values above ``upper``.

    The 1-form is dq_1 (dual to the first coordinate circle).  For every orbit
    measure the pairing must reach |l(alpha)|.
    """
    disp = chart.displacement(alpha)
    l_alpha = float(disp[0])
    rows = []
    if not estimate.witnesses or not math.isfinite(estimate.upper):
        return {
            "rows": rows,
            "criterion_met": None,
            "note": "no witness orbit: the rotation-vector criterion is vacuous",
        }

    def check(c, orbits):
        for o in orbits:
            rho = rotation_vector(None, o)
            pair = rho.components[0]
            rows.append(
                {
                    "c": float(c),
                    "pairing": float(pair),
                    "l_alpha": l_alpha,
                    "equal": bool(abs(pair - l_alpha) < 1e-9),
                    "meets_bound": bool(abs(pair) >= abs(l_alpha) - 1e-9),
                }
            )

    check(estimate.upper, estimate.witnesses)
    for c in samples:
        check(c, find_orbits(H_of_c(c), alpha, chart, **search_kw))
    ok = bool(rows) and all(r["meets_bound"] for r in rows)
    return {"rows": rows, "criterion_met": ok, "note": "dq1 pairing of orbit measures"}


def write_report(path, estimate: CapacityEstimate, extra: dict | None = None):
    data = estimate.to_dict()
    if extra:
        data.update(extra)
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
