"""The acceptance suite: eight criteria, each a function returning a CriterionResult.

Tolerances live in ``TOLERANCES`` and can be overridden per run, so a
deliberately impossible tolerance can be injected to watch a check fail.
"""

from __future__ import annotations

import filecmp
import functools
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .capacity import annulus_family, cp_comparison, estimate_capacity, rotation_vector
from .dynamics import flow, integrate, monodromy, symplectic_defect
from .errors import EscapesWindow
from .geometry import Chart, HomotopyClass
from .orbits import find_orbits, minimal_k, osc_check, q_gradient_bound, rescale_check, search_orbits, translate_orbit, verify_window
from .presets import TORUS_R, RunConfig, build_setup, torus_hamiltonian
from .profiles import (
    GProfile,
    ProductHamiltonian,
    ProfileHamiltonian,
    TrigHamiltonian,
    build_Gk,
    build_squeezing_pair,
    counterexample_annulus,
    counterexample_lagrangian,
    monotone_homotopy,
)
from .runner import run_orbits, run_profiles

TOLERANCES = {
    "capacity_width": 0.01,
    "capacity_runtime": 60.0,
    "action_closed_form": 1e-7,
    "action_shift": 1e-9,
    "osc_slack": 1e-6,
    "projection_residual": 1e-9,
    "rescale_residual": 1e-8,
    "rotation": 1e-9,
    "energy_drift": 1e-8,
    "monodromy_fd": 1e-5,
    "symplectic": 1e-8,
    "gradient": 1e-6,
}


@dataclass
class Check:
    name: str
    passed: bool
    detail: str


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list[Check] = field(default_factory=list)
    runtime: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def add(self, name: str, passed, detail: str = ""):
        self.checks.append(Check(name, bool(passed), detail))

    def line(self) -> str:
        failed = [c.name for c in self.checks if not c.passed]
        tail = f"failed: {', '.join(failed)}" if failed else f"{len(self.checks)} checks"
        return f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.number}: {self.title} ({tail}; {self.runtime:.1f} s)"

    def to_dict(self) -> dict:
        return {
            "number": self.number,
            "title": self.title,
            "passed": self.passed,
            "runtime": round(self.runtime, 3),
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks],
        }


def _seed() -> int:
    return int(os.environ.get("HAMCAP_SEED", "0"))


# Shared computations, cached so that later criteria reuse earlier searches.


@functools.lru_cache(maxsize=None)
def annulus_capacity(r: int):
    fam = annulus_family(r, 0.6, grid=32)
    est = estimate_capacity(fam, (0.25 * r, 1.0 * r), tol=0.01)
    return fam, est


@functools.lru_cache(maxsize=None)
def torus_orbits(eps: float):
    H = torus_hamiltonian(eps, 1)
    chart = Chart.torus2()
    return search_orbits(H, HomotopyClass.loop_class(chart, 1), chart, grid=64)


@functools.lru_cache(maxsize=None)
def torus_window():
    chart = Chart.torus2()
    return build_squeezing_pair(torus_hamiltonian(0.01, 1), 1, TORUS_R, chart)[2]


@functools.lru_cache(maxsize=None)
def gk_search():
    wc = torus_window()
    lo, hi = wc.m1 - 1.0, wc.C + wc.S0 + 1.0
    return minimal_k(torus_hamiltonian(0.01, 1), 1, lo, hi, k_max=6, grid=32), (lo, hi)


def criterion_1(tol=TOLERANCES) -> CriterionResult:
    res = CriterionResult(1, "capacity equals r * Area on the annulus")
    for r in (1, 2, 3):
        _, est = annulus_capacity(r)
        target = 0.6 * r
        res.add(f"r={r} bracket contains {target:g}", est.contains(target), f"[{est.lower:.6f}, {est.upper:.6f}]")
        res.add(f"r={r} width", est.width <= tol["capacity_width"] + 1e-12, f"{est.width:.6f}")
        res.add(f"r={r} runtime", est.runtime <= tol["capacity_runtime"], f"{est.runtime:.1f} s")
    return res


def criterion_2(tol=TOLERANCES) -> CriterionResult:
    res = CriterionResult(2, "closed-form actions and action windows of the squeezing pair")
    for preset in ("annulus", "annulus-r2"):
        cfg = RunConfig.load(preset=preset)
        setup = build_setup(cfg)
        H0, H1, wc = build_squeezing_pair(setup.H, cfg.r, setup.R, setup.chart)
        closed = wc.closed_form_actions()
        for label, Hx in (("H0", H0), ("H1", H1)):
            s = search_orbits(Hx, setup.alpha, setup.chart, grid=64)
            rep = verify_window(s.orbits, wc, label)
            errs = [abs(e["action"] - closed[e["label"]]) for e in rep.entries]
            res.add(f"{preset} {label} two families", s.families == 2 and s.isolated == 0, s.summary())
            res.add(f"{preset} {label} tangent-line formulas", errs and max(errs) < tol["action_closed_form"], f"max error {max(errs, default=np.nan):.1e}")
            res.add(f"{preset} {label} windows", rep.passed, str([(e["label"], round(e["action"], 6), e["window"]) for e in rep.entries]))
    return res


def criterion_3(tol=TOLERANCES) -> CriterionResult:
    res = CriterionResult(3, "no-orbit certificates")
    chart = Chart.annulus(0.9, -0.15)
    H = counterexample_annulus(0.6, 0.03, 1, 0.15)
    found = find_orbits(H, HomotopyClass.loop_class(chart, 1), chart, grid=64)
    res.add("annulus: zero orbits at density 64", not found, f"{len(found)} orbits")
    res.add("annulus: slope certificate", H.certificate["holds"], f"steepest slope {H.certificate['steepest_slope']:.6f} > -1")
    pt = Chart.product_torus(2)
    alpha = HomotopyClass((0, 1, 0, 0))
    for k in (1, 2, 4):
        H = counterexample_lagrangian(2, (0.5, 0.0), k, alpha=list(alpha.winding))
        found = find_orbits(H, alpha, pt, grid=8)
        res.add(f"lagrangian k={k}: zero orbits at 8^4", not found, f"{len(found)} orbits")
        res.add(f"lagrangian k={k}: direction certificate", H.certificate["holds"], str(H.certificate.get("beta")))
    return res


def criterion_4(tol=TOLERANCES) -> CriterionResult:
    res = CriterionResult(4, "covering-space lemmas on the strip")
    out, (lo, hi) = gk_search()
    k = out["k"]
    res.add("minimal k found", k is not None, f"k = {k}, history {out['history']}")
    if k is None:
        return res
    base = torus_hamiltonian(0.01, 1)
    S = q_gradient_bound(base)
    oscs = [float(np.ptp(o.trajectory.p)) for o in out["orbits"]]
    res.add("osc(p) <= S", all(osc_check(o, S, tol["osc_slack"]) for o in out["orbits"]), f"S = {S:.6f}, max osc {max(oscs):.6f}")
    resid = [p.residual for p in out["projected"]]
    res.add(
        "window orbits project",
        len(out["projected"]) == len(out["window"]) > 0 and max(resid) < tol["projection_residual"],
        f"{len(out['projected'])} projected, max residual {max(resid, default=np.nan):.1e}",
    )
    errs = []
    for l in (1, 2, 5):
        G = build_Gk(base, k + l)
        for o in out["orbits"]:
            for sign in (1, -1):
                if np.all(sign * o.trajectory.p > S):
                    t = translate_orbit(G, o, l, sign, S)
                    errs.append(abs(t.action - o.action - sign * l) + (t.residual > 1e-9))
    res.add("action shift +-rl", errs and max(errs) < tol["action_shift"], f"{len(errs)} translations, max error {max(errs, default=np.nan):.1e}")
    return res


def criterion_5(tol=TOLERANCES) -> CriterionResult:
    res = CriterionResult(5, "orbit-count bounds on the torus")
    s = torus_orbits(0.01)
    iso = [o for o in s.orbits if o.nondegenerate]
    res.add("perturbed: >= 4 nondegenerate orbits", len(iso) >= 4 and len(iso) == len(s.orbits), s.summary())
    res.add("perturbed: even count", len(iso) % 2 == 0, f"{len(iso)}")
    u = torus_orbits(0.0)
    wc = torus_window()
    acts = sorted(o.action for o in u.orbits)
    res.add("unperturbed: >= 2 families", u.families >= 2, u.summary())
    res.add("unperturbed: actions separated by b", len(acts) >= 2 and acts[0] < wc.b < acts[-1], f"actions {np.round(acts, 6).tolist()}, b = {wc.b:g}")
    return res


def resonant_torus(T: int, eps: float = 1e-4):
    """cos(2 pi p) + eps cos(2 pi (T q + t)): the perturbation is stationary along
    orbits with q' = -1/T, so the T-periodic orbits of class -1 are nondegenerate."""
    from .profiles import hamiltonian_from_dict

    return hamiltonian_from_dict(
        {"kind": "trig", "terms": [{"amp": 1.0, "kq": [0], "kp": [1]}, {"amp": eps, "kq": [T], "kp": [0], "omega": 1.0}]}
    )


def criterion_6(tol=TOLERANCES) -> CriterionResult:
    res = CriterionResult(6, "rescaled orbits close up under H over time T")
    torus = Chart.torus2()
    setup = build_setup(RunConfig.load(preset="annulus"))
    for T in (2, 3):
        cases = (
            ("annulus profile", setup.H, setup.alpha, setup.chart),
            ("resonant torus", resonant_torus(T), HomotopyClass.loop_class(torus, 1), torus),
        )
        for name, H, alpha, chart in cases:
            resid = rescale_check(H, T, alpha, chart, grid=32)
            res.add(f"T={T} {name}", resid and max(resid) < tol["rescale_residual"], f"{len(resid)} orbits, max residual {max(resid, default=np.nan):.1e}")
    return res


def criterion_7(tol=TOLERANCES) -> CriterionResult:
    res = CriterionResult(7, "rotation vectors of witness orbits")
    worst, count = 0.0, 0
    for r in (1, 2, 3):
        fam, est = annulus_capacity(r)
        for o in est.witnesses:
            rho = rotation_vector(None, o)
            worst = max(worst, float(np.abs(rho.components - fam.chart.displacement(o.cls)).max()))
            count += 1
    chart = Chart.torus2()
    for o in torus_orbits(0.01).orbits:
        rho = rotation_vector(None, o)
        worst = max(worst, float(np.abs(rho.components - chart.displacement(o.cls)).max()))
        count += 1
    res.add("rotation vector = winding class", count > 0 and worst < tol["rotation"], f"{count} orbits, max deviation {worst:.1e}")
    fam, est = annulus_capacity(1)
    cp = cp_comparison(fam.member, est, fam.alpha, fam.chart, samples=[est.upper + 0.05, est.upper + 0.2], grid=fam.grid)
    res.add("C^P <= C direction on the annulus family", cp["criterion_met"] is True, f"{len(cp['rows'])} orbit measures")
    return res


def _stencil(f, x, h=1e-5):
    """Five-point central difference of f along each coordinate of x (error O(h^4))."""
    cols = []
    for j in range(len(x)):
        e = np.zeros_like(x)
        e[j] = h
        cols.append((-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * h))
    return np.stack(cols, axis=-1)


def _fd_grad(H, t, x):
    return _stencil(lambda y: H.value(t, y[None])[0], x)


def _fd_hess(H, t, x):
    return _stencil(lambda y: H.grad(t, y[None])[0], x)


def gradient_errors(H, points, times=(0.0, 0.37)) -> tuple[float, float]:
    """Worst relative errors of grad and Hessian against central differences."""
    eg = eh = 0.0
    for t in times:
        for x in points:
            g = H.grad(t, x[None])[0]
            hs = H.hess(t, x[None])[0]
            eg = max(eg, float(np.abs(g - _fd_grad(H, t, x)).max() / max(1.0, np.abs(g).max())))
            eh = max(eh, float(np.abs(hs - _fd_hess(H, t, x)).max() / max(1.0, np.abs(hs).max())))
    return eg, eh


def energy_drift(h: float = 1e-3, T: float = 1.0) -> float:
    """max |H(x(t)) - H(x(0))| for the autonomous H = cos(2 pi q) g(p) from (0.1, 0.05)."""
    H = ProductHamiltonian(TrigHamiltonian([{"amp": 1.0, "kq": [1], "kp": [0]}]), ProfileHamiltonian(GProfile(0.0, 1.0, 0.3)))
    tr = flow(H, np.array([0.1, 0.05]), int(round(T / h)), t_end=T)
    e = tr.energies(H)
    return float(np.abs(e - e[0]).max())


def _fd_monodromy(H, x0, steps, eps=1e-6):
    cols = []
    for j in range(len(x0)):
        e = np.zeros_like(x0)
        e[j] = eps
        plus = integrate(H, x0 + e, steps)["x"][0]
        minus = integrate(H, x0 - e, steps)["x"][0]
        cols.append((plus - minus) / (2 * eps))
    return np.stack(cols, axis=1)


def _same_tree(a: Path, b: Path) -> tuple[bool, list[str]]:
    names = sorted(p.name for p in a.iterdir())
    if names != sorted(p.name for p in b.iterdir()):
        return False, names
    diff = [n for n in names if not filecmp.cmp(a / n, b / n, shallow=False)]
    return not diff, diff


def criterion_8(tol=TOLERANCES) -> CriterionResult:
    res = CriterionResult(8, "numerical hygiene")
    drift = energy_drift()
    res.add("autonomous energy drift at h = 1e-3", drift < tol["energy_drift"], f"max |H - H0| = {drift:.2e}")

    orbit = torus_orbits(0.01).orbits[0]
    H = torus_hamiltonian(0.01, 1)
    M = monodromy(H, orbit.trajectory).matrix
    fd = _fd_monodromy(H, orbit.start.copy(), orbit.trajectory.steps)
    res.add("monodromy vs finite differences", np.abs(M - fd).max() < tol["monodromy_fd"], f"{np.abs(M - fd).max():.1e}")

    rng = np.random.default_rng(_seed())
    lag = counterexample_lagrangian(2, (0.5, 0.0), 1, alpha=[-1, 0, 0, 0])
    four = TrigHamiltonian(
        [
            {"amp": 1.0, "kq": [0, 0], "kp": [1, 0]},
            {"amp": 0.5, "kq": [0, 0], "kp": [0, 1]},
            {"amp": 0.1, "kq": [1, 1], "kp": [0, 0], "omega": 1.0},
        ],
        n=2,
    )
    worst = 0.0
    for Hs in (H, four, lag):
        X = rng.uniform(0.0, 1.0, size=(4, 2 * Hs.n))
        worst = max(worst, symplectic_defect(integrate(Hs, X, 1024, monodromy=True)["M"]))
    res.add("symplectic product M^T J M = J", worst < tol["symplectic"], f"{worst:.1e}")

    setup_a = build_setup(RunConfig.load(preset="annulus"))
    H0, H1, wc = build_squeezing_pair(setup_a.H, 1, 0.6, setup_a.chart)
    cases = {
        "g profile": (setup_a.H, 1),
        "h0": (H0, 1),
        "homotopy s=0.75": (monotone_homotopy(H0, H1, wc, 0.75), 1),
        "cutoff ramp": (counterexample_annulus(0.6, 0.03, 1, 0.15), 1),
        "torus": (H, 1),
        "G^3": (build_Gk(H, 3), 1),
        "lagrangian": (lag, 2),
        "4-d trig": (four, 2),
    }
    # p ranges where each profile actually varies
    p_ranges = {"h0": (0.5, 0.7), "homotopy s=0.75": (0.0, 0.6), "G^3": (-4.0, 4.0)}
    errs = {}
    for name, (Hc, n) in cases.items():
        pts = rng.uniform(-0.2, 0.8, size=(8, 2 * n))
        lo, hi = p_ranges.get(name, (-0.2, 0.8))
        pts[:, n:] = rng.uniform(lo, hi, size=(8, n))
        errs[name] = gradient_errors(Hc, pts)
    worst_g = max(max(v) for v in errs.values())
    worst_case = max(errs, key=lambda k: max(errs[k]))
    res.add("gradient and Hessian checks", worst_g < tol["gradient"], f"worst relative error {worst_g:.1e} ({worst_case})")

    with tempfile.TemporaryDirectory() as tmp:
        same = True
        diffs = []
        for preset, fn in (("annulus", run_orbits), ("annulus", run_profiles), ("torus-gk", run_profiles)):
            dirs = []
            for rep in ("a", "b"):
                d = Path(tmp) / f"{fn.__name__}-{preset}-{rep}"
                fn(RunConfig.load(preset=preset, out=str(d)))
                dirs.append(d)
            ok, diff = _same_tree(*dirs)
            same &= ok
            diffs += diff
        res.add("byte-identical reruns (JSON, CSV, SVG)", same, f"differing files: {diffs}" if diffs else "all files identical")
    return res


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 9)}


def run_criterion(number: int, tolerances: dict | None = None) -> CriterionResult:
    tol = {**TOLERANCES, **(tolerances or {})}
    t0 = time.perf_counter()
    res = CRITERIA[number](tol)
    res.runtime = time.perf_counter() - t0
    return res


def run_all(numbers=None, tolerances: dict | None = None, echo=print) -> list[CriterionResult]:
    out = []
    for n in numbers or sorted(CRITERIA):
        res = run_criterion(n, tolerances)
        if echo:
            echo(res.line())
        out.append(res)
    return out
