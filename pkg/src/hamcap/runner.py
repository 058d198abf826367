"""Command pipelines: each run writes its artifacts and returns a result dict.

A result carries ``passed`` (all assertions of the run held) and ``lines``
(the human-readable report).  The CLI maps ``passed`` to its exit code.
"""

from __future__ import annotations

import csv
import json
import math
import time
from pathlib import Path

import numpy as np

from .capacity import cp_comparison, estimate_capacity, write_report
from .errors import EscapesWindow
from .orbits import build_orbit, export_csv, export_json, osc_check, project_orbit, q_gradient_bound, search_orbits, verify_window
from .plots import plot_portrait, plot_profiles
from .presets import RunConfig, Setup, build_setup, capacity_family
from .profiles import build_squeezing_pair
from .profiles.constructions import ball_hypotheses

ACTION_MATCH = 1e-8


def _dump(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _out(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def squeezing_pair(setup: Setup, cfg: RunConfig):
    return build_squeezing_pair(setup.H, cfg.r, setup.R, setup.chart, seed=cfg.seed)


def comparison_lines(wc):
    """The four comparison lines for h0(p - R) and for h1, as functions of p."""
    r, R, e = wc.r, wc.R, wc.eps1
    return {
        "l1": lambda p: -r * (p - R) + wc.S0,
        "l2": lambda p: -r * (p - (R - e)) + wc.S0,
        "l3": lambda p: -r * (p - R) + wc.m0,
        "l4": lambda p: -r * p + wc.m0,
        "l1'": lambda p: -r * (p - e) + wc.S1,
        "l2'": lambda p: -r * p + wc.S1,
        "l3'": lambda p: -r * (p - e) + wc.m1,
        "l4'": lambda p: wc.m1 + 0.0 * p,
    }


def tangent_intercepts(wc) -> dict:
    """y-intercepts of the tangent lines of slope -r at the four roots."""
    h0, h1, r, R = wc.h0(), wc.h1(), wc.r, wc.R
    out = {}
    for i, s in enumerate((wc.s0, wc.s1)):
        x0 = R - s
        out[f"H0_x{i}"] = (x0, float(h0.value(-s)) - float(h0.d1(-s)) * x0)
        out[f"H1_x{i}"] = (s, float(h1.value(s)) - float(h1.d1(s)) * s)
    return out


def run_profiles(cfg: RunConfig) -> dict:
    setup = build_setup(cfg)
    out = _out(cfg)
    lines = []
    if setup.name == "torus-gk":
        return _profiles_gk(setup, cfg, out)
    H0, H1, wc = squeezing_pair(setup, cfg)
    lo, hi = -2 * wc.tau, wc.R + 2 * wc.tau
    p = np.linspace(lo, hi, cfg.samples)
    X = np.stack([np.zeros_like(p), p], axis=1)
    curves = {"H": setup.H.value(0.0, X), "h0(p - R)": H0.value(0.0, X), "h1": H1.value(0.0, X)}
    comp = {k: f(p) for k, f in comparison_lines(wc).items()}
    intercepts = tangent_intercepts(wc)
    tangents = {f"tangent {k}": -wc.r * p + b for k, (_, b) in intercepts.items()}
    with open(out / "profiles.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        cols = list(curves) + list(comp)
        w.writerow(["p"] + cols)
        for j in range(len(p)):
            w.writerow([repr(float(p[j]))] + [repr(float({**curves, **comp}[c][j])) for c in cols])
    plot_profiles(out / "profiles.svg", p, curves, comp, tangents, f"{setup.name}: r={wc.r}, R={wc.R:g}")
    ok = True
    rows = {}
    for label, (level, icpt) in intercepts.items():
        Hx = H0 if label.startswith("H0") else H1
        orb = build_orbit(Hx, np.array([0.0, level]), setup.alpha, setup.chart, cfg.steps)
        diff = abs(orb.action - icpt)
        ok &= diff < ACTION_MATCH and orb.residual < 1e-9
        rows[label] = {"p": level, "intercept": icpt, "action": orb.action, "diff": diff}
        lines.append(f"{label}: p = {level:.10f}  intercept = {icpt:.12f}  action = {orb.action:.12f}  |diff| = {diff:.1e}")
    lines.append(f"a = {wc.a:.6f}, b = {wc.b:.6f}, c = {wc.c:.6f}")
    lines.append(f"wrote {len(p)} samples to profiles.csv")
    _dump(out / "profiles.json", {"config": cfg.to_dict(), "window": wc.to_dict(), "tangents": rows, "samples": len(p)})
    return {"passed": bool(ok), "lines": lines, "rows": rows, "samples": len(p), "window": wc}


def _profiles_gk(setup: Setup, cfg: RunConfig, out: Path) -> dict:
    k = setup.info["k"]
    base = setup.info["base"]
    p = np.linspace(-(k + 1.5), k + 1.5, cfg.samples)
    X = np.stack([np.zeros_like(p), p], axis=1)
    curves = {f"G^{k}(0, p)": setup.H.value(0.0, X), "H(0, p)": base.value(0.0, X)}
    with open(out / "profiles.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["p"] + list(curves))
        for j in range(len(p)):
            w.writerow([repr(float(p[j]))] + [repr(float(v[j])) for v in curves.values()])
    plot_profiles(out / "profiles.svg", p, curves, {}, {}, f"G^{k} slice at q = 0, t = 0")
    inside = np.abs(p) < k
    agree = float(np.abs(curves[f"G^{k}(0, p)"][inside] - curves["H(0, p)"][inside]).max())
    lines = [f"G^{k} equals H on |p| < {k} to {agree:.1e}", f"wrote {len(p)} samples to profiles.csv"]
    return {"passed": agree < 1e-12, "lines": lines, "samples": len(p)}


def _search(setup: Setup, cfg: RunConfig, H=None):
    return search_orbits(
        H if H is not None else setup.H,
        setup.alpha,
        setup.chart,
        grid=setup.grid,
        tol=cfg.tol,
        steps=cfg.steps,
        p_range=setup.p_range,
        threads=cfg.threads,
        seeds=setup.seeds,
    )


def _orbit_lines(orbits):
    return [
        f"  p0 = {o.p_level:+.8f}  q0 = {round(o.start[0], 8) + 0.0:.8f}  action = {o.action:+.10f}  "
        + ("nondegenerate" if o.nondegenerate else f"family of {o.family_size}")
        for o in orbits
    ]


def run_orbits(cfg: RunConfig) -> dict:
    t0 = time.perf_counter()
    setup = build_setup(cfg)
    out = _out(cfg)
    lines, checks, extra = [], {}, {}
    name = setup.name
    if name in ("annulus", "annulus-r2"):
        H0, H1, wc = squeezing_pair(setup, cfg)
        shown = []
        for label, Hx in (("H0", H0), ("H1", H1)):
            s = _search(setup, cfg, Hx)
            rep = verify_window(s.orbits, wc, label)
            checks[f"{label} windows"] = rep.passed
            checks[f"{label} two families"] = s.families == 2
            lines.append(f"{label}: {s.summary()}")
            for e in rep.entries:
                lines.append(f"  {e['label']}: action = {e['action']:+.10f} in ({e['window'][0]:.6f}, {e['window'][1]:.6f}): {'ok' if e['ok'] else 'VIOLATED'}")
            extra[label] = rep.entries
            shown += s.orbits
        orbits = shown
        extra["window"] = wc.to_dict()
    else:
        s = _search(setup, cfg)
        orbits = s.orbits
        lines.append(s.summary())
        lines += _orbit_lines(orbits)
        if "certificate" in setup.info:
            cert = setup.info["certificate"]
            checks["no orbits"] = not orbits
            checks["analytic certificate"] = bool(cert.get("holds"))
            extra["certificate"] = cert
        if name == "torus":
            iso = [o for o in orbits if o.nondegenerate]
            even = len(iso) % 2 == 0
            checks["at least 4 orbits"] = len(iso) >= 4
            checks["all nondegenerate"] = len(iso) == len(orbits)
            checks["evenness"] = even
            lines.append(f"evenness check {'pass' if even else 'FAIL'} ({len(iso)} isolated orbits)")
        if name == "torus-unperturbed":
            _, _, wc = squeezing_pair(setup, cfg)
            acts = sorted(o.action for o in orbits)
            sep = len(acts) >= 2 and acts[0] < wc.b < acts[-1]
            checks["two families"] = s.families >= 2
            checks["separated by b"] = sep
            lines.append(f"b = {wc.b:.6f}: actions {'are' if sep else 'are NOT'} separated by b")
        if name == "torus-gk":
            base = setup.info["base"]
            S = q_gradient_bound(base)
            osc = all(osc_check(o, S) for o in orbits)
            projected, escaped = 0, 0
            for o in orbits:
                try:
                    pr = project_orbit(o, base, setup.info["k"])
                    projected += pr.residual < 1e-9
                except EscapesWindow:
                    escaped += 1
            checks["osc(p) <= S"] = osc
            lines.append(f"S = {S:.6f}; osc check {'pass' if osc else 'FAIL'}; {projected} project to H, {escaped} escape |p| < {setup.info['k']}")
        if name == "ball":
            hyp = ball_hypotheses(setup.H, setup.info["radius"], setup.info["alpha_q"])
            checks["inf_X H - sup_Y H > |alpha| R"] = hyp["gap_exceeds_bound"]
            checks["sup H < |alpha| R + inf_X H"] = hyp["sup_below_bound"]
            checks["orbit exists"] = bool(orbits)
            extra["hypotheses"] = hyp
            lines.append(
                f"|alpha| R = {hyp['bound']:.6f}; inf_X H - sup_Y H = {hyp['inf_X'] - hyp['sup_Y']:.6f}; sup H = {hyp['sup_M']:.6f}"
            )
    passed = all(checks.values()) if checks else True
    for k, v in checks.items():
        lines.append(f"[{'PASS' if v else 'FAIL'}] {k}")
    export_json(orbits, out / "orbits.json", {"config": cfg.to_dict(), "checks": checks, "details": extra})
    export_csv(orbits, out / "orbits.csv")
    plot_portrait(out / "portrait.svg", orbits, f"{name}: {len(orbits)} orbits")
    return {"passed": passed, "lines": lines, "orbits": orbits, "checks": checks, "runtime": time.perf_counter() - t0}


def run_capacity(cfg: RunConfig) -> dict:
    out = _out(cfg)
    fam, bracket = capacity_family(cfg)
    unbounded = cfg.preset == "lagrangian"
    est = estimate_capacity(fam, bracket, tol=cfg.cap_tol, allow_unbounded=unbounded, steps=cfg.steps, threads=cfg.threads)
    lines = [f"family: {fam.name}, class {list(fam.alpha.winding)}, grid {fam.grid}"]
    if math.isinf(est.upper):
        lines.append(f"no upper witness found <= c_max = {bracket[1]:g} (lower = {est.lower:g})")
        cp = cp_comparison(fam.member, est, fam.alpha, fam.chart)
        passed = True
    else:
        lines.append(f"bracket [{est.lower:.6f}, {est.upper:.6f}] (width {est.width:.4f}, {est.runtime:.1f} s)")
        for o in est.witnesses:
            lines.append(f"  witness p0 = {o.p_level:+.8f} action = {o.action:+.8f}")
        samples = [est.upper + 0.05, est.upper + 0.2]
        cp = cp_comparison(fam.member, est, fam.alpha, fam.chart, samples=samples, grid=fam.grid, p_range=fam.p_range)
        passed = est.width <= cfg.cap_tol + 1e-12 and cp["criterion_met"] is not False
    lines.append(f"rotation-vector criterion: {cp['criterion_met']} ({cp['note']})")
    write_report(out / "capacity.json", est, {"config": cfg.to_dict(), "family": fam.name, "cp_comparison": cp})
    return {"passed": bool(passed), "lines": lines, "estimate": est, "cp": cp}
