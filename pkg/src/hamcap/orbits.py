"""Shooting for 1-periodic orbits in a winding class, actions and spectra.

Orbits are sought as zeros of F(x) = phi^1(x) - x - d on the universal
cover, where d is the lift displacement of the class.  Newton steps use the
pseudo-inverse of (M - I), which stays well defined on Morse-Bott circles of
orbits.  Converged seeds are merged into isolated orbits and families.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dynamics import DEFAULT_STEPS, Monodromy, Trajectory, flow, integrate, is_nondegenerate
from .errors import AmbiguousCluster, ClassMismatch, EscapesWindow, NotInHalfStrip
from .geometry import Chart, HomotopyClass, ReferenceLoop, loop_p_dq

COARSE_STEPS = 256
MAX_STEPS = 8192
DEDUPE_RADIUS = 1e-5
STABLE_TOL = 1e-9
SPECTRUM_MERGE = 1e-8
COARSE_FAMILY_RADIUS = 1e-4


@dataclass
class PeriodicOrbit:
    trajectory: Trajectory
    cls: HomotopyClass
    action: float
    monodromy: Monodromy
    nondegenerate: bool
    family_id: int | None = None
    family_size: int = 1
    residual: float = 0.0
    steps: int = DEFAULT_STEPS
    step_shift: float = 0.0

    @property
    def start(self) -> np.ndarray:
        return self.trajectory.states[0]

    @property
    def n(self) -> int:
        return self.trajectory.n

    @property
    def p_range(self) -> tuple[float, float]:
        p = self.trajectory.p
        return float(p.min()), float(p.max())

    @property
    def p_level(self) -> float:
        return float(self.trajectory.p[:, 0].mean())

    def sort_key(self):
        s = self.start
        return tuple(np.round(s[self.n:], 12)) + tuple(np.round(s[: self.n], 12))

    def to_dict(self, samples: int = 64) -> dict:
        states = self.trajectory.states
        idx = np.unique(np.linspace(0, len(states) - 1, samples + 1).round().astype(int))
        return {
            "class": list(self.cls.winding),
            "start": [float(v) for v in self.start],
            "action": float(self.action),
            "residual": float(self.residual),
            "steps": int(self.steps),
            "nondegenerate": bool(self.nondegenerate),
            "family_id": self.family_id,
            "family_size": int(self.family_size),
            "floquet": [[float(z.real), float(z.imag)] for z in sorted(self.monodromy.multipliers, key=lambda z: (z.real, z.imag))],
            "trajectory": {
                "t": [float(self.trajectory.times[i]) for i in idx],
                "states": [[float(v) for v in states[i]] for i in idx],
            },
        }


def periodic_diff(a, b, chart: Chart) -> np.ndarray:
    """a - b with periodic coordinates reduced to [-1/2, 1/2)."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    mask = chart.periodic
    d[..., mask] = (d[..., mask] + 0.5) % 1.0 - 0.5
    return d


def canonicalize(states, chart: Chart) -> np.ndarray:
    """Shift start states so periodic coordinates lie in [0, 1)."""
    x = np.array(states, dtype=float)
    mask = chart.periodic
    w = x[..., mask] - np.floor(x[..., mask])
    w[w > 1.0 - 1e-9] -= 1.0
    x[..., mask] = w
    return x


def seed_grid(chart: Chart, density: int, p_range=None) -> np.ndarray:
    """Uniform seeds: q on i/d, bounded p on cell centres of the p range."""
    if density < 1:
        raise ValueError("grid density must be positive")
    n = chart.n
    axes = []
    for j in range(2 * n):
        if chart.periodic[j]:
            axes.append(np.arange(density) / density)
        else:
            lo, hi = p_range if p_range is not None else chart.p_bounds
            if not (np.isfinite(lo) and np.isfinite(hi)):
                raise ValueError("unbounded p direction: pass p_range")
            axes.append(lo + (np.arange(density) + 0.5) * (hi - lo) / density)
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _shoot(H, X, disp, chart, steps, tol, maxit, p_range=None):
    """Newton on the shooting map for every row of X; returns (X, converged, residual)."""
    X = np.array(X, dtype=float)
    B, dim = X.shape
    n = dim // 2
    eye = np.eye(dim)
    conv = np.zeros(B, dtype=bool)
    alive = np.ones(B, dtype=bool)
    res = np.full(B, np.inf)
    history = []
    for it in range(maxit + 1):
        idx = np.flatnonzero(alive & ~conv)
        if idx.size == 0:
            break
        out = integrate(H, X[idx], steps, monodromy=True, chart=chart)
        F = out["x"] - X[idx] - disp
        r = np.abs(F).max(axis=1)
        r = np.where(np.isfinite(r), r, np.inf)
        ok = out["ok"] & np.isfinite(r)
        res[idx] = r
        history.append(res.copy())
        if it >= 12:
            # seeds whose residual has not dropped by 10% over six Newton steps are abandoned
            slow = ok & (r > 0.9 * history[-7][idx])
            alive[idx[slow & (r >= tol)]] = False
            ok &= ~slow | (r < tol)
        done = ok & (r < tol)
        conv[idx[done]] = True
        alive[idx[~ok]] = False
        step = ok & ~done
        if not step.any():
            continue
        sidx = idx[step]
        A = out["M"][step] - eye
        delta = -np.einsum("bij,bj->bi", np.linalg.pinv(A, rcond=1e-9), F[step])
        size = np.abs(delta).max(axis=1)
        stalled = size < 1e-15
        alive[sidx[stalled]] = False
        delta *= np.minimum(1.0, 0.25 / np.maximum(size, 1e-300))[:, None]
        X[sidx] += delta
        if chart.p_bounded or p_range is not None:
            lo, hi = p_range if p_range is not None else chart.p_bounds
            inside = ((X[sidx, n:] >= lo) & (X[sidx, n:] <= hi)).all(axis=1)
            alive[sidx[~inside]] = False
    return X, conv, res


def _dedupe_points(X, chart, radius):
    """Greedy merge of states within ``radius`` (max-norm, periodic)."""
    reps = []
    for x in X:
        if not any(np.abs(periodic_diff(x, y, chart)).max() < radius for y in reps):
            reps.append(x)
    return np.array(reps).reshape(-1, X.shape[1])


def _refine(H, X, disp, chart, steps, tol, maxit, stabilize, max_steps, p_range):
    """Converge at ``steps``, then double until start points move less than STABLE_TOL.

    Returns (X, residuals, steps used, last shift, indices of the inputs kept).
    """
    X0 = np.array(X, dtype=float)
    X, conv, res = _shoot(H, X, disp, chart, steps, tol, maxit, p_range)
    kept = np.flatnonzero(conv)
    X, res = X[conv], res[conv]
    # the coarse solutions count as the previous resolution
    shift = np.abs(X - X0[conv]).max(axis=1) if len(X) else np.zeros(0)
    used = steps
    if stabilize and len(X) and shift.max() >= STABLE_TOL:
        while used < max_steps:
            X2, conv2, res2 = _shoot(H, X, disp, chart, 2 * used, tol, maxit, p_range)
            if not conv2.all():
                break
            shift = np.abs(X2 - X).max(axis=1)
            X, res, used = X2, res2, 2 * used
            if shift.max() < STABLE_TOL:
                break
    return X, res, used, shift, kept


def _group_by_trajectory(H, X, chart, steps, radius):
    """Greedy grouping of autonomous solutions lying on one another's coarse trajectories.

    Returns representative rows and the number of solutions each one stands for.
    """
    order = sorted(range(len(X)), key=lambda i: tuple(X[i, chart.n:]) + tuple(X[i, : chart.n]))
    X = X[order]
    path = integrate(H, X, steps, keep=True)["path"]
    reps, counts = [], []
    for i in range(len(X)):
        moving = np.abs(np.diff(path[:, i, :], axis=0)).max() > 0
        for j, rj in enumerate(reps):
            if moving and _segment_distance(X[i], path[:, rj, :], chart) < radius:
                counts[j] += 1
                break
        else:
            reps.append(i)
            counts.append(1)
    return X[reps], np.array(counts)


@dataclass
class OrbitSearch:
    orbits: list[PeriodicOrbit]
    n_seeds: int
    n_converged: int
    density: int
    steps: int
    families: int = 0
    isolated: int = 0
    notes: list[str] = field(default_factory=list)

    def summary(self) -> str:
        where = f"at density {self.density}" if self.density else f"from {self.n_seeds} seeds"
        if not self.orbits:
            return f"0 orbits {where}"
        return f"{self.isolated} isolated orbits, {self.families} families {where}"


def search_orbits(
    H,
    alpha: HomotopyClass,
    chart: Chart,
    grid: int = 64,
    tol: float = 1e-11,
    steps: int = DEFAULT_STEPS,
    p_range=None,
    radius: float = DEDUPE_RADIUS,
    threads: int = 1,
    coarse_steps: int = COARSE_STEPS,
    stabilize: bool = True,
    max_steps: int = MAX_STEPS,
    seeds=None,
    maxit: int = 40,
    z: ReferenceLoop | None = None,
) -> OrbitSearch:
    """Shoot from a seed grid, refine, and group solutions into orbits and families."""
    explicit = seeds is not None
    if not explicit:
        if grid < 16 and chart.n == 1:
            raise ValueError("grid must have at least 16 seeds per dimension")
        seeds = seed_grid(chart, grid, p_range)
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    disp = chart.displacement(alpha)
    coarse = min(coarse_steps, steps)

    chunks = np.array_split(seeds, max(1, int(threads)))
    chunks = [c for c in chunks if len(c)]

    def run(chunk):
        return _shoot(H, chunk, disp, chart, coarse, max(tol, 1e-10), maxit, p_range)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(c) for c in chunks]
    Xc = np.concatenate([r[0][r[1]] for r in results]) if results else np.zeros((0, 2 * chart.n))
    n_conv = len(Xc)
    Xc = _dedupe_points(canonicalize(Xc, chart), chart, radius) if n_conv else Xc
    counts = np.ones(len(Xc), dtype=int)
    if not H.time_dependent and len(Xc):
        Xc, counts = _group_by_trajectory(H, Xc, chart, coarse, max(radius, COARSE_FAMILY_RADIUS))
    X, res, used, shift, kept = _refine(H, Xc, disp, chart, steps, tol, maxit, stabilize, max_steps, p_range)
    X = canonicalize(X, chart)
    orbits = build_orbits(H, X, alpha, chart, used, residuals=res, z=z, shifts=shift)
    for o, cnt in zip(orbits, counts[kept]):
        o.family_size = int(cnt)
    isolated, families = dedupe(orbits, chart, radius, autonomous=not H.time_dependent, H=H)
    out = sorted(isolated + families, key=lambda o: o.sort_key())
    fid = 0
    for o in out:
        if o.family_id is not None:
            o.family_id = fid
            fid += 1
    return OrbitSearch(out, len(seeds), n_conv, 0 if explicit else grid, used, families=len(families), isolated=len(isolated))


def find_orbits(H, alpha: HomotopyClass, chart: Chart, grid: int = 64, tol: float = 1e-11, **kw) -> list[PeriodicOrbit]:
    """All 1-periodic orbits in class ``alpha`` reached from a ``grid``-density seed grid.

    Families are represented by one member each (``family_id`` set).  An empty
    list means none were found at this density, not a proof of absence.
    """
    return search_orbits(H, alpha, chart, grid=grid, tol=tol, **kw).orbits


def build_orbit(H, x0, alpha, chart, steps, residual=None, z=None, step_shift=0.0) -> PeriodicOrbit:
    traj = flow(H, x0, steps)
    from .dynamics import monodromy as _monodromy

    mono = _monodromy(H, traj)
    disp = chart.displacement(alpha)
    if residual is None:
        residual = float(np.abs(traj.states[-1] - traj.states[0] - disp).max())
    orb = PeriodicOrbit(traj, alpha, 0.0, mono, is_nondegenerate(mono), residual=residual, steps=steps, step_shift=step_shift)
    orb.action = action(H, orb, z, chart)
    return orb


def build_orbits(H, X, alpha, chart, steps, residuals=None, z=None, shifts=None) -> list[PeriodicOrbit]:
    """Batched version of build_orbit: one integration pass for all start states."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if len(X) == 0:
        return []
    out = integrate(H, X, steps, keep=True, monodromy=True)
    times = out["h"] * np.arange(steps + 1)
    disp = chart.displacement(alpha)
    path = out["path"]
    if H.time_dependent:
        energy = np.stack([H.value(t, path[j]) for j, t in enumerate(times)])
    else:
        energy = H.value(0.0, path.reshape(-1, path.shape[-1])).reshape(path.shape[:2])
    orbits = []
    for i in range(len(X)):
        traj = Trajectory(times, out["path"][:, i, :].copy(), out["h"], H.n)
        mono = Monodromy(out["M"][i])
        res = float(np.abs(traj.states[-1] - traj.states[0] - disp).max()) if residuals is None else float(residuals[i])
        orb = PeriodicOrbit(
            traj, alpha, 0.0, mono, is_nondegenerate(mono), residual=res, steps=steps,
            step_shift=0.0 if shifts is None else float(shifts[i]),
        )
        orb.action = action(H, orb, z, chart, energies=energy[:, i])
        orbits.append(orb)
    return orbits


def _segment_distance(x, path, chart):
    """Max-norm-ish distance from x to the polyline ``path`` (periodic coordinates)."""
    a = path[:-1]
    b = path[1:]
    d = periodic_diff(x[None, :], a, chart)
    seg = b - a
    L = np.einsum("ij,ij->i", seg, seg)
    t = np.clip(np.einsum("ij,ij->i", d, seg) / np.where(L > 0, L, 1.0), 0.0, 1.0)
    return float(np.linalg.norm(d - t[:, None] * seg, axis=1).min())


def dedupe(orbits, chart: Chart, radius: float = DEDUPE_RADIUS, autonomous: bool = True, H=None, link: float = 0.1):
    """Split converged orbits into (isolated orbits, one representative per family).

    Autonomous, non-constant orbits come in circles of time shifts: a start
    point lying on another orbit's trajectory joins its family.  Remaining
    degenerate orbits are chained when their separation runs along the kernel
    of M - I.  Clusters fitting neither picture raise AmbiguousCluster.
    """
    orbits = sorted(orbits, key=lambda o: o.sort_key())
    points = []
    for o in orbits:
        if not any(np.abs(periodic_diff(o.start, q.start, chart)).max() < radius for q in points):
            points.append(o)
    isolated, fams = [], []
    rest = []
    for o in points:
        moving = np.abs(np.diff(o.trajectory.states, axis=0)).max() > 0
        if autonomous and moving:
            for fam in fams:
                if _segment_distance(o.start, fam[0].trajectory.states, chart) < radius:
                    fam.append(o)
                    break
            else:
                fams.append([o])
        elif o.nondegenerate:
            isolated.append(o)
        else:
            rest.append(o)
    for fam in fams:
        rep = fam[0]
        v = rep.trajectory.states[1] - rep.trajectory.states[0]
        v = v / max(np.linalg.norm(v), 1e-300)
        kernel_ok = np.linalg.norm((rep.monodromy.matrix - np.eye(len(v))) @ v) < 1e-6
        if not kernel_ok:
            raise AmbiguousCluster(f"family at p={rep.p_level:.6g} lacks a unit multiplier along the flow")
    for i, o in enumerate(isolated):
        for q in isolated[i + 1:]:
            if np.abs(periodic_diff(o.start, q.start, chart)).max() < 10 * radius:
                raise AmbiguousCluster(f"isolated orbits closer than {10 * radius:g} at {o.start}")
    groups = _kernel_chains(rest, chart, link)
    fams.extend(groups)
    reps = []
    for fam in fams:
        rep = fam[0]
        rep.family_id = 0
        rep.family_size = sum(o.family_size for o in fam)
        reps.append(rep)
    return isolated, reps


def _kernel_chains(orbits, chart, link):
    n = len(orbits)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            d = periodic_diff(orbits[j].start, orbits[i].start, chart)
            dist = np.linalg.norm(d)
            if dist >= link:
                continue
            u = d / dist
            K = orbits[i].monodromy.matrix - np.eye(len(u))
            if np.linalg.norm(K @ u) > 0.1 * max(np.linalg.norm(K, 2), 1e-12):
                raise AmbiguousCluster(f"degenerate orbits at distance {dist:.3g} not joined along a kernel direction")
            parent[find(j)] = find(i)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(orbits[i])
    return list(groups.values())


def action(H, orbit: PeriodicOrbit, z: ReferenceLoop | None = None, chart: Chart | None = None, energies=None) -> float:
    """int_0^1 H dt - oint_x p dq + oint_z p dq, by the trapezoid rule on the samples."""
    traj = orbit.trajectory
    if z is not None:
        if tuple(z.winding.winding) != tuple(orbit.cls.winding):
            raise ClassMismatch(f"orbit class {orbit.cls.winding} differs from reference class {z.winding.winding}")
        z_term = z.p_dq()
    else:
        z_term = 0.0
    e = _values(H, traj) if energies is None else np.asarray(energies)
    dt = np.diff(traj.times)
    h_int = float(np.sum(0.5 * (e[1:] + e[:-1]) * dt))
    return h_int - loop_p_dq(traj.states, traj.n) + z_term


def _values(H, traj: Trajectory) -> np.ndarray:
    if not H.time_dependent:
        return H.value(0.0, traj.states)
    return np.array([float(H.value(t, s)[0]) for t, s in zip(traj.times, traj.states)])


@dataclass
class ActionSpectrum:
    entries: list[tuple[float, list]]

    @classmethod
    def from_orbits(cls, orbits, merge: float = SPECTRUM_MERGE) -> "ActionSpectrum":
        entries = []
        for o in sorted(orbits, key=lambda o: o.action):
            if entries and abs(o.action - entries[-1][0]) < merge:
                entries[-1][1].append(o)
            else:
                entries.append((o.action, [o]))
        return cls(entries)

    @property
    def values(self) -> list[float]:
        return [a for a, _ in self.entries]


@dataclass
class WindowReport:
    entries: list[dict]

    @property
    def passed(self) -> bool:
        return bool(self.entries) and all(e["ok"] for e in self.entries)

    @property
    def violations(self) -> list[dict]:
        return [e for e in self.entries if not e["ok"]]


def verify_window(orbits, wc, which: str) -> WindowReport:
    """Check each orbit of H0 (``which="H0"``) or H1 against its predicted action window."""
    if which not in ("H0", "H1"):
        raise ValueError("which must be 'H0' or 'H1'")
    windows = wc.expected_windows()
    levels = {"H0_x0": wc.R - wc.s0, "H0_x1": wc.R - wc.s1, "H1_x0": wc.s0, "H1_x1": wc.s1}
    levels = {k: v for k, v in levels.items() if k.startswith(which)}
    closed = wc.closed_form_actions()
    entries = []
    for o in orbits:
        label = min(levels, key=lambda k: abs(levels[k] - o.p_level))
        lo, hi = windows[label]
        entries.append(
            {
                "label": label,
                "p": o.p_level,
                "action": o.action,
                "closed_form": closed[label],
                "window": (lo, hi),
                "ok": lo < o.action < hi,
            }
        )
    return WindowReport(entries)


def homotopy_sweep(H0, H1, wc, chart: Chart, s_values=None, **kw) -> dict:
    """Actions of the family followed from R - s0 (under H0) to s1 (under H1).

    Returns the per-s actions and whether they are nonincreasing in s.
    """
    from .profiles.constructions import homotopy_levels, monotone_homotopy

    if s_values is None:
        s_values = np.round(np.linspace(0.0, 1.0, 11), 12)
    alpha = HomotopyClass.loop_class(chart, wc.r)
    rows = []
    for s in s_values:
        Hs = monotone_homotopy(H0, H1, wc, float(s))
        target, predicted = homotopy_levels(wc, float(s))[0]
        found = find_orbits(Hs, alpha, chart, **kw)
        near = [o for o in found if abs(o.p_level - target) < 1e-6]
        rows.append(
            {
                "s": float(s),
                "p": target,
                "predicted": predicted,
                "action": near[0].action if near else None,
            }
        )
    acts = [r["action"] for r in rows]
    ok = all(a is not None for a in acts) and all(x >= y - 1e-9 for x, y in zip(acts, acts[1:]))
    return {"rows": rows, "nonincreasing": ok}


def translate_orbit(H_shifted, x: PeriodicOrbit, l: int, sign: int, S: float, chart: Chart | None = None) -> PeriodicOrbit:
    """T_l: (q, p) -> (q, p + sign*l), re-verified as an orbit of ``H_shifted`` (G^{k+l})."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    p = x.trajectory.p
    if not np.all(sign * p > S):
        raise NotInHalfStrip(f"orbit not contained in {{{'+' if sign > 0 else '-'}p > {S:g}}}")
    if l == 0:
        return x
    states = x.trajectory.states.copy()
    states[:, x.n:] += sign * l
    traj = Trajectory(x.trajectory.times.copy(), states, x.trajectory.h, x.n)
    from .dynamics import monodromy as _monodromy

    check = flow(H_shifted, states[0], x.trajectory.steps)
    residual = float(np.abs(check.states[-1] - states[-1]).max() + x.residual)
    mono = _monodromy(H_shifted, traj)
    out = PeriodicOrbit(traj, x.cls, 0.0, mono, is_nondegenerate(mono), residual=residual, steps=x.steps)
    out.action = action(H_shifted, out)
    return out


def q_gradient_bound(H, chart: Chart | None = None, n_q: int = 256, n_p: int = 256, n_t: int = 16) -> float:
    """S = sup |dH/dq| estimated on a (t, q, p) grid over the unit torus."""
    q = np.arange(n_q) / n_q
    p = np.arange(n_p) / n_p
    Q, P = np.meshgrid(q, p, indexing="ij")
    X = np.stack([Q.ravel(), P.ravel()], axis=1)
    times = np.arange(n_t) / n_t if H.time_dependent else [0.0]
    return float(max(np.abs(H.grad(t, X)[:, 0]).max() for t in times))


def osc_check(x: PeriodicOrbit, S: float, tol: float = 1e-6) -> bool:
    """max p - min p along the orbit is at most S (+ tol)."""
    p = x.trajectory.p
    return bool(np.all(p.max(axis=0) - p.min(axis=0) <= S + tol))


def project_orbit(x: PeriodicOrbit, torus_h, k: int, chart: Chart | None = None) -> PeriodicOrbit:
    """Push a G^k orbit inside |p| < k down to the torus and re-verify it under H."""
    lo, hi = x.p_range
    if not max(abs(lo), abs(hi)) < k:
        raise EscapesWindow((lo, hi), k)
    chart = chart or Chart.torus2()
    x0 = x.start.copy()
    traj = flow(torus_h, x0, x.trajectory.steps)
    disp = chart.displacement(HomotopyClass((x.cls.winding[0], 0)))
    residual = float(np.abs(traj.states[-1] - traj.states[0] - disp).max())
    from .dynamics import monodromy as _monodromy

    mono = _monodromy(torus_h, traj)
    out = PeriodicOrbit(traj, HomotopyClass((x.cls.winding[0], 0)), 0.0, mono, is_nondegenerate(mono), residual=residual, steps=x.steps)
    out.action = action(torus_h, out)
    return out


def window_orbits(orbits, lo: float, hi: float):
    return [o for o in orbits if lo < o.action < hi]


def minimal_k(torus_h, r: int, lo: float, hi: float, k_max: int = 6, grid: int = 32, **kw) -> dict:
    """Smallest k for which every G^k orbit with action in (lo, hi) projects to the torus."""
    from .profiles.constructions import build_Gk

    history = []
    for k in range(1, k_max + 1):
        Gk = build_Gk(torus_h, k)
        strip = Chart.strip()
        found = find_orbits(Gk, HomotopyClass((-r,)), strip, grid=grid, p_range=(-(k + 1), k + 1), **kw)
        inside = window_orbits(found, lo, hi)
        escaped = []
        projected = []
        for o in inside:
            try:
                projected.append(project_orbit(o, torus_h, k))
            except EscapesWindow as err:
                escaped.append(err.p_range)
        history.append({"k": k, "window_orbits": len(inside), "escaped": len(escaped)})
        if inside and not escaped:
            return {"k": k, "orbits": found, "window": inside, "projected": projected, "history": history}
    return {"k": None, "orbits": [], "window": [], "projected": [], "history": history}


def rescale_check(H, T: int, alpha: HomotopyClass, chart: Chart, **kw) -> list[float]:
    """Find orbits of t -> T H(T t) and flow them under H for time T; return closure residuals."""
    from .profiles.hamiltonian import TimeRescaled

    TH = TimeRescaled(H, factor=T, time_scale=T)
    found = find_orbits(TH, alpha, chart, **kw)
    disp = chart.displacement(alpha)
    out = []
    for o in found:
        tr = flow(H, o.start, o.steps * T, t_end=float(T))
        out.append(float(np.abs(tr.states[-1] - tr.states[0] - disp).max()))
    return out


def export_json(orbits, path, extra: dict | None = None, samples: int = 64):
    data = {"orbits": [o.to_dict(samples) for o in orbits]}
    if extra:
        data.update(extra)
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def export_csv(orbits, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "class", "q0", "p0", "action", "residual", "nondegenerate", "family_id", "family_size"])
        for i, o in enumerate(orbits):
            n = o.n
            w.writerow(
                [
                    i,
                    " ".join(str(v) for v in o.cls.winding),
                    " ".join(repr(float(v)) for v in o.start[:n]),
                    " ".join(repr(float(v)) for v in o.start[n:]),
                    repr(float(o.action)),
                    f"{o.residual:.3e}",
                    int(o.nondegenerate),
                    "" if o.family_id is None else o.family_id,
                    o.family_size,
                ]
            )
