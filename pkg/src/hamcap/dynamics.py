"""Hamiltonian vector fields, implicit-midpoint flow and monodromy.

The integrator works on batches of states (B, 2n) so that many shooting
seeds advance together.  The monodromy returned alongside is the exact
Jacobian of the discrete time-one map, so Newton on the shooting equation
converges quadratically to fixed points of the discrete flow.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import LeftChart, NewtonDivergence
from .geometry import Chart, PhasePoint

NEWTON_TOL = 1e-12
NEWTON_MAXIT = 50
DEFAULT_STEPS = 2048


def _as_batch(x):
    x = np.asarray(x.state if isinstance(x, PhasePoint) else x, dtype=float)
    return (x[None, :], True) if x.ndim == 1 else (x, False)


@dataclass(frozen=True)
class TangentVector:
    dq: np.ndarray
    dp: np.ndarray

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.dq, self.dp])


def vector_field(H, t, x):
    """X_H in Darboux form: dq = dH/dp, dp = -dH/dq.

    A PhasePoint gives a TangentVector; raw state arrays give arrays of the same shape.
    """
    xb, single = _as_batch(x)
    g = H.grad(t, xb)
    n = H.n
    v = np.concatenate([g[:, n:], -g[:, :n]], axis=1)
    if isinstance(x, PhasePoint):
        return TangentVector(v[0, :n].copy(), v[0, n:].copy())
    return v[0] if single else v


def _jmat(n):
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = np.eye(n)
    J[n:, :n] = -np.eye(n)
    return J


def _solve(A, b):
    """Batched solve of A y = b for b of shape (B, m) or (B, m, k)."""
    if A.shape[-1] == 2:
        a, bb, c, d = A[:, 0, 0], A[:, 0, 1], A[:, 1, 0], A[:, 1, 1]
        det = a * d - bb * c
        inv = np.empty_like(A)
        inv[:, 0, 0], inv[:, 0, 1], inv[:, 1, 0], inv[:, 1, 1] = d / det, -bb / det, -c / det, a / det
        if b.ndim == 2:
            return np.einsum("bij,bj->bi", inv, b)
        return inv @ b
    if b.ndim == 2:
        return np.linalg.solve(A, b[..., None])[..., 0]
    return np.linalg.solve(A, b)


@dataclass
class StepStats:
    max_newton_iters: int = 0
    worst_residual: float = 0.0
    failed_at: float | None = None


def integrate(
    H,
    x0,
    steps: int = DEFAULT_STEPS,
    t0: float = 0.0,
    t_end: float = 1.0,
    monodromy: bool = False,
    keep: bool = False,
    chart: Chart | None = None,
    tol: float = NEWTON_TOL,
    maxit: int = NEWTON_MAXIT,
):
    """Advance a batch of states with implicit-midpoint steps of size (t_end - t0)/steps.

    Returns a dict with ``x`` (final states), ``ok`` (per-state flag: Newton
    converged and the state stayed in the chart), and optionally ``M``
    (monodromy of the discrete map) and ``path`` (steps+1, B, 2n).
    """
    x, _ = _as_batch(x0)
    x = x.copy()
    B, dim = x.shape
    n = dim // 2
    h = (t_end - t0) / steps
    J = _jmat(n)
    eye = np.eye(dim)
    ok = np.ones(B, dtype=bool)
    M = np.broadcast_to(eye, (B, dim, dim)).copy() if monodromy else None
    path = np.empty((steps + 1, B, dim)) if keep else None
    if keep:
        path[0] = x
    stats = StepStats()
    check_chart = chart is not None and chart.p_bounded
    for i in range(steps):
        tm = t0 + (i + 0.5) * h
        if i == 0:
            g = H.grad(tm, x)
            y = x + h * np.concatenate([g[:, n:], -g[:, :n]], axis=1)
        else:
            y = 2.0 * x - x_prev
        it = 0
        while True:
            mid = 0.5 * (x + y)
            g, hs = H.derivs(tm, mid)
            A = J @ hs
            G = y - x - h * np.concatenate([g[:, n:], -g[:, :n]], axis=1)
            res = np.abs(G).max(axis=1)
            res = np.where(np.isfinite(res), res, np.inf)
            y = y - _solve(eye - 0.5 * h * A, G)
            if res.max(initial=0.0) < tol or it >= maxit:
                # the last correction is kept: it squares the sub-tolerance residual
                break
            it += 1
        stats.max_newton_iters = max(stats.max_newton_iters, it)
        bad = res >= tol
        if bad.any():
            stats.worst_residual = max(stats.worst_residual, float(res[bad].max()))
            if stats.failed_at is None:
                stats.failed_at = tm
            ok &= ~bad
        if monodromy:
            M = _solve(eye - 0.5 * h * A, (eye + 0.5 * h * A) @ M)
        x_prev, x = x, y
        if check_chart:
            ok &= chart.contains_p(x[:, n:])
        if keep:
            path[i + 1] = x
    out = {"x": x, "ok": ok, "stats": stats, "h": h}
    if monodromy:
        out["M"] = M
    if keep:
        out["path"] = path
    return out


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray = field(repr=False)
    h: float
    n: int

    @property
    def q(self):
        return self.states[:, : self.n]

    @property
    def p(self):
        return self.states[:, self.n:]

    @property
    def start(self) -> PhasePoint:
        return PhasePoint.from_state(self.states[0])

    @property
    def steps(self) -> int:
        return len(self.times) - 1

    def energies(self, H) -> np.ndarray:
        return np.array([float(H.value(t, s)[0]) for t, s in zip(self.times, self.states)])

    def to_csv(self, path, H=None):
        n = self.n
        header = ["t"] + [f"q{i + 1}" for i in range(n)] + [f"p{i + 1}" for i in range(n)]
        if H is not None:
            header.append("H")
            energy = self.energies(H)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for j, (t, s) in enumerate(zip(self.times, self.states)):
                row = [repr(float(t))] + [repr(float(v)) for v in s]
                if H is not None:
                    row.append(repr(float(energy[j])))
                w.writerow(row)


def flow(H, x0, steps: int = DEFAULT_STEPS, chart: Chart | None = None, t0: float = 0.0, t_end: float = 1.0) -> Trajectory:
    """Trajectory of a single state; raises on Newton failure or on leaving a bounded chart."""
    if steps < 16:
        raise ValueError("flow needs at least 16 steps")
    x, _ = _as_batch(x0)
    if x.shape[0] != 1:
        raise ValueError("flow integrates one state; use integrate() for batches")
    out = integrate(H, x, steps, t0=t0, t_end=t_end, keep=True)
    st = out["stats"]
    if st.failed_at is not None:
        raise NewtonDivergence(st.failed_at, st.worst_residual)
    states = out["path"][:, 0, :]
    if chart is not None and chart.p_bounded:
        inside = chart.contains_p(states[:, H.n:])
        if not inside.all():
            j = int(np.argmin(inside))
            raise LeftChart(t0 + j * out["h"], states[j, H.n:].tolist())
    times = t0 + out["h"] * np.arange(steps + 1)
    return Trajectory(times, states, out["h"], H.n)


@dataclass
class Monodromy:
    matrix: np.ndarray

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))

    @property
    def multipliers(self) -> np.ndarray:
        return np.linalg.eigvals(self.matrix)

    def fixed_point_det(self) -> float:
        return float(np.linalg.det(self.matrix - np.eye(len(self.matrix))))


def monodromy(H, orbit: Trajectory) -> Monodromy:
    """Linearized period map along ``orbit`` from its variational equations."""
    out = integrate(H, orbit.states[0], orbit.steps, t0=orbit.times[0], t_end=orbit.times[-1], monodromy=True)
    if out["stats"].failed_at is not None:
        raise NewtonDivergence(out["stats"].failed_at, out["stats"].worst_residual)
    return Monodromy(out["M"][0])


def is_nondegenerate(m: Monodromy, tol: float = 1e-8) -> bool:
    return abs(m.fixed_point_det()) > tol


def symplectic_defect(M) -> float:
    """max |M^T J M - J| (zero for a symplectic matrix)."""
    M = np.asarray(M)
    J = _jmat(M.shape[-1] // 2)
    return float(np.abs(np.swapaxes(M, -1, -2) @ J @ M - J).max())
