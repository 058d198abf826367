"""Explicit Hamiltonian constructions: the squeezing pair H0 >= H >= H1 with its
window constants, the monotone homotopy between them, the G^k cut-off on the
covering strip, and the two no-orbit families."""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import brentq

from ..errors import BadParams, NoEpsilon, NoRoot, NoValidBeta, ThresholdNotMet
from ..geometry import Chart
from .hamiltonian import (
    Hamiltonian,
    LinearFormHamiltonian,
    PresetHamiltonian,
    ProfileHamiltonian,
    RadialHamiltonian,
    ScaledHamiltonian,
    SumHamiltonian,
    gk_hamiltonian,
)
from .smooth import (
    CutoffRamp,
    FProfile,
    GProfile,
    PeriodicDistanceProfile,
    PlateauProfile,
    ShiftedProfile,
    SmoothProfile,
)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
BAND_POINTS = 512


def band_extrema(H: Hamiltonian, p_lo: float, p_hi: float, n_p: int = BAND_POINTS, n_q: int = 64, n_t: int | None = None):
    """Grid (min, max) of H over S^1 x T^1 x [p_lo, p_hi] (first (q, p) pair; others at 0)."""
    if n_t is None:
        n_t = 16 if H.time_dependent else 1
    ps = np.linspace(p_lo, p_hi, n_p)
    qs = np.arange(n_q) / n_q
    qq, pp = np.meshgrid(qs, ps, indexing="ij")
    x = np.zeros((qq.size, 2 * H.n))
    x[:, 0] = qq.ravel()
    x[:, H.n] = pp.ravel()
    lo, hi = np.inf, -np.inf
    for t in np.arange(n_t) / n_t:
        v = H.value(t, x)
        lo, hi = min(lo, float(v.min())), max(hi, float(v.max()))
    return lo, hi


def chart_extrema(H: Hamiltonian, chart: Chart, p_range=None, n_p: int = 2048):
    if p_range is None:
        lo, hi = chart.p_bounds
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise BadParams("unbounded chart: pass p_range for the sup/inf over M")
        p_range = (lo, hi)
    return band_extrema(H, p_range[0], p_range[1], n_p=n_p)


@dataclass
class WindowConstants:
    r: int
    R: float
    tau: float
    eps1: float
    m_X: float
    S_Y: float
    m0: float
    S0: float
    m1: float
    S1: float
    a: float
    b: float
    c: float
    C: float
    c_H: float
    c_H_prime: float
    s0: float
    s1: float
    S_H: float
    m_H: float

    def h0(self) -> FProfile:
        return FProfile(self.m0, self.S0, self.eps1)

    def h1(self) -> GProfile:
        return GProfile(self.m1, self.S1, self.eps1)

    @property
    def half_gap(self) -> float:
        """l = (R - eps1) / 2, the plateau growth rate of the homotopy."""
        return (self.R - self.eps1) / 2.0

    def invariants(self) -> dict[str, bool]:
        r, R, e = self.r, self.R, self.eps1
        h1 = self.h1()
        return {
            "gap_exceeds_C": self.m_X - self.S_Y > self.C,
            "b_window": self.C + self.m0 < self.b < self.S1,
            "a_window": self.m1 - 1 < self.a < self.m1,
            "c_window": self.C + self.S0 < self.c < self.C + self.S0 + 1,
            "easy_1": self.S1 <= r * (R - e) + self.S0,
            "easy_2": self.m1 < self.m0,
            "easy_3": r * e + self.m1 <= self.C + self.m0,
            "easy_4": self.S1 <= self.S0,
            "easy_5": self.S0 <= 3 * self.S_H,
            "easy_6": 3 * self.m_H <= self.m1,
            "symmetry": math.isclose(self.S1 - self.m1, self.S0 - self.m0, rel_tol=0, abs_tol=1e-12),
            "roots_ordered": 0 < self.s0 < self.s1 < e,
            "root_residuals": max(abs(float(h1.d1(self.s0)) + r), abs(float(h1.d1(self.s1)) + r)) < 1e-10,
        }

    def to_dict(self) -> dict:
        return asdict(self)

    def closed_form_actions(self) -> dict[str, float]:
        """Tangent-line y-intercepts, i.e. the actions of the circle families.

        Keys name the Hamiltonian and the root: ``H0_x1`` is the H0 family at
        p = R - s1, ``H1_x0`` the H1 family at p = s0.
        """
        h0, h1, r, R = self.h0(), self.h1(), self.r, self.R
        return {
            "H0_x0": float(h0.value(-self.s0)) + r * (R - self.s0),
            "H0_x1": float(h0.value(-self.s1)) + r * (R - self.s1),
            "H1_x0": float(h1.value(self.s0)) + r * self.s0,
            "H1_x1": float(h1.value(self.s1)) + r * self.s1,
        }

    def expected_windows(self) -> dict[str, tuple[float, float]]:
        ab, bc = (self.a, self.b), (self.b, self.c)
        return {"H0_x0": ab, "H0_x1": bc, "H1_x0": bc, "H1_x1": ab}


def solve_slope_equation(h: SmoothProfile, r: float, eps: float | None = None, n_sub: int = 4096):
    """Both roots 0 < s0 < s1 < eps of |h'(x)| = r for a g- or f-type profile.

    The slope |h'| on (0, eps) is unimodal with its peak at eps/2, so each half
    holds exactly one root when the peak exceeds r.
    """
    if eps is None:
        eps = getattr(h, "eps", None)
        if eps is None:
            raise BadParams("profile has no eps; pass it explicitly")
    slope = lambda x: abs(float(h.d1(x))) - r  # noqa: E731
    xs = np.linspace(0.0, eps, n_sub + 1)
    vals = np.abs(h.d1(xs)) - r
    if vals.max() <= 0.0:
        raise NoRoot(f"slope never reaches {r} (max |h'| = {vals.max() + r:.6g})")
    peak = 0.5 * eps
    if slope(peak) <= 0.0:
        peak = float(xs[int(np.argmax(vals))])
    s0 = brentq(slope, 0.0, peak, xtol=1e-15, rtol=1e-15, maxiter=200)
    s1 = brentq(slope, peak, eps, xtol=1e-15, rtol=1e-15, maxiter=200)
    return float(s0), float(s1)


def _pick_in_window(lo: float, hi: float, avoid, seed: int = 0, min_dist: float = 1e-6) -> float:
    avoid = np.asarray(sorted(float(v) for v in avoid), dtype=float)
    width = hi - lo
    for j in range(10_000):
        frac = (0.5 + (j + seed) * GOLDEN) % 1.0 if (j or seed) else 0.5
        v = lo + width * (0.02 + 0.96 * frac)
        if avoid.size == 0 or np.abs(avoid - v).min() >= min_dist:
            return float(v)
    raise BadParams(f"no admissible value in ({lo}, {hi}) away from the action spectrum")


def select_eps1(H: Hamiltonian, R: float, C: float, tau: float, n_p: int = BAND_POINTS):
    """Largest eps = (tau/2) 2^-j whose widened bands keep inf_X - sup_Y above C."""
    for j in range(40):
        eps = 0.5 * tau * 2.0**-j
        m_X, _ = band_extrema(H, -eps, eps, n_p=n_p)
        _, S_Y = band_extrema(H, R - eps, R + eps, n_p=n_p)
        if m_X - S_Y > C:
            return eps, m_X, S_Y
    raise NoEpsilon(f"no eps1 in (0, {tau}) keeps the band gap above {C}")


def build_squeezing_pair(
    H: Hamiltonian,
    r: int,
    R: float,
    chart: Chart,
    tau: float | None = None,
    spectrum=(),
    seed: int = 0,
    p_range=None,
):
    """Squeezing pair H0 >= H >= H1 and their window constants.

    ``spectrum`` is a collection of known action values of H in the class;
    a, b, c are kept at least 1e-6 away from it and from the H0/H1 spectra.
    ``p_range`` bounds the region used for sup H / inf H (defaults to the chart).
    """
    if r < 1 or not R > 0:
        raise BadParams("need r >= 1 and R > 0")
    if H.n != 1:
        raise BadParams("the squeezing pair is built on two-dimensional charts")
    C = r * R
    if tau is None:
        tau = R / 4.0
    x_inf, _ = band_extrema(H, 0.0, 0.0, n_p=1, n_q=256)
    _, y_sup = band_extrema(H, R, R, n_p=1, n_q=256)
    if not x_inf - y_sup > C:
        raise ThresholdNotMet(f"inf_X H - sup_Y H = {x_inf - y_sup:.6g} does not exceed C = {C:.6g}")
    eps1, m_X, S_Y = select_eps1(H, R, C, tau)
    inf_M, sup_M = chart_extrema(H, chart, p_range)
    S_H = max(abs(inf_M), abs(sup_M))
    m_H = -S_H
    m0 = S_Y
    S0 = max(sup_M, -inf_M + S_Y + m_X)
    m1 = min(inf_M, -sup_M + S_Y + m_X)
    S1 = m_X
    h1 = GProfile(m1, S1, eps1)
    s0, s1 = solve_slope_equation(h1, r, eps1)
    h0 = FProfile(m0, S0, eps1)
    pair_spec = [
        float(h0.value(-s0)) + r * (R - s0),
        float(h0.value(-s1)) + r * (R - s1),
        float(h1.value(s0)) + r * s0,
        float(h1.value(s1)) + r * s1,
    ]
    avoid = list(spectrum) + pair_spec
    a = _pick_in_window(m1 - 1, m1, avoid, seed)
    b = _pick_in_window(C + m0, S1, avoid, seed)
    c = _pick_in_window(C + S0, C + S0 + 1, avoid, seed)
    wc = WindowConstants(
        r=int(r), R=float(R), tau=float(tau), eps1=eps1, m_X=m_X, S_Y=S_Y,
        m0=m0, S0=S0, m1=m1, S1=S1, a=a, b=b, c=c, C=C,
        c_H=-3 * S_H + 3 * m_H - 1, c_H_prime=-3 * m_H + C + 3 * S_H + 1,
        s0=s0, s1=s1, S_H=S_H, m_H=m_H,
    )
    H0 = ProfileHamiltonian(ShiftedProfile(h0, shift=R))
    H1 = ProfileHamiltonian(h1)
    return H0, H1, wc


def monotone_homotopy(H0: Hamiltonian, H1: Hamiltonian, wc: WindowConstants, s: float) -> Hamiltonian:
    """Member s in [0, 1] of the nonincreasing homotopy from H0 (s=0) to H1 (s=1).

    First half: the well of H0 widens into a plateau [R - 2 sigma l, R] at
    level m0 (sigma = 2s).  Second half: linear interpolation to H1.
    """
    if not 0.0 <= s <= 1.0:
        raise BadParams("homotopy parameter must lie in [0, 1]")
    l = wc.half_gap
    if s <= 0.5:
        sigma = 2.0 * s
        if sigma == 0.0:
            return H0
        return ProfileHamiltonian(PlateauProfile(wc.h0(), wc.R - 2.0 * sigma * l, wc.R))
    sigma = 2.0 * s - 1.0
    half = ProfileHamiltonian(PlateauProfile(wc.h0(), wc.R - 2.0 * l, wc.R))
    if sigma == 1.0:
        return H1
    return SumHamiltonian([ScaledHamiltonian(1.0 - sigma, half), ScaledHamiltonian(sigma, H1)])


def homotopy_levels(wc: WindowConstants, s: float) -> list[tuple[float, float]]:
    """Closed-form (p-level, action) of the two circle families of member s.

    Entry 0 follows the family that starts at p = R - s0 under H0 and ends at
    p = s1 under H1; entry 1 runs from R - s1 to s0.
    """
    r, l = wc.r, wc.half_gap
    h0, h1 = wc.h0(), wc.h1()
    if s <= 0.5:
        sigma = 2.0 * s
        out = []
        for sj in (wc.s0, wc.s1):
            p = wc.R - 2.0 * sigma * l - sj
            out.append((p, float(h0.value(sj)) + r * p))
        return out
    sigma = 2.0 * s - 1.0
    half = PlateauProfile(h0, wc.R - 2.0 * l, wc.R)
    return [
        (p, (1 - sigma) * float(half.value(p)) + sigma * float(h1.value(p)) + r * p)
        for p in (wc.s1, wc.s0)
    ]


def build_Gk(torus_h: Hamiltonian, k: int) -> Hamiltonian:
    return gk_hamiltonian(torus_h, k)


def counterexample_annulus(C: float, delta: float, r: int, tau: float) -> Hamiltonian:
    """H(q, p) = f(p) with f supported in (-tau, R), f(0) = C - delta and f' > -r everywhere.

    R = C / r.  The descent from C - delta to 0 is spread over almost all of
    [0, R], keeping the steepest slope at -(C - delta)/(R - delta/(2r)) > -r.
    """
    if not (0.0 < delta < C):
        raise BadParams(f"need 0 < delta < C, got delta={delta}, C={C}")
    if int(r) < 1 or not tau > 0:
        raise BadParams("need r >= 1 and tau > 0")
    r = int(r)
    R = C / r
    eta = delta / (4.0 * r)
    prof = CutoffRamp(height=C - delta, fall_end=R - eta, eta=eta, rise=tau / 2.0)
    h = PresetHamiltonian(
        ProfileHamiltonian(prof),
        {"kind": "counterexample_annulus", "C": C, "delta": delta, "r": r, "tau": tau},
    )
    h.certificate = slope_certificate(prof, r)
    return h


def slope_certificate(prof: CutoffRamp, r: int) -> dict:
    """Analytic no-orbit certificate: q' = f'(p) never equals -r."""
    steepest = prof.steepest_slope
    return {
        "type": "analytic_slope",
        "steepest_slope": steepest,
        "target_slope": -float(r),
        "holds": bool(steepest > -r),
    }


def _dist_to_int(x: float) -> float:
    return abs(x - round(x))


def choose_beta(w, alpha_q, search: int = 3):
    """Smallest integer beta with beta . w not in Z and alpha_q not a multiple of beta."""
    w = np.asarray(w, dtype=float)
    alpha_q = np.asarray(alpha_q, dtype=float)
    n = w.size
    cands = [np.array(b) for b in itertools.product(range(-search, search + 1), repeat=n) if any(b)]
    cands.sort(key=lambda b: (int(b @ b), tuple(-b)))
    for b in cands:
        if _dist_to_int(float(b @ w)) < 1e-12:
            continue
        if np.linalg.matrix_rank(np.vstack([alpha_q, b]), tol=1e-12) < 2:
            continue
        return b.astype(int)
    raise NoValidBeta(f"no beta in [-{search}, {search}]^{n} for w={w.tolist()}, alpha={alpha_q.tolist()}")


def counterexample_lagrangian(n: int, w, k: int, alpha=None, beta=None) -> Hamiltonian:
    """H_k(q, p) = -k mu(d(p, Gamma) / eps) on T^{2n}, Gamma = {(p - w) . beta in Z}, eps = d(0, Gamma)/2.

    inf over {p = 0} minus sup over {p = w} is k, and every nonconstant orbit
    moves along beta, so no orbit lies in a class alpha not parallel to beta.
    """
    n = int(n)
    if n < 2:
        raise BadParams("the Lagrangian counterexample needs n >= 2")
    w = np.asarray(w, dtype=float)
    if w.size != n:
        raise BadParams("w must have n entries")
    if alpha is None:
        alpha = [0, 1] + [0] * (2 * n - 2)
    alpha = [int(a) for a in alpha]
    if len(alpha) != 2 * n or any(alpha[n:]):
        raise BadParams("alpha must be a q-class (a_1..a_n, 0..0) of length 2n")
    alpha_q = np.asarray(alpha[:n], dtype=float)
    if beta is None:
        beta = choose_beta(w, alpha_q)
    beta = np.asarray(beta, dtype=int)
    if _dist_to_int(float(beta @ w)) < 1e-12 or np.linalg.matrix_rank(np.vstack([alpha_q, beta]), tol=1e-12) < 2:
        raise NoValidBeta(f"beta={beta.tolist()} violates beta.w != 0 or alpha not parallel to beta")
    norm = float(np.linalg.norm(beta))
    d0 = _dist_to_int(float(-(beta @ w))) / norm
    eps = d0 / 2.0
    prof = PeriodicDistanceProfile(FProfile(-float(k), 0.0, eps), scale=1.0 / norm)
    inner = LinearFormHamiltonian(prof, beta.astype(float), offset=float(beta @ w))
    h = PresetHamiltonian(
        inner,
        {
            "kind": "counterexample_lagrangian",
            "n": n,
            "w": w.tolist(),
            "k": k,
            "alpha": alpha,
            "beta": beta.tolist(),
        },
    )
    h.certificate = {
        "type": "analytic_direction",
        "beta": beta.tolist(),
        "alpha": alpha,
        "alpha_parallel_to_beta": False,
        "d0": d0,
        "holds": True,
    }
    h.gamma_distance = d0
    return h


def ball_hamiltonian(height: float, radius: float, n: int = 2) -> Hamiltonian:
    """H(q, p) = g_{0,height,radius}(|p|) on T^{2n}: equal to ``height`` near p = 0, zero for |p| >= radius."""
    if not 0.0 < radius < 0.5:
        raise BadParams(f"need 0 < radius < 1/2, got {radius}")
    if not height > 0:
        raise BadParams("height must be positive")
    inner = RadialHamiltonian(GProfile(0.0, float(height), float(radius)), int(n))
    return PresetHamiltonian(inner, {"kind": "ball", "height": float(height), "radius": float(radius), "n": int(n)})


def ball_hypotheses(H: Hamiltonian, radius: float, alpha_q, n_dir: int = 256) -> dict:
    """The two inequalities under which an orbit in alpha must exist, for X = {p = 0}, Y = {|p| = radius}.

    inf_X H - sup_Y H > |alpha| radius and sup H < |alpha| radius + inf_X H.
    Extrema over X and Y are sampled (H does not depend on q or t here); sup H over a p grid.
    """
    n = H.n
    norm = float(np.linalg.norm(alpha_q))
    theta = np.linspace(0.0, 2.0 * np.pi, n_dir, endpoint=False)
    dirs = np.zeros((n_dir, n))
    dirs[:, 0], dirs[:, 1 % n] = np.cos(theta), np.sin(theta)
    zeros = np.zeros((n_dir, n))
    inf_X = float(H.value(0.0, np.hstack([zeros, zeros])).min())
    sup_Y = float(H.value(0.0, np.hstack([zeros, radius * dirs])).max())
    grid = np.linspace(-0.5, 0.5, 65)
    P = np.stack(np.meshgrid(*([grid] * n), indexing="ij"), axis=-1).reshape(-1, n)
    sup_M = float(H.value(0.0, np.hstack([np.zeros_like(P), P])).max())
    bound = norm * radius
    return {
        "alpha_norm": norm,
        "bound": bound,
        "inf_X": inf_X,
        "sup_Y": sup_Y,
        "sup_M": sup_M,
        "gap_exceeds_bound": inf_X - sup_Y > bound,
        "sup_below_bound": sup_M < bound + inf_X,
    }
