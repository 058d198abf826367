"""One-variable smooth profiles with exact first and second derivatives."""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from ..errors import BadProfileParams

# Inside (0, 1) the cutoff is evaluated on [_EDGE, 1 - _EDGE]; beyond that
# every derivative is below 1e-200 and the value is 0 or 1 in double precision.
_EDGE = 2e-3

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(96)


def _mu_parts(x):
    x = np.asarray(x, dtype=float)
    xc = np.clip(x, _EDGE, 1.0 - _EDGE)
    e = 1.0 / (1.0 - xc) - 1.0 / xc
    s = expit(-e)
    one_minus_s = expit(e)
    ds = -s * one_minus_s
    d2s = -ds * (1.0 - 2.0 * s)
    e1 = 1.0 / (1.0 - xc) ** 2 + 1.0 / xc**2
    e2 = 2.0 / (1.0 - xc) ** 3 - 2.0 / xc**3
    inside = (x > 0.0) & (x < 1.0)
    v = np.where(x <= 0.0, 1.0, np.where(x >= 1.0, 0.0, s))
    d1 = np.where(inside, ds * e1, 0.0)
    d2 = np.where(inside, d2s * e1**2 + ds * e2, 0.0)
    return v, d1, d2


def mu_value(x):
    return _mu_parts(x)[0]


def mu_d1(x):
    return _mu_parts(x)[1]


def mu_d2(x):
    return _mu_parts(x)[2]


def phi(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(x > 0.0, np.exp(-1.0 / np.where(x > 0.0, x, 1.0)), 0.0)


def mu_tail_integral(x):
    """P(x) = integral over [0, x] of (1 - mu); equals x - 1/2 for x >= 1."""
    x = np.asarray(x, dtype=float)
    xc = np.clip(x, 0.0, 1.0)
    nodes = 0.5 * xc[..., None] * (_GL_NODES + 1.0)
    vals = 1.0 - mu_value(nodes)
    inner = 0.5 * xc * np.sum(_GL_WEIGHTS * vals, axis=-1)
    return np.where(x <= 0.0, 0.0, np.where(x >= 1.0, x - 0.5, inner))


class SmoothProfile:
    """A function R -> R with analytic first and second derivatives (vectorized)."""

    kind = "abstract"

    def value(self, x):
        raise NotImplementedError

    def d1(self, x):
        raise NotImplementedError

    def d2(self, x):
        raise NotImplementedError

    def parts(self, x):
        """(value, first derivative, second derivative) in one call."""
        return self.value(x), self.d1(x), self.d2(x)

    def d12(self, x):
        """(first derivative, second derivative) without the value."""
        _, d1, d2 = self.parts(x)
        return d1, d2

    def __call__(self, x):
        return self.value(x)

    def params(self) -> dict:
        return {}

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params()}

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"


class Mu(SmoothProfile):
    """Smooth monotone cutoff: 1 on (-inf, 0], 0 on [1, inf), mu(x) + mu(1 - x) = 1."""

    kind = "mu"

    def value(self, x):
        return mu_value(x)

    def d1(self, x):
        return mu_d1(x)

    def d2(self, x):
        return mu_d2(x)

    def parts(self, x):
        return _mu_parts(x)


class GProfile(SmoothProfile):
    """g_{m,S,eps}(x) = (S - m) mu(|x|/eps) + m: a bump of height S over the floor m."""

    kind = "g"

    def __init__(self, m: float, S: float, eps: float):
        if not m < S:
            raise BadProfileParams(f"need m < S, got m={m}, S={S}")
        if not eps > 0:
            raise BadProfileParams(f"need eps > 0, got {eps}")
        self.m, self.S, self.eps = float(m), float(S), float(eps)

    def value(self, x):
        return (self.S - self.m) * mu_value(np.abs(x) / self.eps) + self.m

    def d1(self, x):
        x = np.asarray(x, dtype=float)
        return (self.S - self.m) * mu_d1(np.abs(x) / self.eps) * np.sign(x) / self.eps

    def d2(self, x):
        return (self.S - self.m) * mu_d2(np.abs(x) / self.eps) / self.eps**2

    def parts(self, x):
        x = np.asarray(x, dtype=float)
        v, d1, d2 = _mu_parts(np.abs(x) / self.eps)
        h = self.S - self.m
        return h * v + self.m, h * d1 * np.sign(x) / self.eps, h * d2 / self.eps**2

    def params(self):
        return {"m": self.m, "S": self.S, "eps": self.eps}


class FProfile(SmoothProfile):
    """f_{m,S,eps} = -g_{-S,-m,eps}: a well of depth m under the ceiling S."""

    kind = "f"

    def __init__(self, m: float, S: float, eps: float):
        if not m < S:
            raise BadProfileParams(f"need m < S, got m={m}, S={S}")
        if not eps > 0:
            raise BadProfileParams(f"need eps > 0, got {eps}")
        self.m, self.S, self.eps = float(m), float(S), float(eps)
        self._g = GProfile(-self.S, -self.m, self.eps)

    def value(self, x):
        return -self._g.value(x)

    def d1(self, x):
        return -self._g.d1(x)

    def d2(self, x):
        return -self._g.d2(x)

    def parts(self, x):
        v, d1, d2 = self._g.parts(x)
        return -v, -d1, -d2

    def params(self):
        return {"m": self.m, "S": self.S, "eps": self.eps}


class NuProfile(SmoothProfile):
    """nu^k(x) = mu(|x| - k): 1 on |x| <= k, 0 on |x| >= k + 1."""

    kind = "nu"

    def __init__(self, k: int):
        if int(k) < 1:
            raise BadProfileParams("k must be a positive integer")
        self.k = int(k)

    def value(self, x):
        return mu_value(np.abs(x) - self.k)

    def d1(self, x):
        x = np.asarray(x, dtype=float)
        return mu_d1(np.abs(x) - self.k) * np.sign(x)

    def d2(self, x):
        return mu_d2(np.abs(x) - self.k)

    def parts(self, x):
        x = np.asarray(x, dtype=float)
        v, d1, d2 = _mu_parts(np.abs(x) - self.k)
        return v, d1 * np.sign(x), d2

    def params(self):
        return {"k": self.k}


class ShiftedProfile(SmoothProfile):
    """x -> scale * base(x - shift) + offset."""

    kind = "shifted"

    def __init__(self, base: SmoothProfile, shift: float = 0.0, scale: float = 1.0, offset: float = 0.0):
        self.base = base
        self.shift, self.scale, self.offset = float(shift), float(scale), float(offset)

    def value(self, x):
        return self.scale * self.base.value(np.asarray(x) - self.shift) + self.offset

    def d1(self, x):
        return self.scale * self.base.d1(np.asarray(x) - self.shift)

    def d2(self, x):
        return self.scale * self.base.d2(np.asarray(x) - self.shift)

    def parts(self, x):
        v, d1, d2 = self.base.parts(np.asarray(x) - self.shift)
        return self.scale * v + self.offset, self.scale * d1, self.scale * d2

    def params(self):
        return {"base": self.base.to_dict(), "shift": self.shift, "scale": self.scale, "offset": self.offset}


class PlateauProfile(SmoothProfile):
    """x -> h(dist(x, [lo, hi])) for an even profile h that is flat at 0.

    Widening a well into a plateau; used by the monotone homotopy.
    """

    kind = "plateau"

    def __init__(self, base: SmoothProfile, lo: float, hi: float):
        if hi < lo:
            raise BadProfileParams("plateau needs lo <= hi")
        self.base, self.lo, self.hi = base, float(lo), float(hi)

    def _dist(self, x):
        x = np.asarray(x, dtype=float)
        d = np.where(x < self.lo, self.lo - x, np.where(x > self.hi, x - self.hi, 0.0))
        sgn = np.where(x < self.lo, -1.0, np.where(x > self.hi, 1.0, 0.0))
        return d, sgn

    def value(self, x):
        d, _ = self._dist(x)
        return self.base.value(d)

    def d1(self, x):
        d, sgn = self._dist(x)
        return self.base.d1(d) * sgn

    def d2(self, x):
        d, sgn = self._dist(x)
        return self.base.d2(d) * sgn**2

    def parts(self, x):
        d, sgn = self._dist(x)
        v, d1, d2 = self.base.parts(d)
        return v, d1 * sgn, d2 * sgn**2

    def params(self):
        return {"base": self.base.to_dict(), "lo": self.lo, "hi": self.hi}


class CutoffRamp(SmoothProfile):
    """Compactly supported profile with a controlled steepest descent.

    Rises from 0 on (-inf, -plateau - rise] to ``height`` on [-plateau, 0],
    then descends to 0 at ``fall_end``.  The descent slope ramps from 0 to
    -height/(fall_end - eta) over [0, eta], stays there, and ramps back to 0
    over [fall_end - eta, fall_end], so the minimum slope is exactly
    -height/(fall_end - eta).
    """

    kind = "cutoff_ramp"

    def __init__(self, height: float, fall_end: float, eta: float, rise: float, plateau: float = 0.0):
        if not height > 0:
            raise BadProfileParams("ramp height must be positive")
        if not (eta > 0 and fall_end >= 2 * eta):
            raise BadProfileParams("need 0 < eta <= fall_end / 2")
        if not rise > 0 or plateau < 0:
            raise BadProfileParams("need rise > 0 and plateau >= 0")
        self.height, self.fall_end, self.eta = float(height), float(fall_end), float(eta)
        self.rise, self.plateau = float(rise), float(plateau)

    @property
    def steepest_slope(self) -> float:
        return -self.height / (self.fall_end - self.eta)

    def _split(self, x):
        x = np.asarray(x, dtype=float)
        u = (x + self.plateau + self.rise) / self.rise
        v1 = x / self.eta
        v2 = (x - (self.fall_end - self.eta)) / self.eta
        return x, u, v1, v2

    def value(self, x):
        x, u, v1, v2 = self._split(x)
        left = self.height * (1.0 - mu_value(u))
        sigma = -self.steepest_slope
        right = self.height - sigma * self.eta * (mu_tail_integral(v1) - mu_tail_integral(v2))
        return np.where(x <= 0.0, left, np.maximum(right, 0.0) * (x < self.fall_end))

    def d1(self, x):
        x, u, v1, v2 = self._split(x)
        left = -self.height * mu_d1(u) / self.rise
        sigma = -self.steepest_slope
        right = -sigma * (mu_value(v2) - mu_value(v1))
        return np.where(x <= 0.0, left, right)

    def d2(self, x):
        x, u, v1, v2 = self._split(x)
        left = -self.height * mu_d2(u) / self.rise**2
        sigma = -self.steepest_slope
        right = -sigma * (mu_d1(v2) - mu_d1(v1)) / self.eta
        return np.where(x <= 0.0, left, right)

    def d12(self, x):
        x, u, v1, v2 = self._split(x)
        _, mu1u, mu2u = _mu_parts(u)
        m1, mu1v1, _ = _mu_parts(v1)
        m2, mu1v2, _ = _mu_parts(v2)
        sigma = -self.steepest_slope
        first = np.where(x <= 0.0, -self.height * mu1u / self.rise, -sigma * (m2 - m1))
        second = np.where(x <= 0.0, -self.height * mu2u / self.rise**2, -sigma * (mu1v2 - mu1v1) / self.eta)
        return first, second

    def params(self):
        return {
            "height": self.height,
            "fall_end": self.fall_end,
            "eta": self.eta,
            "rise": self.rise,
            "plateau": self.plateau,
        }


class PeriodicDistanceProfile(SmoothProfile):
    """s -> base(dist(s, Z) * scale); smooth when base is flat near 0 and near scale/2."""

    kind = "periodic_distance"

    def __init__(self, base: SmoothProfile, scale: float = 1.0):
        self.base, self.scale = base, float(scale)

    def _dist(self, s):
        s = np.asarray(s, dtype=float)
        frac = s - np.rint(s)
        return np.abs(frac) * self.scale, np.sign(frac)

    def value(self, s):
        d, _ = self._dist(s)
        return self.base.value(d)

    def d1(self, s):
        d, sgn = self._dist(s)
        return self.base.d1(d) * sgn * self.scale

    def d2(self, s):
        d, _ = self._dist(s)
        return self.base.d2(d) * self.scale**2

    def parts(self, s):
        d, sgn = self._dist(s)
        v, d1, d2 = self.base.parts(d)
        return v, d1 * sgn * self.scale, d2 * self.scale**2

    def params(self):
        return {"base": self.base.to_dict(), "scale": self.scale}


_PROFILE_KINDS = {
    "mu": lambda d: Mu(),
    "g": lambda d: GProfile(d["m"], d["S"], d["eps"]),
    "f": lambda d: FProfile(d["m"], d["S"], d["eps"]),
    "nu": lambda d: NuProfile(d["k"]),
    "shifted": lambda d: ShiftedProfile(
        profile_from_dict(d["base"]), d.get("shift", 0.0), d.get("scale", 1.0), d.get("offset", 0.0)
    ),
    "plateau": lambda d: PlateauProfile(profile_from_dict(d["base"]), d["lo"], d["hi"]),
    "cutoff_ramp": lambda d: CutoffRamp(d["height"], d["fall_end"], d["eta"], d["rise"], d.get("plateau", 0.0)),
    "periodic_distance": lambda d: PeriodicDistanceProfile(profile_from_dict(d["base"]), d.get("scale", 1.0)),
}


def profile_from_dict(d: dict) -> SmoothProfile:
    try:
        build = _PROFILE_KINDS[d["kind"]]
    except KeyError:
        raise BadProfileParams(f"unknown profile kind {d.get('kind')!r}") from None
    return build(d)


def mu() -> Mu:
    return Mu()


def g_profile(m, S, eps) -> GProfile:
    return GProfile(m, S, eps)


def f_profile(m, S, eps) -> FProfile:
    return FProfile(m, S, eps)
