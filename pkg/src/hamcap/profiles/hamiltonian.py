"""Hamiltonians on charted phase space, with analytic gradient and Hessian.

All evaluation is batched: states are arrays of shape (B, 2n) laid out as
(q_1..q_n, p_1..p_n), and time is a scalar.  ``grad`` returns (B, 2n) and
``hess`` returns (B, 2n, 2n) in the same coordinate order.
"""

from __future__ import annotations

import numpy as np

from ..errors import BadParams
from .smooth import NuProfile, SmoothProfile, profile_from_dict

TWO_PI = 2.0 * np.pi


def _states(x, n):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[-1] != 2 * n:
        raise ValueError(f"expected states with {2 * n} coordinates, got {x.shape[-1]}")
    return x


class Hamiltonian:
    kind = "abstract"
    time_dependent = False

    def __init__(self, n: int = 1):
        self.n = int(n)

    def value(self, t, x):
        raise NotImplementedError

    def grad(self, t, x):
        raise NotImplementedError

    def hess(self, t, x):
        raise NotImplementedError

    def jet(self, t, x):
        """(value, grad, hess) at once; composites override this to share work."""
        return self.value(t, x), self.grad(t, x), self.hess(t, x)

    def derivs(self, t, x):
        """(grad, hess) only; lets profile-based terms skip their (possibly costly) values."""
        _, g, h = self.jet(t, x)
        return g, h

    def __call__(self, t, x):
        return self.value(t, x)

    def params(self) -> dict:
        return {}

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params()}

    def __add__(self, other):
        return SumHamiltonian([self, other])

    def __rmul__(self, c):
        return ScaledHamiltonian(float(c), self)

    def support(self) -> dict:
        """Coarse description of where H may be non-constant."""
        return {"p_min": -np.inf, "p_max": np.inf}


class ConstantHamiltonian(Hamiltonian):
    kind = "constant"

    def __init__(self, c: float = 0.0, n: int = 1):
        super().__init__(n)
        self.c = float(c)

    def value(self, t, x):
        x = _states(x, self.n)
        return np.full(x.shape[0], self.c)

    def grad(self, t, x):
        x = _states(x, self.n)
        return np.zeros_like(x)

    def hess(self, t, x):
        x = _states(x, self.n)
        return np.zeros((x.shape[0], 2 * self.n, 2 * self.n))

    def params(self):
        return {"c": self.c, "n": self.n}

    def support(self):
        return {"p_min": 0.0, "p_max": 0.0}


class ProfileHamiltonian(Hamiltonian):
    """H(q, p) = profile(p_coord)."""

    kind = "profile"

    def __init__(self, profile: SmoothProfile, coord: int = 0, n: int = 1):
        super().__init__(n)
        self.profile = profile
        self.coord = int(coord)

    def value(self, t, x):
        x = _states(x, self.n)
        return self.profile.value(x[:, self.n + self.coord])

    def grad(self, t, x):
        x = _states(x, self.n)
        g = np.zeros_like(x)
        g[:, self.n + self.coord] = self.profile.d1(x[:, self.n + self.coord])
        return g

    def hess(self, t, x):
        x = _states(x, self.n)
        h = np.zeros((x.shape[0], 2 * self.n, 2 * self.n))
        j = self.n + self.coord
        h[:, j, j] = self.profile.d2(x[:, j])
        return h

    def jet(self, t, x):
        x = _states(x, self.n)
        j = self.n + self.coord
        v, d1, d2 = self.profile.parts(x[:, j])
        g = np.zeros_like(x)
        g[:, j] = d1
        h = np.zeros((x.shape[0], 2 * self.n, 2 * self.n))
        h[:, j, j] = d2
        return v, g, h

    def derivs(self, t, x):
        x = _states(x, self.n)
        j = self.n + self.coord
        p = x[:, j]
        g = np.zeros_like(x)
        h = np.zeros((x.shape[0], 2 * self.n, 2 * self.n))
        g[:, j], h[:, j, j] = self.profile.d12(p)
        return g, h

    def params(self):
        return {"profile": self.profile.to_dict(), "coord": self.coord, "n": self.n}


class LinearFormHamiltonian(Hamiltonian):
    """H(q, p) = profile(beta . p - offset)."""

    kind = "linear_form"

    def __init__(self, profile: SmoothProfile, beta, offset: float = 0.0):
        beta = np.asarray(beta, dtype=float)
        super().__init__(beta.size)
        self.profile, self.beta, self.offset = profile, beta, float(offset)

    def _s(self, x):
        return x[:, self.n:] @ self.beta - self.offset

    def value(self, t, x):
        x = _states(x, self.n)
        return self.profile.value(self._s(x))

    def grad(self, t, x):
        x = _states(x, self.n)
        g = np.zeros_like(x)
        g[:, self.n:] = self.profile.d1(self._s(x))[:, None] * self.beta
        return g

    def hess(self, t, x):
        x = _states(x, self.n)
        h = np.zeros((x.shape[0], 2 * self.n, 2 * self.n))
        h[:, self.n:, self.n:] = self.profile.d2(self._s(x))[:, None, None] * np.outer(self.beta, self.beta)
        return h

    def jet(self, t, x):
        x = _states(x, self.n)
        v, d1, d2 = self.profile.parts(self._s(x))
        g = np.zeros_like(x)
        g[:, self.n:] = d1[:, None] * self.beta
        h = np.zeros((x.shape[0], 2 * self.n, 2 * self.n))
        h[:, self.n:, self.n:] = d2[:, None, None] * np.outer(self.beta, self.beta)
        return v, g, h

    def params(self):
        return {"profile": self.profile.to_dict(), "beta": self.beta.tolist(), "offset": self.offset}


class RadialHamiltonian(Hamiltonian):
    """H(q, p) = profile(|p|) on the product torus, |p| the distance from p to the lattice Z^n.

    Smooth when the profile is flat near 0 and vanishes beyond some radius below 1/2.
    """

    kind = "radial"

    def __init__(self, profile: SmoothProfile, n: int = 2):
        super().__init__(n)
        self.profile = profile

    def _polar(self, x):
        d = x[:, self.n:] - np.rint(x[:, self.n:])
        s = np.linalg.norm(d, axis=1)
        safe = np.where(s > 0.0, s, 1.0)
        return s, d / safe[:, None], safe

    def value(self, t, x):
        x = _states(x, self.n)
        return self.profile.value(self._polar(x)[0])

    def grad(self, t, x):
        return self.jet(t, x)[1]

    def hess(self, t, x):
        return self.jet(t, x)[2]

    def jet(self, t, x):
        x = _states(x, self.n)
        s, u, safe = self._polar(x)
        v, d1, d2 = self.profile.parts(s)
        d1 = np.where(s > 0.0, d1, 0.0)
        g = np.zeros_like(x)
        g[:, self.n:] = d1[:, None] * u
        uu = u[:, :, None] * u[:, None, :]
        h = np.zeros((x.shape[0], 2 * self.n, 2 * self.n))
        h[:, self.n:, self.n:] = d2[:, None, None] * uu + (d1 / safe)[:, None, None] * (np.eye(self.n) - uu)
        return v, g, h

    def params(self):
        return {"profile": self.profile.to_dict(), "n": self.n}


class TrigHamiltonian(Hamiltonian):
    """H = offset + sum_j a_j cos(2 pi (kq_j . q + kp_j . p + omega_j t + phase_j))."""

    kind = "trig"

    def __init__(self, terms, n: int = 1, offset: float = 0.0):
        super().__init__(n)
        self.offset = float(offset)
        self.terms = []
        for term in terms:
            kq = np.atleast_1d(np.asarray(term.get("kq", [0] * n), dtype=float))
            kp = np.atleast_1d(np.asarray(term.get("kp", [0] * n), dtype=float))
            if kq.size != n or kp.size != n:
                raise BadParams("trig term wave vectors must have length n")
            self.terms.append(
                {
                    "amp": float(term["amp"]),
                    "kq": kq,
                    "kp": kp,
                    "omega": float(term.get("omega", 0.0)),
                    "phase": float(term.get("phase", 0.0)),
                }
            )
        self.time_dependent = any(tm["omega"] != 0.0 for tm in self.terms)

    def _parts(self, t, x):
        for tm in self.terms:
            k = np.concatenate([tm["kq"], tm["kp"]])
            arg = TWO_PI * (x @ k + tm["omega"] * t + tm["phase"])
            yield tm["amp"], k, arg

    def value(self, t, x):
        x = _states(x, self.n)
        out = np.full(x.shape[0], self.offset)
        for a, _, arg in self._parts(t, x):
            out += a * np.cos(arg)
        return out

    def grad(self, t, x):
        x = _states(x, self.n)
        g = np.zeros_like(x)
        for a, k, arg in self._parts(t, x):
            g += (-a * TWO_PI * np.sin(arg))[:, None] * k
        return g

    def hess(self, t, x):
        x = _states(x, self.n)
        h = np.zeros((x.shape[0], 2 * self.n, 2 * self.n))
        for a, k, arg in self._parts(t, x):
            h += (-a * TWO_PI**2 * np.cos(arg))[:, None, None] * np.outer(k, k)
        return h

    def jet(self, t, x):
        x = _states(x, self.n)
        v = np.full(x.shape[0], self.offset)
        g = np.zeros_like(x)
        h = np.zeros((x.shape[0], 2 * self.n, 2 * self.n))
        for a, k, arg in self._parts(t, x):
            c, sn = np.cos(arg), np.sin(arg)
            v += a * c
            g += (-a * TWO_PI * sn)[:, None] * k
            h += (-a * TWO_PI**2 * c)[:, None, None] * np.outer(k, k)
        return v, g, h

    def params(self):
        terms = [
            {
                "amp": tm["amp"],
                "kq": tm["kq"].tolist(),
                "kp": tm["kp"].tolist(),
                "omega": tm["omega"],
                "phase": tm["phase"],
            }
            for tm in self.terms
        ]
        return {"terms": terms, "n": self.n, "offset": self.offset}


class SumHamiltonian(Hamiltonian):
    kind = "sum"

    def __init__(self, terms):
        terms = list(terms)
        if not terms:
            raise BadParams("sum needs at least one term")
        super().__init__(terms[0].n)
        if any(h.n != self.n for h in terms):
            raise BadParams("all summands must live on the same chart dimension")
        self.terms = terms
        self.time_dependent = any(h.time_dependent for h in terms)

    def value(self, t, x):
        return sum(h.value(t, x) for h in self.terms)

    def grad(self, t, x):
        return sum(h.grad(t, x) for h in self.terms)

    def hess(self, t, x):
        return sum(h.hess(t, x) for h in self.terms)

    def jet(self, t, x):
        jets = [h.jet(t, x) for h in self.terms]
        return tuple(sum(j[i] for j in jets) for i in range(3))

    def derivs(self, t, x):
        ds = [h.derivs(t, x) for h in self.terms]
        return sum(d[0] for d in ds), sum(d[1] for d in ds)

    def params(self):
        return {"terms": [h.to_dict() for h in self.terms]}


class ScaledHamiltonian(Hamiltonian):
    kind = "scaled"

    def __init__(self, c: float, inner: Hamiltonian):
        super().__init__(inner.n)
        self.c, self.inner = float(c), inner
        self.time_dependent = inner.time_dependent

    def value(self, t, x):
        return self.c * self.inner.value(t, x)

    def grad(self, t, x):
        return self.c * self.inner.grad(t, x)

    def hess(self, t, x):
        return self.c * self.inner.hess(t, x)

    def jet(self, t, x):
        v, g, h = self.inner.jet(t, x)
        return self.c * v, self.c * g, self.c * h

    def derivs(self, t, x):
        g, h = self.inner.derivs(t, x)
        return self.c * g, self.c * h

    def params(self):
        return {"c": self.c, "inner": self.inner.to_dict()}


class ProductHamiltonian(Hamiltonian):
    kind = "product"

    def __init__(self, a: Hamiltonian, b: Hamiltonian):
        if a.n != b.n:
            raise BadParams("factors must share the chart dimension")
        super().__init__(a.n)
        self.a, self.b = a, b
        self.time_dependent = a.time_dependent or b.time_dependent

    def value(self, t, x):
        return self.a.value(t, x) * self.b.value(t, x)

    def grad(self, t, x):
        va, vb = self.a.value(t, x), self.b.value(t, x)
        return va[:, None] * self.b.grad(t, x) + vb[:, None] * self.a.grad(t, x)

    def hess(self, t, x):
        va, vb = self.a.value(t, x), self.b.value(t, x)
        ga, gb = self.a.grad(t, x), self.b.grad(t, x)
        cross = ga[:, :, None] * gb[:, None, :]
        return (
            va[:, None, None] * self.b.hess(t, x)
            + vb[:, None, None] * self.a.hess(t, x)
            + cross
            + np.swapaxes(cross, 1, 2)
        )

    def jet(self, t, x):
        va, ga, ha = self.a.jet(t, x)
        vb, gb, hb = self.b.jet(t, x)
        cross = ga[:, :, None] * gb[:, None, :]
        h = va[:, None, None] * hb + vb[:, None, None] * ha + cross + np.swapaxes(cross, 1, 2)
        return va * vb, va[:, None] * gb + vb[:, None] * ga, h

    def params(self):
        return {"a": self.a.to_dict(), "b": self.b.to_dict()}


class TimeRescaled(Hamiltonian):
    """(t, x) -> factor * H(t * time_scale, x)."""

    kind = "time_rescaled"

    def __init__(self, inner: Hamiltonian, factor: float = 1.0, time_scale: float = 1.0):
        super().__init__(inner.n)
        self.inner, self.factor, self.time_scale = inner, float(factor), float(time_scale)
        self.time_dependent = inner.time_dependent

    def value(self, t, x):
        return self.factor * self.inner.value(t * self.time_scale, x)

    def grad(self, t, x):
        return self.factor * self.inner.grad(t * self.time_scale, x)

    def hess(self, t, x):
        return self.factor * self.inner.hess(t * self.time_scale, x)

    def jet(self, t, x):
        v, g, h = self.inner.jet(t * self.time_scale, x)
        return self.factor * v, self.factor * g, self.factor * h

    def derivs(self, t, x):
        g, h = self.inner.derivs(t * self.time_scale, x)
        return self.factor * g, self.factor * h

    def params(self):
        return {"inner": self.inner.to_dict(), "factor": self.factor, "time_scale": self.time_scale}


class PresetHamiltonian(Hamiltonian):
    """A built Hamiltonian that serializes back to the preset parameters it came from."""

    def __init__(self, inner: Hamiltonian, preset: dict):
        super().__init__(inner.n)
        self.inner = inner
        self.preset = dict(preset)
        self.kind = self.preset["kind"]
        self.time_dependent = inner.time_dependent

    def value(self, t, x):
        return self.inner.value(t, x)

    def grad(self, t, x):
        return self.inner.grad(t, x)

    def hess(self, t, x):
        return self.inner.hess(t, x)

    def jet(self, t, x):
        return self.inner.jet(t, x)

    def derivs(self, t, x):
        return self.inner.derivs(t, x)

    def to_dict(self):
        return dict(self.preset)

    def __getattr__(self, name):
        # expose construction metadata (e.g. certificates) of the wrapped object
        if name == "inner":
            raise AttributeError(name)
        return getattr(self.inner, name)


def gk_hamiltonian(torus_h: Hamiltonian, k: int) -> Hamiltonian:
    """G^k(q, p) = nu^k(p) H(q, p) on the strip covering the torus (H 1-periodic in p)."""
    if torus_h.n != 1:
        raise BadParams("G^k is defined for Hamiltonians on the 2-torus")
    return ProductHamiltonian(ProfileHamiltonian(NuProfile(k)), torus_h)


def hamiltonian_from_dict(d: dict) -> Hamiltonian:
    """Rebuild a Hamiltonian from its JSON form (the inverse of ``to_dict``)."""
    from . import constructions

    kind = d.get("kind")
    if kind == "constant":
        return ConstantHamiltonian(d.get("c", 0.0), d.get("n", 1))
    if kind == "profile":
        return ProfileHamiltonian(profile_from_dict(d["profile"]), d.get("coord", 0), d.get("n", 1))
    if kind in ("g", "f"):
        from .smooth import FProfile, GProfile, ShiftedProfile

        prof = (GProfile if kind == "g" else FProfile)(d["m"], d["S"], d["eps"])
        if d.get("center", 0.0):
            prof = ShiftedProfile(prof, shift=d["center"])
        return PresetHamiltonian(ProfileHamiltonian(prof), d)
    if kind == "linear_form":
        return LinearFormHamiltonian(profile_from_dict(d["profile"]), d["beta"], d.get("offset", 0.0))
    if kind == "radial":
        return RadialHamiltonian(profile_from_dict(d["profile"]), d.get("n", 2))
    if kind == "trig":
        return TrigHamiltonian(d["terms"], d.get("n", 1), d.get("offset", 0.0))
    if kind == "sum":
        return SumHamiltonian([hamiltonian_from_dict(t) for t in d["terms"]])
    if kind == "scaled":
        return ScaledHamiltonian(d["c"], hamiltonian_from_dict(d["inner"]))
    if kind == "product":
        return ProductHamiltonian(hamiltonian_from_dict(d["a"]), hamiltonian_from_dict(d["b"]))
    if kind == "product_with_cos":
        cos = TrigHamiltonian([d["wave"]], d.get("n", 1), d.get("offset", 0.0))
        return PresetHamiltonian(ProductHamiltonian(cos, hamiltonian_from_dict(d["envelope"])), d)
    if kind == "time_rescaled":
        return TimeRescaled(hamiltonian_from_dict(d["inner"]), d.get("factor", 1.0), d.get("time_scale", 1.0))
    if kind == "gk":
        return PresetHamiltonian(gk_hamiltonian(hamiltonian_from_dict(d["torus"]), d["k"]), d)
    if kind == "counterexample_annulus":
        return constructions.counterexample_annulus(d["C"], d["delta"], d["r"], d["tau"])
    if kind == "ball":
        return constructions.ball_hamiltonian(d["height"], d["radius"], d.get("n", 2))
    if kind == "counterexample_lagrangian":
        return constructions.counterexample_lagrangian(d["n"], d["w"], d["k"], d.get("alpha"), d.get("beta"))
    raise BadParams(f"unknown Hamiltonian kind {kind!r}")
