"""Named experiment setups and the serializable run configuration."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .capacity import HamiltonianFamily, annulus_family, lagrangian_family
from .errors import BadParams
from .geometry import Chart, HomotopyClass
from .profiles import GProfile, ProfileHamiltonian, ball_hamiltonian, build_Gk, counterexample_annulus, counterexample_lagrangian, hamiltonian_from_dict

TORUS_R = 0.5


def torus_hamiltonian(eps: float = 0.01, r: int = 1):
    """cos(2 pi p) + eps cos(2 pi (q + r t)).

    The perturbation rotates with the orbits of class -r, so each circle
    family of the unperturbed flow breaks into two nondegenerate orbits.
    """
    terms = [{"amp": 1.0, "kq": [0], "kp": [1]}]
    if eps:
        terms.append({"amp": float(eps), "kq": [1], "kp": [0], "omega": float(r)})
    return hamiltonian_from_dict({"kind": "trig", "terms": terms})


@dataclass
class RunConfig:
    preset: str = "annulus"
    r: int = 1
    R: float = 0.6
    grid: int | None = None
    steps: int = 2048
    tol: float = 1e-11
    threads: int = 1
    seed: int = 0
    out: str = "out"
    k: int = 3
    eps: float = 0.01
    bracket: list[float] | None = None
    cap_tol: float = 0.01
    samples: int = 401
    extra: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path=None, **overrides) -> "RunConfig":
        data = {}
        if path:
            with open(path) as fh:
                data = json.load(fh)
            if not isinstance(data, dict):
                raise BadParams("config file must hold a JSON object")
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise BadParams(f"unknown config keys: {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        env = os.environ.get("HAMCAP_SEED")
        if env is not None:
            try:
                data["seed"] = int(env)
            except ValueError as err:
                raise BadParams(f"HAMCAP_SEED must be an integer, got {env!r}") from err
        cfg = cls(**data)
        if cfg.preset not in PRESETS:
            raise BadParams(f"unknown preset {cfg.preset!r}; choose from {sorted(PRESETS)}")
        if cfg.r < 1:
            raise BadParams("r must be a positive integer")
        return cfg

    def to_dict(self) -> dict:
        """Serializable form; the output directory is left out so reruns elsewhere match byte for byte."""
        d = asdict(self)
        d.pop("out")
        return d


@dataclass
class Setup:
    """Everything a command needs: the Hamiltonian, chart, class and any extras."""

    name: str
    H: object
    chart: Chart
    alpha: HomotopyClass
    grid: int
    squeeze: bool = False
    p_range: tuple[float, float] | None = None
    R: float = 0.6
    info: dict = field(default_factory=dict)
    seeds: object = None


def _annulus(cfg: RunConfig, height: float) -> Setup:
    H = ProfileHamiltonian(GProfile(0.0, height, 0.2))
    chart = Chart.annulus(cfg.R + 0.3, -0.15)
    return Setup(cfg.preset, H, chart, HomotopyClass.loop_class(chart, cfg.r), cfg.grid or 64, squeeze=True, R=cfg.R)


def _setup_annulus(cfg):
    return _annulus(cfg, 1.0 if cfg.r == 1 else float(cfg.r))


def _setup_annulus_r2(cfg):
    cfg.r = 2
    return _annulus(cfg, 2.0)


def _setup_counterexample(cfg):
    tau = cfg.R / 4.0
    H = counterexample_annulus(cfg.r * cfg.R, 0.05 * cfg.r * cfg.R, cfg.r, tau)
    chart = Chart.annulus(cfg.R + 2 * tau, -tau)
    return Setup(cfg.preset, H, chart, HomotopyClass.loop_class(chart, cfg.r), cfg.grid or 64, info={"certificate": H.certificate})


def _setup_torus(cfg):
    chart = Chart.torus2()
    H = torus_hamiltonian(cfg.eps, cfg.r)
    return Setup(cfg.preset, H, chart, HomotopyClass.loop_class(chart, cfg.r), cfg.grid or 64, squeeze=True, R=TORUS_R, info={"eps": cfg.eps})


def _setup_torus_unperturbed(cfg):
    chart = Chart.torus2()
    H = torus_hamiltonian(0.0, cfg.r)
    return Setup(cfg.preset, H, chart, HomotopyClass.loop_class(chart, cfg.r), cfg.grid or 64, squeeze=True, R=TORUS_R)


def _setup_torus_gk(cfg):
    base = torus_hamiltonian(cfg.eps, cfg.r)
    k = int(cfg.k)
    return Setup(
        cfg.preset,
        build_Gk(base, k),
        Chart.strip(),
        HomotopyClass((-cfg.r,)),
        cfg.grid or 32,
        p_range=(-(k + 1.0), k + 1.0),
        info={"k": k, "base": base},
    )


def _setup_lagrangian(cfg):
    w = tuple(cfg.extra.get("w", (0.5, 0.0)))
    alpha = tuple(cfg.extra.get("alpha", (0, 1, 0, 0)))
    H = counterexample_lagrangian(len(w), w, cfg.k, alpha=list(alpha))
    chart = Chart.product_torus(len(w))
    return Setup(cfg.preset, H, chart, HomotopyClass(alpha), cfg.grid or 8, info={"certificate": H.certificate, "w": list(w)})


def _setup_ball(cfg):
    """Radial bump on T^4 between X = {p = 0} and Y = {|p| = radius}, in the existence regime.

    Orbits in alpha can only sit where p is antiparallel to the q part of alpha,
    so seeds are spread along that ray instead of over a 4-D grid.
    """
    radius = float(cfg.extra.get("radius", 0.3))
    alpha = tuple(int(a) for a in cfg.extra.get("alpha", (-1, 0, 0, 0)))
    aq = np.asarray(alpha[:2], dtype=float)
    norm = float(np.linalg.norm(aq))
    if len(alpha) != 4 or any(alpha[2:]) or norm == 0:
        raise BadParams("ball preset needs a nonzero q-class (a1, a2, 0, 0)")
    height = float(cfg.extra.get("height", 1.5 * norm * radius))
    H = ball_hamiltonian(height, radius, 2)
    density = cfg.grid or 64
    rho = (np.arange(density) + 0.5) * radius / density
    seeds = np.hstack([np.zeros((density, 2)), -rho[:, None] * aq / norm])
    info = {"radius": radius, "height": height, "alpha_q": aq.tolist()}
    return Setup(cfg.preset, H, Chart.product_torus(2), HomotopyClass(alpha), density, info=info, seeds=seeds)


PRESETS = {
    "annulus": _setup_annulus,
    "annulus-r2": _setup_annulus_r2,
    "counterexample": _setup_counterexample,
    "torus": _setup_torus,
    "torus-unperturbed": _setup_torus_unperturbed,
    "torus-gk": _setup_torus_gk,
    "lagrangian": _setup_lagrangian,
    "ball": _setup_ball,
}


def build_setup(cfg: RunConfig) -> Setup:
    return PRESETS[cfg.preset](cfg)


def capacity_family(cfg: RunConfig) -> tuple[HamiltonianFamily, tuple[float, float]]:
    """Family and default bracket for ``capacity`` runs."""
    if cfg.preset in ("annulus", "annulus-r2", "counterexample"):
        r = 2 if cfg.preset == "annulus-r2" else cfg.r
        fam = annulus_family(r, cfg.R, grid=cfg.grid or 32)
        C = r * cfg.R
        bracket = tuple(cfg.bracket) if cfg.bracket else (5.0 * C / 12.0, 5.0 * C / 3.0)
        return fam, bracket
    if cfg.preset == "lagrangian":
        fam = lagrangian_family(tuple(cfg.extra.get("w", (0.5, 0.0))), tuple(cfg.extra.get("alpha", (0, 1, 0, 0))), grid=cfg.grid or 8)
        bracket = tuple(cfg.bracket) if cfg.bracket else (1.0, 4.0)
        return fam, bracket
    raise BadParams(f"preset {cfg.preset!r} has no capacity family")
