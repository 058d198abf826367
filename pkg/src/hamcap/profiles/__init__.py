"""Profiles and Hamiltonian constructions."""

from .constructions import (
    WindowConstants,
    ball_hamiltonian,
    band_extrema,
    build_Gk,
    build_squeezing_pair,
    counterexample_annulus,
    counterexample_lagrangian,
    homotopy_levels,
    monotone_homotopy,
    solve_slope_equation,
)
from .hamiltonian import (
    ConstantHamiltonian,
    Hamiltonian,
    LinearFormHamiltonian,
    PresetHamiltonian,
    ProductHamiltonian,
    ProfileHamiltonian,
    RadialHamiltonian,
    ScaledHamiltonian,
    SumHamiltonian,
    TimeRescaled,
    TrigHamiltonian,
    gk_hamiltonian,
    hamiltonian_from_dict,
)
from .smooth import (
    CutoffRamp,
    FProfile,
    GProfile,
    Mu,
    NuProfile,
    PlateauProfile,
    ShiftedProfile,
    SmoothProfile,
    f_profile,
    g_profile,
    mu,
    profile_from_dict,
)
