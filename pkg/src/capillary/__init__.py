"""Discrete geometric-variational toolkit for capillary CMC surfaces."""

from .ambient import AmbientDomain, BoundaryFrame, domain_from_config, project_and_frame
from .energy import EnergyParams, capillary_energy, energy_gradient, first_variation
from .mesh import (
    CapillaryMesh,
    contact_angles,
    curvatures,
    make_catenoid_band,
    make_flat_disk,
    make_slab_plane,
    make_spherical_cap,
    make_subdivision_sphere,
    make_wall_strip,
    measures,
    read_off,
    write_off,
)
from .oracles import CapOracle, cap_energy

__version__ = "0.1.0"

__all__ = [
    "AmbientDomain",
    "BoundaryFrame",
    "CapOracle",
    "CapillaryMesh",
    "EnergyParams",
    "cap_energy",
    "capillary_energy",
    "contact_angles",
    "curvatures",
    "domain_from_config",
    "energy_gradient",
    "first_variation",
    "make_catenoid_band",
    "make_flat_disk",
    "make_slab_plane",
    "make_spherical_cap",
    "make_subdivision_sphere",
    "make_wall_strip",
    "measures",
    "project_and_frame",
    "read_off",
    "write_off",
]
