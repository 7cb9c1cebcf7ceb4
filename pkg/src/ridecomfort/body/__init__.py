"""Seated-occupant lumped-parameter model: parameters, assembly, simulation."""

from ridecomfort.body.params import BodyParams, PostureConfig, COORDINATE_NAMES
from ridecomfort.body.build import ModelRealization, build_model, static_equilibrium
from ridecomfort.body.integrate import BodyState, step, simulate, mechanical_energy
from ridecomfort.body.linearize import LinearizedModel, linearize

__all__ = [
    "BodyParams",
    "PostureConfig",
    "COORDINATE_NAMES",
    "ModelRealization",
    "build_model",
    "static_equilibrium",
    "BodyState",
    "step",
    "simulate",
    "mechanical_energy",
    "LinearizedModel",
    "linearize",
]
