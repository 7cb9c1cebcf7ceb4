"""Parameter containers for the seated-occupant model.

Field names carry their unit as a suffix so that config files, presets and
code all speak the same vocabulary.  Presets live in ``ridecomfort/data`` as
flat JSON objects with exactly these keys.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields, replace
from importlib import resources

from ridecomfort.errors import ConfigError

# Generalized coordinates of the three-segment chain.  Translations are the
# pelvis carriage relative to the seat pan; angles are absolute (lab frame).
# Head yaw follows trunk yaw rigidly, pelvis yaw follows the seat.
COORDINATE_NAMES = (
    "seat_x",
    "seat_y",
    "seat_z",
    "pelvis_roll",
    "pelvis_pitch",
    "trunk_roll",
    "trunk_pitch",
    "trunk_yaw",
    "head_roll",
    "head_pitch",
)

# Joint-space names accepted for initial posture angles.
JOINT_NAMES = (
    "pelvis_roll",
    "pelvis_pitch",
    "lumbar_roll",
    "lumbar_pitch",
    "lumbar_yaw",
    "neck_roll",
    "neck_pitch",
)

_POSTURES = ("erect", "slouched")
_BACKREST_CONTACT = ("none", "low", "high")

# Rest joint angles implied by the named postures, rad.
_POSTURE_ANGLES = {
    "erect": {},
    "slouched": {"lumbar_pitch": 0.20, "neck_pitch": 0.08},
}

_MAX_REST_ANGLE_RAD = 0.6  # small-angle model; larger rest angles are out of scope


def _require(cond: bool, errors: list, field: str, message: str) -> None:
    if not cond:
        errors.append((field, message))


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


@dataclass(frozen=True)
class BodyParams:
    """Masses, geometry, passive visco-elastic terms and feedback gains.

    All segment lengths are measured along the upright body axis.  ``prop_*``
    gains act on joint deflections away from the rest posture; the vestibular
    gains act on head orientation in space.  Gains with a ``Nms`` suffix
    multiply rates.
    """

    pelvis_mass_kg: float
    trunk_mass_kg: float
    head_mass_kg: float
    pelvis_inertia_roll_kgm2: float
    pelvis_inertia_pitch_kgm2: float
    trunk_inertia_roll_kgm2: float
    trunk_inertia_pitch_kgm2: float
    trunk_inertia_yaw_kgm2: float
    head_inertia_roll_kgm2: float
    head_inertia_pitch_kgm2: float
    head_inertia_yaw_kgm2: float
    pelvis_to_l5s1_m: float
    l5s1_to_c7t1_m: float
    c7t1_to_head_com_m: float
    seat_stiffness_x_N_per_m: float
    seat_stiffness_y_N_per_m: float
    seat_stiffness_z_N_per_m: float
    seat_damping_x_Ns_per_m: float
    seat_damping_y_Ns_per_m: float
    seat_damping_z_Ns_per_m: float
    seat_rot_stiffness_roll_Nm_per_rad: float
    seat_rot_stiffness_pitch_Nm_per_rad: float
    seat_rot_damping_roll_Nms_per_rad: float
    seat_rot_damping_pitch_Nms_per_rad: float
    lumbar_stiffness_roll_Nm_per_rad: float
    lumbar_stiffness_pitch_Nm_per_rad: float
    lumbar_stiffness_yaw_Nm_per_rad: float
    lumbar_damping_roll_Nms_per_rad: float
    lumbar_damping_pitch_Nms_per_rad: float
    lumbar_damping_yaw_Nms_per_rad: float
    neck_stiffness_roll_Nm_per_rad: float
    neck_stiffness_pitch_Nm_per_rad: float
    neck_damping_roll_Nms_per_rad: float
    neck_damping_pitch_Nms_per_rad: float
    backrest_present: bool
    backrest_height_m: float
    backrest_stiffness_N_per_m: float
    backrest_damping_Ns_per_m: float
    prop_gain_pelvis_Nm_per_rad: float
    prop_gain_pelvis_Nms_per_rad: float
    prop_gain_lumbar_Nm_per_rad: float
    prop_gain_lumbar_Nms_per_rad: float
    prop_gain_neck_Nm_per_rad: float
    prop_gain_neck_Nms_per_rad: float
    prop_delay_s: float
    vestibular_gain_Nm_per_rad: float
    vestibular_gain_Nms_per_rad: float
    vestibular_delay_s: float
    visual_enabled: bool
    visual_gain_Nm_per_rad: float
    visual_gain_Nms_per_rad: float
    visual_delay_s: float
    gravity_m_per_s2: float

    @classmethod
    def field_names(cls) -> tuple:
        return tuple(f.name for f in fields(cls))

    @classmethod
    def from_dict(cls, raw: dict, source: str = "body params") -> "BodyParams":
        """Build from a flat mapping, rejecting unknown and missing keys."""
        errors = []
        known = set(cls.field_names())
        data = dict(raw)
        data.pop("schema_version", None)
        data.pop("label", None)
        for key in sorted(set(data) - known):
            errors.append((key, "unknown parameter"))
        for key in sorted(known - set(data)):
            errors.append((key, "missing parameter"))
        if errors:
            raise ConfigError([(f"{source}.{k}", m) for k, m in errors])
        params = cls(**{k: data[k] for k in known})
        params.validate(source=source)
        return params

    @classmethod
    def from_preset(cls, name: str = "default", overrides: dict | None = None) -> "BodyParams":
        """Load a named preset shipped with the package, optionally overridden."""
        try:
            text = resources.files("ridecomfort.data").joinpath(f"body_{name}.json").read_text()
        except FileNotFoundError:
            raise ConfigError([(f"model.preset", f"unknown preset {name!r}")]) from None
        raw = json.loads(text)
        raw.pop("schema_version", None)
        raw.pop("label", None)
        if overrides:
            unknown = sorted(set(overrides) - set(cls.field_names()))
            if unknown:
                raise ConfigError([(f"model.overrides.{k}", "unknown parameter") for k in unknown])
            raw.update(overrides)
        return cls.from_dict(raw, source="model")

    def validate(self, source: str = "body params") -> None:
        """Raise ConfigError listing every out-of-range field."""
        errors = []
        positive = (
            "pelvis_mass_kg", "trunk_mass_kg", "head_mass_kg",
            "pelvis_inertia_roll_kgm2", "pelvis_inertia_pitch_kgm2",
            "trunk_inertia_roll_kgm2", "trunk_inertia_pitch_kgm2", "trunk_inertia_yaw_kgm2",
            "head_inertia_roll_kgm2", "head_inertia_pitch_kgm2", "head_inertia_yaw_kgm2",
            "pelvis_to_l5s1_m", "l5s1_to_c7t1_m", "c7t1_to_head_com_m",
        )
        nonneg = (
            "seat_stiffness_x_N_per_m", "seat_stiffness_y_N_per_m", "seat_stiffness_z_N_per_m",
            "seat_damping_x_Ns_per_m", "seat_damping_y_Ns_per_m", "seat_damping_z_Ns_per_m",
            "seat_rot_stiffness_roll_Nm_per_rad", "seat_rot_stiffness_pitch_Nm_per_rad",
            "seat_rot_damping_roll_Nms_per_rad", "seat_rot_damping_pitch_Nms_per_rad",
            "lumbar_stiffness_roll_Nm_per_rad", "lumbar_stiffness_pitch_Nm_per_rad",
            "lumbar_stiffness_yaw_Nm_per_rad",
            "lumbar_damping_roll_Nms_per_rad", "lumbar_damping_pitch_Nms_per_rad",
            "lumbar_damping_yaw_Nms_per_rad",
            "neck_stiffness_roll_Nm_per_rad", "neck_stiffness_pitch_Nm_per_rad",
            "neck_damping_roll_Nms_per_rad", "neck_damping_pitch_Nms_per_rad",
            "backrest_stiffness_N_per_m", "backrest_damping_Ns_per_m",
            "prop_gain_pelvis_Nm_per_rad", "prop_gain_pelvis_Nms_per_rad",
            "prop_gain_lumbar_Nm_per_rad", "prop_gain_lumbar_Nms_per_rad",
            "prop_gain_neck_Nm_per_rad", "prop_gain_neck_Nms_per_rad",
            "prop_delay_s",
            "vestibular_gain_Nm_per_rad", "vestibular_gain_Nms_per_rad", "vestibular_delay_s",
            "visual_gain_Nm_per_rad", "visual_gain_Nms_per_rad", "visual_delay_s",
            "gravity_m_per_s2",
        )
        for name in positive:
            value = getattr(self, name)
            if not _is_number(value) or value <= 0:
                errors.append((name, "must be a finite number > 0"))
        for name in nonneg:
            value = getattr(self, name)
            if not _is_number(value) or value < 0:
                errors.append((name, "must be a finite number >= 0"))
        for name in ("backrest_present", "visual_enabled"):
            if not isinstance(getattr(self, name), bool):
                errors.append((name, "must be true or false"))
        if isinstance(self.backrest_present, bool) and self.backrest_present:
            if not _is_number(self.backrest_height_m) or self.backrest_height_m <= 0:
                errors.append(("backrest_height_m", "must be a finite number > 0"))
            elif _is_number(self.pelvis_to_l5s1_m) and self.backrest_height_m <= self.pelvis_to_l5s1_m:
                errors.append(
                    ("backrest_height_m", "must exceed pelvis_to_l5s1_m (contact is on the trunk)")
                )
        elif not _is_number(self.backrest_height_m) or self.backrest_height_m < 0:
            errors.append(("backrest_height_m", "must be a finite number >= 0"))
        if errors:
            raise ConfigError([(f"{source}.{k}", m) for k, m in errors])

    def with_overrides(self, **overrides) -> "BodyParams":
        out = replace(self, **overrides)
        out.validate()
        return out

    def total_mass_kg(self) -> float:
        return self.pelvis_mass_kg + self.trunk_mass_kg + self.head_mass_kg


@dataclass(frozen=True)
class PostureConfig:
    """Initial posture, backrest engagement and coordinate locking.

    ``initial_joint_angles_rad`` entries override the named posture's rest
    angles joint by joint.  ``locked_coordinates`` removes coordinates from
    the dynamic problem entirely; they are pinned at the rest posture.
    """

    posture: str = "erect"
    backrest_contact: str = "high"
    initial_joint_angles_rad: dict | None = None
    locked_coordinates: tuple = ()

    def validate(self, source: str = "posture") -> None:
        errors = []
        _require(self.posture in _POSTURES, errors, "posture",
                 f"must be one of {_POSTURES}")
        _require(self.backrest_contact in _BACKREST_CONTACT, errors, "backrest_contact",
                 f"must be one of {_BACKREST_CONTACT}")
        if self.initial_joint_angles_rad is not None:
            for key, value in self.initial_joint_angles_rad.items():
                if key not in JOINT_NAMES:
                    errors.append((f"initial_joint_angles_rad.{key}", "unknown joint"))
                elif not _is_number(value) or abs(value) > _MAX_REST_ANGLE_RAD:
                    errors.append((f"initial_joint_angles_rad.{key}",
                                   f"must be a finite angle within +/-{_MAX_REST_ANGLE_RAD} rad"))
        seen = set()
        for name in self.locked_coordinates:
            if name not in COORDINATE_NAMES:
                errors.append(("locked_coordinates", f"unknown coordinate {name!r}"))
            elif name in seen:
                errors.append(("locked_coordinates", f"duplicate coordinate {name!r}"))
            seen.add(name)
        if len(seen) == len(COORDINATE_NAMES):
            errors.append(("locked_coordinates", "cannot lock every coordinate"))
        if errors:
            raise ConfigError([(f"{source}.{k}", m) for k, m in errors])

    def joint_rest_angles(self) -> dict:
        """Merge the named posture's angles with explicit overrides."""
        self.validate()
        angles = dict.fromkeys(JOINT_NAMES, 0.0)
        angles.update(_POSTURE_ANGLES[self.posture])
        if self.initial_joint_angles_rad:
            angles.update(self.initial_joint_angles_rad)
        return angles

    def rest_coordinates(self) -> "list[float]":
        """Rest posture mapped to the absolute generalized coordinates."""
        j = self.joint_rest_angles()
        q0 = [0.0] * len(COORDINATE_NAMES)
        q0[3] = j["pelvis_roll"]
        q0[4] = j["pelvis_pitch"]
        q0[5] = j["pelvis_roll"] + j["lumbar_roll"]
        q0[6] = j["pelvis_pitch"] + j["lumbar_pitch"]
        q0[7] = j["lumbar_yaw"]
        q0[8] = q0[5] + j["neck_roll"]
        q0[9] = q0[6] + j["neck_pitch"]
        return q0
