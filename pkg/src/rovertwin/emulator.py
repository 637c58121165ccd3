"""Physical-rover stand-in: the twin core wrapped with hidden perturbations.

The emulator runs the exact same stepping core as the twin, with a
PerturbationProfile layered on top: extra message latency, per-joint reporting
bias, Gaussian reporting noise, a coarser command quantum, reduced traction,
and scaled-down wheel torque (component wear). With the identity profile the
emulator degenerates to the twin bit for bit.

The profile is kept in its own file, away from the twin configuration, so
calibration code has no path to the ground truth it is trying to recover.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import yaml

from .core import ARM_DOF, ConfigError, LatencyModelConfig, TwinConfig, parse_quantity
from .core import _parse_latency_model  # shared latency block parser


@dataclass
class PerturbationProfile:
    """Hidden divergence between the "physical" rover and its twin.

    ``extra_latency`` applies to both bus directions unless
    ``extra_latency_telemetry`` overrides the telemetry side (calibration fits
    the two directions independently).
    """

    extra_latency: LatencyModelConfig = field(default_factory=LatencyModelConfig)
    extra_latency_telemetry: LatencyModelConfig | None = None
    joint_bias: list[float] = field(default_factory=lambda: [0.0] * ARM_DOF)
    joint_noise_sigma: float = 0.0
    quant_step_override: float | None = None
    mu_dynamic_override: float | None = None
    torque_scale: float = 1.0

    def validate(self) -> None:
        if len(self.joint_bias) != ARM_DOF:
            raise ConfigError("profile.joint_bias", f"exactly {ARM_DOF} entries required")
        for i, b in enumerate(self.joint_bias):
            if not math.isfinite(b):
                raise ConfigError(f"profile.joint_bias[{i}]", "must be finite")
        if self.joint_noise_sigma < 0.0:
            raise ConfigError("profile.joint_noise_sigma", "must be >= 0")
        if self.quant_step_override is not None and self.quant_step_override <= 0.0:
            raise ConfigError("profile.quant_step_override", "must be > 0")
        if self.mu_dynamic_override is not None and self.mu_dynamic_override < 0.0:
            raise ConfigError("profile.mu_dynamic_override", "must be >= 0")
        if not (0.0 < self.torque_scale <= 1.0):
            raise ConfigError("profile.torque_scale", f"must lie in (0, 1], got {self.torque_scale}")

    @property
    def is_identity(self) -> bool:
        tel = self.extra_latency_telemetry
        return (
            self.extra_latency.base_delay_ms == 0.0
            and self.extra_latency.jitter_half_width_ms == 0.0
            and (tel is None or (tel.base_delay_ms == 0.0 and tel.jitter_half_width_ms == 0.0))
            and all(b == 0.0 for b in self.joint_bias)
            and self.joint_noise_sigma == 0.0
            and self.quant_step_override is None
            and self.mu_dynamic_override is None
            and self.torque_scale == 1.0
        )


def load_profile(text: str) -> PerturbationProfile:
    """Parse a perturbation profile document (YAML, same unit suffixes as configs)."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError("<profile>", f"not valid YAML: {e}") from e
    doc = doc or {}
    if not isinstance(doc, dict):
        raise ConfigError("<profile>", "top level must be a mapping")

    bias_doc = doc.get("joint_bias", [0.0] * ARM_DOF)
    if not isinstance(bias_doc, list) or len(bias_doc) != ARM_DOF:
        raise ConfigError("profile.joint_bias", f"expected a {ARM_DOF}-entry list")
    bias = [parse_quantity(b, "angle", f"profile.joint_bias[{i}]") for i, b in enumerate(bias_doc)]

    quant = doc.get("quant_step_override")
    mu = doc.get("mu_dynamic_override")
    profile = PerturbationProfile(
        extra_latency=_parse_latency_model(doc.get("extra_latency"), "profile.extra_latency"),
        joint_bias=bias,
        joint_noise_sigma=parse_quantity(
            doc.get("joint_noise_sigma", 0.0), "angle", "profile.joint_noise_sigma"
        ),
        quant_step_override=None if quant is None else parse_quantity(quant, "angle", "profile.quant_step_override"),
        mu_dynamic_override=None if mu is None else parse_quantity(mu, "plain", "profile.mu_dynamic_override"),
        torque_scale=parse_quantity(doc.get("torque_scale", 1.0), "plain", "profile.torque_scale"),
    )
    profile.validate()
    return profile


def load_profile_file(path: str) -> PerturbationProfile:
    with open(path, "r", encoding="utf-8") as f:
        return load_profile(f.read())


def run_emulated(commands, profile: PerturbationProfile, seed: int, config: TwinConfig, duration_s: float | None = None):
    """Drive the emulator core with a timestamped command log; returns the session run.

    Telemetry is produced by the same step_world core as the twin, with the
    profile applied; the result is deterministic for a given seed.
    """
    from .simloop import Simulator

    sim = Simulator(config, profile=profile, seed=seed, sim_id="emulator")
    return sim.run_script(commands, duration_s=duration_s)
