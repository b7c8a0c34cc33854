"""Run configuration: flat TOML in, resolved TOML back out.

Every field has a default so an empty file (or no file) is a valid run.
The resolved configuration is echoed into each output directory so a run
can be reproduced from (config, seed) alone.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from .geometry import Window
from .optimizers import MultiscaleSchedule, SynthesisConfig, multiscale_schedule
from .wavelets import default_xi0

__all__ = ["RunConfig", "load_config", "resolved_toml", "to_synthesis_config"]

METHODS = ("gd-wph", "rs-nnd", "rs-wph")


@dataclass(frozen=True)
class RunConfig:
    # descriptor
    N: int = 64
    J: int = None  # default log2(N) - 3
    L: int = 8
    xi0: float = None
    second_order_only: bool = False
    # optimization
    method: str = "gd-wph"
    iterations_per_stage: int = 100
    lbfgs_memory: int = 10
    target_relative_energy: float = None
    max_stages: int = None
    rs_iterations_per_point: int = 2000
    max_energy_evals: int = None
    # extra steps
    multiscale: bool = True
    final_blur: bool = True
    truncation_radius_sigmas: float = 4.0
    kernel_exponent: str = "stddev"
    # nnd descriptor (rs-nnd)
    nnd_k_max: int = 16
    nnd_r_max: float = 0.125
    nnd_n_radii: int = 250
    # reproducibility
    seed: int = 0
    n_outputs: int = 1

    def __post_init__(self):
        if self.N < 8 or (self.N & (self.N - 1)) != 0:
            raise ValueError(f"N must be a power of two >= 8, got {self.N}")
        if self.J is None:
            object.__setattr__(self, "J", max(int(self.N).bit_length() - 1 - 3, 1))
        if self.xi0 is None:
            object.__setattr__(self, "xi0", default_xi0())
        if self.method not in METHODS:
            raise ValueError(
                f"unknown method {self.method!r}; expected one of {', '.join(METHODS)}"
            )
        if self.n_outputs < 1:
            raise ValueError("n_outputs must be >= 1")
        if self.iterations_per_stage < 1:
            raise ValueError("iterations_per_stage must be >= 1")
        if self.rs_iterations_per_point < 1:
            raise ValueError("rs_iterations_per_point must be >= 1")


def load_config(path=None, **overrides) -> RunConfig:
    """RunConfig from a TOML file plus keyword overrides (overrides win).

    Unknown keys are rejected so typos fail loudly instead of silently
    falling back to defaults.
    """
    data = {}
    if path is not None:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config key(s): {sorted(unknown)}")
    for key, value in overrides.items():
        if value is not None:
            data[key] = value
    return RunConfig(**data)


def resolved_toml(cfg: RunConfig) -> str:
    """The fully resolved configuration as TOML text."""
    lines = []
    for f in dataclasses.fields(RunConfig):
        value = getattr(cfg, f.name)
        if value is None:
            continue  # optional knob left unset
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, (int, float)):
            text = repr(value)
        else:
            text = '"' + str(value) + '"'
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"


def to_synthesis_config(cfg: RunConfig, seed=None) -> SynthesisConfig:
    window = Window()
    if cfg.multiscale:
        schedule = multiscale_schedule(
            cfg.N, cfg.J, window, iterations_per_stage=cfg.iterations_per_stage
        )
    else:
        schedule = MultiscaleSchedule((window.s / cfg.N,), cfg.iterations_per_stage)
    return SynthesisConfig(
        N=cfg.N,
        J=cfg.J,
        L=cfg.L,
        xi0=cfg.xi0,
        schedule=schedule,
        lbfgs_memory=cfg.lbfgs_memory,
        final_blur=cfg.final_blur,
        seed=cfg.seed if seed is None else seed,
        max_stages=cfg.max_stages,
        target_relative_energy=cfg.target_relative_energy,
        truncation_radius_sigmas=cfg.truncation_radius_sigmas,
        kernel_exponent=cfg.kernel_exponent,
        second_order_only=cfg.second_order_only,
    )
