"""Scenario configuration and the regularization policies.

A :class:`NetworkConfig` is a flat record of every parameter a scenario
needs.  It round-trips through JSON with its snake_case field names, so a
config file is just ``json.dump(dataclasses.asdict(cfg))`` with the policy
written in its string form (``"table1"``, ``"zf"``, ``"snr(30)"``,
``"fixed(0.1)"``).
"""

from __future__ import annotations

import dataclasses
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

__all__ = [
    "ConfigError",
    "RegPolicy",
    "NetworkConfig",
    "regularization",
]


class ConfigError(ValueError):
    """Raised for an invalid scenario or experiment description."""


_POLICY_RE = re.compile(r"^\s*(table1|zf|snr|fixed)\s*(?:\(\s*([^)]*?)\s*\))?\s*$")


@dataclass(frozen=True)
class RegPolicy:
    """How each subnetwork picks its RZF regularization scalar.

    ``table1``  alpha_m = N0 / (P_m beta_m)
    ``snr``     alpha_m = 1 / (10**(rho/10) beta_m), ``value`` is rho in dB
    ``fixed``   alpha_m = ``value`` for every subnetwork
    ``zf``      alpha_m = 0 (pseudo-inverse precoding)
    """

    kind: str = "table1"
    value: float | None = None

    def __post_init__(self):
        if self.kind not in ("table1", "zf", "snr", "fixed"):
            raise ConfigError(f"unknown regularization policy {self.kind!r}")
        if self.kind in ("snr", "fixed"):
            if self.value is None or not math.isfinite(self.value):
                raise ConfigError(f"policy {self.kind!r} needs a finite value")
            if self.kind == "fixed" and self.value < 0:
                raise ConfigError("fixed regularization must be >= 0")
        elif self.value is not None:
            raise ConfigError(f"policy {self.kind!r} takes no value")

    @classmethod
    def parse(cls, text: "str | RegPolicy") -> "RegPolicy":
        if isinstance(text, RegPolicy):
            return text
        match = _POLICY_RE.match(str(text))
        if match is None:
            raise ConfigError(f"cannot parse regularization policy {text!r}")
        kind, arg = match.groups()
        if kind in ("snr", "fixed"):
            if not arg:
                raise ConfigError(f"policy {kind!r} needs an argument, e.g. {kind}(10)")
            try:
                return cls(kind, float(arg))
            except ValueError:
                raise ConfigError(f"bad numeric argument in {text!r}") from None
        if arg:
            raise ConfigError(f"policy {kind!r} takes no argument")
        return cls(kind)

    def __str__(self):
        if self.value is None:
            return self.kind
        return f"{self.kind}({self.value:g})"

    @property
    def is_zf(self) -> bool:
        return self.kind == "zf" or (self.kind == "fixed" and self.value == 0.0)


def regularization(policy: RegPolicy, tx_power: float, noise_power: float,
                   beta_m: float) -> float:
    """Regularization scalar alpha_m for a subnetwork with ratio ``beta_m``."""
    if policy.kind == "table1":
        return noise_power / (tx_power * beta_m)
    if policy.kind == "snr":
        return 1.0 / (10.0 ** (policy.value / 10.0) * beta_m)
    if policy.kind == "fixed":
        return float(policy.value)
    return 0.0


@dataclass(frozen=True)
class NetworkConfig:
    """All parameters of one clustered cell-free scenario.

    Defaults follow the reference parameter table: a 2 km square, 1 W per
    subnetwork, 1e-12 W noise, thresholds at 10 m and 50 m, single-antenna
    BSs and 50 fixed-point sweeps.  Distances are meters, powers watts.
    """

    area_side_D: float = 2000.0
    num_subnetworks_M: int = 4
    total_users_K: int = 256
    antenna_ratio_beta: float = 4.0
    antennas_per_bs: int = 1
    near_threshold_d0: float = 10.0
    far_threshold_d1: float = 50.0
    tx_power_P: float = 1.0
    noise_power_N0: float = 1e-12
    reg_policy: RegPolicy = field(default_factory=RegPolicy)
    seed: int = 0
    mc_realizations: int = 50
    fp_iterations_Tmax: int = 50
    network_realizations: int = 10

    def __post_init__(self):
        # accept the string form wherever a policy is expected
        if not isinstance(self.reg_policy, RegPolicy):
            object.__setattr__(self, "reg_policy", RegPolicy.parse(self.reg_policy))
        self.validate()

    def validate(self) -> None:
        if not self.area_side_D > 0:
            raise ConfigError("area_side_D must be positive")
        if not 0 < self.near_threshold_d0 < self.far_threshold_d1:
            raise ConfigError("need 0 < near_threshold_d0 < far_threshold_d1")
        if self.num_subnetworks_M < 1:
            raise ConfigError("num_subnetworks_M must be >= 1")
        if self.total_users_K < self.num_subnetworks_M:
            raise ConfigError("total_users_K must be >= num_subnetworks_M")
        if not self.antenna_ratio_beta > 0:
            raise ConfigError("antenna_ratio_beta must be positive")
        if self.antennas_per_bs < 1:
            raise ConfigError("antennas_per_bs must be >= 1")
        if not self.tx_power_P > 0:
            raise ConfigError("tx_power_P must be positive")
        if not self.noise_power_N0 > 0:
            raise ConfigError("noise_power_N0 must be positive")
        for name in ("mc_realizations", "fp_iterations_Tmax", "network_realizations"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @property
    def num_bs(self) -> int:
        """Number of BSs, ceil(beta K / antennas_per_bs)."""
        # round before ceil so that e.g. 4.0 * 256 never becomes 1025
        antennas = round(self.antenna_ratio_beta * self.total_users_K, 9)
        return math.ceil(antennas / self.antennas_per_bs)

    @property
    def total_antennas(self) -> int:
        return self.num_bs * self.antennas_per_bs

    def replace(self, **changes) -> "NetworkConfig":
        return dataclasses.replace(self, **changes)

    def alpha(self, beta_m: float) -> float:
        return regularization(self.reg_policy, self.tx_power_P, self.noise_power_N0, beta_m)

    # -- JSON ---------------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        out["reg_policy"] = str(self.reg_policy)
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any], *, strict: bool = True) -> "NetworkConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if strict and unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        kwargs = {k: v for k, v in data.items() if k in names}
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text: str, *, strict: bool = True) -> "NetworkConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config JSON must be an object")
        return cls.from_dict(data, strict=strict)

    @classmethod
    def load(cls, path: "str | Path", *, strict: bool = True) -> "NetworkConfig":
        return cls.from_json(Path(path).read_text(encoding="utf-8"), strict=strict)
