"""Closed-loop parameter set shared by every module."""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace


class Topology(str, enum.Enum):
    PATH = "path"
    CIRCULAR = "circular"

    @classmethod
    def coerce(cls, value: "Topology | str") -> "Topology":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown topology {value!r}; expected 'path' or 'circular'") from None


def _check_asym(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class PlatoonParams:
    """Parameters of the platoon with integral action.

    ``n_followers`` is N (vehicles 1..N follow the leader 0), ``friction`` is
    the viscous coefficient a, ``gain_x``/``gain_v`` weight position and
    velocity errors, and ``asym_x``/``asym_v`` give the weight on the rear
    neighbour (0.5 is symmetric).
    """

    n_followers: int
    friction: float
    gain_x: float
    gain_v: float
    asym_x: float = 0.5
    asym_v: float = 0.5

    def __post_init__(self) -> None:
        if int(self.n_followers) != self.n_followers or self.n_followers < 1:
            raise ValueError(f"n_followers must be a positive integer, got {self.n_followers}")
        object.__setattr__(self, "n_followers", int(self.n_followers))
        _check_asym("asym_x", self.asym_x)
        _check_asym("asym_v", self.asym_v)

    @property
    def beta_x(self) -> float:
        return 1.0 - 2.0 * self.asym_x

    @property
    def beta_v(self) -> float:
        return 1.0 - 2.0 * self.asym_v

    @classmethod
    def from_beta(cls, n_followers: int, friction: float, gain_x: float, gain_v: float,
                  beta_x: float = 0.0, beta_v: float = 0.0) -> "PlatoonParams":
        return cls(n_followers, friction, gain_x, gain_v,
                   (1.0 - beta_x) / 2.0, (1.0 - beta_v) / 2.0)

    def with_(self, **changes) -> "PlatoonParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "N": self.n_followers,
            "a": self.friction,
            "gx": self.gain_x,
            "gv": self.gain_v,
            "rho_x": self.asym_x,
            "rho_v": self.asym_v,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PlatoonParams":
        return cls(int(d["N"]), float(d["a"]), float(d["gx"]), float(d["gv"]),
                   float(d["rho_x"]), float(d["rho_v"]))


# Tuned design reported for a = 2 with both gains capped at 10.
REFERENCE = PlatoonParams(n_followers=250, friction=2.0, gain_x=6.2, gain_v=10.0,
                          asym_x=0.5, asym_v=0.4)
