"""Model parameters for the rough Heston model and its multi-factor approximations.

Symbols follow the usual rough Heston convention: mean-reversion speed
``lam`` (lambda), spot-vol correlation ``rho``, vol-of-vol ``nu``, Hurst
index ``hurst``, initial variance ``v0``, mean-reversion level curve
``theta``, spot ``s0`` and horizon ``horizon`` (T).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace


@dataclass(frozen=True)
class ThetaCurve:
    """Non-negative piecewise-constant curve on [0, inf).

    ``values[i]`` applies on ``[breaks[i-1], breaks[i])`` with the implicit
    conventions ``breaks[-1] -> inf`` and the first segment starting at 0,
    so ``len(values) == len(breaks) + 1``.
    """

    values: tuple[float, ...]
    breaks: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        values = tuple(float(v) for v in self.values)
        breaks = tuple(float(b) for b in self.breaks)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "breaks", breaks)
        if len(values) != len(breaks) + 1:
            raise ValueError("need len(values) == len(breaks) + 1")
        if any(v < 0.0 for v in values):
            raise ValueError("theta must be non-negative")
        if any(b <= 0.0 for b in breaks):
            raise ValueError("breakpoints must be positive")
        if any(b2 <= b1 for b1, b2 in zip(breaks, breaks[1:])):
            raise ValueError("breakpoints must be strictly increasing")

    @classmethod
    def constant(cls, value: float) -> "ThetaCurve":
        return cls((float(value),))

    @property
    def is_constant(self) -> bool:
        return len(self.values) == 1

    def value_at(self, t: float) -> float:
        for b, v in zip(self.breaks, self.values):
            if t < b:
                return v
        return self.values[-1]

    def segments(self, t_end: float) -> list[tuple[float, float, float]]:
        """Segments (a, b, value) covering [0, t_end], last one clipped."""
        out = []
        a = 0.0
        for b, v in zip(self.breaks, self.values):
            if a >= t_end:
                return out
            out.append((a, min(b, t_end), v))
            a = b
        if a < t_end:
            out.append((a, t_end, self.values[-1]))
        return out

    def integral(self, t_end: float) -> float:
        return sum(v * (b - a) for a, b, v in self.segments(t_end))

    def to_jsonable(self) -> float | dict:
        if self.is_constant:
            return self.values[0]
        return {"values": list(self.values), "breaks": list(self.breaks)}

    @classmethod
    def from_jsonable(cls, obj) -> "ThetaCurve":
        if isinstance(obj, ThetaCurve):
            return obj
        if isinstance(obj, (int, float)):
            return cls.constant(float(obj))
        return cls(tuple(obj["values"]), tuple(obj.get("breaks", ())))


@dataclass(frozen=True)
class ModelParams:
    """Rough Heston model parameters.

    ``hurst`` is validated to (0, 1/2]; the value 1/2 is the documented
    classical-diffusion test mode (plain Heston), used only by code paths
    that remain well defined there.  ``theta`` accepts a plain float and is
    normalized to a constant :class:`ThetaCurve`.
    """

    lam: float
    rho: float
    nu: float
    hurst: float
    v0: float
    theta: ThetaCurve = field(default_factory=lambda: ThetaCurve.constant(0.0))
    s0: float = 1.0
    horizon: float = 1.0

    def __post_init__(self) -> None:
        if isinstance(self.theta, (int, float)):
            object.__setattr__(self, "theta", ThetaCurve.constant(self.theta))
        if self.lam < 0.0:
            raise ValueError("lambda must be >= 0")
        if not -1.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [-1, 1]")
        if self.nu < 0.0:
            raise ValueError("nu must be >= 0")
        if not 0.0 < self.hurst <= 0.5:
            raise ValueError("hurst must lie in (0, 1/2] (1/2 = classical mode)")
        if self.v0 < 0.0:
            raise ValueError("v0 must be >= 0")
        if self.s0 <= 0.0:
            raise ValueError("s0 must be > 0")
        if self.horizon <= 0.0:
            raise ValueError("horizon must be > 0")

    @property
    def alpha(self) -> float:
        """Fractional order H + 1/2."""
        return self.hurst + 0.5

    def with_horizon(self, horizon: float) -> "ModelParams":
        return replace(self, horizon=float(horizon))

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "rho": self.rho,
            "nu": self.nu,
            "hurst": self.hurst,
            "v0": self.v0,
            "theta": self.theta.to_jsonable(),
            "s0": self.s0,
            "horizon": self.horizon,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        return cls(
            lam=float(d.get("lambda", d.get("lam", 0.0))),
            rho=float(d["rho"]),
            nu=float(d["nu"]),
            hurst=float(d["hurst"]),
            v0=float(d["v0"]),
            theta=ThetaCurve.from_jsonable(d.get("theta", 0.0)),
            s0=float(d.get("s0", 1.0)),
            horizon=float(d.get("horizon", 1.0)),
        )
