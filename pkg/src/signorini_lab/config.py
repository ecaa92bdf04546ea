"""Tunable analysis constants, grouped so experiments can record them."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields


@dataclass(frozen=True)
class FrequencySettings:
    ratio: float = 1.1              # geometric spacing of radii
    r_min_cells: float = 4.0        # smallest radius, in units of h
    kappa_cells: float = 6.0        # radius at which the frequency is read off
    fit_points: int = 5             # smallest radii used by the linear fit
    fit_agree: float = 0.1          # max |intercept - phi(r*)| to accept the intercept
    slack_floor: float = 0.02       # monotonicity slack: max(slack_floor, slack_cells*h/r)
    slack_cells: float = 5.0
    growth_exponent: float = 0.05   # multiplicative slack (R/r)**growth_exponent
    degenerate_floor: float = 1e-30  # H below floor*scale is treated as zero
    w_zero_floor: float = 1e-8      # ||u - p|| below floor*||u|| means u == p numerically
    max_violation_fraction: float = 0.01


@dataclass(frozen=True)
class BlowupSettings:
    quadratic_cells: tuple = (8, 12, 16)
    cubic_cells: tuple = (8, 12, 16, 20, 24)
    projection_cells: float = 8.0
    eig_clip: float = 1e-8
    ordinary_min: float = 2.5
    anomalous_min: float = 1.9


@dataclass(frozen=True)
class Bands:
    regular: tuple = (1.4, 1.6)
    quadratic: tuple = (1.9, 2.1)
    cubic: tuple = (2.9, 3.1)
    high_min: float = 3.4
    high_tol: float = 0.1
    star_min: float = 1.6
    star_gap: float = 0.15
    clearance: float = 0.25


@dataclass(frozen=True)
class AnalysisConfig:
    frequency: FrequencySettings = field(default_factory=FrequencySettings)
    blowup: BlowupSettings = field(default_factory=BlowupSettings)
    bands: Bands = field(default_factory=Bands)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict | None) -> "AnalysisConfig":
        d = d or {}
        parts = {}
        for f in fields(cls):
            sub_cls = {"frequency": FrequencySettings, "blowup": BlowupSettings, "bands": Bands}[f.name]
            raw = dict(d.get(f.name, {}))
            known = {x.name for x in fields(sub_cls)}
            unknown = set(raw) - known
            if unknown:
                raise ValueError(f"unknown {f.name} setting(s): {sorted(unknown)}")
            for k, v in raw.items():
                if isinstance(v, list):
                    raw[k] = tuple(v)
            parts[f.name] = sub_cls(**raw)
        return cls(**parts)


DEFAULT = AnalysisConfig()
