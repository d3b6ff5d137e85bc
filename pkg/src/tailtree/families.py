"""Parametric bivariate tail dependence families and their increment laws.

Two families are built in: the Hüsler-Reiss family (one positive parameter
``gamma``) and the two-atom special case of the asymmetric logistic family
(one weight per endpoint, oriented parent -> child). Each family supplies

* the bivariate stable tail dependence function l(x, y),
* the diagonal tail dependence coefficient 2 - l(1, 1),
* the law of the multiplicative increment M obtained as the right derivative
  of x -> l(x, 1), and
* a sampler for that law.

Extensions must provide the same four pieces.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import ndtr


@dataclass(frozen=True)
class HuslerReiss:
    gamma: float

    def __post_init__(self):
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError(f"gamma must be finite and > 0, got {self.gamma}")


@dataclass(frozen=True)
class AsymLogisticSpecial:
    psi_p: float
    psi_s: float

    def __post_init__(self):
        for name, v in (("psi_p", self.psi_p), ("psi_s", self.psi_s)):
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    def reversed(self) -> "AsymLogisticSpecial":
        return AsymLogisticSpecial(self.psi_s, self.psi_p)


EdgeFamily = Union[HuslerReiss, AsymLogisticSpecial]


@dataclass(frozen=True)
class Lognormal:
    mu: float
    sigma2: float

    def __post_init__(self):
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be > 0")


@dataclass(frozen=True)
class TwoAtom:
    """Mass ``p0`` at zero and ``1 - p0`` at ``atom``."""

    p0: float
    atom: float

    def __post_init__(self):
        if not (0.0 <= self.p0 <= 1.0):
            raise ValueError("p0 must be a probability")
        if self.atom < 0:
            raise ValueError("atom must be nonnegative")


IncrementLaw = Union[Lognormal, TwoAtom]


def stdf_pair(family: EdgeFamily, x: float, y: float) -> float:
    """Bivariate stable tail dependence function at (x, y) >= 0."""
    if x < 0 or y < 0 or not (np.isfinite(x) and np.isfinite(y)):
        raise ValueError(f"arguments must be finite and nonnegative, got ({x}, {y})")
    if isinstance(family, HuslerReiss):
        if x == 0.0 or y == 0.0:
            return x + y
        s = np.sqrt(family.gamma)
        r = np.log(x / y) / s
        return float(x * ndtr(r + s / 2.0) + y * ndtr(-r + s / 2.0))
    if isinstance(family, AsymLogisticSpecial):
        p, q = family.psi_p, family.psi_s
        return float((1.0 - p) * x + (1.0 - q) * y + max(p * x, q * y))
    raise TypeError(f"unknown family {family!r}")


def stdf_pair_grid(family: EdgeFamily, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Vectorized ``stdf_pair`` over broadcastable arrays."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x < 0) or np.any(y < 0):
        raise ValueError("arguments must be nonnegative")
    if isinstance(family, HuslerReiss):
        s = np.sqrt(family.gamma)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.log(x / y) / s
        out = np.where(
            (x == 0) | (y == 0),
            x + y,
            x * ndtr(r + s / 2.0) + y * ndtr(-r + s / 2.0),
        )
        return out
    if isinstance(family, AsymLogisticSpecial):
        p, q = family.psi_p, family.psi_s
        return (1.0 - p) * x + (1.0 - q) * y + np.maximum(p * x, q * y)
    raise TypeError(f"unknown family {family!r}")


def tdc_pair(family: EdgeFamily) -> float:
    """Diagonal tail dependence coefficient 2 - l(1, 1)."""
    return 2.0 - stdf_pair(family, 1.0, 1.0)


def increment_law(family: EdgeFamily) -> IncrementLaw:
    """Law of the edge increment, read off the right derivative of l(x, 1)."""
    if isinstance(family, HuslerReiss):
        return Lognormal(mu=-family.gamma / 2.0, sigma2=family.gamma)
    if isinstance(family, AsymLogisticSpecial):
        if family.psi_p == 0.0:
            return TwoAtom(p0=1.0, atom=0.0)
        return TwoAtom(p0=1.0 - family.psi_p, atom=family.psi_s / family.psi_p)
    raise TypeError(f"unknown family {family!r}")


def increment_cdf(law: IncrementLaw, x: float) -> float:
    if x < 0:
        return 0.0
    if isinstance(law, Lognormal):
        if x == 0.0:
            return 0.0
        return float(ndtr((np.log(x) - law.mu) / np.sqrt(law.sigma2)))
    if isinstance(law, TwoAtom):
        if law.atom == 0.0:
            return 1.0
        return law.p0 if x < law.atom else 1.0
    raise TypeError(f"unknown law {law!r}")


def increment_mean(law: IncrementLaw) -> float:
    if isinstance(law, Lognormal):
        return float(np.exp(law.mu + law.sigma2 / 2.0))
    if isinstance(law, TwoAtom):
        return (1.0 - law.p0) * law.atom
    raise TypeError(f"unknown law {law!r}")


def sample_increment(law: IncrementLaw, rng: np.random.Generator, size=None):
    """Draw from the increment law; reproducible through the caller's rng."""
    if isinstance(law, Lognormal):
        return np.exp(law.mu + np.sqrt(law.sigma2) * rng.standard_normal(size))
    if isinstance(law, TwoAtom):
        u = rng.random(size)
        return np.where(u < law.p0, 0.0, law.atom) if size is not None else (0.0 if u < law.p0 else law.atom)
    raise TypeError(f"unknown law {law!r}")


def family_to_dict(family: EdgeFamily) -> dict:
    if isinstance(family, HuslerReiss):
        return {"family": "hr", "gamma": family.gamma}
    if isinstance(family, AsymLogisticSpecial):
        return {"family": "alog", "psi_p": family.psi_p, "psi_s": family.psi_s}
    raise TypeError(f"unknown family {family!r}")


def family_from_dict(obj: dict) -> EdgeFamily:
    kind = obj.get("family")
    if kind == "hr":
        return HuslerReiss(float(obj["gamma"]))
    if kind == "alog":
        return AsymLogisticSpecial(float(obj["psi_p"]), float(obj["psi_s"]))
    raise ValueError(f"unknown family tag {kind!r}")


def family_to_json(family: EdgeFamily) -> str:
    return json.dumps(family_to_dict(family))


def family_from_json(text: str) -> EdgeFamily:
    return family_from_dict(json.loads(text))
