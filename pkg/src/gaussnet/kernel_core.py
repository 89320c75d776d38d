"""Gaussian kernel algebra.

A Gaussian sum is ``sum_j A_j exp(-|x - c_j|^2 / sigma_j^2)``.  Terms are kept
in generation order and evaluated in that order so results are reproducible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import InputError

# exp(-745) is the last representable subnormal; anything below underflows.
EXP_FLOOR = -745.0

_EVAL_CHUNK = 1 << 22


@dataclass(frozen=True)
class GaussianTerm:
    amplitude: float
    center: tuple[float, ...]
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0 or not math.isfinite(self.sigma):
            raise InputError(f"tension must be positive and finite, got {self.sigma}")
        if not all(math.isfinite(c) for c in self.center) or not math.isfinite(self.amplitude):
            raise InputError("Gaussian term has non-finite coordinates")


class GaussianSum:
    """Finite sum of isotropic Gaussians in ``d`` dimensions.

    Stored column-wise (amplitudes, centers, sigmas); the arrays are
    read-only after construction.
    """

    __slots__ = ("d", "amplitudes", "centers", "sigmas")

    def __init__(self, d: int, amplitudes, centers, sigmas):
        if d < 1:
            raise InputError(f"dimension must be positive, got {d}")
        a = np.array(amplitudes, dtype=float).reshape(-1)
        c = np.array(centers, dtype=float).reshape(-1, d) if len(a) else np.zeros((0, d))
        s = np.array(sigmas, dtype=float).reshape(-1)
        if not (len(a) == len(c) == len(s)):
            raise InputError("amplitudes, centers and sigmas differ in length")
        if np.any(~(s > 0)):
            raise InputError("all tensions must be positive")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(c)) and np.all(np.isfinite(s))):
            raise InputError("Gaussian sum has non-finite entries")
        for arr in (a, c, s):
            arr.setflags(write=False)
        self.d = int(d)
        self.amplitudes = a
        self.centers = c
        self.sigmas = s

    @classmethod
    def empty(cls, d: int) -> "GaussianSum":
        return cls(d, [], np.zeros((0, d)), [])

    @classmethod
    def from_terms(cls, d: int, terms: Iterable[GaussianTerm]) -> "GaussianSum":
        terms = list(terms)
        for t in terms:
            if len(t.center) != d:
                raise InputError(f"term of dimension {len(t.center)} in a {d}-dimensional sum")
        return cls(
            d,
            [t.amplitude for t in terms],
            np.array([t.center for t in terms], dtype=float).reshape(-1, d),
            [t.sigma for t in terms],
        )

    @classmethod
    def concatenate(cls, d: int, parts: Sequence["GaussianSum"]) -> "GaussianSum":
        parts = [p for p in parts if len(p)]
        if not parts:
            return cls.empty(d)
        if any(p.d != d for p in parts):
            raise InputError("cannot concatenate sums of different dimension")
        return cls(
            d,
            np.concatenate([p.amplitudes for p in parts]),
            np.concatenate([p.centers for p in parts]),
            np.concatenate([p.sigmas for p in parts]),
        )

    def __len__(self) -> int:
        return len(self.amplitudes)

    @property
    def terms(self) -> Iterator[GaussianTerm]:
        for a, c, s in zip(self.amplitudes, self.centers, self.sigmas):
            yield GaussianTerm(float(a), tuple(float(v) for v in c), float(s))

    def scaled(self, factor: float) -> "GaussianSum":
        return GaussianSum(self.d, self.amplitudes * factor, self.centers, self.sigmas)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GaussianSum):
            return NotImplemented
        return (
            self.d == other.d
            and np.array_equal(self.amplitudes, other.amplitudes)
            and np.array_equal(self.centers, other.centers)
            and np.array_equal(self.sigmas, other.sigmas)
        )

    def __repr__(self) -> str:
        return f"GaussianSum(d={self.d}, terms={len(self)})"

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "terms": [
                {"A": float(a), "c": [float(v) for v in c], "sigma": float(s)}
                for a, c, s in zip(self.amplitudes, self.centers, self.sigmas)
            ],
        }

    def to_json(self) -> str:
        # repr-based float encoding is shortest round-trip, so this is bit-exact
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict) -> "GaussianSum":
        try:
            d = int(data["d"])
            terms = data["terms"]
            amps = [float(t["A"]) for t in terms]
            centers = [[float(v) for v in t["c"]] for t in terms]
            sigmas = [float(t["sigma"]) for t in terms]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed GaussianSum document: {exc}") from exc
        if any(len(c) != d for c in centers):
            raise InputError("center dimension does not match 'd'")
        return cls(d, amps, np.array(centers, dtype=float).reshape(-1, d), sigmas)

    @classmethod
    def from_json(cls, text: str) -> "GaussianSum":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class CubeFrame:
    """Affine frame of the cube ``corner + [0, side]^d``."""

    corner: tuple[float, ...]
    side: float

    def __post_init__(self):
        if not self.side > 0:
            raise InputError(f"cube sidelength must be positive, got {self.side}")

    @property
    def d(self) -> int:
        return len(self.corner)

    @property
    def volume(self) -> float:
        return self.side ** self.d


def is_single_point(x, d: int) -> bool:
    nd = np.ndim(x)
    return nd == 0 or (nd == 1 and d > 1)


def as_points(x, d: int) -> np.ndarray:
    """Coerce ``x`` to an ``(n, d)`` float array, validating the dimension."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if d == 1 else arr.reshape(1, -1)
    if arr.shape[-1] != d:
        raise InputError(f"point dimension {arr.shape[-1]} does not match d={d}")
    return arr.reshape(-1, d)


def eval_gaussian_sum(s: GaussianSum, x) -> np.ndarray | float:
    """Evaluate ``s`` at a point (returns float) or at an ``(n, d)`` array of points."""
    scalar = is_single_point(x, s.d)
    pts = as_points(x, s.d)
    out = np.zeros(len(pts))
    if len(s):
        inv2 = 1.0 / s.sigmas**2
        step = max(1, _EVAL_CHUNK // max(1, len(s)))
        for lo in range(0, len(pts), step):
            p = pts[lo : lo + step]
            r2 = np.zeros((len(p), len(s)))
            for axis in range(s.d):
                diff = p[:, axis, None] - s.centers[None, :, axis]
                r2 += diff * diff
            expo = -r2 * inv2
            # terms below the double-precision floor contribute exactly zero
            vals = np.where(expo < EXP_FLOOR, 0.0, np.exp(np.maximum(expo, EXP_FLOOR)))
            out[lo : lo + step] = vals @ s.amplitudes
    return float(out[0]) if scalar else out


def gaussian_fourier(sigma: float, xi) -> np.ndarray | float:
    """Fourier transform ``(sigma sqrt(pi))^d exp(-sigma^2 |xi|^2 / 4)`` of ``exp(-|x/sigma|^2)``.

    ``xi`` is a point in R^d (1-D array of length d) or an ``(n, d)`` array; a
    scalar is taken as a 1-D frequency.
    """
    if not sigma > 0:
        raise InputError(f"sigma must be positive, got {sigma}")
    arr = np.asarray(xi, dtype=float)
    if arr.ndim == 0:
        return float(sigma * math.sqrt(math.pi) * math.exp(-(sigma**2) * float(arr) ** 2 / 4))
    d = arr.shape[-1]
    r2 = np.sum(arr**2, axis=-1)
    val = (sigma * math.sqrt(math.pi)) ** d * np.exp(-(sigma**2) * r2 / 4)
    return float(val) if arr.ndim == 1 else val


def affine_pullback_point(x, frame: CubeFrame) -> np.ndarray:
    """Map ``x`` to ``(x - corner) / side``."""
    arr = np.asarray(x, dtype=float)
    if arr.shape[-1] != frame.d:
        raise InputError(f"point dimension {arr.shape[-1]} does not match cube dimension {frame.d}")
    return (arr - np.asarray(frame.corner)) / frame.side


def map_sum_to_cube(s: GaussianSum, frame: CubeFrame) -> GaussianSum:
    """Push a reference-frame sum onto ``frame``: ``(A, c, sigma) -> (A, corner + side*c, side*sigma)``."""
    if s.d != frame.d:
        raise InputError("sum and cube dimensions differ")
    return GaussianSum(
        s.d,
        s.amplitudes,
        np.asarray(frame.corner)[None, :] + frame.side * s.centers,
        frame.side * s.sigmas,
    )
