"""Seeded synthetic scenarios.

Randomness comes from the Philox4x64-10 counter-based generator keyed by
``(seed, stream)``, with stream 0 for real and 1 for generated sets. Blocks are
produced for counters 1, 2, 3, ... and each block yields four 64-bit words. Uniform doubles are ``((u >> 11) + 0.5) * 2**-53`` for each
raw 64-bit output ``u`` (never exactly 0 or 1). Normal draws use the Box-Muller
transform on consecutive uniform pairs, both outputs used, filling the
array row-major.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .io import VectorSet

__all__ = ["RNG_ALGORITHM", "ScenarioSpec", "PhiloxStream", "gen_gaussian",
           "gen_sphere_surface", "gen_hypercube", "gen_hypersphere_pair", "generate",
           "HYPERSPHERE_DEFAULTS"]

RNG_ALGORITHM = "philox4x64-10/u53/box-muller"

KINDS = ("gaussian", "sphere_surface", "hypercube", "hypersphere_pair")
_STREAM = {"real": 0, "generated": 1}

HYPERSPHERE_DEFAULTS = {"r1": 1.0, "r2": 2.0, "w1": 0.6, "w2": 0.4, "separation": 10.0}


class PhiloxStream:
    """Uniform and normal draws from one Philox key."""

    def __init__(self, seed: int, stream: int = 0):
        if seed < 0 or stream < 0:
            raise ValueError("seed and stream must be non-negative")
        key = np.array([seed, stream], dtype=np.uint64)
        self._bits = np.random.Philox(key=key)

    def uniform(self, size: int) -> np.ndarray:
        u = self._bits.random_raw(size).astype(np.uint64)
        return ((u >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53

    def normal(self, size: int) -> np.ndarray:
        pairs = (size + 1) // 2
        u = self.uniform(2 * pairs).reshape(pairs, 2)
        rad = np.sqrt(-2.0 * np.log(u[:, 0]))
        ang = 2.0 * np.pi * u[:, 1]
        z = np.empty((pairs, 2))
        z[:, 0] = rad * np.cos(ang)
        z[:, 1] = rad * np.sin(ang)
        return z.ravel()[:size]


@dataclass
class ScenarioSpec:
    """Parameters of one synthetic scenario.

    ``params`` keys by kind: gaussian ``std``, ``mean``; sphere_surface
    ``radius``, ``center`` (scalar applied to the first coordinate or full
    vector); hypercube ``side``; hypersphere_pair ``r1``, ``r2``, ``w1``,
    ``w2``, ``separation`` (second center is ``separation * e_1``).
    """

    kind: str
    d: int
    n: int
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        if self.d < 1 or self.n < 1:
            raise ValueError(f"need d >= 1 and n >= 1, got d={self.d}, n={self.n}")
        if self.kind == "hypersphere_pair":
            p = {**HYPERSPHERE_DEFAULTS, **self.params}
            if p["r1"] <= 0 or p["r2"] <= 0:
                raise ValueError("radii must be positive")
            if p["r1"] == p["r2"]:
                raise ValueError("hypersphere_pair needs r1 != r2")
            if p["w1"] < 0 or p["w2"] < 0 or abs(p["w1"] + p["w2"] - 1) > 1e-12:
                raise ValueError("mixture weights must be non-negative and sum to 1")
            self.params = p

    def metadata(self) -> dict:
        return {"kind": self.kind, "d": self.d, "n": self.n, "seed": self.seed,
                "params": self.params, "rng": RNG_ALGORITHM}


def _stream(spec: ScenarioSpec, role: str = "real") -> PhiloxStream:
    return PhiloxStream(spec.seed, _STREAM[role])


def _center(c, d):
    if c is None:
        return np.zeros(d)
    c = np.asarray(c, dtype=np.float64)
    if c.ndim == 0:
        out = np.zeros(d)
        out[0] = c
        return out
    if c.shape != (d,):
        raise ValueError(f"center must be a scalar or have length {d}")
    return c


def _sphere_rows(rng: PhiloxStream, n: int, d: int, radius: float, center) -> np.ndarray:
    g = rng.normal(n * d).reshape(n, d)
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    return radius * (g / norms) + _center(center, d)


def gen_gaussian(spec: ScenarioSpec, role: str = "real") -> VectorSet:
    rng = _stream(spec, role)
    std = float(spec.params.get("std", 1.0))
    x = std * rng.normal(spec.n * spec.d).reshape(spec.n, spec.d)
    x += _center(spec.params.get("mean"), spec.d)
    return VectorSet(x, label=f"gaussian(d={spec.d},n={spec.n},seed={spec.seed})",
                     meta=spec.metadata())


def gen_sphere_surface(spec: ScenarioSpec, role: str = "real") -> VectorSet:
    rng = _stream(spec, role)
    x = _sphere_rows(rng, spec.n, spec.d, float(spec.params.get("radius", 1.0)),
                     spec.params.get("center"))
    return VectorSet(x, label=f"sphere_surface(d={spec.d},n={spec.n},seed={spec.seed})",
                     meta=spec.metadata())


def gen_hypercube(spec: ScenarioSpec, role: str = "real") -> VectorSet:
    rng = _stream(spec, role)
    side = float(spec.params.get("side", 1.0))
    x = side * rng.uniform(spec.n * spec.d).reshape(spec.n, spec.d)
    return VectorSet(x, label=f"hypercube(d={spec.d},n={spec.n},seed={spec.seed})",
                     meta=spec.metadata())


def mode_counts(n: int, w1: float, w2: float):
    """``(n1, n2)`` with ``n2 = round(w2 * n)`` and the remainder in mode 1."""
    n2 = int(round(w2 * n))
    return n - n2, n2


def gen_hypersphere_pair(spec: ScenarioSpec, role: str = "real") -> VectorSet:
    """Two-sphere mixture; ``generated`` swaps the radii and the proportions.

    real:      w1 on S(c1, r1),  w2 on S(c2, r2)
    generated: w2 on S(c1, r2),  w1 on S(c2, r1)

    Rows of the first mode come first.
    """
    if role not in _STREAM:
        raise ValueError(f"role must be 'real' or 'generated', got {role!r}")
    p = spec.params
    c1 = np.zeros(spec.d)
    c2 = np.zeros(spec.d)
    c2[0] = p["separation"]
    if role == "real":
        (n1, n2), ra, rb = mode_counts(spec.n, p["w1"], p["w2"]), p["r1"], p["r2"]
    else:
        (n1, n2), ra, rb = mode_counts(spec.n, p["w2"], p["w1"]), p["r2"], p["r1"]
    rng = _stream(spec, role)
    x = np.vstack([_sphere_rows(rng, n1, spec.d, ra, c1),
                   _sphere_rows(rng, n2, spec.d, rb, c2)])
    return VectorSet(x, label=f"hypersphere_pair[{role}](d={spec.d},n={spec.n},seed={spec.seed})",
                     meta={**spec.metadata(), "role": role, "mode_counts": [n1, n2]})


_GENERATORS = {"gaussian": gen_gaussian, "sphere_surface": gen_sphere_surface,
               "hypercube": gen_hypercube, "hypersphere_pair": gen_hypersphere_pair}


def generate(spec: ScenarioSpec, role: str = "real") -> VectorSet:
    return _GENERATORS[spec.kind](spec, role)
