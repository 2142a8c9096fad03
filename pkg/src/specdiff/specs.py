"""Ground-truth diffusion coefficient pairs on [0, 1]."""
import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

_CHECK_GRID = np.linspace(0.0, 1.0, 1025)


@dataclass(frozen=True)
class DiffusionSpec:
    """A known pair (sigma, b) with its smoothness-class parameters.

    ``sigma`` and ``b`` are vectorized callables on [0, 1].  ``s`` is the
    nominal Sobolev smoothness of sigma (b has smoothness s - 1), ``C``
    bounds the norms and ``c > 0`` is the ellipticity floor.  Sobolev
    membership itself is not certified numerically; only positivity,
    ellipticity and boundedness are checked on a grid.
    """
    sigma: Callable = field(repr=False)
    b: Callable = field(repr=False)
    s: float = 2.0
    C: float = 10.0
    c: float = 0.5
    name: str = "custom"

    def __post_init__(self):
        sig = np.asarray(self.sigma(_CHECK_GRID), dtype=float)
        drift = np.asarray(self.b(_CHECK_GRID), dtype=float)
        if not (np.all(np.isfinite(sig)) and np.all(np.isfinite(drift))):
            raise ValueError("sigma and b must be finite on [0, 1]")
        if sig.min() <= 0.0:
            raise ValueError("sigma must be strictly positive on [0, 1]")
        if sig.min() < self.c - 1e-12:
            raise ValueError(
                f"sigma drops to {sig.min():.6g}, below the ellipticity floor c={self.c}"
            )
        if self.s <= 1.0 or self.C <= 0.0 or self.c <= 0.0:
            raise ValueError("class parameters require s > 1 and C >= c > 0")

    def sigma2(self, x):
        v = np.asarray(self.sigma(x), dtype=float)
        return v * v


def _const(v):
    return lambda x: np.full_like(np.asarray(x, dtype=float), v)


def preset(name):
    """Named reference specs used throughout tests and experiments.

    - ``rbm``: reflected Brownian motion, sigma = 1, b = 0
    - ``rbm2``: reflected Brownian motion with sigma = sqrt(2)
    - ``linear_drift``: sigma = 1 with mean-reverting drift b(x) = 1 - 2x
    """
    if name == "rbm":
        return DiffusionSpec(_const(1.0), _const(0.0), s=2.0, C=2.0, c=1.0, name="rbm")
    if name == "rbm2":
        return DiffusionSpec(
            _const(np.sqrt(2.0)), _const(0.0), s=2.0, C=2.0, c=np.sqrt(2.0), name="rbm2"
        )
    if name == "linear_drift":
        return DiffusionSpec(
            _const(1.0),
            lambda x: 1.0 - 2.0 * np.asarray(x, dtype=float),
            s=2.0,
            C=2.0,
            c=1.0,
            name="linear_drift",
        )
    raise ValueError(f"unknown preset {name!r} (rbm, rbm2, linear_drift)")


PRESET_NAMES = ("rbm", "rbm2", "linear_drift")


def from_grid(sigma_values, b_values, x=None, s=2.0, C=10.0, name="tabulated"):
    """Spec from tabulated sigma and b, linearly interpolated."""
    sigma_values = np.atleast_1d(np.asarray(sigma_values, dtype=float))
    b_values = np.atleast_1d(np.asarray(b_values, dtype=float))
    if sigma_values.size == 1:
        sigma_values = np.repeat(sigma_values, 2)
    if b_values.size == 1:
        b_values = np.repeat(b_values, 2)
    if x is None:
        xs = np.linspace(0.0, 1.0, sigma_values.size)
        xb = np.linspace(0.0, 1.0, b_values.size)
    else:
        xs = xb = np.asarray(x, dtype=float)
    sig = lambda t: np.interp(t, xs, sigma_values)
    bfun = lambda t: np.interp(t, xb, b_values)
    return DiffusionSpec(sig, bfun, s=s, C=C, c=float(sigma_values.min()), name=name)


def from_json(source):
    """Load a spec from a JSON object, file path or JSON string.

    Accepted forms: ``{"name": "rbm"}`` for presets, or tabulated
    ``{"sigma": <number or list>, "b": <number or list>, "x": [...],
    "s": 2.0}``.
    """
    if isinstance(source, str):
        try:
            obj = json.loads(source)
        except json.JSONDecodeError:
            with open(source) as fh:
                obj = json.load(fh)
    else:
        obj = source
    if "name" in obj and "sigma" not in obj:
        return preset(obj["name"])
    if "sigma" not in obj or "b" not in obj:
        raise ValueError("spec JSON needs either a preset 'name' or 'sigma' and 'b'")
    return from_grid(
        obj["sigma"],
        obj["b"],
        x=obj.get("x"),
        s=float(obj.get("s", 2.0)),
        C=float(obj.get("C", 10.0)),
        name=obj.get("label", "tabulated"),
    )


def random_smooth_spec(rng, name=None):
    """A random smooth spec with sigma in [0.5, 2] and b in [-2, 2].

    Low-order cosine series keep the functions comfortably inside the
    smoothness class while exercising nonconstant coefficients.
    """
    a = rng.uniform(-1.0, 1.0, size=3)
    a *= 0.6 / max(1.0, np.abs(a).sum() / 0.75)
    base = rng.uniform(1.1, 1.4)
    d = rng.uniform(-1.0, 1.0, size=3)
    d *= 1.8 / max(1.0, np.abs(d).sum() / 1.0)

    def sig(x, base=base, a=a):
        x = np.asarray(x, dtype=float)
        out = np.full_like(x, base)
        for k, ak in enumerate(a, start=1):
            out += ak * np.cos(k * np.pi * x)
        return out

    def bfun(x, d=d):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for k, dk in enumerate(d, start=1):
            out += dk * np.cos(k * np.pi * x)
        return out

    lo = sig(_CHECK_GRID).min()
    return DiffusionSpec(sig, bfun, s=2.0, C=8.0, c=float(lo), name=name or "random")
