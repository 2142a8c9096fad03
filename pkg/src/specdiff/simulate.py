"""Low-frequency observations of the reflected diffusion.

Two samplers are provided.  The Euler mode advances a fine-step chain
and folds each proposal back into [0, 1]; its only systematic error is
the weak time-discretization bias, which vanishes as the substep count
grows.  The exact mode draws each transition from the forward solver's
conditional density by inverse CDF, so the chain has the discrete-time
law of the true diffusion up to the oracle grid resolution; rate studies
default to it so that measured errors reflect the estimator, not the
simulator.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NumericalError
from .oracle import generator_eigs, invariant_density, transition_density
from .quad import cumulative_trapezoid

DEFAULT_SUBSTEPS = 50
# burn-in for non-stationary starts, in units of the relaxation time
BURNIN_RELAXATIONS = 10.0


def fold(x):
    """Map a real proposal into [0, 1] by reflection at both ends."""
    if np.isscalar(x):
        return kernels.fold(float(x))
    x = np.asarray(x, dtype=float)
    r = np.fmod(x, 2.0)
    r = np.where(r < 0.0, r + 2.0, r)
    return np.where(r > 1.0, 2.0 - r, r)


@dataclass(frozen=True)
class SamplePath:
    """Equidistant observations of the chain.

    ``values[k]`` is the state at time k * delta; all values lie in
    [0, 1] and the path has at least two entries.
    """
    delta: float
    values: np.ndarray
    spec_id: str = ""
    seed: int = 0
    mode: str = "euler"

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.shape[0] < 2:
            raise ValueError("a sample path needs at least two observations")
        if vals.min() < 0.0 or vals.max() > 1.0:
            raise ValueError("observations must lie in [0, 1]")
        if self.delta <= 0.0:
            raise ValueError("delta must be positive")
        object.__setattr__(self, "values", vals)

    @property
    def n_steps(self):
        """Number of transitions N (one less than the observation count)."""
        return self.values.shape[0] - 1

    def save_csv(self, path):
        with open(path, "w") as fh:
            fh.write(
                f"# delta={float(self.delta)!r} spec={self.spec_id} "
                f"seed={self.seed} mode={self.mode}\n"
            )
            for v in self.values:
                fh.write(f"{float(v)!r}\n")

    @classmethod
    def load_csv(cls, path):
        meta = {}
        values = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    for tok in line[1:].split():
                        if "=" in tok:
                            k, v = tok.split("=", 1)
                            meta[k] = v
                    continue
                values.append(float(line))
        if "delta" not in meta:
            raise ValueError(f"{path}: missing '# delta=...' header line")
        return cls(
            delta=float(meta["delta"]),
            values=np.asarray(values),
            spec_id=meta.get("spec", ""),
            seed=int(meta.get("seed", 0)),
            mode=meta.get("mode", "euler"),
        )


def _rng(seed):
    # Philox is counter-based: distinct seeds give independent streams.
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def _tabulate(spec, table_size):
    xs = np.linspace(0.0, 1.0, table_size + 1)
    return (
        np.ascontiguousarray(spec.sigma(xs), dtype=float),
        np.ascontiguousarray(spec.b(xs), dtype=float),
    )


def simulate_euler(
    spec,
    delta,
    n_obs,
    substeps=DEFAULT_SUBSTEPS,
    seed=0,
    init="stationary",
    table_size=4096,
    oracle_n=1024,
):
    """Observations from the folded Euler scheme.

    Parameters
    ----------
    spec : DiffusionSpec
    delta : float
        Sampling interval between recorded observations.
    n_obs : int
        Number of transitions N; the path holds N + 1 values.
    substeps : int
        Internal Euler steps per observation (weak bias ~ delta/substeps).
    init : "stationary" or float
        Stationary draws start from the invariant law; a float starts at
        that point and discards a burn-in of ~10 relaxation times.
    """
    if substeps < 1:
        raise ValueError("substeps must be at least 1")
    if delta <= 0.0 or n_obs < 1:
        raise ValueError("need delta > 0 and n_obs >= 1")
    rng = _rng(seed)
    sigma_tab, b_tab = _tabulate(spec, table_size)
    dt = delta / substeps
    sqdt = math.sqrt(dt)

    burn = 0
    if init == "stationary":
        grid, mu, _ = invariant_density(spec, oracle_n)
        cdf = cumulative_trapezoid(mu, grid)
        cdf /= cdf[-1]
        from .oracle import invert_tabulated_cdf

        x0 = float(invert_tabulated_cdf(cdf, grid, rng.random()))
    else:
        x0 = float(init)
        if not 0.0 <= x0 <= 1.0:
            raise ValueError("fixed initial state must lie in [0, 1]")
        dec = generator_eigs(spec, max(256, oracle_n // 2), 2)
        burn = math.ceil(BURNIN_RELAXATIONS / (abs(dec.nu[1]) * delta))

    total = n_obs + burn
    normals = rng.standard_normal(total * substeps)
    out = np.empty(total + 1)
    kernels.euler_path(x0, normals, dt, sqdt, substeps, sigma_tab, b_tab, out)
    return SamplePath(
        delta=delta,
        values=out[burn:].copy(),
        spec_id=spec.name,
        seed=seed,
        mode="euler",
    )


def conditional_cdfs(dec, delta, row_tol=1e-6):
    """Row-wise CDFs of the transition density on the oracle grid."""
    p = transition_density(dec, delta)
    mass = p @ _trap_w(dec.grid)
    if np.abs(mass - 1.0).max() > row_tol:
        raise NumericalError(
            f"transition rows integrate to 1 only within "
            f"{np.abs(mass - 1.0).max():.2e}; refine the oracle grid"
        )
    rows = np.empty_like(p)
    for i in range(p.shape[0]):
        c = cumulative_trapezoid(np.maximum(p[i], 0.0), dec.grid)
        rows[i] = c / c[-1]
    return rows


def _trap_w(grid):
    from .quad import trapezoid_weights

    return trapezoid_weights(grid)


def simulate_exact(spec, delta, n_obs, seed=0, dec=None, n_grid=512, n_eigs=64):
    """Observations drawn from the forward solver's transition density.

    Removes time-discretization bias entirely; the only approximation is
    the oracle grid (inverse CDFs interpolated between rows).  Pass a
    precomputed decomposition to amortize the eigensolve across
    replicates.
    """
    if delta <= 0.0 or n_obs < 1:
        raise ValueError("need delta > 0 and n_obs >= 1")
    if dec is None:
        dec = generator_eigs(spec, n_grid, min(n_eigs, n_grid // 4))
    rows = conditional_cdfs(dec, delta)
    rng = _rng(seed)
    draws = rng.random(n_obs + 1)
    out = np.empty(n_obs + 1)
    kernels.exact_path(draws[0], draws[1:], dec.grid, dec.mu_cdf, rows, out)
    return SamplePath(
        delta=delta, values=out, spec_id=spec.name, seed=seed, mode="exact"
    )
