"""End-to-end experiments: simulate, estimate, compare against truth.

A rate study runs a grid of sample sizes with seeded replicates, collects
interior L2 errors of the coefficient estimates against the known spec,
and fits log-log slopes of the per-size median errors to compare with
the theoretical exponents -s/(2s+3) for sigma^2, -(s-1)/(2s+3) for the
drift and -s/(2s+1) for the invariant density.  Replicates are
independent tasks (own seed, immutable shared inputs) joined only at
aggregation, and a study is a deterministic function of its config.
"""
import dataclasses
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import estimate as est
from . import simulate as sim
from . import specs as specs_mod
from .basis import build_basis
from .oracle import generator_eigs, invariant_density
from .quad import trapezoid_weights

RECORD_COLUMNS = (
    "N", "seed", "err_sigma2", "err_b", "kappa1", "degenerate",
    "err_mu", "nu1", "clip_count", "J",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Configuration of a simulation-estimation study.

    ``j_level`` fixes the resolution level outright; otherwise the level
    follows the ``j_target`` rule of the level selector per sample size.
    Rate studies default to the density-target rule: its level actually
    steps inside desk-scale N grids, so the measured error trend shows
    the bias-variance balance instead of a pure variance decay.
    """
    spec: str = "rbm"
    delta: float = 0.1
    n_values: tuple = (2048, 8192, 32768)
    replicates: int = 20
    seed_base: int = 0
    s: float = 2.0
    interval: tuple = (0.1, 0.9)
    mode: str = "exact"
    substeps: int = sim.DEFAULT_SUBSTEPS
    clip_frac: float = 0.05
    grid_size: int = 512
    order: int = 4
    j_level: int | None = None
    j_target: str = "density"
    oracle_n: int = 512
    out_dir: str | None = None

    def __post_init__(self):
        n_values = tuple(int(n) for n in self.n_values)
        object.__setattr__(self, "n_values", n_values)
        object.__setattr__(self, "interval", tuple(float(v) for v in self.interval))
        if any(b <= a for a, b in zip(n_values, n_values[1:])):
            raise ValueError("n_values must be strictly increasing")
        if self.replicates < 1:
            raise ValueError("need at least one replicate")
        if self.delta <= 0.0:
            raise ValueError("delta must be positive")
        if self.mode not in ("exact", "euler"):
            raise ValueError("mode must be 'exact' or 'euler'")

    def level_for(self, n_obs):
        if self.j_level is not None:
            return self.j_level
        return est.choose_J(n_obs, self.s, target=self.j_target, order=self.order)

    def replicate_seed(self, n_index, replicate):
        # distinct integers per (study, size, replicate); Philox streams
        # for distinct seeds are independent
        return self.seed_base * 1_000_003 + n_index * 10_007 + replicate

    @classmethod
    def from_json(cls, path, **overrides):
        with open(path) as fh:
            data = json.load(fh)
        data.update({k: v for k, v in overrides.items() if v is not None})
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class RunRecord:
    """One simulate-estimate-compare outcome."""
    n_obs: int
    seed: int
    err_sigma2: float
    err_b: float
    err_mu: float
    kappa1: float
    nu1: float
    clip_count: int
    degenerate: bool
    level: int


def _l2_error(grid, values, truth_values):
    w = trapezoid_weights(grid)
    diff = values - truth_values
    return float(np.sqrt(np.sum(w * diff * diff)))


class _SpecContext:
    """Shared immutable inputs for all replicates of one spec."""

    def __init__(self, config):
        self.config = config
        self.spec = specs_mod.from_json({"name": config.spec}) \
            if config.spec in specs_mod.PRESET_NAMES else specs_mod.from_json(config.spec)
        self.dec = generator_eigs(
            self.spec, config.oracle_n, min(64, config.oracle_n // 4)
        )
        grid, mu, _ = invariant_density(self.spec, 1024)
        self.mu_grid = grid
        self.mu_truth = mu
        self._bases = {}

    def basis(self, level):
        if level not in self._bases:
            self._bases[level] = build_basis(level, self.config.order)
        return self._bases[level]


def run_single(config, n_obs=None, seed=None, context=None):
    """One replicate: simulate, estimate, compare to the known truth.

    Deterministic in (config, n_obs, seed).  Degenerate estimates yield a
    record with the flag set and NaN error fields.
    """
    if context is None:
        context = _SpecContext(config)
    if n_obs is None:
        n_obs = config.n_values[0]
    if seed is None:
        seed = config.replicate_seed(0, 0)

    if config.mode == "exact":
        path = sim.simulate_exact(
            context.spec, config.delta, n_obs, seed=seed, dec=context.dec
        )
    else:
        path = sim.simulate_euler(
            context.spec, config.delta, n_obs,
            substeps=config.substeps, seed=seed,
        )
    level = config.level_for(n_obs)
    result = est.estimate_path(
        path,
        basis=context.basis(level),
        interval=config.interval,
        grid_size=config.grid_size,
        clip_frac=config.clip_frac,
    )
    basis = context.basis(level)
    mu_hat = basis.reconstruct(result.mu_coeffs, context.mu_grid)
    err_mu = _l2_error(context.mu_grid, mu_hat, context.mu_truth)
    if result.degenerate:
        return RunRecord(
            n_obs=n_obs, seed=seed,
            err_sigma2=float("nan"), err_b=float("nan"), err_mu=err_mu,
            kappa1=result.kappa1, nu1=float("nan"),
            clip_count=result.clip_count, degenerate=True, level=level,
        )
    err_s = _l2_error(result.grid, result.sigma2, context.spec.sigma2(result.grid))
    err_b = _l2_error(result.grid, result.b, np.asarray(context.spec.b(result.grid), dtype=float))
    return RunRecord(
        n_obs=n_obs, seed=seed,
        err_sigma2=err_s, err_b=err_b, err_mu=err_mu,
        kappa1=result.kappa1, nu1=result.nu1,
        clip_count=result.clip_count, degenerate=False, level=level,
    )


def _ols_loglog(n_values, medians):
    x = np.log(np.asarray(n_values, dtype=float))
    y = np.log(np.asarray(medians, dtype=float))
    xc = x - x.mean()
    sxx = float(np.sum(xc * xc))
    slope = float(np.sum(xc * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (slope * x + intercept)
    dof = x.size - 2
    stderr = float(np.sqrt(np.sum(resid * resid) / dof / sxx)) if dof > 0 else float("nan")
    return {"slope": slope, "stderr": stderr, "intercept": intercept}


@dataclass(frozen=True)
class RateStudyResult:
    config: ExperimentConfig
    records: list
    medians: dict
    fits: dict
    exponents: dict
    degenerate_fraction: float
    fit_reason: str = ""

    def theoretical_exponent(self, which):
        return self.exponents[which]


def rate_study(config):
    """Run the full (N, replicate) grid and fit the error trends.

    Medians (robust to the heavy tails of near-degenerate eigenproblems)
    are fitted by OLS in log-log coordinates; slopes come with standard
    errors and sit next to the theoretical exponents in the result.  The
    fit uses only sizes whose median is over nondegenerate replicates;
    fewer than two such sizes yields a null fit with a reason string.
    """
    context = _SpecContext(config)
    records = []
    for i, n_obs in enumerate(config.n_values):
        for r in range(config.replicates):
            records.append(
                run_single(config, n_obs, config.replicate_seed(i, r), context)
            )
    return aggregate(config, records)


def aggregate(config, records):
    """Fold per-replicate records into medians, fits and exponents."""
    s = config.s
    exponents = {
        "sigma2": -s / (2.0 * s + 3.0),
        "b": -(s - 1.0) / (2.0 * s + 3.0),
        "mu": -s / (2.0 * s + 1.0),
    }
    medians = {}
    for n_obs in config.n_values:
        good = [rec for rec in records if rec.n_obs == n_obs and not rec.degenerate]
        if good:
            medians[n_obs] = {
                "err_sigma2": float(np.median([g.err_sigma2 for g in good])),
                "err_b": float(np.median([g.err_b for g in good])),
                "err_mu": float(np.median([g.err_mu for g in good])),
                "count": len(good),
            }
    n_deg = sum(rec.degenerate for rec in records)
    fits = {}
    reason = ""
    usable = [n for n in config.n_values if n in medians]
    if len(usable) < 2:
        fits = {"sigma2": None, "b": None, "mu": None}
        reason = "fewer than two sample sizes with nondegenerate medians"
    else:
        for key in ("sigma2", "b", "mu"):
            fits[key] = _ols_loglog(usable, [medians[n][f"err_{key}"] for n in usable])
    return RateStudyResult(
        config=config,
        records=records,
        medians=medians,
        fits=fits,
        exponents=exponents,
        degenerate_fraction=n_deg / len(records),
        fit_reason=reason,
    )


def _format_float(v):
    return repr(float(v))


def emit_report(result, out_dir=None):
    """Write records CSV, summary JSON and a gnuplot-ready data file.

    Returns the three paths.  The CSV round-trips: reading it back
    reproduces the in-memory records exactly (floats written with repr).
    """
    out_dir = out_dir or result.config.out_dir or os.environ.get(
        "SPECDIFF_OUTDIR", "."
    )
    os.makedirs(out_dir, exist_ok=True)
    records_path = os.path.join(out_dir, "records.csv")
    summary_path = os.path.join(out_dir, "summary.json")
    data_path = os.path.join(out_dir, "loglog.dat")

    with open(records_path, "w") as fh:
        fh.write(",".join(RECORD_COLUMNS) + "\n")
        for rec in result.records:
            fh.write(",".join([
                str(rec.n_obs), str(rec.seed),
                _format_float(rec.err_sigma2), _format_float(rec.err_b),
                _format_float(rec.kappa1), str(int(rec.degenerate)),
                _format_float(rec.err_mu), _format_float(rec.nu1),
                str(rec.clip_count), str(rec.level),
            ]) + "\n")

    summary = {
        "config": result.config.to_dict(),
        "theoretical_exponents": result.exponents,
        "medians": {str(k): v for k, v in result.medians.items()},
        "fit": result.fits if result.fit_reason == "" else None,
        "fit_reason": result.fit_reason or None,
        "degenerate_fraction": result.degenerate_fraction,
    }
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")

    with open(data_path, "w") as fh:
        fh.write("# N median_err_sigma2 median_err_b median_err_mu\n")
        fh.write("# log-log fit slopes: " + json.dumps(
            {k: (v["slope"] if v else None) for k, v in result.fits.items()}
        ) + "\n")
        for n_obs in result.config.n_values:
            if n_obs in result.medians:
                m = result.medians[n_obs]
                fh.write(
                    f"{n_obs} {m['err_sigma2']!r} {m['err_b']!r} {m['err_mu']!r}\n"
                )
    return records_path, summary_path, data_path


def load_records(path):
    """Read back a records CSV written by emit_report."""
    records = []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        assert header == list(RECORD_COLUMNS), "unexpected records header"
        for line in fh:
            parts = line.strip().split(",")
            records.append(RunRecord(
                n_obs=int(parts[0]), seed=int(parts[1]),
                err_sigma2=float(parts[2]), err_b=float(parts[3]),
                kappa1=float(parts[4]), degenerate=bool(int(parts[5])),
                err_mu=float(parts[6]), nu1=float(parts[7]),
                clip_count=int(parts[8]), level=int(parts[9]),
            ))
    return records


def plugin_floor(spec_name="rbm", delta=0.1, level=6, interval=(0.1, 0.9),
                 grid_size=512, oracle_n=2048):
    """Noise-free pipeline floor: plug the oracle eigenpair straight in.

    Projects the true eigenfunction and density into the approximation
    space, uses the exact transition eigenvalue, and runs the plug-in
    formulas; the returned errors isolate projection plus formula error
    with no sampling noise at all.
    """
    spec = specs_mod.preset(spec_name)
    dec = generator_eigs(spec, oracle_n, 8)
    basis = build_basis(level)
    u1_coeffs = basis.project(lambda x: dec.u_at(1, x))
    mu_coeffs = basis.project(lambda x: np.interp(x, dec.grid, dec.mu))
    kappa1 = float(np.exp(dec.nu[1] * delta))
    pr = est.plug_in(
        kappa1, u1_coeffs, mu_coeffs, basis, delta,
        interval=interval, grid_size=grid_size,
    )
    err_s = _l2_error(pr.grid, pr.sigma2, spec.sigma2(pr.grid))
    err_b = _l2_error(pr.grid, pr.b, np.asarray(spec.b(pr.grid), dtype=float))
    return {
        "err_sigma2": err_s,
        "err_b": err_b,
        "max_err_sigma2": float(np.abs(pr.sigma2 - spec.sigma2(pr.grid)).max()),
        "max_err_b": float(np.abs(pr.b - np.asarray(spec.b(pr.grid))).max()),
        "clip_count": pr.clip_count,
    }
