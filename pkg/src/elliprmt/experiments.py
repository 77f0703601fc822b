"""Seeded Monte Carlo experiments validating every limit prediction.

Each experiment draws independent replicates on disjoint RNG substreams
derived from (seed, replicate index), reduces them in replicate order, and
writes a per-experiment directory: ``records.csv`` (one row per replicate),
``summary.json`` (stats, standard errors, z-scores, checksum), and
``theory.json`` (matched predictions).  Identical config+seed gives
byte-identical summaries at any worker count.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sstats

from .covariance import build_scm, bilinear_resolvent, spiked_quadform, vesd
from .errors import ConfigError
from .kernels import (contour_moment, cov_m, cov_m_diagonal, default_contour,
                      deterministic_equivalent, eigvec_stat_cov, kernels_diagonal)
from .lsd import find_bulk_edges, solve_lsd, solve_lsd_real, stieltjes_invert
from .measures import DiscreteMeasure, RadiusLaw, radius_law_to_h2
from .sampler import (PopulationSpec, build_population, draw_sample,
                      nonspiked_spectrum_measure, quadform_moment_oracle,
                      replicate_seed)
from .spikes import predict_spike, goe_covariance_profile, transition

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "run_experiment",
    "run_spike_dist",
    "run_eigvec_overlap",
    "run_bilinear_as",
    "run_bilinear_clt",
    "run_goe_entries",
    "run_vesd",
    "run_quadform_oracle",
    "EXPERIMENT_KINDS",
]

EXPERIMENT_KINDS = ("spike-dist", "eigvec-overlap", "bilinear-as", "bilinear-clt",
                    "vesd", "quadform-oracle", "goe-entries")
NU_RULES = ("0", "sqrt_p", "p", "p^2", "2p")

# z-window treated as safely outside the spectrum's influence zone; recorded
# in outputs so downstream thresholds can reference it.
ZONE_DELTA = 0.05

_CONFIG_KEYS = {"kind", "p", "n", "reps", "seed", "radius", "population",
                "z_points", "grid", "pi", "z_real", "draws_per_rep", "thresholds"}
_RADIUS_KEYS = {"kind", "nu_rule"}
_POPULATION_KEYS = {"spikes", "bulk", "toeplitz_rho", "separation"}


def _nu_value(rule: str, p: int) -> float:
    table = {"0": 0.0, "sqrt_p": float(np.sqrt(p)), "p": float(p),
             "p^2": float(p) ** 2, "2p": 2.0 * p}
    if rule not in table:
        raise ConfigError(f"unknown nu_p rule {rule!r}; expected one of {NU_RULES}")
    return table[rule]


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one simulation study."""

    kind: str
    p: int
    n: int
    reps: int
    seed: int
    radius: dict = field(default_factory=lambda: {"kind": "two-point", "nu_rule": "0"})
    population: dict = field(default_factory=lambda: {"spikes": [], "bulk": "ones",
                                                      "toeplitz_rho": 0.9,
                                                      "separation": 0.1})
    z_points: tuple[complex, ...] = ()
    grid: tuple[int, ...] = ()
    pi: object = "e1"
    z_real: float | None = None
    draws_per_rep: int = 20_000
    thresholds: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if self.p < 2 or self.n < 2:
            raise ConfigError("p and n must be >= 2")
        unknown = set(self.radius) - _RADIUS_KEYS
        if unknown:
            raise ConfigError(f"unknown radius key {sorted(unknown)[0]!r}")
        unknown = set(self.population) - _POPULATION_KEYS
        if unknown:
            raise ConfigError(f"unknown population key {sorted(unknown)[0]!r}")
        object.__setattr__(self, "z_points", tuple(complex(z) for z in self.z_points))
        object.__setattr__(self, "grid", tuple(int(g) for g in self.grid))

    @property
    def c(self) -> float:
        return self.p / self.n

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        unknown = set(raw) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config key {sorted(unknown)[0]!r}")
        for key in ("kind", "p", "n", "seed"):
            if key not in raw:
                raise ConfigError(f"config is missing required key {key!r}")
        kwargs = dict(raw)
        if "reps" not in kwargs:  # desk-scale defaults: 500 for sweeps, 2000 else
            kwargs["reps"] = 500 if kwargs.get("kind") == "eigvec-overlap" else 2000
        z_points = kwargs.pop("z_points", [])
        kwargs["z_points"] = tuple(complex(z[0], z[1]) if isinstance(z, (list, tuple))
                                   else complex(z) for z in z_points)
        kwargs["grid"] = tuple(kwargs.pop("grid", []))
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "p": self.p, "n": self.n, "reps": self.reps,
            "seed": self.seed, "radius": dict(self.radius),
            "population": {k: (list(v) if isinstance(v, (list, tuple)) else v)
                           for k, v in self.population.items()},
            "z_points": [[z.real, z.imag] for z in self.z_points],
            "grid": list(self.grid),
            "pi": self.pi, "z_real": self.z_real,
            "draws_per_rep": self.draws_per_rep,
            "thresholds": dict(self.thresholds),
        }

    def radius_law(self, p: int | None = None) -> RadiusLaw:
        p = self.p if p is None else p
        rule = self.radius.get("nu_rule", "0")
        nu = _nu_value(rule, p)
        kind = self.radius.get("kind", "two-point")
        if kind == "two-point" and nu == 0.0:
            kind = "deterministic"
        if kind == "chi-square":
            nu = 2.0 * p
        return RadiusLaw(kind=kind, p=p, nu_p=nu)

    def population_spec(self, p: int | None = None) -> PopulationSpec:
        p = self.p if p is None else p
        raw = self.population
        bulk = raw.get("bulk", "ones")
        spikes = tuple(raw.get("spikes", ()))
        if bulk == "ones":
            bulk = (1.0,) * (p - len(spikes))
        return PopulationSpec(
            p=p, spikes=spikes, bulk=bulk,
            bulk_seed=_derive(self.seed, 2, p) if bulk == "uniform" else None,
            toeplitz_rho=float(raw.get("toeplitz_rho", 0.9)),
            separation=float(raw.get("separation", 0.1)))


def _derive(*parts: int) -> int:
    ss = np.random.SeedSequence(entropy=[int(x) for x in parts])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _resolve_pi(spec, p: int, u0: np.ndarray | None = None) -> np.ndarray:
    if isinstance(spec, str):
        if spec.startswith("e") and spec[1:].isdigit():
            k = int(spec[1:])
            if not 1 <= k <= p:
                raise ConfigError(f"basis vector {spec!r} outside dimension {p}")
            v = np.zeros(p)
            v[k - 1] = 1.0
            return v
        if spec == "uniform":
            return np.full(p, 1.0 / np.sqrt(p))
        if spec == "top_population":
            if u0 is None:
                raise ConfigError("'top_population' needs a realized population")
            return u0[:, 0].copy()
        raise ConfigError(f"unknown projection vector spec {spec!r}")
    v = np.asarray(spec, dtype=np.float64).ravel()
    if v.size != p:
        raise ConfigError(f"projection vector has length {v.size}, expected {p}")
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise ConfigError("projection vector is zero")
    return v / nrm


def _pi_pairs(cfg: ExperimentConfig, p: int, u0=None):
    """Normalize the config pi field to ((pi1, pi2), (pi3, pi4)).

    Accepted forms: a single vector spec ("e1", "uniform", explicit list of
    numbers) used on both sides of one form; a pair of specs [a, b] for one
    form pi_a^T R pi_b; or two such pairs for two forms.
    """
    spec = cfg.pi
    if isinstance(spec, str) or (isinstance(spec, (list, tuple)) and spec
                                 and isinstance(spec[0], (int, float))):
        v = _resolve_pi(spec, p, u0)
        return (v, v), (v, v)
    if not isinstance(spec, (list, tuple)) or not spec:
        raise ConfigError("pi must be a vector spec or a list of them")
    if all(isinstance(s, str) or (isinstance(s, (list, tuple)) and s
                                  and isinstance(s[0], (int, float)))
           for s in spec):
        vecs = [_resolve_pi(s, p, u0) for s in spec]
        if len(vecs) == 1:
            return (vecs[0], vecs[0]), (vecs[0], vecs[0])
        if len(vecs) == 2:
            return (vecs[0], vecs[1]), (vecs[0], vecs[1])
        raise ConfigError("a flat pi list must hold one or two vector specs")
    pairs = []
    for s in spec:
        if not isinstance(s, (list, tuple)) or len(s) != 2:
            raise ConfigError("each pi entry must be a [left, right] pair")
        pairs.append((_resolve_pi(s[0], p, u0), _resolve_pi(s[1], p, u0)))
    if len(pairs) == 1:
        return pairs[0], pairs[0]
    if len(pairs) == 2:
        return pairs[0], pairs[1]
    raise ConfigError("pi must describe one or two bilinear forms")


@dataclass
class ExperimentResult:
    """Replicate records plus reduced summaries and matched theory."""

    kind: str
    config: dict
    columns: list
    records: np.ndarray      # (reps, len(columns)), NaN rows for failures
    summary: dict
    theory: dict
    failures: int
    hist: dict | None = None
    extra_files: dict = field(default_factory=dict)

    def records_csv(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.records:
            lines.append(",".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"

    def hist_csv(self) -> str:
        h = self.hist
        lines = ["bin_left,bin_right,count,gauss_density"]
        for le, ri, ct, gd in zip(h["bin_left"], h["bin_right"], h["count"],
                                  h["gauss_density"]):
            lines.append(f"{float(le)!r},{float(ri)!r},{int(ct)},{float(gd)!r}")
        return "\n".join(lines) + "\n"

    def write(self, outdir) -> None:
        os.makedirs(outdir, exist_ok=True)
        with open(os.path.join(outdir, "records.csv"), "w", encoding="utf-8") as fh:
            fh.write(self.records_csv())
        with open(os.path.join(outdir, "summary.json"), "w", encoding="utf-8") as fh:
            fh.write(_dumps(self.summary))
        with open(os.path.join(outdir, "theory.json"), "w", encoding="utf-8") as fh:
            fh.write(_dumps(self.theory))
        if self.hist is not None:
            with open(os.path.join(outdir, "hist.csv"), "w", encoding="utf-8") as fh:
                fh.write(self.hist_csv())
        for name, text in self.extra_files.items():
            with open(os.path.join(outdir, name), "w", encoding="utf-8") as fh:
                fh.write(text)


def _dumps(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _run_replicates(reps: int, jobs: int, worker, width: int):
    """Execute replicate workers, reducing in replicate-index order."""
    def safe(r):
        try:
            return np.asarray(worker(r), dtype=np.float64)
        except Exception:
            return np.full(width, np.nan)

    if jobs <= 1:
        rows = [safe(r) for r in range(reps)]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(safe, range(reps)))
    records = np.vstack(rows)
    failures = int(np.isnan(records).any(axis=1).sum())
    return records, failures


def _base_summary(cfg: ExperimentConfig, records: np.ndarray, columns,
                  failures: int) -> dict:
    law = cfg.radius_law()
    csv_text = ExperimentResult(cfg.kind, {}, list(columns), records, {}, {}, 0).records_csv()
    return {
        "kind": cfg.kind,
        "p": cfg.p, "n": cfg.n, "reps": cfg.reps, "seed": cfg.seed,
        "nu_rule": cfg.radius.get("nu_rule", "0"),
        "radius_kind": law.kind,
        "radius_conforming": law.bounded_support,
        "zone_delta": ZONE_DELTA,
        "failures": failures,
        "records_sha256": hashlib.sha256(csv_text.encode()).hexdigest(),
        "thresholds": dict(cfg.thresholds),
    }


def _zscore(value, target, se) -> float:
    return float((value - target) / se) if se > 0 else float("inf")


# ---------------------------------------------------------------------------
# spike-dist: distribution of the largest (spiked) sample eigenvalue
# ---------------------------------------------------------------------------

def run_spike_dist(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    spec = cfg.population_spec()
    if spec.n_spikes < 1:
        raise ConfigError("spike-dist needs at least one population spike")
    pop = build_population(spec)
    law = cfg.radius_law()
    h1n = nonspiked_spectrum_measure(spec)
    h2 = radius_law_to_h2(law)
    pred = predict_spike(cfg.c, h1n, h2, spec.spikes[0])
    theta, sdsq = pred.theta, pred.sigma_delta_sq
    sd_lambda = theta * np.sqrt(sdsq / cfg.n)

    def worker(r):
        sample = draw_sample(spec, law, cfg.n, replicate_seed(cfg.seed, r))
        bundle = build_scm(sample, population=pop)
        return [bundle.eigenvalues[-1]]

    records, failures = _run_replicates(cfg.reps, jobs, worker, 1)
    lam = records[:, 0]
    ok = lam[np.isfinite(lam)]
    mean, var = float(ok.mean()), float(ok.var(ddof=1))
    std_spike = np.sqrt(cfg.n) * (ok - theta) / (theta * np.sqrt(sdsq))
    ks = float(sstats.kstest(std_spike, "norm").statistic)

    n_bins = max(10, min(60, int(np.sqrt(ok.size))))
    counts, edges = np.histogram(ok, bins=n_bins)
    centers = 0.5 * (edges[1:] + edges[:-1])
    gauss = np.exp(-0.5 * ((centers - theta) / sd_lambda) ** 2) \
        / (sd_lambda * np.sqrt(2 * np.pi))

    summary = _base_summary(cfg, records, ["lambda_1"], failures)
    se_mean = sd_lambda / np.sqrt(ok.size)
    summary.update({
        "mean_lambda1": mean,
        "var_lambda1": var,
        "se_mean": float(se_mean),
        "z_mean": _zscore(mean, theta, se_mean),
        "var_ratio_standardized": float(np.var(std_spike, ddof=1)),
        "ks_statistic": ks,
    })
    theory = {
        "alpha": spec.spikes[0], "theta": theta, "g_prime": pred.g_prime,
        "sigma_delta_sq": sdsq, "sd_lambda1": float(sd_lambda),
        "var_lambda1": float(sd_lambda ** 2), "overlap_sq": pred.overlap_sq,
        "light_tail": pred.light_tail, "zone_delta": ZONE_DELTA,
    }
    hist = {"bin_left": edges[:-1], "bin_right": edges[1:], "count": counts,
            "gauss_density": gauss}
    return ExperimentResult(cfg.kind, cfg.to_dict(), ["lambda_1"], records,
                            summary, theory, failures, hist=hist)


# ---------------------------------------------------------------------------
# eigvec-overlap: squared projection of sample onto population spike vectors
# ---------------------------------------------------------------------------

def run_eigvec_overlap(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    p_grid = cfg.grid or (cfg.p,)
    c = cfg.c
    k_spikes = len(cfg.population.get("spikes", ()))
    if k_spikes < 1:
        raise ConfigError("eigvec-overlap needs at least one population spike")

    all_records = []
    per_p = []
    for p in p_grid:
        n = int(round(p / c))
        spec = cfg.population_spec(p)
        pop = build_population(spec)
        law = cfg.radius_law(p)
        h1n = nonspiked_spectrum_measure(spec)
        h2 = radius_law_to_h2(law)
        theory_overlaps = []
        edge = find_bulk_edges(c, h1n, h2)[1]
        for alpha in spec.spikes:
            theta, gp = transition(c, h1n, h2, alpha, edge=edge)
            theory_overlaps.append(gp / (theta / alpha))
        u1 = pop[1][:, :k_spikes]

        def worker(r, spec=spec, law=law, n=n, pop=pop, u1=u1, p=p):
            sample = draw_sample(spec, law, n, _derive(cfg.seed, 3, p, r))
            bundle = build_scm(sample, population=pop)
            vk = bundle.top_eigenvectors(u1.shape[1])
            inner = np.sum(u1 * vk, axis=0)
            return np.concatenate([[p], inner ** 2, np.sign(inner)])

        width = 1 + 2 * k_spikes
        records, failures = _run_replicates(cfg.reps, jobs, worker, width)
        all_records.append(records)
        means = np.nanmean(records[:, 1:1 + k_spikes], axis=0)
        ses = np.nanstd(records[:, 1:1 + k_spikes], axis=0, ddof=1) / np.sqrt(cfg.reps)
        per_p.append({
            "p": p, "n": n, "failures": failures,
            "mean_overlap_sq": list(map(float, means)),
            "se": list(map(float, ses)),
            "theory_overlap_sq": list(map(float, theory_overlaps)),
            "z": [(float(m) - float(t)) / float(s) if s > 0 else float("inf")
                  for m, t, s in zip(means, theory_overlaps, ses)],
        })

    records = np.vstack(all_records)
    columns = (["p"] + [f"overlap_sq_{k+1}" for k in range(k_spikes)]
               + [f"sign_{k+1}" for k in range(k_spikes)])
    failures = int(np.isnan(records).any(axis=1).sum())
    summary = _base_summary(cfg, records, columns, failures)
    summary["per_p"] = per_p
    theory = {"per_p": [{"p": row["p"], "overlap_sq": row["theory_overlap_sq"]}
                        for row in per_p], "zone_delta": ZONE_DELTA}
    return ExperimentResult(cfg.kind, cfg.to_dict(), columns, records,
                            summary, theory, failures)


# ---------------------------------------------------------------------------
# bilinear-as: almost-sure convergence to the deterministic equivalent
# ---------------------------------------------------------------------------

def _finite_n_inputs(cfg: ExperimentConfig):
    spec = cfg.population_spec()
    pop = build_population(spec)
    law = cfg.radius_law()
    h1n = DiscreteMeasure.from_values(pop[2])
    h2 = radius_law_to_h2(law)
    return spec, pop, law, h1n, h2


def run_bilinear_as(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    if not cfg.z_points:
        raise ConfigError("bilinear-as needs z_points")
    spec, pop, law, h1n, h2 = _finite_n_inputs(cfg)
    (pi1, pi2), _ = _pi_pairs(cfg, cfg.p, pop[1])
    sig_eig = (pop[2], pop[1])
    deteqs = []
    for z in cfg.z_points:
        g2 = solve_lsd(cfg.c, h1n, h2, z).g2
        deteqs.append(deterministic_equivalent(z, g2, sig_eig, pi1, pi2))

    def worker(r):
        sample = draw_sample(spec, law, cfg.n, replicate_seed(cfg.seed, r))
        bundle = build_scm(sample, population=pop)
        out = []
        for z, de in zip(cfg.z_points, deteqs):
            out.append(abs(bilinear_resolvent(bundle, pi1, pi2, z) - de))
        return out

    columns = [f"abs_dev_z{i}" for i in range(len(cfg.z_points))]
    records, failures = _run_replicates(cfg.reps, jobs, worker, len(columns))
    mean_dev = np.nanmean(records, axis=0)
    summary = _base_summary(cfg, records, columns, failures)
    summary.update({
        "mean_abs_deviation": list(map(float, mean_dev)),
        "max_mean_abs_deviation": float(np.max(mean_dev)),
        "se": list(map(float, np.nanstd(records, axis=0, ddof=1) / np.sqrt(cfg.reps))),
    })
    theory = {"deterministic_equivalent": [[d.real, d.imag] for d in deteqs],
              "z_points": [[z.real, z.imag] for z in cfg.z_points],
              "zone_delta": ZONE_DELTA}
    return ExperimentResult(cfg.kind, cfg.to_dict(), columns, records,
                            summary, theory, failures)


# ---------------------------------------------------------------------------
# bilinear-clt: fluctuations of the centered bilinear forms
# ---------------------------------------------------------------------------

def run_bilinear_clt(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    if not cfg.z_points:
        raise ConfigError("bilinear-clt needs z_points")
    spec, pop, law, h1n, h2 = _finite_n_inputs(cfg)
    (pi1, pi2), (pi3, pi4) = _pi_pairs(cfg, cfg.p, pop[1])
    two_forms = not (np.array_equal(pi1, pi3) and np.array_equal(pi2, pi4))
    sig_eig = (pop[2], pop[1])
    deteq1, deteq2 = [], []
    for z in cfg.z_points:
        g2 = solve_lsd(cfg.c, h1n, h2, z).g2
        deteq1.append(deterministic_equivalent(z, g2, sig_eig, pi1, pi2))
        deteq2.append(deterministic_equivalent(z, g2, sig_eig, pi3, pi4))

    sqrt_p = np.sqrt(cfg.p)

    def worker(r):
        sample = draw_sample(spec, law, cfg.n, replicate_seed(cfg.seed, r))
        bundle = build_scm(sample, population=pop)
        out = []
        for z, d1, d2 in zip(cfg.z_points, deteq1, deteq2):
            m1 = sqrt_p * (bilinear_resolvent(bundle, pi1, pi2, z) - d1)
            out.extend([m1.real, m1.imag])
            if two_forms:
                m2 = sqrt_p * (bilinear_resolvent(bundle, pi3, pi4, z) - d2)
                out.extend([m2.real, m2.imag])
        return out

    per_z = 4 if two_forms else 2
    columns = []
    for i in range(len(cfg.z_points)):
        columns += [f"re_m1_z{i}", f"im_m1_z{i}"]
        if two_forms:
            columns += [f"re_m2_z{i}", f"im_m2_z{i}"]
    records, failures = _run_replicates(cfg.reps, jobs, worker, len(columns))

    summary = _base_summary(cfg, records, columns, failures)
    theory = {"z_points": [[z.real, z.imag] for z in cfg.z_points],
              "zone_delta": ZONE_DELTA, "per_z": []}
    stats_per_z = []
    for i, z in enumerate(cfg.z_points):
        base = per_z * i
        m1 = records[:, base] + 1j * records[:, base + 1]
        m1 = m1[np.isfinite(m1)]
        var1 = complex(np.mean(m1 ** 2) - np.mean(m1) ** 2)
        tvar1 = cov_m_diagonal(cfg.c, h1n, h2, sig_eig, (pi1, pi2, pi1, pi2), z)
        entry = {
            "z": [z.real, z.imag],
            "mean_m1": [float(np.mean(m1.real)), float(np.mean(m1.imag))],
            "se_mean_m1": [float(np.std(m1.real, ddof=1) / np.sqrt(m1.size)),
                           float(np.std(m1.imag, ddof=1) / np.sqrt(m1.size))],
            "var_m1": [var1.real, var1.imag],
            "var_ratio_m1": float(abs(var1) / abs(tvar1)),
        }
        tentry = {"z": [z.real, z.imag], "var_m1": [tvar1.real, tvar1.imag]}
        if two_forms:
            m2 = records[:, base + 2] + 1j * records[:, base + 3]
            m2 = m2[np.isfinite(m2)]
            cov12 = complex(np.mean(m1 * m2) - np.mean(m1) * np.mean(m2))
            tcov12 = cov_m_diagonal(cfg.c, h1n, h2, sig_eig, (pi1, pi2, pi3, pi4), z)
            se_cov = float(np.std((m1 - m1.mean()) * (m2 - m2.mean())) / np.sqrt(m1.size))
            entry.update({
                "var_m2": [float(np.mean(m2.real ** 2) - np.mean(m2.real) ** 2),
                           float(np.mean(m2.imag ** 2) - np.mean(m2.imag) ** 2)],
                "cov_m1_m2": [cov12.real, cov12.imag],
                "se_cov_m1_m2": se_cov,
                "z_cov": _zscore(abs(cov12 - tcov12), 0.0, se_cov),
            })
            tentry["cov_m1_m2"] = [tcov12.real, tcov12.imag]
        stats_per_z.append(entry)
        theory["per_z"].append(tentry)
    if len(cfg.z_points) >= 2:
        z1, z2 = cfg.z_points[0], cfg.z_points[1]
        tcross = cov_m(cfg.c, h1n, h2, sig_eig, (pi1, pi2, pi1, pi2), z1, z2)
        a = records[:, 0] + 1j * records[:, 1]
        b = records[:, per_z] + 1j * records[:, per_z + 1]
        cross = complex(np.mean(a * b) - np.mean(a) * np.mean(b))
        summary["cross_cov_z0_z1"] = [cross.real, cross.imag]
        theory["cross_cov_z0_z1"] = [tcross.real, tcross.imag]
    summary["per_z"] = stats_per_z
    return ExperimentResult(cfg.kind, cfg.to_dict(), columns, records,
                            summary, theory, failures)


# ---------------------------------------------------------------------------
# goe-entries: centered spike matrix against its GOE covariance profile
# ---------------------------------------------------------------------------

def run_goe_entries(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    spec = cfg.population_spec()
    k = spec.n_spikes
    if k < 1:
        raise ConfigError("goe-entries needs at least one spike")
    pop = build_population(spec)
    law = cfg.radius_law()
    h1n = nonspiked_spectrum_measure(spec)
    h2 = radius_law_to_h2(law)
    if cfg.z_real is not None:
        z = float(cfg.z_real)
    else:
        z = transition(cfg.c, h1n, h2, spec.spikes[0])[0]
    g2n = solve_lsd_real(cfg.c, h1n, h2, z).g2.real
    profile = goe_covariance_profile(cfg.c, h1n, h2, z, k)
    sqrt_p = np.sqrt(cfg.p)

    pairs = [(i, j) for i in range(k) for j in range(i, k)]
    columns = [f"O_{i+1}{j+1}" for i, j in pairs]

    def worker(r):
        sample = draw_sample(spec, law, cfg.n, replicate_seed(cfg.seed, r))
        q = spiked_quadform(sample, z, population=pop)
        o = sqrt_p * z * (q + g2n * np.eye(k))
        return [o[i, j] for i, j in pairs]

    records, failures = _run_replicates(cfg.reps, jobs, worker, len(columns))
    summary = _base_summary(cfg, records, columns, failures)
    ent = {}
    for col, (i, j) in zip(columns, pairs):
        vals = records[:, columns.index(col)]
        vals = vals[np.isfinite(vals)]
        var = float(np.var(vals, ddof=1))
        target = profile.cov(i, j, i, j)
        ent[col] = {
            "mean": float(np.mean(vals)),
            "var": var,
            "var_ratio": var / target if target else float("nan"),
            "se_var": float(var * np.sqrt(2.0 / max(vals.size - 1, 1))),
        }
    if k >= 2:
        o11 = records[:, columns.index("O_11")]
        o12 = records[:, columns.index("O_12")]
        mask = np.isfinite(o11) & np.isfinite(o12)
        cov = float(np.cov(o11[mask], o12[mask])[0, 1])
        se = float(np.std((o11[mask] - o11[mask].mean())
                          * (o12[mask] - o12[mask].mean()), ddof=1)
                   / np.sqrt(mask.sum()))
        ent["cov_O11_O12"] = {"value": cov, "se": se, "z": _zscore(cov, 0.0, se)}
    summary["entries"] = ent
    theory = {"z": z, "g2n": g2n, "sigma11_sq": profile.sigma11_sq,
              "sigma12_sq": profile.sigma12_sq, "zone_delta": ZONE_DELTA}
    return ExperimentResult(cfg.kind, cfg.to_dict(), columns, records,
                            summary, theory, failures)


# ---------------------------------------------------------------------------
# vesd: eigenvector statistics against the anisotropic reference law
# ---------------------------------------------------------------------------

def run_vesd(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    spec, pop, law, h1n, h2 = _finite_n_inputs(cfg)
    (pi, _), _ = _pi_pairs(cfg, cfg.p, pop[1])
    sig_eig = (pop[2], pop[1])
    contour = default_contour(cfg.c, h1n, h2, spikes=spec.spikes)
    zetas = {"x": lambda zz: zz, "x2": lambda zz: zz * zz}
    centering = {name: contour_moment(cfg.c, h1n, h2, sig_eig, pi, f,
                                      contour=contour, quad_n=256)
                 for name, f in zetas.items()}
    sqrt_p = np.sqrt(cfg.p)

    def worker(r):
        sample = draw_sample(spec, law, cfg.n, replicate_seed(cfg.seed, r))
        bundle = build_scm(sample, population=pop)
        q = bundle.eigenvectors.T @ pi
        w = q ** 2
        s1 = sqrt_p * (float(w @ bundle.eigenvalues) - centering["x"])
        s2 = sqrt_p * (float(w @ bundle.eigenvalues ** 2) - centering["x2"])
        mass = sqrt_p * (float(w.sum()) - 1.0)
        return [s1, s2, mass]

    columns = ["stat_x", "stat_x2", "stat_const"]
    records, failures = _run_replicates(cfg.reps, jobs, worker, len(columns))

    var_theory = {}
    for (na, fa), (nb, fb) in [(("x", zetas["x"]), ("x", zetas["x"])),
                               (("x2", zetas["x2"]), ("x2", zetas["x2"])),
                               (("x", zetas["x"]), ("x2", zetas["x2"]))]:
        key = f"{na}_{nb}"
        var_theory[key] = eigvec_stat_cov(cfg.c, h1n, h2, sig_eig, pi, fa, fb,
                                          contour=contour, quad_n=96)
    conv_check = eigvec_stat_cov(cfg.c, h1n, h2, sig_eig, pi,
                                 zetas["x"], zetas["x"], contour=contour,
                                 quad_n=192)

    summary = _base_summary(cfg, records, columns, failures)
    s1 = records[:, 0][np.isfinite(records[:, 0])]
    s2 = records[:, 1][np.isfinite(records[:, 1])]
    summary.update({
        "mean": [float(s1.mean()), float(s2.mean())],
        "se_mean": [float(s1.std(ddof=1) / np.sqrt(s1.size)),
                    float(s2.std(ddof=1) / np.sqrt(s2.size))],
        "var": [float(s1.var(ddof=1)), float(s2.var(ddof=1))],
        "cov_x_x2": float(np.cov(s1, s2)[0, 1]),
        "var_ratio": [float(s1.var(ddof=1) / var_theory["x_x"]),
                      float(s2.var(ddof=1) / var_theory["x2_x2"])],
        "max_abs_stat_const": float(np.nanmax(np.abs(records[:, 2]))),
    })
    theory = {
        "centering": centering,
        "cov": var_theory,
        "quad_doubling_rel_change": abs(conv_check - var_theory["x_x"])
        / max(abs(conv_check), 1e-300),
        "zone_delta": ZONE_DELTA,
    }
    grid = np.linspace(max(contour.x_left, 1e-3), contour.x_right, 400)
    ref = stieltjes_invert(cfg.c, h1n, h2, grid, eps=1e-4,
                           sigma_eig=sig_eig, pi=pi)
    extra = {"aniso_cdf.csv": ref.to_csv()}
    return ExperimentResult(cfg.kind, cfg.to_dict(), columns, records,
                            summary, theory, failures, extra_files=extra)


# ---------------------------------------------------------------------------
# quadform-oracle: sphere-average covariance identity for the sampler
# ---------------------------------------------------------------------------

def run_quadform_oracle(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    p = cfg.p
    rng = np.random.default_rng([cfg.seed, 3])
    n_pairs = 5
    mats = [(rng.standard_normal((p, p)), rng.standard_normal((p, p)))
            for _ in range(n_pairs)]
    exact = [quadform_moment_oracle(a, b) for a, b in mats]

    def worker(r):
        sub = np.random.default_rng(replicate_seed(cfg.seed, r))
        y = sub.standard_normal((cfg.draws_per_rep, p))
        u = y / np.linalg.norm(y, axis=1, keepdims=True)
        out = []
        for a, b in mats:
            qa = np.einsum("ij,ij->i", u @ a, u)
            qb = np.einsum("ij,ij->i", u @ b, u)
            out.append(float(np.mean(qa * qb) - np.mean(qa) * np.mean(qb)))
        return out

    columns = [f"cov_pair{i}" for i in range(n_pairs)]
    records, failures = _run_replicates(cfg.reps, jobs, worker, n_pairs)
    summary = _base_summary(cfg, records, columns, failures)
    pairs = []
    for i in range(n_pairs):
        vals = records[:, i][np.isfinite(records[:, i])]
        mc = float(vals.mean())
        se = float(vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else 0.0
        pairs.append({"mc_cov": mc, "exact": float(exact[i]), "se": se,
                      "z": _zscore(mc, exact[i], se)})
    summary["pairs"] = pairs
    summary["total_draws"] = cfg.reps * cfg.draws_per_rep
    theory = {"exact_cov": list(map(float, exact))}
    return ExperimentResult(cfg.kind, cfg.to_dict(), columns, records,
                            summary, theory, failures)


_RUNNERS = {
    "spike-dist": run_spike_dist,
    "eigvec-overlap": run_eigvec_overlap,
    "bilinear-as": run_bilinear_as,
    "bilinear-clt": run_bilinear_clt,
    "goe-entries": run_goe_entries,
    "vesd": run_vesd,
    "quadform-oracle": run_quadform_oracle,
}


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    """Dispatch an experiment by its configured kind."""
    return _RUNNERS[cfg.kind](cfg, jobs=jobs)
