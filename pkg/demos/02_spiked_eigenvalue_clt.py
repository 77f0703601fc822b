"""Largest-eigenvalue fluctuations of a spiked elliptical model.

Reproduces the spiked-eigenvalue simulation protocol at desk scale: a
single population spike of 8 planted in a Toeplitz eigenbasis over a
uniform bulk, sampled under four radius laws (nu_p = p^2, p, sqrt(p), 0).
For each law the largest sample eigenvalue is collected over seeded
replicates and compared with the predicted location theta, the CLT
standard deviation theta * sigma_Delta / sqrt(n), and a normal fit.
"""

from elliprmt import ExperimentConfig, run_experiment
from elliprmt.svgplot import svg_histogram

P, N, REPS, SEED = 100, 200, 2000, 20260809

print(f"spiked model: p={P}, n={N}, spike alpha=8, {REPS} replicates per law\n")
for rule in ("p^2", "p", "sqrt_p", "0"):
    cfg = ExperimentConfig.from_dict({
        "kind": "spike-dist", "p": P, "n": N, "reps": REPS, "seed": SEED,
        "radius": {"kind": "two-point", "nu_rule": rule},
        "population": {"spikes": [8.0], "bulk": "uniform", "toeplitz_rho": 0.9,
                       "separation": 0.1},
    })
    res = run_experiment(cfg, jobs=4)
    s, th = res.summary, res.theory
    print(f"nu_p = {rule:6s}: theta = {th['theta']:.4f}, "
          f"empirical mean = {s['mean_lambda1']:.4f}, "
          f"Var(sqrt(n) Delta / sigma) = {s['var_ratio_standardized']:.3f}, "
          f"KS = {s['ks_statistic']:.4f}")
    panel = svg_histogram(res.hist["bin_left"], res.hist["bin_right"],
                          res.hist["count"], res.hist["gauss_density"],
                          title=f"largest eigenvalue, nu_p = {rule}",
                          xlabel="lambda_1")
    name = f"spike_hist_{rule.replace('^', '')}.svg"
    with open(name, "w", encoding="utf-8") as fh:
        fh.write(panel)
    print(f"  wrote {name}")

print("\nTakeaway: all light-tail laws (nu_p = o(p^2)) share one Gaussian "
      "limit; the nu_p = p^2 law shifts both the location and the spread.")
