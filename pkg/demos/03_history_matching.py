"""Order-statistic tests next to the root-sum-square test.

On one synthetic dataset compare the chi-square plausibility test with
history-matching statistics built from the maximum, the upper quartile
and the median of the absolute standardised residuals. Every test here
is calibrated to level 0.05, so they differ in power, not in size.
"""

from scipy import optimize, stats

from strictbounds import discrepancy, history_matching as hm, plausibility, synthetic
from strictbounds.data import sample_test_parameters

spec = synthetic.SyntheticSpec(
    space=synthetic.default_space(3), grid=synthetic.grid_for_cells(200),
    delta2=0.0005, meas_var=(0.0005, 0.0015), seed=11,
)
_, obs, truth = synthetic.generate(spec)
tests = sample_test_parameters(spec.space, 3000, seed=2)
table = synthetic.oracle_table(spec, tests)  # exact model, no emulation error
est = discrepancy.estimate(table, obs, obs.grid)

chi = plausibility.test_all(table, obs, obs.grid, est.delta2)
print(f"{'test':<25}{'critical':>10}{'retained':>10}")
print(f"{'root-sum-square':<25}{chi[0].critical:>10.3f}{sum(not o.reject for o in chi):>10}")
for label, cfg in [
    ("maximum (q=0)", hm.HMConfig(q=0.0)),
    ("upper quartile (q=0.25)", hm.HMConfig(q=0.25)),
    ("median (q=0.5)", hm.HMConfig(q=0.5)),
]:
    out = hm.hm_test_all(table, obs, obs.grid, est.delta2, cfg)
    print(f"{label:<25}{out[0].critical:>10.3f}{sum(not o.reject for o in out):>10}")

# the closed form for the maximum of m half-normals
m = len(obs.grid)
t = optimize.brentq(lambda t: (2 * stats.norm.cdf(t) - 1) ** m - 0.95, 0.1, 10)
print(f"closed-form critical value for the maximum at m={m}: {t:.3f}")
