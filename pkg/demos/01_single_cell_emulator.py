"""Fit one grid cell's emulator and look at what it learned.

A toy response of three parameters is sampled at 40 design points, a GP
with an anisotropic exponential kernel is fitted by maximum likelihood,
and its predictions are compared with the true response at new points.
"""

import numpy as np

from strictbounds import gp, synthetic
from strictbounds.data import sample_test_parameters

spec = synthetic.SyntheticSpec(
    space=synthetic.default_space(3), grid=synthetic.grid_for_cells(4), n_members=40, seed=1
)
train, _, _ = synthetic.generate(spec)
cell = spec.cells[0]
y = train.outputs[:, 0]

emu = gp.fit(train.inputs, y, gp.FitConfig(restarts=5, seed=0))
h = emu.hyper
print(f"cell {cell.cell_id()}")
print(f"  beta0       {h.beta0:.4f}")
print(f"  amplitude^2 {h.amplitude2:.3e}")
print(f"  lengths     {np.round(h.length_scales, 3)}")
print(f"  nugget      {h.nugget:.2e}")
print(f"  log ML      {emu.info['lml']:.2f} after {emu.info['evaluations']} evaluations")

# out-of-sample check: standardised errors should look roughly N(0, 1)
tests = sample_test_parameters(spec.space, 500, seed=9)
mean, var = gp.predict(emu, tests)
truth = synthetic.forward_all(spec, tests)[0]
z = (mean - truth) / np.sqrt(var)
print(f"  RMSE        {np.sqrt(np.mean((mean - truth) ** 2)):.2e} (response sd {truth.std():.2e})")
print(f"  std. error  mean {z.mean():+.2f}, sd {z.std():.2f}")

# longer length scale = flatter response along that parameter
print("  most influential parameter:", spec.space.names[int(np.argmin(h.length_scales))])
