import numpy as np
import pytest

from strictbounds import synthetic


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def small_spec(cells=30, delta2=0.0005, seed=3, **kw):
    kw.setdefault("meas_var", (0.0005, 0.0015))
    return synthetic.SyntheticSpec(
        space=synthetic.default_space(3),
        grid=synthetic.grid_for_cells(cells),
        delta2=delta2,
        seed=seed,
        **kw,
    )
