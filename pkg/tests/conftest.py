import numpy as np
import pytest

from spinphase import IntegratorConfig


@pytest.fixture
def tight_cfg():
    return IntegratorConfig(rel_tol=1e-11, abs_tol=1e-13)


def uniform_grid_cfg(t_span, n, rel_tol=1e-11, abs_tol=1e-13):
    return IntegratorConfig(
        rel_tol=rel_tol,
        abs_tol=abs_tol,
        dense_output_grid=np.linspace(t_span[0], t_span[1], n),
    )
