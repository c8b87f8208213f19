import csv
import math

import numpy as np
import pytest

from fracnls.errors import DomainError
from fracnls.sweep import COLUMNS, FAILED, omega_grid, run_chain, run_sweep, worker_count, write_chain_csv
from fracnls.wave import SolverConfig


def test_omega_grid_inclusive():
    np.testing.assert_array_equal(omega_grid(1.1, 1.5, 0.1), [1.1, 1.2, 1.3, 1.4, 1.5])
    np.testing.assert_array_equal(omega_grid(2.0, 2.0, 0.5), [2.0])


@pytest.mark.parametrize("args", [(1.5, 1.2, 0.1), (1.2, 1.5, 0.0), (1.0, 1.5, 0.1)])
def test_omega_grid_domain(args):
    with pytest.raises(DomainError):
        omega_grid(*args)


def test_failed_cells_are_marked_not_fatal():
    res = run_chain(0.6, [1.2, 1.5], SolverConfig(max_newton_iters=1), n_modes=256)
    assert res.failed
    for row in res.rows:
        assert row["verdict"] == FAILED and "error" in row
        assert math.isnan(row["v_odd"])


def test_chain_rows_and_csv(tmp_path):
    res = run_chain(0.7, [1.2, 1.5], n_modes=512)
    assert not res.failed and [r["omega"] for r in res.rows] == [1.2, 1.5]
    path = write_chain_csv(res, tmp_path / "chain.csv")
    with path.open() as fh:
        rows = list(csv.DictReader(fh))
    assert tuple(rows[0]) == COLUMNS
    assert float(rows[1]["v_odd"]) == res.rows[1]["v_odd"]
    assert int(rows[0]["n_L2"]) == 2


def test_parallel_sweep_keeps_order(monkeypatch):
    kwargs = dict(n_modes=256, fd_step=None)
    serial = run_sweep([0.9, 0.5], [1.2], workers=1, **kwargs)
    parallel = run_sweep([0.9, 0.5], [1.2], workers=2, **kwargs)
    assert [c.s for c in parallel] == [0.9, 0.5]
    assert [c.rows[0]["v_even"] for c in parallel] == [c.rows[0]["v_even"] for c in serial]
    monkeypatch.setenv("FRACNLS_WORKERS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("FRACNLS_WORKERS", "junk")
    assert worker_count() == 1
