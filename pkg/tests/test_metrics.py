import numpy as np
import pytest

from dogip.mesh import build_structured_mesh
from dogip.metrics import (EfficiencyReport, build_report, computational_efficiency, estimated_entries,
                           memory_efficiency, nnz_pm1, nnz_with_threshold, round_half_up)

PER_ELEMENT = ("mem_a_t", "mem_a_dogip_t", "nnz_bhat", "nnz_pm1_bhat", "quad_degree")


def test_counting_helpers():
    v = np.array([0.0, 1e-15, 1.0, -1.0, 1 + 1e-15, 0.5, -2.0])
    assert nnz_with_threshold(v) == 5
    assert nnz_pm1(v) == 3


def test_formulas():
    assert memory_efficiency(6, 2, 12) == 1.0
    assert computational_efficiency(9, 3, 6, 2, 36) == pytest.approx((2 * 6 + 6) * 2 / 36)


@pytest.mark.parametrize("x,want", [(0.805, 0.81), (0.804999, 0.8), (1.135, 1.14), (5.1449, 5.14)])
def test_round_half_up(x, want):
    assert round_half_up(x) == want


def test_p1_projection_report_by_hand():
    rep = build_report(build_structured_mesh(2, 1), 1, "wp")
    # 4 vertices, the two diagonal vertices couple to everything, the other two miss each other
    assert rep.nnz_a == 14 and rep.mem_a == 2 * 14 + 4
    assert rep.mem_a_t == 9 and rep.mem_a_dogip_t == 6 and rep.mem_a_dogip == 12
    assert rep.nnz_bhat == 9 and rep.nnz_pm1_bhat == 3
    assert rep.memory_efficiency == 12 / 32
    assert rep.computational_efficiency == (2 * 6 + 6) * 2 / 14


@pytest.mark.parametrize("d,k,problem", [(2, 1, "wp"), (2, 3, "elliptic"), (3, 2, "wp"), (3, 1, "elliptic")])
def test_self_consistency(d, k, problem):
    a = build_report(build_structured_mesh(d, 2, perturb=0.2), k, problem)
    b = build_report(build_structured_mesh(d, 4, perturb=0.2), k, problem)
    for name in PER_ELEMENT:
        assert getattr(a, name) == getattr(b, name)
    for rep in (a, b):
        assert rep.recomputed() == (rep.memory_efficiency, rep.computational_efficiency)
        assert rep.dim_v == (k * rep.N + 1) ** d
        assert rep.mem_a_dogip == rep.mem_a_dogip_t * rep.n_elements


def test_report_round_trip():
    rep = build_report(build_structured_mesh(2, 2), 2, "elliptic", "iso:1+x")
    assert EfficiencyReport.from_dict(rep.as_dict()) == rep
    assert EfficiencyReport.from_dict({k: str(v) for k, v in rep.as_dict().items()}) == rep


def test_unknown_problem():
    with pytest.raises(ValueError):
        build_report(build_structured_mesh(2, 1), 1, "heat")


def test_estimated_entries():
    assert estimated_entries(2, 10, 1) == 200 * 9
    assert estimated_entries(3, 2, 2) == 48 * 100
