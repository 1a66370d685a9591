import pytest

from conftest import GENERATOR, GRID, LOADS, assert_params_close, parallel_sets, single_sets
from thevenin.circuit import solve_parallel
from thevenin.multi_source import estimate_all, split_by_source
from thevenin.phasor import ComplexImpedance, MeasurementSet, Phasor, TheveninParams
from thevenin.report import EstimationError

IDS = ["generator", "grid"]


def test_split_single_source_passthrough():
    sets = single_sets(GENERATOR, LOADS[:3])
    assert split_by_source(sets) == {"source": sets}


def test_split_two_sources():
    sets = parallel_sets([GENERATOR, GRID], IDS, LOADS[:5])
    parts = split_by_source(sets)
    assert list(parts) == IDS
    for sid in IDS:
        assert len(parts[sid]) == 5
        for orig, part in zip(sets, parts[sid]):
            assert part.v_pcc == orig.v_pcc
            assert part.branch_currents == ((sid, orig.current(sid)),)


def test_split_rejects_empty_and_inconsistent():
    with pytest.raises(ValueError):
        split_by_source([])
    a = MeasurementSet(0, 0.0, Phasor(1.0), (("x", Phasor(1.0)),))
    b = MeasurementSet(1, 1.0, Phasor(1.0), (("y", Phasor(1.0)),))
    with pytest.raises(ValueError):
        split_by_source([a, b])
    with pytest.raises(EstimationError):
        estimate_all([a, b])


@pytest.mark.parametrize("method", ["nonlinear", "linear"])
def test_generator_and_grid_recovered(method):
    loads = LOADS[:2] if method == "nonlinear" else LOADS[:3]
    rep = estimate_all(parallel_sets([GENERATOR, GRID], IDS, loads), method)
    assert rep.ok and rep.n_sources == 2 and rep.n_sets_used == len(loads)
    assert set(rep.per_source) == set(IDS)
    assert_params_close(rep.per_source["generator"].params, GENERATOR, 1e-6, atol_theta=1e-8)
    assert_params_close(rep.per_source["grid"].params, GRID, 1e-6, atol_theta=1e-8)
    assert rep.per_source["generator"].params.v_th - rep.per_source["grid"].params.v_th > 20.0


def test_identical_sources_give_identical_reports():
    src = TheveninParams(100.0, 0.2, 0.8, 0.3)
    rep = estimate_all(parallel_sets([src, src, src], ["a", "b", "c"], LOADS[:4]))
    pa = rep.per_source["a"].params
    for sid in "bc":
        assert_params_close(rep.per_source[sid].params, pa, 1e-10, atol_theta=1e-10)


def test_zero_current_source_fails_alone():
    sets = parallel_sets([GENERATOR, GRID], IDS, LOADS[:4])
    patched = [MeasurementSet(m.sample_id, m.time, m.v_pcc,
                              (("generator", m.current("generator")), ("dead", Phasor(0.0))))
               for m in sets]
    rep = estimate_all(patched)
    assert "dead" in rep.errors and "rank" in rep.errors["dead"]
    assert not rep.ok
    assert rep.per_source["generator"].converged
    assert rep.to_dict()["per_source"]["dead"]["status"] == "error"
    assert list(rep.to_dict()["per_source"]) == ["generator", "dead"]


def test_estimates_independent_of_other_branches():
    sets = parallel_sets([GENERATOR, GRID], IDS, LOADS[:4])
    full = estimate_all(sets).per_source["grid"]
    alone = estimate_all([m.branch("grid") for m in sets]).per_source["grid"]
    assert full.params == alone.params
    assert full.residual_norm == alone.residual_norm


def test_unknown_method():
    with pytest.raises(ValueError):
        estimate_all(single_sets(GENERATOR, LOADS[:2]), "kalman")


def test_parameter_accounting_for_n_sources():
    for n in (1, 2, 4):
        srcs = [TheveninParams(50.0 + 10 * k, 0.1 * k, 0.5 + k, 0.1 + 0.05 * k) for k in range(n)]
        ids = [f"s{k}" for k in range(n)]
        sets = [solve_parallel(srcs, z, ids, sample_id=j) for j, z in enumerate(LOADS[:3])]
        known = sum(1 + len(m.branch_currents) for m in sets)
        rep = estimate_all(sets)
        assert known == 3 * (1 + n)
        assert sum(len(r.params.as_tuple()) for r in rep.per_source.values()) == 4 * n
        for k, sid in enumerate(ids):
            assert_params_close(rep.per_source[sid].params, srcs[k], 1e-6, atol_theta=1e-8)
