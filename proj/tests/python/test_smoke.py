import math

import pytest

import hssmlab as h


def test_context_roundtrip_and_ledger():
    ctx = h.Context(h.SimParams())
    x = ctx.encrypt([0.1 * i for i in range(8)])
    y = ctx.mul_cc(x, x)
    values, level, degree = ctx.decrypt(y)
    assert (level, degree) == (8, 2)
    assert all(abs(v - (0.1 * i) ** 2) < 2 ** -40 for i, v in enumerate(values))
    led = ctx.ledger.as_dict()
    assert led["mul_ct_ct"] == 1
    assert led["encrypt_count"] == 1
    assert led["decrypt_count"] == 1


def test_errors_are_typed():
    ctx = h.Context(h.SimParams())
    with pytest.raises(h.ShapeMismatch):
        ctx.encrypt([0.0] * 3)
    with pytest.raises(h.RangeViolation):
        ctx.encrypt([5.0] * 8)
    x = ctx.encrypt([0.0] * 8)
    ctx.release(x)
    with pytest.raises(h.DoubleRelease):
        ctx.release(x)
    bad = h.SimParams()
    bad.depth_budget = 0
    with pytest.raises(h.InvalidParams):
        h.Context(bad)
    assert issubclass(h.LevelExhausted, h.HssmlabError)


def test_streaming_exhausts_at_depth_8():
    ctx = h.Context(h.SimParams())
    xs = [ctx.encrypt([0.3] * 8) for _ in range(8)]
    params = h.HssmParams()
    params.readout = h.RowReadout([0.125] * 8)
    with pytest.raises(h.LevelExhausted):
        h.hssm_streaming(ctx, xs, params)
    out, trace = h.hssm_closed_form(ctx, xs, params)
    assert (out.level, out.degree) == (4, 2)
    assert trace[-1]["stage"] == "readout"


def test_cost_model_matches_execution():
    shape = h.CircuitShape(h.CircuitKind.HSSM_CLOSED, T=8, depth=8, with_projection=True)
    pred = h.predict_level_trace(shape)
    run = h.execute_circuit(shape)
    assert pred["ok"] and run["ok"]
    assert (pred["level"], pred["degree"]) == (run["level"], run["degree"]) == (3, 2)
    model = h.op_count_model(shape)
    for key in ("mul_ct_ct", "mul_ct_pt", "add", "rescale", "level_switch", "rotate"):
        assert model[key] == run["server"][key]


def test_footprint_depth_and_stress():
    assert h.footprint(1066) == (1, 1066, 2132, 1136356)
    assert [h.carry_depth_naive(t) for t in range(1, 5)] == [2, 3, 4, 5]
    assert h.carry_depth_hssm() == 2
    assert h.stress_check(h.CircuitKind.FULL_SEQUENCE, 32, 1100)[0]
    assert not h.stress_check(h.CircuitKind.FULL_SEQUENCE, 36, 1100)[0]


def test_classify_synthetic_matches():
    report = h.classify_synthetic(h.CircuitKind.HSSM_CLOSED, seed=7, n_train=120, n_valid=40)
    assert report["n"] == 40
    assert report["match_fraction"] == 1.0
    assert math.isfinite(report["max_score_delta"])
