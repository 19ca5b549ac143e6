"""Python access to the hssmlab simulator, circuits, cost model and pipeline."""

from ._core import (  # noqa: F401
    AttentionMode,
    CircuitKind,
    CircuitShape,
    Context,
    CtVector,
    DepthParams,
    DoubleRelease,
    HssmParams,
    HssmlabError,
    InvalidParams,
    LevelExhausted,
    OpLedger,
    RangeViolation,
    RowReadout,
    ShapeMismatch,
    SimParams,
    carry_depth_hssm,
    carry_depth_naive,
    classify_synthetic,
    execute_circuit,
    footprint,
    hssm_closed_form,
    hssm_multi_decay,
    hssm_streaming,
    logical_state_units,
    naive_recurrence,
    op_count_model,
    predict_level_trace,
    stress_check,
)

__all__ = [name for name in dir() if not name.startswith("_")]
