"""Stage Data - stage-wise trial data, term grammar and weighted design matrices."""

from .design import (
    CenteringDivisor,
    build_design,
    check_weights,
    design_terms,
    predict,
    prepare_blocks,
    prepare_design,
    stack_columns,
    standardize,
    to_original_scale,
    weighted_center,
)
from .errors import ConfigurationError, DataValidationError, NumericalError, PdwolsError
from .loader import (
    encode_treatment,
    load_long_trial,
    load_patients,
    load_stage_dataset,
    load_trial,
)
from .models import (
    BlockStats,
    Coefficients,
    DesignBlocks,
    ModelSpec,
    MultiStageTrial,
    ScaleRecord,
    StageDataset,
    StageRecord,
    Term,
    TransformKind,
)

__version__ = "0.1.0"
__all__ = [
    "BlockStats",
    "CenteringDivisor",
    "Coefficients",
    "ConfigurationError",
    "DataValidationError",
    "DesignBlocks",
    "ModelSpec",
    "MultiStageTrial",
    "NumericalError",
    "PdwolsError",
    "ScaleRecord",
    "StageDataset",
    "StageRecord",
    "Term",
    "TransformKind",
    "build_design",
    "check_weights",
    "design_terms",
    "encode_treatment",
    "load_long_trial",
    "load_patients",
    "load_stage_dataset",
    "load_trial",
    "predict",
    "prepare_blocks",
    "prepare_design",
    "stack_columns",
    "standardize",
    "to_original_scale",
    "weighted_center",
]
