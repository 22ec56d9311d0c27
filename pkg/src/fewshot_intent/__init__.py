"""Few-shot intent detection on fixed dual-encoder sentence embeddings.

Small MLP classifiers trained on precomputed sentence vectors, with a
reproducible k-shot evaluation protocol, a one-factor hyperparameter
robustness sweep, and CPU benchmarks. See the CLI (``fsi``) for the
end-to-end pipeline.
"""

from ._kernels import active_backend_name, available_backends, get_backend
from .dataset import (
    Dataset,
    FewShotSplit,
    LabelIndex,
    Row,
    build_label_index,
    dataset_digest,
    few_shot_sample,
    ingest_pack,
    load_dataset,
    load_pack,
)
from .errors import (
    BenchmarkError,
    ComparisonError,
    DatasetError,
    DivergenceError,
    FsiError,
    SamplingError,
    StoreError,
    UsageError,
)
from .mlp import (
    MlpConfig,
    MlpModel,
    TrainHistory,
    evaluate,
    forward,
    gradient_check,
    init_model,
    load_model,
    loss,
    lr_schedule,
    pivot_config,
    predict,
    save_model,
    train,
)
from .stores import (
    EmbeddingStore,
    concat_stores,
    l2_normalize_rows,
    lookup,
    read_store,
    write_store,
)
from .experiments import (
    ExperimentResult,
    ExperimentSpec,
    SweepReport,
    compare_to_reference,
    run_experiment,
    run_sweep,
    sweep_grid,
)

__version__ = "0.1.0"
