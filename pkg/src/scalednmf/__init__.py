"""Topic clustering via NMF on diagonally scaled document-term matrices."""

from .cluster_eval import (
    AriReport,
    ContingencyTable,
    Partition,
    adjusted_rand_index,
    assign_clusters,
    rand_index,
    score_partitions,
)
from .corpus import (
    PruneReport,
    RawDocument,
    Vocabulary,
    build_vocabulary,
    count_matrix,
    load_corpus,
    prune_vocabulary,
    remove_common_tokens,
    remove_rare_tokens,
    tokenize,
)
from .errors import DataError, NumericalError
from .harness import ExperimentConfig, ExperimentReport, emit_report, ingest_documents, run_experiment
from .nmf import (
    FROBENIUS,
    ITAKURA_SAITO,
    KULLBACK_LEIBLER,
    InitKind,
    LossKind,
    NmfConfig,
    NmfModel,
    component_loss,
    factorize,
    initialize,
    objective,
)
from .rank import ElbowEstimate, SingularSpectrum, second_elbow, singular_values, sweep_range, zg_elbow
from .scaling import (
    ALL_SCALINGS,
    BipartiteMatrix,
    DocTermMatrix,
    ScaledMatrix,
    ScalingKind,
    apply_scaling,
    bipartite_block,
    marginals,
    nl_singular_bound_check,
    post_scale,
)
from .synth import SyntheticSpec, generate_synthetic_corpus

__version__ = "0.1.0"
