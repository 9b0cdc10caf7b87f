"""affectkit: dataset engineering for affect-annotated scene imagery."""

__version__ = "0.1.0"

from .schema import (  # noqa: F401
    AnnotationRecord,
    EMOTIONS,
    COLOR_NAMES,
    HsvSummary,
    PersonRecord,
    StructuralFeatures,
    VadVector,
    parse_record,
    scan_corpus,
    serialize_record,
)
from .image import PixelImage  # noqa: F401
from .perceptual import (  # noqa: F401
    ExtractionConfig,
    PerceptualFeatures,
    ReferenceColorTable,
    canny_edges,
    color_proportions,
    complexity,
    curvilinearity,
    default_reference_table,
    extract_all,
    hsv_summary,
    srgb_to_lab,
)
from .curation import (  # noqa: F401
    DuplicateCluster,
    FilterPolicy,
    QualityReport,
    dedup,
    filter_corpus,
    perceptual_hash,
    sharpness_score,
)
from .affect import (  # noqa: F401
    DensityGrid,
    aggregate_vad,
    density_map,
    per_emotion_summary,
    resolve_emotion,
)
from .stats import composition_by_emotion, correlation_matrix, pearson_r  # noqa: F401
from .metrics import circular_hue_distance, color_mae, metric_report, vad_mae  # noqa: F401
from .losses import LossWeights, pack_supervision, total_loss  # noqa: F401
from .review import (  # noqa: F401
    AgreementReport,
    FieldVerdict,
    ReviewDecision,
    ReviewItem,
    ReviewQueue,
    agreement_report,
    fleiss_kappa,
    replay_log,
)
