"""animetric: metric suite and benchmark harness for character-animation video.

Deterministic scorers (easing rubric, squash-and-stretch geometry, camera
classification, motion/diversity/novelty statistics) operate on
standardized ABTF artifact files; judge-based dimensions go through a
cached VLM gateway; a close-set harness aggregates everything into
reproducible reports and an open-set loop diagnoses and refines arbitrary
videos.
"""

from .appeal import (
    DynamicDegreeResult,
    SemanticExtensionTally,
    diversity_score,
    dynamic_degree,
    novelty_score,
    pair_motion_score,
    perceptual_quality,
    semantic_extension,
)
from .artifacts import (
    EmbeddingSet,
    FlowSequence,
    MaskSequence,
    QualitySeries,
    TrackSet,
    VideoCase,
    validate_mask_sequence,
)
from .camera import CameraVerdict, camera_accuracy, classify_camera, edge_displacements
from .gateway import (
    GatewayConfig,
    QAAnswer,
    QARequest,
    StubTransport,
    VlmGateway,
    cache_key,
)
from .harness import (
    BenchmarkReport,
    Manifest,
    RunConfig,
    load_manifest,
    merge_reports,
    normalize_scores,
    render_report,
    run_close_set,
)
from .openset import (
    DimensionSpec,
    OpenSetCase,
    RefinementTrace,
    diagnose,
    refine_iterate,
    refine_prompt,
)
from .qa import (
    DimensionCaseScore,
    QuestionBank,
    evaluate_case,
    evaluate_ip_rotation,
    load_question_bank,
    score_qa,
)
from .siso import (
    SisoVerdict,
    SpeedCurve,
    detect_motion_interval,
    relative_speed_curve,
    score_siso,
    smooth_speed,
)
from .squash import (
    SquashStretchResult,
    anisotropy_series,
    area_preservation,
    area_series,
    deformation_magnitude,
    squash_stretch_score,
)
from .stats import AlignmentRecord, align_dimension, cohen_kappa, spearman_rho, win_rate
from .tensorfile import (
    TensorHeader,
    read_array,
    read_tensor_file,
    write_array,
    write_tensor_file,
)

__version__ = "0.1.0"
