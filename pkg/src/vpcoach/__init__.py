"""Visual-prompt coaching toolkit for grounded video reasoning.

The pieces: a grounded trace grammar (`trace`), the reward suite
(`rewards`), the hard-sample coach loop (`coach`), visual prompt rendering
(`prompts`), pseudo-label selection (`selector_data`), evaluation metrics
(`metrics`), and file formats plus the CLI (`dataio`, `cli`).
"""

from .coach import (
    CoachConfig,
    CoachDirective,
    CoachSample,
    CoachStepResult,
    HardDecision,
    RolloutSource,
    Trajectory,
    build_prompt_inputs,
    coach_step,
    identify_hard,
    per_sample_seed,
    relative_gain,
    run_coach,
    run_rollouts,
    run_summary,
    sd_loss_spec,
    select_distillation_set,
)
from .dataio import (
    build_configs,
    canonical_json,
    load_configs,
    load_dataset,
    parse_config_file,
    parse_convention,
    parse_ground_truth,
    read_jsonl,
    write_jsonl,
)
from .errors import (
    ComponentAtOne,
    EmptyGroundTruth,
    EmptyVideo,
    LengthMismatch,
    MissingBoxes,
    MissingGroundTruth,
    MissingRelevanceProvider,
    NoAnswerFound,
    NoCandidates,
    PolicyFailure,
    SchemaError,
    SelectorFailure,
    VpcoachError,
)
from .geometry import (
    INT999,
    NORMALIZED,
    BoundingBox,
    BoxConvention,
    KeyframeObjects,
    TemporalAnnotation,
    box_iou,
    canonical_box,
    clamp_unit,
    interval_iou,
    match_timestamp,
)
from .matching import (
    DEFAULT_MATCH,
    MatchConfig,
    edit_similarity,
    hierarchical_similarity,
    levenshtein,
    normalize_name,
    rouge_l_f1,
    soft_identity_match,
    token_jaccard,
)
from .metrics import (
    ChainScores,
    am,
    chain_report,
    gm,
    interval_report,
    lgm,
    mam,
    mean_iou,
    mlgm,
    recall_at_iou,
)
from .policies import (
    ConstantSelector,
    ExternalCommandPolicy,
    ExternalCommandSelector,
    Policy,
    PolicyRequest,
    ScriptedPolicy,
    Selector,
    SelectorRequest,
    TableSelector,
)
from .prompts import (
    DEFAULT_HINTS,
    KIND_TIE_ORDER,
    FileRelevanceProvider,
    GaussianBumpProvider,
    PromptKind,
    PromptedSample,
    RelevanceProvider,
    apply_attention_overlay,
    apply_darken,
    apply_frame_numbers,
    apply_red_circle,
    build_prompted_sample,
    load_frame,
    load_hint_templates,
    save_frame,
    uniform_sample_frames,
    uniform_sample_indices,
)
from .rewards import (
    DEFAULT_REWARDS,
    CandidateStatistic,
    GroundTruthAnnotation,
    RewardBreakdown,
    RewardConfig,
    SpatialMode,
    accuracy_reward,
    count_grounding,
    format_reward,
    group_normalize,
    overall_reward,
    spatial_reward,
    temporal_reward,
)
from .selector_data import (
    CandidateScore,
    LabelGroundTruth,
    ReasonerScore,
    SelectionMode,
    label_distribution,
    score_candidate,
    select_pseudo_label,
)
from .trace import (
    GroundedTuple,
    ParsedTrace,
    TaskKind,
    extract_answer,
    parse_trace,
    render_trace,
)

__version__ = "0.1.0"
