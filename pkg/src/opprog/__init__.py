"""Operation-program engine for multiple-choice math word problems.

Parse and execute operation programs, derive them from worked rationales,
categorize problems, match executed values to answer options, manage dataset
annotations, and serve the interactive annotation backend.
"""
from .categories import Category, ALL_CATEGORIES
from .program import (
    ArgRef,
    Constant,
    Intermediate,
    Literal,
    OpCall,
    ProblemNumber,
    Program,
    format_arg,
    format_number,
    parse_arg_token,
    parse_program,
    serialize_program,
)
from .registry import (
    ConstTable,
    OpHint,
    OpRegistry,
    OpSpec,
    RULES,
    default_constants,
    default_registry,
    load_constants,
    load_registry,
)
from .evaluator import (
    BindResult,
    BindWarning,
    EvalTrace,
    RefViolation,
    ValidationReport,
    bind_literals,
    evaluate,
    validate_refs,
)
from .textnum import NumberMention, OptionValue, extract_numbers, extract_option_values
from .categorize import (
    CategoryLexicon,
    CategoryScore,
    classify,
    default_lexicon,
    load_lexicon,
    score_categories,
)
from .annotate import (
    CandidateProgramSet,
    RationaleExpression,
    RationaleTrace,
    SearchConfig,
    canonical_arg_order,
    dp_annotate,
    enumerate_programs,
    extract_rationale_trace,
)
from .evalkit import (
    DEFAULT_BEAM_SIZE,
    WIDE_BEAM_SIZE,
    BeamChoice,
    EvalReport,
    MatchConfig,
    PredictionBeam,
    build_program_vocabulary,
    evaluate_predictions,
    load_beams,
    match_options,
    render_report,
    save_beams,
    select_from_beam,
)
from .datakit import (
    DatasetStats,
    ExpansionReport,
    LoadReport,
    ProblemRecord,
    RecordVerdict,
    SolvabilityLabel,
    classify_solvability,
    compute_stats,
    expand_annotations,
    find_near_duplicates,
    load_dataset,
    masked_tokens,
    render_stats_table,
    save_dataset,
    validate_record,
    word_edit_distance,
)
from . import errors

__version__ = "0.1.0"
