"""Online labeling / file maintenance testbed.

Insert n keys from a huge ordered universe, assign labels from [1, m]
preserving order, pay one per (re)label.  The package bundles the pieces
needed to study worst-case relabeling cost at desk scale: a trace harness
with cost accounting and laziness auditing, subject algorithms, the
nested-segment adversary with machine-checked invariants, the induced
prefix-bucketing game, and the admissible-tree characterization of optimal
bucketing cost with exact small-instance oracles.
"""

from .adversary import (
    AdversaryInvariantError,
    AdversaryTranscript,
    SegmentHierarchy,
    UniverseExhaustedError,
    adversary_run,
    critical_level,
    densify,
    densify_oracle,
    first_phase_key,
    midpoint_key,
    rebuild_hierarchy,
    verify_adversary_transcript,
    weight,
)
from .algorithms import (
    ALGORITHMS,
    EvenSpread,
    NonlazyDemo,
    WeightBalanced,
    laziness_audit,
    make_algorithm,
)
from .bucketing import (
    BucketingTrace,
    LevelSets,
    bucketing_cost,
    bucketing_step,
    derive_bucketing,
    lower_bound_report,
    optimal_cost_bruteforce,
    replay_p_sequence,
    verify_reduction,
)
from .core import (
    Allocation,
    AlgorithmFault,
    CapacityError,
    Segment,
    StructuralError,
    Trace,
    TraceStep,
    busy_segment,
    ceil_log2,
    is_lazy_step,
    relocated_set,
    run_trace,
)
from .transcript import TranscriptParseError, load_transcript, save_transcript
from .trees import (
    build_min_depth_tree,
    enumerate_admissible,
    is_admissible,
    is_admissible_principal,
    max_admissible_size,
    min_depth,
    parse_tree,
    serialize_tree,
    strategy_from_tree,
    tree_cost,
    tree_depth,
    tree_size,
    trees_from_bucketing,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
