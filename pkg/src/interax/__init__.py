"""Faithful second-order interaction explanations of two-modality games.

A game maps subsets of image and text tokens to a similarity value; this
package finds the 2-additive surrogate closest to the game under the P_p
mask weighting (or the Shapley kernel), exactly by enumeration or from
Monte Carlo samples, and scores explanations with rank correlation,
insertion/deletion area, and pointing-game recognition.
"""

from .errors import (
    DegenerateNormalizationError,
    EnumerationGuardError,
    IllPosedFitError,
    InteraxError,
    InvalidMaskError,
    ProtocolError,
    SpaceMismatchError,
    TransportError,
    UndefinedMetricError,
    UnsupportedConversionError,
    ValidationError,
)
from .evaluation import (
    CurveSet,
    PointingGameSpec,
    faithfulness_correlation,
    greedy_extremal_subsets,
    insertion_deletion,
    pointing_game_recognition,
)
from .exact import (
    MobiusTransform,
    exact_explanation,
    exact_p_faithfulness,
    exact_weighted_banzhaf_values,
    mobius,
)
from .explanations import (
    KERNEL_SHAPLEY,
    KERNEL_WEIGHTED_BANZHAF,
    BasisSpec,
    Explanation,
    dumps_canonical,
    first_order_conversion,
)
from .games import (
    GameOracle,
    Mask,
    PlayerSpace,
    TabulatedGame,
    TwoAdditiveGame,
    evaluate,
    load_tabulated_game,
    make_random_game,
    save_tabulated_game,
)
from .protocol import OracleClient, check_oracle, make_tcp_server, serve_stdio, serve_streams
from .regression import fit, select_clique, shapley_kernel_weight
from .sampling import (
    SampleBatch,
    SamplePlan,
    estimate_p_faithfulness,
    sample,
    sample_cross_modal,
    sample_naive,
    split_budget,
)

__version__ = "0.1.0"

__all__ = [
    "BasisSpec",
    "CurveSet",
    "DegenerateNormalizationError",
    "EnumerationGuardError",
    "Explanation",
    "GameOracle",
    "IllPosedFitError",
    "InteraxError",
    "InvalidMaskError",
    "KERNEL_SHAPLEY",
    "KERNEL_WEIGHTED_BANZHAF",
    "Mask",
    "MobiusTransform",
    "OracleClient",
    "PlayerSpace",
    "PointingGameSpec",
    "ProtocolError",
    "SampleBatch",
    "SamplePlan",
    "SpaceMismatchError",
    "TabulatedGame",
    "TransportError",
    "TwoAdditiveGame",
    "UndefinedMetricError",
    "UnsupportedConversionError",
    "ValidationError",
    "check_oracle",
    "dumps_canonical",
    "estimate_p_faithfulness",
    "evaluate",
    "exact_explanation",
    "exact_p_faithfulness",
    "exact_weighted_banzhaf_values",
    "faithfulness_correlation",
    "first_order_conversion",
    "fit",
    "greedy_extremal_subsets",
    "insertion_deletion",
    "load_tabulated_game",
    "make_random_game",
    "make_tcp_server",
    "mobius",
    "pointing_game_recognition",
    "sample",
    "sample_cross_modal",
    "sample_naive",
    "save_tabulated_game",
    "select_clique",
    "serve_stdio",
    "serve_streams",
    "shapley_kernel_weight",
    "split_budget",
]
