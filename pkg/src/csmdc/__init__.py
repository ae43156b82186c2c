"""Loss-resilient two-description coding of compressed-sensing measurements.

The toolkit covers the full chain: sparse-signal generation and Gaussian
sensing, three packetizable codecs (graded quantization, splitting, MDSQ),
convex decoders with quantization-consistency constraints, a memoryless
description-loss channel with a redundancy optimizer, and a rate-distortion
bound calculator.
"""

from .core import (
    GenConfig,
    Measurements,
    SensingMatrix,
    SparseSignal,
    coherence,
    derive_seed,
    gen_sensing_matrix,
    gen_sparse_signal,
    relative_distortion,
    sense,
)
from .quantizers import (
    MdsqCodebook,
    QuantizerSpec,
    codebook_from_bytes,
    codebook_to_bytes,
    demote_index,
    dequantize,
    make_uniform_quantizer,
    mdsq_decode_central,
    mdsq_decode_side,
    mdsq_design,
    mdsq_encode,
    quantize,
)
from .codecs import (
    DecoderInput,
    Description,
    Scheme,
    gq_central_merge,
    gq_encode,
    gq_side_extract,
    mdsq_encode_vec,
    parse,
    serialize,
    split_encode,
)
from .solvers import (
    BpdnProblem,
    GqSideProblem,
    SideGroup,
    SolverOptions,
    SolverResult,
    bpdn,
    default_epsilon,
    gq_side_solve,
)
from .channel import (
    LossModel,
    TradeoffPoint,
    avg_distortion,
    lower_left_hull,
    optimal_operating_point,
    tradeoff_curve,
    transmit,
)
from .bounds import (
    BoundInputs,
    BoundReport,
    check_hypotheses,
    estimate_d_sm_side,
    gamma_d,
    thm1_central,
    thm1_side,
    thm2_central,
    thm2_side,
)
from .config import ExperimentConfig, load_config, parse_config_text
from .harness import run_bounds, run_optimizer, run_sweep, summarize

__version__ = "0.1.0"
