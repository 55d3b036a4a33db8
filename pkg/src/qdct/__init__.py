"""Desk-scale simulator of threshold-window amplitude-amplified DCT
coefficient search, embedded in a block image-compression pipeline."""

from .amplitude import (
    AmplitudeState,
    CoefficientCache,
    MarkPredicate,
    ThresholdWindow,
    apply_diffusion,
    apply_phase_oracle,
    coefficient_cache,
    g_entry_cache,
    gdct_iterate,
    measure,
    sample,
    success_probability,
    uniform_state,
    value_cache,
)
from .costs import (
    DEFAULT_COST_MODEL,
    CostModel,
    OpCounters,
    ScalingReport,
    gdct_iteration_time,
    inner_product_time,
    scaling_report,
)
from .driver import (
    EnergyLedger,
    RoundRecord,
    RunReport,
    SparseCoefficients,
    decode_index,
    qdct1,
    qdct2,
    subroutine1,
    subroutine2,
)
from .images import (
    CompressedImage,
    compress,
    decompress,
    merge_blocks,
    parse_container,
    psnr,
    read_pgm,
    serialize_container,
    split_blocks,
    write_pgm,
)
from .search import (
    SearchConfig,
    SearchOutcome,
    SeededRng,
    boyer_find,
    derive_seed,
    expected_iterations_bound,
)
from .transform import build_dct_matrix, dct1d, dct2d, energy, idct1d, idct2d

__version__ = "0.1.0"
