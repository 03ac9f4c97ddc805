"""Double sequences and finite-window convergence diagnostics."""

from .analysis import (DichotomyReport, ExtractionResult, dichotomy_report,
                       extract_convergent_subsequence, i_stat_cluster_points, subsequence_along)
from .indicators import (EXACT, BudgetExceeded, IndicatorRecord, Mode, averaged_levy_sum,
                         istar_pre_cauchy_indicator, pre_cauchy_indicator, pringsheim_limit_estimate,
                         real_pre_cauchy_indicator, sampled, stat_exceptional_density,
                         strong_ist_indicator)
from .sequences import DoubleSequence, builtin_sequences, get_sequence

__all__ = [
    "BudgetExceeded", "DichotomyReport", "DoubleSequence", "EXACT", "ExtractionResult",
    "IndicatorRecord", "Mode", "averaged_levy_sum", "builtin_sequences", "dichotomy_report",
    "extract_convergent_subsequence", "get_sequence", "i_stat_cluster_points",
    "istar_pre_cauchy_indicator", "pre_cauchy_indicator", "pringsheim_limit_estimate",
    "real_pre_cauchy_indicator", "sampled", "stat_exceptional_density", "strong_ist_indicator",
    "subsequence_along",
]
