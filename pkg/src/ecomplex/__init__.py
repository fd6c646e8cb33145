"""Economic complexity metrics (ECI, Fitness, Diversity, Entropy) for region-industry firm counts."""

__version__ = "0.1.0"

from .advantage import AdvantageMatrix, RcaMatrix, avg_ubiquity, binarize, prune, quadrants, rca
from .complexity import ComplexityScores, compute_scores, coupling_matrix, eci, entropy, fitness
from .ingest import CountMatrix, FirmRecord, PanelTable, build_count_matrix, is_active, parse_firm_records, parse_panel
from .stats import (
    MetricTable,
    RegressionResult,
    average_window,
    correlation_matrix,
    ols_fixed_effects,
    pearson,
    rank,
    rank_evolution,
    ricd,
)
