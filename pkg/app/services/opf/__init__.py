from app.services.opf.cases import available_cases, load_case, synthetic_case, synthetic_deviations
from app.services.opf.matrices import build_matrices
from app.services.opf.pipeline import PipelineResult, eta_sweep, run_pipeline
from app.services.opf.template import (
    UncertaintyStats, balance_residual, build_template, decode_decision,
    realtime_balance_residual, replay_feasibility, uncertainty_cost, uncertainty_stats,
)
