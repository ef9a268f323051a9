from app.services.analysis.common import bound_respected, parse_sweep
from app.services.analysis.omega import verify_omega_monotone
from app.services.analysis.scaling import z_eta_scaling
from app.services.analysis.scenario import compare_scenario_method, estimate_cc_feasibility
from app.services.analysis.sensitivity import compute_sensitivity, estimate_phi_bound, phi_sweep
from app.services.analysis.varrho import verify_varrho, verify_varrho_sweep

EXPERIMENTS = ("varrho", "phi", "omega", "scenario", "scaling")
