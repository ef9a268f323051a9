"""
`opf`: the three-stage d-OPF study on a grid case.
"""
import logging

from app.cli.common import load_data, require_seed, solver_options, timestamp, write_csv, write_json
from app.schemas.opf import OpfReport
from app.schemas.run_config import RunConfig
from app.services.analysis.common import parse_sweep
from app.services.density import filter_dataset
from app.services.opf import eta_sweep, load_case, run_pipeline, synthetic_deviations

logger = logging.getLogger(__name__)

SYNTHETIC_SIZE = 1000


def register(subparsers, parents):
    parser = subparsers.add_parser("opf", parents=parents, help="Solve d-OPF over D_alpha, D_alpha^z, D_alpha^eta")
    parser.add_argument("--zeta", help="bandwidth or 'auto'")
    parser.add_argument("--case", help="bundled case name or case JSON path (default: case6)")
    parser.add_argument("--stage", choices=["full", "z-only"], help="'z-only' skips SDS")
    parser.add_argument("--eta-sweep", dest="eta_sweep", help="start:stop:count, writes eta_sweep.csv")
    return parser


def cmd_opf(config: RunConfig) -> OpfReport:
    seed = require_seed(config)
    case = load_case(config.case or "case6")
    dataset = load_data(config, required=False)
    if dataset is None:
        dataset = synthetic_deviations(SYNTHETIC_SIZE, case.n_renewable, seed)
        logger.info(f"No --data given; using {SYNTHETIC_SIZE} synthetic deviations (seed {seed})")
    zeta = config.zeta
    if zeta == "auto" and config.eta is None:
        filtered, _ = filter_dataset(dataset, config.alpha, zeta)
        zeta = filtered.bandwidth
    eta = config.eta if config.eta is not None else zeta
    options = solver_options(config)

    result = run_pipeline(case, dataset, config.alpha, config.rho, eta, zeta=zeta, seed=seed,
                          b_bar=config.b_bar, stage=config.stage, threads=config.threads, options=options,
                          record_timings=not config.no_timestamp, generated_at=timestamp(config))
    report = result.report
    write_json(config, "opf.json", report)
    write_csv(config, "opf.csv", report.stages)
    if config.eta_sweep:
        rows = eta_sweep(case, dataset, config.alpha, config.rho, parse_sweep(config.eta_sweep), zeta=zeta,
                         seed=seed, b_bar=config.b_bar, options=options)
        write_csv(config, "eta_sweep.csv", rows)
    return report
