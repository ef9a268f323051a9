"""
`reduce`: α-process, sample-size plan, z-subsample and SDS.
"""
import logging

from app.cli.common import load_data, require_seed, timestamp, write_json
from app.core.logging import stage_context
from app.schemas.reduction import ReductionReport
from app.schemas.run_config import RunConfig
from app.services.opf import load_case
from app.services.opf.pipeline import default_b_bar, reduction_report
from app.services.density import filter_dataset
from app.services.reduction import reduce_dataset

logger = logging.getLogger(__name__)


def register(subparsers, parents):
    parser = subparsers.add_parser("reduce", parents=parents, help="Reduce a data set to D_alpha^z and D_alpha^eta")
    parser.add_argument("--zeta", help="bandwidth or 'auto'")
    parser.add_argument("--case", help="grid case whose variable count sets the default b_bar")
    return parser


def resolve_b_bar(config: RunConfig, dimension: int) -> int:
    """--bbar, else the case's variable count, else the data dimension."""
    if config.b_bar is not None:
        return config.b_bar
    if config.case is not None:
        return default_b_bar(load_case(config.case))
    return max(1, dimension)


def cmd_reduce(config: RunConfig) -> ReductionReport:
    seed = require_seed(config)
    ds = load_data(config)
    b_bar = resolve_b_bar(config, ds.r1 + ds.r2)
    zeta = config.zeta
    if zeta == "auto" and config.eta is None:
        zeta = filter_dataset(ds, config.alpha, zeta)[0].bandwidth
    eta = config.eta if config.eta is not None else zeta
    with stage_context("reduce"):
        outcome = reduce_dataset(ds, config.alpha, config.rho, eta, b_bar, seed, zeta=zeta,
                                 thin_points=config.stage == "full")
    report = reduction_report(outcome, config.alpha, config.rho, timestamp(config))
    write_json(config, "reduction.json", report)
    logger.info(f"D={report.D} -> D_alpha={report.D_alpha} -> z={report.z} -> z_eta={report.z_eta}")
    return report
