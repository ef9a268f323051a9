"""
`alpha`: density estimate and α-process over a data set.
"""
import logging

from app.cli.common import load_data, timestamp, write_json
from app.schemas.density import AlphaFilterReport
from app.schemas.run_config import RunConfig
from app.services.density import filter_dataset

logger = logging.getLogger(__name__)


def register(subparsers, parents):
    parser = subparsers.add_parser("alpha", parents=parents, help="Estimate joint probabilities and filter by alpha")
    parser.add_argument("--zeta", help="bandwidth or 'auto'")
    return parser


def cmd_alpha(config: RunConfig) -> AlphaFilterReport:
    ds = load_data(config)
    filtered, automatic = filter_dataset(ds, config.alpha, config.zeta)
    report = AlphaFilterReport(
        alpha=config.alpha, zeta=filtered.bandwidth, zeta_selected_automatically=automatic,
        D=ds.size, D_alpha=filtered.d_alpha, kept_indices=[int(i) for i in filtered.kept_indices],
        seed=config.seed, generated_at=timestamp(config),
    )
    write_json(config, "alpha.json", report)
    logger.info(f"D={report.D}, D_alpha={report.D_alpha}, zeta={report.zeta}")
    return report
