"""
`verify <experiment>`: run one of the verification experiments.
"""
import logging

from app.cli.common import load_data, require_seed, solver_options, timestamp, write_csv, write_json
from app.schemas.run_config import RunConfig
from app.services.analysis import EXPERIMENTS, experiments
from app.services.analysis.common import parse_sweep

logger = logging.getLogger(__name__)

DEFAULT_TRIALS = {"varrho": 10000, "phi": 20, "omega": 200, "scenario": 200, "scaling": 10}
DEFAULT_SWEEPS = {"phi": "0.01:0.1:5", "omega": "0.05:0.2:4", "scaling": "0.02:0.06:5"}


def register(subparsers, parents):
    parser = subparsers.add_parser("verify", parents=parents, help="Run a verification experiment")
    parser.add_argument("experiment", choices=EXPERIMENTS, help="experiment name")
    parser.add_argument("--zeta", help="bandwidth or 'auto' (scenario pool)")
    parser.add_argument("--eta-sweep", dest="eta_sweep", help="start:stop:count")
    return parser


def _sweep(config: RunConfig):
    if config.eta_sweep:
        return parse_sweep(config.eta_sweep)
    if config.eta is not None:
        return [config.eta]
    return parse_sweep(DEFAULT_SWEEPS[config.experiment])


def cmd_verify(config: RunConfig):
    seed = require_seed(config)
    name = config.experiment
    trials = config.trials or DEFAULT_TRIALS[name]
    options = solver_options(config)
    stamp = timestamp(config)
    logger.info(f"Running experiment '{name}' with {trials} trials, seed {seed}")

    if name == "varrho":
        report = experiments.varrho_experiment(trials, seed, b_bar=config.b_bar or 1,
                                               threads=config.threads, options=options)
        rows = [{"z": int(e.parameters["z"]), "observed": e.observed, "bound": e.bound,
                 "sigma": e.sigma, "verdict": e.verdict, "failures": e.failures} for e in report.experiments]
    elif name == "phi":
        report = experiments.phi_experiment(_sweep(config), trials, seed, options=options)
        rows = [{"eta": e.eta, "phi_lower": e.phi_lower, "phi_measured": e.phi_measured,
                 "respected": e.respected} for e in report.estimates]
    elif name == "omega":
        report = experiments.omega_experiment(_sweep(config), trials, seed, threads=config.threads,
                                              options=options)
        rows = report.points
    elif name == "scenario":
        zeta = experiments.SCENARIO_ZETA if config.zeta == "auto" else config.zeta
        reports = experiments.scenario_experiment(config.alpha, trials, seed, zeta=zeta,
                                                  threads=config.threads)
        report = {"comparisons": [r.model_dump(mode="json") for r in reports], "generated_at": stamp}
        rows = reports
    else:
        report = experiments.scaling_experiment(_sweep(config), trials, seed,
                                                points=load_data(config, required=False))
        rows = [{"eta": e, "mean_z_eta": z} for e, z in zip(report.etas, report.mean_z_eta)]

    if not isinstance(report, dict):
        report = report.model_copy(update={"generated_at": stamp})
    write_json(config, f"verify_{name}.json", report)
    write_csv(config, f"verify_{name}.csv", rows)
    return report
