#!/usr/bin/env python

"""cli.py: command line entry point `pbnt` with the run, dynamic, oracle and bound subcommands."""
import argparse
import logging
import os
import sys

import pandas as pd

from . import __version__
from . import io as pbio
from .bayes import ContradictionError
from .oracle import certain_count, enumerate_posteriors
from .run import ConfigError, load_config, run_dynamic_experiment, run_experiment
from .utility import BoundInputs, alpha_bound, bound_sweep

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def _observation(text):
    try:
        pid, works = text.split(':')
        if works not in ('0', '1'):
            raise ValueError
        return int(pid), works == '1'
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected <path id>:<0|1>, got {text!r}")


def _experiment(args, runner):
    try:
        config = load_config(args.config)
    except (ConfigError, OSError) as err:
        sys.stderr.write(f"invalid config {args.config}: {err}\n")
        return 2
    os.makedirs(args.out, exist_ok=True)
    pbio.log_setup('pbnt', logging.DEBUG, os.path.join(args.out, 'pbnt.log'))
    try:
        runner(config, args.out, args.jobs)
    except (ConfigError, pbio.TopologyError) as err:
        sys.stderr.write(f"{err}\n")
        return 2
    sys.stdout.write(f"Script finished. Reports in {args.out}\n")
    return 0


def cmd_run(args):
    return _experiment(args, run_experiment)


def cmd_dynamic(args):
    return _experiment(args, run_dynamic_experiment)


def cmd_oracle(args):
    try:
        labels = pbio.read_topology(args.topology).labels if args.topology else None
        paths, labels = pbio.read_paths(args.paths, labels)
        result = enumerate_posteriors(paths, args.observe, args.prior)
    except (OSError, ContradictionError, ValueError) as err:
        sys.stderr.write(f"{err}\n")
        return 2
    rows = [{'kind': 'joint', 'id': '', 'label': '', 'value': result.joint_prob}]
    rows += [{'kind': 'path', 'id': pid, 'label': '', 'value': v} for pid, v in result.path_working.items()]
    rows += [{'kind': 'node', 'id': v, 'label': labels[v], 'value': p} for v, p in result.node_failure.items()]
    pd.DataFrame(rows).to_csv(sys.stdout, index=False, float_format='%.12g', lineterminator='\n')
    logger.info(f"{certain_count(result)} of {len(result.node_failure)} node states are certain.")
    return 0


def cmd_bound(args):
    if args.sweep:
        table = bound_sweep(ps=args.sweep_p)
        table.to_csv(sys.stdout, index=False, float_format='%.6g', lineterminator='\n')
        logger.info(f"largest ratio {table['ratio'].max():.4f}")
        return 0
    try:
        inputs = BoundInputs(args.p, args.len_max, args.deg_max, args.cand_len, args.f1)
    except ValueError as err:
        sys.stderr.write(f"{err}\n")
        return 2
    delta_min, delta_max, alpha = alpha_bound(inputs)
    row = pd.DataFrame([{'deltaMin': delta_min, 'deltaMaxPrime': delta_max, 'alpha': alpha}])
    row.to_csv(sys.stdout, index=False, float_format='%.6g', lineterminator='\n')
    return 0


def make_parser():
    parser = argparse.ArgumentParser(prog='pbnt', description="Progressive Boolean network tomography.")
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest='command', required=True)

    for name, func, text in (('run', cmd_run, "static strategy experiment"),
                             ('dynamic', cmd_dynamic, "dynamic window experiment")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", type=str, required=True, help="JSON experiment config.")
        p.add_argument("--out", type=str, required=True, help="output directory for the CSV reports.")
        p.add_argument("-n", "--jobs", type=int, default=1,
                       help="Number of multiprocessing processes to use. If n=1, run serially.")
        p.set_defaults(func=func)

    p = sub.add_parser('oracle', help="brute-force posteriors of a path fixture")
    p.add_argument("--paths", type=str, required=True, help="path fixture, one comma-separated path per line.")
    p.add_argument("--prior", type=float, default=0.1, help="node failure prior.")
    p.add_argument("--observe", type=_observation, action='append', default=[],
                   help="observation <path id>:<1 works|0 fails>, repeatable.")
    p.add_argument("--topology", type=str, default=None, help="topology whose labels number the nodes.")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser('bound', help="approximation constant of the greedy policy")
    p.add_argument("--p", type=float, default=0.1, help="node failure prior.")
    p.add_argument("--deg-max", type=int, default=1, help="largest number of failed paths through a node.")
    p.add_argument("--len-max", type=int, default=2, help="longest path length.")
    p.add_argument("--cand-len", type=int, default=2, help="residual size of the candidate.")
    p.add_argument("--f1", type=int, default=0, help="nodes the candidate pins by exclusion.")
    p.add_argument("--sweep", action='store_true', help="print the exclusion bound ratio grid instead.")
    p.add_argument("--sweep-p", type=float, nargs='+', default=[0.05, 0.1, 0.3], help="priors of the grid.")
    p.set_defaults(func=cmd_bound)
    return parser


def main(argv=None):
    args = make_parser().parse_args(argv)
    return args.func(args)


if __name__ == '__main__':
    sys.exit(main())
