# Creates a pbnt experiment config file from script arguments
# NOTE: the topology is referred to the root_dir provided as an argument.
#
# USAGE EXAMPLE:
# python make_conf_file.py  -d $HOME/pbnt  \
#                           -t fixtures/bics_scale.gml -m 10 \
#                           -k 1 2 3 -s pop face gc apc \
#                           -c bics_sweep.json

import os
import sys
import argparse

from pbnt.run import ConfigError, make_config


def make_experiment_config(root_dir,
                           config_name = 'experiment_local.json',
                           topology = 'fixtures/bics_scale.gml',
                           monitor_count = 10,
                           failures = (1,),
                           strategies = ('pop', 'face'),
                           budget = 'untilConvergence',
                           repetitions = 20,
                           master_seed = 0,
                           prior = 0.1,
                           output_dir = 'configs'):

    os.makedirs(output_dir, exist_ok=True)
    config_file = os.path.join(output_dir, config_name)
    try:
        # absolute paths pass load_config unchanged
        make_config(config_file,
                    topology=os.path.abspath(os.path.join(root_dir, topology)),
                    monitorCount=monitor_count,
                    failures=list(failures),
                    strategies=list(strategies),
                    budget=budget,
                    repetitions=repetitions,
                    masterSeed=master_seed,
                    prior=prior)
    except ConfigError as err:
        sys.stderr.write(f'[ERROR] invalid experiment config: {err}\n')
        sys.exit(2)
    sys.stdout.write(f'[INFO] pbnt experiment config file created at: {config_file}\n')
    return config_file


if __name__=='__main__':
    parser = argparse.ArgumentParser()

    parser.add_argument("-d", "--rootdir", type=str, default='.',
                        help="pbnt root directory.")
    parser.add_argument("-c", "--config", type=str, default = 'experiment_local.json',
                        help="JSON config file name.")
    parser.add_argument("-t", "--topology", type=str, default='fixtures/bics_scale.gml',
                        help="topology file, relative to the root directory.")
    parser.add_argument("-m", "--monitors", type=int, default = 10,
                        help="number of randomly placed monitors.")
    parser.add_argument("-k", "--failures", type=int, nargs='+', default=[1],
                        help="failed node counts to sweep.")
    parser.add_argument("-s", "--strategies", type=str, nargs='+', default=['pop', 'face'],
                        help="static strategies to compare.")
    parser.add_argument("-b", "--budget", type=str, default='untilConvergence',
                        help="probe budget mode.")
    parser.add_argument("-r", "--repetitions", type=int, default = 20,
                        help="repetitions per failure count.")
    parser.add_argument("-e", "--seed", type=int, default = 0,
                        help="master seed.")
    parser.add_argument("-p", "--prior", type=float, default = 0.1,
                        help="node failure prior.")
    parser.add_argument("-o", "--outputdir", type=str, default='configs',
                        help="folder the config is written to.")

    args = parser.parse_args()

    make_experiment_config(
        args.rootdir,
        args.config,
        args.topology,
        args.monitors,
        args.failures,
        args.strategies,
        args.budget,
        args.repetitions,
        args.seed,
        args.prior,
        args.outputdir
    )
