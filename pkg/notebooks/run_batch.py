import os
import sys
import argparse
import logging

from pbnt import io as pbio
from pbnt.run import ConfigError, load_config, run_dynamic_experiment, run_experiment

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


# worker function for a single experiment config
def work(job, nworkers=1):
    fname, outPath, dynamic = job
    try:
        config = load_config(fname)
        os.makedirs(outPath, exist_ok=True)
        run_experiment(config, outPath, nworkers)
        if dynamic and config.dynamic is not None:
            run_dynamic_experiment(config, outPath, nworkers)
    # skips to next config if error raised to streamline the batch
    except (ConfigError, pbio.TopologyError, OSError) as err:
        sys.stderr.write(f"Error processing config: {fname}\n")
        logger.exception(err)


def main(batchPath, outPath, nworkers=1, mock=False, filterword="", dynamic=False):
    """run every experiment config of a folder.

        mock (bool): if True, list the jobs but don't run the experiments.
        nworkers (int): worker processes handed to each experiment.
    """
    if not os.path.isdir(batchPath):
        sys.stdout.write('Batch path is not a directory or not found.\n')
        sys.exit()

    jobs = []
    for entry in sorted(os.scandir(batchPath), key=lambda e: e.name):
        name, ext = os.path.splitext(entry.name)
        if entry.is_file() and ext == '.json' and not name.startswith('.') and filterword in name:
            jobs.append((entry.path, os.path.join(outPath, name), dynamic))

    if mock:
        for fname, out, _ in jobs:
            sys.stdout.write(f"{fname}:{out}\n")
        sys.stdout.write(f'Created {len(jobs)} jobs. Mock run only, no experiments.\n')
        sys.exit()

    for i, job in enumerate(jobs):
        work(job, nworkers)
        sys.stdout.write('\rdone {0:%}\n'.format((i + 1) / len(jobs)))
    sys.stdout.write(f'Script finished. Completed {len(jobs)} jobs. \n')


if __name__=='__main__':
    parser = argparse.ArgumentParser()
    parser.add_argument("batchpath", type=str,
                        help="folder of JSON experiment configs, one experiment per file.")
    parser.add_argument("-o", "--outpath", type=str, default='out_data',
                        help="output folder, every config writes to a subfolder named after it.")
    parser.add_argument("-m", "--mock", action='store_true',
                        help="run a mock batch without actually starting the experiments.")
    parser.add_argument("-n", "--nworkers", type=int, default = 1,
                        help="Number of multiprocessing processes to use for parallelization. If n=1, run serially..")
    parser.add_argument("-f", "--filter", type=str, default = "",
                        help="run only configs whose name contains this string.")
    parser.add_argument("-d", "--dynamic", action='store_true',
                        help="also run the dynamic section of each config.")

    args = parser.parse_args()
    main(args.batchpath, args.outpath, args.nworkers, args.mock, args.filter, args.dynamic)
