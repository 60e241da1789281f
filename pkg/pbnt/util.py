#!/usr/bin/env python

"""util.py: worker pool, seeded substreams and node bitsets."""
from concurrent.futures import ProcessPoolExecutor
import multiprocessing as mp
from functools import partial

import numpy as np

# purpose codes mixed into the seed so that each random concern gets its own stream
SEED_MONITORS = 0
SEED_ROUTING = 1
SEED_FAILURES = 2
SEED_DYNAMIC = 3


def to_mask(nodes):
    """Encode a set of node ids as an integer bitset."""
    mask = 0
    for v in nodes:
        mask |= 1 << int(v)
    return mask


def from_mask(mask):
    """Decode an integer bitset into a sorted list of node ids."""
    nodes = []
    v = 0
    while mask:
        if mask & 1:
            nodes.append(v)
        mask >>= 1
        v += 1
    return nodes


def popcount(mask):
    return bin(mask).count("1")


def make_rng(master_seed, *counters):
    """Seeded generator for the substream addressed by (master_seed, *counters).

    Substreams depend only on their own counters, so adding repetitions never
    reshuffles the earlier ones.

    Args:
        master_seed (int): experiment seed
        counters (int): e.g. purpose code, repetition index

    Returns:
        numpy.random.Generator: independent generator
    """
    entropy = [int(master_seed)] + [int(c) for c in counters]
    if min(entropy) < 0:
        raise ValueError("seeds and counters must be non-negative integers.")
    return np.random.default_rng(np.random.SeedSequence(entropy))


def parallel_analysis(jobs, param, parallelWorker, nWorkers=5):
    """Use multiprocessing to run independent simulation jobs.

    Args:
        jobs (list): one argument per job, handed to parallelWorker as first argument
        param (dict): shared parameters, handed to parallelWorker as keyword `params`
        parallelWorker (func): module level function `f(job, params)`
        nWorkers (int, optional): processes to use, if 1 will run without multiprocessing. Defaults to 5.

    Returns:
        list: results in job order
    """
    worker = partial(parallelWorker, params=param)
    if nWorkers == 1 or len(jobs) <= 1:
        func = map
        pool = None
    else:
        pool = ProcessPoolExecutor(max_workers=nWorkers, mp_context=mp.get_context("spawn"))
        func = pool.map

    results = []
    try:
        for res in func(worker, jobs):
            results.append(res)
    finally:
        if pool:
            # Ensure correct termination of Pool
            pool.shutdown()
    return results
