#!/usr/bin/env python

"""io.py: topology and path fixture readers, report writers and logger setup."""
import logging
import os
import re

import networkx as nx
import pandas as pd

from .topology import MonitoringPath, from_graph

FORMATS = ('gml', 'edgelist')


class TopologyError(ValueError):
    """A topology or path fixture could not be read."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


_GRAPH_OPEN = re.compile(r"\bgraph\s*\[")
_EDGE_OPEN = re.compile(r"\bedge\s*\[")
_POSITION = re.compile(r"\((\d+), (\d+)\)")
_EDGE_INDEX = re.compile(r"edge #(\d+)")


def _edge_line(text, index):
    for i, match in enumerate(_EDGE_OPEN.finditer(text)):
        if i == index:
            return text.count('\n', 0, match.start()) + 1
    return None


def parse_gml(text):
    """Read the GML subset (graph, node, edge, id, label, source, target).

    Args:
        text (str): GML document

    Returns:
        Network: network with dense ids, GML labels (or ids) as node labels
    """
    # parsing as a multigraph lets duplicated edges through, they are collapsed afterwards
    patched = _GRAPH_OPEN.sub(lambda m: m.group(0) + " multigraph 1", text, count=1)
    try:
        graph = nx.parse_gml(patched, label='id')
    except nx.NetworkXError as err:
        message = str(err).splitlines()[0]
        line = None
        position = _POSITION.search(message)
        edge = _EDGE_INDEX.search(message)
        if position:
            line = int(position.group(1))
        elif edge:
            line = _edge_line(text, int(edge.group(1)))
        if 'undefined' in message:
            message = f"dangling edge endpoint, {message}"
        raise TopologyError(message, line) from err
    try:
        return from_graph(graph)
    except ValueError as err:
        raise TopologyError(str(err)) from err


def parse_edgelist(text):
    """Read a whitespace-separated edge list, one 'u v' pair per line, '#' starts a comment."""
    graph = nx.Graph()
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split('#', 1)[0].split()
        if not tokens:
            continue
        if len(tokens) != 2:
            raise TopologyError(f"expected two node labels, found {len(tokens)}", lineno)
        graph.add_edge(*tokens)
    if graph.number_of_nodes() == 0:
        raise TopologyError("edge list holds no edges.")
    try:
        return from_graph(graph)
    except ValueError as err:
        raise TopologyError(str(err)) from err


def parse_topology(text, fmt):
    """Parse a topology given as text in format 'gml' or 'edgelist'."""
    if fmt == 'gml':
        return parse_gml(text)
    if fmt == 'edgelist':
        return parse_edgelist(text)
    raise ValueError(f"unknown topology format {fmt!r}, use one of {FORMATS}")


def read_topology(fname, fmt=None):
    """Load a topology file, the format defaults to the file suffix (.gml or anything else as edge list)."""
    if fmt is None:
        fmt = 'gml' if fname.lower().endswith('.gml') else 'edgelist'
    with open(fname, encoding='utf-8') as f:
        return parse_topology(f.read(), fmt)


def parse_paths(text, labels=None):
    """Read a path fixture: one path per line, comma-separated node labels.

    Args:
        text (str): fixture content, blank lines and lines starting with '#' are skipped
        labels (sequence, optional): label of every node id, e.g. Network.labels. If None,
            ids are assigned by first appearance. Defaults to None.

    Returns:
        list: MonitoringPath objects, ids in line order
        tuple: node labels indexed by id
    """
    fixed = labels is not None
    labels = list(labels) if fixed else []
    lookup = {label: v for v, label in enumerate(labels)}
    paths = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith('#'):
            continue
        nodes = []
        for label in (t.strip() for t in line.split(',')):
            if not label:
                raise TopologyError("empty node label", lineno)
            if label not in lookup:
                if fixed:
                    raise TopologyError(f"unknown node label {label!r}", lineno)
                lookup[label] = len(labels)
                labels.append(label)
            nodes.append(lookup[label])
        try:
            paths.append(MonitoringPath(len(paths), nodes))
        except ValueError as err:
            raise TopologyError(str(err), lineno) from err
    return paths, tuple(labels)


def read_paths(fname, labels=None):
    with open(fname, encoding='utf-8') as f:
        return parse_paths(f.read(), labels)


def write_label_table(labels, fname):
    """Persist the label <-> id table as CSV with columns id,label."""
    table = pd.DataFrame({'id': range(len(labels)), 'label': list(labels)})
    table.to_csv(fname, index=False)
    return table


def write_csv(df, fname):
    """Write a report with the fixed CSV conventions (UTF-8, dot decimal, no index)."""
    folder = os.path.dirname(fname)
    if folder:
        os.makedirs(folder, exist_ok=True)
    df.to_csv(fname, index=False, encoding='utf-8', float_format='%.10g', lineterminator='\n')


def log_setup(name, level, fname):
    """This function will setup a logger with the name and level you pass as input.
    Levels are 10 (debug), 20 (info), 30 (warning), 40 (error), 50 (critical).

    Args:
        name (str): name of the logger object
        level (int): logging level {10,20,30,40,50}
        fname (str): filename for writing the log messages

    Returns:
        logging.Logger: a logger
    """
    logger = logging.getLogger(name)
    formatter = logging.Formatter('%(asctime)s | %(name)s |  %(levelname)s: %(message)s')
    # has to be logging.LEVEL not a string
    logger.setLevel(level)
    file_handler = logging.FileHandler(fname, 'w')
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(formatter)
    logger.addHandler(file_handler)
    return logger
