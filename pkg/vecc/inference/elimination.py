import itertools
import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import networkx as nx

from vecc.core.graph import CausalGraph

logger = logging.getLogger(__name__)

HEURISTICS = ("min-fill", "min-degree", "given")


@dataclass(frozen=True)
class EliminationOrder:
    """ A total order of the variables of a graph and its width on the moral graph. """
    order: Tuple[str, ...]
    width: int

    def __iter__(self):
        return iter(self.order)

    def __len__(self):
        return len(self.order)


def elimination_order(graph: CausalGraph, heuristic: str = "min-fill", order: Sequence[str] = None) \
        -> EliminationOrder:
    """ Compute an elimination order of all variables of the graph.

    Args:
        graph: The causal graph.
        heuristic: "min-fill" (fewest fill-in edges, then smallest clique, then name), "min-degree" (smallest
            degree, then name) or "given", which takes the order argument as is.
        order: The user order for the "given" heuristic.

    Returns:
        The order with its width, the size of the largest clique created minus one.
    """
    moral = graph.moral_graph()
    if heuristic == "given":
        if order is None:
            raise ValueError("The given heuristic needs an order.")
        order = tuple(order)
        missing = set(graph.names) - set(order)
        if missing:
            raise ValueError(f"Given order is missing variables {sorted(missing)}.")
        unknown = set(order) - set(graph.names)
        if unknown or len(order) != len(set(order)):
            raise ValueError(f"Given order must list every variable exactly once; unknown: {sorted(unknown)}.")
        return EliminationOrder(order, order_width(moral, order))
    if heuristic == "min-fill":
        key = _min_fill_key
    elif heuristic == "min-degree":
        key = _min_degree_key
    else:
        raise ValueError(f"Unknown elimination heuristic {heuristic!r}; expected one of {HEURISTICS}.")

    work = moral.copy()
    chosen, width = [], 0
    while work.number_of_nodes() > 0:
        v = min(work.nodes, key=lambda n: key(work, n))
        width = max(width, work.degree(v))
        _eliminate(work, v)
        chosen.append(v)
    result = EliminationOrder(tuple(chosen), width)
    logger.debug(f"{heuristic} order of width {width}: {' '.join(chosen)}")
    return result


def order_width(moral: nx.Graph, order: Sequence[str]) -> int:
    """ Width of an elimination order on an undirected graph. """
    work = moral.copy()
    width = 0
    for v in order:
        width = max(width, work.degree(v))
        _eliminate(work, v)
    return width


def exact_treewidth(graph: CausalGraph) -> int:
    """ Minimum width over all elimination orders, by exhaustive search. Only for graphs of at most 8 variables. """
    names = graph.names
    if len(names) > 8:
        raise ValueError(f"Exhaustive treewidth is limited to 8 variables, the graph has {len(names)}.")
    if not names:
        return 0
    moral = graph.moral_graph()
    return min(order_width(moral, order) for order in itertools.permutations(names))


def _fill_in(work: nx.Graph, v) -> int:
    return sum(1 for a, b in itertools.combinations(work.neighbors(v), 2) if not work.has_edge(a, b))


def _min_fill_key(work: nx.Graph, v):
    return _fill_in(work, v), work.degree(v) + 1, v


def _min_degree_key(work: nx.Graph, v):
    return work.degree(v), v


def _eliminate(work: nx.Graph, v):
    work.add_edges_from(itertools.combinations(work.neighbors(v), 2))
    work.remove_node(v)
