import logging
from collections import deque
from dataclasses import dataclass
from typing import FrozenSet, Iterable, List, Set, Tuple

from vecc.inference.jointree import Jointree

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Removal:
    """ A functional variable removed from the separator of an edge (named by its lower node), with a replica
    of its mechanism below the edge and one above it. """
    edge: int
    variable: str
    witnesses: Tuple[int, int]


@dataclass(frozen=True)
class ThinningCertificate:
    removals: Tuple[Removal, ...] = ()

    def __len__(self):
        return len(self.removals)

    def removed(self, edge: int) -> Set[str]:
        """ Variables removed from the separator of edge. """
        return {r.variable for r in self.removals if r.edge == edge}

    def verify(self, jt: Jointree) -> bool:
        """ Check that every removal has replica witnesses on both sides of its edge. """
        for removal in self.removals:
            below, above = removal.witnesses
            replicas = set(jt.replicas(removal.variable))
            if below not in replicas or above not in replicas:
                return False
            inside = set(jt.subtree_leaves(removal.edge))
            if below not in inside or above in inside:
                return False
        return True

    @property
    def variables(self) -> List[str]:
        """ Variables removed from at least one separator. """
        return sorted({r.variable for r in self.removals})


def thin(jt: Jointree, functional: Iterable[str]) -> Tuple[Jointree, ThinningCertificate]:
    """ Remove functional variables from separators where mechanism replicas make them redundant.

    For a functional variable X with at least two replicas, every leaf that mentions X without holding a copy of
    its factor keeps X on the path to its nearest replica. X is removed from every other edge that has a replica
    on both sides. Clusters are recomputed from the thinned separators.

    Args:
        jt: A jointree.
        functional: Endogenous variables whose factors are declared mechanisms.

    Returns:
        The thinned jointree and the certificate of its removals.
    """
    separators = {i: set(jt.sep(i)) for i in jt.edges}
    removals = []
    for variable in sorted(set(functional)):
        replicas = sorted(jt.replicas(variable))
        if len(replicas) < 2:
            continue
        kept = _consumer_paths(jt, variable, replicas)
        below, first_below = _replicas_below(jt, set(replicas))
        for edge in jt.edges:
            if edge in kept or variable not in separators[edge] or not 0 < below[edge] < len(replicas):
                continue
            separators[edge].discard(variable)
            inside = set(jt.subtree_leaves(edge))
            outside = next(r for r in replicas if r not in inside)
            removals.append(Removal(edge, variable, (first_below[edge], outside)))

    thinned = jt.with_separators({i: frozenset(s) for i, s in separators.items()})
    certificate = ThinningCertificate(tuple(removals))
    logger.debug(f"Thinning removed {len(removals)} separator entries of {certificate.variables}; "
                 f"width {jt.width} -> {thinned.width}.")
    return thinned, certificate


def _consumer_paths(jt: Jointree, variable: str, replicas: List[int]) -> FrozenSet[int]:
    """ Edges on the paths from leaves that mention variable to their nearest replica. """
    toward = {r: None for r in replicas}
    queue = deque(replicas)
    while queue:
        node = queue.popleft()
        for neighbor in jt.neighbors(node):
            if neighbor not in toward:
                toward[neighbor] = node
                queue.append(neighbor)

    kept = set()
    for leaf in jt.leaves:
        if jt.label(leaf).variable == variable or variable not in jt.factor_variables(leaf):
            continue
        node = leaf
        while toward[node] is not None:
            step = toward[node]
            kept.add(node if jt.parent(node) == step else step)
            node = step
    return frozenset(kept)


def _replicas_below(jt: Jointree, replicas: Set[int]):
    below = [0] * len(jt)
    first = [None] * len(jt)
    for i in jt.bottom_up():
        candidates = [i] if i in replicas else []
        candidates += [first[c] for c in jt.children(i) if first[c] is not None]
        below[i] = (i in replicas) + sum(below[c] for c in jt.children(i))
        first[i] = min(candidates) if candidates else None
    return below, first
