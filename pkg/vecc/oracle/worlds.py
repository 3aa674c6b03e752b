import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterator, Mapping, Sequence

import numpy as np
import pandas as pd

from vecc.core.event import Event, Observational, Counterfactual, check_event, components_of
from vecc.core.scm import Scm
from vecc.inference.factor import Factor

logger = logging.getLogger(__name__)


class EnumerationCapError(RuntimeError):
    """ Raised when a model has more worlds than the enumeration cap allows. """


@dataclass(frozen=True)
class World:
    """ An instantiation of the exogenous variables, its probability, and the endogenous state it induces. """
    assignment: Dict[str, int]
    probability: float
    induced: Dict[str, int]


class WorldTable:
    """ All worlds of an SCM in row-major order over its exogenous variables in declaration order.

    Columns are stored as one integer array per variable so that events can be tested for every world at once.
    The row index of a world is the same in every sub-model of the SCM.
    """

    MAX_WORLDS = 2 ** 24

    def __init__(self, scm: Scm):
        self._scm = scm
        graph = scm.graph
        cards = [graph.cardinality(u) for u in graph.exogenous]
        size = math.prod(cards)
        if size > WorldTable.MAX_WORLDS:
            raise EnumerationCapError(f"Model has {size} worlds, more than the cap of {WorldTable.MAX_WORLDS}.")

        self._size = size
        self._assignment: Dict[str, np.ndarray] = {}
        self._probabilities = np.ones(size)
        if cards:
            grid = np.unravel_index(np.arange(size), cards)
            for u, column in zip(graph.exogenous, grid):
                self._assignment[u] = column
                self._probabilities *= scm.prior(u)[column]
        self._induced = _induce(scm, self._assignment, size)
        self._cache: Dict[tuple, Dict[str, np.ndarray]] = {}
        logger.debug(f"Enumerated {size} worlds over {len(cards)} exogenous variables.")

    def __len__(self) -> int:
        return self._size

    def __getitem__(self, i: int) -> World:
        if not -self._size <= i < self._size:
            raise IndexError(f"World {i} out of range for {self._size} worlds.")
        return World({u: int(c[i]) for u, c in self._assignment.items()},
                     float(self._probabilities[i]),
                     {v: int(c[i]) for v, c in self._induced.items()})

    def __iter__(self) -> Iterator[World]:
        return (self[i] for i in range(self._size))

    def induced_under(self, intervention: Mapping[str, int]) -> Dict[str, np.ndarray]:
        """ Endogenous state of every world in the sub-model that sets the intervention. """
        if not intervention:
            return self._induced
        key = tuple(sorted(intervention.items()))
        if key not in self._cache:
            self._cache[key] = _induce(self._scm.mutilate(intervention), self._assignment, self._size)
        return self._cache[key]

    def event_mask(self, event: Event) -> np.ndarray:
        """ Boolean mask of the worlds in which the event holds. """
        mask = np.ones(self._size, dtype=bool)
        for component in components_of(event):
            if isinstance(component, Observational):
                state, outcome = self._induced, component.assignment
            else:
                state, outcome = self.induced_under(component.intervention), component.outcome
            for name, value in outcome.items():
                mask &= state[name] == value
        return mask

    def to_frame(self) -> pd.DataFrame:
        """ One row per world: the exogenous assignment, the probability, then the induced endogenous state. """
        columns = {u: self._assignment[u] for u in self._scm.graph.exogenous}
        columns["probability"] = self._probabilities
        columns.update({v: self._induced[v] for v in self._scm.graph.endogenous})
        return pd.DataFrame(columns)

    @property
    def scm(self) -> Scm:
        return self._scm

    @property
    def probabilities(self) -> np.ndarray:
        return self._probabilities

    @property
    def assignment(self) -> Dict[str, np.ndarray]:
        """ Column of values of each exogenous variable. """
        return dict(self._assignment)

    @property
    def induced(self) -> Dict[str, np.ndarray]:
        """ Column of values of each endogenous variable. """
        return dict(self._induced)


def _induce(scm: Scm, assignment: Mapping[str, np.ndarray], size: int) -> Dict[str, np.ndarray]:
    graph = scm.graph
    values = dict(assignment)
    induced = {}
    for name in graph.topological_order:
        if graph.variable(name).is_exogenous:
            continue
        table = np.asarray(scm.mechanism(name), dtype=np.int64)
        parents = graph.parents(name)
        if parents:
            rows = np.ravel_multi_index(tuple(values[p] for p in parents), graph.parent_cardinalities(name))
            values[name] = table[rows]
        else:
            values[name] = np.full(size, table[0], dtype=np.int64)
        induced[name] = values[name]
    return {v: induced[v] for v in graph.endogenous}


def enumerate_worlds(scm: Scm) -> WorldTable:
    """ Enumerate every world of an SCM.

    Raises:
        EnumerationCapError: If the product of exogenous cardinalities exceeds WorldTable.MAX_WORLDS.
    """
    return WorldTable(scm)


def worlds_of_event(scm: Scm, event: Event, table: WorldTable = None) -> np.ndarray:
    """ Sorted indices of the worlds in which the event holds.

    Interventional components are tested in the corresponding sub-models; a counterfactual event holds in the
    intersection of the worlds of its components.
    """
    check_event(scm.graph, event)
    table = enumerate_worlds(scm) if table is None else table
    return np.flatnonzero(table.event_mask(event))


def event_probability(scm: Scm, event: Event, table: WorldTable = None) -> float:
    """ Sum of the probabilities of the worlds in which the event holds. """
    check_event(scm.graph, event)
    table = enumerate_worlds(scm) if table is None else table
    return float(np.sum(table.probabilities[table.event_mask(event)]))


def conditional_probability(scm: Scm, event: Event, given: Event, table: WorldTable = None) -> float:
    """ Probability of event given another event, as the ratio of the probability of their conjunction.

    Raises:
        ValueError: If the conditioning event has probability zero.
    """
    table = enumerate_worlds(scm) if table is None else table
    denominator = event_probability(scm, given, table)
    if denominator <= 0:
        raise ValueError(f"Cannot condition on {given}, which has probability zero.")
    both = Counterfactual(components_of(event) + components_of(given))
    return event_probability(scm, both, table) / denominator


def joint_distribution(scm: Scm, over: Sequence[str] = None, table: WorldTable = None) -> Factor:
    """ The exact marginal distribution over endogenous variables as a numeric factor.

    Args:
        scm: The model.
        over: Endogenous variables of the factor, in order; all endogenous variables by default.
        table: A world table of scm to reuse.
    """
    graph = scm.graph
    over = list(graph.endogenous if over is None else over)
    check_event(graph, Observational({v: 0 for v in over}))
    table = enumerate_worlds(scm) if table is None else table
    cards = [graph.cardinality(v) for v in over]
    if not over:
        return Factor.scalar(float(np.sum(table.probabilities)))
    cells = np.ravel_multi_index(tuple(table.induced[v] for v in over), cards)
    joint = np.bincount(cells, weights=table.probabilities, minlength=math.prod(cards))
    return Factor(over, cards, joint)


def format_world_table(table: WorldTable) -> str:
    """ Tab-separated world table with a header line and probabilities to 17 significant digits. """
    return table.to_frame().to_csv(sep="\t", index=False, float_format="%.17g", lineterminator="\n")