import logging
from typing import Dict, Mapping, Sequence

import numpy as np

from vecc.core.graph import CausalGraph

logger = logging.getLogger(__name__)


class Scm:
    """ A fully specified structural causal model: a causal graph with one prior vector per exogenous variable
    and one deterministic mechanism table per endogenous variable.

    Entry i of the mechanism table of V is the value of V under the i-th instantiation of its parents, where
    instantiations are indexed row-major with the last parent varying fastest. Tables are not checked on
    construction; use :func:`vecc.core.parser.validate`.
    """

    PROBABILITY_TOL = 1e-9

    def __init__(self,
                 graph: CausalGraph,
                 priors: Mapping[str, Sequence[float]],
                 mechanisms: Mapping[str, Sequence[int]]):
        self._graph = graph
        self._priors = {}
        for name, prior in priors.items():
            array = np.array(prior, dtype=float)
            array.setflags(write=False)
            self._priors[name] = array
        self._mechanisms = {}
        for name, table in mechanisms.items():
            array = np.array(table)
            array.setflags(write=False)
            self._mechanisms[name] = array

    def __repr__(self):
        return f"Scm({len(self._graph.exogenous)} exogenous, {len(self._graph.endogenous)} endogenous)"

    def prior(self, name: str) -> np.ndarray:
        return self._priors[name]

    def mechanism(self, name: str) -> np.ndarray:
        return self._mechanisms[name]

    def mutilate(self, z: Mapping[str, int]) -> "Scm":
        """ Return the sub-model in which every variable of z is set to its value by a constant mechanism.

        Args:
            z: Instantiation of endogenous variables.

        Returns:
            The sub-model, or the model itself if z is empty.
        """
        if not z:
            return self
        for name, value in z.items():
            variable = self._graph.variable(name)
            if not variable.is_endogenous:
                raise ValueError(f"Cannot intervene on exogenous variable {name}.")
            if not 0 <= value < variable.cardinality:
                raise ValueError(f"Value {value} out of range for {name} with cardinality {variable.cardinality}.")
        mechanisms = dict(self._mechanisms)
        mechanisms.update({name: [value] for name, value in z.items()})
        return Scm(self._graph.mutilate(z.keys()), self._priors, mechanisms)

    def to_document(self) -> dict:
        """ Return the model document as a JSON-serialisable dictionary. """
        document = self._graph.to_document()
        for entry in document["variables"]:
            name = entry["name"]
            if name in self._priors:
                entry["prior"] = [float(p) for p in self._priors[name]]
            if name in self._mechanisms:
                entry["mechanism"] = [int(v) for v in self._mechanisms[name]]
        return document

    @property
    def graph(self) -> CausalGraph:
        return self._graph

    @property
    def priors(self) -> Dict[str, np.ndarray]:
        """ Prior vector of each exogenous variable. """
        return dict(self._priors)

    @property
    def mechanisms(self) -> Dict[str, np.ndarray]:
        """ Mechanism table of each endogenous variable. """
        return dict(self._mechanisms)
