import json
import logging
from typing import Dict, Iterable, List, Mapping, Sequence

import numpy as np

from vecc.core.graph import CausalGraph
from vecc.core.scm import Scm

logger = logging.getLogger(__name__)


class Parameterization:
    """ Numeric values of every parameter of a causal graph.

    Exogenous variables have a prior vector. Endogenous variables have a conditional table with one row per
    parent instantiation and one column per value; the parameter theta(V, v, pinst) is cpts[V][pinst, v]. A
    parameterization is a mechanism parameterization for a set of variables when their tables are 0/1.
    """

    def __init__(self, graph: CausalGraph, priors: Mapping[str, Sequence[float]], cpts: Mapping[str, np.ndarray]):
        self._graph = graph
        self._priors, self._cpts = {}, {}
        tol = Scm.PROBABILITY_TOL
        for name in graph.exogenous:
            if name not in priors:
                raise ValueError(f"Missing prior for {name}.")
            prior = np.array(priors[name], dtype=float)
            if prior.shape != (graph.cardinality(name),):
                raise ValueError(f"Prior of {name} has shape {prior.shape}.")
            if np.any(prior < 0) or abs(prior.sum() - 1.0) > tol:
                raise ValueError(f"Prior of {name} is not a probability vector.")
            prior.setflags(write=False)
            self._priors[name] = prior
        for name in graph.endogenous:
            if name not in cpts:
                raise ValueError(f"Missing table for {name}.")
            cpt = np.array(cpts[name], dtype=float)
            shape = (graph.parent_instantiations(name), graph.cardinality(name))
            if cpt.shape != shape:
                raise ValueError(f"Table of {name} has shape {cpt.shape} instead of {shape}.")
            if np.any(cpt < 0) or np.any(np.abs(cpt.sum(axis=1) - 1.0) > tol):
                raise ValueError(f"Table of {name} has a row that is not a probability vector.")
            cpt.setflags(write=False)
            self._cpts[name] = cpt

    def __repr__(self):
        return f"Parameterization({len(self._priors)} priors, {len(self._cpts)} tables)"

    @classmethod
    def from_scm(cls, scm: Scm) -> "Parameterization":
        """ The mechanism parameterization of a fully specified SCM. """
        graph = scm.graph
        cpts = {}
        for name in graph.endogenous:
            table = np.asarray(scm.mechanism(name), dtype=np.int64)
            cpts[name] = np.eye(graph.cardinality(name))[table]
        return cls(graph, scm.priors, cpts)

    @classmethod
    def from_dict(cls, graph: CausalGraph, document: Mapping) -> "Parameterization":
        """ Read a parameters document {"priors": {name: [...]}, "cpts": {name: [[...], ...]}}. """
        try:
            return cls(graph, document["priors"], document["cpts"])
        except KeyError as e:
            raise ValueError(f"Parameters document is missing {e}.")

    @classmethod
    def load(cls, graph: CausalGraph, path: str) -> "Parameterization":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_dict(graph, json.load(f))

    def to_dict(self) -> dict:
        return {"priors": {k: v.tolist() for k, v in self._priors.items()},
                "cpts": {k: v.tolist() for k, v in self._cpts.items()}}

    def to_scm(self) -> Scm:
        """ The SCM of a mechanism parameterization. Raises ValueError if some table is not 0/1. """
        if not self.is_mechanism():
            raise ValueError("Only a mechanism parameterization corresponds to an SCM.")
        mechanisms = {k: np.argmax(v, axis=1) for k, v in self._cpts.items()}
        return Scm(self._graph, self._priors, mechanisms)

    def value(self, var: str, val: int, pinst: int = 0) -> float:
        if var in self._priors:
            return float(self._priors[var][val])
        return float(self._cpts[var][pinst, val])

    def theta_vector(self, keys: Iterable[tuple]) -> np.ndarray:
        """ Values of the parameters named by (var, val, pinst) keys. """
        priors, cpts = self._priors, self._cpts
        values = []
        for var, val, pinst in keys:
            if var in cpts:
                values.append(cpts[var][pinst, val])
            elif var in priors:
                values.append(priors[var][val])
            else:
                raise ValueError(f"Circuit parameter references unknown variable {var}.")
        return np.array(values, dtype=float)

    def is_mechanism(self, variables: Iterable[str] = None) -> bool:
        """ Whether the tables of the given endogenous variables (all by default) hold only zeros and ones. """
        names = self._graph.endogenous if variables is None else variables
        return all(np.all((self._cpts[n] == 0) | (self._cpts[n] == 1)) for n in names if n in self._cpts)

    def intervention_overrides(self, x: Mapping[str, int]) -> Dict[tuple, float]:
        """ Parameter values that replace the tables of the variables in x by constant mechanisms. """
        overrides = {}
        for name, value in x.items():
            variable = self._graph.find(name)
            if variable is None or not variable.is_endogenous:
                raise ValueError(f"Cannot intervene on {name}: not an endogenous variable.")
            if not 0 <= value < variable.cardinality:
                raise ValueError(f"Value {value} out of range for {name}.")
            for pinst in range(self._cpts[name].shape[0]):
                for val in range(variable.cardinality):
                    overrides[(name, val, pinst)] = 1.0 if val == value else 0.0
        return overrides

    def mutilate(self, x: Mapping[str, int]) -> "Parameterization":
        """ The parameterization of the sub-model that sets the variables of x by constant mechanisms. """
        if not x:
            return self
        cpts = dict(self._cpts)
        for name, value in x.items():
            cpts[name] = np.eye(self._graph.cardinality(name))[[value]]
        return Parameterization(self._graph.mutilate(x.keys()), self._priors, cpts)

    def replace(self, priors: Mapping[str, np.ndarray] = None, cpts: Mapping[str, np.ndarray] = None) \
            -> "Parameterization":
        """ A copy with some priors or tables replaced. """
        new_priors = dict(self._priors)
        new_priors.update(priors or {})
        new_cpts = dict(self._cpts)
        new_cpts.update(cpts or {})
        return Parameterization(self._graph, new_priors, new_cpts)

    @property
    def graph(self) -> CausalGraph:
        return self._graph

    @property
    def priors(self) -> Dict[str, np.ndarray]:
        return dict(self._priors)

    @property
    def cpts(self) -> Dict[str, np.ndarray]:
        return dict(self._cpts)

    @property
    def variables(self) -> List[str]:
        return list(self._priors) + list(self._cpts)


def random_parameterization(graph: CausalGraph, seed: int = None, deterministic: bool = False) \
        -> Parameterization:
    """ Draw a random parameterization.

    Priors come from a symmetric Dirichlet(1). Endogenous tables are drawn uniformly over deterministic tables
    when deterministic is set, and row-wise from Dirichlet(1) otherwise.
    """
    rng = np.random.default_rng(seed)
    priors = {u: rng.dirichlet(np.ones(graph.cardinality(u))) for u in graph.exogenous}
    cpts = {}
    for v in graph.endogenous:
        rows, card = graph.parent_instantiations(v), graph.cardinality(v)
        if deterministic:
            cpts[v] = np.eye(card)[rng.integers(card, size=rows)]
        else:
            cpts[v] = rng.dirichlet(np.ones(card), size=rows)
    return Parameterization(graph, priors, cpts)
