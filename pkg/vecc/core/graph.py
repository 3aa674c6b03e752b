import logging
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from vecc.core.variable import Variable, EXOGENOUS, ENDOGENOUS

logger = logging.getLogger(__name__)


class CausalGraph:
    """ A non-parametric causal graph: a DAG over exogenous and endogenous variables.

    Exogenous variables are roots. Each endogenous variable has an ordered list of parents; the order is the
    declaration order in the model document and fixes the layout of mechanism tables (row-major, last parent
    varying fastest).
    """

    def __init__(self,
                 variables: Sequence[Variable],
                 parents: Mapping[str, Sequence[str]] = None,
                 known_mechanisms: Mapping[str, Sequence[int]] = None,
                 known_priors: Mapping[str, Sequence[float]] = None):
        """ Create a new causal graph.

        Args:
            variables: The variables of the graph in declaration order.
            parents: Ordered parent names for each endogenous variable. Missing entries mean no parents.
            known_mechanisms: Mechanism tables of a partially specified model, stored as annotations.
            known_priors: Prior vectors of a partially specified model, stored as annotations.

        Raises:
            ValueError: On duplicate or unknown names, parents of exogenous variables, or cycles.
        """
        parents = dict(parents or {})
        self._variables = tuple(variables)
        self._index = {}
        for i, variable in enumerate(self._variables):
            if variable.name in self._index:
                raise ValueError(f"Duplicate variable {variable.name}.")
            self._index[variable.name] = i

        self._parents = {}
        for name, parent_names in parents.items():
            if name not in self._index:
                raise ValueError(f"Parents given for unknown variable {name}.")
            parent_names = tuple(parent_names)
            if parent_names and self.variable(name).is_exogenous:
                raise ValueError(f"Exogenous variable {name} cannot have parents.")
            if len(set(parent_names)) != len(parent_names):
                raise ValueError(f"Variable {name} lists a parent more than once.")
            for parent in parent_names:
                if parent not in self._index:
                    raise ValueError(f"Variable {name} references unknown parent {parent}.")
            self._parents[name] = parent_names
        for variable in self._variables:
            self._parents.setdefault(variable.name, ())

        self._dag = nx.DiGraph()
        self._dag.add_nodes_from(v.name for v in self._variables)
        self._dag.add_edges_from((p, v) for v, ps in self._parents.items() for p in ps)
        if not nx.is_directed_acyclic_graph(self._dag):
            cycle = nx.find_cycle(self._dag)
            raise ValueError(f"Causal graph has a cycle: {' -> '.join(u for u, _ in cycle)} -> {cycle[0][0]}.")

        self._topological_order = tuple(nx.lexicographical_topological_sort(self._dag, key=self._index.get))
        self._children = {v.name: tuple(sorted(self._dag.successors(v.name), key=self._index.get))
                          for v in self._variables}

        self._known_mechanisms = {k: tuple(v) for k, v in (known_mechanisms or {}).items()}
        self._known_priors = {k: tuple(v) for k, v in (known_priors or {}).items()}

    def __repr__(self):
        return f"CausalGraph({len(self._variables)} variables, {self._dag.number_of_edges()} edges)"

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def __eq__(self, other):
        if not isinstance(other, CausalGraph):
            return NotImplemented
        return self._variables == other._variables and self._parents == other._parents

    def variable(self, name: str) -> Variable:
        """ Return the variable called name. Raises KeyError if it does not exist. """
        try:
            return self._variables[self._index[name]]
        except KeyError:
            raise KeyError(f"Unknown variable {name}.")

    def cardinality(self, name: str) -> int:
        return self.variable(name).cardinality

    def parents(self, name: str) -> Tuple[str, ...]:
        """ Ordered parents of the variable. Empty for exogenous variables. """
        self.variable(name)
        return self._parents[name]

    def children(self, name: str) -> Tuple[str, ...]:
        """ Children of the variable in declaration order. """
        self.variable(name)
        return self._children[name]

    def family(self, name: str) -> Tuple[str, ...]:
        """ The variables of the factor of name: its parents followed by the variable itself. """
        return self.parents(name) + (name,)

    def parent_cardinalities(self, name: str) -> Tuple[int, ...]:
        return tuple(self.cardinality(p) for p in self.parents(name))

    def parent_instantiations(self, name: str) -> int:
        """ Number of instantiations of the parents of name, i.e. the length of its mechanism table. """
        return int(np.prod(self.parent_cardinalities(name), dtype=np.int64))

    def declaration_index(self, name: str) -> int:
        return self._index[name]

    def descendants(self, name: str) -> set:
        return nx.descendants(self._dag, name)

    def is_markovian(self) -> bool:
        """ True if every exogenous variable feeds at most one mechanism, i.e. there are no hidden confounders. """
        return all(len(self._children[u]) <= 1 for u in self.exogenous)

    def is_semi_markovian(self) -> bool:
        return not self.is_markovian()

    def moral_graph(self) -> nx.Graph:
        """ The undirected moral graph used for elimination orders. Nodes are variable names. """
        moral = nx.moral_graph(self._dag)
        moral.add_nodes_from(self.names)
        return moral

    def mutilate(self, names) -> "CausalGraph":
        """ Return the graph of the sub-model that intervenes on the given endogenous variables: their incoming
        edges are removed. Annotations of intervened variables are dropped. """
        names = set(names)
        for name in names:
            if not self.variable(name).is_endogenous:
                raise ValueError(f"Cannot intervene on exogenous variable {name}.")
        parents = {v: (() if v in names else ps) for v, ps in self._parents.items()}
        mechanisms = {k: v for k, v in self._known_mechanisms.items() if k not in names}
        return CausalGraph(self._variables, parents, mechanisms, self._known_priors)

    def to_document(self) -> dict:
        """ Return the model document of the graph as a JSON-serialisable dictionary. """
        entries = []
        for variable in self._variables:
            entry = {"name": variable.name, "kind": variable.kind, "card": variable.cardinality}
            if variable.is_endogenous:
                entry["parents"] = list(self._parents[variable.name])
                if variable.name in self._known_mechanisms:
                    entry["mechanism"] = list(self._known_mechanisms[variable.name])
            elif variable.name in self._known_priors:
                entry["prior"] = list(self._known_priors[variable.name])
            entries.append(entry)
        return {"variables": entries}

    @property
    def variables(self) -> Tuple[Variable, ...]:
        """ All variables in declaration order. """
        return self._variables

    @property
    def names(self) -> List[str]:
        return [v.name for v in self._variables]

    @property
    def exogenous(self) -> List[str]:
        """ Names of exogenous variables in declaration order. """
        return [v.name for v in self._variables if v.kind == EXOGENOUS]

    @property
    def endogenous(self) -> List[str]:
        """ Names of endogenous variables in declaration order. """
        return [v.name for v in self._variables if v.kind == ENDOGENOUS]

    @property
    def topological_order(self) -> Tuple[str, ...]:
        """ A topological order of all variables, ties broken by declaration order. """
        return self._topological_order

    @property
    def edges(self) -> List[Tuple[str, str]]:
        return [(p, v) for v in self.names for p in self._parents[v]]

    @property
    def dag(self) -> nx.DiGraph:
        """ A copy of the underlying networkx graph. """
        return self._dag.copy()

    @property
    def known_mechanisms(self) -> Dict[str, Tuple[int, ...]]:
        """ Mechanism tables known for a partially specified model. """
        return dict(self._known_mechanisms)

    @property
    def known_priors(self) -> Dict[str, Tuple[float, ...]]:
        return dict(self._known_priors)

    @property
    def graph(self) -> "CausalGraph":
        """ The graph itself, so that graphs and SCMs can be used interchangeably where only structure matters. """
        return self

    def find(self, name: str) -> Optional[Variable]:
        i = self._index.get(name)
        return None if i is None else self._variables[i]
