import logging
from collections import Counter
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

import more_itertools as mit

from vecc.core.graph import CausalGraph
from vecc.inference.elimination import EliminationOrder

logger = logging.getLogger(__name__)

PLACEMENTS = ("dtree", "cascade")


@dataclass(frozen=True)
class FactorLabel:
    """ The factor held by a jointree leaf: copy number replica of the prior or mechanism of variable. """
    variable: str
    replica: int = 0

    def __str__(self):
        return f"f_{self.variable}#{self.replica}"


class Jointree:
    """ A binary jointree over the priors and (replicated) mechanisms of a causal graph.

    The top leaf has a single child; every other internal node has exactly two children. Node ids are assigned
    in preorder from the top leaf. The separator of a node is the set of variables on the edge to its parent;
    the cluster of a leaf is the set of variables of its factor and the cluster of an internal node is the union
    of its children's separators.
    """

    REPLICA_CAP = 8

    def __init__(self,
                 graph: CausalGraph,
                 top: Optional[int],
                 children: Mapping[int, Sequence[int]],
                 labels: Mapping[int, FactorLabel],
                 separators: Mapping[int, FrozenSet[str]] = None):
        """ Create a jointree from a tree given by child lists.

        Args:
            graph: The causal graph whose factors the leaves hold.
            top: Key of the top leaf, None for the empty jointree of an empty graph.
            children: Child keys of every node with children.
            labels: Factor label of every leaf, including the top.
            separators: Separators keyed like children; computed as the unthinned separators if not given.
                Given separators must be subsets of the unthinned ones.
        """
        self._graph = graph
        self._parent: List[Optional[int]] = []
        self._children: List[Tuple[int, ...]] = []
        self._labels: List[Optional[FactorLabel]] = []
        key_to_id = {}

        if top is not None:
            stack = [(top, None)]
            while stack:
                key, parent = stack.pop()
                if key in key_to_id:
                    raise ValueError(f"Jointree node {key} is reachable twice.")
                key_to_id[key] = len(self._parent)
                self._parent.append(None if parent is None else key_to_id[parent])
                self._labels.append(labels.get(key))
                self._children.append(())
                if parent is not None:
                    p = key_to_id[parent]
                    self._children[p] = self._children[p] + (key_to_id[key],)
                for child in reversed(tuple(children.get(key, ()))):
                    stack.append((child, key))
        self._check_shape()

        self._factor_variables = [frozenset(self._graph.family(label.variable)) if label is not None else None
                                  for label in self._labels]
        self._unthinned = self._unthinned_separators()
        if separators is None:
            self._separators = list(self._unthinned)
        else:
            self._separators = [frozenset() for _ in self._parent]
            for key, sep in separators.items():
                i = key_to_id[key]
                if not frozenset(sep) <= self._unthinned[i]:
                    raise ValueError(f"Separator of node {i} is not a subset of its unthinned separator.")
                self._separators[i] = frozenset(sep)
        self._clusters = [self._factor_variables[i] if self.is_leaf(i) else
                          frozenset().union(*(self._separators[c] for c in self._children[i]))
                          for i in range(len(self._parent))]

    def __len__(self):
        return len(self._parent)

    def __repr__(self):
        return f"Jointree({len(self.leaves)} leaves, width={self.width})"

    def parent(self, i: int) -> Optional[int]:
        return self._parent[i]

    def children(self, i: int) -> Tuple[int, ...]:
        return self._children[i]

    def label(self, i: int) -> Optional[FactorLabel]:
        """ Factor label of a leaf, None for internal nodes. """
        return self._labels[i]

    def is_leaf(self, i: int) -> bool:
        return self._labels[i] is not None

    def sep(self, i: int) -> FrozenSet[str]:
        """ Separator on the edge between node i and its parent. Empty for the top leaf. """
        return self._separators[i]

    def unthinned_sep(self, i: int) -> FrozenSet[str]:
        return self._unthinned[i]

    def cls(self, i: int) -> FrozenSet[str]:
        return self._clusters[i]

    def factor_variables(self, i: int) -> FrozenSet[str]:
        return self._factor_variables[i]

    def neighbors(self, i: int) -> Tuple[int, ...]:
        parent = self._parent[i]
        return self._children[i] if parent is None else (parent,) + self._children[i]

    def replicas(self, variable: str) -> List[int]:
        """ Leaves holding a copy of the factor of variable. """
        return [i for i, label in enumerate(self._labels) if label is not None and label.variable == variable]

    def designated_leaf(self, variable: str) -> int:
        """ The leaf where the evidence factor of variable is multiplied in: its lowest numbered copy. """
        copies = [(self._labels[i].replica, i) for i in self.replicas(variable)]
        if not copies:
            raise KeyError(f"No leaf holds the factor of {variable}.")
        return min(copies)[1]

    def subtree_leaves(self, i: int) -> List[int]:
        """ Leaves in the subtree rooted at node i, including i itself if it is a leaf. """
        leaves, stack = [], [i]
        while stack:
            n = stack.pop()
            if self.is_leaf(n):
                leaves.append(n)
            stack.extend(self._children[n])
        return sorted(leaves)

    def bottom_up(self) -> List[int]:
        """ Node ids with every node after its children and the top leaf last. """
        return list(reversed(range(len(self._parent))))

    def with_separators(self, separators: Mapping[int, FrozenSet[str]]) -> "Jointree":
        """ The same tree with some separators replaced. """
        if self.top is None:
            return self
        seps = {i: separators.get(i, self._separators[i]) for i in range(len(self._parent))}
        children = {i: c for i, c in enumerate(self._children) if c}
        labels = {i: label for i, label in enumerate(self._labels) if label is not None}
        return Jointree(self._graph, self.top, children, labels, seps)

    def dump(self) -> str:
        """ One line per node in preorder: node <id> parent=<id|-> sep={...} cls={...} leaf=<label|->. """
        lines = []
        for i in range(len(self._parent)):
            parent = "-" if self._parent[i] is None else str(self._parent[i])
            label = "-" if self._labels[i] is None else str(self._labels[i])
            lines.append(f"node {i} parent={parent} sep={_fmt(self._separators[i])} "
                         f"cls={_fmt(self._clusters[i])} leaf={label}")
        return "\n".join(lines) + ("\n" if lines else "")

    def _check_shape(self):
        for i, children in enumerate(self._children):
            if self._parent[i] is None:
                if self._labels[i] is None:
                    raise ValueError("The top of a jointree must be a leaf.")
                if len(children) > 1:
                    raise ValueError("The top leaf of a jointree has at most one child.")
            elif self._labels[i] is not None and children:
                raise ValueError(f"Leaf {self._labels[i]} cannot have children.")
            elif self._labels[i] is None and len(children) != 2:
                raise ValueError(f"Internal jointree node {i} must have two children and not {len(children)}.")

    def _unthinned_separators(self) -> List[FrozenSet[str]]:
        count = len(self._parent)
        below = [Counter() for _ in range(count)]
        total = Counter()
        for i in self.bottom_up():
            if self._labels[i] is not None:
                below[i].update(self._factor_variables[i])
                total.update(self._factor_variables[i])
            for c in self._children[i]:
                below[i].update(below[c])
        return [frozenset() if self._parent[i] is None else
                frozenset(v for v, k in below[i].items() if k < total[v]) for i in range(count)]

    @property
    def graph(self) -> CausalGraph:
        return self._graph

    @property
    def top(self) -> Optional[int]:
        return 0 if self._parent else None

    @property
    def nodes(self) -> range:
        return range(len(self._parent))

    @property
    def leaves(self) -> List[int]:
        return [i for i, label in enumerate(self._labels) if label is not None]

    @property
    def edges(self) -> List[int]:
        """ Each edge is identified by its lower node; these are all nodes but the top. """
        return [i for i in range(len(self._parent)) if self._parent[i] is not None]

    @property
    def width(self) -> int:
        """ Size of the largest cluster minus one. """
        return max((len(c) for c in self._clusters), default=1) - 1


def default_replicas(graph: CausalGraph, cap: int = None) -> Dict[str, int]:
    """ One copy of every prior; min(#children, cap) copies of mechanisms of variables with more than one
    child and one copy of the others. """
    cap = Jointree.REPLICA_CAP if cap is None else cap
    replicas = {}
    for name in graph.names:
        children = len(graph.children(name))
        replicas[name] = 1 if graph.variable(name).is_exogenous or children <= 1 else max(1, min(children, cap))
    return replicas


def build_jointree(graph: CausalGraph,
                   order: EliminationOrder,
                   replicas: Mapping[str, int] = None,
                   placement: str = "dtree") -> Jointree:
    """ Build a binary jointree over the priors and mechanisms of the graph, with the given number of copies
    of each mechanism.

    Args:
        graph: The causal graph.
        order: Elimination order that drives the "dtree" placement.
        replicas: Copies per variable; 1 for every variable if not given. Priors cannot be replicated.
        placement: "dtree" builds a tree from the elimination order and places each replica next to a group of
            the leaves that mention its variable. "cascade" chains one fragment per endogenous variable, holding
            its mechanism and a replica of each replicated parent, with the exogenous priors at the top.

    Returns:
        The jointree with unthinned separators.
    """
    counts = {name: 1 for name in graph.names}
    for name, count in (replicas or {}).items():
        variable = graph.find(name)
        if variable is None:
            raise ValueError(f"Replica count given for unknown variable {name}.")
        if not isinstance(count, int) or count < 1:
            raise ValueError(f"Replica count of {name} must be a positive integer and not {count!r}.")
        if variable.is_exogenous and count != 1:
            raise ValueError(f"Prior of exogenous variable {name} cannot be replicated.")
        counts[name] = count
    if not graph.names:
        return Jointree(graph, None, {}, {})

    if placement == "dtree":
        tree = _dtree_placement(graph, order, counts)
    elif placement == "cascade":
        tree = _cascade_placement(graph, counts)
    else:
        raise ValueError(f"Unknown placement {placement!r}; expected one of {PLACEMENTS}.")
    jt = Jointree(graph, tree.top, tree.children, tree.labels)
    logger.debug(f"Built {placement} {jt} with {sum(counts.values())} factor copies.")
    return jt


class _TreeBuilder:
    """ Mutable binary tree used while placing factors. """

    def __init__(self):
        self.parent: Dict[int, Optional[int]] = {}
        self.children: Dict[int, Tuple[int, ...]] = {}
        self.labels: Dict[int, FactorLabel] = {}
        self.top: Optional[int] = None
        self._next = 0

    def leaf(self, label: FactorLabel) -> int:
        key = self._new()
        self.labels[key] = label
        return key

    def join(self, a: int, b: int) -> int:
        key = self._new()
        self.children[key] = (a, b)
        self.parent[a] = self.parent[b] = key
        return key

    def join_balanced(self, roots: Sequence[int]) -> int:
        roots = list(roots)
        while len(roots) > 1:
            roots = [self.join(*pair) if len(pair) == 2 else pair[0] for pair in mit.chunked(roots, 2)]
        return roots[0]

    def join_left_deep(self, roots: Sequence[int]) -> int:
        tree = roots[0]
        for root in roots[1:]:
            tree = self.join(tree, root)
        return tree

    def set_top(self, top: int, child: Optional[int]):
        self.top = top
        self.parent[top] = None
        if child is not None:
            self.children[top] = (child,)
            self.parent[child] = top

    def remove_leaf(self, leaf: int):
        parent = self.parent.pop(leaf)
        del self.labels[leaf]
        if parent == self.top:
            del self.children[parent]
            return
        sibling = next(c for c in self.children.pop(parent) if c != leaf)
        grand = self.parent.pop(parent)
        self.children[grand] = tuple(sibling if c == parent else c for c in self.children[grand])
        self.parent[sibling] = grand

    def attach_sibling(self, node: int, label: FactorLabel) -> int:
        leaf = self.leaf(label)
        if node == self.top:
            if self.top not in self.children:
                self.set_top(self.top, leaf)
                return leaf
            node = self.children[self.top][0]
        grand = self.parent[node]
        joined = self.join(node, leaf)
        self.children[grand] = tuple(joined if c == node else c for c in self.children[grand])
        self.parent[joined] = grand
        return leaf

    def preorder(self) -> List[int]:
        order, stack = [], [self.top]
        while stack:
            key = stack.pop()
            order.append(key)
            stack.extend(reversed(self.children.get(key, ())))
        return order

    def lca(self, keys: Sequence[int]) -> int:
        path = self._ancestors(keys[0])
        common = set(path)
        for key in keys[1:]:
            common &= set(self._ancestors(key))
        return next(a for a in path if a in common)

    def _ancestors(self, key: int) -> List[int]:
        path = [key]
        while self.parent.get(path[-1]) is not None:
            path.append(self.parent[path[-1]])
        return path

    def _new(self) -> int:
        self._next += 1
        return self._next - 1


def _dtree_placement(graph: CausalGraph, order: EliminationOrder, counts: Mapping[str, int]) -> _TreeBuilder:
    tree = _TreeBuilder()
    if set(order.order) != set(graph.names):
        raise ValueError("Elimination order does not cover the variables of the graph.")
    top_variable = order.order[-1]
    top = tree.leaf(FactorLabel(top_variable))
    primary = {top_variable: top}
    forest = []
    for name in graph.names:
        if name != top_variable:
            primary[name] = tree.leaf(FactorLabel(name))
            forest.append((primary[name], set(graph.family(name))))

    for variable in order.order:
        group = [t for t in forest if variable in t[1]]
        if len(group) < 2:
            continue
        forest = [t for t in forest if variable not in t[1]]
        merged = set().union(*(t[1] for t in group)) - {variable}
        forest.append((tree.join_balanced([t[0] for t in group]), merged))
    tree.set_top(top, tree.join_balanced([t[0] for t in forest]) if forest else None)

    for variable in reversed(graph.topological_order):
        count = counts[variable]
        if count < 2:
            continue
        consumers = [key for key in tree.preorder() if key in tree.labels
                     and tree.labels[key].variable != variable
                     and variable in graph.family(tree.labels[key].variable)]
        keep_primary = primary[variable] == top
        if not keep_primary:
            tree.remove_leaf(primary[variable])
        first = 1 if keep_primary else 0
        anchor = top
        for k, group in enumerate(mit.divide(count - first, consumers)):
            group = list(group)
            if group:
                anchor = tree.lca(group)
            tree.attach_sibling(anchor, FactorLabel(variable, first + k))
    return tree


def _cascade_placement(graph: CausalGraph, counts: Mapping[str, int]) -> _TreeBuilder:
    tree = _TreeBuilder()
    endogenous = [v for v in graph.topological_order if graph.variable(v).is_endogenous]
    position = {v: k for k, v in enumerate(graph.topological_order)}
    fragments = {v: [] for v in endogenous}
    for variable in endogenous:
        count = counts[variable]
        children = sorted(graph.children(variable), key=position.get)
        if count == 1:
            targets = [variable]
        elif fragments[variable]:
            targets = [variable] + children[:count - 1]
        else:
            targets = children[:count]
        targets += [variable] * (count - len(targets))
        for k, target in enumerate(targets):
            fragments[target].append(FactorLabel(variable, k))

    blocks = []
    for variable in endogenous:
        parents = graph.parents(variable)
        labels = sorted(fragments[variable],
                        key=lambda label: (label.variable != variable,
                                           parents.index(label.variable) if label.variable in parents else 0,
                                           label.replica))
        if labels:
            blocks.append([tree.leaf(label) for label in labels])
    priors = [tree.leaf(FactorLabel(u)) for u in graph.exogenous]

    if priors:
        top = priors.pop()
    else:
        top = blocks[-1].pop()
        if not blocks[-1]:
            blocks.pop()
    roots = [tree.join_left_deep(block) for block in blocks] + priors
    tree.set_top(top, tree.join_left_deep(roots) if roots else None)
    return tree


def _fmt(variables: FrozenSet[str]) -> str:
    return "{" + ",".join(sorted(variables)) + "}"
