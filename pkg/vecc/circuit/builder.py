import logging
from typing import Dict, Iterable, List

from vecc.circuit.circuit import Circuit, Node, CONST, THETA, LAMBDA, ADD, MUL

logger = logging.getLogger(__name__)


class CircuitBuilder:
    """ Constructs circuit nodes for symbolic factors.

    Identical nodes are shared (hash-consing on the operation and its sorted children) and the constants
    0 and 1 are folded away. A builder serves one compilation and is not thread-safe.
    """

    def __init__(self):
        self._nodes: List[Node] = []
        self._lookup: Dict[tuple, int] = {}

    def __len__(self):
        return len(self._nodes)

    def constant(self, value: float) -> int:
        return self._intern(Node(CONST, value=float(value)), (CONST, float(value)))

    def theta(self, var: str, val: int, pinst: int = 0) -> int:
        """ The parameter leaf for value val of var under parent instantiation pinst. """
        return self._intern(Node(THETA, var=var, val=val, pinst=pinst), (THETA, var, val, pinst))

    def indicator(self, var: str, val: int) -> int:
        """ The indicator leaf for value val of var. """
        return self._intern(Node(LAMBDA, var=var, val=val), (LAMBDA, var, val))

    def mul(self, children: Iterable[int]) -> int:
        factors, constant = [], 1.0
        for child in children:
            node = self._nodes[child]
            if node.kind == CONST:
                constant *= node.value
            else:
                factors.append(child)
        if constant == 0.0:
            return self.constant(0.0)
        if constant != 1.0:
            factors.append(self.constant(constant))
        return self._operation(MUL, factors, empty=1.0)

    def add(self, children: Iterable[int]) -> int:
        terms, constant = [], 0.0
        for child in children:
            node = self._nodes[child]
            if node.kind == CONST:
                constant += node.value
            else:
                terms.append(child)
        if constant != 0.0:
            terms.append(self.constant(constant))
        return self._operation(ADD, terms, empty=0.0)

    def finish(self, root: int, thinned: Iterable[str] = ()) -> Circuit:
        """ Return the circuit below root. Add and multiply children that have a single parent of the same
        operation are inlined, and nodes are renumbered in post-order from the root. """
        parents = self._parent_counts(root)

        flat = {}
        for i in parents:
            node = self._nodes[i]
            if node.kind not in (ADD, MUL):
                continue
            children, stack = [], list(reversed(node.children))
            while stack:
                c = stack.pop()
                child = self._nodes[c]
                if child.kind == node.kind and parents[c] == 1:
                    stack.extend(reversed(child.children))
                else:
                    children.append(c)
            flat[i] = children

        new_id, order = {}, []
        stack = [(root, False)]
        while stack:
            i, expanded = stack.pop()
            if i in new_id:
                continue
            if expanded:
                new_id[i] = len(order)
                order.append(i)
                continue
            stack.append((i, True))
            for c in reversed(flat.get(i, ())):
                if c not in new_id:
                    stack.append((c, False))

        nodes = []
        for i in order:
            node = self._nodes[i]
            if node.kind in (ADD, MUL):
                node = Node(node.kind, children=tuple(sorted(new_id[c] for c in flat[i])))
            nodes.append(node)
        circuit = Circuit(nodes, len(nodes) - 1, frozenset(thinned))
        logger.debug(f"Finished circuit with {len(nodes)} of {len(self._nodes)} constructed nodes.")
        return circuit

    def _operation(self, kind: str, children: List[int], empty: float) -> int:
        if not children:
            return self.constant(empty)
        if len(children) == 1:
            return children[0]
        children = tuple(sorted(children))
        return self._intern(Node(kind, children=children), (kind, children))

    def _intern(self, node: Node, key: tuple) -> int:
        i = self._lookup.get(key)
        if i is None:
            i = len(self._nodes)
            self._nodes.append(node)
            self._lookup[key] = i
        return i

    def _parent_counts(self, root: int) -> Dict[int, int]:
        counts = {root: 0}
        stack = [root]
        while stack:
            i = stack.pop()
            for c in self._nodes[i].children:
                if c not in counts:
                    counts[c] = 0
                    stack.append(c)
                counts[c] += 1
        return counts
