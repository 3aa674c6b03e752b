import logging

from vecc.circuit.circuit import Circuit, Node, CONST, THETA, LAMBDA, ADD, MUL

logger = logging.getLogger(__name__)

HEADER = "acir 1"


class CircuitParseError(ValueError):
    """ Raised when a circuit document is malformed. """

    def __init__(self, message: str, line: int = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


def serialize(c: Circuit) -> str:
    """ Write a circuit document: the header, a "thinned" line naming the thinned variables if there are any,
    one line per node in id order, and the root line. """
    lines = [HEADER]
    if c.thinned:
        lines.append("thinned " + " ".join(sorted(c.thinned)))
    for i, node in enumerate(c.nodes):
        if node.kind == CONST:
            body = f"const {node.value:.17g}"
        elif node.kind == THETA:
            body = f"theta {node.var} {node.val} {node.pinst}"
        elif node.kind == LAMBDA:
            body = f"lambda {node.var} {node.val}"
        else:
            body = f"{node.kind} " + " ".join(str(child) for child in node.children)
        lines.append(f"node {i} {body}")
    lines.append(f"root {c.root}")
    return "\n".join(lines) + "\n"


def deserialize(text: str) -> Circuit:
    """ Read a circuit document.

    Raises:
        CircuitParseError: With the offending line number on malformed lines, non-contiguous ids, children
            that do not precede their parent, or a missing root.
    """
    lines = text.splitlines()
    if not lines or lines[0].strip() != HEADER:
        raise CircuitParseError(f"expected header {HEADER!r}", 1)

    nodes, root, thinned, thinned_line = [], None, frozenset(), None
    for number, line in enumerate(lines[1:], start=2):
        fields = line.split()
        if not fields:
            continue
        if root is not None:
            raise CircuitParseError("content after the root line", number)
        if fields[0] == "root":
            if len(fields) != 2:
                raise CircuitParseError("root line must name exactly one node", number)
            root = _integer(fields[1], number)
            if not 0 <= root < len(nodes):
                raise CircuitParseError(f"root {root} is not a node", number)
            continue
        if fields[0] == "thinned":
            if nodes or thinned:
                raise CircuitParseError("the thinned line must come right after the header", number)
            if len(fields) < 2:
                raise CircuitParseError("the thinned line must name at least one variable", number)
            thinned, thinned_line = frozenset(fields[1:]), number
            continue
        if fields[0] != "node" or len(fields) < 3:
            raise CircuitParseError(f"cannot parse {line.strip()!r}", number)
        i = _integer(fields[1], number)
        if i != len(nodes):
            raise CircuitParseError(f"expected node id {len(nodes)} and not {i}", number)
        nodes.append(_node(fields[2], fields[3:], i, number))

    if root is None:
        raise CircuitParseError("missing root line", len(lines) + 1)
    unknown = thinned - {node.var for node in nodes if node.kind == LAMBDA}
    if unknown:
        raise CircuitParseError(f"thinned variables {sorted(unknown)} have no indicator", thinned_line)
    return Circuit(nodes, root, thinned)


def _node(kind: str, args, i: int, number: int) -> Node:
    if kind == CONST:
        if len(args) != 1:
            raise CircuitParseError("const takes one value", number)
        try:
            return Node(CONST, value=float(args[0]))
        except ValueError:
            raise CircuitParseError(f"invalid constant {args[0]!r}", number)
    if kind == THETA:
        if len(args) != 3:
            raise CircuitParseError("theta takes a variable, a value and a parent instantiation", number)
        return Node(THETA, var=args[0], val=_integer(args[1], number), pinst=_integer(args[2], number))
    if kind == LAMBDA:
        if len(args) != 2:
            raise CircuitParseError("lambda takes a variable and a value", number)
        return Node(LAMBDA, var=args[0], val=_integer(args[1], number))
    if kind in (ADD, MUL):
        if not args:
            raise CircuitParseError(f"{kind} needs children", number)
        children = tuple(_integer(a, number) for a in args)
        forward = [c for c in children if c >= i]
        if forward:
            raise CircuitParseError(f"forward reference to node {forward[0]}", number)
        return Node(kind, children=children)
    raise CircuitParseError(f"unknown node kind {kind!r}", number)


def _integer(text: str, number: int) -> int:
    try:
        value = int(text)
    except ValueError:
        raise CircuitParseError(f"expected an integer and not {text!r}", number)
    if value < 0:
        raise CircuitParseError(f"negative index {value}", number)
    return value


def save_circuit(c: Circuit, path: str):
    with open(path, "w", encoding="utf-8") as f:
        f.write(serialize(c))


def load_circuit(path: str) -> Circuit:
    with open(path, "r", encoding="utf-8") as f:
        return deserialize(f.read())
