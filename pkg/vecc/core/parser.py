import itertools
import json
import logging
import re
from dataclasses import dataclass
from typing import List, Optional, Union

import numpy as np

from vecc.core.graph import CausalGraph
from vecc.core.scm import Scm
from vecc.core.variable import Variable, EXOGENOUS, ENDOGENOUS

logger = logging.getLogger(__name__)

Model = Union[Scm, CausalGraph]


class ModelParseError(ValueError):
    """ Raised when a model document cannot be turned into a valid model. """

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class Diagnostic:
    """ A violation of a model invariant, attributed to the offending variable. """
    variable: str
    message: str

    def __str__(self):
        return f"{self.variable}: {self.message}"


def parse_model(text: str) -> Model:
    """ Parse a JSON model document.

    Returns an Scm if every exogenous variable has a prior and every endogenous variable has a mechanism,
    otherwise a CausalGraph carrying the tables that were given as annotations.

    Raises:
        ModelParseError: On syntax errors, unknown references, duplicates, bad cardinalities, cycles or tables
            that violate the model invariants.
    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelParseError(f"invalid JSON: {e.msg}", e.lineno)

    if not isinstance(document, dict) or not isinstance(document.get("variables"), list):
        raise ModelParseError("model document must be an object with a 'variables' list", 1)

    variables, parents, priors, mechanisms = [], {}, {}, {}
    seen = set()
    for i, entry in enumerate(document["variables"]):
        if not isinstance(entry, dict) or not isinstance(entry.get("name"), str):
            raise ModelParseError(f"variable entry {i} must be an object with a string 'name'")
        name = entry["name"]
        line = _line_of(text, name, 1 if name in seen else 0)
        if name in seen:
            raise ModelParseError(f"duplicate variable {name}", line)
        seen.add(name)

        unknown_keys = set(entry) - {"name", "kind", "card", "parents", "prior", "mechanism"}
        if unknown_keys:
            raise ModelParseError(f"variable {name} has unknown fields {sorted(unknown_keys)}", line)

        kind = entry.get("kind", ENDOGENOUS)
        card = entry.get("card")
        if isinstance(card, bool) or not isinstance(card, int):
            raise ModelParseError(f"cardinality of {name} must be an integer and not {card!r}", line)
        try:
            variables.append(Variable(name, card, kind))
        except ValueError as e:
            raise ModelParseError(str(e), line)

        if kind == EXOGENOUS:
            if "parents" in entry:
                raise ModelParseError(f"exogenous variable {name} cannot have parents", line)
            if "mechanism" in entry:
                raise ModelParseError(f"exogenous variable {name} cannot have a mechanism", line)
            if "prior" in entry:
                priors[name] = _number_list(entry["prior"], name, "prior", line)
        else:
            if "prior" in entry:
                raise ModelParseError(f"endogenous variable {name} cannot have a prior", line)
            entry_parents = entry.get("parents", [])
            if not isinstance(entry_parents, list) or not all(isinstance(p, str) for p in entry_parents):
                raise ModelParseError(f"parents of {name} must be a list of names", line)
            parents[name] = entry_parents
            if "mechanism" in entry:
                table = _number_list(entry["mechanism"], name, "mechanism", line)
                if not all(isinstance(v, int) and not isinstance(v, bool) for v in table):
                    raise ModelParseError(f"mechanism of {name} must hold integer value indices", line)
                mechanisms[name] = table

    for name, entry_parents in parents.items():
        for parent in entry_parents:
            if parent not in seen:
                raise ModelParseError(f"variable {name} references unknown variable {parent}", _line_of(text, name))

    try:
        graph = CausalGraph(variables, parents, mechanisms, priors)
    except ValueError as e:
        raise ModelParseError(str(e))

    complete = all(u in priors for u in graph.exogenous) and all(v in mechanisms for v in graph.endogenous)
    model = Scm(graph, priors, mechanisms) if complete else graph
    diagnostics = validate(model)
    if diagnostics:
        first = diagnostics[0]
        raise ModelParseError("; ".join(str(d) for d in diagnostics), _line_of(text, first.variable))
    logger.debug(f"Parsed {model}")
    return model


def load_model(path: str) -> Model:
    with open(path, "r", encoding="utf-8") as f:
        return parse_model(f.read())


def dump_model(model: Model) -> str:
    """ Return the model document of a graph or SCM. Output is deterministic. """
    return json.dumps(model.to_document(), indent=2) + "\n"


def validate(model: Model) -> List[Diagnostic]:
    """ Check the invariants of a model and return one diagnostic per violation.

    Structural invariants are enforced when a CausalGraph is built, so this checks priors and mechanism
    tables: of an Scm all of them must be present, of a CausalGraph the known annotations are checked.
    """
    if isinstance(model, Scm):
        graph = model.graph
        priors, mechanisms = model.priors, model.mechanisms
        complete = True
    else:
        graph = model
        priors, mechanisms = model.known_priors, model.known_mechanisms
        complete = False

    diagnostics = []
    for name in list(priors) + list(mechanisms):
        variable = graph.find(name)
        if variable is None:
            diagnostics.append(Diagnostic(name, "table given for unknown variable"))

    for name in graph.exogenous:
        if name not in priors:
            if complete:
                diagnostics.append(Diagnostic(name, "missing prior"))
            continue
        prior = np.asarray(priors[name], dtype=float)
        card = graph.cardinality(name)
        if prior.shape != (card,):
            diagnostics.append(Diagnostic(name, f"prior has length {prior.size} instead of {card}"))
        elif not np.all(np.isfinite(prior)) or np.any(prior < 0):
            diagnostics.append(Diagnostic(name, "prior has negative or non-finite entries"))
        elif abs(prior.sum() - 1.0) > Scm.PROBABILITY_TOL:
            diagnostics.append(Diagnostic(name, f"prior does not sum to 1 (sums to {prior.sum():.12g})"))

    for name in graph.endogenous:
        if name not in mechanisms:
            if complete:
                diagnostics.append(Diagnostic(name, "missing mechanism"))
            continue
        table = np.asarray(mechanisms[name])
        expected = graph.parent_instantiations(name)
        card = graph.cardinality(name)
        if table.ndim != 1 or table.size != expected:
            diagnostics.append(Diagnostic(name, f"mechanism table has length {table.size} instead of {expected}"))
        elif not np.issubdtype(table.dtype, np.integer):
            diagnostics.append(Diagnostic(name, "mechanism table must hold integer value indices"))
        elif np.any(table < 0) or np.any(table >= card):
            diagnostics.append(Diagnostic(name, f"mechanism table has entries outside 0..{card - 1}"))
    return diagnostics


def _number_list(value, name: str, field: str, line: Optional[int]) -> list:
    if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                                              for v in value):
        raise ModelParseError(f"{field} of {name} must be a list of numbers", line)
    return value


def _line_of(text: str, name: str, occurrence: int = 0) -> Optional[int]:
    """ Line of the occurrence-th "name" field equal to name, counting from 0. """
    pattern = re.compile(r'"name"\s*:\s*"' + re.escape(name) + '"')
    match = next(itertools.islice(pattern.finditer(text), occurrence, None), None)
    if match is None:
        return None
    return text.count("\n", 0, match.start()) + 1
