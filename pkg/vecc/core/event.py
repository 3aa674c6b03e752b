from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

Instantiation = Dict[str, int]


@dataclass(frozen=True)
class Observational:
    """ The event that the endogenous variables take the values of the assignment. """
    assignment: Instantiation = field(default_factory=dict)

    @property
    def variables(self) -> List[str]:
        return list(self.assignment)


@dataclass(frozen=True)
class Interventional:
    """ The event y_x: outcome y holds in the sub-model that sets the intervention x. """
    outcome: Instantiation = field(default_factory=dict)
    intervention: Instantiation = field(default_factory=dict)

    @property
    def variables(self) -> List[str]:
        return list(self.outcome) + [v for v in self.intervention if v not in self.outcome]


@dataclass(frozen=True)
class Counterfactual:
    """ A conjunction of observational and interventional events, possibly under different interventions. """
    components: Tuple[Union[Observational, Interventional], ...] = ()

    @property
    def variables(self) -> List[str]:
        names = []
        for component in self.components:
            names.extend(v for v in component.variables if v not in names)
        return names


Event = Union[Observational, Interventional, Counterfactual]


def components_of(event: Event) -> Tuple[Union[Observational, Interventional], ...]:
    """ Return the observational and interventional parts of an event. """
    if isinstance(event, Counterfactual):
        return event.components
    return (event,)


def check_event(graph, event: Event):
    """ Raise ValueError if the event names unknown or exogenous variables, or values out of range. """
    for component in components_of(event):
        parts = [component.assignment] if isinstance(component, Observational) \
            else [component.outcome, component.intervention]
        for part in parts:
            check_instantiation(graph, part)


def check_instantiation(graph, instantiation: Mapping[str, int]):
    for name, value in instantiation.items():
        variable = graph.find(name)
        if variable is None:
            raise ValueError(f"Event references unknown variable {name}.")
        if not variable.is_endogenous:
            raise ValueError(f"Event references exogenous variable {name}.")
        if not 0 <= value < variable.cardinality:
            raise ValueError(f"Value {value} out of range for {name} with cardinality {variable.cardinality}.")


def parse_instantiation(text: Optional[str]) -> Instantiation:
    """ Parse an instantiation written as "X=0,Y=1". Empty text or None gives the empty instantiation. """
    result = {}
    if not text:
        return result
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        name, sep, value = item.partition("=")
        if not sep or not name.strip() or not value.strip().isdigit():
            raise ValueError(f"Cannot parse assignment {item!r}, expected NAME=INDEX.")
        name = name.strip()
        if name in result and result[name] != int(value):
            raise ValueError(f"Conflicting values for {name} in {text!r}.")
        result[name] = int(value)
    return result


def merge_instantiations(instantiations: Iterable[Mapping[str, int]]) -> Optional[Instantiation]:
    """ Merge compatible instantiations into one. Return None if two of them disagree on a variable. """
    merged = {}
    for instantiation in instantiations:
        for name, value in instantiation.items():
            if merged.get(name, value) != value:
                return None
            merged[name] = value
    return merged
