from .variable import Variable, EXOGENOUS, ENDOGENOUS
from .graph import CausalGraph
from .scm import Scm
from .event import Observational, Interventional, Counterfactual, Event, parse_instantiation, \
    merge_instantiations, check_event, check_instantiation
from .parser import parse_model, load_model, dump_model, validate, Diagnostic, ModelParseError
