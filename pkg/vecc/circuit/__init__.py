from .circuit import Circuit, Node, Gradient, MechanismRequiredError, ZeroLikelihoodError, evaluate, \
    causal_effect, backprop, log_likelihood
from .builder import CircuitBuilder
from .parameters import Parameterization, random_parameterization
from .learning import ExpectationMaximisation, em_fit, fit_restarts
from .serialization import serialize, deserialize, save_circuit, load_circuit, CircuitParseError
