from .factor import Factor, FactorModeError, multiply, sum_out, product, evidence_factor, is_mechanism
from .elimination import EliminationOrder, HEURISTICS, elimination_order, order_width, exact_treewidth
from .jointree import Jointree, FactorLabel, PLACEMENTS, build_jointree, default_replicas
from .thinning import Removal, ThinningCertificate, thin
from .compiler import CompilationResult, CircuitStats, compile_graph, compile_jointree, circuit_stats
