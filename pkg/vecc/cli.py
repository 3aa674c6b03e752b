import argparse
import concurrent.futures
import json
import logging
import sys
from typing import List, Optional, Sequence, TextIO, Tuple

import numpy as np

from vecc import setup_logging
from vecc.core.config import Configuration
from vecc.core.event import check_instantiation, parse_instantiation
from vecc.core.graph import CausalGraph
from vecc.core.parser import parse_model, dump_model, Model
from vecc.core.scm import Scm
from vecc.circuit.learning import fit_restarts
from vecc.circuit.parameters import Parameterization
from vecc.circuit.serialization import serialize, load_circuit
from vecc.data.dataset import WeightedDataset
from vecc.data.families import FAMILIES, FILLS, GenSpec, generate, corpus_scm
from vecc.inference.compiler import CompilationResult, compile_graph
from vecc.inference.elimination import HEURISTICS
from vecc.inference.jointree import PLACEMENTS
from vecc.oracle.worlds import EnumerationCapError, enumerate_worlds, format_world_table

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_CHECK = 3

CHECK_TOL = 1e-9
CHECK_MAX_CELLS = 4096

INPUT_ERRORS = (ValueError, TypeError, FileNotFoundError, IsADirectoryError, EnumerationCapError)


class UsageError(Exception):
    """ Raised by the argument parser instead of exiting. """


class CheckFailure(Exception):
    """ Raised when the circuit and the oracle disagree. """


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def create_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="vecc", description="""
    Compile causal graphs into arithmetic circuits, query and fit them, and check them against brute-force
    world enumeration. Models are read from a file or from stdin and reports are written to stdout.
         """, formatter_class=argparse.RawTextHelpFormatter)

    # --------General arguments-------------#
    parser.add_argument("--debug",
                        action="store_true",
                        default=False,
                        help="whether to display debug logging")
    parser.add_argument("--save_log_path",
                        type=str,
                        default=None,
                        help="save log to the specified directory")
    parser.add_argument("--config_path",
                        type=str,
                        default=None,
                        help="path to a JSON configuration file of global properties")
    parser.add_argument("--seed",
                        type=int,
                        default=None,
                        help="random seed to use")

    compile_options = _ArgumentParser(add_help=False)
    compile_options.add_argument("--heuristic",
                                 choices=HEURISTICS,
                                 default=None,
                                 help="elimination order heuristic; 'given' requires --order")
    compile_options.add_argument("--order",
                                 type=str,
                                 default=None,
                                 help="comma-separated elimination order")
    compile_options.add_argument("--replica-cap",
                                 type=int,
                                 default=None,
                                 help="upper bound on the number of replicas of a mechanism")
    compile_options.add_argument("--placement",
                                 choices=("auto",) + PLACEMENTS,
                                 default="auto",
                                 help="where replicated mechanisms are placed in the jointree")
    compile_options.add_argument("--no-thin",
                                 action="store_true",
                                 default=False,
                                 help="compile the replica-free jointree without thinning")

    model_input = _ArgumentParser(add_help=False)
    model_input.add_argument("model",
                             nargs="?",
                             default="-",
                             help="model document; '-' or nothing reads stdin")

    commands = parser.add_subparsers(dest="command", metavar="command", parser_class=_ArgumentParser)
    commands.required = True

    gen = commands.add_parser("gen", help="write a model document",
                              description="Write a model document of a model family. The grid-plus family adds "
                                          "the edges Z_i_j -> Z_i_(j+1) and Z_i_n -> Z_(i+1)_1 to the grid.")
    gen.add_argument("--family", choices=sorted(FAMILIES), required=True, help="model family")
    gen.add_argument("--n", type=int, default=3, help="size of the grid families")
    gen.add_argument("--vars", type=int, default=5, help="number of endogenous variables of a random model")
    gen.add_argument("--exo", type=int, default=3, help="number of exogenous variables of a random model")
    gen.add_argument("--max-parents", type=int, default=2, help="largest number of endogenous parents")
    gen.add_argument("--exo-card", type=int, default=2, help="largest cardinality of a random model")
    gen.add_argument("--markovian", action="store_true", default=False,
                     help="give every variable of a random model its own exogenous parent")
    gen.add_argument("--fill", choices=FILLS, default="none", help="how to fill in priors and mechanisms")

    comp = commands.add_parser("compile", parents=[model_input, compile_options], help="compile a circuit")
    comp.add_argument("--output", type=str, default=None, help="write the circuit document to this path")
    comp.add_argument("--stats", action="store_true", default=False, help="append the statistics report")

    query = commands.add_parser("query", parents=[model_input, compile_options],
                                help="evaluate an observational or interventional probability")
    query.add_argument("--circuit", type=str, default=None, help="circuit document; compiled on the fly if absent")
    query.add_argument("--params", type=str, default=None, help="parameters document; the model's tables if absent")
    query.add_argument("--given", type=str, default=None, help="instantiation such as X=0,Y=1")
    query.add_argument("--do", type=str, default=None, help="intervention such as X=1")
    query.add_argument("--log", action="store_true", default=False, help="report the natural logarithm")

    fit = commands.add_parser("fit", parents=[model_input, compile_options], help="fit parameters with EM")
    fit.add_argument("--data", type=str, required=True, help="CSV dataset")
    fit.add_argument("--circuit", type=str, default=None, help="circuit document; compiled on the fly if absent")
    fit.add_argument("--max-iters", type=int, default=None, help="EM iteration limit")
    fit.add_argument("--tol", type=float, default=None, help="EM log-likelihood tolerance")
    fit.add_argument("--restarts", type=int, default=1, help="number of random initialisations")
    fit.add_argument("--project", action="store_true", default=False,
                     help="round endogenous tables to mechanisms after every step")
    fit.add_argument("--output", type=str, default=None, help="write the parameters document to this path")

    commands.add_parser("worlds", parents=[model_input], help="print the world table of an SCM")

    check = commands.add_parser("check", help="compare circuits with the oracle on models or a random corpus")
    check.add_argument("models", nargs="*", help="model documents; a seeded random corpus if none")
    check.add_argument("--count", type=int, default=200, help="size of the random corpus")
    check.add_argument("--workers", type=int, default=1, help="number of worker processes")
    check.add_argument("--no-thin", action="store_true", default=False, help="check unthinned circuits")
    check.add_argument("--samples", type=int, default=256,
                       help=f"events checked per intervention when a model has more than {CHECK_MAX_CELLS} cells")

    commands.add_parser("stats", parents=[model_input, compile_options], help="print circuit statistics")
    return parser


def run(argv: Sequence[str] = None, stdin: TextIO = None, stdout: TextIO = None) -> int:
    """ Run a subcommand and return its exit code: 0 ok, 1 usage, 2 input error, 3 check failure. """
    stdin = sys.stdin if stdin is None else stdin
    stdout = sys.stdout if stdout is None else stdout
    parser = create_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        return EXIT_OK if not e.code else EXIT_USAGE

    setup_logging(level=logging.DEBUG if args.debug else logging.WARNING,
                  log_dir=args.save_log_path,
                  log_name="vecc")
    logger.debug(args)

    try:
        if args.config_path:
            with open(args.config_path, "r", encoding="utf-8") as f:
                Configuration.set_properties(**json.load(f))
        COMMANDS[args.command](args, stdin, stdout)
    except UsageError as e:
        print(f"vecc: {e}", file=sys.stderr)
        return EXIT_USAGE
    except CheckFailure as e:
        print(f"vecc: {e}", file=sys.stderr)
        return EXIT_CHECK
    except INPUT_ERRORS as e:
        print(f"vecc: {e}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as e:
        logger.exception(msg=str(e), exc_info=e)
        return EXIT_INPUT
    return EXIT_OK


def cmd_gen(args, stdin: TextIO, stdout: TextIO):
    spec = GenSpec(family=args.family, n=args.n, n_vars=args.vars, exo=args.exo, max_parents=args.max_parents,
                   max_card=args.exo_card, markovian=args.markovian, fill=args.fill, seed=args.seed)
    stdout.write(dump_model(generate(spec)))


def cmd_compile(args, stdin: TextIO, stdout: TextIO):
    model = _read_model(args.model, stdin)
    result = _compile(model.graph, args)
    document = serialize(result.circuit)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            f.write(document)
    else:
        stdout.write(document)
    if args.stats:
        stdout.write(result.stats.report())


def cmd_query(args, stdin: TextIO, stdout: TextIO):
    model = _read_model(args.model, stdin)
    graph = model.graph
    given, do = parse_instantiation(args.given), parse_instantiation(args.do)
    check_instantiation(graph, given)
    check_instantiation(graph, do)
    p = _parameters(model, args.params)
    circuit = load_circuit(args.circuit) if args.circuit else _compile(graph, args).circuit
    if do:
        value = circuit.causal_effect(p, do, given, log_space=args.log)
    else:
        value = circuit.evaluate(p, given, log_space=args.log)
    stdout.write(f"{value:.17g}\t{value:.4f}\n")


def cmd_fit(args, stdin: TextIO, stdout: TextIO):
    model = _read_model(args.model, stdin)
    graph = model.graph
    data = WeightedDataset.from_csv(args.data)
    data.check(graph)
    if args.restarts < 1:
        raise UsageError(f"--restarts must be at least 1 and not {args.restarts}")
    if args.circuit:
        circuit = load_circuit(args.circuit)
    else:
        # Without projection EM counts are exact only on the replica-free circuit.
        args.no_thin = args.no_thin or not args.project
        circuit = _compile(graph, args).circuit

    best, trace = fit_restarts(circuit, graph, data, args.restarts, args.seed, args.max_iters, args.tol,
                               args.project)
    if best is None:
        raise ValueError("Every EM run hit a record of probability zero.")
    document = json.dumps(best.to_dict(), indent=2) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            f.write(document)
        stdout.write(f"iterations\t{len(trace) - 1}\n")
        stdout.write(f"initial_log_likelihood\t{trace[0]:.17g}\n")
        stdout.write(f"log_likelihood\t{trace[-1]:.17g}\n")
    else:
        stdout.write(document)


def cmd_worlds(args, stdin: TextIO, stdout: TextIO):
    model = _read_model(args.model, stdin)
    if not isinstance(model, Scm):
        raise ValueError("The world table needs a model with every prior and mechanism.")
    stdout.write(format_world_table(enumerate_worlds(model)))


def cmd_check(args, stdin: TextIO, stdout: TextIO):
    if args.models:
        jobs = []
        for path in args.models:
            with open(path, "r", encoding="utf-8") as f:
                jobs.append((path, f.read(), None, not args.no_thin, args.samples))
    else:
        seed = 0 if args.seed is None else args.seed
        jobs = [(f"corpus/{seed}/{k}", None, (seed, k), not args.no_thin, args.samples) for k in range(args.count)]

    if args.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.workers) as executor:
            results = list(executor.map(_check_job, jobs))
    else:
        results = [_check_job(job) for job in jobs]

    worst, worst_label = 0.0, "-"
    for label, deviation in results:
        logger.debug(f"{label}: deviation {deviation:.3e}")
        if np.isnan(deviation) or deviation >= worst:
            worst, worst_label = deviation, label
            if np.isnan(worst):
                break
    stdout.write(f"models\t{len(results)}\n")
    stdout.write(f"max_deviation\t{worst:.3e}\n")
    stdout.write(f"worst_model\t{worst_label}\n")
    if not worst < CHECK_TOL:
        raise CheckFailure(f"Circuit deviates from the oracle by {worst:.3e} on {worst_label}.")


def cmd_stats(args, stdin: TextIO, stdout: TextIO):
    model = _read_model(args.model, stdin)
    stdout.write(_compile(model.graph, args).stats.report())


COMMANDS = {"gen": cmd_gen, "compile": cmd_compile, "query": cmd_query, "fit": cmd_fit, "worlds": cmd_worlds,
            "check": cmd_check, "stats": cmd_stats}


def check_model(scm: Scm, thin: bool = True, samples: int = 256, seed: int = 0) -> float:
    """ Largest absolute difference between a compiled circuit and world enumeration.

    Compares every full observational event and, for every single-variable intervention, every full
    interventional event. Models with more than CHECK_MAX_CELLS full instantiations are checked on a seeded
    sample of them instead. Returns NaN as soon as the circuit gives NaN on any event.
    """
    graph = scm.graph
    circuit = compile_graph(graph, thin_jointree=thin).circuit
    p = Parameterization.from_scm(scm)
    table = enumerate_worlds(scm)
    endogenous = graph.endogenous
    if not endogenous:
        return abs(circuit.evaluate(p) - float(np.sum(table.probabilities)))

    cards = [graph.cardinality(v) for v in endogenous]
    cells = int(np.prod(cards, dtype=np.int64))
    if cells <= CHECK_MAX_CELLS:
        indices = np.arange(cells)
    else:
        rng = np.random.default_rng(seed)
        indices = np.sort(rng.choice(cells, size=min(samples, cells), replace=False))
    records = np.stack(np.unravel_index(indices, cards), axis=1)
    lam = circuit.record_indicators(endogenous, records)

    deviation = 0.0
    interventions = [{}] + [{v: x} for v in endogenous for x in range(graph.cardinality(v))]
    for intervention in interventions:
        state = table.induced_under(intervention)
        flat = np.ravel_multi_index(tuple(state[v] for v in endogenous), cards)
        cells_hit, inverse = np.unique(flat, return_inverse=True)
        mass = np.bincount(inverse, weights=table.probabilities)
        position = np.clip(np.searchsorted(cells_hit, indices), 0, len(cells_hit) - 1)
        oracle = np.where(cells_hit[position] == indices, mass[position], 0.0)

        theta = circuit.theta_vector(p, p.intervention_overrides(intervention))
        gap = np.abs(circuit.forward(theta, lam)[circuit.root] - oracle)
        if np.any(np.isnan(gap)):
            return np.nan
        deviation = max(deviation, float(np.max(gap)))
    return deviation


def _check_job(job: Tuple[str, Optional[str], Optional[Tuple[int, int]], bool, int]) -> Tuple[str, float]:
    label, text, corpus, thin, samples = job
    if text is not None:
        model = parse_model(text)
        if not isinstance(model, Scm):
            raise ValueError(f"{label} does not give every prior and mechanism.")
    else:
        model = corpus_scm(*corpus)
    return label, check_model(model, thin, samples)


def _read_model(path: str, stdin: TextIO) -> Model:
    if path is None or path == "-":
        return parse_model(stdin.read())
    with open(path, "r", encoding="utf-8") as f:
        return parse_model(f.read())


def _compile(graph: CausalGraph, args) -> CompilationResult:
    order: Optional[List[str]] = None
    heuristic = args.heuristic
    if args.order:
        order = [name.strip() for name in args.order.split(",") if name.strip()]
        heuristic = heuristic or "given"
        if heuristic != "given":
            raise UsageError("--order requires --heuristic given")
    elif heuristic == "given":
        raise UsageError("--heuristic given requires --order")
    return compile_graph(graph,
                         heuristic=heuristic or "min-fill",
                         order=order,
                         replica_cap=args.replica_cap,
                         thin_jointree=not args.no_thin,
                         placement=args.placement)


def _parameters(model: Model, path: Optional[str]) -> Parameterization:
    if path:
        return Parameterization.load(model.graph, path)
    if not isinstance(model, Scm):
        raise ValueError("The model has no tables for every variable; pass a parameters document with --params.")
    return Parameterization.from_scm(model)


def main():
    return run(sys.argv[1:])


if __name__ == '__main__':
    sys.exit(main())
