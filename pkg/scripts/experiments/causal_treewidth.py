import argparse
import logging
import os
import sys
import time

import dill
import pandas as pd

from vecc import setup_logging
from vecc.data.families import grid, grid_plus
from vecc.inference.compiler import compile_graph

logger = logging.getLogger("vecc.experiments.causal_treewidth")


def create_args():
    config_specification = argparse.ArgumentParser(description="""
This experiment compiles the grid models G_n and G'_n for a range of sizes n and records
the width of the replica-free jointree next to the width after replicating and thinning
mechanisms, together with the size of the compiled circuits. \n

A CSV table and a result binary are stored in the output directory, and a plot of width
against n is saved there as well if matplotlib is available. \n

Make sure to create the output directory ahead of running the script.
     """, formatter_class=argparse.RawTextHelpFormatter)

    config_specification.add_argument('--min_n', default=2, help="Smallest grid size", type=int)
    config_specification.add_argument('--max_n', default=8, help="Largest grid size", type=int)
    config_specification.add_argument('--output', default="scripts/experiments/data/causal_treewidth",
                                      help="Output directory", type=str)
    config_specification.add_argument('--plot', action="store_true", default=False,
                                      help="Save a plot of the widths")
    config_specification.add_argument('--debug', action="store_true", default=False,
                                      help="Show debug logging")

    parsed_config_specification = vars(config_specification.parse_args())
    return parsed_config_specification


def run_family(name: str, make_graph, sizes) -> list:
    rows = []
    for n in sizes:
        graph = make_graph(n)
        t_start = time.perf_counter()
        result = compile_graph(graph, placement="cascade", replica_cap=n)
        t_end = time.perf_counter()
        stats = result.stats
        rows.append({"family": name, "n": n, "variables": len(graph.names),
                     "order_width": stats.order_width, "unthinned_width": stats.unthinned_width,
                     "thinned_width": stats.width, "nodes": stats.nodes, "edges": stats.edges,
                     "seconds": t_end - t_start})
        logger.info(f"{name} n={n}: unthinned width {stats.unthinned_width}, thinned width {stats.width}, "
                    f"{stats.nodes} nodes")
    return rows


def plot_widths(results: pd.DataFrame, path: str):
    from matplotlib import pyplot as plt

    fig, ax = plt.subplots()
    for family, group in results.groupby("family"):
        ax.plot(group["n"], group["unthinned_width"], marker="o", linestyle="--", label=f"{family} unthinned")
        ax.plot(group["n"], group["thinned_width"], marker="o", label=f"{family} thinned")
    ax.set_xlabel("n")
    ax.set_ylabel("width")
    ax.legend()
    fig.savefig(path)
    plt.close(fig)


def main():
    config = create_args()
    output_exists = os.path.isdir(config["output"])
    setup_logging(level=logging.DEBUG if config["debug"] else logging.INFO,
                  log_dir=os.path.join(config["output"], "logs") if output_exists else None,
                  log_name="causal_treewidth")
    if not output_exists:
        logger.error(f"Output directory {config['output']} does not exist.")
        return 1

    sizes = range(config["min_n"], config["max_n"] + 1)
    rows = run_family("grid", grid, sizes) + run_family("grid-plus", grid_plus, sizes)
    results = pd.DataFrame(rows)

    results.to_csv(os.path.join(config["output"], "widths.csv"), index=False)
    with open(os.path.join(config["output"], "widths.pkl"), "wb") as f:
        dill.dump(results, f)
    if config["plot"]:
        plot_widths(results, os.path.join(config["output"], "widths.png"))
    logger.info(f"Results written to {config['output']}")
    return 0


if __name__ == '__main__':
    sys.exit(main())
