"""Wall time and traced peak memory of the edge-restricted pipeline by graph size."""

import argparse
import os
import time
import tracemalloc

from comcons.consistency import consistency_report
from comcons.detect import DetectionConfig
from comcons.ensemble import ConsensusMode, consensus_cluster
from comcons.synthetic import planted_partition


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--edges", type=int, nargs="+", default=[12_500, 25_000, 50_000, 100_000])
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--mode", choices=[m.value for m in ConsensusMode], default="edge-restricted")
    ap.add_argument("--trace-memory", action="store_true", help="tracemalloc peak (slows the run down)")
    args = ap.parse_args()

    print("edges\tnodes\tseconds\titerations\tcommunities\tpeak_mb")
    for m in args.edges:
        g, _ = planted_partition(m // 5, m, max(2, m // 2000), mixing=0.3, seed=9)
        if args.trace_memory:
            tracemalloc.start()
        start = time.perf_counter()
        res = consensus_cluster(g, DetectionConfig(), n=args.n, tau=0.5, master_seed=1, mode=args.mode,
                                threads=args.threads)
        consistency_report(g, res.partition, res.first_matrix)
        elapsed = time.perf_counter() - start
        peak = tracemalloc.get_traced_memory()[1] / 2**20 if args.trace_memory else float("nan")
        if args.trace_memory:
            tracemalloc.stop()
        print(f"{m}\t{g.n_nodes}\t{elapsed:.1f}\t{res.iterations}\t{res.partition.n_communities}\t{peak:.1f}", flush=True)


if __name__ == "__main__":
    main()
