"""Compare the numba kernels with the pure-numpy fallback.

Each backend runs in its own interpreter because the switch is read at import
time. Work sizes are scaled down for the fallback; the table reports per-unit
throughput so the two columns are comparable.

    python benchmarks/bench_kernels.py [--scale 1.0]
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

KERNELS = {
    # name: (unit, work for numba, work for python)
    "alias draws": ("draws", 5_000_000, 200_000),
    "alias build": ("entries", 2_000_000, 200_000),
    "sgd training": ("edge samples", 2_000_000, 40_000),
    "gibbs sweep": ("tokens", 400_000, 40_000),
}


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def child(scale, repeat):
    from idsense import _jit, _rng
    from idsense.hetnet import build_alias_table, build_heterogeneous_network
    from idsense.identity import init_topic_state, run_gibbs
    from idsense.synthetic import planted_corpus
    from idsense.corpus import corpus_from_texts
    from idsense.identity import label_category
    from idsense.trainer import TrainerConfig, fit

    col = 1 if _jit.USE_NUMBA else 2
    work = {k: max(1, int(v[col] * scale)) for k, v in KERNELS.items()}
    rng = np.random.default_rng(0)
    pc = planted_corpus(400, seed=0)
    corpus = corpus_from_texts(pc.texts, pc.labels, min_count=1)
    hn = build_heterogeneous_network(label_category(corpus), 5)

    weights = rng.random(work["alias build"]) + 0.01
    table = build_alias_table(rng.random(1000) + 0.01)
    n_tok = int(sum(len(d) for d in corpus.docs))
    sweeps = max(1, work["gibbs sweep"] // n_tok)

    def gibbs():
        run_gibbs(init_topic_state(corpus, 20, seed=1), sweeps, seed=1)

    cases = {
        "alias draws": (lambda: _rng.alias_draw_many(table.prob, table.alias, _rng.make_state(1), work["alias draws"]),
                        work["alias draws"]),
        "alias build": (lambda: build_alias_table(weights), work["alias build"]),
        "sgd training": (lambda: fit(hn, TrainerConfig(dim=50, samples=work["sgd training"], seed=1, workers=1)),
                         work["sgd training"]),
        "gibbs sweep": (gibbs, sweeps * n_tok),
    }
    out = {}
    for name, (fn, units) in cases.items():
        if _jit.USE_NUMBA:
            fn()  # compile, or load from the on-disk cache
        secs = _best(fn, repeat)
        out[name] = {"seconds": secs, "units": units, "rate": units / secs}
    print(json.dumps({"backend": _jit.backend(), "results": out}))


def run_backend(disable, scale, repeat):
    env = dict(os.environ, IDSENSE_DISABLE_JIT="1" if disable else "0")
    res = subprocess.run([sys.executable, __file__, "--child", "--scale", str(scale), "--repeat", str(repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scale", type=float, default=1.0, help="multiply every work size")
    ap.add_argument("--repeat", type=int, default=3, help="timed repetitions, best one is kept")
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args(argv)
    if args.child:
        child(args.scale, args.repeat)
        return
    fast = run_backend(False, args.scale, args.repeat)
    slow = run_backend(True, args.scale, args.repeat)
    print(f"{'kernel':<14} {'unit':<13} {fast['backend'] + ' /s':>14} {slow['backend'] + ' /s':>14} {'speedup':>9}")
    for name, (unit, _, _) in KERNELS.items():
        a, b = fast["results"][name]["rate"], slow["results"][name]["rate"]
        print(f"{name:<14} {unit:<13} {a:>14.3g} {b:>14.3g} {a / b:>8.1f}x")


if __name__ == "__main__":
    main()
