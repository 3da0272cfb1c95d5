"""Timing comparison of the compiled kernels against the numpy fallback.

Three workloads: the fused LSTM cell (forward and backward), the Adam
elementwise update, and a full gradient-plus-update training step of
the attentive model. Run from the repository root:

    python3 benchmarks/bench_backends.py
    python3 benchmarks/bench_backends.py --batch 256 --hidden 100 --repeats 9

Each cell reports the median wall time over --repeats runs. A parity
check (max absolute difference between backends on the same inputs)
runs first so a speedup never hides a wrong answer.
"""

import argparse
import time

import numpy as np

from finet import backend
from finet.model import Model, ModelDims
from finet.numeric import AdamState, adam_step


def median_time(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return sorted(times)[len(times) // 2]


def bench_cell(batch, hidden, inner, repeats):
    rng = np.random.default_rng(0)
    pre = rng.normal(size=(batch, 4 * hidden))
    s_prev = rng.normal(size=(batch, hidden))
    h, s, gates = backend.lstm_cell_forward(pre, s_prev)
    dh = rng.normal(size=(batch, hidden))
    ds = rng.normal(size=(batch, hidden))

    def forward():
        for _ in range(inner):
            backend.lstm_cell_forward(pre, s_prev)

    def backward():
        for _ in range(inner):
            backend.lstm_cell_backward(dh, ds, gates, s_prev, s)

    return (median_time(forward, repeats) / inner,
            median_time(backward, repeats) / inner)


def bench_adam(size, inner, repeats):
    rng = np.random.default_rng(1)
    param = rng.normal(size=size)
    grad = rng.normal(size=size)
    m = np.zeros(size)
    v = np.zeros(size)

    def step():
        for k in range(inner):
            backend.adam_update(param, grad, m, v, k + 1,
                                0.005, 0.9, 0.999, 1e-8)

    return median_time(step, repeats) / inner


def bench_train_step(batch, hidden, repeats):
    dims = ModelDims(encoder="attentive", dim_word=50, dim_hidden=hidden,
                     dim_att=hidden // 2, ctx_size=15, mention_size=5,
                     n_types=16)
    rng = np.random.default_rng(2)
    model = Model.init(dims, rng)
    state = AdamState.init_for(model.params, alpha=0.005)
    mention = rng.normal(size=(batch, dims.mention_size, dims.dim_word))
    left = rng.normal(size=(batch, dims.ctx_size, dims.dim_word))
    right = rng.normal(size=(batch, dims.ctx_size, dims.dim_word))
    gold = (rng.random((batch, dims.n_types)) < 0.3).astype(np.float64)
    gold[:, 0] = 1.0

    def step():
        _, grads = model.loss_sum_and_grads(mention, left, right, gold)
        adam_step(model.params, grads, state)

    return median_time(step, repeats)


def parity_gap(batch, hidden):
    """Max |cython - numpy| across one forward/backward/adam round."""
    rng = np.random.default_rng(3)
    pre = rng.normal(size=(batch, 4 * hidden))
    s_prev = rng.normal(size=(batch, hidden))
    dh = rng.normal(size=(batch, hidden))
    ds = rng.normal(size=(batch, hidden))
    param = rng.normal(size=batch * hidden)
    grad = rng.normal(size=batch * hidden)
    outs = {}
    for name in backend.available_backends():
        backend.set_backend(name)
        h, s, gates = backend.lstm_cell_forward(pre, s_prev)
        dpre, dsp = backend.lstm_cell_backward(dh, ds, gates, s_prev, s)
        p = param.copy()
        backend.adam_update(p, grad, np.zeros_like(p), np.zeros_like(p),
                            1, 0.005, 0.9, 0.999, 1e-8)
        outs[name] = (h, s, gates, dpre, dsp, p)
    a, b = outs["numpy"], outs["cython"]
    return max(float(np.abs(x - y).max()) for x, y in zip(a, b))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--batch", type=int, default=128)
    parser.add_argument("--hidden", type=int, default=100)
    parser.add_argument("--inner", type=int, default=50,
                        help="kernel calls per timed run")
    parser.add_argument("--repeats", type=int, default=7)
    args = parser.parse_args(argv)

    names = backend.available_backends()
    if "cython" not in names:
        print("compiled backend not built; nothing to compare against")
        return 1

    gap = parity_gap(args.batch, args.hidden)
    print(f"backend parity: max |cython - numpy| = {gap:.3e}")
    print(f"shapes: batch={args.batch} hidden={args.hidden} "
          f"(adam vector {args.batch * args.hidden})")
    print()

    results = {}
    for name in ("numpy", "cython"):
        backend.set_backend(name)
        fwd, bwd = bench_cell(args.batch, args.hidden, args.inner, args.repeats)
        adam = bench_adam(args.batch * args.hidden, args.inner, args.repeats)
        step = bench_train_step(args.batch, args.hidden, args.repeats)
        results[name] = {"cell forward": fwd, "cell backward": bwd,
                         "adam update": adam, "train step": step}

    header = f"{'workload':<16} {'numpy':>12} {'cython':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for workload in results["numpy"]:
        t_np = results["numpy"][workload]
        t_cy = results["cython"][workload]
        print(f"{workload:<16} {1e6 * t_np:>10.1f}us {1e6 * t_cy:>10.1f}us "
              f"{t_np / t_cy:>8.2f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
