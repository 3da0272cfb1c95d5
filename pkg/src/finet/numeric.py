"""Dense numeric primitives: matvec, seeded init, Adam, gradient checking.

Tensors are plain float64 numpy arrays in row-major order.  Every
differentiable component in this package is gated by
``finite_diff_check`` against central differences.
"""

from dataclasses import dataclass, field

import numpy as np

from . import backend
from .errors import DimensionError, GradientProbeError

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def new_rng(seed):
    """Deterministic generator (numpy PCG64); same seed, same draws."""
    return np.random.default_rng(seed)


def spawn_rngs(seed, n):
    """n independent deterministic streams derived from one seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def matvec(w, x):
    """Matrix-vector product with explicit shape validation."""
    w = np.asarray(w, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if w.ndim != 2 or x.ndim != 1 or w.shape[1] != x.shape[0]:
        raise DimensionError(
            f"matvec shapes do not agree: W is {tuple(w.shape)}, x is {tuple(x.shape)}"
        )
    return w @ x


def init_uniform(shape, fan_in, rng):
    """Glorot-style uniform draw on [-b, b], b = sqrt(6/(fan_in+fan_out)).

    fan_out is the leading dimension of ``shape``.
    """
    shape = tuple(int(d) for d in shape)
    if len(shape) == 0:
        raise DimensionError("init_uniform requires a non-empty shape")
    if fan_in < 1:
        raise DimensionError(f"fan_in must be >= 1, got {fan_in}")
    bound = np.sqrt(6.0 / (fan_in + shape[0]))
    return rng.uniform(-bound, bound, size=shape)


@dataclass
class AdamState:
    """Per-parameter first/second moments plus the shared step counter."""

    alpha: float
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    epsilon: float = ADAM_EPS
    step_count: int = 0
    first_moment: dict = field(default_factory=dict)
    second_moment: dict = field(default_factory=dict)

    @classmethod
    def init_for(cls, params, alpha, beta1=ADAM_BETA1, beta2=ADAM_BETA2, epsilon=ADAM_EPS):
        state = cls(alpha=alpha, beta1=beta1, beta2=beta2, epsilon=epsilon)
        for name, p in params.items():
            state.first_moment[name] = np.zeros_like(p)
            state.second_moment[name] = np.zeros_like(p)
        return state


def adam_step(params, grads, state):
    """One bias-corrected Adam update, in place, over named parameters."""
    if set(params) != set(grads):
        missing = sorted(set(params) - set(grads))
        extra = sorted(set(grads) - set(params))
        raise DimensionError(
            f"gradient names do not match parameters: missing={missing} extra={extra}"
        )
    state.step_count += 1
    for name in params:
        p = params[name]
        g = grads[name]
        if p.shape != g.shape:
            raise DimensionError(
                f"gradient shape {g.shape} does not match parameter "
                f"{name!r} of shape {p.shape}"
            )
        backend.adam_update(
            p.reshape(-1),
            np.ascontiguousarray(g, dtype=np.float64).reshape(-1),
            state.first_moment[name].reshape(-1),
            state.second_moment[name].reshape(-1),
            state.step_count,
            state.alpha,
            state.beta1,
            state.beta2,
            state.epsilon,
        )


def finite_diff_check(loss_fn, params, analytic, eps=1e-5):
    """Max relative error of analytic gradients vs central differences.

    Perturbs every coordinate of every named parameter in place (and
    restores it), so ``loss_fn`` must recompute from ``params``.
    Relative error per coordinate: |a - n| / max(1e-8, |a| + |n|).
    """
    if not (0.0 < eps <= 1e-2):
        raise ValueError(f"eps must be in (0, 1e-2], got {eps}")
    worst = 0.0
    for name in sorted(params):
        p = params[name]
        a = analytic[name]
        flat = p.reshape(-1)
        a_flat = np.asarray(a, dtype=np.float64).reshape(-1)
        for idx in range(flat.size):
            saved = flat[idx]
            flat[idx] = saved + eps
            f_plus = float(loss_fn(params))
            flat[idx] = saved - eps
            f_minus = float(loss_fn(params))
            flat[idx] = saved
            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                raise GradientProbeError(
                    f"non-finite loss while probing {name}[{idx}]"
                )
            numeric = (f_plus - f_minus) / (2.0 * eps)
            denom = max(1e-8, abs(a_flat[idx]) + abs(numeric))
            rel = abs(a_flat[idx] - numeric) / denom
            if rel > worst:
                worst = rel
    return worst
