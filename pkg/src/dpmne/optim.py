"""Full-batch gradient descent with Armijo backtracking, shared by all blocks."""

import numpy as np


def flatten(arrays):
    """Concatenate a list of arrays into one flat float64 vector."""
    if not arrays:
        return np.zeros(0)
    return np.concatenate([np.asarray(a, dtype=np.float64).ravel() for a in arrays])


def unflatten(vec, templates):
    """Split a flat vector back into arrays shaped like ``templates``."""
    out = []
    offset = 0
    for tpl in templates:
        size = tpl.size
        out.append(vec[offset:offset + size].reshape(tpl.shape))
        offset += size
    if offset != vec.size:
        raise ValueError(f"flat vector has {vec.size} entries, templates need {offset}")
    return out


def armijo_minimize(fun, grad, x0, steps, step0=1.0, c=1e-4, max_halvings=60, gtol=0.0):
    """Run ``steps`` descent steps on ``fun`` with backtracking line search.

    Each step tries the carried-over step size (doubled after an accepted
    step) and halves it until the Armijo sufficient-decrease test passes.
    The returned objective value never exceeds ``fun(x0)``: a step is only
    taken when it decreases the objective, and a step whose achievable
    decrease is below machine precision terminates the loop instead of
    failing.

    Returns (x, f, last_step).
    """
    x = np.asarray(x0, dtype=np.float64)
    f = float(fun(x))
    if not np.isfinite(f):
        raise FloatingPointError("objective is not finite at the starting point")
    t = float(step0)
    for _ in range(int(steps)):
        g = np.asarray(grad(x), dtype=np.float64)
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("gradient has non-finite entries")
        gg = float(g @ g)
        if gg == 0.0 or np.max(np.abs(g)) <= gtol:
            break
        trial = t
        accepted = False
        best_seen = np.inf
        for _ in range(int(max_halvings)):
            x_new = x - trial * g
            f_new = float(fun(x_new))
            if np.isfinite(f_new) and f_new <= f - c * trial * gg:
                x, f = x_new, f_new
                accepted = True
                break
            if np.isfinite(f_new):
                best_seen = min(best_seen, f_new)
            trial *= 0.5
        if not accepted:
            if best_seen <= f + 1e-12:
                # no decrease representable in float64: stationary point
                break
            raise RuntimeError(
                "line search failed: no decrease after "
                f"{max_halvings} halvings (objective {f:.6e})")
        t = 2.0 * trial
    return x, f, t
