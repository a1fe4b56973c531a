import numpy as np

from nconn.expr import Program


def values(exprs, env):
    return Program(list(exprs)).evaluate(env, jobs=1).values


def max_abs(field, env):
    vals, _ = field.evaluate(env, jobs=1)
    return float(np.nanmax(np.abs(vals))) if vals.size else 0.0


def max_rel(a, b, floor=1e-30):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / scale)) if a.size else 0.0


# filled by the acceptance suite, printed in the terminal summary
ACCEPTANCE = []
