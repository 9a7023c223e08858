"""Pure-Python orbit kernel.

Vectorized over the batch axis with numpy; one python-level loop per time
step. Every arithmetic expression matches the compiled kernel operation for
operation so both backends produce bit-identical orbits.
"""

import math

import numpy as np

# Opcodes. Each instruction carries two float arguments (a, b).
AFFINE = 0  # x -> a*x + b
TENT = 1  # x -> 2x for x <= 1/2, 2(1 - x) otherwise
DOUBLE = 2  # x -> 2x mod 1
LOGISTIC = 3  # x -> a*x*(1 - x)
NEG = 4  # x -> -x
SQUARE = 5  # x -> x*x
TRANSLATE = 6  # x -> x + a
SCALE = 7  # x -> a*x

# Space codes.
INTERVAL = 0
CIRCLE = 1
REAL = 2

NAME = "python"


def mod1(x):
    r = math.fmod(x, 1.0)
    if r < 0.0:
        r = r + 1.0
    if r >= 1.0:
        r = 0.0
    if r == 0.0:
        r = 0.0
    return r


def apply_op(op, a, b, x):
    """Scalar evaluation of one instruction."""
    if op == AFFINE:
        return a * x + b
    if op == TENT:
        if x <= 0.5:
            return 2.0 * x
        return 2.0 * (1.0 - x)
    if op == DOUBLE:
        return mod1(2.0 * x)
    if op == LOGISTIC:
        return a * x * (1.0 - x)
    if op == NEG:
        return -x
    if op == SQUARE:
        return x * x
    if op == TRANSLATE:
        return x + a
    if op == SCALE:
        return a * x
    raise ValueError(f"unknown opcode {op}")


def eval_program(program, x, circle):
    """Evaluate a list of ``(op, a, b)`` instructions at one scalar point."""
    for op, a, b in program:
        x = apply_op(op, a, b, x)
        if circle:
            x = mod1(x)
    return x


def _mod1_array(x):
    r = np.fmod(x, 1.0)
    r = np.where(r < 0.0, r + 1.0, r)
    r = np.where(r >= 1.0, 0.0, r)
    return np.where(r == 0.0, 0.0, r)


def _apply_op_array(op, a, b, x):
    if op == AFFINE:
        return a * x + b
    if op == TENT:
        return np.where(x <= 0.5, 2.0 * x, 2.0 * (1.0 - x))
    if op == DOUBLE:
        return _mod1_array(2.0 * x)
    if op == LOGISTIC:
        return a * x * (1.0 - x)
    if op == NEG:
        return -x
    if op == SQUARE:
        return x * x
    if op == TRANSLATE:
        return x + a
    if op == SCALE:
        return a * x
    raise ValueError(f"unknown opcode {op}")


def orbit_block(ops, args, offsets, sched, space_code, lo, hi, x0, out, escaped):
    """Fill ``out[r, n]`` with the n-th orbit point of ``x0[r]``.

    ``sched[n]`` names the map (a slice ``offsets[g]:offsets[g+1]`` of the
    instruction table) applied at step ``n + 1``. On bounded spaces the first
    step ``e`` whose value leaves ``[lo, hi]`` is stored in ``escaped[r]``;
    ``out[r, e]`` keeps the raw value and later entries are NaN. Rows that
    never escape get ``escaped[r] = -1``.
    """
    steps = sched.shape[0]
    circle = space_code == CIRCLE
    bounded = not circle
    x = np.array(x0, dtype=float)
    escaped[:] = -1
    alive = np.ones(x.shape[0], dtype=bool)
    out[:, 0] = x
    if bounded:
        bad = ~((x >= lo) & (x <= hi))
        if bad.any():
            escaped[bad] = 0
            alive &= ~bad
            x[bad] = np.nan
    for n in range(steps):
        g = sched[n]
        for j in range(offsets[g], offsets[g + 1]):
            x = _apply_op_array(ops[j], args[j, 0], args[j, 1], x)
            if circle:
                x = _mod1_array(x)
        out[:, n + 1] = x
        if bounded:
            bad = alive & ~((x >= lo) & (x <= hi))
            if bad.any():
                escaped[bad] = n + 1
                alive &= ~bad
                x[bad] = np.nan
