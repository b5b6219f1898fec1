"""Counter-based random streams.

Every block of normals is addressed by ``(seed, stream, copy, step)``: the
Philox key is derived from ``(seed, stream, copy)`` and the step sets the
counter, so a block never depends on which blocks were drawn before it or
on how the work is scheduled.
"""

import numpy as np

KIND_ID = {"X": 0, "Y": 1, "Z": 2}


def _key(seed, stream, copy):
    ss = np.random.SeedSequence([int(seed), int(stream), int(copy)])
    return ss.generate_state(2, dtype=np.uint64)


def generator(seed, stream, copy=0, step=0):
    counter = np.array([0, int(step), 0, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=_key(seed, stream, copy)))


def block_normals(seed, stream, copy, step, shape):
    """Standard normals for one (stream, copy, step) block."""
    return generator(seed, stream, copy, step).standard_normal(shape)


def block_uniforms(seed, stream, copy, step, shape):
    return generator(seed, stream, copy, step).random(shape)
