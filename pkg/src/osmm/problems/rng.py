"""Seeded random streams for the instance generators.

All draws come from numpy's PCG64 bit generator seeded through
``SeedSequence(seed).spawn``, one child stream per named component, so adding
a component never shifts the draws of another.  Uniforms are
``Generator.random`` doubles in [0, 1); normals use the Box-Muller transform
on pairs of uniforms ``(u1, u2)`` with ``u1`` mapped to (0, 1]::

    z1 = sqrt(-2 log u1) cos(2 pi u2),  z2 = sqrt(-2 log u1) sin(2 pi u2)

filled in row-major order (``z1`` then ``z2`` for each pair).
"""

import numpy as np

STREAMS = ("data", "weights", "model", "extra")


def streams(seed, names=STREAMS):
    children = np.random.SeedSequence(int(seed)).spawn(len(names))
    return {name: np.random.Generator(np.random.PCG64(child)) for name, child in zip(names, children)}


def uniform(gen, shape, low=0.0, high=1.0):
    return low + (high - low) * gen.random(shape)


def normal(gen, shape):
    size = int(np.prod(shape))
    pairs = (size + 1) // 2
    u1 = 1.0 - gen.random(pairs)
    u2 = gen.random(pairs)
    rad = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * pairs)
    z[0::2] = rad * np.cos(2 * np.pi * u2)
    z[1::2] = rad * np.sin(2 * np.pi * u2)
    return z[:size].reshape(shape)
