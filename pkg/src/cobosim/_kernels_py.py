"""Pure-numpy ladder-operator kernel.

``apply_term`` applies one ordered product of ladder operators to a batch of
basis states. ``modes[j]``, ``creates[j]`` and ``masks[j]`` describe the j-th
factor *in application order* (the rightmost operator of the product first).
Returns the resulting bitmasks and signs; a sign of 0 marks states the product
annihilates, and their output bitmask is meaningless.
"""
import numpy as np


def apply_term(states, modes, creates, masks):
    out = np.array(states, dtype=np.uint64, copy=True)
    sign = np.ones(out.shape[0], dtype=np.int8)
    for mode, create, mask in zip(modes, creates, masks):
        bit = np.uint64(1) << np.uint64(mode)
        occupied = (out & bit) != 0
        sign[occupied == bool(create)] = 0
        odd = (np.bitwise_count(out & np.uint64(mask)) & 1).astype(bool)
        np.negative(sign, out=sign, where=odd)
        out ^= bit
    return out, sign
