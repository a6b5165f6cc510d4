"""Independent brute-force oracles used to cross-check the engine.

These walk the joint table entry by entry with dict accumulation and use the
direct log-ratio definitions, deliberately sharing no marginalization code
with the package.
"""

import math

import numpy as np


def dict_marginal(joint, coords):
    """Marginal over ``coords`` as {symbol tuple: probability}, one trajectory at a time."""
    positions = [joint.system.axis[c] for c in coords]
    table = {}
    for idx, p in np.ndenumerate(joint.array):
        if p == 0.0:
            continue
        key = tuple(idx[k] for k in positions)
        table[key] = table.get(key, 0.0) + float(p)
    return table


def oracle_cond_entropy(joint, target, given=()):
    """H(target | given) in bits by direct summation."""
    target = tuple(target)
    given = tuple(given)
    p_tg = dict_marginal(joint, target + given)
    p_g = dict_marginal(joint, given) if given else {(): 1.0}
    total = 0.0
    for key, p in p_tg.items():
        cond = p_g[key[len(target):]]
        total -= p * math.log2(p / cond)
    return total


def oracle_cond_mutual_info(joint, a, b, c=()):
    """I(A;B|C) = sum p(abc) log2 [p(abc) p(c) / (p(ac) p(bc))]."""
    a, b, c = tuple(a), tuple(b), tuple(c)
    p_abc = dict_marginal(joint, a + b + c)
    p_ac = dict_marginal(joint, a + c)
    p_bc = dict_marginal(joint, b + c)
    p_c = dict_marginal(joint, c) if c else {(): 1.0}
    total = 0.0
    for key, p in p_abc.items():
        ka = key[: len(a)]
        kb = key[len(a): len(a) + len(b)]
        kc = key[len(a) + len(b):]
        total += p * math.log2(p * p_c[kc] / (p_ac[ka + kc] * p_bc[kb + kc]))
    return total
