#!/usr/bin/env python3
# Copyright 2026 The recross Authors
# SPDX-License-Identifier: Apache-2.0
"""Independent reference for the builtin backend's deterministic functions.

Prints the golden values frozen into tests/unit/test_builtin_backend.cpp and
tests/unit/test_dense_index.cpp. Shares no code with the C++ implementation.
"""
import hashlib
import math
import struct

MASK64 = (1 << 64) - 1


def fnv1a64(*parts):
    h = 0xCBF29CE484222325
    for part in parts:
        data = struct.pack("<Q", part) if isinstance(part, int) else part.encode("utf-8")
        for byte in data:
            h ^= byte
            h = (h * 0x100000001B3) & MASK64
    return h


class MT19937_64:
    def __init__(self, seed):
        self.mt = [0] * 312
        self.mt[0] = seed & MASK64
        for i in range(1, 312):
            prev = self.mt[i - 1]
            self.mt[i] = (6364136223846793005 * (prev ^ (prev >> 62)) + i) & MASK64
        self.index = 312

    def _twist(self):
        upper, lower = 0xFFFFFFFF80000000, 0x7FFFFFFF
        for i in range(312):
            x = (self.mt[i] & upper) | (self.mt[(i + 1) % 312] & lower)
            xa = x >> 1
            if x & 1:
                xa ^= 0xB5026F5AA96619E9
            self.mt[i] = self.mt[(i + 156) % 312] ^ xa
        self.index = 0

    def next(self):
        if self.index >= 312:
            self._twist()
        y = self.mt[self.index]
        self.index += 1
        y ^= (y >> 29) & 0x5555555555555555
        y ^= (y << 17) & 0x71D67FFFEDA60000
        y ^= (y << 37) & 0xFFF7EEE000000000
        y ^= y >> 43
        return y & MASK64

    def uniform(self):
        return (self.next() >> 11) * 2.0**-53

    def normal(self):
        u1 = self.uniform()
        while u1 <= 0.0:
            u1 = self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def tokens(text):
    return text.split()


def hash_embed(text, seed, dim=64):
    v = [0.0] * dim
    toks = tokens(text)
    for t in toks:
        h = fnv1a64(seed, t)
        v[h % dim] += -1.0 if h >> 63 else 1.0
    if toks:
        v = [x / len(toks) for x in v]
    return v


def unit_float32_bytes(v):
    sq = 0.0
    for x in v:
        sq += x * x
    norm = math.sqrt(sq)
    return b"".join(struct.pack("<f", x / norm) for x in v)


def synthetic_corpus(n=100):
    topics = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta"]
    out = []
    for i in range(n):
        text = f"example {i} about {topics[i % 7]} with marker w{(i * i) % 13} and tail t{i % 3}"
        out.append((f"ex-{i:03d}", f"task-{i % 5}", text))
    return out


def finetune_handle(seed, parent, train, lr=1e-6, batch=4, epochs=2):
    h = 0xCBF29CE484222325

    def feed(part):
        nonlocal h
        data = struct.pack("<Q", part) if isinstance(part, int) else part.encode("utf-8")
        for byte in data:
            h ^= byte
            h = (h * 0x100000001B3) & MASK64

    feed(seed)
    feed(parent)
    feed(len(train))
    for ex_id, output in train:
        feed(ex_id)
        feed("\x1f")
        feed(output)
        feed("\x1e")
    feed(struct.unpack("<Q", struct.pack("<d", lr))[0])
    feed(batch)
    feed(epochs)
    return f"ft-{h:016x}"


def loss(seed, handle, utility, sigma=0.02):
    rng = MT19937_64(fnv1a64(seed, "loss-noise", handle))
    return max(0.0, 1.0 - utility + sigma * rng.normal())


def main():
    check = MT19937_64(5489)
    for _ in range(9999):
        check.next()
    assert check.next() == 9981545732273789042, "mt19937_64 reference is wrong"

    print("fnv1a64(7, 'abc') =", hex(fnv1a64(7, "abc")))
    v = hash_embed("abc", 7)
    print("embed seed 7 'abc' nonzero:", [(i, x) for i, x in enumerate(v) if x != 0.0])
    v = hash_embed("the red cat sat on the mat", 7)
    print("embed seed 7 sentence nonzero:", [(i, repr(x)) for i, x in enumerate(v) if x != 0.0])

    corpus = synthetic_corpus()
    matrix = b"".join(unit_float32_bytes(hash_embed(text, 7)) for _, _, text in corpus)
    print("100-example index matrix sha256:", hashlib.sha256(matrix).hexdigest())

    train = [("u1", "yes"), ("u2", "no")]
    handle = finetune_handle(7, "base", train)
    print("finetune handle:", handle)
    print("loss(utility 0.75):", repr(loss(7, handle, 0.75)))
    print("loss(base, utility 0):", repr(loss(7, "base", 0.0)))

    # Values frozen into the C++ unit tests.
    assert fnv1a64(7, "abc") == 0xC26EF1CF1E5F86
    assert hashlib.sha256(matrix).hexdigest() == "3ca9b64720df4c5b66d32d49b375e3075caf3141b443611c30b6655cb944d0e4"
    assert handle == "ft-8e78e4a12b3f7dee"
    assert loss(7, handle, 0.75) == 0.26737344473986596
    assert loss(7, "base", 0.0) == 0.9968127901860668


if __name__ == "__main__":
    main()
