"""Independent seed_seq + mt19937_64 reference (C++ [rand.util.seedseq], [rand.eng.mers]).

Writes the first draws of the (seed, stream) pair used by the golden test.
"""
import sys

M32 = 0xFFFFFFFF
M64 = 0xFFFFFFFFFFFFFFFF


def seed_seq_generate(v, n):
    b = [0x8B8B8B8B] * n
    s = len(v)
    t = 11 if n >= 623 else 7 if n >= 68 else 5 if n >= 39 else 3 if n >= 7 else (n - 1) // 2
    p = (n - t) // 2
    q = p + t
    m = max(s + 1, n)

    def T(x):
        return x ^ (x >> 27)

    for k in range(m):
        r1 = (1664525 * T(b[k % n] ^ b[(k + p) % n] ^ b[(k - 1) % n])) & M32
        if k == 0:
            r2 = (r1 + s) & M32
        elif k <= s:
            r2 = (r1 + k % n + v[k - 1]) & M32
        else:
            r2 = (r1 + k % n) & M32
        b[(k + p) % n] = (b[(k + p) % n] + r1) & M32
        b[(k + q) % n] = (b[(k + q) % n] + r2) & M32
        b[k % n] = r2
    for k in range(m, m + n):
        r3 = (1566083941 * T((b[k % n] + b[(k + p) % n] + b[(k - 1) % n]) & M32)) & M32
        r4 = (r3 - k % n) & M32
        b[(k + p) % n] ^= r3
        b[(k + q) % n] ^= r4
        b[k % n] = r4
    return b


class MT19937_64:
    n, m, r = 312, 156, 31
    a = 0xB5026F5AA96619E9
    u, d = 29, 0x5555555555555555
    s, b = 17, 0x71D67FFFEDA60000
    t, c = 37, 0xFFF7EEE000000000
    l = 43

    def __init__(self, words):
        n = self.n
        self.x = [(words[2 * i] | (words[2 * i + 1] << 32)) & M64 for i in range(n)]
        upper = M64 & ~((1 << self.r) - 1)
        if (self.x[0] & upper) == 0 and all(v == 0 for v in self.x[1:]):
            self.x[0] = 1 << 63
        self.i = 0

    def __call__(self):
        n, m = self.n, self.m
        lower = (1 << self.r) - 1
        upper = M64 & ~lower
        if self.i == n:
            for k in range(n):
                y = (self.x[k] & upper) | (self.x[(k + 1) % n] & lower)
                self.x[k] = self.x[(k + m) % n] ^ (y >> 1) ^ (self.a if y & 1 else 0)
            self.i = 0
        # the standard transitions lazily; seeding leaves i = n
        z = self.x[self.i]
        self.i += 1
        z ^= (z >> self.u) & self.d
        z ^= (z << self.s) & self.b
        z ^= (z << self.t) & self.c
        z ^= z >> self.l
        return z & M64


def split(seed, stream):
    v = [seed & M32, seed >> 32, stream & M32, stream >> 32, 0x5EED]
    eng = MT19937_64(seed_seq_generate(v, 624))
    eng.i = eng.n
    return eng


if __name__ == "__main__":
    seed, stream, count = (int(a) for a in sys.argv[1:4])
    eng = split(seed, stream)
    for _ in range(count):
        print(eng())
