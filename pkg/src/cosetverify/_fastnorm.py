"""Fast exact norms of the branched highest-weight vectors.

The direct route in `freefield` expresses the candidate vector in the free
field realization and pairs it with itself, which means solving one dense
rational linear system per bigrade of the accompanying module.  Pure
Fraction elimination on the bigrades that a charge label of -6 reaches
(dimension 1372 at the worst bigrade) is hopeless, so this module runs the
same computation mod several word-size primes and reconstructs the
rational answer:

* the expansion coefficients of the candidate vector carry no dependence
  on the weight parameters, so its per-bigrade weight tables are exact
  one-time data;
* the matrix expressing creation words in the free-field basis has entries
  affine-linear in the weight and level parameters (one letter contributes
  at most one power), so each letter's structural matrix is recovered
  exactly from evaluations at three parameter choices, with a fourth
  evaluation certifying the affine-linearity;
* the pairings of creation words against states built purely from the
  charged free-field modes carry no parameter dependence at all (every
  term of an annihilation-side mode that touches the weight also destroys
  such a state), so that pairing block is one-time integer data;
* per prime, columns are assembled bigrade by bigrade along the chain
  word -> word with its leftmost letter removed, one sparse-times-dense
  product per letter group, then one LU solve per needed bigrade.

Residues from successive primes are combined by CRT; the answer is
reconstructed rationally and verified against one more held-out prime.
A run that cannot stabilize within the prime budget raises instead of
returning a guess.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import sparse

from . import freefield as ff
from .arith import as_int
from .linalg import crt_combine, prime_stream, rational_reconstruct
from ._modlu import lu_f64, lu_solve_f64
from .reps import AffineVerma, E, F, H, mono_level, mono_weight_shift

_PRIME_BITS = 20
_ADJOINT = {E: F, H: H, F: E}


class ReconstructionError(ArithmeticError):
    """Raised when the modular computation exhausts its prime budget."""


# ---------------------------------------------------------------------------
# raising modes on states built purely from gamma modes
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _raise_on_gamma(cls, n, parts):
    """Action of the annihilation-side mode (cls, n) on the state made of
    gamma creation modes `parts` (a weakly decreasing tuple, entries >= 0).

    Returns a tuple of (new_parts, integer coefficient).  The key fact used
    throughout this module: the charged-pair terms that carry the weight or
    level parameters annihilate such states, so every surviving coefficient
    is a plain integer.
    """
    out = {}
    if cls == E:
        # the raising current is a bare annihilation mode here: it removes
        # one gamma part equal to n
        cnt = parts.count(n)
        if cnt:
            new = list(parts)
            new.remove(n)
            out[tuple(new)] = cnt
    elif cls == H:
        # surviving piece: -2 (gamma beta)_n, replacing a part mu by mu - n
        for mu in set(parts):
            if mu >= n:
                new = list(parts)
                new.remove(mu)
                new.append(mu - n)
                key = tuple(sorted(new, reverse=True))
                out[key] = out.get(key, 0) - 2 * parts.count(mu)
    else:
        # surviving piece: -(gamma gamma beta)_n, removing a part mu >= n
        # and adding an ordered pair (q, r) with q + r = mu - n
        for mu in set(parts):
            if mu < n:
                continue
            cnt = parts.count(mu)
            base = list(parts)
            base.remove(mu)
            s = mu - n
            for q in range(s + 1):
                key = tuple(sorted(base + [q, s - q], reverse=True))
                out[key] = out.get(key, 0) - cnt
    return tuple((k, v) for k, v in out.items() if v)


def _adjoint_step(state, cls, n):
    """One raising mode applied to {parts: {column: coefficient}}."""
    out = {}
    for parts, cols in state.items():
        for nparts, c in _raise_on_gamma(cls, n, parts):
            tgt = out.setdefault(nparts, {})
            for j, v in cols.items():
                w = tgt.get(j, 0) + c * v
                if w:
                    tgt[j] = w
                else:
                    tgt.pop(j, None)
    return {k: v for k, v in out.items() if v}


def _pair_block(words, gcols):
    """Exact integer pairings of every creation word against every state
    built from gamma modes, sharing work across common word prefixes."""
    npcols = len(gcols)
    block = np.zeros((len(words), npcols), dtype=object)
    init = {}
    for j, parts in enumerate(gcols):
        init.setdefault(parts, {})[j] = 1
    order = sorted(range(len(words)), key=lambda i: words[i])

    def sweep(idxs, depth, state):
        pos = 0
        while pos < len(idxs):
            i = idxs[pos]
            if len(words[i]) == depth:
                for j, v in state.get((), {}).items():
                    block[i, j] = v
                pos += 1
                continue
            letter = words[i][depth]
            grp = [i]
            pos += 1
            while (pos < len(idxs)
                   and len(words[idxs[pos]]) > depth
                   and words[idxs[pos]][depth] == letter):
                grp.append(idxs[pos])
                pos += 1
            cls, mode = letter
            nstate = _adjoint_step(state, _ADJOINT[cls], -mode)
            if nstate:
                sweep(grp, depth + 1, nstate)

    sweep(order, 0, init)
    return block


# ---------------------------------------------------------------------------
# the engine
# ---------------------------------------------------------------------------

class NormEngine:
    """Shapovalov norms of the branched highest-weight vectors, all charge
    labels from 0 down to `min_l2` (in doubled units) at once.

    Building an engine performs the parameter-independent precomputation
    (weight tables, structural letter matrices, pairing blocks); `norms`
    then costs one modular linear-algebra pass per prime.
    """

    def __init__(self, min_l2=-6):
        if min_l2 > 0:
            raise ValueError("charge label must be <= 0")
        self.min_l2 = int(min_l2)
        self._verma = AffineVerma(1, 5)  # basis enumeration only
        self._eval_mods = [ff.WakimotoModule(0, -2), ff.WakimotoModule(1, -2),
                           ff.WakimotoModule(0, -1), ff.WakimotoModule(1, -1)]
        self._wak_basis = {}
        self._wak_pos = {}
        self._words = {}
        self._l2_bgs = {}     # l2 -> sorted list of bigrades
        self._gcols = {}      # bg -> list of gamma part-tuples
        self._weights = {}    # (l2, bg) -> object ndarray of Fractions
        self._build_targets()
        self._topo, self._groups = self._build_plan()
        self._gram_rows = {}
        self._pair = {}       # bg -> object ndarray (words x gcols)
        for bg in sorted(self._gcols):
            rows = [self._wak_pos[bg][((), (), parts)]
                    for parts in self._gcols[bg]]
            self._gram_rows[bg] = np.array(rows, dtype=np.int64)
            self._pair[bg] = _pair_block(self._words[bg], self._gcols[bg])
        self._p_mod_cache = {}
        self._w_mod_cache = {}

    # -- parameter-independent data --------------------------------------

    def _bases(self, bg):
        if bg not in self._wak_basis:
            wb = ff.wak_basis(*bg)
            words = self._verma.basis(*bg)
            if len(wb) != len(words):
                raise RuntimeError(f"bigrade dimension mismatch at {bg}")
            self._wak_basis[bg] = wb
            self._wak_pos[bg] = {m: i for i, m in enumerate(wb)}
            self._words[bg] = words
        return self._words[bg]

    def _build_targets(self):
        # pass 1: group each expansion by its free-boson factor, accumulate
        # the union of gamma columns every charge label touches per bigrade
        grouped = {}
        for l2 in range(0, self.min_l2 - 1, -1):
            expansion = ff.coset_hwv(l2, 0, -2)
            by_fock = {}
            for (fm, wm), c in expansion.items():
                a_part, b_part, g_part = wm
                if a_part or b_part:
                    raise RuntimeError("expansion left the gamma-only sector")
                by_fock.setdefault(fm, []).append((g_part, c))
            per_bg = {}
            for fm, lst in by_fock.items():
                bg = (sum(lst[0][0]), -2 * len(lst[0][0]))
                for parts, _ in lst:
                    if (sum(parts), -2 * len(parts)) != bg:
                        raise RuntimeError("mixed bigrades under one factor")
                per_bg.setdefault(bg, []).append((ff.fock_pair(fm, fm), lst))
            grouped[l2] = per_bg
            for bg, groups in per_bg.items():
                self._bases(bg)
                cols = self._gcols.setdefault(bg, [])
                seen = set(cols)
                for _, lst in groups:
                    for parts, _ in lst:
                        if parts not in seen:
                            seen.add(parts)
                            cols.append(parts)
            self._l2_bgs[l2] = sorted(per_bg)
        # pass 2: weight tables over the final column layout
        for l2, per_bg in grouped.items():
            for bg, groups in per_bg.items():
                pos = {c: i for i, c in enumerate(self._gcols[bg])}
                n = len(self._gcols[bg])
                w = np.zeros((n, n), dtype=object)
                w[:] = Fraction(0)
                for fnorm, lst in groups:
                    for p1, c1 in lst:
                        for p2, c2 in lst:
                            w[pos[p1], pos[p2]] += fnorm * c1 * c2
                self._weights[(l2, bg)] = w

    def _build_plan(self):
        cone = set(self._gcols)
        stack = list(cone)
        parents = {}
        while stack:
            bg = stack.pop()
            for w in self._bases(bg):
                if not w:
                    continue
                suffix = w[1:]
                pbg = (mono_level(suffix), mono_weight_shift(suffix))
                parents.setdefault(bg, set()).add((w[0], pbg))
                if pbg not in cone:
                    cone.add(pbg)
                    stack.append(pbg)
        topo = sorted(cone, key=lambda bg: (bg[0], -bg[1]))
        groups = {}
        for bg in topo:
            if bg == (0, 0):
                continue
            words = self._bases(bg)
            pos = {w: i for i, w in enumerate(words)}
            per_letter = {}
            for i, w in enumerate(words):
                per_letter.setdefault(w[0], []).append(i)
            entry = []
            for letter, cidx in sorted(per_letter.items()):
                suffixes = [words[i][1:] for i in cidx]
                pbg = (mono_level(suffixes[0]), mono_weight_shift(suffixes[0]))
                ppos = {w: i for i, w in enumerate(self._bases(pbg))}
                pidx = [ppos[s] for s in suffixes]
                smat = self._letter_matrix(letter, pbg, bg)
                entry.append((letter, pbg,
                              np.array(pidx, dtype=np.int64),
                              np.array(cidx, dtype=np.int64), smat))
            groups[bg] = entry
        return topo, groups

    def _letter_matrix(self, letter, pbg, bg):
        """Structural matrix of one creation letter from bigrade pbg, as
        coefficient triples (constant, weight part, level part)."""
        cls, mode = letter
        src = self._wak_basis[pbg]
        tgt = self._wak_pos[bg]
        rows, cols, c0s, cls_, cks = [], [], [], [], []
        for js, mono in enumerate(src):
            vec = {mono: 1}
            base = self._eval_mods[0].apply(cls, mode, vec)
            if cls == F:
                o1 = self._eval_mods[1].apply(cls, mode, vec)
                o2 = self._eval_mods[2].apply(cls, mode, vec)
                o3 = self._eval_mods[3].apply(cls, mode, vec)
                keys = set(base) | set(o1) | set(o2) | set(o3)
            else:
                o1 = o2 = o3 = base
                keys = set(base)
            for m in keys:
                c0 = as_int(Fraction(base.get(m, 0)))
                if cls == F:
                    cl = as_int(Fraction(o1.get(m, 0))) - c0
                    ck = as_int(Fraction(o2.get(m, 0))) - c0
                    if as_int(Fraction(o3.get(m, 0))) != c0 + cl + ck:
                        raise RuntimeError(
                            "letter action is not affine-linear in the "
                            "parameters; structural pass is invalid")
                else:
                    cl = ck = 0
                if c0 or cl or ck:
                    rows.append(tgt[m])
                    cols.append(js)
                    c0s.append(c0)
                    cls_.append(cl)
                    cks.append(ck)
        shape = (len(self._wak_basis[bg]), len(src))
        return (np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64),
                np.array(c0s, dtype=np.int64), np.array(cls_, dtype=np.int64),
                np.array(cks, dtype=np.int64), shape)

    # -- per-prime data ----------------------------------------------------

    def _pair_mod(self, p, bg):
        key = (p, bg)
        if key not in self._p_mod_cache:
            self._p_mod_cache[key] = (self._pair[bg] % p).astype(np.int64)
        return self._p_mod_cache[key]

    def _weight_mod(self, p, l2, bg):
        key = (p, l2, bg)
        if key not in self._w_mod_cache:
            w = self._weights[(l2, bg)]
            n = w.shape[0]
            out = np.zeros((n, n), dtype=np.int64)
            for i in range(n):
                for j in range(n):
                    f = w[i, j]
                    out[i, j] = (f.numerator
                                 * pow(f.denominator, -1, p)) % p
            self._w_mod_cache[key] = out
        return self._w_mod_cache[key]

    # -- modular pass -------------------------------------------------------

    def _slot(self, lam, kap, p, need_bgs, l2s):
        """All requested norm residues mod p, or None when p is unusable."""
        if lam.denominator % p == 0 or kap.denominator % p == 0:
            return None
        lp = lam.numerator * pow(lam.denominator, -1, p) % p
        kp = kap.numerator * pow(kap.denominator, -1, p) % p
        store = {}
        for bg in self._topo:
            if bg == (0, 0):
                store[bg] = np.ones((1, 1), dtype=np.int64)
                continue
            nrows = len(self._wak_basis[bg])
            z = np.zeros((nrows, len(self._words[bg])), dtype=np.int64)
            for letter, pbg, pidx, cidx, smat in self._groups[bg]:
                rows, cols, c0, cl, ck = smat[:5]
                data = (c0 + lp * cl + kp * ck) % p
                s = sparse.csr_matrix((data, (rows, cols)), shape=smat[5])
                z[:, cidx] = s.dot(store[pbg][:, pidx]) % p
            store[bg] = z
        tables = {}
        for bg in need_bgs:
            mf = store[bg].astype(np.float64)
            perm = lu_f64(mf, p)
            if perm is None:
                return None
            rows = self._gram_rows[bg]
            rhs = np.zeros((mf.shape[0], rows.size), dtype=np.float64)
            rhs[rows, np.arange(rows.size)] = 1.0
            x = lu_solve_f64(mf, perm, rhs, p).astype(np.int64)
            t = self._pair_mod(p, bg).T.dot(x) % p
            if not np.array_equal(t, t.T):
                raise RuntimeError("pairing table asymmetric mod p; "
                                   "assembly is inconsistent")
            tables[bg] = t
        out = {}
        for l2 in l2s:
            acc = 0
            for bg in self._l2_bgs[l2]:
                wp = self._weight_mod(p, l2, bg)
                acc = (acc + int((wp * tables[bg]).sum()) % p) % p
            out[l2] = acc
        return out

    # -- public API ----------------------------------------------------------

    def norms(self, lam, k, l2_values=None, max_primes=48):
        """Exact squared norms {l2: Fraction} of the branched highest-weight
        vectors at weight lam and level k, for the requested charge labels
        (doubled, all in [min_l2, 0]).

        Residues are collected one prime at a time; after each new prime the
        rational reconstruction is retried on all but the newest prime and
        certified against the newest.  Raises ReconstructionError when
        max_primes is exhausted, rather than returning an uncertified value.
        """
        lam = Fraction(lam)
        k = Fraction(k)
        kap = k + 2
        if l2_values is None:
            l2s = list(range(0, self.min_l2 - 1, -1))
        else:
            l2s = sorted(set(int(v) for v in l2_values), reverse=True)
            for v in l2s:
                if v > 0 or v < self.min_l2:
                    raise ValueError(f"charge label {v} outside engine range")
        need_bgs = sorted({bg for v in l2s for bg in self._l2_bgs[v]})
        slots = []
        used = 0
        for p in prime_stream(_PRIME_BITS):
            if used >= max_primes:
                break
            used += 1
            res = self._slot(lam, kap, p, need_bgs, l2s)
            if res is None:
                continue
            slots.append((p, res))
            if len(slots) < 4:
                continue
            result = self._try_finish(slots, l2s)
            if result is not None:
                return result
        raise ReconstructionError(
            f"norms at (lam={lam}, k={k}) did not stabilize "
            f"within {max_primes} primes")

    def norm(self, lam, k, l2):
        return self.norms(lam, k, [l2])[l2]

    @staticmethod
    def _try_finish(slots, l2s):
        holdout_p, holdout_res = slots[-1]
        out = {}
        for l2 in l2s:
            r, m = 0, 1
            for p, res in slots[:-1]:
                r, m = crt_combine(r, m, res[l2], p)
            f = rational_reconstruct(r, m)
            if f is None:
                return None
            if f.denominator % holdout_p == 0:
                return None
            if (f.numerator - holdout_res[l2] * f.denominator) % holdout_p:
                return None
            out[l2] = f
        return out


@lru_cache(maxsize=4)
def get_engine(min_l2=-6):
    """Shared engine instances; building one is expensive (structural pass)."""
    return NormEngine(min_l2)
