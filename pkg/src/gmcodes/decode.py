"""Iterative soft-in soft-out decoding over graphical models.

Every constraint performs exact a-posteriori marginalization over its local
code (sum-product in the log domain), and a flooding schedule updates every
constraint-to-variable message at once.  Frames are decoded in batches: all
message arrays carry a leading frame axis.

Messages are log-domain vectors over a variable's alphabet ``{0, 1}^s``
(symbol index ``sum(bit_c << c)``), shifted so entry 0 is zero and clipped to
``[-CLIP, CLIP]``.  Channel values are log-likelihood ratios ``log p(0)/p(1)``.

:func:`map_oracle` computes exact bitwise marginals of a whole code by
enumeration and is the reference the decoder is tested against.
:func:`ber_sim` and :func:`compare_ber` run BPSK over AWGN Monte Carlo
simulations with per-batch random streams, so results do not depend on the
worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import TooLarge, TooLargeLocalCode
from .gf2codes import LinearCode, nullspace_rows, row_reduce
from .model import GraphicalModel, cartesian_factors, realized_code
from .parallel import pmap

__all__ = [
    "Message",
    "ChannelObservation",
    "BerRecord",
    "PairedResult",
    "LocalSiso",
    "local_siso",
    "FloodDecoder",
    "flood_decode",
    "map_oracle",
    "ber_sim",
    "compare_ber",
    "awgn_sigma",
    "binomial_tail",
    "format_ber_csv",
]

CLIP = 50.0
LOCAL_LIMIT = 20
ORACLE_LIMIT = 22
BATCH_FRAMES = 2048


@dataclass
class Message:
    variable: str
    toward: str
    values: np.ndarray


@dataclass(frozen=True)
class ChannelObservation:
    llrs: np.ndarray
    snr_db: float = math.inf
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "llrs", np.asarray(self.llrs, dtype=float))


@dataclass
class BerRecord:
    snr_db: float
    bits_simulated: int = 0
    bit_errors: int = 0
    frames: int = 0
    frame_errors: int = 0
    iterations_used: dict[int, int] = field(default_factory=dict)

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_simulated if self.bits_simulated else 0.0

    def csv_row(self) -> str:
        return (
            f"{self.snr_db:g},{self.bits_simulated},{self.bit_errors},{self.ber:.6e},"
            f"{self.frames},{self.frame_errors}"
        )


def format_ber_csv(records: Sequence[BerRecord]) -> str:
    lines = ["snr_db,bits,bit_errors,ber,frames,frame_errors"]
    lines += [r.csv_row() for r in records]
    return "\n".join(lines) + "\n"


def _normalize(out: np.ndarray) -> np.ndarray:
    out = out - out[:, :1]
    return np.clip(np.nan_to_num(out, nan=-CLIP, neginf=-CLIP, posinf=CLIP), -CLIP, CLIP)


def _hadamard(s: int) -> np.ndarray:
    a = np.arange(1 << s)
    parity = np.vectorize(lambda x: x.bit_count() & 1)(a[:, None] & a[None, :])
    return 1.0 - 2.0 * parity


# ---------------------------------------------------------------------------
# Exact local marginalization
# ---------------------------------------------------------------------------


class _Block:
    """One group of ports whose coordinates form a direct factor of the local code."""

    def __init__(self, ports: list[int], port_pos: list[list[int]], code: LinearCode, method: str):
        self.ports = ports
        coords = [c for p in ports for c in port_pos[p]]
        index = {c: i for i, c in enumerate(coords)}
        gens = []
        for g in code.generator.bits:
            w = 0
            for c in coords:
                if (g >> c) & 1:
                    w |= 1 << index[c]
            gens.append(w)
        reduced, _ = row_reduce(gens, len(coords), warn=False)
        n, k = len(coords), len(reduced)
        if method == "auto":
            method = "primal" if k <= n - k else "dual"
        if (k if method == "primal" else n - k) > LOCAL_LIMIT:
            raise TooLargeLocalCode(f"{method} enumeration of a [{n},{k}] local block exceeds 2^{LOCAL_LIMIT} words")
        self.method = method
        basis = reduced if method == "primal" else nullspace_rows(reduced, n)
        words = np.zeros(1, dtype=np.int64)
        for g in basis:
            words = np.concatenate([words, words ^ g])
        self.sizes = [len(port_pos[p]) for p in ports]
        syms = np.zeros((len(words), len(ports)), dtype=np.int64)
        off = 0
        for i, s in enumerate(self.sizes):
            for c in range(s):
                syms[:, i] |= ((words >> (off + c)) & 1) << c
            off += s
        self.syms = syms
        full = (1 << n) - 1
        self.fast = None
        if all(sz == 1 for sz in self.sizes) and n >= 2:
            if k == 1 and reduced[0] == full:
                self.fast = "rep"
            elif k == n - 1 and nullspace_rows(reduced, n) == [full]:
                self.fast = "spc"
        if method == "primal":
            self.groups = []
            for i, s in enumerate(self.sizes):
                order = np.argsort(syms[:, i], kind="stable")
                vals, counts = np.unique(syms[order, i], return_counts=True)
                self.groups.append((order.reshape(len(vals), counts[0]), vals, 1 << s))
        else:
            self.had = {s: _hadamard(s) for s in set(self.sizes)}
            self.onehot = [np.eye(1 << s)[syms[:, i]] for i, s in enumerate(self.sizes)]

    def run(self, inputs: list[np.ndarray]) -> list[np.ndarray]:
        if self.fast == "rep":
            return self._repetition(inputs)
        if self.fast == "spc":
            return self._parity(inputs)
        if self.method == "primal":
            return self._primal(inputs)
        return self._dual(inputs)

    @staticmethod
    def _pack(ext: np.ndarray) -> list[np.ndarray]:
        out = np.zeros(ext.shape + (2,))
        out[..., 1] = -np.clip(ext, -CLIP, CLIP)
        return [out[:, i] for i in range(ext.shape[1])]

    def _repetition(self, inputs):
        llr = -np.stack([x[:, 1] - x[:, 0] for x in inputs], axis=1)
        return self._pack(llr.sum(axis=1, keepdims=True) - llr)

    def _parity(self, inputs):
        """Tanh rule in sign / log-magnitude form with prefix and suffix sums."""
        llr = -np.stack([x[:, 1] - x[:, 0] for x in inputs], axis=1)
        a = np.abs(llr)
        with np.errstate(divide="ignore"):
            logmag = np.log(-np.expm1(-a)) - np.log1p(np.exp(-a))  # log tanh(|L|/2)
        sign = np.where(llr < 0, -1.0, 1.0)
        zero_f = np.zeros_like(logmag[:, :1])
        one_f = np.ones_like(sign[:, :1])
        pre = np.cumsum(np.concatenate([zero_f, logmag[:, :-1]], axis=1), axis=1)
        suf = np.cumsum(np.concatenate([zero_f, logmag[:, :0:-1]], axis=1), axis=1)[:, ::-1]
        spre = np.cumprod(np.concatenate([one_f, sign[:, :-1]], axis=1), axis=1)
        ssuf = np.cumprod(np.concatenate([one_f, sign[:, :0:-1]], axis=1), axis=1)[:, ::-1]
        t = pre + suf
        with np.errstate(divide="ignore"):
            mag = np.log1p(np.exp(t)) - np.log(-np.expm1(t))  # 2 atanh(e^t)
        return self._pack(spre * ssuf * mag)

    def _primal(self, inputs):
        gathered = [x[:, self.syms[:, i]] for i, x in enumerate(inputs)]
        score = np.sum(gathered, axis=0)
        outs = []
        for i, (order, vals, alpha) in enumerate(self.groups):
            ext = (score - gathered[i])[:, order]
            out = np.full((score.shape[0], alpha), -np.inf)
            out[:, vals] = logsumexp(ext, axis=2)
            outs.append(_normalize(out))
        return outs

    def _dual(self, inputs):
        spectra = []
        for i, x in enumerate(inputs):
            p = np.exp(x - x.max(axis=1, keepdims=True))
            p /= p.sum(axis=1, keepdims=True)
            spectra.append((p @ self.had[self.sizes[i]])[:, self.syms[:, i]])
        t = np.stack(spectra, axis=2)  # frames x dual words x ports
        ones = np.ones_like(t[:, :, :1])
        prefix = np.cumprod(np.concatenate([ones, t[:, :, :-1]], axis=2), axis=2)
        suffix = np.cumprod(np.concatenate([ones, t[:, :, :0:-1]], axis=2), axis=2)[:, :, ::-1]
        excl = prefix * suffix
        outs = []
        for i, s in enumerate(self.sizes):
            g = (excl[:, :, i] @ self.onehot[i]) @ self.had[s]
            top = g.max(axis=1, keepdims=True)
            g = np.maximum(g, top * 1e-300)
            outs.append(_normalize(np.log(g)))
        return outs


class LocalSiso:
    """Exact extrinsic outputs of one local code for grouped coordinates.

    ``ports`` lists, for each variable, the local coordinates it occupies
    (component ``c`` of the variable at ``ports[v][c]``).  By default every
    coordinate is its own binary variable.
    """

    def __init__(self, code: LinearCode, ports: Sequence[Sequence[int]] | None = None, method: str = "auto"):
        if ports is None:
            ports = [[j] for j in range(code.n)]
        self.ports = [list(p) for p in ports]
        owner = {}
        for i, p in enumerate(self.ports):
            for c in p:
                owner[c] = i
        parent = list(range(len(self.ports)))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for cols, _ in cartesian_factors(code) if code.n else []:
            roots = {find(owner[c]) for c in cols}
            first = min(roots)
            for r in roots:
                parent[r] = first
        groups: dict[int, list[int]] = {}
        for i in range(len(self.ports)):
            groups.setdefault(find(i), []).append(i)
        self.blocks = [_Block(g, self.ports, code, method) for g in groups.values()]

    def __call__(self, inputs: Sequence[np.ndarray]) -> list[np.ndarray]:
        outs: list[np.ndarray | None] = [None] * len(self.ports)
        for b in self.blocks:
            for p, o in zip(b.ports, b.run([inputs[p] for p in b.ports])):
                outs[p] = o
        return outs  # type: ignore[return-value]


def local_siso(code: LinearCode, incoming: Sequence, method: str = "auto") -> list[np.ndarray]:
    """Extrinsic log-domain outputs for each coordinate of ``code``.

    ``incoming[j]`` is a log-domain prior ``[log p(0), log p(1)]`` (any
    offset) or a batch of them with shape ``(frames, 2)``.
    """
    arrs = [np.atleast_2d(np.asarray(x, dtype=float)) for x in incoming]
    if len(arrs) != code.n:
        raise ValueError("need one prior per coordinate")
    outs = LocalSiso(code, method=method)([_normalize(a) for a in arrs])
    single = np.ndim(incoming[0]) == 1
    return [o[0] if single else o for o in outs]


# ---------------------------------------------------------------------------
# Flooding decoder
# ---------------------------------------------------------------------------


class FloodDecoder:
    """Batched flooding-schedule decoder for a fixed model."""

    def __init__(self, gm: GraphicalModel, method: str = "auto"):
        self.gm = gm
        self.visibles = list(gm.visibles)
        vpos = {v: i for i, v in enumerate(self.visibles)}
        self.sizes = {h.label: h.size for h in gm.hiddens}
        self.other = {}
        for h in gm.hiddens:
            a, b = h.endpoints
            if a == b:
                raise ValueError(f"hidden variable {h.label} is a self-loop")
            self.other[(h.label, a)] = b
            self.other[(h.label, b)] = a
        self.nodes = []
        for c in gm.constraints:
            if c.is_trivial:
                continue
            ports, names = [], []
            for b in c.bindings:
                key = (b[0], b[1])
                if key not in names:
                    names.append(key)
                    ports.append([])
            for j, b in enumerate(c.bindings):
                idx = names.index((b[0], b[1]))
                comp = 0 if b[0] == "v" else b[2]
                ports[idx].append((comp, j))
            ports = [[j for _, j in sorted(p)] for p in ports]
            refs = [("v", vpos[n]) if k == "v" else ("h", n) for k, n in names]
            self.nodes.append((c.cid, refs, LocalSiso(c.code, ports, method)))

    def decode(self, llrs: np.ndarray, iterations: int) -> tuple[np.ndarray, np.ndarray]:
        """Hard decisions and output LLRs for a ``(frames, n)`` array of channel LLRs."""
        llrs = np.atleast_2d(np.asarray(llrs, dtype=float))
        frames = llrs.shape[0]
        chan = np.zeros((frames, len(self.visibles), 2))
        chan[:, :, 1] = -np.clip(llrs, -CLIP, CLIP)
        msgs = {
            key: np.zeros((frames, 1 << self.sizes[key[0]])) for key in self.other
        }  # (hidden, constraint it flows into)
        ext = np.zeros((frames, len(self.visibles), 2))
        for _ in range(max(iterations, 1)):
            new = {}
            for cid, refs, siso in self.nodes:
                ins = [chan[:, r[1]] if r[0] == "v" else msgs[(r[1], cid)] for r in refs]
                for r, o in zip(refs, siso(ins)):
                    if r[0] == "v":
                        ext[:, r[1]] = o
                    else:
                        new[(r[1], self.other[(r[1], cid)])] = o
            msgs = new
        self.messages = msgs
        total = chan + ext
        out = total[:, :, 0] - total[:, :, 1]
        return (out < 0).astype(np.uint8), out

    def message_list(self, frame: int = 0) -> list[Message]:
        return [Message(h, c, v[frame]) for (h, c), v in sorted(self.messages.items())]


def flood_decode(gm: GraphicalModel, obs: ChannelObservation, iterations: int) -> tuple[np.ndarray, np.ndarray]:
    """Decode one observation; returns hard decisions and output LLRs over the visibles."""
    llrs = np.asarray(obs.llrs, dtype=float)
    if llrs.shape[-1] != len(gm.visibles):
        raise ValueError("observation length differs from the number of visible variables")
    bits, out = FloodDecoder(gm).decode(llrs.reshape(-1, llrs.shape[-1]), iterations)
    if llrs.ndim == 1:
        return bits[0], out[0]
    return bits, out


def map_oracle(code: LinearCode, obs: ChannelObservation | np.ndarray) -> np.ndarray:
    """Exact bitwise posterior LLRs by summing over every codeword."""
    llrs = np.asarray(obs.llrs if isinstance(obs, ChannelObservation) else obs, dtype=float)
    if code.k > ORACLE_LIMIT:
        raise TooLarge(f"map_oracle enumerates 2^k words; k = {code.k} exceeds {ORACLE_LIMIT}")
    n = code.n
    gens = np.array([[(g >> j) & 1 for j in range(n)] for g in code.generator.bits], dtype=np.int64)
    k = code.k
    lo_bits = min(k, 14)
    idx = np.arange(1 << lo_bits)
    low = (idx[:, None] >> np.arange(lo_bits)) & 1
    low_words = (low @ gens[:lo_bits]) % 2 if k else np.zeros((1, n), dtype=np.int64)
    acc = np.full((2, n), -np.inf)
    for hi in range(1 << (k - lo_bits)):
        shift = np.zeros(n, dtype=np.int64)
        for t in range(k - lo_bits):
            if (hi >> t) & 1:
                shift ^= gens[lo_bits + t]
        words = low_words ^ shift
        score = -(words @ llrs)
        for b in (0, 1):
            masked = np.where(words == b, score[:, None], -np.inf)
            acc[b] = np.logaddexp(acc[b], logsumexp(masked, axis=0))
    return acc[0] - acc[1]


# ---------------------------------------------------------------------------
# Monte Carlo simulation
# ---------------------------------------------------------------------------


def awgn_sigma(snr_db: float, rate: float) -> float:
    """Noise standard deviation for unit-energy BPSK at Eb/N0 ``snr_db``."""
    if math.isinf(snr_db):
        return 0.0
    return math.sqrt(1.0 / (2.0 * rate * 10 ** (snr_db / 10.0)))


class _Encoder:
    def __init__(self, code: LinearCode):
        self.n, self.k = code.n, code.k
        rows = code.canonical_rows
        self.g = np.array([[(r >> j) & 1 for j in range(code.n)] for r in rows], dtype=np.int64).reshape(
            code.k, code.n
        )

    def batch(self, rng: np.random.Generator, frames: int) -> np.ndarray:
        u = rng.integers(0, 2, size=(frames, self.k))
        return (u @ self.g) % 2


def _channel(seed: int, snr_idx: int, batch: int, enc: _Encoder, frames: int, sigma: float):
    rng = np.random.default_rng(np.random.SeedSequence([seed, snr_idx, batch]))
    cw = enc.batch(rng, frames)
    noise = rng.standard_normal(cw.shape)
    y = 1.0 - 2.0 * cw + sigma * noise
    llr = 2.0 * y / sigma**2 if sigma > 0 else np.where(cw == 0, CLIP, -CLIP).astype(float)
    return cw, llr


def _sim_batch(args):
    gms, iters, enc, seed, snr_idx, batch, frames, sigma = args
    cw, llr = _channel(seed, snr_idx, batch, enc, frames, sigma)
    errs = []
    for gm, it in zip(gms, iters):
        bits, _ = FloodDecoder(gm).decode(llr, it)
        errs.append(bits != cw)
    return errs


def _waves(workers: int):
    """Consecutive batch indices, ``workers`` at a time."""
    start = 0
    while True:
        yield list(range(start, start + max(workers, 1)))
        start += max(workers, 1)


def ber_sim(
    gm: GraphicalModel,
    snrs: Sequence[float],
    min_bit_errors: int = 100,
    max_bits: float = 1e6,
    iterations: int = 50,
    seed: int = 0,
    workers: int = 1,
    batch_frames: int = BATCH_FRAMES,
) -> list[BerRecord]:
    """Bit error rates of the flooding decoder for BPSK over AWGN.

    Random codewords of the realized code are sent; noise is scaled by the
    code rate ``k/n``.  Batch ``b`` at SNR index ``i`` draws from the stream
    seeded by ``(seed, i, b)``; batches are accumulated in order and the run
    at each SNR stops after the first batch reaching ``min_bit_errors`` or
    ``max_bits``.  Errors are counted over every visible coordinate.
    """
    code = realized_code(gm)
    enc = _Encoder(code)
    rate = code.k / code.n
    out = []
    for si, snr in enumerate(snrs):
        rec = BerRecord(float(snr))
        sigma = awgn_sigma(snr, rate)
        done = False
        for wave in _waves(workers):
            jobs = [([gm], [iterations], enc, seed, si, b, batch_frames, sigma) for b in wave]
            for errs in pmap(_sim_batch, jobs, workers, chunksize=1):
                e = errs[0]
                rec.bits_simulated += e.size
                rec.bit_errors += int(e.sum())
                rec.frames += e.shape[0]
                rec.frame_errors += int(e.any(axis=1).sum())
                rec.iterations_used[iterations] = rec.iterations_used.get(iterations, 0) + e.shape[0]
                if rec.bit_errors >= min_bit_errors or rec.bits_simulated >= max_bits:
                    done = True
                    break
            if done:
                break
        out.append(rec)
    return out


def binomial_tail(k: int, n: int, p: float = 0.5) -> float:
    """``P(X <= k)`` for ``X ~ Binomial(n, p)``, summed exactly in log space."""
    if n == 0:
        return 1.0
    if p <= 0.0:
        return 1.0
    if p >= 1.0:
        return 1.0 if k >= n else 0.0
    lp, lq = math.log(p), math.log1p(-p)
    terms = [
        math.lgamma(n + 1) - math.lgamma(i + 1) - math.lgamma(n - i + 1) + i * lp + (n - i) * lq
        for i in range(0, min(k, n) + 1)
    ]
    top = max(terms)
    return min(1.0, math.exp(top) * sum(math.exp(t - top) for t in terms))


@dataclass(frozen=True)
class PairedResult:
    snr_db: float
    bits: int
    errors_a: int
    errors_b: int
    only_a: int
    only_b: int
    p_value: float

    @property
    def ber_a(self) -> float:
        return self.errors_a / self.bits

    @property
    def ber_b(self) -> float:
        return self.errors_b / self.bits

    def a_better(self, level: float = 0.05) -> bool:
        return self.errors_a < self.errors_b and self.p_value < level


def compare_ber(
    gm_a: GraphicalModel,
    gm_b: GraphicalModel,
    snr_db: float,
    bits: float,
    iterations_a: int = 50,
    iterations_b: int | None = None,
    seed: int = 0,
    workers: int = 1,
    batch_frames: int = BATCH_FRAMES,
) -> PairedResult:
    """Paired comparison of two decoders for the same code on identical channel outputs.

    Both models see the same codewords and noise.  The one-sided p-value for
    "``a`` makes fewer bit errors than ``b``" is the binomial tail of the bits
    only ``a`` got wrong among the bits exactly one decoder got wrong.
    """
    code = realized_code(gm_a)
    other = realized_code(gm_b)
    if code.labels != other.labels or code.canonical_rows != other.canonical_rows:
        raise ValueError("the two models realize different codes")
    enc = _Encoder(code)
    sigma = awgn_sigma(snr_db, code.k / code.n)
    iters = [iterations_a, iterations_b if iterations_b is not None else iterations_a]
    total = ea = eb = oa = ob = 0
    done = False
    for wave in _waves(workers):
        jobs = [([gm_a, gm_b], iters, enc, seed, 0, b, batch_frames, sigma) for b in wave]
        for e_a, e_b in pmap(_sim_batch, jobs, workers, chunksize=1):
            total += e_a.size
            ea += int(e_a.sum())
            eb += int(e_b.sum())
            oa += int((e_a & ~e_b).sum())
            ob += int((e_b & ~e_a).sum())
            if total >= bits:
                done = True
                break
        if done:
            break
    return PairedResult(float(snr_db), total, ea, eb, oa, ob, binomial_tail(oa, oa + ob))
