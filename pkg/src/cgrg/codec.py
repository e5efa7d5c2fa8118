"""Lossless coding of (colors, edge set) under the annealed graph law.

A binary arithmetic coder writes the n color symbols under the sensor law
and then the C(n, 2) link indicators in canonical pair order, each as a
Bernoulli(p_n(a, b)) symbol conditioned on the already-coded endpoint
colors.  Models are static and rebuilt identically on both sides from the
header, with probabilities quantized to 30 bits; together with the 32-bit
coder state this keeps the payload within a few bits of the ideal
-log2 P(colors, edges), far inside the 32-bit overhead bound.  Positions
are not coded: they carry no information about the law of (colors, edges).

Coded file layout (all integers little-endian):

    bytes 0-3   magic "CGRG"
    byte  4     format version (1)
    bytes 5-8   header length L as uint32
    bytes 9..   L bytes of canonical JSON header:
                {"alphabet", "d", "lambda", "metric", "n", "nu",
                 "payload_bits"}
    rest        payload: ceil(payload_bits / 8) bytes of coder output,
                zero-padded to a byte boundary

The hot per-symbol loops are compiled with numba when available; the pure
Python fallback runs the same integer arithmetic bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import math

import numpy as np

from . import serialize
from .infotheory import log_likelihood
from .model import Instance, ModelSpec, connection_prob

try:
    from numba import njit as _njit

    def _jit(fn):
        return _njit(cache=True)(fn)

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    def _jit(fn):
        return fn

    HAVE_NUMBA = False


class UncodableError(ValueError):
    """The instance has probability zero under its own model."""


class DecodeError(ValueError):
    """The coded byte stream is malformed or inconsistent."""


MAGIC = b"CGRG"
VERSION = 1

# 32-bit coder state; probabilities live on a 2^30 grid.
_MASK = (1 << 32) - 1
_HALF = 1 << 31
_QUARTER = 1 << 30
TOTAL = 1 << 30


def _push(low, high, pending, bits, pos, c_lo, c_hi, total):
    """Narrow the coder interval to [c_lo, c_hi) / total and renormalize."""
    span = high - low + 1
    high = low + (c_hi * span) // total - 1
    low = low + (c_lo * span) // total
    while True:
        if (low ^ high) & _HALF == 0:
            bit = low >> 31
            bits[pos] = bit
            pos += 1
            while pending > 0:
                bits[pos] = 1 - bit
                pos += 1
                pending -= 1
            low = (low << 1) & _MASK
            high = ((high << 1) & _MASK) | 1
        elif (low & ~high & _QUARTER) != 0:
            pending += 1
            low = (low << 1) & (_MASK >> 1)
            high = ((high << 1) & (_MASK >> 1)) | _HALF | 1
        else:
            break
    return low, high, pending, pos


def _pull(low, high, value, bits, pos, nbits, c_lo, c_hi, total):
    """Decoder mirror of _push; consumes bits as the interval renormalizes."""
    span = high - low + 1
    high = low + (c_hi * span) // total - 1
    low = low + (c_lo * span) // total
    while True:
        if (low ^ high) & _HALF == 0:
            b = 1 if pos < nbits and bits[pos] != 0 else 0
            pos += 1
            low = (low << 1) & _MASK
            high = ((high << 1) & _MASK) | 1
            value = ((value << 1) & _MASK) | b
        elif (low & ~high & _QUARTER) != 0:
            b = 1 if pos < nbits and bits[pos] != 0 else 0
            pos += 1
            low = (low << 1) & (_MASK >> 1)
            high = ((high << 1) & (_MASK >> 1)) | _HALF | 1
            value = (value & _HALF) | ((value << 1) & (_MASK >> 1)) | b
        else:
            break
    return low, high, value, pos


def _target(low, high, value, total):
    span = high - low + 1
    return ((value - low + 1) * total - 1) // span


def _encode_core(n, colors, edges_i, edges_j, color_cum, f1, total, bits):
    """Code colors then link indicators; returns (bit count, status).

    Status 0 = ok, 1 = zero-probability symbol, 2 = edge list not in
    canonical order.
    """
    low = 0
    high = _MASK
    pending = 0
    pos = 0
    k = color_cum.shape[0] - 1
    for u in range(n):
        c = colors[u]
        if c < 0 or c >= k:
            return pos, 2
        low, high, pending, pos = _push(
            low, high, pending, bits, pos, color_cum[c], color_cum[c + 1], total
        )
    m = edges_i.shape[0]
    ptr = 0
    for i in range(n):
        ci = colors[i]
        for j in range(i + 1, n):
            bit = 0
            if ptr < m and edges_i[ptr] == i and edges_j[ptr] == j:
                bit = 1
                ptr += 1
            f = f1[ci, colors[j]]
            if f == 0:
                if bit == 1:
                    return pos, 1
                continue
            if f == total:
                if bit == 0:
                    return pos, 1
                continue
            f0 = total - f
            if bit == 1:
                low, high, pending, pos = _push(
                    low, high, pending, bits, pos, f0, total, total
                )
            else:
                low, high, pending, pos = _push(
                    low, high, pending, bits, pos, 0, f0, total
                )
    if ptr != m:
        return pos, 2
    if n > 0:
        # termination: pin a value inside the final interval
        pending += 1
        bit = 1 if low >= _QUARTER else 0
        bits[pos] = bit
        pos += 1
        while pending > 0:
            bits[pos] = 1 - bit
            pos += 1
            pending -= 1
    return pos, 0


def _decode_core(n, color_cum, f1, total, bits, nbits, colors_out, ei_out, ej_out):
    """Inverse of _encode_core; returns edge count, or -1 if capacity hit."""
    low = 0
    high = _MASK
    value = 0
    pos = 0
    for _ in range(32):
        b = 1 if pos < nbits and bits[pos] != 0 else 0
        value = (value << 1) | b
        pos += 1
    k = color_cum.shape[0] - 1
    for u in range(n):
        t = _target(low, high, value, total)
        s = k - 1
        for c in range(k):
            if t < color_cum[c + 1]:
                s = c
                break
        colors_out[u] = s
        low, high, value, pos = _pull(
            low, high, value, bits, pos, nbits, color_cum[s], color_cum[s + 1], total
        )
    cap = ei_out.shape[0]
    count = 0
    for i in range(n):
        ci = colors_out[i]
        for j in range(i + 1, n):
            f = f1[ci, colors_out[j]]
            if f == 0:
                continue
            if f == total:
                bit = 1
            else:
                f0 = total - f
                t = _target(low, high, value, total)
                if t >= f0:
                    bit = 1
                    low, high, value, pos = _pull(
                        low, high, value, bits, pos, nbits, f0, total, total
                    )
                else:
                    bit = 0
                    low, high, value, pos = _pull(
                        low, high, value, bits, pos, nbits, 0, f0, total
                    )
            if bit == 1:
                if count >= cap:
                    return -1
                ei_out[count] = i
                ej_out[count] = j
                count += 1
    return count


_push = _jit(_push)
_pull = _jit(_pull)
_target = _jit(_target)
_encode_core = _jit(_encode_core)
_decode_core = _jit(_decode_core)


def _color_freqs(nu: np.ndarray) -> np.ndarray:
    """Cumulative 30-bit color frequencies; every symbol gets mass >= 1."""
    k = len(nu)
    f = np.maximum(np.rint(np.asarray(nu, dtype=float) * TOTAL).astype(np.int64), 1)
    f[np.argmax(f)] += TOTAL - int(f.sum())
    if f.min() < 1:
        raise ValueError("sensor law too skewed for 30-bit quantization")
    cum = np.zeros(k + 1, dtype=np.int64)
    cum[1:] = np.cumsum(f)
    return cum


def _edge_freqs(spec: ModelSpec, n: int) -> np.ndarray:
    """Quantized per-color-pair link probabilities on the 2^30 grid.

    Exact 0 and 1 stay exact (deterministic symbols that cost no bits);
    everything else is clamped inside the open interval.
    """
    p = connection_prob(spec, n)
    f = np.rint(p * TOTAL).astype(np.int64)
    f[(p > 0.0) & (f < 1)] = 1
    f[(p < 1.0) & (f > TOTAL - 1)] = TOTAL - 1
    f[p == 0.0] = 0
    f[p == 1.0] = TOTAL
    return f


@dataclass(frozen=True)
class CodedGraph:
    """Entropy-coded colors and edge set, plus the header that decodes them."""

    spec: ModelSpec
    n: int
    payload: bytes
    payload_bits: int

    def to_bytes(self) -> bytes:
        doc = self.spec.to_dict()
        doc["n"] = self.n
        doc["payload_bits"] = self.payload_bits
        header = serialize.dumps(doc).encode("utf-8")
        return (
            MAGIC
            + bytes([VERSION])
            + len(header).to_bytes(4, "little")
            + header
            + self.payload
        )

    @classmethod
    def from_bytes(cls, blob: bytes) -> "CodedGraph":
        if len(blob) < 9 or blob[:4] != MAGIC:
            raise DecodeError("bad magic bytes")
        if blob[4] != VERSION:
            raise DecodeError(f"unsupported format version {blob[4]}")
        hlen = int.from_bytes(blob[5:9], "little")
        if len(blob) < 9 + hlen:
            raise DecodeError("truncated header")
        try:
            doc = serialize.loads(blob[9 : 9 + hlen].decode("utf-8"))
            spec = ModelSpec.from_dict(doc)
            n = int(doc["n"])
            payload_bits = int(doc["payload_bits"])
        except (ValueError, KeyError, UnicodeDecodeError) as exc:
            raise DecodeError(f"malformed header: {exc}") from None
        payload = blob[9 + hlen :]
        if n < 0 or payload_bits < 0 or len(payload) != (payload_bits + 7) // 8:
            raise DecodeError(
                f"payload length {len(payload)} bytes inconsistent with "
                f"{payload_bits} coded bits"
            )
        return cls(spec=spec, n=n, payload=payload, payload_bits=payload_bits)


def encode(instance: Instance) -> CodedGraph:
    """Entropy-code an instance's colors and edge set (positions excluded)."""
    spec, n = instance.spec, instance.n
    if n == 0:
        return CodedGraph(spec=spec, n=0, payload=b"", payload_bits=0)
    ll = log_likelihood(instance)
    if ll == -math.inf:
        raise UncodableError(
            "instance contains an edge whose link probability is zero"
        )
    color_cum = _color_freqs(spec.nu)
    f1 = _edge_freqs(spec, n) if n >= 2 else np.zeros((spec.k, spec.k), dtype=np.int64)
    alloc = int(-ll / math.log(2.0)) + 4096
    bits = np.zeros(alloc, dtype=np.uint8)
    nbits, status = _encode_core(
        n,
        instance.colors.astype(np.int64),
        np.ascontiguousarray(instance.edges[:, 0]),
        np.ascontiguousarray(instance.edges[:, 1]),
        color_cum,
        f1,
        TOTAL,
        bits,
    )
    if status == 1:
        raise UncodableError("zero-probability link indicator")
    if status == 2:
        raise ValueError("edge list is not in canonical sorted order")
    payload = np.packbits(bits[:nbits]).tobytes()
    return CodedGraph(spec=spec, n=n, payload=payload, payload_bits=int(nbits))


def decode(coded: CodedGraph) -> tuple[np.ndarray, np.ndarray]:
    """Recover (colors, edges) from a CodedGraph; exact inverse of encode."""
    spec, n = coded.spec, coded.n
    if len(coded.payload) != (coded.payload_bits + 7) // 8:
        raise DecodeError("payload length inconsistent with coded bit count")
    if n == 0:
        return np.zeros(0, dtype=np.int64), np.zeros((0, 2), dtype=np.int64)
    bits = np.unpackbits(np.frombuffer(coded.payload, dtype=np.uint8))
    color_cum = _color_freqs(spec.nu)
    if n >= 2:
        f1 = _edge_freqs(spec, n)
        p = connection_prob(spec, n)
        expect = (n * (n - 1) / 2.0) * float(
            spec.nu @ (p * 1.0) @ spec.nu
        )
        cap = int(expect + 12.0 * math.sqrt(expect + 1.0)) + 1024
    else:
        f1 = np.zeros((spec.k, spec.k), dtype=np.int64)
        cap = 1
    colors = np.zeros(n, dtype=np.int64)
    while True:
        ei = np.zeros(cap, dtype=np.int64)
        ej = np.zeros(cap, dtype=np.int64)
        count = _decode_core(
            n, color_cum, f1, TOTAL, bits, int(coded.payload_bits), colors, ei, ej
        )
        if count >= 0:
            break
        cap *= 2
    edges = np.stack([ei[:count], ej[:count]], axis=1)
    return colors, edges
