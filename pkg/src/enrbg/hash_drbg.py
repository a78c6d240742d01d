"""SP 800-90A Hash-DRBG over SHA-256, with deterministic parallel bulk output.

The working state is two 440-bit integers (seed value V and constant C)
plus a per-seed request counter. Bulk generation splits each request's
work: the V-update chain runs serially to pin every request's starting
state, and the hash-generation loops fan out across workers, so output is
bit-identical to sequential generation for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from hashlib import sha256

from .errors import (
    FormatError,
    InsufficientEntropyError,
    RequestTooLargeError,
    ReseedRequiredError,
    ValidationError,
)

OUTLEN_BITS = 256
SEEDLEN_BITS = 440
SEEDLEN_BYTES = SEEDLEN_BITS // 8
SECURITY_STRENGTH = 256
MIN_ENTROPY_BITS = SECURITY_STRENGTH
MAX_BITS_PER_REQUEST = 1 << 19
# per-seed request budget; SP 800-90A itself allows up to 2**48
DEFAULT_RESEED_INTERVAL = 1 << 24
MAX_HASH_DF_BITS = 255 * OUTLEN_BITS

_SEED_MASK = (1 << SEEDLEN_BITS) - 1


def decode_entropy_input(value) -> tuple[bytes, int]:
    """Decode an entropy input to (bytes, assessed bit length).

    Hex strings are two digits per byte in stream order; an odd-length
    string carries a final lone nibble, left-aligned into the last byte
    with four zero pad bits (a 119-digit input becomes 60 bytes carrying
    476 bits).
    """
    if value is None:
        return b"", 0
    if isinstance(value, (bytes, bytearray, memoryview)):
        raw = bytes(value)
        return raw, 8 * len(raw)
    if isinstance(value, str):
        text = value.strip()
        try:
            raw = bytes.fromhex(text if len(text) % 2 == 0 else text + "0")
        except ValueError:
            raise ValidationError(f"entropy input is not valid hex: {text[:32]!r}...") from None
        return raw, 4 * len(text)
    raise ValidationError(f"entropy input must be bytes or hex str, not {type(value).__name__}")


def hash_df(data: bytes, n_bits: int) -> bytes:
    """Hash derivation function: stretch input into an n_bits-long string.

    Concatenates SHA-256(counter || n_bits_be32 || data) for counter
    1, 2, ... and keeps the leftmost n_bits; trailing bits of the final
    byte are zeroed when n_bits is not a multiple of 8.
    """
    if not 1 <= n_bits <= MAX_HASH_DF_BITS:
        raise ValidationError(f"n_bits must be in [1, {MAX_HASH_DF_BITS}] (got {n_bits})")
    n_bytes = (n_bits + 7) // 8
    prefix = n_bits.to_bytes(4, "big")
    out = bytearray()
    counter = 1
    while len(out) < n_bytes:
        out += sha256(bytes([counter]) + prefix + data).digest()
        counter += 1
    out = out[:n_bytes]
    if n_bits % 8:
        out[-1] &= 0xFF << (8 - n_bits % 8) & 0xFF
    return bytes(out)


def _hashgen(v: int, n_bits: int) -> bytes:
    """Core generation loop from a fixed starting V; pure and picklable."""
    out = bytearray()
    data = v
    for _ in range((n_bits + OUTLEN_BITS - 1) // OUTLEN_BITS):
        out += sha256(data.to_bytes(SEEDLEN_BYTES, "big")).digest()
        data = (data + 1) & _SEED_MASK
    n_bytes = (n_bits + 7) // 8
    out = out[:n_bytes]
    if n_bits % 8:
        out[-1] &= 0xFF << (8 - n_bits % 8) & 0xFF
    return bytes(out)


def _hashgen_span(vs, n_bits: int) -> bytes:
    return b"".join(_hashgen(v, n_bits) for v in vs)


class HashDrbg:
    """One instantiation of the SHA-256 Hash-DRBG.

    The state is exclusively owned: concurrent callers need distinct
    instantiations. Nothing but (V, C, reseed_counter, reseed_interval) is
    retained, so no past output is recoverable from the object without
    inverting the hash.
    """

    __slots__ = ("V", "C", "reseed_counter", "reseed_interval")

    def __init__(
        self,
        entropy_input,
        nonce=b"",
        personalization=b"",
        *,
        reseed_interval: int = DEFAULT_RESEED_INTERVAL,
    ):
        entropy, entropy_bits = decode_entropy_input(entropy_input)
        if entropy_bits < MIN_ENTROPY_BITS:
            raise InsufficientEntropyError(
                f"entropy input carries {entropy_bits} bits, below the "
                f"{MIN_ENTROPY_BITS}-bit minimum"
            )
        if reseed_interval < 1:
            raise ValidationError(f"reseed_interval must be positive (got {reseed_interval})")
        nonce_b, _ = decode_entropy_input(nonce)
        pers_b, _ = decode_entropy_input(personalization)
        seed = hash_df(entropy + nonce_b + pers_b, SEEDLEN_BITS)
        self.V = int.from_bytes(seed, "big")
        self.C = int.from_bytes(hash_df(b"\x00" + seed, SEEDLEN_BITS), "big")
        self.reseed_counter = 1
        self.reseed_interval = reseed_interval

    def _v_bytes(self) -> bytes:
        return self.V.to_bytes(SEEDLEN_BYTES, "big")

    def reseed(self, entropy_input, additional_input=b"") -> None:
        """Re-key the state from fresh entropy; resets the request budget."""
        entropy, entropy_bits = decode_entropy_input(entropy_input)
        if entropy_bits < MIN_ENTROPY_BITS:
            raise InsufficientEntropyError(
                f"reseed entropy carries {entropy_bits} bits, below the "
                f"{MIN_ENTROPY_BITS}-bit minimum"
            )
        addl, _ = decode_entropy_input(additional_input)
        seed = hash_df(b"\x01" + self._v_bytes() + entropy + addl, SEEDLEN_BITS)
        self.V = int.from_bytes(seed, "big")
        self.C = int.from_bytes(hash_df(b"\x00" + seed, SEEDLEN_BITS), "big")
        self.reseed_counter = 1

    def generate(self, n_bits: int, additional_input=b"") -> bytes:
        """Produce n_bits of output and advance the state.

        Returns ceil(n_bits / 8) bytes; when n_bits is not a multiple of 8
        the unused low bits of the last byte are zero.
        """
        if n_bits < 1:
            raise ValidationError(f"n_bits must be positive (got {n_bits})")
        if n_bits > MAX_BITS_PER_REQUEST:
            raise RequestTooLargeError(
                f"request of {n_bits} bits exceeds the {MAX_BITS_PER_REQUEST}-bit limit"
            )
        if self.reseed_counter > self.reseed_interval:
            raise ReseedRequiredError(
                f"reseed required: counter {self.reseed_counter} exceeds "
                f"interval {self.reseed_interval}"
            )
        addl, addl_bits = decode_entropy_input(additional_input)
        if addl_bits:
            w = sha256(b"\x02" + self._v_bytes() + addl).digest()
            self.V = (self.V + int.from_bytes(w, "big")) & _SEED_MASK
        out = _hashgen(self.V, n_bits)
        self._update_state()
        return out

    def _update_state(self) -> None:
        h = sha256(b"\x03" + self._v_bytes()).digest()
        self.V = (self.V + int.from_bytes(h, "big") + self.C + self.reseed_counter) & _SEED_MASK
        self.reseed_counter += 1

    def generate_bulk(self, total_bits: int, request_bits: int, workers: int = 1) -> bytes:
        """Serve total_bits as consecutive request_bits-sized requests.

        Output is bit-identical to calling generate() sequentially and
        concatenating in request-index order, for any worker count: the
        V-update chain is walked serially up front and only the
        hash-generation loops are distributed.
        """
        if workers < 1:
            raise ValidationError(f"workers must be at least 1 (got {workers})")
        if request_bits < 1 or request_bits % 8:
            raise ValidationError(
                f"request_bits must be a positive multiple of 8 (got {request_bits})"
            )
        if request_bits > MAX_BITS_PER_REQUEST:
            raise RequestTooLargeError(
                f"request of {request_bits} bits exceeds the {MAX_BITS_PER_REQUEST}-bit limit"
            )
        if total_bits < 1 or total_bits % request_bits:
            raise ValidationError(
                f"total_bits ({total_bits}) must be a positive multiple of "
                f"request_bits ({request_bits})"
            )
        n_requests = total_bits // request_bits
        if self.reseed_counter + n_requests - 1 > self.reseed_interval:
            raise ReseedRequiredError(
                f"{n_requests} requests would exceed the reseed interval "
                f"{self.reseed_interval} (counter at {self.reseed_counter})"
            )

        starts = []
        v, counter = self.V, self.reseed_counter
        for _ in range(n_requests):
            starts.append(v)
            h = sha256(b"\x03" + v.to_bytes(SEEDLEN_BYTES, "big")).digest()
            v = (v + int.from_bytes(h, "big") + self.C + counter) & _SEED_MASK
            counter += 1

        if workers == 1 or n_requests == 1:
            chunks = [_hashgen(s, request_bits) for s in starts]
        else:
            span = max(1, -(-n_requests // (workers * 4)))
            spans = [starts[i : i + span] for i in range(0, n_requests, span)]
            with ProcessPoolExecutor(max_workers=workers) as pool:
                chunks = list(pool.map(_hashgen_span, spans, [request_bits] * len(spans)))

        self.V, self.reseed_counter = v, counter
        return b"".join(chunks)


# --- DRBGVS known-answer vector ingestion ---

@dataclass(frozen=True)
class DrbgKat:
    """One known-answer case from a DRBGVS response file."""

    hash_name: str
    count: int
    entropy_input: bytes
    nonce: bytes
    personalization: bytes
    entropy_reseed: bytes | None
    additional_reseed: bytes | None
    additional_inputs: tuple
    returned_bits: bytes

    @property
    def returned_bits_len(self) -> int:
        return 8 * len(self.returned_bits)


def load_drbg_kats(path, hash_name: str = "SHA-256") -> list:
    """Parse a DRBGVS response file, keeping cases for one hash mechanism.

    The format is the published CAVS text layout: bracketed section
    headers, then COUNT blocks of KEY = hexvalue lines, with
    AdditionalInput appearing once per generate call and ReturnedBits
    closing each case.
    """
    kats = []
    mechanism = None
    current = None

    def finish(case):
        if case is None:
            return
        if "ReturnedBits" not in case:
            raise FormatError(f"{path}: COUNT {case.get('COUNT')} has no ReturnedBits")
        kats.append(
            DrbgKat(
                hash_name=mechanism,
                count=int(case["COUNT"]),
                entropy_input=bytes.fromhex(case.get("EntropyInput", "")),
                nonce=bytes.fromhex(case.get("Nonce", "")),
                personalization=bytes.fromhex(case.get("PersonalizationString", "")),
                entropy_reseed=(
                    bytes.fromhex(case["EntropyInputReseed"])
                    if "EntropyInputReseed" in case
                    else None
                ),
                additional_reseed=(
                    bytes.fromhex(case["AdditionalInputReseed"])
                    if "AdditionalInputReseed" in case
                    else None
                ),
                additional_inputs=tuple(
                    bytes.fromhex(v) for v in case.get("AdditionalInput", [])
                ),
                returned_bits=bytes.fromhex(case["ReturnedBits"]),
            )
        )

    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("["):
                body = line.strip("[]").strip()
                if "=" not in body:
                    finish(current)
                    current = None
                    mechanism = body
                continue
            if "=" not in line:
                raise FormatError(f"{path}: line {lineno}: expected 'KEY = value'")
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if mechanism != hash_name:
                continue
            if key == "COUNT":
                finish(current)
                current = {"COUNT": val, "AdditionalInput": []}
                continue
            if current is None:
                raise FormatError(f"{path}: line {lineno}: {key} outside a COUNT block")
            if key == "AdditionalInput":
                current["AdditionalInput"].append(val)
            else:
                current[key] = val
        finish(current)
    return kats


def run_kat(kat: DrbgKat) -> bytes:
    """Drive a DRBG through one vector; returns the final generate output.

    Response files record the ReturnedBits of the last generate call only;
    no-reseed cases run instantiate + two generates, reseed cases insert a
    reseed after instantiation.
    """
    drbg = HashDrbg(kat.entropy_input, kat.nonce, kat.personalization)
    if kat.entropy_reseed is not None:
        drbg.reseed(kat.entropy_reseed, kat.additional_reseed or b"")
    out = b""
    additional = kat.additional_inputs or (b"", b"")
    for addl in additional:
        out = drbg.generate(kat.returned_bits_len, addl)
    return out
