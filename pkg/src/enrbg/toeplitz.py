"""Binary Toeplitz conditioning of raw bit blocks.

The matrix is held implicitly as its first column plus a first row the
column seeds through a Fibonacci LFSR, and each row is packed into one
Python integer so a block multiply is a row-wise AND + popcount over GF(2).
Compressing 600 raw bits to 476 output bits matches a 0.8 min-entropy
budget with ~20% compression.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bitio import as_bit_array, pack_bits, unpack_bits
from .errors import FormatError, ValidationError

DEFAULT_N_ROWS = 476
DEFAULT_N_COLS = 600

# x^476 + x^9 + 1: the lowest-weight degree-476 trinomial that is
# irreducible over GF(2) (re-verified by the test suite via is_irreducible).
# Primitivity is not certified here: that would need the factorization of
# 2^476 - 1. An irreducible feedback polynomial already gives the row
# generator a period that is a large divisor of 2^476 - 1.
DEFAULT_POLYNOMIAL_TAPS = (476, 9)


# --- GF(2)[x] helpers (polynomials as int bitmasks, bit i = coeff of x^i) ---

def _build_square_table():
    table = []
    for b in range(256):
        s = 0
        for i in range(8):
            if b >> i & 1:
                s |= 1 << (2 * i)
        table.append(s)
    return table


_SQ_TABLE = _build_square_table()


def poly_from_taps(taps) -> int:
    """Bitmask of x^d + sum(x^t for middle taps) + 1 from an exponent set."""
    taps = sorted(set(int(t) for t in taps), reverse=True)
    if not taps:
        raise ValidationError("polynomial tap set is empty")
    if taps[-1] < 1:
        raise ValidationError("tap exponents must be positive; the constant term is implicit")
    poly = 1  # constant term, required so the recurrence is invertible
    for t in taps:
        poly |= 1 << t
    return poly


def gf2_square(a: int) -> int:
    out = 0
    shift = 0
    while a:
        out |= _SQ_TABLE[a & 0xFF] << shift
        a >>= 8
        shift += 16
    return out


def gf2_mod(a: int, f: int) -> int:
    df = f.bit_length() - 1
    da = a.bit_length() - 1
    while da >= df:
        a ^= f << (da - df)
        da = a.bit_length() - 1
    return a


def gf2_gcd(a: int, b: int) -> int:
    while b:
        da, db = a.bit_length(), b.bit_length()
        if da < db:
            a, b = b, a
            da, db = db, da
        a ^= b << (da - db)
        if a < b:
            a, b = b, a
    return a


def _x_pow_2k_mod(f: int, k: int) -> int:
    h = 2  # the polynomial x
    for _ in range(k):
        h = gf2_mod(gf2_square(h), f)
    return h


def is_irreducible(poly: int) -> bool:
    """Rabin irreducibility test for a GF(2) polynomial bitmask."""
    n = poly.bit_length() - 1
    if n < 1 or poly & 1 == 0:
        return False
    if _x_pow_2k_mod(poly, n) != 2:
        return False
    for p in _prime_divisors(n):
        g = _x_pow_2k_mod(poly, n // p)
        if gf2_gcd(poly, g ^ 2) != 1:
            return False
    return True


def _prime_divisors(n: int):
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def lfsr_period(taps, degree: int) -> int:
    """Brute-force LFSR state period from the 0...01 seed (small degrees only).

    Used as a primitivity check on reduced-degree analogs: a maximal-length
    register visits all 2^degree - 1 nonzero states.
    """
    if degree > 24:
        raise ValidationError("brute-force period enumeration is limited to degree <= 24")
    lags = _recurrence_lags(taps, degree)
    state = [0] * (degree - 1) + [1]
    seen = tuple(state)
    period = 0
    while True:
        nxt = 0
        for lag in lags:
            nxt ^= state[degree - lag]
        state = state[1:] + [nxt]
        period += 1
        if tuple(state) == seen:
            return period


def is_primitive_small(taps, degree: int) -> bool:
    """Primitivity by exhaustion: irreducible and maximal period 2^d - 1."""
    return (
        is_irreducible(poly_from_taps(taps))
        and lfsr_period(taps, degree) == (1 << degree) - 1
    )


def _recurrence_lags(taps, degree: int) -> list:
    """Lags of the linear recurrence s_k = XOR(s_{k-lag}) for the tap set."""
    taps = sorted(set(int(t) for t in taps))
    if not taps or taps[-1] != degree:
        raise ValidationError(
            f"polynomial degree must equal the register length {degree} "
            f"(got taps {taps})"
        )
    if taps[0] < 1:
        raise ValidationError("tap exponents must be positive")
    # x^d + sum x^j + 1 = 0  =>  s_k = s_{k-d} xor sum s_{k-(d-j)}
    lags = [degree] + [degree - j for j in taps[:-1]]
    return sorted(set(lags))


# --- Toeplitz parameters and matrix ---

def _params_problems(n_rows, n_cols, first_column, taps) -> list:
    problems = []
    if n_rows < 1:
        problems.append(f"n_rows must be positive (got {n_rows})")
    if n_cols < 1:
        problems.append(f"n_cols must be positive (got {n_cols})")
    if n_rows >= n_cols:
        problems.append(
            f"n_rows must be smaller than n_cols for compression (got {n_rows}x{n_cols})"
        )
    if first_column.size != n_rows:
        problems.append(
            f"first_column length {first_column.size} must equal n_rows {n_rows}"
        )
    if first_column.size and not first_column.any():
        problems.append("first_column must not be all-zero (absorbing LFSR state)")
    tap_list = sorted(set(int(t) for t in taps))
    if not tap_list or tap_list[0] < 1 or tap_list[-1] != n_rows:
        problems.append(
            f"polynomial taps must include the leading exponent {n_rows} and only "
            f"positive exponents (got {tap_list}); the constant term is implicit"
        )
    return problems


@dataclass(frozen=True)
class ToeplitzParams:
    """Implicit-matrix parameters: shape, first column, LFSR feedback taps."""

    n_rows: int = DEFAULT_N_ROWS
    n_cols: int = DEFAULT_N_COLS
    first_column: np.ndarray = None
    polynomial_taps: tuple = DEFAULT_POLYNOMIAL_TAPS

    def __post_init__(self):
        if self.first_column is None:
            raise ValidationError("first_column is required (file or bootstrap source)")
        col = as_bit_array(self.first_column)
        object.__setattr__(self, "first_column", col)
        object.__setattr__(
            self, "polynomial_taps", tuple(sorted(set(int(t) for t in self.polynomial_taps)))
        )
        problems = _params_problems(self.n_rows, self.n_cols, col, self.polynomial_taps)
        if problems:
            raise ValidationError("; ".join(problems))


def lfsr_generate_row(first_column, polynomial_taps, n_cols: int) -> np.ndarray:
    """Generate the first row as the leading n_cols bits of the LFSR stream.

    Fibonacci convention, output = bit shifted out: the register is loaded
    with the column, so the stream replays the column bits first and then
    produces feedback bits. first_row[0] therefore equals first_column[0]
    by construction. Deterministic in (seed, taps).
    """
    col = as_bit_array(first_column)
    if col.size and not col.any():
        raise ValidationError("all-zero LFSR seed is absorbing")
    if n_cols < 1:
        raise ValidationError(f"n_cols must be positive (got {n_cols})")
    degree = col.size
    lags = _recurrence_lags(polynomial_taps, degree)
    if n_cols <= degree:
        return col[:n_cols].copy()
    s = np.empty(n_cols, dtype=np.uint8)
    s[:degree] = col
    for k in range(degree, n_cols):
        acc = 0
        for lag in lags:
            acc ^= s[k - lag]
        s[k] = acc
    return s


class ToeplitzMatrix:
    """Constant-diagonal binary matrix with word-packed rows.

    Entry (i, j) reads first_row[j - i] on and above the main diagonal and
    first_column[i - j] below it, so M[i][j] == M[i-1][j-1] everywhere.
    """

    def __init__(self, params: ToeplitzParams, first_row=None):
        self.params = params
        if first_row is None:
            first_row = lfsr_generate_row(
                params.first_column, params.polynomial_taps, params.n_cols
            )
        row = as_bit_array(first_row)
        if row.size != params.n_cols:
            raise ValidationError(
                f"first_row length {row.size} must equal n_cols {params.n_cols}"
            )
        if row[0] != params.first_column[0]:
            raise ValidationError("first_row[0] must equal first_column[0]")
        self.first_row = row
        self._packed_rows = self._pack_rows()

    @property
    def n_rows(self) -> int:
        return self.params.n_rows

    @property
    def n_cols(self) -> int:
        return self.params.n_cols

    def _pack_rows(self):
        # bit j of a row sits at integer position (n_cols - 1 - j); each row
        # is the previous one shifted right with the next column bit on top
        n_cols = self.params.n_cols
        pad = -n_cols % 8
        row0 = int.from_bytes(pack_bits(self.first_row), "big") >> pad
        rows = [row0]
        col = self.params.first_column
        top = 1 << (n_cols - 1)
        for i in range(1, self.params.n_rows):
            prev = rows[-1]
            rows.append((top if col[i] else 0) | (prev >> 1))
        return rows

    def entry(self, i: int, j: int) -> int:
        if not (0 <= i < self.n_rows and 0 <= j < self.n_cols):
            raise ValidationError(f"entry ({i}, {j}) outside {self.n_rows}x{self.n_cols}")
        if j >= i:
            return int(self.first_row[j - i])
        return int(self.params.first_column[i - j])

    def dense(self) -> np.ndarray:
        """Materialize the full 0/1 matrix (oracle and debugging use)."""
        i = np.arange(self.n_rows)[:, None]
        j = np.arange(self.n_cols)[None, :]
        d = j - i
        row_idx = np.clip(d, 0, self.n_cols - 1)
        col_idx = np.clip(-d, 0, self.n_rows - 1)
        picked = np.where(d >= 0, self.first_row[row_idx], self.params.first_column[col_idx])
        return picked.astype(np.uint8)

    def condition(self, block) -> np.ndarray:
        """Multiply over GF(2): each output bit is parity(row AND block)."""
        bits = as_bit_array(block)
        if bits.size != self.n_cols:
            raise ValidationError(
                f"block length {bits.size} must equal n_cols {self.n_cols}"
            )
        pad = -self.n_cols % 8
        x = int.from_bytes(pack_bits(bits), "big") >> pad
        out = np.empty(self.n_rows, dtype=np.uint8)
        for i, row in enumerate(self._packed_rows):
            out[i] = (row & x).bit_count() & 1
        return out

    def condition_blocks(self, bits) -> np.ndarray:
        """Condition consecutive n_cols-bit blocks; a trailing partial block is dropped."""
        arr = as_bit_array(bits)
        n_blocks = arr.size // self.n_cols
        if n_blocks == 0:
            raise ValidationError(
                f"need at least one {self.n_cols}-bit block, got {arr.size} bits"
            )
        out = np.empty(n_blocks * self.n_rows, dtype=np.uint8)
        for b in range(n_blocks):
            start = b * self.n_cols
            out[b * self.n_rows : (b + 1) * self.n_rows] = self.condition(
                arr[start : start + self.n_cols]
            )
        return out


def condition(matrix: ToeplitzMatrix, block) -> np.ndarray:
    """Function form of ToeplitzMatrix.condition."""
    return matrix.condition(block)


def bits_to_hex(bits) -> str:
    """Encode 4-bit groups (MSB first within each nibble) as hex digits."""
    arr = as_bit_array(bits)
    if arr.size % 4:
        raise ValidationError(f"bit count {arr.size} is not divisible by 4")
    if arr.size == 0:
        return ""
    return pack_bits(arr).hex()[: arr.size // 4]


def hex_to_bits(text: str) -> np.ndarray:
    """Decode hex digits to bits, 4 per digit, MSB first within each nibble."""
    text = text.strip()
    if not text:
        return np.zeros(0, dtype=np.uint8)
    try:
        raw = bytes.fromhex(text if len(text) % 2 == 0 else text + "0")
    except ValueError:
        raise ValidationError(f"invalid hex string {text!r}") from None
    return unpack_bits(raw, 4 * len(text))


def save_params(path, params: ToeplitzParams) -> None:
    """Write the key-value parameter file (taps as a decimal exponent list)."""
    taps = ",".join(str(t) for t in sorted(params.polynomial_taps, reverse=True))
    with open(path, "w") as fh:
        fh.write(f"n_rows = {params.n_rows}\n")
        fh.write(f"n_cols = {params.n_cols}\n")
        fh.write(f"polynomial_taps = {taps}\n")
        fh.write(f"first_column = {bits_to_hex(params.first_column)}\n")


def load_params(path) -> ToeplitzParams:
    """Read a parameter file written by save_params."""
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise FormatError(f"{path}: line {lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
    missing = {"n_rows", "n_cols", "polynomial_taps", "first_column"} - values.keys()
    if missing:
        raise FormatError(f"{path}: missing keys: {', '.join(sorted(missing))}")
    try:
        n_rows = int(values["n_rows"])
        n_cols = int(values["n_cols"])
        taps = tuple(int(t) for t in values["polynomial_taps"].split(",") if t.strip())
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    column = hex_to_bits(values["first_column"])[:n_rows]
    return ToeplitzParams(
        n_rows=n_rows, n_cols=n_cols, first_column=column, polynomial_taps=taps
    )
