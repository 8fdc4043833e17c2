"""Planted vectors, noise families and spiked matrix / tensor instances."""

from __future__ import annotations

import io
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import rng as _rng
from .errors import CapExceededError, InvalidDimensionError, InvalidParameterError

MAGIC = b"HSPIKE01"
TENSOR_CAP = 256

SPIKE_KINDS = ("rademacher", "gaussian-normalized", "fixed-user")
NOISE_TAGS = ("gaussian", "rademacher", "sparse_two_point", "alternating_sparse",
              "hybrid_gaussian_sparse")
_SPARSE_TAGS = ("sparse_two_point", "alternating_sparse", "hybrid_gaussian_sparse")


# ---------------------------------------------------------------------------
# Planted vector


@dataclass(frozen=True)
class PlantedVector:
    values: np.ndarray
    kind: str
    inf_norm: float
    fourth_moment: float

    @classmethod
    def from_values(cls, values, kind: str = "fixed-user") -> "PlantedVector":
        v = np.array(values, dtype=np.float64)
        v.setflags(write=False)
        return cls(v, kind, float(np.max(np.abs(v))), float(np.mean(v**4)))

    @property
    def n(self) -> int:
        return self.values.shape[0]


def _rescale(v: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(v)
    if norm == 0:
        raise InvalidParameterError("planted vector must be nonzero", "values")
    return v * (math.sqrt(v.shape[0]) / norm)


def generate_planted(n: int, kind: str, seed: int, values=None) -> PlantedVector:
    """Sample a planted vector with squared norm ``n``.

    ``fixed-user`` takes ``values`` and only rescales them.
    """
    if n < 2:
        raise InvalidDimensionError(f"n must be >= 2, got {n}", "n")
    g = _rng.generator(seed, _rng.STREAM_SPIKE)
    if kind == "rademacher":
        v = g.choice(np.array([-1.0, 1.0]), size=n)
    elif kind == "gaussian-normalized":
        v = _rescale(g.standard_normal(n))
    elif kind == "fixed-user":
        if values is None or len(values) != n:
            raise InvalidParameterError("fixed-user spike needs n explicit values", "values")
        v = _rescale(np.asarray(values, dtype=np.float64))
    else:
        raise InvalidParameterError(f"unknown spike kind {kind!r}", "kind")
    return PlantedVector.from_values(v, kind)


# ---------------------------------------------------------------------------
# Noise


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean, unit-variance entry distribution.

    ``d`` is the sparsity parameter of the two-point families: an entry takes
    the large value with probability ``d/n``. ``zero`` is a test hook that
    draws exact zeros; it is not exposed by the CLI.
    """

    tag: str
    d: float | None = None

    def __post_init__(self):
        if self.tag not in NOISE_TAGS + ("zero",):
            raise InvalidParameterError(f"unknown noise tag {self.tag!r}", "noise")
        if self.tag in _SPARSE_TAGS and self.d is None:
            raise InvalidParameterError(f"{self.tag} needs parameter d", "d")

    @classmethod
    def gaussian(cls):
        return cls("gaussian")

    @classmethod
    def rademacher(cls):
        return cls("rademacher")

    @classmethod
    def sparse_two_point(cls, d: float):
        return cls("sparse_two_point", float(d))

    @classmethod
    def alternating_sparse(cls, d: float):
        return cls("alternating_sparse", float(d))

    @classmethod
    def hybrid_gaussian_sparse(cls, d: float):
        return cls("hybrid_gaussian_sparse", float(d))

    @classmethod
    def zero(cls):
        return cls("zero")

    def check(self, n: int) -> None:
        if self.tag in _SPARSE_TAGS and not 0 < self.d < n:
            raise InvalidParameterError(f"d must lie in (0, n={n}), got {self.d}", "d")

    def to_dict(self) -> dict:
        return {"tag": self.tag, "d": self.d}

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseModel":
        return cls(data["tag"], data.get("d"))


def two_point_support(n: int, d: float) -> tuple[float, float]:
    """(rare value, common value) of the sparse two-point law."""
    return -math.sqrt((n - d) / d), math.sqrt(d / (n - d))


def noise_moments(noise: NoiseModel, n: int) -> tuple[float, float]:
    """Closed-form (mean, variance) of one entry."""
    if noise.tag == "zero":
        return 0.0, 0.0
    if noise.tag in ("gaussian", "rademacher"):
        return 0.0, 1.0
    noise.check(n)
    p = noise.d / n
    lo, hi = two_point_support(n, noise.d)
    mean = p * lo + (1 - p) * hi
    var = p * lo**2 + (1 - p) * hi**2 - mean**2
    return mean, var


def sample_noise(noise: NoiseModel, n: int, parity: np.ndarray,
                 g: np.random.Generator) -> np.ndarray:
    """Draw one entry per element of ``parity`` (the index sum mod 2)."""
    noise.check(n)
    parity = np.asarray(parity) % 2
    shape = parity.shape
    if noise.tag == "zero":
        return np.zeros(shape)
    if noise.tag == "gaussian":
        return g.standard_normal(shape)
    if noise.tag == "rademacher":
        return g.choice(np.array([-1.0, 1.0]), size=shape)
    lo, hi = two_point_support(n, noise.d)
    sparse = np.where(g.random(shape) < noise.d / n, lo, hi)
    if noise.tag == "sparse_two_point":
        return sparse
    if noise.tag == "alternating_sparse":
        return np.where(parity == 1, -sparse, sparse)
    gauss = g.standard_normal(shape)
    return np.where(parity == 0, gauss, sparse)


def sample_noise_entry(noise: NoiseModel, n: int, i: int, j: int,
                       g: np.random.Generator) -> float:
    if not (0 <= i < n and 0 <= j < n):
        raise InvalidParameterError(f"index ({i}, {j}) outside [0, {n})", "index")
    return float(sample_noise(noise, n, np.array([i + j]), g)[0])


# ---------------------------------------------------------------------------
# Instances


@dataclass(frozen=True)
class SpikedMatrixInstance:
    n: int
    snr_prime: float
    spike: PlantedVector
    Y: np.ndarray
    seed: int
    noise: NoiseModel
    spike_kind: str = field(default="gaussian-normalized")

    @property
    def lam(self) -> float:
        return self.snr_prime / math.sqrt(self.n)

    @property
    def signal(self) -> np.ndarray:
        x = self.spike.values
        out = self.lam * np.outer(x, x)
        np.fill_diagonal(out, 0.0)
        return out


@dataclass(frozen=True)
class SpikedTensorInstance:
    n: int
    snr_scaled: float
    spike: PlantedVector
    Y: np.ndarray
    seed: int
    noise: NoiseModel
    spike_kind: str = field(default="gaussian-normalized")

    @property
    def lam(self) -> float:
        return self.snr_scaled * self.n ** -0.75

    @property
    def signal(self) -> np.ndarray:
        x = self.spike.values
        return self.lam * np.einsum("i,j,k->ijk", x, x, x)


def _spike(n, spike_kind, seed, spike_values):
    if isinstance(spike_kind, PlantedVector):
        if spike_kind.n != n:
            raise InvalidDimensionError("spike length does not match n", "spike")
        return spike_kind
    return generate_planted(n, spike_kind, seed, spike_values)


def generate_spiked_matrix(n: int, snr_prime: float, spike_kind, noise: NoiseModel,
                           seed: int, spike_values=None) -> SpikedMatrixInstance:
    """Sample ``Y = (snr_prime/sqrt(n)) x x^T + W`` with zero diagonal.

    ``spike_kind`` may be a kind tag or an existing :class:`PlantedVector`.
    """
    if n < 3:
        raise InvalidDimensionError(f"n must be >= 3, got {n}", "n")
    if snr_prime < 0:
        raise InvalidParameterError("snr_prime must be >= 0", "snr_prime")
    noise.check(n)
    spike = _spike(n, spike_kind, seed, spike_values)
    iu, ju = np.triu_indices(n, k=1)
    g = _rng.generator(seed, _rng.STREAM_NOISE)
    w = sample_noise(noise, n, iu + ju, g)
    x = spike.values
    lam = snr_prime / math.sqrt(n)
    Y = np.zeros((n, n))
    Y[iu, ju] = lam * x[iu] * x[ju] + w
    Y[ju, iu] = Y[iu, ju]
    Y.setflags(write=False)
    kind = spike.kind
    return SpikedMatrixInstance(n, float(snr_prime), spike, Y, int(seed), noise, kind)


def generate_spiked_tensor(n: int, snr_scaled: float, spike_kind, noise: NoiseModel,
                           seed: int, spike_values=None, cap: int = TENSOR_CAP
                           ) -> SpikedTensorInstance:
    """Sample ``Y = snr_scaled * n^{-3/4} x(x)x(x)x + W`` with all n^3 entries independent."""
    if n > cap:
        raise CapExceededError(f"tensor n={n} exceeds cap {cap}; raise cap explicitly")
    if n < 2:
        raise InvalidDimensionError(f"n must be >= 2, got {n}", "n")
    noise.check(n)
    spike = _spike(n, spike_kind, seed, spike_values)
    idx = np.indices((n, n, n)).sum(axis=0)
    g = _rng.generator(seed, _rng.STREAM_NOISE)
    w = sample_noise(noise, n, idx, g)
    x = spike.values
    lam = snr_scaled * n ** -0.75
    Y = lam * np.einsum("i,j,k->ijk", x, x, x) + w
    Y.setflags(write=False)
    return SpikedTensorInstance(n, float(snr_scaled), spike, Y, int(seed), noise, spike.kind)


# ---------------------------------------------------------------------------
# Container format


def _header(inst) -> dict:
    tensor = isinstance(inst, SpikedTensorInstance)
    return {
        "kind": "tensor" if tensor else "matrix",
        "n": inst.n,
        "snr": inst.snr_scaled if tensor else inst.snr_prime,
        "noise": inst.noise.to_dict(),
        "seed": inst.seed,
        "spike_kind": inst.spike_kind,
    }


def dumps_instance(inst, header_extra: dict | None = None) -> bytes:
    header = _header(inst)
    if header_extra:
        header.update(header_extra)
    hbytes = json.dumps(header, sort_keys=True).encode("utf-8")
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<Q", len(hbytes)))
    buf.write(hbytes)
    buf.write(np.ascontiguousarray(inst.spike.values, dtype="<f8").tobytes())
    buf.write(np.ascontiguousarray(inst.Y, dtype="<f8").tobytes())
    return buf.getvalue()


def loads_instance(data: bytes):
    if data[:8] != MAGIC:
        raise InvalidParameterError("not a heavyspike container (bad magic)", "file")
    (hlen,) = struct.unpack("<Q", data[8:16])
    header = json.loads(data[16:16 + hlen].decode("utf-8"))
    n = header["n"]
    off = 16 + hlen
    x = np.frombuffer(data, dtype="<f8", count=n, offset=off).astype(np.float64)
    off += 8 * n
    shape = (n, n, n) if header["kind"] == "tensor" else (n, n)
    Y = np.frombuffer(data, dtype="<f8", count=math.prod(shape), offset=off)
    Y = Y.astype(np.float64).reshape(shape)
    Y.setflags(write=False)
    spike = PlantedVector.from_values(x, header["spike_kind"])
    noise = NoiseModel.from_dict(header["noise"])
    cls = SpikedTensorInstance if header["kind"] == "tensor" else SpikedMatrixInstance
    return cls(n, header["snr"], spike, Y, header["seed"], noise, header["spike_kind"])


def save_instance(inst, path) -> bytes:
    data = dumps_instance(inst)
    Path(path).write_bytes(data)
    return data


def load_instance(path):
    return loads_instance(Path(path).read_bytes())


def read_header(path) -> dict:
    with open(path, "rb") as fh:
        head = fh.read(16)
        if head[:8] != MAGIC:
            raise InvalidParameterError("not a heavyspike container (bad magic)", "file")
        (hlen,) = struct.unpack("<Q", head[8:16])
        return json.loads(fh.read(hlen).decode("utf-8"))
