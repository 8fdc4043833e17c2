"""Parameter sweeps: grid expansion, seeding, resumable CSV output."""

from __future__ import annotations

import itertools
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .. import rng as _rng
from ..errors import InvalidParameterError
from ..model import (NoiseModel, SPIKE_KINDS, generate_spiked_matrix, generate_spiked_tensor)
from . import csvio
from .pipeline import MethodSpec, run_method

NOISE_ALIASES = {
    "gaussian": "gaussian",
    "rademacher": "rademacher",
    "sparse-two-point": "sparse_two_point",
    "example1": "sparse_two_point",
    "alternating-sparse": "alternating_sparse",
    "example2": "alternating_sparse",
    "hybrid": "hybrid_gaussian_sparse",
    "hybrid-gaussian-sparse": "hybrid_gaussian_sparse",
    "example3": "hybrid_gaussian_sparse",
}
NEEDS_D = ("sparse_two_point", "alternating_sparse", "hybrid_gaussian_sparse")

CONFIG_KEYS = {"kind", "n", "snr", "noise", "d", "spike", "methods", "trials", "seed", "output"}
METHOD_KEYS = {"name", "ell", "k", "colorings", "tau", "span_t", "repeats", "mode", "amplify"}


def noise_tag(name: str) -> str:
    key = name.strip().lower()
    if key in NOISE_ALIASES:
        return NOISE_ALIASES[key]
    key = key.replace("-", "_")
    if key in NOISE_ALIASES.values():
        return key
    raise InvalidParameterError(f"unknown noise {name!r}", "noise")


def make_noise(name: str, d: float | None) -> NoiseModel:
    tag = noise_tag(name)
    if tag in NEEDS_D:
        if d is None:
            raise InvalidParameterError(f"noise {name} needs parameter d", "d")
        return NoiseModel(tag, float(d))
    return NoiseModel(tag)


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


@dataclass(frozen=True)
class Cell:
    kind: str
    n: int
    snr: float
    noise: NoiseModel
    spike: str

    def identity(self) -> dict:
        return {"kind": self.kind, "n": self.n, "snr": self.snr, "noise": self.noise.to_dict(),
                "spike": self.spike}

    def instance_seed(self, master: int, trial: int) -> int:
        return _rng.mix64(master, _rng.stable_hash(self.identity()), trial)

    def generate(self, seed: int):
        if self.kind == "matrix":
            return generate_spiked_matrix(self.n, self.snr, self.spike, self.noise, seed)
        return generate_spiked_tensor(self.n, self.snr, self.spike, self.noise, seed)


@dataclass
class SweepConfig:
    kind: str
    n: list
    snr: list
    noise: list
    methods: list
    trials: int
    seed: int
    output: str | None = None
    d: list = field(default_factory=lambda: [None])
    spike: str = "gaussian-normalized"

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        unknown = set(data) - CONFIG_KEYS
        if unknown:
            raise InvalidParameterError(f"unknown sweep config keys {sorted(unknown)}", "config")
        missing = {"kind", "n", "snr", "noise", "methods", "trials", "seed"} - set(data)
        if missing:
            raise InvalidParameterError(f"missing sweep config keys {sorted(missing)}", "config")
        methods = []
        for m in _as_list(data["methods"]):
            if isinstance(m, str):
                m = {"name": m}
            bad = set(m) - METHOD_KEYS
            if bad:
                raise InvalidParameterError(f"unknown method keys {sorted(bad)}", "methods")
            methods.append(MethodSpec(**m))
        return cls(kind=data["kind"], n=[int(v) for v in _as_list(data["n"])],
                   snr=[float(v) for v in _as_list(data["snr"])],
                   noise=_as_list(data["noise"]), methods=methods, trials=int(data["trials"]),
                   seed=int(data["seed"]), output=data.get("output"),
                   d=_as_list(data.get("d", [None])), spike=data.get("spike",
                                                                       "gaussian-normalized"))

    @classmethod
    def load(cls, path) -> "SweepConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def cells(self) -> list[Cell]:
        out, seen = [], set()
        for n, snr, noise, d in itertools.product(self.n, self.snr, self.noise, self.d):
            model = make_noise(noise, d if noise_tag(noise) in NEEDS_D else None)
            cell = Cell(self.kind, n, snr, model, self.spike)
            key = json.dumps(cell.identity(), sort_keys=True)
            if key not in seen:
                seen.add(key)
                out.append(cell)
        return out

    def validate(self) -> list[Cell]:
        """Check every (cell, method) before any work starts; raises naming the offender."""
        if self.kind not in ("matrix", "tensor"):
            raise InvalidParameterError(f"kind must be matrix or tensor, got {self.kind!r}", "kind")
        if self.trials < 1:
            raise InvalidParameterError("trials must be >= 1", "trials")
        if self.spike not in SPIKE_KINDS or self.spike == "fixed-user":
            raise InvalidParameterError(f"unsupported spike kind {self.spike!r}", "spike")
        if not self.methods:
            raise InvalidParameterError("no methods given", "methods")
        cells = self.cells()
        for cell in cells:
            try:
                if cell.n < 3:
                    raise InvalidParameterError("n must be >= 3", "n")
                if cell.snr < 0:
                    raise InvalidParameterError("snr must be >= 0", "snr")
                cell.noise.check(cell.n)
                for m in self.methods:
                    m.validate(self.kind, cell.n)
            except InvalidParameterError as exc:
                raise InvalidParameterError(f"invalid cell {cell.identity()}: {exc}",
                                            exc.parameter) from exc
        return cells


def method_seed(instance_seed: int, spec: MethodSpec) -> int:
    return _rng.mix64(instance_seed, _rng.stable_hash({"name": spec.name, **spec.params()}))


def row_for(cell: Cell, spec: MethodSpec, trial: int, seed: int, **outputs) -> dict:
    p = spec.params()
    return csvio.make_row(kind=cell.kind, method=spec.name, n=cell.n, snr_prime=cell.snr,
                          noise=cell.noise.tag, d=cell.noise.d, ell=p["ell"], k=p["k"],
                          colorings=p["colorings"], tau=p["tau"], span_t=p["span_t"],
                          repeats=p["repeats"], trial=trial, seed=seed, **outputs)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("HEAVYSPIKE_THREADS", "1")))
    except ValueError:
        return 1


def run_sweep(config: SweepConfig, output=None, progress=None) -> list[dict]:
    """Run every (cell, method, trial) not already present with status ok in ``output``.

    Rows are appended as they finish, then the file is rewritten in canonical
    (cell, method, trial) order. Returns the final rows.
    """
    cells = config.validate()
    output = Path(output or config.output or "sweep.csv")
    existing = csvio.read_rows(output)
    done = {csvio.row_key(r): r for r in existing if r["status"] == "ok"}

    canonical, tasks = [], []
    for cell in cells:
        for trial in range(config.trials):
            seed = cell.instance_seed(config.seed, trial)
            todo = []
            for spec in config.methods:
                key = csvio.row_key(row_for(cell, spec, trial, seed))
                canonical.append(key)
                if key not in done:
                    todo.append(spec)
            if todo:
                tasks.append((cell, trial, seed, todo))

    appender = csvio.Appender(output)
    results: dict = {}

    def work(task):
        cell, trial, seed, todo = task
        try:
            inst = cell.generate(seed)
        except Exception as exc:  # recorded per row, the sweep continues
            inst, gen_error = None, exc
        rows = []
        for spec in todo:
            if inst is None:
                row = row_for(cell, spec, trial, seed, status=f"error: {gen_error}")
            else:
                try:
                    rep = run_method(inst, spec, method_seed(seed, spec))
                    row = row_for(cell, spec, trial, seed, sq_corr=rep.sq_corr, status="ok",
                                  runtime_ms=round(rep.runtime_ms, 3))
                except Exception as exc:
                    row = row_for(cell, spec, trial, seed, status=f"error: {exc}")
            appender.append(row)
            rows.append(row)
            if progress:
                progress(row)
        return rows

    workers = _threads()
    if workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(work, tasks))
    else:
        batches = [work(t) for t in tasks]
    for rows in batches:
        for r in rows:
            results[csvio.row_key(r)] = r

    merged = {csvio.row_key(r): r for r in existing}
    merged.update(results)
    order = {k: i for i, k in enumerate(canonical)}
    final = sorted(merged.values(),
                   key=lambda r: (order.get(csvio.row_key(r), len(order)),
                                  csvio.row_key(r)))
    csvio.write_rows(output, final)
    return final
