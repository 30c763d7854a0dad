"""Experiment orchestration: entropy table rows and reproducible bundles."""
from __future__ import annotations

import hashlib
import json
import math
import sys
import warnings
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .entropy import entropy, entropy_report, r2_split, r_tuple
from .errors import AnosovError, InvalidInputError
from .generator import fill, seed_state
from .matrix_core import build_mixmax, cat_map, determinant_exact, rcarry_companion, verify_c_condition
from .spectrum import MAX_DENSE_DIM, eigenvalues_mixmax_analytic, eigenvalues_numeric
from .stats import chi_square_uniformity, serial_correlation, star_discrepancy

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass
class RunConfig:
    command: str = "bundle"
    family: str = "mixmax"
    N: int = 256
    s: int = 0
    tol: float = 1e-9
    seed: str = "01"
    samples: int = 100_000
    bins: int = 100
    lags: list = field(default_factory=lambda: [1])
    orders: list = field(default_factory=lambda: [2])
    qs: list = field(default_factory=lambda: [0.5, 2.0])
    split_weights: str = "modulus"
    out: str = "bundle"

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path, **overrides):
        """Read a TOML config, or the ``config`` block of an existing bundle."""
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        try:
            if path.suffix == ".json":
                data = json.loads(text)
                data = data.get("config", data)
            else:
                data = tomllib.loads(text)
        except (ValueError, tomllib.TOMLDecodeError) as exc:
            raise InvalidInputError(f"{path}: {exc}") from None
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(data)


def family_matrix(family: str, N: int = 2, s: int = 0):
    if family == "mixmax":
        return build_mixmax(N, s)
    if family == "cat":
        return cat_map()
    if family == "rcarry":
        return rcarry_companion()
    raise InvalidInputError(f"unknown family {family!r}")


def table_row(N: int, s: int = 0, split_weights: str = "modulus") -> dict:
    """Entropy columns for T(N, s): numeric spectrum up to the dense limit,
    analytic spectrum (s = 0 formula) above it."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if N <= MAX_DENSE_DIM:
            spec = eigenvalues_numeric(build_mixmax(N, s))
        else:
            spec = eigenvalues_mixmax_analytic(N)
        h = entropy(spec)
        r2t = r_tuple(spec, 2)
        r2s = r2_split(spec, split_weights)
    return dict(N=N, s=s, h=h, r2_split=r2s.value, r2_tuple=r2t.value,
                spectrum=spec.source, convention=spec.meta.get("convention", ""),
                r2_split_weights=split_weights,
                s_applied=(spec.source == "numeric" or s == 0))


def cmd_table(rows, split_weights: str = "modulus") -> list[dict]:
    return [table_row(N, s, split_weights) for N, s in rows]


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def content_hash(bundle: dict) -> str:
    body = {k: v for k, v in bundle.items() if k != "content_hash"}
    return hashlib.sha256(_canonical(body).encode("utf-8")).hexdigest()


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except AnosovError as exc:
        raise type(exc)(f"[{name}] {exc}") from exc


def cmd_report_bundle(cfg: RunConfig, out_dir=None) -> dict:
    """matrix -> spectrum -> entropy -> stats; writes bundle.json and CSVs."""
    m = _stage("matrix", family_matrix, cfg.family, cfg.N, cfg.s)
    det = _stage("matrix", determinant_exact, m)
    spec = _stage("spectrum", eigenvalues_numeric, m)
    cc = verify_c_condition(spec, cfg.tol)
    rep = _stage("entropy", entropy_report, spec, orders=cfg.orders, qs=cfg.qs,
                 split_weight=cfg.split_weights)
    x, _ = _stage("stats", fill, seed_state(m.n, bytes.fromhex(cfg.seed)), cfg.samples, m)
    tests = [_stage("stats", chi_square_uniformity, x, cfg.bins)]
    tests += [_stage("stats", serial_correlation, x, lag) for lag in cfg.lags]
    d1 = star_discrepancy(x[: min(len(x), 10 ** 5)])
    k = min(len(x) // 2, 10 ** 4)
    d2 = star_discrepancy(x[: 2 * k].reshape(k, 2))
    bundle = {
        "schema": "anosovlab-bundle-v1",
        "version": __version__,
        "config": cfg.to_dict(),
        "matrix": {"family": m.family, "n": m.n, "params": {k: v for k, v in m.params.items()},
                   "determinant": det},
        "c_condition": cc.to_dict(),
        "entropy": rep.to_dict(),
        "stats": {"tests": [t.to_dict() for t in tests],
                  "discrepancy": {"D1": [d1.lower, d1.upper], "D2": [d2.lower, d2.upper]}},
    }
    bundle = json.loads(_canonical(bundle))
    bundle["content_hash"] = content_hash(bundle)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "bundle.json").write_text(json.dumps(bundle, indent=2, sort_keys=True) + "\n",
                                         encoding="utf-8")
        spec.to_csv(out / "spectrum.csv")
        with open(out / "tests.csv", "w", encoding="utf-8") as fh:
            fh.write("name,statistic,p_value,n,passed\n")
            for t in tests:
                fh.write(f"{t.name},{t.statistic!r},{t.p_value!r},{t.n},{t.passed}\n")
    return bundle


def bundle_schema() -> dict:
    return json.loads(resources.files("anosovlab").joinpath("schemas/bundle.schema.json")
                      .read_text(encoding="utf-8"))


def validate_bundle(bundle: dict) -> None:
    import jsonschema

    jsonschema.validate(bundle, bundle_schema())
    if content_hash(bundle) != bundle["content_hash"]:
        raise InvalidInputError("bundle content hash does not match its body")
