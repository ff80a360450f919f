"""On-disk formats: batch CSV, flat key=value configs, ground-truth JSON.

Batch data is CSV with header ``batch_id,x_0,...,x_{d-1},y``, rows grouped
contiguously by batch_id with exactly n rows per group.  Configs are flat
``key=value`` text; keys match AlgoConfig field names, generator keys use
dotted prefixes for the nested models and ``w_star.<j>`` for component
vectors.  Floats are written with repr for exact round-trips.
"""

from __future__ import annotations

import csv
import json
from dataclasses import fields

import numpy as np

from .errors import DataFormatError
from .synth import Adversary, CovariateModel, GeneratorSpec, LabeledCollection, NoiseModel
from .types import AlgoConfig, BatchCollection

__all__ = [
    "save_batches_csv",
    "load_batches_csv",
    "parse_flat",
    "parse_algo_config",
    "format_algo_config",
    "parse_generator_spec",
    "format_generator_spec",
    "has_generator_keys",
    "save_truth",
    "load_truth",
]


def _fmt(x: float) -> str:
    return repr(float(x))


def save_batches_csv(coll: BatchCollection, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["batch_id"] + [f"x_{j}" for j in range(coll.d)] + ["y"])
        for b in range(coll.m):
            for i in range(coll.n):
                writer.writerow([b] + [_fmt(v) for v in coll.x[b, i]] + [_fmt(coll.y[b, i])])


def load_batches_csv(path: str) -> BatchCollection:
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError("empty batch file") from None
        d = len(header) - 2
        if d < 1 or header[0] != "batch_id" or header[-1] != "y" or header[1:-1] != [
            f"x_{j}" for j in range(d)
        ]:
            raise DataFormatError("header must be batch_id,x_0,...,x_{d-1},y")

        groups: list[tuple[str, list[list[float]]]] = []
        seen: set[str] = set()
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 2:
                raise DataFormatError(f"line {lineno}: expected {d + 2} fields")
            bid = row[0]
            try:
                vals = [float(v) for v in row[1:]]
            except ValueError:
                raise DataFormatError(f"line {lineno}: non-numeric value") from None
            if not groups or groups[-1][0] != bid:
                if bid in seen:
                    raise DataFormatError(f"line {lineno}: batch_id {bid} not contiguous")
                seen.add(bid)
                groups.append((bid, []))
            groups[-1][1].append(vals)

        if not groups:
            raise DataFormatError("no data rows")
        n = len(groups[0][1])
        if any(len(rows) != n for _, rows in groups):
            raise DataFormatError("all batches must have the same number of rows")
        m = len(groups)
        x = np.empty((m, n, d))
        y = np.empty((m, n))
        for b, (_, rows) in enumerate(groups):
            arr = np.asarray(rows)
            x[b] = arr[:, :d]
            y[b] = arr[:, d]
        try:
            return BatchCollection(x, y)
        except ValueError as exc:
            raise DataFormatError(str(exc)) from None


def parse_flat(text: str) -> dict[str, str]:
    """Parse flat key=value text (# comments and blank lines ignored)."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataFormatError(f"line {lineno}: expected key=value")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def _parse_vector(value: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in value.split(",") if v.strip() != ""])
    except ValueError:
        raise DataFormatError(f"bad vector value {value!r}") from None


_ALGO_FLOAT_KEYS = (
    "alpha", "sigma", "C", "C_p", "p", "c2", "c3", "c4",
    "stationary_tol_scale", "power_iter_tol",
)
_ALGO_INT_KEYS = ("power_iter_max", "rng_seed")


def parse_algo_config(text: str) -> AlgoConfig:
    """Extract AlgoConfig fields from flat config text.

    Keys not belonging to AlgoConfig (e.g. generator keys sharing the
    file) are ignored; alpha and sigma are required.
    """
    raw = parse_flat(text)
    kwargs: dict = {}
    try:
        for key in _ALGO_FLOAT_KEYS:
            if key in raw:
                kwargs[key] = float(raw[key])
        for key in _ALGO_INT_KEYS:
            if key in raw:
                kwargs[key] = int(raw[key])
        if "max_filter_calls" in raw:
            val = raw["max_filter_calls"]
            kwargs["max_filter_calls"] = None if val in ("auto", "none") else int(val)
    except ValueError:
        raise DataFormatError("bad numeric value in config") from None
    if "alpha" not in kwargs or "sigma" not in kwargs:
        raise DataFormatError("config must set alpha and sigma")
    try:
        return AlgoConfig(**kwargs)
    except ValueError as exc:
        raise DataFormatError(str(exc)) from None


def format_algo_config(cfg: AlgoConfig) -> str:
    lines = []
    for f in fields(AlgoConfig):
        val = getattr(cfg, f.name)
        if f.name == "max_filter_calls":
            lines.append(f"{f.name}={'auto' if val is None else val}")
        elif isinstance(val, float):
            lines.append(f"{f.name}={_fmt(val)}")
        else:
            lines.append(f"{f.name}={val}")
    return "\n".join(lines) + "\n"


def has_generator_keys(text: str) -> bool:
    raw = parse_flat(text)
    return all(k in raw for k in ("d", "n", "m")) and any(
        k.startswith("w_star.") for k in raw
    )


def parse_generator_spec(text: str) -> GeneratorSpec:
    raw = parse_flat(text)
    try:
        d = int(raw["d"])
        n = int(raw["n"])
        m = int(raw["m"])
        alpha = float(raw["alpha"])
    except KeyError as exc:
        raise DataFormatError(f"generator spec missing key {exc}") from None
    except ValueError:
        raise DataFormatError("bad numeric value in generator spec") from None

    star_keys = sorted(
        (k for k in raw if k.startswith("w_star.")),
        key=lambda k: int(k.split(".", 1)[1]),
    )
    if not star_keys:
        raise DataFormatError("generator spec needs at least w_star.0")
    if [int(k.split(".", 1)[1]) for k in star_keys] != list(range(len(star_keys))):
        raise DataFormatError("w_star indices must be contiguous from 0")
    w_stars = tuple(_parse_vector(raw[k]) for k in star_keys)

    cov = CovariateModel(
        kind=raw.get("covariate_model.kind", "isotropic-gaussian-clamped"),
        condition_number=float(raw.get("covariate_model.condition_number", 1.0)),
        norm_bound=float(raw.get("covariate_model.norm_bound", 4.0)),
    )
    noise = NoiseModel(
        kind=raw.get("noise_model.kind", "gaussian"),
        sigma=float(raw.get("noise_model.sigma", 0.0)),
        dof=float(raw.get("noise_model.dof", 5.0)),
    )
    adversary = Adversary(
        kind=raw.get("adversary.kind", "none"),
        w_adv=_parse_vector(raw["adversary.w_adv"]) if "adversary.w_adv" in raw else None,
        scale=float(raw.get("adversary.scale", 1.0)),
        x0=_parse_vector(raw["adversary.x0"]) if "adversary.x0" in raw else None,
        y0=float(raw.get("adversary.y0", 0.0)),
        target=_parse_vector(raw["adversary.target"]) if "adversary.target" in raw else None,
    )
    try:
        return GeneratorSpec(
            d=d, n=n, m=m, alpha=alpha, w_stars=w_stars,
            covariate_model=cov, noise_model=noise, adversary=adversary,
            seed=int(raw.get("seed", 0)),
        )
    except ValueError as exc:
        raise DataFormatError(str(exc)) from None


def format_generator_spec(spec: GeneratorSpec) -> str:
    lines = [
        f"d={spec.d}",
        f"n={spec.n}",
        f"m={spec.m}",
        f"alpha={_fmt(spec.alpha)}",
        f"seed={spec.seed}",
    ]
    for j, w in enumerate(spec.w_stars):
        lines.append(f"w_star.{j}=" + ",".join(_fmt(v) for v in w))
    cov = spec.covariate_model
    lines += [
        f"covariate_model.kind={cov.kind}",
        f"covariate_model.condition_number={_fmt(cov.condition_number)}",
        f"covariate_model.norm_bound={_fmt(cov.norm_bound)}",
    ]
    noise = spec.noise_model
    lines += [
        f"noise_model.kind={noise.kind}",
        f"noise_model.sigma={_fmt(noise.sigma)}",
        f"noise_model.dof={_fmt(noise.dof)}",
    ]
    adv = spec.adversary
    lines.append(f"adversary.kind={adv.kind}")
    if adv.w_adv is not None:
        lines.append("adversary.w_adv=" + ",".join(_fmt(v) for v in adv.w_adv))
    lines.append(f"adversary.scale={_fmt(adv.scale)}")
    if adv.x0 is not None:
        lines.append("adversary.x0=" + ",".join(_fmt(v) for v in adv.x0))
    lines.append(f"adversary.y0={_fmt(adv.y0)}")
    if adv.target is not None:
        lines.append("adversary.target=" + ",".join(_fmt(v) for v in adv.target))
    return "\n".join(lines) + "\n"


def save_truth(labeled: LabeledCollection, path: str) -> None:
    payload = {
        "w_stars": [[float(v) for v in w] for w in labeled.w_stars],
        "good_mask": [bool(g) for g in labeled.good_mask],
        "component_of": [int(c) for c in labeled.component_of],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_truth(path: str) -> dict:
    try:
        with open(path) as fh:
            payload = json.load(fh)
        w_stars = tuple(np.asarray(w, dtype=np.float64) for w in payload["w_stars"])
        good_mask = np.asarray(payload["good_mask"], dtype=bool)
        component_of = np.asarray(payload["component_of"], dtype=np.int64)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"bad truth file: {exc}") from None
    return {"w_stars": w_stars, "good_mask": good_mask, "component_of": component_of}
