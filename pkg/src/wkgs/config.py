"""Strict JSON run configuration: validation, resolution, hashing.

A run is described by one JSON document (no comments).  The schema ships
as config_schema.json next to this module and rejects unknown keys at
every level, naming the offender.  Defaults live in the schema itself and
are applied from it, so the published file is the single source of truth.

After resolution the document is canonicalized (defaults filled, slice
spacing expanded to explicit values) and hashed; config_sha256 is embedded
in every artifact a run writes, so results always trace back to the exact
run description.

The `norms` list is advisory — it tells downstream consumers (estimate
drivers, plotting) which families to read; the energies CSV always carries
the full frozen column set.
"""

import copy
import hashlib
import json
from dataclasses import dataclass
from importlib import resources

import jsonschema
from jsonschema import exceptions as _schema_errors

from .solver.grid import GridSpec
from .solver.manufactured import manufactured_case
from .solver.models import ModelParams, ModelSpec
from .solver.radial import InitialData, outgoing_shell, radial_bump

_FIELDS_BY_KIND = {
    "linear_wave": ("phi",),
    "klein_gordon": ("v",),
    "coupled": ("u", "v"),
}

NORM_KINDS = ("EW", "EKG", "EWa", "E1a", "E2a")


class ConfigError(ValueError):
    """The run description is unusable; the message names the offender."""


def load_schema():
    with resources.files("wkgs").joinpath("config_schema.json").open() as fh:
        return json.load(fh)


_SCHEMA = None


def _schema():
    global _SCHEMA
    if _SCHEMA is None:
        _SCHEMA = load_schema()
    return _SCHEMA


def _deref(sub, schema):
    if "$ref" in sub:
        node = schema
        for part in sub["$ref"].lstrip("#/").split("/"):
            node = node[part]
        return node
    return sub


def _fill_defaults(doc, sub, schema):
    """Write schema defaults into missing keys, depth first."""
    sub = _deref(sub, schema)
    if not isinstance(doc, dict):
        return
    props = sub.get("properties", {})
    for key, child in props.items():
        child = _deref(child, schema)
        if key not in doc and "default" in child:
            doc[key] = copy.deepcopy(child["default"])
        if key in doc:
            _fill_defaults(doc[key], child, schema)
    extra = sub.get("additionalProperties")
    if isinstance(extra, dict):
        for key in doc:
            if key not in props:
                _fill_defaults(doc[key], extra, schema)


def validate_config(doc):
    """Schema check; raises ConfigError naming the offending key/path."""
    validator = jsonschema.Draft202012Validator(_schema())
    err = _schema_errors.best_match(validator.iter_errors(doc))
    if err is not None:
        path = "$" + "".join(
            f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path
        )
        raise ConfigError(f"config invalid at {path}: {err.message}")


def canonical_json(doc):
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def config_sha256(doc):
    return hashlib.sha256(canonical_json(doc).encode()).hexdigest()


@dataclass(frozen=True)
class RunConfig:
    """Resolved run description plus its canonical dict and hash."""

    raw: dict
    sha256: str
    model: ModelSpec
    grid: GridSpec
    data: InitialData
    a_list: tuple
    norms: tuple
    k_max: int
    s_values: tuple
    out_dir: str
    energies_csv: str
    snapshot_path: object
    seed: int
    convergence_n: object  # tuple of resolutions or None
    r_cut: object = None   # asserted all-time solution support bound or None

    def with_grid(self, **changes):
        """Same run on a modified grid (convergence sweeps, depth overrides).

        The data profiles are re-traced because shell data depends on t0.
        """
        doc = copy.deepcopy(self.raw)
        doc["grid"].update(changes)
        return resolve_config(doc)


def _resolve_profile(field, prof, grid):
    kind = prof["kind"]
    amp = prof["amplitude"]
    if kind == "bump":
        if "width" not in prof:
            raise ConfigError(f"data.profiles.{field}: bump needs 'width'")
        zero = lambda r: 0.0 * r
        return radial_bump(amp, prof["width"], prof["power"]), zero, prof["width"]
    if kind == "shell":
        if "u_support" not in prof:
            raise ConfigError(f"data.profiles.{field}: shell needs 'u_support'")
        lo, hi = prof["u_support"]
        try:
            return outgoing_shell(amp, lo, hi, grid.t0, prof["power"])
        except ValueError as exc:
            raise ConfigError(f"data.profiles.{field}: {exc}") from exc
    if kind == "manufactured":
        if "case" not in prof:
            raise ConfigError(f"data.profiles.{field}: manufactured needs 'case'")
        if amp != 1.0:
            raise ConfigError(
                f"data.profiles.{field}: manufactured profiles are fixed "
                "solution traces; amplitude must stay 1"
            )
        try:
            case = manufactured_case(prof["case"])
        except ValueError as exc:
            raise ConfigError(f"data.profiles.{field}: {exc}") from exc
        t0 = grid.t0
        return (
            lambda r: case.phi(t0, r),
            lambda r: case.phi_t(t0, r),
            case.support_radius(t0),
        )
    # zero
    zero = lambda r: 0.0 * r
    return zero, zero, prof.get("width", 1.0)


def _resolve_slices(spec):
    if "values" in spec:
        if any(k in spec for k in ("lo", "hi", "count")):
            raise ConfigError("slices: give either 'values' or lo/hi/count, not both")
        vals = sorted(float(s) for s in spec["values"])
    else:
        missing = [k for k in ("lo", "hi", "count") if k not in spec]
        if missing:
            raise ConfigError(f"slices: missing {missing} (or give explicit 'values')")
        lo, hi, count = spec["lo"], spec["hi"], spec["count"]
        if not hi > lo:
            raise ConfigError(f"slices: need hi > lo, got [{lo}, {hi}]")
        if spec["spacing"] == "log":
            import numpy as np

            vals = [float(v) for v in np.geomspace(lo, hi, count)]
        else:
            step = (hi - lo) / (count - 1)
            vals = [lo + i * step for i in range(count)]
    if len(set(vals)) != len(vals):
        raise ConfigError("slices: duplicate s-values")
    return vals


def resolve_config(doc):
    """Validated document -> RunConfig (raises ConfigError on any misuse)."""
    doc = copy.deepcopy(doc)
    validate_config(doc)
    doc.setdefault("output", {})
    doc.setdefault("model", {}).setdefault("params", {})
    doc["model"].setdefault("source", None)
    _fill_defaults(doc, _schema(), _schema())

    try:
        params = ModelParams(**doc["model"]["params"])
        grid = GridSpec(**doc["grid"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    kind = doc["model"]["kind"]
    source = doc["model"]["source"]
    if source is not None:
        try:
            src_case = manufactured_case(source)
        except ValueError as exc:
            raise ConfigError(f"model.source: {exc}") from exc
    model = ModelSpec(
        kind=kind, fields=_FIELDS_BY_KIND[kind], source=source, params=params
    )

    profiles = doc["data"]["profiles"]
    want = set(model.fields)
    have = set(profiles)
    if have != want:
        raise ConfigError(
            f"data.profiles keys {sorted(have)} must equal the model's "
            f"fields {sorted(want)}"
        )
    values, velocities, supports = {}, {}, []
    for field in model.fields:
        val, vel, sup = _resolve_profile(field, profiles[field], grid)
        values[field], velocities[field] = val, vel
        supports.append(float(sup))
    support = doc["data"].get("support_radius", max(supports))
    source_radius = None
    if source is not None:
        source_radius = src_case.support_radius(grid.t0)
    data = InitialData(values, velocities, support, source_radius=source_radius)

    s_values = _resolve_slices(doc["slices"])

    # canonical resolved form: defaults filled, slice spacing expanded
    doc["data"]["support_radius"] = float(support)
    doc["slices"] = {"values": s_values}
    doc["model"]["params"] = params.to_dict()
    doc["grid"] = grid.to_dict()

    conv = doc.get("convergence")
    return RunConfig(
        raw=doc,
        sha256=config_sha256(doc),
        model=model,
        grid=grid,
        data=data,
        a_list=tuple(doc["a_list"]),
        norms=tuple(doc["norms"]),
        k_max=int(doc["k_max"]),
        s_values=tuple(s_values),
        out_dir=doc["output"]["dir"],
        energies_csv=doc["output"]["energies_csv"],
        snapshot_path=doc["output"]["snapshot"],
        seed=int(doc["seed"]),
        convergence_n=tuple(conv["n_cells"]) if conv else None,
        r_cut=doc["data"].get("r_cut"),
    )


def load_config(path):
    """Read + resolve a run description from a JSON file."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return resolve_config(doc)
