"""Model specifications: TOML documents and inline strings.

A model document is a mapping with a ``model`` key naming the kind plus the
kind's parameters::

    model = "poisson-epoch"
    f = [{start = 0.0, coeffs = [0.5, 0.5]}, {start = 2.0, coeffs = [1.5]}]

    model = "threshold"
    M = 1.0

    model = "gauss-sign"
    a = 1.0

    model = "independent-product"
    x_law = "exp:rate=1"
    y_law = "gamma:shape=2,rate=1"

The inline form is ``kind`` or ``kind:key=value;key=value``. Intensity
pieces for ``poisson-epoch`` are written ``start:c0,c1,...`` and joined with
``|``, e.g. ``poisson-epoch:f=0:0.5,0.5|2:1.5``.
"""

import os
import sys

from .errors import ConfigurationError
from .marginals import parse_marginal
from .models import MODELS, GaussSign, IndependentProduct, PoissonEpoch, PoissonEpochUnit, Threshold

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

PARAMS = {
    "poisson-epoch": {"f"},
    "poisson-epoch-unit": set(),
    "threshold": {"M"},
    "gauss-sign": {"a"},
    "independent-product": {"x_law", "y_law"},
}


def load_toml(path):
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from None


def _float(key, value):
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"parameter {key!r} must be a number, got {value!r}") from None


def _pieces_from_doc(value):
    if isinstance(value, str):
        return _pieces_from_inline(value)
    if not isinstance(value, list) or not value:
        raise ConfigurationError("f must be a non-empty list of {start, coeffs} tables")
    out = []
    for item in value:
        if not isinstance(item, dict) or set(item) != {"start", "coeffs"}:
            raise ConfigurationError("each f piece needs exactly the keys 'start' and 'coeffs'")
        coeffs = item["coeffs"]
        if not isinstance(coeffs, list):
            coeffs = [coeffs]
        out.append((_float("start", item["start"]), [_float("coeffs", c) for c in coeffs]))
    return out


def _pieces_from_inline(text):
    out = []
    for chunk in text.split("|"):
        start, sep, coeffs = chunk.partition(":")
        if not sep:
            raise ConfigurationError(f"intensity piece {chunk!r} must read start:c0,c1,...")
        out.append((_float("start", start), [_float("coeffs", c) for c in coeffs.split(",")]))
    return out


def build_model(doc):
    """Construct a :class:`~renewal_ldp.models.JointLaw` from a mapping."""
    if not isinstance(doc, dict) or "model" not in doc:
        raise ConfigurationError("model document needs a 'model' key")
    kind = str(doc["model"]).strip()
    if kind not in MODELS:
        raise ConfigurationError(f"unknown model {kind!r}; choose from {sorted(MODELS)}")
    params = {k: v for k, v in doc.items() if k != "model"}
    unknown = set(params) - PARAMS[kind]
    if unknown:
        raise ConfigurationError(f"unknown parameters for {kind}: {sorted(unknown)}")
    try:
        if kind == "poisson-epoch":
            if "f" not in params:
                raise ConfigurationError("poisson-epoch needs an intensity 'f'")
            return PoissonEpoch(_pieces_from_doc(params["f"]))
        if kind == "poisson-epoch-unit":
            return PoissonEpochUnit()
        if kind == "threshold":
            return Threshold(_float("M", params.get("M", 1.0)))
        if kind == "gauss-sign":
            return GaussSign(_float("a", params.get("a", 1.0)))
        x_law = parse_marginal(params.get("x_law", "exp:rate=1"))
        y_law = parse_marginal(params.get("y_law", "exp:rate=1"))
        return IndependentProduct(x_law, y_law)
    except ConfigurationError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigurationError(f"invalid {kind} parameters: {exc}") from None


def parse_inline(text):
    """Parse ``kind:key=value;key=value`` into a model document."""
    kind, _, rest = str(text).partition(":")
    doc = {"model": kind.strip()}
    for item in filter(None, (p.strip() for p in rest.split(";"))):
        key, eq, value = item.partition("=")
        if not eq:
            raise ConfigurationError(f"malformed model parameter {item!r}")
        doc[key.strip()] = value.strip()
    return doc


def resolve_model(spec):
    """Return ``(law, document)`` from a file path, inline string or mapping."""
    if isinstance(spec, dict):
        doc = dict(spec)
    elif os.path.isfile(str(spec)):
        doc = load_toml(spec)
        if "model" in doc and isinstance(doc["model"], dict):
            doc = doc["model"]
    else:
        doc = parse_inline(spec)
    law = build_model(doc)
    return law, model_document(law)


def model_document(law):
    """Canonical document describing ``law`` (used for provenance)."""
    doc = {"model": law.kind}
    params = law.params()
    if law.kind == "poisson-epoch":
        doc["f"] = params["f"]
    else:
        doc.update(params)
    return doc
