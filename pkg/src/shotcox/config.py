"""Flat ``key = value`` model files.

Example::

    # standard model
    nu = 1
    rho = 1
    kernel.type = exponential
    kernel.a = 1
    kernel.b = 1

Kernel keys by ``kernel.type``:

==============  ===============================================
exponential     ``kernel.a`` (amplitude), ``kernel.b`` (decay)
powerlaw        ``kernel.c`` (amplitude), ``kernel.p`` (exponent > 2)
boxcar          ``kernel.h`` (height), ``kernel.w`` (width)
tabulated       ``kernel.knots = 0:1.0, 0.5:0.4, 2:0`` (``s:g`` pairs)
zero            none
==============  ===============================================
"""
from __future__ import annotations

from pathlib import Path

from .errors import ShotCoxError
from .model import BoxCar, Exponential, ModelParams, PowerLaw, Tabulated, Zero

__all__ = ["ConfigError", "parse_model", "load_model", "format_model"]

_KERNEL_KEYS = {
    "exponential": ("a", "b"),
    "powerlaw": ("c", "p"),
    "boxcar": ("h", "w"),
    "tabulated": ("knots",),
    "zero": (),
}


class ConfigError(ShotCoxError):
    """Malformed model file (syntax, unknown or missing keys)."""


def _number(key, text):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None


def _knots(text):
    pairs = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            s, g = item.split(":")
            pairs.append((float(s), float(g)))
        except ValueError:
            raise ConfigError(f"kernel.knots: bad pair {item!r}, expected s:g") from None
    return tuple(pairs)


def parse_model(text: str) -> ModelParams:
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = value

    kind = entries.pop("kernel.type", None)
    if kind is None:
        raise ConfigError("missing key kernel.type")
    kind = kind.lower()
    if kind not in _KERNEL_KEYS:
        raise ConfigError(f"unknown kernel.type {kind!r}; expected one of {sorted(_KERNEL_KEYS)}")
    for key in ("nu", "rho"):
        if key not in entries:
            raise ConfigError(f"missing key {key}")
    nu = _number("nu", entries.pop("nu"))
    rho = _number("rho", entries.pop("rho"))

    args = []
    for name in _KERNEL_KEYS[kind]:
        key = f"kernel.{name}"
        if key not in entries:
            raise ConfigError(f"missing key {key} for kernel.type = {kind}")
        value = entries.pop(key)
        args.append(_knots(value) if name == "knots" else _number(key, value))
    if entries:
        raise ConfigError(f"unknown keys: {', '.join(sorted(entries))}")

    kernel = {
        "exponential": Exponential,
        "powerlaw": PowerLaw,
        "boxcar": BoxCar,
        "tabulated": Tabulated,
        "zero": Zero,
    }[kind](*args)
    return ModelParams(nu, rho, kernel)


def load_model(path) -> ModelParams:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read model file {path}: {exc.strerror}") from None
    return parse_model(text)


def format_model(params: ModelParams) -> str:
    """Inverse of :func:`parse_model`."""
    k = params.kernel
    lines = [f"nu = {params.nu_base!r}", f"rho = {params.rho!r}"]
    if isinstance(k, Exponential):
        lines += ["kernel.type = exponential", f"kernel.a = {k.a!r}", f"kernel.b = {k.b!r}"]
    elif isinstance(k, PowerLaw):
        lines += ["kernel.type = powerlaw", f"kernel.c = {k.c!r}", f"kernel.p = {k.p!r}"]
    elif isinstance(k, BoxCar):
        lines += ["kernel.type = boxcar", f"kernel.h = {k.h!r}", f"kernel.w = {k.w!r}"]
    elif isinstance(k, Tabulated):
        knots = ", ".join(f"{s!r}:{g!r}" for s, g in k.knots)
        lines += ["kernel.type = tabulated", f"kernel.knots = {knots}"]
    else:
        lines += ["kernel.type = zero"]
    return "\n".join(lines) + "\n"
