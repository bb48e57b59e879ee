"""Read and write scheme definition files.

The on-disk format is TOML.  Every rational is either an integer or a
string "p/q" with an optional sign; velocities are given in units of the
lattice speed.  See the README for the full grammar and an example.
"""

from __future__ import annotations

import sys
from typing import Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .exact import format_rational, parse_rational
from .scheme import LatticeScheme, SchemeError


def _rat(value, where: str):
    try:
        return parse_rational(value)
    except (ValueError, TypeError) as exc:
        raise SchemeError(f"{where}: {exc}") from None


def _rat_list(values, where: str):
    return [_rat(v, where) for v in values]


def _rat_table(values, where: str):
    return [_rat_list(row, where) for row in values]


def scheme_from_mapping(data: Mapping, source="<scheme>") -> LatticeScheme:
    required = ["dimension", "velocities", "moment_matrix", "conserved",
                "equilibrium_jacobian", "rates", "base_state"]
    missing = [key for key in required if key not in data]
    if missing:
        raise SchemeError(f"{source}: missing keys: {', '.join(missing)}")

    d = int(data["dimension"])
    velocities = _rat_table(data["velocities"], f"{source}: velocities")
    q = len(velocities)
    n_c = int(data["conserved"])
    offset = data.get("equilibrium_offset", ["0"] * (q - n_c))
    parameters = tuple(
        (name, _rat(value, f"{source}: parameters.{name}"))
        for name, value in data.get("parameters", {}).items()
    )
    try:
        return LatticeScheme(
            d=d,
            q=q,
            lam=_rat(data.get("lambda", 1), f"{source}: lambda"),
            velocities=velocities,
            moment_matrix=_rat_table(data["moment_matrix"], f"{source}: moment_matrix"),
            n_c=n_c,
            equilibrium_jacobian=_rat_table(data["equilibrium_jacobian"],
                                            f"{source}: equilibrium_jacobian"),
            equilibrium_offset=_rat_list(offset, f"{source}: equilibrium_offset"),
            rates=_rat_list(data["rates"], f"{source}: rates"),
            base_state=_rat_list(data["base_state"], f"{source}: base_state"),
            parameters=parameters,
            moment_names=tuple(data.get("moment_names", ())),
        )
    except SchemeError as exc:
        raise SchemeError(f"{source}: {exc}") from None


def load_scheme(path) -> LatticeScheme:
    try:
        with open(path, "rb") as handle:
            data = tomllib.load(handle)
    except tomllib.TOMLDecodeError as exc:
        raise SchemeError(f"{path}: {exc}") from None
    return scheme_from_mapping(data, source=str(path))


def _toml_rat(value) -> str:
    return f'"{format_rational(value)}"'


def _toml_row(values) -> str:
    return "[" + ", ".join(_toml_rat(v) for v in values) + "]"


def dump_scheme(scheme: LatticeScheme) -> str:
    """Render a scheme back to its TOML form (deterministic layout)."""
    lines = [
        f"dimension = {scheme.d}",
        f"lambda = {_toml_rat(scheme.lam)}",
        f"conserved = {scheme.n_c}",
        "velocities = [",
    ]
    lines += [f"    {_toml_row(v)}," for v in scheme.velocities]
    lines += ["]", "moment_matrix = ["]
    lines += [f"    {_toml_row(row)}," for row in scheme.moment_matrix]
    lines += ["]", "equilibrium_jacobian = ["]
    lines += [f"    {_toml_row(row)}," for row in scheme.equilibrium_jacobian]
    lines += [
        "]",
        f"equilibrium_offset = {_toml_row(scheme.equilibrium_offset)}",
        f"rates = {_toml_row(scheme.rates)}",
        f"base_state = {_toml_row(scheme.base_state)}",
    ]
    if scheme.moment_names:
        names = ", ".join(f'"{n}"' for n in scheme.moment_names)
        lines.append(f"moment_names = [{names}]")
    if scheme.parameters:
        lines.append("")
        lines.append("[parameters]")
        lines += [f"{name} = {_toml_rat(value)}" for name, value in scheme.parameters]
    return "\n".join(lines) + "\n"


def save_scheme(scheme: LatticeScheme, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dump_scheme(scheme))
