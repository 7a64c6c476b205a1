"""
JSON and CSV writers and readers for measures, profiles, fields and experiment tables
"""

import json
import math
import os
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import numpy as np
import pandas as pd
from loguru import logger

from pmcm.core.errors import InvalidInputError
from pmcm.models.measure import Atom, KernelPiece, PolynomialPiece, RadialDensity, RadialMeasure
from pmcm.models.profile import RadialDomain, RadialField, RadialProfile
from pmcm.models.solution import RadialSolution
from pmcm.schemas.report_schemas import GammaTable

SCHEMA_VERSION = "1.0"
FLOAT_FORMAT = "%.12e"

PathLike = Union[str, Path]


def json_safe(value: Any) -> Any:
    """Recursively replace NaN and infinities by strings so the output is strict JSON"""
    if isinstance(value, dict):
        return {str(k): json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return json_safe(value.tolist())
    if isinstance(value, (np.integer, np.bool_)):
        return value.item()
    if isinstance(value, (float, np.floating)):
        f = float(value)
        if math.isfinite(f):
            return f
        if math.isnan(f):
            return "NaN"
        return "Infinity" if f > 0 else "-Infinity"
    return value


def write_json(path: PathLike, payload: Dict[str, Any]) -> Path:
    """Atomic JSON write: temp file then os.replace; keys sorted for byte-stable output"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(json_safe(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, path)
    logger.debug(f"wrote {path}")
    return path


def write_csv(frame: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.debug(f"wrote {path} ({len(frame)} rows)")
    return path


def measure_to_dict(m: RadialMeasure) -> Dict[str, Any]:
    return {"schema_version": SCHEMA_VERSION, **m.to_dict()}


def measure_from_dict(data: Dict[str, Any]) -> RadialMeasure:
    """Inverse of measure_to_dict; accepts the same keys as a scenario's domain and measure blocks merged"""
    try:
        domain = RadialDomain(int(data["n"]), float(data["r_a"]), float(data["r_b"]), float(data["R_B"]))
    except KeyError as e:
        raise InvalidInputError(f"measure record misses field {e}", {"field": str(e)})
    atoms = tuple(Atom(float(r), float(w)) for r, w in data.get("atoms", []))
    pieces: List = []
    for piece in data.get("density", []):
        kind = piece.get("kind", "polynomial")
        if kind == "polynomial":
            pieces.append(PolynomialPiece(float(piece["r_lo"]), float(piece["r_hi"]),
                                          tuple(float(c) for c in piece["coefficients"])))
        elif kind == "kernel":
            pieces.append(KernelPiece(float(piece["r_lo"]), float(piece["r_hi"]), float(piece["center"]),
                                      float(piece["width"]), float(piece["flux_mass"]), int(piece["n"])))
        else:
            raise InvalidInputError(f"unknown density piece kind '{kind}'", {"field": "density"})
    return RadialMeasure(domain, atoms, RadialDensity(tuple(pieces)))


def profile_frame(p: RadialProfile) -> pd.DataFrame:
    """One row per node: radius, inside and outside traces and a jump flag"""
    jump = np.zeros(p.grid.size, dtype=bool)
    jump[list(p.jump_nodes)] = True
    return pd.DataFrame({"r": p.grid, "inner": p.values, "outer": p.right_values, "jump": jump})


def profile_from_frame(frame: pd.DataFrame, domain: RadialDomain) -> RadialProfile:
    missing = {"r", "inner", "outer"} - set(frame.columns)
    if missing:
        raise InvalidInputError(f"profile table misses columns {sorted(missing)}")
    return RadialProfile.from_traces(domain, frame["r"].to_numpy(), frame["inner"].to_numpy(),
                                     frame["outer"].to_numpy())


def read_profile_csv(path: PathLike, domain: RadialDomain) -> RadialProfile:
    return profile_from_frame(pd.read_csv(path), domain)


def field_frame(T: RadialField) -> pd.DataFrame:
    return pd.DataFrame({
        "r_lo": T.grid[:-1],
        "r_hi": T.grid[1:],
        "r_mid": T.midpoints,
        "T": T.values,
        "flux": T.fluxes,
    })


def solution_to_dict(sol: RadialSolution) -> Dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "measure": measure_to_dict(sol.measure),
        "phi_a": sol.phi_a,
        "phi_b": sol.phi_b,
        "gammas": list(sol.gammas),
        "pieces": [
            {"r_lo": piece.r_lo, "r_hi": piece.r_hi, "gamma": piece.gamma, "base": piece.base}
            for piece in sol.pieces
        ],
        "jumps": [{"radius": j.radius, "height": j.height, "direction": j.direction} for j in sol.jumps],
        "inner_jump": sol.inner_jump,
        "inner_attainment": sol.inner_attainment,
        "outer_attainment": sol.outer_attainment,
    }


def gamma_frame(table: GammaTable) -> pd.DataFrame:
    """Columns delta, energy, gap, l1_dist, L_hat, solver_gap"""
    return pd.DataFrame({
        "delta": [row.delta for row in table.rows],
        "energy": [row.energy for row in table.rows],
        "gap": [row.energy_gap for row in table.rows],
        "l1_dist": [row.l1_distance for row in table.rows],
        "L_hat": [row.L_hat for row in table.rows],
        "solver_gap": [row.solver_gap for row in table.rows],
    })


def family_frame(parameters: Sequence[float], energies: Sequence[float], solutions: Sequence[RadialSolution]) -> pd.DataFrame:
    """One row per family member: its parameter, energy and boundary traces"""
    return pd.DataFrame({
        "t": list(parameters),
        "energy": list(energies),
        "inner_trace": [s.pieces[0].base for s in solutions],
        "inner_jump": [s.inner_jump for s in solutions],
        "jump_heights": [";".join(f"{j.height:.12e}" for j in s.jumps) for s in solutions],
    })
