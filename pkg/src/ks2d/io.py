"""Field serialization: ``k,j,coeff`` CSV plus a JSON sidecar with the domain."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .spectral import Domain, SpectralField


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def domain_to_dict(d: Domain) -> dict:
    out = {"L1": d.L1, "L2": d.L2, "N": d.N}
    if d.stretch is not None:
        out["stretch"] = list(d.stretch)
    return out


def domain_from_dict(data: dict) -> Domain:
    stretch = data.get("stretch")
    return Domain(float(data["L1"]), float(data["L2"]), int(data["N"]),
                  tuple(stretch) if stretch is not None else None)


def write_field(field: SpectralField, path, *, skip_zeros: bool = False,
                metadata: dict | None = None) -> Path:
    """Write every retained coefficient with 17 significant digits (exact round trip).

    ``metadata`` is merged into the sidecar next to the domain keys.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    c = field.coeffs
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "j", "coeff"])
        for k in range(c.shape[0]):
            for j in range(c.shape[1]):
                if skip_zeros and c[k, j] == 0.0:
                    continue
                w.writerow([k, j, f"{c[k, j]:.17g}"])
    side = domain_to_dict(field.domain)
    if metadata:
        side.update(metadata)
    sidecar_path(path).write_text(json.dumps(side, indent=2, default=str), encoding="utf-8")
    return path


def read_field(path, domain: Domain | None = None) -> SpectralField:
    path = Path(path)
    if domain is None:
        domain = domain_from_dict(json.loads(sidecar_path(path).read_text(encoding="utf-8")))
    c = np.zeros((domain.N + 1, domain.N + 1))
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["k", "j", "coeff"]:
            raise ValueError(f"{path}: expected header k,j,coeff, got {reader.fieldnames}")
        for row in reader:
            k, j = int(row["k"]), int(row["j"])
            if not (0 <= k <= domain.N and 0 <= j <= domain.N):
                raise ValueError(f"{path}: mode ({k}, {j}) outside truncation N = {domain.N}")
            c[k, j] = float(row["coeff"])
    return SpectralField(domain, c)
