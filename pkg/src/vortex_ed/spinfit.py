"""
Two-spin model H_s = f_xx (t1x t2x + t1y t2y) + f_zz t1z t2z + c fitted to the
four lowest many-body levels.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

# rows: energies of (xx-split pair: -, +), (zz doublet, zz doublet) in terms of (c, f_zz, f_xx)
_DESIGN = np.array([[1.0, -0.25, -0.5],
                    [1.0, -0.25, 0.5],
                    [1.0, 0.25, 0.0],
                    [1.0, 0.25, 0.0]])


@dataclass
class SpinFit:
    f_xx_abs: float
    f_zz: float
    c: float
    residual: float
    structure_ok: bool = True
    ground_is_symmetric: bool | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def spin_spectrum(f_xx: float, f_zz: float, c: float) -> np.ndarray:
    """Eigenvalues of the two-spin model, ascending."""
    return np.sort(np.array([c - f_zz / 4 + f_xx / 2, c - f_zz / 4 - f_xx / 2,
                             c + f_zz / 4, c + f_zz / 4]))


def fit(levels, doublet_tol: float = 1e-3) -> SpinFit:
    """Least-squares fit of (|f_xx|, f_zz, c) to four ascending levels.

    The expected structure is a split pair below a degenerate doublet. If the
    top two levels differ by more than ``doublet_tol`` the fit is still made
    and ``structure_ok`` is False.
    """
    e = np.sort(np.asarray(levels, dtype=float))
    if e.size != 4:
        raise ValueError("need exactly four levels")
    coef, *_ = np.linalg.lstsq(_DESIGN, e, rcond=None)
    c, f_zz, f_xx = coef
    model = spin_spectrum(f_xx, f_zz, c)
    residual = float(np.sqrt(np.mean((model - e) ** 2)))
    return SpinFit(abs(float(f_xx)), float(f_zz), float(c), residual,
                   structure_ok=bool(e[3] - e[2] <= doublet_tol))


def ground_is_symmetric(corr: complex) -> bool | None:
    """Whether the ground pin state is the symmetric (|10> + |01>) combination.

    Inferred from the sign of Re <a†_1 a_2>; None when the coherence vanishes.
    """
    if abs(corr) < 1e-6:
        return None
    return bool(corr.real > 0)
